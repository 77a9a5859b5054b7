//! Honeycomb lattice potentials as finite Fourier series on the dual lattice.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{dot, rotate_dual_index, Anchor, DualIndex, LatticeGeometry, Vec2};
use crate::scalar::{cis, czero, Real, C};
use crate::spectral::{freq_bin, signed_freq, Fft2};

/// `V(y) = Σ_m V̂(m) e^{i k_m·y}` with finitely many nonzero `V̂(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential<T: Real> {
    pub geom: LatticeGeometry<T>,
    pub coeffs: BTreeMap<DualIndex, C<T>>,
    /// Nominal strength; informational for explicit coefficient lists.
    pub v0: T,
}

/// How a potential is specified in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Standard { v0: f64 },
    Explicit { coefficients: Vec<(i64, i64, f64)> },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Standard { v0: 1.0 }
    }
}

impl PotentialSpec {
    pub fn build<T: Real>(&self, geom: &LatticeGeometry<T>) -> Result<FourierPotential<T>> {
        match self {
            PotentialSpec::Standard { v0 } => Ok(standard_honeycomb_potential(geom, T::lit(*v0))),
            PotentialSpec::Explicit { coefficients } => {
                let mut coeffs = BTreeMap::new();
                for &(m1, m2, v) in coefficients {
                    if coeffs.insert((m1, m2), C::new(T::lit(v), T::zero())).is_some() {
                        return Err(invalid(
                            "potential",
                            format!("duplicate coefficient for ({m1}, {m2})"),
                        ));
                    }
                }
                let v = FourierPotential {
                    geom: *geom,
                    coeffs,
                    v0: T::zero(),
                };
                let rep = v.validate(1e-12);
                if !rep.passes() {
                    return Err(invalid(
                        "potential",
                        format!(
                            "coefficients break the honeycomb symmetries (reality {:.1e}, evenness {:.1e}, rotation {:.1e})",
                            rep.reality, rep.evenness, rep.rotation
                        ),
                    ));
                }
                Ok(v)
            }
        }
    }
}

/// `V(y) = V0 [cos(k1·y) + cos(k2·y) + cos((k1+k2)·y)]`.
///
/// `V0 = 0` is accepted and gives the free case.
pub fn standard_honeycomb_potential<T: Real>(geom: &LatticeGeometry<T>, v0: T) -> FourierPotential<T> {
    let mut coeffs = BTreeMap::new();
    if v0 != T::zero() {
        let h = C::new(v0 * T::lit(0.5), T::zero());
        for m in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)] {
            coeffs.insert(m, h);
        }
    }
    FourierPotential {
        geom: *geom,
        coeffs,
        v0,
    }
}

/// Maximum coefficient mismatch for each defining symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub reality: f64,
    pub evenness: f64,
    pub rotation: f64,
    pub tol: f64,
}

impl SymmetryReport {
    pub fn reality_ok(&self) -> bool {
        self.reality <= self.tol
    }
    pub fn evenness_ok(&self) -> bool {
        self.evenness <= self.tol
    }
    pub fn rotation_ok(&self) -> bool {
        self.rotation <= self.tol
    }
    pub fn passes(&self) -> bool {
        self.reality_ok() && self.evenness_ok() && self.rotation_ok()
    }
}

impl<T: Real> FourierPotential<T> {
    pub fn coeff(&self, m: DualIndex) -> C<T> {
        self.coeffs.get(&m).copied().unwrap_or_else(czero)
    }

    /// Largest `|m1|, |m2|` in the support.
    pub fn bandwidth(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|m| m.0.abs().max(m.1.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Direct summation at a Cartesian point.
    pub fn value_at(&self, y: Vec2<T>) -> C<T> {
        self.coeffs.iter().fold(czero(), |acc, (&m, &v)| {
            acc + v * cis(dot(self.geom.dual_vector(m), y))
        })
    }

    pub fn validate(&self, tol: f64) -> SymmetryReport {
        let mut rep = SymmetryReport {
            reality: 0.0,
            evenness: 0.0,
            rotation: 0.0,
            tol,
        };
        for (&m, &v) in &self.coeffs {
            let vm = self.coeff((-m.0, -m.1));
            rep.reality = rep.reality.max((vm - v.conj()).norm().as_f64());
            rep.evenness = rep.evenness.max((vm - v).norm().as_f64());
            let vr = self.coeff(rotate_dual_index(m, Anchor::Gamma));
            rep.rotation = rep.rotation.max((vr - v).norm().as_f64());
        }
        rep
    }

    /// Samples `V` on `n × n` nodes per primitive cell over `periods × periods` cells,
    /// in oblique coordinates `y = (θ1 v1 + θ2 v2)`, `θ_j = i_j / n`. Layout is row-major in `(i1, i2)`.
    pub fn evaluate_on_cell_grid(&self, n: usize, periods: usize) -> Result<Vec<T>> {
        if n == 0 || periods == 0 {
            return Err(invalid("grid", "nodes per period and period count must be positive"));
        }
        let side = n * periods;
        let b = self.bandwidth() as usize;
        if 2 * b >= n {
            return Err(invalid(
                "grid",
                format!("{n} nodes per period cannot resolve bandwidth {b}"),
            ));
        }
        let mut buf = vec![czero(); side * side];
        for (&m, &v) in &self.coeffs {
            let (f1, f2) = (m.0 * periods as i64, m.1 * periods as i64);
            let p = freq_bin(f1, side).unwrap() * side + freq_bin(f2, side).unwrap();
            buf[p] += v;
        }
        Fft2::new(side, side).to_physical(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// Recovers Fourier coefficients from cell-grid samples (one period, `n × n`).
    pub fn coefficients_from_samples(samples: &[T], n: usize) -> BTreeMap<DualIndex, C<T>> {
        let mut buf: Vec<C<T>> = samples.iter().map(|&x| C::new(x, T::zero())).collect();
        Fft2::new(n, n).to_spectral(&mut buf);
        let mut out = BTreeMap::new();
        for (p, z) in buf.into_iter().enumerate() {
            let m = (signed_freq(p / n, n), signed_freq(p % n, n));
            out.insert(m, z);
        }
        out
    }
}

/// Counts strict discrete local minima (8-neighbour, periodic) of cell-grid samples.
pub fn count_local_minima<T: Real>(samples: &[T], side: usize) -> usize {
    let at = |i: isize, j: isize| {
        let s = side as isize;
        samples[(i.rem_euclid(s) as usize) * side + j.rem_euclid(s) as usize]
    };
    let mut count = 0;
    for i in 0..side as isize {
        for j in 0..side as isize {
            let c = at(i, j);
            let mut is_min = true;
            for di in -1..=1 {
                for dj in -1..=1 {
                    if (di, dj) != (0, 0) && at(i + di, j + dj) <= c {
                        is_min = false;
                    }
                }
            }
            count += usize::from(is_min);
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    fn geom() -> LatticeGeometry<f64> {
        build_lattice(1.0).unwrap()
    }

    #[test]
    fn standard_coefficients() {
        let v = standard_honeycomb_potential(&geom(), 1.0);
        assert_eq!(v.coeffs.len(), 6);
        for (_, c) in &v.coeffs {
            assert_eq!(*c, C::new(0.5, 0.0));
        }
        assert!((v.value_at([0.0, 0.0]).re - 3.0).abs() < 1e-14);
        assert!(v.validate(1e-14).passes());
    }

    #[test]
    fn direct_sum_matches_cosines() {
        let g = geom();
        let v = standard_honeycomb_potential(&g, 1.7);
        let y = [0.31, -0.77];
        let s = g.k1[0] + g.k2[0];
        let t = g.k1[1] + g.k2[1];
        let want = 1.7 * (dot(g.k1, y).cos() + dot(g.k2, y).cos() + (s * y[0] + t * y[1]).cos());
        let got = v.value_at(y);
        assert!((got.re - want).abs() < 1e-13 && got.im.abs() < 1e-13);
        let back = v.value_at([-y[0], -y[1]]);
        assert!((back - got).norm() < 1e-13);
    }

    #[test]
    fn rotated_support_is_closed() {
        let v = standard_honeycomb_potential(&geom(), 1.0);
        let rotated: Vec<_> = v
            .coeffs
            .keys()
            .map(|&m| rotate_dual_index(m, Anchor::Gamma))
            .collect();
        for m in rotated {
            assert!(v.coeffs.contains_key(&m));
        }
    }

    #[test]
    fn asymmetric_injection_detected() {
        let mut v = standard_honeycomb_potential(&geom(), 1.0);
        v.coeffs.insert((2, 0), C::new(0.03, 0.0));
        v.coeffs.insert((-2, 0), C::new(0.03, 0.0));
        let r = v.validate(1e-12);
        assert!(r.reality_ok() && r.evenness_ok());
        assert!(!r.rotation_ok());
        assert!((r.rotation - 0.03).abs() < 1e-15);
    }

    #[test]
    fn empty_potential_passes() {
        let v = standard_honeycomb_potential(&geom(), 0.0);
        assert!(v.coeffs.is_empty());
        assert!(v.validate(0.0).passes());
        let s = v.evaluate_on_cell_grid(8, 1).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn grid_values_match_direct_sum_and_roundtrip() {
        let g = geom();
        let v = standard_honeycomb_potential(&g, 1.0);
        let n = 16;
        let s = v.evaluate_on_cell_grid(n, 1).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-13);
        for (i1, i2) in [(3usize, 5usize), (11, 2), (7, 7)] {
            let y = [
                (i1 as f64 * g.v1[0] + i2 as f64 * g.v2[0]) / n as f64,
                (i1 as f64 * g.v1[1] + i2 as f64 * g.v2[1]) / n as f64,
            ];
            assert!((s[i1 * n + i2] - v.value_at(y).re).abs() < 1e-12);
        }
        let back = FourierPotential::coefficients_from_samples(&s, n);
        for (m, c) in back {
            assert!((c - v.coeff(m)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_minima_per_cell() {
        let v = standard_honeycomb_potential(&geom(), 1.0);
        // multiples of 3 put the honeycomb sites (θ = 1/3, 2/3) on grid nodes
        let s = v.evaluate_on_cell_grid(48, 1).unwrap();
        assert_eq!(count_local_minima(&s, 48), 2);
    }

    #[test]
    fn spec_parsing() {
        let g = geom();
        let s: PotentialSpec = serde_json::from_str(r#"{"v0": 2.0}"#).unwrap();
        assert_eq!(s.build(&g).unwrap().coeffs.len(), 6);
        let e: PotentialSpec = serde_json::from_str(
            r#"{"coefficients": [[1,0,0.5],[0,1,0.5],[-1,-1,0.5],[-1,0,0.5],[0,-1,0.5],[1,1,0.5]]}"#,
        )
        .unwrap();
        assert_eq!(e.build(&g).unwrap().coeffs.len(), 6);
        let lopsided: PotentialSpec =
            serde_json::from_str(r#"{"coefficients": [[1,0,0.5],[-1,0,0.5]]}"#).unwrap();
        assert!(lopsided.build(&g).is_err());
    }
}
