//! ε-commensurate rectangular grids and two-scale field synthesis.
//!
//! The rectangular supercell of the honeycomb lattice has edges `a√3` (along `v1 + v2`) and
//! `a` (along `v1 - v2`). A box of `cx × cy` supercells scaled by `ε` puts every `k_m/ε` and the
//! vertex `K/ε` on the discrete frequency lattice provided `3 | cy`: in frequency-index units
//! `k1/ε ↦ (cx, cy)`, `k2/ε ↦ (cx, -cy)` and `K/ε ↦ (0, 2cy/3)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{DualIndex, LatticeGeometry};
use crate::profile::BlochProfile;
use crate::scalar::{Real, C};
use crate::spectral::{freq_bin, signed_freq, Grid2};

/// Supercell counts and resolution of an ε-grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub cx: usize,
    pub cy: usize,
    /// Nodes per supercell edge (both directions).
    pub ppc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommensurateGrid<T: Real> {
    pub eps: T,
    pub cells: CellCounts,
    pub grid: Grid2<T>,
    pub geom: LatticeGeometry<T>,
}

/// Builds the ε-grid for `cells` supercells; requires `3 | cy` and even `ppc ≥ 2`.
pub fn build_commensurate_grid<T: Real>(
    geom: &LatticeGeometry<T>,
    eps: T,
    cells: CellCounts,
) -> Result<CommensurateGrid<T>> {
    if !(eps > T::zero() && eps <= T::one()) {
        return Err(invalid("epsilon", format!("must lie in (0, 1], got {eps}")));
    }
    if cells.cx == 0 || cells.cy == 0 {
        return Err(invalid("cells", "cell counts must be positive"));
    }
    if cells.cy % 3 != 0 {
        return Err(Error::NonCommensurate(format!(
            "cellsY = {} is not a multiple of 3, so K/ε is off the frequency lattice",
            cells.cy
        )));
    }
    if cells.ppc < 2 || cells.ppc % 2 != 0 {
        return Err(invalid("ppc", "points per cell must be even and at least 2"));
    }
    let s3 = T::lit(3.0).sqrt();
    let l1 = T::from_usize_exact(cells.cx) * eps * s3 * geom.a;
    let l2 = T::from_usize_exact(cells.cy) * eps * geom.a;
    let grid = Grid2::new(l1, l2, cells.cx * cells.ppc, cells.cy * cells.ppc)?;
    Ok(CommensurateGrid {
        eps,
        cells,
        grid,
        geom: *geom,
    })
}

impl<T: Real> CommensurateGrid<T> {
    /// Frequency index of `(sK + k_m)/ε`.
    pub fn dual_frequency(&self, m: DualIndex, charge: i64) -> (i64, i64) {
        let (cx, cy) = (self.cells.cx as i64, self.cells.cy as i64);
        (cx * (m.0 + m.1), cy * (m.0 - m.1) + charge * 2 * cy / 3)
    }

    /// Frequency index of `K/ε`.
    pub fn vertex_frequency(&self) -> (i64, i64) {
        self.dual_frequency((0, 0), 1)
    }

    /// Same box at a different ε (cells rescaled so the physical box is unchanged).
    pub fn rescaled(&self, eps: T) -> Result<Self> {
        let f = (self.eps / eps).as_f64();
        let r = |c: usize| -> Result<usize> {
            let x = c as f64 * f;
            if (x - x.round()).abs() > 1e-9 {
                return Err(Error::NonCommensurate(format!("cell count {c} × {f} is not an integer")));
            }
            Ok(x.round() as usize)
        };
        let cells = CellCounts {
            cx: r(self.cells.cx)?,
            cy: r(self.cells.cy)?,
            ppc: self.cells.ppc,
        };
        build_commensurate_grid(&self.geom, eps, cells)
    }
}

/// Bin of frequency `k` on an `n`-point axis, excluding the unpaired Nyquist bin so that the
/// represented band is symmetric under `k ↦ -k`.
fn symmetric_bin(k: i64, n: usize) -> Option<usize> {
    if 2 * k.unsigned_abs() as usize >= n + (n % 2) {
        return None;
    }
    freq_bin(k, n)
}

/// Adds `coef · ĉ(j)` at fine frequency `offset + j` for every coarse bin `j` of `coarse`.
/// Both grids must describe the same box. Frequencies outside the symmetric fine band, and the
/// coarse Nyquist bins, are dropped, so real fields stay real. Returns the discarded spectral
/// mass `Σ |coef ĉ|²`.
pub fn place_shifted<T: Real>(
    fine: &mut [C<T>],
    fine_shape: (usize, usize),
    coarse: &[C<T>],
    coarse_shape: (usize, usize),
    offset: (i64, i64),
    coef: C<T>,
) -> T {
    let (n1, n2) = fine_shape;
    let (c1, c2) = coarse_shape;
    let mut dropped = T::zero();
    for j1 in 0..c1 {
        let s1 = signed_freq(j1, c1);
        let row = &coarse[j1 * c2..(j1 + 1) * c2];
        let f1 = symmetric_bin(s1, c1).and_then(|_| symmetric_bin(offset.0 + s1, n1));
        match f1 {
            None => dropped += row.iter().map(|z| (z * coef).norm_sqr()).sum::<T>(),
            Some(b1) => {
                let base = b1 * n2;
                for (j2, z) in row.iter().enumerate() {
                    let s2 = signed_freq(j2, c2);
                    match symmetric_bin(s2, c2).and_then(|_| symmetric_bin(offset.1 + s2, n2)) {
                        Some(b2) => fine[base + b2] += z * coef,
                        None => dropped += (z * coef).norm_sqr(),
                    }
                }
            }
        }
    }
    dropped
}

/// Adds `envelope(x) · profile(x/ε)` to a fine spectrum, given the envelope's coarse spectrum.
/// Coefficients below `threshold` in modulus are skipped.
pub fn place_two_scale<T: Real>(
    fine: &mut [C<T>],
    grid: &CommensurateGrid<T>,
    envelope_spec: &[C<T>],
    coarse_shape: (usize, usize),
    profile: &BlochProfile<T>,
    threshold: T,
) -> T {
    let shape = (grid.grid.n1, grid.grid.n2);
    let mut dropped = T::zero();
    for (p, &m) in profile.basis.indices().iter().enumerate() {
        let c = profile.coeffs[p];
        if c.norm() <= threshold {
            continue;
        }
        let off = grid.dual_frequency(m, profile.charge);
        dropped += place_shifted(fine, shape, envelope_spec, coarse_shape, off, c);
    }
    dropped
}

/// Whether frequency `(k1, k2)` is representable on the fine grid.
pub fn in_band<T: Real>(grid: &CommensurateGrid<T>, f: (i64, i64)) -> bool {
    symmetric_bin(f.0, grid.grid.n1).is_some() && symmetric_bin(f.1, grid.grid.n2).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    #[test]
    fn grid_arithmetic() {
        let g = build_lattice(1.0f64).unwrap();
        let c = build_commensurate_grid(&g, 1.0 / 6.0, CellCounts { cx: 36, cy: 36, ppc: 8 }).unwrap();
        assert_eq!(c.grid.n1, 288);
        assert_eq!(c.vertex_frequency(), (0, 24));
        let h = c.rescaled(1.0 / 12.0).unwrap();
        assert!((h.grid.l1 - c.grid.l1).abs() < 1e-12 && (h.grid.l2 - c.grid.l2).abs() < 1e-12);
        assert!(build_commensurate_grid(&g, 0.5, CellCounts { cx: 3, cy: 4, ppc: 8 }).is_err());
    }

    #[test]
    fn dual_frequencies_match_wavevectors() {
        let g = build_lattice(1.0f64).unwrap();
        let eps = 0.25;
        let c = build_commensurate_grid(&g, eps, CellCounts { cx: 2, cy: 3, ppc: 8 }).unwrap();
        for (m, s) in [((1, 0), 0), ((0, 1), 1), ((2, -1), -1)] {
            let f = c.dual_frequency(m, s);
            let k = g.dual_vector(m);
            let kk = g.k_vertex;
            let want = [(k[0] + s as f64 * kk[0]) / eps, (k[1] + s as f64 * kk[1]) / eps];
            let got = [
                2.0 * std::f64::consts::PI * f.0 as f64 / c.grid.l1,
                2.0 * std::f64::consts::PI * f.1 as f64 / c.grid.l2,
            ];
            assert!((want[0] - got[0]).abs() < 1e-10 && (want[1] - got[1]).abs() < 1e-10);
        }
    }
}
