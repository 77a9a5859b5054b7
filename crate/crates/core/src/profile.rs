//! Cell profiles `f(y) = Σ_m c(m) e^{i(sK + k_m)·y}` with integer vertex charge `s`.
//!
//! Products are formed on an oblique cell grid `y = θ1 v1 + θ2 v2`, on which
//! `e^{i k_m·y} = e^{2πi(m1 θ1 + m2 θ2)}`, so that pointwise multiplication of periodic parts
//! and charge addition reproduce products of the full profiles.

use crate::error::{invalid, Result};
use crate::lattice::{dot, Anchor, DualIndex, LatticeGeometry, PlaneWaveBasis, Vec2};
use crate::scalar::{cis, czero, Real, C};
use crate::spectral::{freq_bin, signed_freq, Fft2};

#[derive(Debug, Clone, PartialEq)]
pub struct BlochProfile<T: Real> {
    /// Multiple of the vertex `K` carried by the profile.
    pub charge: i64,
    pub basis: PlaneWaveBasis,
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> BlochProfile<T> {
    pub fn zeros(charge: i64, cutoff: usize) -> Result<Self> {
        let basis = PlaneWaveBasis::new(cutoff)?;
        let n = basis.len();
        Ok(Self {
            charge,
            basis,
            coeffs: vec![czero(); n],
        })
    }

    pub fn from_coeffs(charge: i64, basis: PlaneWaveBasis, coeffs: Vec<C<T>>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(invalid("coeffs", "coefficient count does not match the basis"));
        }
        Ok(Self {
            charge,
            basis,
            coeffs,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.basis.cutoff()
    }

    pub fn coeff(&self, m: DualIndex) -> C<T> {
        self.basis
            .position(m)
            .map(|p| self.coeffs[p])
            .unwrap_or_else(czero)
    }

    /// Same profile represented with a different cutoff (zero padded or truncated).
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let mut out = Self::zeros(self.charge, cutoff)?;
        for (p, &m) in out.basis.indices().to_vec().iter().enumerate() {
            out.coeffs[p] = self.coeff(m);
        }
        Ok(out)
    }

    /// `conj(f)`: charge negated, `c'(m) = conj(c(-m))`.
    pub fn conj(&self) -> Self {
        let coeffs = self
            .basis
            .indices()
            .iter()
            .map(|&m| self.coeff((-m.0, -m.1)).conj())
            .collect();
        Self {
            charge: -self.charge,
            basis: self.basis.clone(),
            coeffs,
        }
    }

    /// Wave vector `sK + k_m` of each basis element.
    pub fn wavevectors(&self, geom: &LatticeGeometry<T>) -> Vec<Vec2<T>> {
        let k = geom.anchor_point(Anchor::K);
        let s = T::from_i64_exact(self.charge);
        self.basis
            .indices()
            .iter()
            .map(|&m| {
                let km = geom.dual_vector(m);
                [s * k[0] + km[0], s * k[1] + km[1]]
            })
            .collect()
    }

    /// `∂_{y_d} f`.
    pub fn derivative(&self, geom: &LatticeGeometry<T>, d: usize) -> Self {
        let w = self.wavevectors(geom);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&w)
            .map(|(c, k)| c * C::new(T::zero(), k[d]))
            .collect();
        Self {
            charge: self.charge,
            basis: self.basis.clone(),
            coeffs,
        }
    }

    /// Cell-averaged inner product `⟨self, other⟩`; zero when charges differ modulo the lattice.
    pub fn inner(&self, other: &Self) -> C<T> {
        if self.charge != other.charge {
            return czero();
        }
        let small = if self.cutoff() <= other.cutoff() { self } else { other };
        small
            .basis
            .indices()
            .iter()
            .fold(czero(), |s, &m| s + self.coeff(m).conj() * other.coeff(m))
    }

    pub fn norm(&self) -> T {
        self.inner(self).re.sqrt()
    }

    pub fn scaled(&self, a: C<T>) -> Self {
        Self {
            charge: self.charge,
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|z| z * a).collect(),
        }
    }

    /// `self += a · other` (same charge; other truncated to this cutoff).
    pub fn axpy(&mut self, a: C<T>, other: &Self) {
        assert_eq!(self.charge, other.charge, "charge mismatch");
        for (p, &m) in self.basis.indices().iter().enumerate() {
            self.coeffs[p] += other.coeff(m) * a;
        }
    }

    /// Maximum coefficient difference against another profile of the same charge.
    pub fn max_diff(&self, other: &Self) -> T {
        let big = if self.cutoff() >= other.cutoff() { self } else { other };
        big.basis
            .indices()
            .iter()
            .fold(T::zero(), |d, &m| d.max((self.coeff(m) - other.coeff(m)).norm()))
    }

    /// Pointwise value at Cartesian `y`.
    pub fn value_at(&self, geom: &LatticeGeometry<T>, y: Vec2<T>) -> C<T> {
        self.wavevectors(geom)
            .iter()
            .zip(&self.coeffs)
            .fold(czero(), |acc, (k, c)| acc + c * cis(dot(*k, y)))
    }

    /// Periodic part on an `n × n` oblique cell grid.
    pub fn to_cell_grid(&self, fft: &Fft2<T>) -> Vec<C<T>> {
        let (n, _) = fft.shape();
        let mut buf = vec![czero(); n * n];
        for (p, &m) in self.basis.indices().iter().enumerate() {
            if let (Some(a), Some(b)) = (freq_bin(m.0, n), freq_bin(m.1, n)) {
                buf[a * n + b] += self.coeffs[p];
            }
        }
        fft.to_physical(&mut buf);
        buf
    }

    /// Inverse of [`to_cell_grid`](Self::to_cell_grid), truncated to `cutoff`.
    pub fn from_cell_grid(values: &[C<T>], fft: &Fft2<T>, charge: i64, cutoff: usize) -> Result<Self> {
        let (n, _) = fft.shape();
        let mut buf = values.to_vec();
        fft.to_spectral(&mut buf);
        let mut out = Self::zeros(charge, cutoff)?;
        for p in 0..n * n {
            let m = (signed_freq(p / n, n), signed_freq(p % n, n));
            if let Some(q) = out.basis.position(m) {
                out.coeffs[q] = buf[p];
            }
        }
        Ok(out)
    }
}

/// Cell-grid helper that forms dealiased products of profiles.
pub struct CellProducts<T: Real> {
    pub n: usize,
    fft: Fft2<T>,
}

impl<T: Real> CellProducts<T> {
    /// Grid with `n` nodes per cell direction. Products of factors with total bandwidth `B`
    /// are exact up to cutoff `C` whenever `n > B + C`.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            fft: Fft2::new(n, n),
        }
    }

    /// Smallest even grid exact for `bandwidth` and `cutoff`.
    pub fn for_bandwidth(bandwidth: usize, cutoff: usize) -> Self {
        let n = (bandwidth + cutoff + 2).next_multiple_of(2);
        Self::new(n)
    }

    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    pub fn grid(&self, f: &BlochProfile<T>) -> Vec<C<T>> {
        f.to_cell_grid(&self.fft)
    }

    /// Product of profiles, truncated to `cutoff`.
    pub fn product(&self, factors: &[&BlochProfile<T>], cutoff: usize) -> Result<BlochProfile<T>> {
        let mut acc = vec![C::new(T::one(), T::zero()); self.n * self.n];
        let mut charge = 0;
        for f in factors {
            charge += f.charge;
            for (a, b) in acc.iter_mut().zip(self.grid(f)) {
                *a *= b;
            }
        }
        BlochProfile::from_cell_grid(&acc, &self.fft, charge, cutoff)
    }

    /// Cell average of a product whose charges sum to zero.
    pub fn mean(&self, factors: &[&BlochProfile<T>]) -> C<T> {
        let charge: i64 = factors.iter().map(|f| f.charge).sum();
        if charge != 0 {
            return czero();
        }
        let mut acc = vec![C::new(T::one(), T::zero()); self.n * self.n];
        for f in factors {
            for (a, b) in acc.iter_mut().zip(self.grid(f)) {
                *a *= b;
            }
        }
        let s: C<T> = acc.iter().fold(czero(), |x, y| x + y);
        s / T::from_usize_exact(self.n * self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    fn sample(charge: i64) -> BlochProfile<f64> {
        let mut p = BlochProfile::zeros(charge, 2).unwrap();
        for (i, c) in p.coeffs.iter_mut().enumerate() {
            *c = C::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos() * 0.5);
        }
        p
    }

    #[test]
    fn product_matches_pointwise() {
        let g = build_lattice(1.0f64).unwrap();
        let (a, b) = (sample(1), sample(-1).conj());
        let cp = CellProducts::for_bandwidth(4, 4);
        let ab = cp.product(&[&a, &b], 4).unwrap();
        assert_eq!(ab.charge, 2);
        for y in [[0.1, 0.2], [-0.7, 0.33]] {
            let want = a.value_at(&g, y) * b.value_at(&g, y);
            assert!((ab.value_at(&g, y) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn conj_is_pointwise_conjugate() {
        let g = build_lattice(1.0f64).unwrap();
        let a = sample(1);
        let y = [0.4, -0.25];
        assert!((a.conj().value_at(&g, y) - a.value_at(&g, y).conj()).norm() < 1e-12);
    }

    #[test]
    fn mean_equals_inner_product() {
        let (a, b) = (sample(1), sample(1).scaled(C::new(0.3, 0.7)));
        let cp = CellProducts::<f64>::for_bandwidth(4, 0);
        let m = cp.mean(&[&a.conj(), &b]);
        assert!((m - a.inner(&b)).norm() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let g = build_lattice(1.0f64).unwrap();
        let a = sample(1);
        let h = 1e-6;
        let y = [0.2, 0.1];
        let d = a.derivative(&g, 1).value_at(&g, y);
        let fd = (a.value_at(&g, [y[0], y[1] + h]) - a.value_at(&g, [y[0], y[1] - h])) / (2.0 * h);
        assert!((d - fd).norm() < 1e-6 * (1.0 + d.norm()));
    }
}
