//! Periodic rectangular grids and 2D FFTs.
//!
//! Fields are stored row-major: node `(i1, i2)` lives at `i1 * n2 + i2`.
//! Spectral coefficients follow `f̂ = FFT(f) / N`, so `f(x) = Σ f̂(ξ) e^{iξ·x}` and
//! `‖f‖²_{L²} = L1 L2 Σ |f̂|²`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::scalar::{czero, Real, C};

/// Signed frequency index of FFT bin `i` on `n` points, in `[-n/2, n/2)`.
#[inline]
pub fn signed_freq(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT bin of a signed frequency, or `None` when outside the representable band.
#[inline]
pub fn freq_bin(k: i64, n: usize) -> Option<usize> {
    let lo = -((n / 2) as i64);
    let hi = (n.div_ceil(2) as i64) - 1;
    if k < lo || k > hi {
        None
    } else if k >= 0 {
        Some(k as usize)
    } else {
        Some((k + n as i64) as usize)
    }
}

/// Periodic rectangular box `[0, L1) × [0, L2)` with `n1 × n2` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2<T: Real> {
    pub l1: T,
    pub l2: T,
    pub n1: usize,
    pub n2: usize,
}

impl<T: Real> Grid2<T> {
    pub fn new(l1: T, l2: T, n1: usize, n2: usize) -> Result<Self> {
        if !(l1 > T::zero() && l2 > T::zero()) {
            return Err(invalid("box", "box lengths must be positive"));
        }
        if n1 < 2 || n2 < 2 {
            return Err(invalid("grid", "need at least 2 nodes per direction"));
        }
        Ok(Self { l1, l2, n1, n2 })
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn area(&self) -> T {
        self.l1 * self.l2
    }

    pub fn cell_volume(&self) -> T {
        self.area() / T::from_usize_exact(self.len())
    }

    pub fn x1(&self, i1: usize) -> T {
        self.l1 * T::from_usize_exact(i1) / T::from_usize_exact(self.n1)
    }

    pub fn x2(&self, i2: usize) -> T {
        self.l2 * T::from_usize_exact(i2) / T::from_usize_exact(self.n2)
    }

    pub fn xi1(&self, i1: usize) -> T {
        T::lit(2.0) * T::PI() * T::from_i64_exact(signed_freq(i1, self.n1)) / self.l1
    }

    pub fn xi2(&self, i2: usize) -> T {
        T::lit(2.0) * T::PI() * T::from_i64_exact(signed_freq(i2, self.n2)) / self.l2
    }

    /// Wave numbers along each axis.
    pub fn wavenumbers(&self) -> (Vec<T>, Vec<T>) {
        (
            (0..self.n1).map(|i| self.xi1(i)).collect(),
            (0..self.n2).map(|i| self.xi2(i)).collect(),
        )
    }

    /// Discrete `L²` norm squared of nodal values (trapezoid rule, spectrally exact for band-limited fields).
    pub fn l2_norm_sqr(&self, f: &[C<T>]) -> T {
        f.iter().map(|z| z.norm_sqr()).sum::<T>() * self.cell_volume()
    }
}

/// Planned forward/inverse 2D transforms for a fixed shape.
pub struct Fft2<T: Real> {
    n1: usize,
    n2: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.n1, self.n2)
    }
}

const COL_BLOCK: usize = 16;

impl<T: Real> Fft2<T> {
    pub fn new(n1: usize, n2: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            n1,
            n2,
            row_fwd: p.plan_fft_forward(n2),
            row_inv: p.plan_fft_inverse(n2),
            col_fwd: p.plan_fft_forward(n1),
            col_inv: p.plan_fft_inverse(n1),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    fn run(&self, data: &mut [C<T>], row: &Arc<dyn Fft<T>>, col: &Arc<dyn Fft<T>>) {
        let (n1, n2) = (self.n1, self.n2);
        assert_eq!(data.len(), n1 * n2, "field shape does not match the FFT plan");
        row.process(data);
        let mut buf = vec![czero(); n1 * COL_BLOCK];
        let mut j0 = 0;
        while j0 < n2 {
            let w = COL_BLOCK.min(n2 - j0);
            for i in 0..n1 {
                let src = &data[i * n2 + j0..i * n2 + j0 + w];
                for (b, v) in src.iter().enumerate() {
                    buf[b * n1 + i] = *v;
                }
            }
            col.process(&mut buf[..w * n1]);
            for i in 0..n1 {
                let dst = &mut data[i * n2 + j0..i * n2 + j0 + w];
                for (b, v) in dst.iter_mut().enumerate() {
                    *v = buf[b * n1 + i];
                }
            }
            j0 += w;
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [C<T>]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse(&self, data: &mut [C<T>]) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    /// Nodal values to normalized coefficients `f̂ = FFT(f)/N`.
    pub fn to_spectral(&self, data: &mut [C<T>]) {
        self.forward(data);
        let s = T::one() / T::from_usize_exact(self.n1 * self.n2);
        data.iter_mut().for_each(|z| *z = *z * s);
    }

    /// Normalized coefficients to nodal values.
    pub fn to_physical(&self, data: &mut [C<T>]) {
        self.inverse(data);
    }
}
