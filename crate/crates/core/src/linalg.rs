//! Dense Hermitian eigendecomposition and preconditioned MINRES.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cdot, czero, Real, C};

/// Eigenvalues in ascending order with optional unit eigenvectors (column `j` stored contiguously).
#[derive(Debug, Clone)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    pub vectors: Option<Vec<Vec<C<T>>>>,
}

const MAX_SWEEPS: usize = 10_000;

macro_rules! nalgebra_eigh {
    ($t:ty) => {
        fn eigh_impl(n: usize, h: &[Complex<$t>], vectors: bool) -> Result<Eigh<$t>> {
            let m = DMatrix::from_row_slice(n, n, h);
            let scale = h.iter().fold(0.0 as $t, |a, z| a.max(z.norm())) as f64;
            let fail = || Error::EigenNonConvergence {
                iterations: MAX_SWEEPS,
                size: n,
                scale,
            };
            if !vectors {
                let mut values: Vec<$t> = m.symmetric_eigenvalues().iter().copied().collect();
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(fail());
                }
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                return Ok(Eigh { values, vectors: None });
            }
            let eig = SymmetricEigen::try_new(m, <$t>::EPSILON, MAX_SWEEPS).ok_or_else(fail)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
            let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
            let vecs = order
                .iter()
                .map(|&j| eig.eigenvectors.column(j).iter().copied().collect())
                .collect();
            Ok(Eigh {
                values,
                vectors: Some(vecs),
            })
        }
    };
}

/// Scalars with a dense Hermitian eigensolver backend.
pub trait HermitianEigen: Real {
    fn eigh_dense(n: usize, h: &[C<Self>], vectors: bool) -> Result<Eigh<Self>>;
}

impl HermitianEigen for f64 {
    fn eigh_dense(n: usize, h: &[C<f64>], vectors: bool) -> Result<Eigh<f64>> {
        nalgebra_eigh!(f64);
        eigh_impl(n, h, vectors)
    }
}

impl HermitianEigen for f32 {
    fn eigh_dense(n: usize, h: &[C<f32>], vectors: bool) -> Result<Eigh<f32>> {
        nalgebra_eigh!(f32);
        eigh_impl(n, h, vectors)
    }
}

/// Eigen-decomposition of a row-major Hermitian `n × n` matrix.
pub fn eigh<T: HermitianEigen>(n: usize, h: &[C<T>], vectors: bool) -> Result<Eigh<T>> {
    assert_eq!(h.len(), n * n);
    T::eigh_dense(n, h, vectors)
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Preconditioned residual estimate relative to the right-hand side.
    pub relative_residual: f64,
}

/// Preconditioned MINRES for a Hermitian operator `a` and a Hermitian positive definite
/// preconditioner `precond` (applies `M⁻¹`). Solves `A x = b` starting from zero.
pub fn minres<T, A, P>(
    mut a: A,
    mut precond: P,
    b: &[C<T>],
    tol: T,
    max_iter: usize,
) -> Result<(Vec<C<T>>, SolveStats)>
where
    T: Real,
    A: FnMut(&[C<T>], &mut [C<T>]),
    P: FnMut(&[C<T>], &mut [C<T>]),
{
    let n = b.len();
    let mut x = vec![czero(); n];
    let mut r1 = b.to_vec();
    let mut y = vec![czero(); n];
    precond(&r1, &mut y);
    let beta1 = cdot(&r1, &y).re;
    if beta1 < T::zero() {
        return Err(Error::InvalidParameter {
            name: "preconditioner",
            reason: "preconditioner is not positive definite".into(),
        });
    }
    let beta1 = beta1.sqrt();
    if beta1 == T::zero() {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r2 = r1.clone();
    let mut v = vec![czero(); n];
    let mut w = vec![czero(); n];
    let mut w1 = vec![czero(); n];
    let mut w2 = vec![czero(); n];
    let (mut oldb, mut beta) = (T::zero(), beta1);
    let (mut dbar, mut epsln, mut phibar) = (T::zero(), T::zero(), beta1);
    let (mut cs, mut sn) = (-T::one(), T::zero());
    let tiny = T::epsilon();
    for itn in 1..=max_iter {
        let s = T::one() / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = *yi * s;
        }
        a(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= *ri * f;
            }
        }
        let alfa = cdot(&v, &y).re;
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= *ri * f;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond(&r2, &mut y);
        oldb = beta;
        let bb = cdot(&r2, &y).re;
        if bb < T::zero() {
            return Err(Error::InvalidParameter {
                name: "preconditioner",
                reason: "preconditioner is not positive definite".into(),
            });
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(tiny);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar = sn * phibar;
        let denom = T::one() / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - w1[i] * oldeps - w2[i] * delta) * denom;
            x[i] += w[i] * phi;
        }
        let rel = phibar / beta1;
        if rel <= tol || beta <= tiny * beta1 {
            return Ok((
                x,
                SolveStats {
                    iterations: itn,
                    relative_residual: rel.as_f64(),
                },
            ));
        }
    }
    Err(Error::SolverStalled {
        residual: (phibar / beta1).as_f64(),
        iterations: max_iter,
    })
}
