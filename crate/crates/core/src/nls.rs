//! Solvers for the semiclassical NLS `i ∂t ψ = -ε Δψ + ε⁻¹ V(x/ε) ψ + κ |ψ|² ψ`.
//!
//! [`TwoScaleNls`] evolves the lift `U(x, y)` with `ψ(x) = U(x, x/ε)`, which satisfies
//! `i ∂t U = -ε (∇x + ε⁻¹ ∇y)² U + ε⁻¹ V(y) U + κ |U|² U`; every solution of the lifted
//! problem restricts to a solution of the NLS. The linear part is block diagonal over envelope
//! frequencies `δ` (fibres), each block being the Bloch Hamiltonian at `sK + εδ` truncated to
//! the cell box, and is propagated exactly through a per-fibre eigendecomposition. The cubic
//! term is a pointwise phase on the (envelope node, cell node) grid. Both substeps are unitary,
//! and the stiff `ε⁻¹` dynamics never enter the splitting error through the potential.
//!
//! [`FineGridNls`] is the direct scheme on an ε-commensurate grid: a kinetic Fourier
//! multiplier alternating with the exact phase `exp(-i dt (V(x/ε)/ε + κ|ψ|²))`.

use serde::Serialize;

use crate::bloch::{assemble_bloch_hamiltonian, Quasimomentum};
use crate::corrector::WkbField;
use crate::dirac2d::{is_output_step, step_count, BLOWUP_FACTOR};
use crate::error::{invalid, Error, Result};
use crate::lattice::{Anchor, PlaneWaveBasis};
use crate::linalg::{eigh, HermitianEigen};
use crate::potential::FourierPotential;
use crate::scalar::{cis, czero, Real, C};
use crate::spectral::{Fft2, Grid2};
use crate::twoscale::CommensurateGrid;

/// Eigendecomposition of one fibre Hamiltonian; `vectors` holds column `j` contiguously.
#[derive(Debug, Clone)]
pub struct FiberPropagator<T: Real> {
    pub values: Vec<T>,
    pub vectors: Vec<C<T>>,
}

impl<T: Real> FiberPropagator<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `v ← exp(-i s H) v`.
    pub fn apply(&self, v: &mut [C<T>], s: T, coef: &mut [C<T>]) {
        let n = self.dim();
        for j in 0..n {
            let col = &self.vectors[j * n..(j + 1) * n];
            let c = col.iter().zip(v.iter()).fold(czero::<T>(), |a, (x, y)| a + x.conj() * y);
            coef[j] = c * cis(-self.values[j] * s);
        }
        v.iter_mut().for_each(|z| *z = czero());
        for j in 0..n {
            let col = &self.vectors[j * n..(j + 1) * n];
            let c = coef[j];
            for (z, x) in v.iter_mut().zip(col) {
                *z += x * c;
            }
        }
    }
}

/// Two-scale split-step solver; see the module documentation.
#[derive(Debug)]
pub struct TwoScaleNls<T: Real> {
    pub eps: T,
    pub kappa: T,
    pub anchor: Anchor,
    pub cell: PlaneWaveBasis,
    pub grid: Grid2<T>,
    fft: Fft2<T>,
    cell_fft: Fft2<T>,
    nc: usize,
    fibers: Vec<FiberPropagator<T>>,
}

impl<T: HermitianEigen> TwoScaleNls<T> {
    /// Diagonalises the fibre Hamiltonians `H(sK + εδ)` for every envelope frequency `δ`.
    pub fn new(
        v: &FourierPotential<T>,
        anchor: Anchor,
        eps: T,
        kappa: T,
        cell_cutoff: usize,
        grid: Grid2<T>,
    ) -> Result<Self> {
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(invalid("epsilon", format!("must lie in (0, 1], got {eps}")));
        }
        let cell = PlaneWaveBasis::new(cell_cutoff)?;
        let nb = cell.len();
        let k0 = v.geom.anchor_point(anchor);
        let (xi1, xi2) = grid.wavenumbers();
        let mut fibers = Vec::with_capacity(grid.len());
        for q in 0..grid.len() {
            let (d1, d2) = (xi1[q / grid.n2], xi2[q % grid.n2]);
            let k = if d1 == T::zero() && d2 == T::zero() {
                Quasimomentum::Anchor(anchor)
            } else {
                Quasimomentum::Point([k0[0] + eps * d1, k0[1] + eps * d2])
            };
            let h = assemble_bloch_hamiltonian(v, k, cell_cutoff)?;
            let e = eigh(nb, &h.matrix, true)?;
            let cols = e.vectors.unwrap_or_default();
            fibers.push(FiberPropagator {
                values: e.values,
                vectors: cols.into_iter().flatten().collect(),
            });
        }
        let nc = 2 * cell_cutoff + 1;
        Ok(Self {
            eps,
            kappa,
            anchor,
            cell,
            grid,
            fft: Fft2::new(grid.n1, grid.n2),
            cell_fft: Fft2::new(nc, nc),
            nc,
            fibers,
        })
    }
}

impl<T: Real> TwoScaleNls<T> {
    pub fn check_layout(&self, f: &WkbField<T>) -> Result<()> {
        if f.grid != self.grid || f.cell != self.cell || f.eps != self.eps || f.charge != self.anchor.charge() {
            return Err(invalid("field", "two-scale layout does not match the solver"));
        }
        Ok(())
    }

    /// Exact linear flow over `tau`.
    pub fn linear_step(&self, f: &mut WkbField<T>, tau: T) {
        let nb = self.cell.len();
        let n = self.grid.len();
        for p in 0..nb {
            self.fft.to_spectral(f.envelope_mut(p));
        }
        let s = tau / self.eps;
        let mut v = vec![czero(); nb];
        let mut coef = vec![czero(); nb];
        for (q, fiber) in self.fibers.iter().enumerate() {
            for p in 0..nb {
                v[p] = f.data[p * n + q];
            }
            fiber.apply(&mut v, s, &mut coef);
            for p in 0..nb {
                f.data[p * n + q] = v[p];
            }
        }
        for p in 0..nb {
            self.fft.to_physical(f.envelope_mut(p));
        }
        f.t += tau;
    }

    /// Pointwise phase `exp(-i κ |U|² tau)` on the envelope × cell grid.
    pub fn nonlinear_step(&self, f: &mut WkbField<T>, tau: T) {
        if self.kappa == T::zero() {
            return;
        }
        let nc = self.nc;
        let mut buf = vec![czero(); nc * nc];
        let k = self.kappa * tau;
        for x in 0..self.grid.len() {
            f.gather_cell(x, &mut buf, nc);
            self.cell_fft.to_physical(&mut buf);
            for z in buf.iter_mut() {
                *z *= cis(-k * z.norm_sqr());
            }
            self.cell_fft.to_spectral(&mut buf);
            f.scatter_cell(x, &buf, nc);
        }
    }

    pub fn strang_step(&self, f: &mut WkbField<T>, dt: T) {
        let h = dt / T::lit(2.0);
        self.linear_step(f, h);
        self.nonlinear_step(f, dt);
        self.linear_step(f, h);
    }

    /// `max |U|` over envelope and cell nodes.
    pub fn sup_lift(&self, f: &WkbField<T>) -> f64 {
        let mut m = f.sup_two_scale(&self.cell_fft).as_f64();
        if f.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            m = f64::NAN;
        }
        m
    }
}

/// Per-snapshot diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NlsObservables {
    pub t: f64,
    /// `‖ψ‖²` of the trace.
    pub mass: f64,
    /// `∫∫ |U|²`, conserved exactly by [`TwoScaleNls`].
    pub lift_mass: f64,
    /// `max |U|` sampled on the envelope × cell grid.
    pub sup: f64,
    /// `‖ψ‖_{H^s_ε}` of the trace.
    pub norm_s: f64,
}

pub fn nls_observables<T: Real>(solver: &TwoScaleNls<T>, f: &WkbField<T>, s: u32) -> Result<NlsObservables> {
    Ok(NlsObservables {
        t: f.t.as_f64(),
        mass: f.scaled_norm_with(&solver.fft, 0)?.powi(2).as_f64(),
        lift_mass: f.lift_mass().as_f64(),
        sup: solver.sup_lift(f),
        norm_s: f.scaled_norm_with(&solver.fft, s)?.as_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct NlsTrajectory<T: Real> {
    pub snapshots: Vec<WkbField<T>>,
    pub observables: Vec<NlsObservables>,
}

/// Strang integration over `[0, t_end]` with `n_out` evenly spaced snapshots (plus `t = 0`).
/// Adjacent linear half steps are merged. Observables use the `H^s_ε` exponent `s`.
pub fn solve_nls<T: Real>(
    solver: &TwoScaleNls<T>,
    psi0: &WkbField<T>,
    t_end: T,
    dt: T,
    n_out: usize,
    s: u32,
) -> Result<NlsTrajectory<T>> {
    solver.check_layout(psi0)?;
    let steps = step_count(t_end, dt)?;
    let h = if steps > 0 { t_end / T::from_usize_exact(steps) } else { dt };
    let n_out = n_out.max(1).min(steps.max(1));
    let half = h / T::lit(2.0);
    let mut f = psi0.clone();
    let t0 = f.t;
    let sup0 = solver.sup_lift(&f).max(f64::MIN_POSITIVE);
    let mut out = NlsTrajectory {
        snapshots: vec![f.clone()],
        observables: vec![nls_observables(solver, &f, s)?],
    };
    let mut pending = false;
    for k in 1..=steps {
        solver.linear_step(&mut f, if pending { h } else { half });
        solver.nonlinear_step(&mut f, h);
        let record = is_output_step(k, steps, n_out);
        if record || k == steps {
            solver.linear_step(&mut f, half);
            f.t = t0 + h * T::from_usize_exact(k);
            pending = false;
            let sup = solver.sup_lift(&f);
            if !sup.is_finite() || sup > BLOWUP_FACTOR * sup0 {
                return Err(Error::BlowUp { time: f.t.as_f64(), sup });
            }
            if record {
                out.observables.push(nls_observables(solver, &f, s)?);
                out.snapshots.push(f.clone());
            }
        } else {
            pending = true;
        }
    }
    Ok(out)
}

/// Direct Strang scheme on an ε-commensurate grid.
#[derive(Debug)]
pub struct FineGridNls<T: Real> {
    pub grid: CommensurateGrid<T>,
    pub kappa: T,
    /// `V(x/ε)` at the grid nodes.
    pub potential: Vec<T>,
    kinetic: Vec<T>,
    fft: Fft2<T>,
}

impl<T: Real> FineGridNls<T> {
    pub fn new(v: &FourierPotential<T>, grid: CommensurateGrid<T>, kappa: T) -> Result<Self> {
        if grid.cells.ppc < 8 {
            return Err(invalid("ppc", "at least 8 points per cell are needed to resolve V(x/ε)"));
        }
        let g = grid.grid;
        let eps = grid.eps;
        let mut potential = Vec::with_capacity(g.len());
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                potential.push(v.value_at([g.x1(i) / eps, g.x2(j) / eps]).re);
            }
        }
        let (xi1, xi2) = g.wavenumbers();
        let mut kinetic = Vec::with_capacity(g.len());
        for a in &xi1 {
            for b in &xi2 {
                kinetic.push(eps * (*a * *a + *b * *b));
            }
        }
        Ok(Self {
            grid,
            kappa,
            potential,
            kinetic,
            fft: Fft2::new(g.n1, g.n2),
        })
    }

    pub fn kinetic_step(&self, psi: &mut [C<T>], tau: T) {
        self.fft.to_spectral(psi);
        for (z, w) in psi.iter_mut().zip(&self.kinetic) {
            *z *= cis(-*w * tau);
        }
        self.fft.to_physical(psi);
    }

    pub fn phase_step(&self, psi: &mut [C<T>], tau: T) {
        let inv = T::one() / self.grid.eps;
        for (z, v) in psi.iter_mut().zip(&self.potential) {
            *z *= cis(-tau * (*v * inv + self.kappa * z.norm_sqr()));
        }
    }

    pub fn strang_step(&self, psi: &mut [C<T>], dt: T) {
        let h = dt / T::lit(2.0);
        self.kinetic_step(psi, h);
        self.phase_step(psi, dt);
        self.kinetic_step(psi, h);
    }

    pub fn mass(&self, psi: &[C<T>]) -> T {
        self.grid.grid.l2_norm_sqr(psi)
    }

    /// Integrates to `t_end`, returning `(t, ψ)` at `n_out` evenly spaced times after the
    /// initial one.
    pub fn solve(&self, psi0: &[C<T>], t_end: T, dt: T, n_out: usize) -> Result<Vec<(T, Vec<C<T>>)>> {
        if psi0.len() != self.grid.grid.len() {
            return Err(invalid("field", "length does not match the grid"));
        }
        let steps = step_count(t_end, dt)?;
        let h = if steps > 0 { t_end / T::from_usize_exact(steps) } else { dt };
        let n_out = n_out.max(1).min(steps.max(1));
        let mut psi = psi0.to_vec();
        let sup0 = psi.iter().fold(0.0f64, |m, z| m.max(z.norm().as_f64())).max(f64::MIN_POSITIVE);
        let mut out = vec![(T::zero(), psi.clone())];
        for k in 1..=steps {
            self.strang_step(&mut psi, h);
            if is_output_step(k, steps, n_out) {
                let sup = if psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    psi.iter().fold(0.0f64, |m, z| m.max(z.norm().as_f64()))
                } else {
                    f64::NAN
                };
                if !sup.is_finite() || sup > BLOWUP_FACTOR * sup0 {
                    return Err(Error::BlowUp {
                        time: (h * T::from_usize_exact(k)).as_f64(),
                        sup,
                    });
                }
                out.push((h * T::from_usize_exact(k), psi.clone()));
            }
        }
        Ok(out)
    }
}
