//! First-order corrector of the two-scale expansion: partial resolvent, `u1⊥`, the sources
//! `Θ` of the linearised amplitude equations, two-scale assembly of the approximate
//! solution and ε-scaled Sobolev norms.
//!
//! With `u0 = Σ α_j Φ_j`, the part of `L1 u0 - κ|u0|²u0` outside the kernel of `L0 = μ* - H`
//! expands over twelve cell profiles: the gradients `∂_{y_d} Φ_j` with coefficient fields
//! `2 ∂_{x_d} α_j` and the cubic products `Φ_j Φ̄_k Φ_l` with coefficient fields
//! `-κ α_j ᾱ_k α_l`. Hence `u1⊥ = Σ_p c_p(x) R_p(y)` with `R_p = L0⁻¹ f_p` and
//! `c_p = -2 ∂_{x_d} α_j` or `κ α_j ᾱ_k α_l`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bloch::{spectral_margin, DiracPointData, Quasimomentum, SparseBlochOperator};
use crate::dirac2d::{sobolev_weight, DiracSolver, SpectralOps, SpinorField};
use crate::effcoef::{dirac_profiles, EffectiveCoefficients};
use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeGeometry, PlaneWaveBasis};
use crate::linalg::{minres, SolveStats};
use crate::potential::FourierPotential;
use crate::profile::{BlochProfile, CellProducts};
use crate::scalar::{cis, czero, Real, C};
use crate::spectral::{signed_freq, Fft2, Grid2};
use crate::twoscale::{place_shifted, CommensurateGrid};

/// Exponent `s` and scale `ε` of the ε-weighted Sobolev norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: u32,
    pub eps: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self { s: 2, eps: 1.0 }
    }
}

/// Cell profile feeding the corrector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    /// `∂_{y_d} Φ_j`.
    Gradient { j: usize, d: usize },
    /// `Φ_j Φ̄_k Φ_l`.
    Cubic { j: usize, k: usize, l: usize },
}

/// The twelve profiles in a fixed order.
pub fn profile_kinds() -> Vec<ProfileKind> {
    let mut v = Vec::with_capacity(12);
    for j in 1..=2 {
        for d in 0..2 {
            v.push(ProfileKind::Gradient { j, d });
        }
    }
    for j in 1..=2 {
        for k in 1..=2 {
            for l in 1..=2 {
                v.push(ProfileKind::Cubic { j, k, l });
            }
        }
    }
    v
}

/// Constant cell overlaps entering the sources, indexed by profile `p` first.
#[derive(Debug, Clone)]
pub struct OverlapTensors<T: Real> {
    /// `⟨Φ_n, ∂_{y_d} R_p⟩` as `[p][n-1][d]`.
    pub gradient: Vec<[[C<T>; 2]; 2]>,
    /// `⟨Φ_n, Φ_j Φ_l R̄_p⟩` as `[p][n-1][j-1][l-1]`.
    pub conjugate: Vec<[[[C<T>; 2]; 2]; 2]>,
    /// `⟨Φ_n, Φ_j Φ̄_k R_p⟩` as `[p][n-1][j-1][k-1]`.
    pub mixed: Vec<[[[C<T>; 2]; 2]; 2]>,
    /// `⟨Φ_n, R_p⟩`, zero up to the solver tolerance.
    pub kernel: Vec<[C<T>; 2]>,
}

/// Forcing profiles, their partial-resolvent images and the overlap tensors.
#[derive(Debug, Clone)]
pub struct ProfileBasis<T: Real> {
    pub geom: LatticeGeometry<T>,
    pub mustar: T,
    pub ext_cutoff: usize,
    /// `Φ1`, `Φ2` at the extended cutoff.
    pub phis: [BlochProfile<T>; 2],
    pub kinds: Vec<ProfileKind>,
    pub forcing: Vec<BlochProfile<T>>,
    pub resolved: Vec<BlochProfile<T>>,
    /// Distance from `μ*` to the rest of the spectrum and the eigenvalue attaining it.
    pub margin: (f64, f64),
    pub solves: Vec<SolveStats>,
    pub overlaps: OverlapTensors<T>,
}

/// Smallest acceptable resolvent margin relative to `1 + |μ*|`.
pub const MIN_RESOLVENT_MARGIN: f64 = 1e-3;

/// Relative residual of the resolvent solves.
pub const RESOLVENT_TOL: f64 = 1e-13;

/// Operator context for `L0⁻¹` on an extended plane-wave basis.
pub struct PartialResolvent<'a, T: Real> {
    pub op: &'a SparseBlochOperator<T>,
    pub mustar: T,
    /// Kernel basis at the operator's cutoff.
    pub phis: &'a [BlochProfile<T>; 2],
    /// Deflation shift applied on the kernel.
    pub shift: T,
}

impl<T: Real> PartialResolvent<'_, T> {
    fn project(&self, f: &mut [C<T>]) {
        for phi in self.phis.iter() {
            let c = phi.coeffs.iter().zip(f.iter()).fold(czero::<T>(), |s, (a, b)| s + a.conj() * b);
            for (x, p) in f.iter_mut().zip(&phi.coeffs) {
                *x -= p * c;
            }
        }
    }

    /// `(1 - P*)(μ* - H)⁻¹(1 - P*) f`.
    pub fn apply(&self, f: &BlochProfile<T>) -> Result<(BlochProfile<T>, SolveStats)> {
        let cutoff = self.op.basis.cutoff();
        let f = f.with_cutoff(cutoff)?;
        let mut rhs = f.coeffs.clone();
        self.project(&mut rhs);
        let diag: Vec<T> = self
            .op
            .diagonal
            .iter()
            .map(|&d| T::one() / ((d - self.mustar).abs() + T::one()))
            .collect();
        let n = rhs.len();
        let mut tmp = vec![czero(); n];
        // (μ - H) - shift P*: invertible, and equal to μ - H on the complement of the kernel
        let a = |x: &[C<T>], y: &mut [C<T>]| {
            self.op.apply_into(x, &mut tmp);
            for i in 0..n {
                y[i] = x[i] * self.mustar - tmp[i];
            }
            for phi in self.phis.iter() {
                let c = phi.coeffs.iter().zip(x).fold(czero::<T>(), |s, (a, b)| s + a.conj() * b);
                for (yi, p) in y.iter_mut().zip(&phi.coeffs) {
                    *yi -= p * c * self.shift;
                }
            }
        };
        let m = |x: &[C<T>], y: &mut [C<T>]| {
            for i in 0..n {
                y[i] = x[i] * diag[i];
            }
        };
        let (mut x, stats) = minres(a, m, &rhs, T::lit(RESOLVENT_TOL), 20 * n.max(50))?;
        self.project(&mut x);
        Ok((BlochProfile::from_coeffs(f.charge, f.basis.clone(), x)?, stats))
    }
}

/// Applies `L0⁻¹` to one profile, building the extended operator on the fly.
pub fn partial_resolvent_apply<T: Real>(
    v: &FourierPotential<T>,
    dp: &DiracPointData<T>,
    ext_cutoff: usize,
    f: &BlochProfile<T>,
) -> Result<BlochProfile<T>> {
    check_margin(dp)?;
    let op = SparseBlochOperator::new(v, Quasimomentum::Anchor(dp.anchor), ext_cutoff)?;
    let phis = extended_phis(dp, ext_cutoff)?;
    let r = PartialResolvent {
        op: &op,
        mustar: dp.mustar,
        phis: &phis,
        shift: T::from_f64(spectral_margin(dp).0.as_f64()).unwrap(),
    };
    Ok(r.apply(f)?.0)
}

fn check_margin<T: Real>(dp: &DiracPointData<T>) -> Result<(f64, f64)> {
    let (m, e) = spectral_margin(dp);
    let (m, e) = (m.as_f64(), e.as_f64());
    if !(m > MIN_RESOLVENT_MARGIN * (1.0 + dp.mustar.as_f64().abs())) {
        return Err(Error::IllConditionedResolvent {
            margin: m,
            eigenvalue: e,
        });
    }
    Ok((m, e))
}

fn extended_phis<T: Real>(dp: &DiracPointData<T>, cutoff: usize) -> Result<[BlochProfile<T>; 2]> {
    let [a, b] = dirac_profiles(dp);
    Ok([a.with_cutoff(cutoff)?, b.with_cutoff(cutoff)?])
}

impl<T: Real> ProfileBasis<T> {
    /// Builds profiles at `ext_cutoff` (3M by default) and their resolvent images.
    pub fn new(v: &FourierPotential<T>, dp: &DiracPointData<T>, ext_cutoff: Option<usize>) -> Result<Self> {
        let margin = check_margin(dp)?;
        let mc = dp.basis.cutoff();
        let ext = ext_cutoff.unwrap_or(3 * mc);
        if ext < mc {
            return Err(invalid("ext_cutoff", "extended cutoff must not be below the Dirac-point cutoff"));
        }
        let geom = dp.geom;
        let base = dirac_profiles(dp);
        let phis = [base[0].with_cutoff(ext)?, base[1].with_cutoff(ext)?];
        let kinds = profile_kinds();
        let cp = CellProducts::<T>::for_bandwidth(3 * mc, ext);
        let mut forcing = Vec::with_capacity(kinds.len());
        for kind in &kinds {
            forcing.push(match *kind {
                ProfileKind::Gradient { j, d } => phis[j - 1].derivative(&geom, d),
                ProfileKind::Cubic { j, k, l } => {
                    cp.product(&[&base[j - 1], &base[k - 1].conj(), &base[l - 1]], ext)?
                }
            });
        }
        let op = SparseBlochOperator::new(v, Quasimomentum::Anchor(dp.anchor), ext)?;
        let res = PartialResolvent {
            op: &op,
            mustar: dp.mustar,
            phis: &phis,
            shift: T::lit(margin.0),
        };
        let mut resolved = Vec::with_capacity(kinds.len());
        let mut solves = Vec::with_capacity(kinds.len());
        for f in &forcing {
            let (r, s) = res.apply(f)?;
            resolved.push(r);
            solves.push(s);
        }
        let overlaps = overlap_tensors(&geom, &base, &phis, &resolved, mc, ext);
        Ok(Self {
            geom,
            mustar: dp.mustar,
            ext_cutoff: ext,
            phis,
            kinds,
            forcing,
            resolved,
            margin,
            solves,
            overlaps,
        })
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Largest `|⟨Φ_n, R_p⟩|`.
    pub fn kernel_leak(&self) -> f64 {
        self.overlaps
            .kernel
            .iter()
            .flat_map(|k| k.iter())
            .fold(0.0, |m, z| m.max(z.norm().as_f64()))
    }
}

fn overlap_tensors<T: Real>(
    geom: &LatticeGeometry<T>,
    base: &[BlochProfile<T>; 2],
    phis: &[BlochProfile<T>; 2],
    resolved: &[BlochProfile<T>],
    mc: usize,
    ext: usize,
) -> OverlapTensors<T> {
    let cp = CellProducts::<T>::for_bandwidth(3 * mc + ext, 0);
    let fft = cp.fft();
    let g: Vec<Vec<C<T>>> = base.iter().map(|p| p.to_cell_grid(fft)).collect();
    let np = (cp.n * cp.n) as f64;
    let inv = T::lit(1.0 / np);
    let mut out = OverlapTensors {
        gradient: Vec::new(),
        conjugate: Vec::new(),
        mixed: Vec::new(),
        kernel: Vec::new(),
    };
    for r in resolved {
        let mut gr = [[czero(); 2]; 2];
        for n in 0..2 {
            for (d, slot) in gr[n].iter_mut().enumerate() {
                *slot = phis[n].inner(&r.derivative(geom, d));
            }
        }
        out.gradient.push(gr);
        out.kernel.push([phis[0].inner(r), phis[1].inner(r)]);
        let rg = r.to_cell_grid(fft);
        let mut cj = [[[czero(); 2]; 2]; 2];
        let mut mx = [[[czero(); 2]; 2]; 2];
        for n in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let (mut s1, mut s2) = (czero::<T>(), czero::<T>());
                    for i in 0..rg.len() {
                        let pn = g[n][i].conj() * g[j][i];
                        s1 += pn * g[l][i] * rg[i].conj();
                        s2 += pn * g[l][i].conj() * rg[i];
                    }
                    cj[n][j][l] = s1 * inv;
                    mx[n][j][l] = s2 * inv;
                }
            }
        }
        out.conjugate.push(cj);
        out.mixed.push(mx);
    }
    out
}

/// `∂t α` of the effective system, with spectral derivatives.
pub fn alpha_time_derivative<T: Real>(solver: &DiracSolver<T>, alpha: &SpinorField<T>) -> SpinorField<T> {
    solver.time_derivative(alpha)
}

/// Pointwise `i ∂t α_n + 2 Σ_{j,d} ⟨Φ_n, ∂_{y_d} Φ_j⟩ ∂_{x_d} α_j - κ Σ T_{jkln} α_j ᾱ_k α_l`,
/// i.e. `-⟨Φ_n, L1 u0 - κ|u0|²u0⟩` with the sign flipped; zero when `α` solves the system.
pub fn fredholm_residual<T: Real>(
    ops: &SpectralOps<T>,
    dp: &DiracPointData<T>,
    coeffs: &EffectiveCoefficients<T>,
    kappa: T,
    alpha: &SpinorField<T>,
    dt_alpha: &SpinorField<T>,
) -> SpinorField<T> {
    let mut ov = [[[czero::<T>(); 2]; 2]; 2];
    for n in 0..2 {
        for j in 0..2 {
            for d in 0..2 {
                ov[n][j][d] = dp.derivative_overlap(n + 1, j + 1, d);
            }
        }
    }
    let grads: Vec<[Vec<C<T>>; 2]> = (1..=2)
        .map(|j| [ops.derivative(alpha.component(j), 0), ops.derivative(alpha.component(j), 1)])
        .collect();
    let mut out = SpinorField::zeros(alpha.grid);
    out.t = alpha.t;
    let i = C::new(T::zero(), T::one());
    let two = T::lit(2.0);
    for p in 0..alpha.a1.len() {
        let a = [alpha.a1[p], alpha.a2[p]];
        let da = [dt_alpha.a1[p], dt_alpha.a2[p]];
        for n in 0..2 {
            let mut r = i * da[n] - coeffs.cubic(n + 1, a) * kappa;
            for j in 0..2 {
                for d in 0..2 {
                    r += ov[n][j][d] * grads[j][d][p] * two;
                }
            }
            if n == 0 {
                out.a1[p] = r;
            } else {
                out.a2[p] = r;
            }
        }
    }
    out
}

/// Coefficient fields `c_p(x)` of `u1⊥ = Σ_p c_p R_p`.
#[derive(Debug, Clone)]
pub struct CorrectorData<T: Real> {
    pub t: T,
    pub grid: Grid2<T>,
    pub coeffs: Vec<Vec<C<T>>>,
    /// Sup of the solvability residual relative to `sup |∂t α| + sup |α|`.
    pub fredholm_residual: f64,
}

/// Acceptance threshold for the solvability residual.
pub const FREDHOLM_TOL: f64 = 1e-9;

/// Coefficient fields for given kinds, without the solvability check.
pub fn coefficient_fields<T: Real>(
    ops: &SpectralOps<T>,
    kinds: &[ProfileKind],
    kappa: T,
    alpha: &SpinorField<T>,
) -> Vec<Vec<C<T>>> {
    let m2 = T::lit(-2.0);
    kinds
        .iter()
        .map(|kind| match *kind {
            ProfileKind::Gradient { j, d } => ops
                .derivative(alpha.component(j), d)
                .into_iter()
                .map(|z| z * m2)
                .collect(),
            ProfileKind::Cubic { j, k, l } => {
                let (a, b, c) = (alpha.component(j), alpha.component(k), alpha.component(l));
                (0..a.len()).map(|p| a[p] * b[p].conj() * c[p] * kappa).collect()
            }
        })
        .collect()
}

/// Builds `u1⊥` for `α`, verifying solvability against the effective system.
pub fn build_u1_perp<T: Real>(
    solver: &DiracSolver<T>,
    dp: &DiracPointData<T>,
    basis: &ProfileBasis<T>,
    alpha: &SpinorField<T>,
) -> Result<CorrectorData<T>> {
    let dt_alpha = alpha_time_derivative(solver, alpha);
    let r = fredholm_residual(&solver.ops, dp, &solver.sym.coeffs, solver.sym.kappa, alpha, &dt_alpha);
    let scale = dt_alpha.sup_checked() + alpha.sup_checked();
    let res = if scale > 0.0 { r.sup_checked() / scale } else { 0.0 };
    if !(res <= FREDHOLM_TOL) {
        return Err(Error::AlphaNotASolution { residual: res });
    }
    Ok(CorrectorData {
        t: alpha.t,
        grid: alpha.grid,
        coeffs: coefficient_fields(&solver.ops, &basis.kinds, solver.sym.kappa, alpha),
        fredholm_residual: res,
    })
}

impl<T: Real> CorrectorData<T> {
    /// `u1⊥(x_p, ·)` at grid node `p`.
    pub fn u1_perp_at(&self, basis: &ProfileBasis<T>, p: usize) -> Result<BlochProfile<T>> {
        let mut out = BlochProfile::zeros(basis.phis[0].charge, basis.ext_cutoff)?;
        for (c, r) in self.coeffs.iter().zip(&basis.resolved) {
            out.axpy(c[p], r);
        }
        Ok(out)
    }

    /// Copy with every coefficient field multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let mut o = self.clone();
        o.coeffs.iter_mut().flatten().for_each(|z| *z = *z * s);
        o
    }
}

/// `Θ_n = Δα_n + ⟨Φ_n, L1 u1⊥⟩ - κ⟨Φ_n, (u0 ū1⊥ + 2 ū0 u1⊥) u0⟩`.
///
/// The time derivative inside `L1` contributes `i Σ_p ∂t c_p ⟨Φ_n, R_p⟩ = 0` because every
/// `R_p` is orthogonal to the kernel, so only the mixed-derivative part remains.
pub fn build_theta_sources<T: Real>(
    ops: &SpectralOps<T>,
    basis: &ProfileBasis<T>,
    kappa: T,
    alpha: &SpinorField<T>,
    corr: &CorrectorData<T>,
) -> SpinorField<T> {
    let mut theta = SpinorField::zeros(alpha.grid);
    theta.t = alpha.t;
    theta.a1 = ops.laplacian(&alpha.a1);
    theta.a2 = ops.laplacian(&alpha.a2);
    let two = T::lit(2.0);
    let ov = &basis.overlaps;
    for (p, c) in corr.coeffs.iter().enumerate() {
        let dc = [ops.derivative(c, 0), ops.derivative(c, 1)];
        for q in 0..c.len() {
            let a = [alpha.a1[q], alpha.a2[q]];
            for n in 0..2 {
                let mut s = (dc[0][q] * ov.gradient[p][n][0] + dc[1][q] * ov.gradient[p][n][1]) * two;
                let mut nl = czero::<T>();
                for j in 0..2 {
                    for l in 0..2 {
                        nl += a[j] * a[l] * c[q].conj() * ov.conjugate[p][n][j][l];
                        nl += a[j] * a[l].conj() * c[q] * ov.mixed[p][n][j][l] * two;
                    }
                }
                s -= nl * kappa;
                if n == 0 {
                    theta.a1[q] += s;
                } else {
                    theta.a2[q] += s;
                }
            }
        }
    }
    theta
}

/// Approximate solution in two-scale form `ψ(x) = Σ_m A_m(x) e^{i(sK + k_m)·x/ε}`, `m` in a
/// cell box of cutoff `M_c`. Envelopes are stored in physical space, `m`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WkbField<T: Real> {
    pub eps: T,
    pub geom: LatticeGeometry<T>,
    pub charge: i64,
    pub cell: PlaneWaveBasis,
    pub grid: Grid2<T>,
    pub data: Vec<C<T>>,
    pub t: T,
}

impl<T: Real> WkbField<T> {
    pub fn zeros(eps: T, geom: LatticeGeometry<T>, charge: i64, cell_cutoff: usize, grid: Grid2<T>) -> Result<Self> {
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(invalid("epsilon", format!("must lie in (0, 1], got {eps}")));
        }
        let cell = PlaneWaveBasis::new(cell_cutoff)?;
        let n = cell.len() * grid.len();
        Ok(Self {
            eps,
            geom,
            charge,
            cell,
            grid,
            data: vec![czero(); n],
            t: T::zero(),
        })
    }

    pub fn envelope(&self, p: usize) -> &[C<T>] {
        let n = self.grid.len();
        &self.data[p * n..(p + 1) * n]
    }

    pub fn envelope_mut(&mut self, p: usize) -> &mut [C<T>] {
        let n = self.grid.len();
        &mut self.data[p * n..(p + 1) * n]
    }

    /// `ε`-scaled wave vector `sK + k_m` of cell position `p`.
    pub fn carrier(&self, p: usize) -> [T; 2] {
        let k = self.geom.k_vertex;
        let s = T::from_i64_exact(self.charge);
        let km = self.geom.dual_vector(self.cell.index(p));
        [s * k[0] + km[0], s * k[1] + km[1]]
    }

    /// `∫∫ |U|²` of the lift `U(x, y)`; the quantity conserved by the two-scale propagator.
    pub fn lift_mass(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>() * self.grid.cell_volume()
    }

    /// `‖ψ‖²_{L²}` of the trace `ψ(x) = U(x, x/ε)` over the box.
    pub fn mass(&self) -> Result<T> {
        let n = self.scaled_norm(0)?;
        Ok(n * n)
    }

    /// Box frequency index of the carrier `(sK + k_m)/ε` of cell position `p`.
    fn carrier_index(&self, p: usize) -> Result<(i64, i64)> {
        let kc = self.carrier(p);
        let tau = T::lit(std::f64::consts::TAU);
        let f = [kc[0] * self.grid.l1 / (tau * self.eps), kc[1] * self.grid.l2 / (tau * self.eps)];
        let r = [f[0].round(), f[1].round()];
        if (f[0] - r[0]).abs() > T::lit(1e-6) || (f[1] - r[1]).abs() > T::lit(1e-6) {
            return Err(Error::NonCommensurate(format!(
                "carrier of cell index {:?} is off the box frequency lattice",
                self.cell.index(p)
            )));
        }
        Ok((r[0].to_i64().unwrap_or(0), r[1].to_i64().unwrap_or(0)))
    }

    /// Spectrum of the trace on the box frequency lattice. Envelope bands of neighbouring
    /// carriers may overlap, so coefficients landing on one frequency are summed.
    pub fn trace_spectrum(&self, fft: &Fft2<T>) -> Result<HashMap<(i64, i64), C<T>>> {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let mut out: HashMap<(i64, i64), C<T>> = HashMap::with_capacity(self.data.len());
        for p in 0..self.cell.len() {
            let (c1, c2) = self.carrier_index(p)?;
            let mut b = self.envelope(p).to_vec();
            fft.to_spectral(&mut b);
            for (q, z) in b.into_iter().enumerate() {
                let k = (c1 + signed_freq(q / n2, n1), c2 + signed_freq(q % n2, n2));
                *out.entry(k).or_insert_with(czero) += z;
            }
        }
        Ok(out)
    }

    /// `‖ψ‖_{H^s_ε}` of the trace, computed from the envelope spectra.
    pub fn scaled_norm(&self, s: u32) -> Result<T> {
        let fft = Fft2::<T>::new(self.grid.n1, self.grid.n2);
        self.scaled_norm_with(&fft, s)
    }

    pub fn scaled_norm_with(&self, fft: &Fft2<T>, s: u32) -> Result<T> {
        let tau = T::lit(std::f64::consts::TAU);
        let (w1, w2) = (tau / self.grid.l1, tau / self.grid.l2);
        let acc = self
            .trace_spectrum(fft)?
            .into_iter()
            .map(|(k, z)| {
                let w = if s == 0 {
                    T::one()
                } else {
                    sobolev_weight(w1 * T::from_i64_exact(k.0), w2 * T::from_i64_exact(k.1), s, self.eps)
                };
                w * z.norm_sqr()
            })
            .sum::<T>();
        Ok((acc * self.grid.area()).sqrt())
    }

    /// `self - other` (same layout).
    pub fn diff(&self, other: &Self) -> Result<Self> {
        if self.data.len() != other.data.len() || self.grid != other.grid || self.cell != other.cell {
            return Err(invalid("field", "two-scale layouts differ"));
        }
        let mut o = self.clone();
        for (a, b) in o.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(o)
    }

    /// Same field on a different cell box (zero padded or truncated).
    pub fn with_cell_cutoff(&self, cutoff: usize) -> Result<Self> {
        let mut out = Self::zeros(self.eps, self.geom, self.charge, cutoff, self.grid)?;
        out.t = self.t;
        let n = self.grid.len();
        for (p, &m) in self.cell.indices().iter().enumerate() {
            if let Some(q) = out.cell.position(m) {
                out.data[q * n..(q + 1) * n].copy_from_slice(self.envelope(p));
            }
        }
        Ok(out)
    }

    /// Multiplies by a global phase `e^{iθ}`.
    pub fn rotate_phase(&mut self, theta: T) {
        let ph = cis(theta);
        self.data.iter_mut().for_each(|z| *z *= ph);
    }

    /// `sup |ψ|` bounded via the two-scale lift: max over envelope nodes of the cell sup.
    pub fn sup_two_scale(&self, cell_fft: &Fft2<T>) -> T {
        let (nc, _) = cell_fft.shape();
        let mut best = T::zero();
        let mut buf = vec![czero(); nc * nc];
        for x in 0..self.grid.len() {
            self.gather_cell(x, &mut buf, nc);
            cell_fft.to_physical(&mut buf);
            for z in &buf {
                best = best.max(z.norm());
            }
        }
        best
    }

    /// Writes the cell coefficients at envelope node `x` into an `nc × nc` FFT buffer.
    pub fn gather_cell(&self, x: usize, buf: &mut [C<T>], nc: usize) {
        let n = self.grid.len();
        buf.iter_mut().for_each(|z| *z = czero());
        for (p, &m) in self.cell.indices().iter().enumerate() {
            let (a, b) = (cell_bin(m.0, nc), cell_bin(m.1, nc));
            buf[a * nc + b] = self.data[p * n + x];
        }
    }

    /// Inverse of [`gather_cell`](Self::gather_cell).
    pub fn scatter_cell(&mut self, x: usize, buf: &[C<T>], nc: usize) {
        let n = self.grid.len();
        let idx: Vec<_> = self.cell.indices().to_vec();
        for (p, &m) in idx.iter().enumerate() {
            let (a, b) = (cell_bin(m.0, nc), cell_bin(m.1, nc));
            self.data[p * n + x] = buf[a * nc + b];
        }
    }

    /// Values of `ψ` on the fine commensurate grid of the same box and ε.
    pub fn synthesize(&self, grid: &CommensurateGrid<T>) -> Result<Vec<C<T>>> {
        let tol = T::lit(1e-9);
        if (grid.eps - self.eps).abs() > tol * self.eps
            || (grid.grid.l1 - self.grid.l1).abs() > tol * self.grid.l1
            || (grid.grid.l2 - self.grid.l2).abs() > tol * self.grid.l2
        {
            return Err(Error::NonCommensurate("ε-grid and two-scale field describe different boxes".into()));
        }
        let shape = (grid.grid.n1, grid.grid.n2);
        let coarse = (self.grid.n1, self.grid.n2);
        let fft = Fft2::<T>::new(coarse.0, coarse.1);
        let mut fine = vec![czero(); grid.grid.len()];
        for p in 0..self.cell.len() {
            let mut b = self.envelope(p).to_vec();
            fft.to_spectral(&mut b);
            let off = grid.dual_frequency(self.cell.index(p), self.charge);
            place_shifted(&mut fine, shape, &b, coarse, off, C::new(T::one(), T::zero()));
        }
        Fft2::<T>::new(shape.0, shape.1).to_physical(&mut fine);
        Ok(fine)
    }
}

/// FFT bin of cell index `m` on an `nc`-point axis (`nc = 2M + 1`).
#[inline]
pub fn cell_bin(m: i64, nc: usize) -> usize {
    m.rem_euclid(nc as i64) as usize
}

/// Ingredients of `Ψ_app = e^{-iμ*t/ε}[Σ_j (α_j + εβ_j) Φ_j(x/ε) + ε u1⊥(t, x, x/ε)]`.
pub struct WkbAssembler<'a, T: Real> {
    pub phis: [BlochProfile<T>; 2],
    pub basis: Option<&'a ProfileBasis<T>>,
    pub mustar: T,
    pub geom: LatticeGeometry<T>,
    pub cell_cutoff: usize,
}

impl<'a, T: Real> WkbAssembler<'a, T> {
    pub fn new(dp: &DiracPointData<T>, basis: Option<&'a ProfileBasis<T>>, cell_cutoff: usize) -> Self {
        Self {
            phis: dirac_profiles(dp),
            basis,
            mustar: dp.mustar,
            geom: dp.geom,
            cell_cutoff,
        }
    }

    /// Assembles the two-scale field at time `alpha.t`. `β` and the corrector are optional.
    pub fn assemble(
        &self,
        eps: T,
        alpha: &SpinorField<T>,
        beta: Option<&SpinorField<T>>,
        corr: Option<&CorrectorData<T>>,
    ) -> Result<WkbField<T>> {
        let mut f = WkbField::zeros(eps, self.geom, self.phis[0].charge, self.cell_cutoff, alpha.grid)?;
        f.t = alpha.t;
        let phase = cis(-self.mustar * alpha.t / eps);
        let n = alpha.grid.len();
        let idx: Vec<_> = f.cell.indices().to_vec();
        let resolved: Vec<Vec<C<T>>> = match (corr, self.basis) {
            (Some(_), Some(b)) => idx
                .iter()
                .map(|&m| b.resolved.iter().map(|r| r.coeff(m)).collect())
                .collect(),
            (Some(_), None) => return Err(invalid("corrector", "a profile basis is required for u1⊥")),
            _ => Vec::new(),
        };
        for (p, &m) in idx.iter().enumerate() {
            let (c1, c2) = (self.phis[0].coeff(m), self.phis[1].coeff(m));
            let env = &mut f.data[p * n..(p + 1) * n];
            for x in 0..n {
                let (mut a1, mut a2) = (alpha.a1[x], alpha.a2[x]);
                if let Some(b) = beta {
                    a1 += b.a1[x] * eps;
                    a2 += b.a2[x] * eps;
                }
                env[x] = a1 * c1 + a2 * c2;
            }
            if let Some(c) = corr {
                for (q, r) in resolved[p].iter().enumerate() {
                    if *r == czero() {
                        continue;
                    }
                    let cf = &c.coeffs[q];
                    let re = *r * eps;
                    for x in 0..n {
                        env[x] += cf[x] * re;
                    }
                }
            }
            env.iter_mut().for_each(|z| *z *= phase);
        }
        Ok(f)
    }
}

/// `‖f‖_{H^s_ε}` of a scalar field on a periodic grid.
pub fn scaled_sobolev_norm<T: Real>(ops: &SpectralOps<T>, f: &[C<T>], spec: NormSpec) -> T {
    ops.scaled_sobolev_norm(f, spec.s, T::lit(spec.eps))
}
