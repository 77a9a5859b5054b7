//! Split-step spectral integrators for the effective nonlinear Dirac system
//! `i ∂t α = M(D) α + κ F(α)` and its linearisation with sources.
//!
//! The symbol is `M(ξ) = [[0, λ̄(ξ1 + iξ2)], [λ(ξ1 - iξ2), 0]]` and
//! `F_n(α) = Σ_{jkl} T_{jkln} α_j ᾱ_k α_l`.

use serde::Serialize;

use crate::effcoef::EffectiveCoefficients;
use crate::error::{invalid, Error, Result};
use crate::scalar::{cis, cmax_abs, czero, Real, C};
use crate::spectral::{Fft2, Grid2};

/// Constants of the effective Dirac operator.
#[derive(Debug, Clone)]
pub struct DiracSymbol<T: Real> {
    pub lambda: C<T>,
    pub kappa: T,
    pub coeffs: EffectiveCoefficients<T>,
}

impl<T: Real> DiracSymbol<T> {
    pub fn new(lambda: C<T>, kappa: T, coeffs: EffectiveCoefficients<T>) -> Self {
        Self {
            lambda,
            kappa,
            coeffs,
        }
    }

    pub fn b1(&self) -> T {
        self.coeffs.b1
    }

    pub fn b2(&self) -> T {
        self.coeffs.b2
    }

    /// `M(ξ)` as a 2×2 matrix.
    pub fn matrix(&self, xi1: T, xi2: T) -> [[C<T>; 2]; 2] {
        let l = self.lambda;
        [
            [czero(), l.conj() * C::new(xi1, xi2)],
            [l * C::new(xi1, -xi2), czero()],
        ]
    }

    /// `exp(-i M(ξ) dt) = cos(ω dt) I - i sin(ω dt)/ω M(ξ)`, `ω = |λ||ξ|`.
    pub fn propagator(&self, xi1: T, xi2: T, dt: T) -> [[C<T>; 2]; 2] {
        let w = self.lambda.norm() * xi1.hypot(xi2);
        let one = C::new(T::one(), T::zero());
        if w == T::zero() {
            return [[one, czero()], [czero(), one]];
        }
        let (s, c) = (w * dt).sin_cos();
        let m = self.matrix(xi1, xi2);
        let f = C::new(T::zero(), -s / w);
        [
            [C::new(c, T::zero()), m[0][1] * f],
            [m[1][0] * f, C::new(c, T::zero())],
        ]
    }

    pub fn with_kappa(&self, kappa: T) -> Self {
        let mut s = self.clone();
        s.kappa = kappa;
        s
    }
}

/// Periodic two-component field on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField<T: Real> {
    pub grid: Grid2<T>,
    pub a1: Vec<C<T>>,
    pub a2: Vec<C<T>>,
    pub t: T,
}

impl<T: Real> SpinorField<T> {
    pub fn zeros(grid: Grid2<T>) -> Self {
        Self {
            grid,
            a1: vec![czero(); grid.len()],
            a2: vec![czero(); grid.len()],
            t: T::zero(),
        }
    }

    /// Samples `f(x1, x2) -> (α1, α2)` at the nodes.
    pub fn from_fn(grid: Grid2<T>, f: impl Fn(T, T) -> (C<T>, C<T>)) -> Self {
        let mut out = Self::zeros(grid);
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                let (a, b) = f(grid.x1(i1), grid.x2(i2));
                out.a1[i1 * grid.n2 + i2] = a;
                out.a2[i1 * grid.n2 + i2] = b;
            }
        }
        out
    }

    pub fn component(&self, j: usize) -> &[C<T>] {
        if j == 1 {
            &self.a1
        } else {
            &self.a2
        }
    }

    pub fn mass(&self) -> T {
        self.grid.l2_norm_sqr(&self.a1) + self.grid.l2_norm_sqr(&self.a2)
    }

    pub fn sup(&self) -> (T, T) {
        (cmax_abs(&self.a1), cmax_abs(&self.a2))
    }

    /// Largest modulus over both components; NaN if any value is not finite.
    pub fn sup_checked(&self) -> f64 {
        let mut m = 0.0f64;
        for z in self.a1.iter().chain(&self.a2) {
            let a = z.norm().as_f64();
            if !a.is_finite() {
                return f64::NAN;
            }
            m = m.max(a);
        }
        m
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut o = self.clone();
        o.a1.iter_mut().chain(o.a2.iter_mut()).for_each(|z| *z = *z * s);
        o
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        let mut o = self.clone();
        for (a, b) in o.a1.iter_mut().zip(&other.a1) {
            *a += *b * s;
        }
        for (a, b) in o.a2.iter_mut().zip(&other.a2) {
            *a += *b * s;
        }
        o
    }

    /// Max pointwise difference over both components.
    pub fn max_diff(&self, other: &Self) -> T {
        let d = |a: &[C<T>], b: &[C<T>]| {
            a.iter()
                .zip(b)
                .fold(T::zero(), |m, (x, y)| m.max((x - y).norm()))
        };
        d(&self.a1, &other.a1).max(d(&self.a2, &other.a2))
    }

    /// Discrete `L²` distance.
    pub fn l2_diff(&self, other: &Self) -> T {
        let s: T = self
            .a1
            .iter()
            .zip(&other.a1)
            .chain(self.a2.iter().zip(&other.a2))
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Linear interpolation `(1 - w) self + w other`.
    pub fn lerp(&self, other: &Self, w: T) -> Self {
        let mut o = self.scaled(T::one() - w).axpy(w, other);
        o.t = self.t * (T::one() - w) + other.t * w;
        o
    }
}

/// FFT plan and wave numbers for a grid.
pub struct SpectralOps<T: Real> {
    pub grid: Grid2<T>,
    pub fft: Fft2<T>,
    pub xi1: Vec<T>,
    pub xi2: Vec<T>,
}

impl<T: Real> SpectralOps<T> {
    pub fn new(grid: Grid2<T>) -> Self {
        let (xi1, xi2) = grid.wavenumbers();
        Self {
            fft: Fft2::new(grid.n1, grid.n2),
            grid,
            xi1,
            xi2,
        }
    }

    pub fn spectrum(&self, f: &[C<T>]) -> Vec<C<T>> {
        let mut b = f.to_vec();
        self.fft.to_spectral(&mut b);
        b
    }

    pub fn physical(&self, s: &[C<T>]) -> Vec<C<T>> {
        let mut b = s.to_vec();
        self.fft.to_physical(&mut b);
        b
    }

    /// Applies a Fourier multiplier `m(ξ1, ξ2)`.
    pub fn multiplier(&self, f: &[C<T>], m: impl Fn(T, T) -> C<T>) -> Vec<C<T>> {
        let mut s = self.spectrum(f);
        let n2 = self.grid.n2;
        for (p, z) in s.iter_mut().enumerate() {
            *z *= m(self.xi1[p / n2], self.xi2[p % n2]);
        }
        self.fft.to_physical(&mut s);
        s
    }

    /// `∂_{x_d} f` (`d` = 0 or 1).
    pub fn derivative(&self, f: &[C<T>], d: usize) -> Vec<C<T>> {
        self.multiplier(f, |a, b| C::new(T::zero(), if d == 0 { a } else { b }))
    }

    pub fn laplacian(&self, f: &[C<T>]) -> Vec<C<T>> {
        self.multiplier(f, |a, b| C::new(-(a * a + b * b), T::zero()))
    }

    /// Scaled Sobolev norm `Σ_{|γ|≤s} ‖(ε∂)^γ f‖²` (square root), from nodal values.
    pub fn scaled_sobolev_norm(&self, f: &[C<T>], s: u32, eps: T) -> T {
        let spec = self.spectrum(f);
        scaled_sobolev_norm_spectral(&self.grid, &self.xi1, &self.xi2, &spec, s, eps)
    }
}

/// `Σ_{|γ|≤s} (εξ)^{2γ}` summed over multi-indices `γ = (γ1, γ2)`.
#[inline]
pub fn sobolev_weight<T: Real>(xi1: T, xi2: T, s: u32, eps: T) -> T {
    let a = (eps * xi1) * (eps * xi1);
    let b = (eps * xi2) * (eps * xi2);
    let mut w = T::zero();
    for total in 0..=s {
        for g1 in 0..=total {
            w += a.powi(g1 as i32) * b.powi((total - g1) as i32);
        }
    }
    w
}

/// Scaled Sobolev norm from normalized spectral coefficients.
pub fn scaled_sobolev_norm_spectral<T: Real>(
    grid: &Grid2<T>,
    xi1: &[T],
    xi2: &[T],
    spec: &[C<T>],
    s: u32,
    eps: T,
) -> T {
    let n2 = grid.n2;
    let mut acc = T::zero();
    for (p, z) in spec.iter().enumerate() {
        let w = if s == 0 {
            T::one()
        } else {
            sobolev_weight(xi1[p / n2], xi2[p % n2], s, eps)
        };
        acc += w * z.norm_sqr();
    }
    (acc * grid.area()).sqrt()
}

/// Observables of a Dirac trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiracObservables {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub sup1: f64,
    pub sup2: f64,
}

/// Energy split into its transport and quartic parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts<T: Real> {
    pub transport: T,
    pub quartic: T,
}

impl<T: Real> EnergyParts<T> {
    pub fn total(&self) -> T {
        self.transport + self.quartic
    }
}

/// Stateful integrator owning FFT plans for one grid.
pub struct DiracSolver<T: Real> {
    pub sym: DiracSymbol<T>,
    pub ops: SpectralOps<T>,
}

impl<T: Real> DiracSolver<T> {
    pub fn new(sym: DiracSymbol<T>, grid: Grid2<T>) -> Self {
        Self {
            sym,
            ops: SpectralOps::new(grid),
        }
    }

    fn check_grid(&self, f: &SpinorField<T>) {
        assert_eq!(f.grid, self.ops.grid, "field grid differs from solver grid");
    }

    /// Applies `exp(-i M(D) dt)` in place.
    pub fn linear_step(&self, f: &mut SpinorField<T>, dt: T) {
        self.check_grid(f);
        let (fft, n2) = (&self.ops.fft, self.ops.grid.n2);
        fft.to_spectral(&mut f.a1);
        fft.to_spectral(&mut f.a2);
        for p in 0..f.a1.len() {
            let u = self.sym.propagator(self.ops.xi1[p / n2], self.ops.xi2[p % n2], dt);
            let (x, y) = (f.a1[p], f.a2[p]);
            f.a1[p] = u[0][0] * x + u[0][1] * y;
            f.a2[p] = u[1][0] * x + u[1][1] * y;
        }
        fft.to_physical(&mut f.a1);
        fft.to_physical(&mut f.a2);
    }

    /// Exact pointwise solution of `i ∂t α = κ F(α)` for the symmetric tensor.
    pub fn nonlinear_step(&self, f: &mut SpinorField<T>, dt: T) {
        let (k, b1, b2) = (self.sym.kappa, self.sym.b1(), self.sym.b2());
        if k == T::zero() {
            return;
        }
        let two = T::lit(2.0);
        for (x, y) in f.a1.iter_mut().zip(f.a2.iter_mut()) {
            let (p, q) = (x.norm_sqr(), y.norm_sqr());
            *x = *x * cis(-k * (b1 * p + two * b2 * q) * dt);
            *y = *y * cis(-k * (b1 * q + two * b2 * p) * dt);
        }
    }

    /// One Strang step `L(dt/2) N(dt) L(dt/2)`.
    pub fn strang_step(&self, f: &mut SpinorField<T>, dt: T) {
        let h = dt * T::lit(0.5);
        self.linear_step(f, h);
        self.nonlinear_step(f, dt);
        self.linear_step(f, h);
        f.t += dt;
    }

    /// `∂t α = -i (M(D) α + κ F(α))` with spectral derivatives and the full tensor.
    pub fn time_derivative(&self, f: &SpinorField<T>) -> SpinorField<T> {
        let mut out = SpinorField::zeros(f.grid);
        out.t = f.t;
        let (s1, s2) = (self.ops.spectrum(&f.a1), self.ops.spectrum(&f.a2));
        let n2 = self.ops.grid.n2;
        let mut m1 = vec![czero(); s1.len()];
        let mut m2 = vec![czero(); s1.len()];
        for p in 0..s1.len() {
            let m = self.sym.matrix(self.ops.xi1[p / n2], self.ops.xi2[p % n2]);
            m1[p] = m[0][1] * s2[p];
            m2[p] = m[1][0] * s1[p];
        }
        let m1 = self.ops.physical(&m1);
        let m2 = self.ops.physical(&m2);
        let mi = C::new(T::zero(), -T::one());
        for p in 0..s1.len() {
            let a = [f.a1[p], f.a2[p]];
            let k = self.sym.kappa;
            out.a1[p] = (m1[p] + self.sym.coeffs.cubic(1, a) * k) * mi;
            out.a2[p] = (m2[p] + self.sym.coeffs.cubic(2, a) * k) * mi;
        }
        out
    }

    /// `E = Im(λ̄ ∫ α2 (∂1 + i∂2) ᾱ1) - (κ/4) ∫ b1(|α1|⁴ + |α2|⁴) + 4 b2 |α1|²|α2|²`.
    pub fn energy_parts(&self, f: &SpinorField<T>) -> EnergyParts<T> {
        let conj1: Vec<C<T>> = f.a1.iter().map(|z| z.conj()).collect();
        let d = self.ops.multiplier(&conj1, |a, b| C::new(-b, a));
        let dv = f.grid.cell_volume();
        let integral = f
            .a2
            .iter()
            .zip(&d)
            .fold(czero::<T>(), |s, (x, y)| s + x * y)
            * dv;
        let transport = (self.sym.lambda.conj() * integral).im;
        let (b1, b2) = (self.sym.b1(), self.sym.b2());
        let mut q = T::zero();
        for (x, y) in f.a1.iter().zip(&f.a2) {
            let (p, r) = (x.norm_sqr(), y.norm_sqr());
            q += b1 * (p * p + r * r) + T::lit(4.0) * b2 * p * r;
        }
        EnergyParts {
            transport,
            quartic: -self.sym.kappa * T::lit(0.25) * q * dv,
        }
    }

    pub fn energy(&self, f: &SpinorField<T>) -> T {
        self.energy_parts(f).total()
    }

    pub fn observe(&self, f: &SpinorField<T>) -> DiracObservables {
        let (s1, s2) = f.sup();
        DiracObservables {
            t: f.t.as_f64(),
            mass: f.mass().as_f64(),
            energy: self.energy(f).as_f64(),
            sup1: s1.as_f64(),
            sup2: s2.as_f64(),
        }
    }
}

/// Result of a nonlinear Dirac run.
#[derive(Debug, Clone)]
pub struct DiracTrajectory<T: Real> {
    pub snapshots: Vec<SpinorField<T>>,
    pub observables: Vec<DiracObservables>,
}

/// Blow-up guard factor relative to the initial sup norm.
pub const BLOWUP_FACTOR: f64 = 1e3;

/// Number of steps of size close to `dt` covering `[0, t_end]` exactly.
pub fn step_count<T: Real>(t_end: T, dt: T) -> Result<usize> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", "time step must be positive"));
    }
    if t_end < T::zero() {
        return Err(invalid("T", "final time must be nonnegative"));
    }
    Ok((t_end / dt).round().to_usize().unwrap_or(0).max(usize::from(t_end > T::zero())))
}

/// Whether step `k` (1-based) of `steps` closes one of `n_out` output intervals. Exactly
/// `n_out` steps qualify, the last one always, spaced as evenly as integer steps allow.
pub fn is_output_step(k: usize, steps: usize, n_out: usize) -> bool {
    k >= 1 && k * n_out / steps != (k - 1) * n_out / steps
}

/// Strang integration over `[0, t_end]` with `n_out` evenly spaced snapshots (plus `t = 0`).
pub fn solve_nonlinear_dirac<T: Real>(
    solver: &DiracSolver<T>,
    alpha0: &SpinorField<T>,
    t_end: T,
    dt: T,
    n_out: usize,
) -> Result<DiracTrajectory<T>> {
    let steps = step_count(t_end, dt)?;
    let h = if steps > 0 { t_end / T::from_usize_exact(steps) } else { dt };
    let n_out = n_out.max(1).min(steps.max(1));
    let mut f = alpha0.clone();
    let sup0 = f.sup_checked().max(f64::MIN_POSITIVE);
    let mut snaps = vec![f.clone()];
    let mut obs = vec![solver.observe(&f)];
    for s in 1..=steps {
        solver.strang_step(&mut f, h);
        let sup = f.sup_checked();
        if !sup.is_finite() || sup > BLOWUP_FACTOR * sup0 {
            return Err(Error::BlowUp {
                time: f.t.as_f64(),
                sup,
            });
        }
        if is_output_step(s, steps, n_out) {
            snaps.push(f.clone());
            obs.push(solver.observe(&f));
        }
    }
    Ok(DiracTrajectory {
        snapshots: snaps,
        observables: obs,
    })
}

/// Coupling of the linearised system: `G_n(α, β) = Σ T_{jkln}(α_j β̄_k α_l + 2 β_j ᾱ_k α_l)`.
#[inline]
pub fn linearised_coupling<T: Real>(c: &EffectiveCoefficients<T>, n: usize, a: [C<T>; 2], b: [C<T>; 2]) -> C<T> {
    let two = T::lit(2.0);
    let mut s = czero();
    for j in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                let t = c.tensor[j][k][l][n - 1];
                if t == czero() {
                    continue;
                }
                s += t * (a[j] * b[k].conj() * a[l] + b[j] * a[k].conj() * a[l] * two);
            }
        }
    }
    s
}

impl<T: Real> DiracSolver<T> {
    /// `∂t β = -iκ G(α, β) + iΘ` at every node.
    fn coupling_rhs(&self, beta: &SpinorField<T>, alpha: &SpinorField<T>, theta: &SpinorField<T>) -> SpinorField<T> {
        let mut out = SpinorField::zeros(beta.grid);
        let k = self.sym.kappa;
        let i = C::new(T::zero(), T::one());
        for p in 0..beta.a1.len() {
            let a = [alpha.a1[p], alpha.a2[p]];
            let b = [beta.a1[p], beta.a2[p]];
            out.a1[p] = i * (theta.a1[p] - linearised_coupling(&self.sym.coeffs, 1, a, b) * k);
            out.a2[p] = i * (theta.a2[p] - linearised_coupling(&self.sym.coeffs, 2, a, b) * k);
        }
        out
    }

    /// One Strang step for `β` on `[t, t + dt]`: exact linear half steps around an explicit
    /// midpoint step of the coupling and source, with `α`, `Θ` interpolated linearly between
    /// the two supplied time levels.
    pub fn beta_step(
        &self,
        beta: &mut SpinorField<T>,
        alpha: [&SpinorField<T>; 2],
        theta: [&SpinorField<T>; 2],
        dt: T,
    ) {
        let h = dt * T::lit(0.5);
        let t0 = beta.t;
        self.linear_step(beta, h);
        let (am, tm) = (alpha[0].lerp(alpha[1], T::lit(0.5)), theta[0].lerp(theta[1], T::lit(0.5)));
        let k1 = self.coupling_rhs(beta, alpha[0], theta[0]);
        let mid = beta.axpy(h, &k1);
        let k2 = self.coupling_rhs(&mid, &am, &tm);
        *beta = beta.axpy(dt, &k2);
        self.linear_step(beta, h);
        beta.t = t0 + dt;
    }
}

/// Uniformly sampled field trajectory with linear interpolation in time.
#[derive(Debug, Clone)]
pub struct SampledTrajectory<T: Real> {
    pub t0: T,
    pub dt: T,
    pub samples: Vec<SpinorField<T>>,
}

impl<T: Real> SampledTrajectory<T> {
    pub fn at(&self, t: T) -> Result<SpinorField<T>> {
        let x = ((t - self.t0) / self.dt).as_f64();
        let last = (self.samples.len() - 1) as f64;
        if x < -1e-9 || x > last + 1e-9 {
            return Err(Error::TimeGridMismatch(format!(
                "t = {t} outside the sampled window [{}, {}]",
                self.t0,
                self.t0.as_f64() + last * self.dt.as_f64()
            )));
        }
        let x = x.clamp(0.0, last);
        let i = (x.floor() as usize).min(self.samples.len().saturating_sub(2));
        if self.samples.len() == 1 {
            return Ok(self.samples[0].clone());
        }
        let w = T::lit(x - i as f64);
        let mut f = self.samples[i].lerp(&self.samples[i + 1], w);
        f.t = t;
        Ok(f)
    }
}

/// Integrates the linearised system with sources over `[0, t_end]`; `α` and `Θ` are
/// interpolated from their sampled trajectories. Returns `β` at every step.
pub fn solve_inhomogeneous_dirac<T: Real>(
    solver: &DiracSolver<T>,
    beta0: &SpinorField<T>,
    alpha: &SampledTrajectory<T>,
    theta: &SampledTrajectory<T>,
    t_end: T,
    dt: T,
) -> Result<Vec<SpinorField<T>>> {
    if alpha.samples.is_empty() || theta.samples.is_empty() {
        return Err(Error::TimeGridMismatch("empty trajectory".into()));
    }
    let steps = step_count(t_end, dt)?;
    let h = if steps > 0 { t_end / T::from_usize_exact(steps) } else { dt };
    let mut b = beta0.clone();
    let mut out = vec![b.clone()];
    let mut a_prev = alpha.at(b.t)?;
    let mut th_prev = theta.at(b.t)?;
    for _ in 0..steps {
        let t1 = b.t + h;
        let a_next = alpha.at(t1)?;
        let th_next = theta.at(t1)?;
        solver.beta_step(&mut b, [&a_prev, &a_next], [&th_prev, &th_next], h);
        out.push(b.clone());
        a_prev = a_next;
        th_prev = th_next;
    }
    Ok(out)
}

/// `T = 1 / (8 (b1 + 2 b2) R² C_s²)` with `R = ‖α0‖_{H^s}`.
pub fn local_existence_time<T: Real>(ops: &SpectralOps<T>, alpha0: &SpinorField<T>, s: u32, sym: &DiracSymbol<T>, c_s: T) -> Result<T> {
    if s < 2 {
        return Err(invalid("s", "the algebra property needs s > 1"));
    }
    let r1 = ops.scaled_sobolev_norm(&alpha0.a1, s, T::one());
    let r2 = ops.scaled_sobolev_norm(&alpha0.a2, s, T::one());
    let r = (r1 * r1 + r2 * r2).sqrt();
    Ok(contraction_time(r, sym.b1(), sym.b2(), c_s))
}

/// Closed form of the contraction time for given `R`.
pub fn contraction_time<T: Real>(r: T, b1: T, b2: T, c_s: T) -> T {
    T::one() / (T::lit(8.0) * (b1 + T::lit(2.0) * b2) * r * r * c_s * c_s)
}

/// Gaussian envelope pair centred in the box, normalised to total mass `mass`.
pub fn gaussian_envelopes<T: Real>(
    grid: Grid2<T>,
    width: T,
    centers: [[T; 2]; 2],
    weights: [C<T>; 2],
    mass: T,
) -> SpinorField<T> {
    let g = |x: T, y: T, c: [T; 2]| {
        // periodic distance to the centre
        let per = |d: T, l: T| d - l * (d / l).round();
        let (dx, dy) = (per(x - c[0], grid.l1), per(y - c[1], grid.l2));
        (-(dx * dx + dy * dy) / (T::lit(2.0) * width * width)).exp()
    };
    let f = SpinorField::from_fn(grid, |x, y| {
        (weights[0] * g(x, y, centers[0]), weights[1] * g(x, y, centers[1]))
    });
    let m = f.mass();
    if m > T::zero() {
        f.scaled((mass / m).sqrt())
    } else {
        f
    }
}
