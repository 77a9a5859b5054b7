use honeycomb_dirac::dirac2d::*;
use honeycomb_dirac::effcoef::EffectiveCoefficients;
use honeycomb_dirac::scalar::C;
use honeycomb_dirac::spectral::Grid2;
use std::f64::consts::PI;

const LAMBDA: C<f64> = C::new(0.0, 4.187966);
const B1: f64 = 0.36;
const B2: f64 = 0.15;

fn symbol(kappa: f64) -> DiracSymbol<f64> {
    DiracSymbol::new(LAMBDA, kappa, EffectiveCoefficients::from_b(B1, B2))
}

fn grid(n: usize) -> Grid2<f64> {
    Grid2::new(16.0, 16.0, n, n).unwrap()
}

fn initial(g: Grid2<f64>, mass: f64) -> SpinorField<f64> {
    gaussian_envelopes(
        g,
        1.2,
        [[7.0, 8.0], [9.0, 8.5]],
        [C::new(1.0, 0.0), C::new(0.3, 0.8)],
        mass,
    )
}

#[test]
fn zero_mode_is_invariant() {
    let s = symbol(1.0);
    let u = s.propagator(0.0, 0.0, 0.37);
    assert_eq!(u[0][0], C::new(1.0, 0.0));
    assert_eq!(u[0][1], C::new(0.0, 0.0));
    let g = grid(16);
    let solver = DiracSolver::new(s, g);
    let mut f = SpinorField::from_fn(g, |_, _| (C::new(0.4, 0.1), C::new(-0.2, 0.3)));
    let f0 = f.clone();
    solver.linear_step(&mut f, 0.91);
    assert!(f.max_diff(&f0) < 1e-14);
}

#[test]
fn symbol_is_hermitian_with_cone_eigenvalues() {
    let s = symbol(1.0);
    let (x, y) = (0.7, -1.3);
    let m = s.matrix(x, y);
    assert!((m[0][1] - m[1][0].conj()).norm() < 1e-15);
    // eigenvalues ±|λ||ξ|: det = -|m01|², trace 0
    let e = m[0][1].norm();
    assert!((e - LAMBDA.norm() * (x * x + y * y).sqrt()).abs() < 1e-12);
}

#[test]
fn single_mode_eigencomponent_flips_sign() {
    let g = grid(32);
    let s = symbol(0.0);
    let solver = DiracSolver::new(s.clone(), g);
    let (k1, k2) = (3usize, 1usize);
    let xi = [2.0 * PI * k1 as f64 / g.l1, 2.0 * PI * k2 as f64 / g.l2];
    let m = s.matrix(xi[0], xi[1]);
    let w = LAMBDA.norm() * xi[0].hypot(xi[1]);
    // eigenvector of M for +w: (m01, w)/norm
    let v = [m[0][1] / w, C::new(1.0, 0.0)];
    let mut f = SpinorField::from_fn(g, |x, y| {
        let e = C::from_polar(1.0, xi[0] * x + xi[1] * y);
        (v[0] * e, v[1] * e)
    });
    let f0 = f.clone();
    solver.linear_step(&mut f, PI / w);
    assert!(f.max_diff(&f0.scaled(-1.0)) < 1e-12);
}

#[test]
fn linear_step_is_unitary_over_many_steps() {
    let g = grid(32);
    let solver = DiracSolver::new(symbol(0.0), g);
    let mut f = initial(g, 1.0);
    let m0 = f.mass();
    let mut worst: f64 = 0.0;
    let mut prev = m0;
    for _ in 0..10_000 {
        solver.linear_step(&mut f, 1e-3);
        let m = f.mass();
        worst = worst.max((m - prev).abs() / m0);
        prev = m;
    }
    assert!(worst < 1e-13, "per-step drift {worst}");
}

#[test]
fn nonlinear_step_preserves_moduli_and_matches_closed_form() {
    let g = grid(16);
    let solver = DiracSolver::new(symbol(1.0), g);
    let mut f = initial(g, 3.0);
    let f0 = f.clone();
    solver.nonlinear_step(&mut f, 0.7);
    for (a, b) in f.a1.iter().zip(&f0.a1).chain(f.a2.iter().zip(&f0.a2)) {
        assert!((a.norm() - b.norm()).abs() < 1e-14);
    }
    let (c1, c2) = (C::new(0.6, -0.2), C::new(0.1, 0.9));
    let mut k = SpinorField::from_fn(g, |_, _| (c1, c2));
    let dt = 2.3;
    solver.nonlinear_step(&mut k, dt);
    let p1 = -(B1 * c1.norm_sqr() + 2.0 * B2 * c2.norm_sqr()) * dt;
    let p2 = -(B1 * c2.norm_sqr() + 2.0 * B2 * c1.norm_sqr()) * dt;
    assert!((k.a1[5] - c1 * C::from_polar(1.0, p1)).norm() < 1e-14);
    assert!((k.a2[5] - c2 * C::from_polar(1.0, p2)).norm() < 1e-14);
    let lin = DiracSolver::new(symbol(0.0), g);
    let mut z = f0.clone();
    lin.nonlinear_step(&mut z, 0.7);
    assert_eq!(z, f0);
}

#[test]
fn kappa_zero_matches_linear_propagator() {
    let g = grid(32);
    let solver = DiracSolver::new(symbol(0.0), g);
    let f0 = initial(g, 1.0);
    let tr = solve_nonlinear_dirac(&solver, &f0, 1.0, 1e-2, 4).unwrap();
    let mut direct = f0.clone();
    solver.linear_step(&mut direct, 1.0);
    assert!(tr.snapshots.last().unwrap().max_diff(&direct) < 1e-12);
    assert_eq!(tr.snapshots.len(), 5);
}

#[test]
fn mass_is_conserved() {
    let g = grid(64);
    let solver = DiracSolver::new(symbol(1.0), g);
    let tr = solve_nonlinear_dirac(&solver, &initial(g, 1.0), 1.0, 1e-3, 10).unwrap();
    let m0 = tr.observables[0].mass;
    for o in &tr.observables {
        assert!((o.mass - m0).abs() / m0 < 1e-10);
    }
}

fn energy_drift(dt: f64, kappa: f64) -> f64 {
    let g = grid(64);
    let solver = DiracSolver::new(symbol(kappa), g);
    let tr = solve_nonlinear_dirac(&solver, &initial(g, 2.0), 0.5, dt, 10).unwrap();
    let e0 = tr.observables[0].energy;
    tr.observables.iter().map(|o| (o.energy - e0).abs()).fold(0.0, f64::max)
}

#[test]
fn energy_drift_is_second_order() {
    for kappa in [1.0, -1.0] {
        let (a, b) = (energy_drift(2e-2, kappa), energy_drift(1e-2, kappa));
        let r = a / b;
        assert!((3.4..4.6).contains(&r), "κ = {kappa}: drift ratio {r} ({a}, {b})");
    }
}

#[test]
fn strang_self_convergence_is_second_order() {
    let g = grid(64);
    let solver = DiracSolver::new(symbol(1.0), g);
    let f0 = initial(g, 2.0);
    let run = |dt: f64| solve_nonlinear_dirac(&solver, &f0, 0.5, dt, 1).unwrap().snapshots.pop().unwrap();
    let (a, b, r) = (run(0.02), run(0.01), run(0.0025));
    let order = (a.l2_diff(&r) / b.l2_diff(&r)).log2();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn kappa_zero_flow_is_reversible() {
    let g = grid(32);
    let solver = DiracSolver::new(symbol(0.0), g);
    let f0 = initial(g, 1.0);
    let fwd = solve_nonlinear_dirac(&solver, &f0, 1.0, 1e-2, 1).unwrap().snapshots.pop().unwrap();
    let mut back = fwd.clone();
    for _ in 0..100 {
        solver.strang_step(&mut back, -1e-2);
    }
    assert!(back.max_diff(&f0) < 1e-11);
}

#[test]
fn translation_commutes_with_flow() {
    let g = grid(32);
    let solver = DiracSolver::new(symbol(-1.0), g);
    let f0 = initial(g, 2.0);
    let shift = |f: &SpinorField<f64>| {
        let mut o = f.clone();
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                let src = ((i + g.n1 - 1) % g.n1) * g.n2 + j;
                o.a1[i * g.n2 + j] = f.a1[src];
                o.a2[i * g.n2 + j] = f.a2[src];
            }
        }
        o
    };
    let a = solve_nonlinear_dirac(&solver, &shift(&f0), 0.2, 1e-2, 1).unwrap().snapshots.pop().unwrap();
    let b = shift(&solve_nonlinear_dirac(&solver, &f0, 0.2, 1e-2, 1).unwrap().snapshots.pop().unwrap());
    assert!(a.max_diff(&b) < 1e-12);
}

#[test]
fn energy_parts() {
    let g = grid(32);
    let f = initial(g, 1.5);
    let s = DiracSolver::new(symbol(1.0), g);
    let t = DiracSolver::new(symbol(-1.0), g);
    let (a, b) = (s.energy_parts(&f), t.energy_parts(&f));
    assert_eq!(a.transport, b.transport);
    assert_eq!(a.quartic, -b.quartic);
    assert!(a.quartic < 0.0);
    assert_eq!(s.energy(&SpinorField::zeros(g)), 0.0);
}

#[test]
fn blow_up_guard_trips() {
    let g = grid(16);
    let s = DiracSymbol::new(LAMBDA, 1.0, EffectiveCoefficients::from_b(f64::NAN, 0.0));
    let solver = DiracSolver::new(s, g);
    let r = solve_nonlinear_dirac(&solver, &initial(g, 1.0), 0.1, 1e-2, 1);
    assert!(matches!(r, Err(honeycomb_dirac::Error::BlowUp { .. })));
}

#[test]
fn inhomogeneous_trivial_cases() {
    let g = grid(32);
    let solver = DiracSolver::new(symbol(1.0), g);
    let alpha = SampledTrajectory { t0: 0.0, dt: 0.5, samples: vec![initial(g, 1.0); 3] };
    let zero = SampledTrajectory { t0: 0.0, dt: 0.5, samples: vec![SpinorField::zeros(g); 3] };
    let b = solve_inhomogeneous_dirac(&solver, &SpinorField::zeros(g), &alpha, &zero, 1.0, 1e-2).unwrap();
    assert!(b.iter().all(|f| f.a1.iter().chain(&f.a2).all(|z| *z == C::new(0.0, 0.0))));

    let lin = DiracSolver::new(symbol(0.0), g);
    let b0 = initial(g, 0.5);
    let b = solve_inhomogeneous_dirac(&lin, &b0, &alpha, &zero, 1.0, 1e-2).unwrap();
    let mut direct = b0.clone();
    lin.linear_step(&mut direct, 1.0);
    assert!(b.last().unwrap().max_diff(&direct) < 1e-12);

    assert!(matches!(
        solve_inhomogeneous_dirac(&solver, &b0, &alpha, &zero, 2.0, 1e-2),
        Err(honeycomb_dirac::Error::TimeGridMismatch(_))
    ));
}

/// Classical RK4 on the four real unknowns of a spatially constant `β`.
fn rk4_reference(
    coeffs: &EffectiveCoefficients<f64>,
    kappa: f64,
    alpha: impl Fn(f64) -> [C<f64>; 2],
    theta: impl Fn(f64) -> [C<f64>; 2],
    t_end: f64,
    n: usize,
) -> [C<f64>; 2] {
    let rhs = |t: f64, b: [C<f64>; 2]| {
        let (a, th) = (alpha(t), theta(t));
        let i = C::new(0.0, 1.0);
        [
            i * (th[0] - linearised_coupling(coeffs, 1, a, b) * kappa),
            i * (th[1] - linearised_coupling(coeffs, 2, a, b) * kappa),
        ]
    };
    let h = t_end / n as f64;
    let mut b = [C::new(0.0, 0.0); 2];
    let ax = |b: [C<f64>; 2], k: [C<f64>; 2], s: f64| [b[0] + k[0] * s, b[1] + k[1] * s];
    for s in 0..n {
        let t = s as f64 * h;
        let k1 = rhs(t, b);
        let k2 = rhs(t + h / 2.0, ax(b, k1, h / 2.0));
        let k3 = rhs(t + h / 2.0, ax(b, k2, h / 2.0));
        let k4 = rhs(t + h, ax(b, k3, h));
        for c in 0..2 {
            b[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (h / 6.0);
        }
    }
    b
}

#[test]
fn spatially_constant_problem_matches_ode_reference() {
    let g = grid(4);
    let coeffs = EffectiveCoefficients::from_b(B1, B2);
    let solver = DiracSolver::new(symbol(1.0), g);
    let alpha = |t: f64| [C::new(0.8, 0.1) * C::from_polar(1.0, -0.3 * t), C::new(0.2, -0.5)];
    let theta = |t: f64| [C::new(0.3 * t, 0.1), C::new(-0.2, 0.4 * t)];
    // α and Θ are linear or smooth; sample finely so interpolation error is negligible
    let dt = 1e-4;
    let n = 10_000;
    let sample = |f: &dyn Fn(f64) -> [C<f64>; 2]| SampledTrajectory {
        t0: 0.0,
        dt,
        samples: (0..=n)
            .map(|s| {
                let v = f(s as f64 * dt);
                let mut fld = SpinorField::from_fn(g, |_, _| (v[0], v[1]));
                fld.t = s as f64 * dt;
                fld
            })
            .collect(),
    };
    let (at, tt) = (sample(&alpha), sample(&theta));
    let b = solve_inhomogeneous_dirac(&solver, &SpinorField::zeros(g), &at, &tt, 1.0, dt).unwrap();
    let want = rk4_reference(&coeffs, 1.0, alpha, theta, 1.0, 20_000);
    let last = b.last().unwrap();
    assert!((last.a1[0] - want[0]).norm() < 1e-8, "{} vs {}", last.a1[0], want[0]);
    assert!((last.a2[0] - want[1]).norm() < 1e-8);
}

#[test]
fn contraction_time_scaling() {
    let g = grid(32);
    let ops = SpectralOps::new(g);
    let s = symbol(1.0);
    let f = initial(g, 1.0);
    let t1 = local_existence_time(&ops, &f, 2, &s, 1.0).unwrap();
    let t2 = local_existence_time(&ops, &f.scaled(2.0), 2, &s, 1.0).unwrap();
    assert_eq!(t1, 4.0 * t2);
    let r = 1.7;
    assert_eq!(contraction_time(r, B1, B2, 1.0), 1.0 / (8.0 * (B1 + 2.0 * B2) * r * r));
    assert_eq!(contraction_time(r, 2.0 * B1, 2.0 * B2, 1.0), 0.5 * contraction_time(r, B1, B2, 1.0));
    assert!(contraction_time(1e-200, B1, B2, 1.0) > 1e300);
    assert!(local_existence_time(&ops, &f, 1, &s, 1.0).is_err());
}

#[test]
fn sobolev_norm_of_single_mode() {
    let g = grid(16);
    let ops = SpectralOps::new(g);
    let xi = [2.0 * PI * 2.0 / g.l1, -2.0 * PI * 3.0 / g.l2];
    let f: Vec<C<f64>> = (0..g.len())
        .map(|p| C::from_polar(1.0, xi[0] * g.x1(p / g.n2) + xi[1] * g.x2(p % g.n2)))
        .collect();
    let eps = 0.3;
    let n0 = ops.scaled_sobolev_norm(&f, 0, eps);
    assert!((n0 * n0 - g.area()).abs() < 1e-10);
    let n1 = ops.scaled_sobolev_norm(&f, 1, eps);
    let want = (1.0 + (eps * xi[0]).powi(2) + (eps * xi[1]).powi(2)) * g.area();
    assert!((n1 * n1 - want).abs() < 1e-10);
    assert!(ops.scaled_sobolev_norm(&f, 2, eps) >= n1);
}
