use honeycomb_dirac::bloch::{locate_dirac_point, DiracSearch};
use honeycomb_dirac::corrector::{WkbAssembler, WkbField};
use honeycomb_dirac::dirac2d::{gaussian_envelopes, SpinorField};
use honeycomb_dirac::lattice::{build_lattice, Anchor};
use honeycomb_dirac::nls::*;
use honeycomb_dirac::potential::{standard_honeycomb_potential, FourierPotential};
use honeycomb_dirac::scalar::C;
use honeycomb_dirac::spectral::Grid2;
use honeycomb_dirac::twoscale::{build_commensurate_grid, CellCounts, CommensurateGrid};
use honeycomb_dirac::DiracPointData64;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn potential() -> FourierPotential<f64> {
    standard_honeycomb_potential(&build_lattice(1.0f64).unwrap(), 1.0)
}

fn dirac() -> &'static DiracPointData64 {
    static DP: OnceLock<DiracPointData64> = OnceLock::new();
    DP.get_or_init(|| locate_dirac_point(&potential(), 12, DiracSearch::default()).unwrap())
}

/// ε-commensurate box with `cx × cy` cells at ε = 1/6 rescaled to `eps`, and an `n × n`
/// envelope grid on it.
fn boxed(eps: f64, cx: usize, cy: usize, n: usize) -> (CommensurateGrid<f64>, Grid2<f64>) {
    let geom = build_lattice(1.0f64).unwrap();
    let base = build_commensurate_grid(&geom, 1.0 / 6.0, CellCounts { cx, cy, ppc: 8 }).unwrap();
    let g = base.rescaled(eps).unwrap();
    let coarse = Grid2::new(g.grid.l1, g.grid.l2, n, n).unwrap();
    (g, coarse)
}

fn packet(g: Grid2<f64>, width: f64, mass: f64) -> SpinorField<f64> {
    let c = [g.l1 / 2.0, g.l2 / 2.0];
    gaussian_envelopes(g, width, [[c[0] - 0.2, c[1]], [c[0] + 0.2, c[1] + 0.1]], [C::new(1.0, 0.0), C::new(0.3, 0.6)], mass)
}

fn relative_l2(a: &WkbField<f64>, b: &WkbField<f64>) -> f64 {
    a.diff(b).unwrap().scaled_norm(0).unwrap() / b.scaled_norm(0).unwrap()
}

#[test]
fn lift_mass_is_conserved_over_a_thousand_steps() {
    let eps = 1.0 / 6.0;
    let (_, g) = boxed(eps, 12, 18, 12);
    let solver = TwoScaleNls::new(&potential(), Anchor::K, eps, 1.0, 4, g).unwrap();
    let psi0 = WkbAssembler::new(dirac(), None, 4).assemble(eps, &packet(g, 0.5, 4.0), None, None).unwrap();
    let tr = solve_nls(&solver, &psi0, 1000.0 * eps / 8.0, eps / 8.0, 10, 2).unwrap();
    let m0 = tr.observables[0].lift_mass;
    for o in &tr.observables {
        assert!((o.lift_mass - m0).abs() < 1e-12 * m0, "drift {}", (o.lift_mass - m0).abs() / m0);
    }
    assert_eq!(tr.observables.len(), 11);
}

#[test]
fn stationary_bloch_mode() {
    let eps = 1.0 / 6.0;
    let (_, g) = boxed(eps, 12, 18, 8);
    let solver = TwoScaleNls::new(&potential(), Anchor::K, eps, 0.0, 5, g).unwrap();
    let asm = WkbAssembler::new(dirac(), None, 5);
    let one = SpinorField::from_fn(g, |_, _| (C::new(1.0, 0.0), C::new(0.0, 0.0)));
    let psi0 = asm.assemble(eps, &one, None, None).unwrap();
    let tr = solve_nls(&solver, &psi0, 0.5, eps / 8.0, 4, 2).unwrap();
    for (s, o) in tr.snapshots.iter().zip(&tr.observables) {
        let mut exact = one.clone();
        exact.t = s.t;
        let want = asm.assemble(eps, &exact, None, None).unwrap();
        let e = relative_l2(s, &want);
        assert!(e < 1e-6, "t = {}: {e}", s.t);
        assert!((o.sup - tr.observables[0].sup).abs() < 1e-6 * o.sup);
        assert!((o.norm_s - tr.observables[0].norm_s).abs() < 1e-6 * o.norm_s);
    }
    let s0 = tr.observables[0];
    assert!((s0.mass - s0.lift_mass).abs() < 1e-12 * s0.mass);
}

#[test]
fn free_evolution_is_exact() {
    let eps = 1.0 / 6.0;
    let (_, g) = boxed(eps, 12, 18, 8);
    let geom = build_lattice(1.0f64).unwrap();
    let v = FourierPotential { geom, coeffs: Default::default(), v0: 0.0 };
    let solver = TwoScaleNls::new(&v, Anchor::K, eps, 0.0, 2, g).unwrap();
    let mut psi = WkbField::zeros(eps, geom, 1, 2, g).unwrap();
    let (p, m) = (psi.cell.position((1, -1)).unwrap(), (1, -1));
    let xi = [2.0 * PI / g.l1, -4.0 * PI / g.l2];
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            psi.envelope_mut(p)[i * g.n2 + j] = C::from_polar(1.0, xi[0] * g.x1(i) + xi[1] * g.x2(j));
        }
    }
    let psi0 = psi.clone();
    let t = 0.37;
    solver.linear_step(&mut psi, t);
    let k = geom.dual_vector(m);
    let w = [geom.k_vertex[0] + k[0] + eps * xi[0], geom.k_vertex[1] + k[1] + eps * xi[1]];
    let ph = C::from_polar(1.0, -(w[0] * w[0] + w[1] * w[1]) * t / eps);
    let err = psi.envelope(p).iter().zip(psi0.envelope(p)).fold(0.0f64, |a, (x, y)| a.max((x - y * ph).norm()));
    assert!(err < 1e-11, "{err}");
}

#[test]
fn strang_self_convergence_is_second_order() {
    let eps = 1.0 / 6.0;
    let (_, g) = boxed(eps, 12, 18, 12);
    let solver = TwoScaleNls::new(&potential(), Anchor::K, eps, 1.0, 4, g).unwrap();
    let psi0 = WkbAssembler::new(dirac(), None, 4).assemble(eps, &packet(g, 0.5, 6.0), None, None).unwrap();
    let run = |dt: f64| solve_nls(&solver, &psi0, 0.2, dt, 1, 0).unwrap().snapshots.pop().unwrap();
    let (a, b, r) = (run(0.002), run(0.001), run(0.000125));
    let order = (relative_l2(&a, &r) / relative_l2(&b, &r)).log2();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn global_phase_commutes_with_flow() {
    let eps = 1.0 / 6.0;
    let (_, g) = boxed(eps, 12, 18, 12);
    let solver = TwoScaleNls::new(&potential(), Anchor::K, eps, -1.0, 4, g).unwrap();
    let psi0 = WkbAssembler::new(dirac(), None, 4).assemble(eps, &packet(g, 0.5, 6.0), None, None).unwrap();
    let mut rot = psi0.clone();
    rot.rotate_phase(0.9);
    let a = solve_nls(&solver, &psi0, 0.1, eps / 8.0, 1, 0).unwrap().snapshots.pop().unwrap();
    let mut b = solve_nls(&solver, &rot, 0.1, eps / 8.0, 1, 0).unwrap().snapshots.pop().unwrap();
    b.rotate_phase(-0.9);
    assert!(relative_l2(&b, &a) < 1e-13);
}

#[test]
fn cell_refinement_is_converged() {
    for eps in [1.0 / 6.0, 1.0 / 12.0] {
        let (_, g) = boxed(eps, 12, 18, 8);
        let v = potential();
        let run = |mc: usize| {
            let solver = TwoScaleNls::new(&v, Anchor::K, eps, 1.0, mc, g).unwrap();
            let psi0 = WkbAssembler::new(dirac(), None, mc).assemble(eps, &packet(g, 0.6, 3.0), None, None).unwrap();
            solve_nls(&solver, &psi0, 0.5, eps / 8.0, 1, 0).unwrap().snapshots.pop().unwrap()
        };
        let (a, b) = (run(6).with_cell_cutoff(8).unwrap(), run(8));
        let d = relative_l2(&a, &b);
        assert!(d < 1e-7, "ε = {eps}: {d}");
    }
}

#[test]
fn agrees_with_fine_grid_scheme() {
    // small box; the coarse grid leaves room for the cubic's envelope harmonics
    let eps = 1.0 / 3.0;
    let geom = build_lattice(1.0f64).unwrap();
    let fine = build_commensurate_grid(&geom, eps, CellCounts { cx: 4, cy: 6, ppc: 32 }).unwrap();
    let g = Grid2::new(fine.grid.l1, fine.grid.l2, 16, 16).unwrap();
    let (k1, k2) = (2.0 * PI / g.l1, 2.0 * PI / g.l2);
    let alpha = SpinorField::from_fn(g, |x, y| {
        (C::new(0.8, 0.0) + C::from_polar(0.3, k1 * x), C::from_polar(0.4, -k1 * x + k2 * y))
    });
    let v = potential();
    let psi0 = WkbAssembler::new(dirac(), None, 5).assemble(eps, &alpha, None, None).unwrap();
    let t_end = 0.05;
    for kappa in [0.0, 1.0] {
        let ts = TwoScaleNls::new(&v, Anchor::K, eps, kappa, 5, g).unwrap();
        let a = solve_nls(&ts, &psi0, t_end, t_end / 400.0, 1, 0).unwrap().snapshots.pop().unwrap();
        let fg = FineGridNls::new(&v, fine, kappa).unwrap();
        let u0 = psi0.synthesize(&fine).unwrap();
        let b = fg.solve(&u0, t_end, t_end / 4000.0, 1).unwrap().pop().unwrap().1;
        let ua = a.synthesize(&fine).unwrap();
        let num: f64 = ua.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        let d = (num / den).sqrt();
        assert!(d < 1e-6, "κ = {kappa}: {d}");
    }
}

#[test]
fn fine_grid_scheme_conserves_mass_and_phase() {
    let eps = 1.0 / 6.0;
    let (fine, g) = boxed(eps, 6, 6, 8);
    let v = potential();
    let fg = FineGridNls::new(&v, fine, 1.0).unwrap();
    let psi0 = WkbAssembler::new(dirac(), None, 3).assemble(eps, &packet(g, 0.4, 2.0), None, None).unwrap();
    let u0 = psi0.synthesize(&fine).unwrap();
    let out = fg.solve(&u0, 1000.0 * eps / 8.0, eps / 8.0, 10).unwrap();
    let m0 = fg.mass(&u0);
    for (_, u) in &out {
        assert!((fg.mass(u) - m0).abs() < 1e-12 * m0);
    }
    let rot: Vec<_> = u0.iter().map(|z| z * C::from_polar(1.0, 0.4)).collect();
    let a = fg.solve(&rot, 0.1, eps / 8.0, 1).unwrap().pop().unwrap().1;
    let c = fg.solve(&u0, 0.1, eps / 8.0, 1).unwrap().pop().unwrap().1;
    let e = a.iter().zip(&c).fold(0.0f64, |m, (x, y)| m.max((x - y * C::from_polar(1.0, 0.4)).norm()));
    assert!(e < 1e-12);
    let mut cheap = fine;
    cheap.cells.ppc = 4;
    assert!(FineGridNls::new(&v, cheap, 1.0).is_err());
}

#[test]
fn guards() {
    let eps = 1.0 / 6.0;
    let (_, g) = boxed(eps, 12, 18, 8);
    let solver = TwoScaleNls::new(&potential(), Anchor::K, eps, f64::NAN, 3, g).unwrap();
    let psi0 = WkbAssembler::new(dirac(), None, 3).assemble(eps, &packet(g, 0.5, 1.0), None, None).unwrap();
    assert!(matches!(
        solve_nls(&solver, &psi0, 0.1, eps / 8.0, 1, 0),
        Err(honeycomb_dirac::Error::BlowUp { .. })
    ));
    let other = WkbAssembler::new(dirac(), None, 4).assemble(eps, &packet(g, 0.5, 1.0), None, None).unwrap();
    assert!(solve_nls(&solver, &other, 0.1, eps / 8.0, 1, 0).is_err());
    assert!(TwoScaleNls::new(&potential(), Anchor::K, 0.0, 1.0, 3, g).is_err());
}
