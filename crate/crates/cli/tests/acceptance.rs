//! Acceptance suite: one line per criterion, then a single assertion over all of them.
//! Run with `cargo test -p honeycomb-dirac-cli --test acceptance -- --nocapture`.

use std::time::Instant;

use honeycomb_dirac::bloch::{compute_lambda_sharp, verify_cone};
use honeycomb_dirac::corrector::WkbAssembler;
use honeycomb_dirac::dirac2d::{
    contraction_time, gaussian_envelopes, local_existence_time, solve_nonlinear_dirac, DiracSolver, SpectralOps,
    SpinorField,
};
use honeycomb_dirac::effcoef::{coupling_tensor, parseval_identities};
use honeycomb_dirac::lattice::{build_lattice, dot, rotate_dual_index, Anchor};
use honeycomb_dirac::nls::{solve_nls, TwoScaleNls};
use honeycomb_dirac::scalar::C;
use honeycomb_dirac::spectral::Grid2;
use honeycomb_dirac::twoscale::{build_commensurate_grid, CellCounts};
use honeycomb_dirac_cli::commands::hartree_check;
use honeycomb_dirac_cli::setup::Setup;
use honeycomb_dirac_cli::study::run_convergence_study;
use honeycomb_dirac_cli::SimConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn run(id: usize, name: &'static str, budget: Option<f64>, f: impl FnOnce() -> Outcome) -> Line {
    let t = Instant::now();
    let r = f();
    let seconds = t.elapsed().as_secs_f64();
    let (mut pass, mut detail) = match r {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if seconds > b {
            pass = false;
            detail.push_str(&format!("; runtime {seconds:.1}s over budget {b}s"));
        }
    }
    let line = Line {
        id,
        name,
        pass,
        detail,
        seconds,
    };
    println!(
        "criterion {}: {} [{}] ({:.1}s) {}",
        line.id,
        if line.pass { "PASS" } else { "FAIL" },
        line.name,
        line.seconds,
        line.detail
    );
    line
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn lattice_suite() -> Outcome {
    let g = build_lattice(1.0f64).map_err(e)?;
    let tau = std::f64::consts::TAU;
    let mut dual: f64 = 0.0;
    for (i, v) in [g.v1, g.v2].iter().enumerate() {
        for (j, k) in [g.k1, g.k2].iter().enumerate() {
            let want = if i == j { tau } else { 0.0 };
            dual = dual.max((dot(*v, *k) - want).abs());
        }
    }
    let r = g.rotation;
    let mut r3 = [[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..3 {
        let mut n = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                n[a][b] = (0..2).map(|c| r[a][c] * r3[c][b]).sum();
            }
        }
        r3 = n;
    }
    let r3_err = (r3[0][0] - 1.0).abs().max(r3[0][1].abs()).max(r3[1][0].abs()).max((r3[1][1] - 1.0).abs());
    let m = 12i64;
    let mut seen = std::collections::HashSet::new();
    let mut cyclic = true;
    for a in -m..=m {
        for b in -m..=m {
            for anchor in [Anchor::K, Anchor::KPrime] {
                let x = rotate_dual_index((a, b), anchor);
                cyclic &= rotate_dual_index(rotate_dual_index(x, anchor), anchor) == (a, b);
                if anchor == Anchor::K {
                    seen.insert(x);
                }
            }
        }
    }
    let injective = seen.len() == ((2 * m + 1) * (2 * m + 1)) as usize;
    let pass = dual < 1e-12 && r3_err < 1e-12 && injective && cyclic;
    Ok((
        pass,
        format!("max|v_i·k_j - 2πδ_ij| = {dual:.1e}, |R³ - I| = {r3_err:.1e}, index map injective {injective}, cube identity {cyclic}"),
    ))
}

fn dirac_point_suite() -> Outcome {
    let cfg = SimConfig::default();
    let s = Setup::new(&cfg).map_err(e)?;
    let dp = &s.dp;
    let gap_rel = dp.gap / (1.0 + dp.mustar.abs());
    let tau = s.geom.tau;
    let [r1, r2] = dp.rotation_eigenvalues;
    let sector = (r1 - tau).norm().max((r2 - tau.conj()).norm());
    let pass = gap_rel < 1e-8 && sector < 1e-8 && dp.inversion_mismatch < 1e-10;
    Ok((
        pass,
        format!(
            "μ* = {:.10}, gap/(1+|μ*|) = {gap_rel:.1e}, rotation eigenvalue error {sector:.1e}, inversion mismatch {:.1e}",
            dp.mustar, dp.inversion_mismatch
        ),
    ))
}

fn velocity_suite(s: &Setup) -> Outcome {
    let dp = &s.dp;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut diag: f64 = 0.0;
    for _ in 0..8 {
        let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        for n in 1..=2 {
            let v = dp.derivative_overlap(n, n, 0) * z[0] + dp.derivative_overlap(n, n, 1) * z[1];
            diag = diag.max(v.norm());
        }
    }
    let lam = compute_lambda_sharp(dp).map_err(e)?;
    let q = s.geom.q;
    let cone = verify_cone(&s.v, dp, &[1e-2 * q, 5e-3 * q, 1e-4 * q], 12, 8).map_err(e)?;
    let smallest = cone
        .radii
        .iter()
        .min_by(|a, b| a.radius.total_cmp(&b.radius))
        .ok_or("no radii")?;
    let slope_err = (cone.fitted_slope() / lam.lambda.norm() - 1.0).abs();
    let pass = diag < 1e-10 && lam.mismatch < 1e-8 && slope_err < 0.02 && smallest.anisotropy < 0.02;
    Ok((
        pass,
        format!(
            "max|⟨Φn, ζ·∇Φn⟩| = {diag:.1e}, extraction mismatch {:.1e}, |λ| = {:.6}, cone slope off by {:.2}%, anisotropy {:.2}% at r = 1e-4 q",
            lam.mismatch,
            lam.lambda.norm(),
            100.0 * slope_err,
            100.0 * smallest.anisotropy
        ),
    ))
}

fn tensor_suite(s: &Setup) -> Outcome {
    let c = coupling_tensor(&s.dp, 4).map_err(e)?;
    let forbidden = c.forbidden_max();
    let eq = c.equality_defect();
    let pass = forbidden < 1e-9 && eq < 1e-10 && c.b2 <= c.b1 && c.refinement_change < 1e-10;
    Ok((
        pass,
        format!(
            "b1 = {:.10}, b2 = {:.10}, forbidden/b1 = {forbidden:.1e}, equality defect {eq:.1e}, oversample-doubling change {:.1e}",
            c.b1, c.b2, c.refinement_change
        ),
    ))
}

fn dirac_solver_suite(s: &Setup) -> Outcome {
    let g = Grid2::new(16.0, 16.0, 64, 64).map_err(e)?;
    let init = |mass| gaussian_envelopes(g, 1.2, [[7.0, 8.0], [9.0, 8.5]], [C::new(1.0, 0.0), C::new(0.3, 0.8)], mass);
    let solver = DiracSolver::new(s.symbol(1.0), g);
    let tr = solve_nonlinear_dirac(&solver, &init(1.0), 1.0, 1e-3, 10).map_err(e)?;
    let m0 = tr.observables[0].mass;
    let drift = tr.observables.iter().map(|o| (o.mass - m0).abs() / m0).fold(0.0, f64::max);

    let energy_drift = |dt: f64, kappa: f64| -> Result<f64, String> {
        let sv = DiracSolver::new(s.symbol(kappa), g);
        let tr = solve_nonlinear_dirac(&sv, &init(2.0), 0.5, dt, 10).map_err(e)?;
        let e0 = tr.observables[0].energy;
        Ok(tr.observables.iter().map(|o| (o.energy - e0).abs()).fold(0.0, f64::max))
    };
    let mut ratios = Vec::new();
    for kappa in [1.0, -1.0] {
        ratios.push(energy_drift(2e-2, kappa)? / energy_drift(1e-2, kappa)?);
    }
    let f0 = init(2.0);
    let last = |dt: f64| -> Result<SpinorField<f64>, String> {
        let mut t = solve_nonlinear_dirac(&solver, &f0, 0.5, dt, 1).map_err(e)?;
        t.snapshots.pop().ok_or_else(|| "no snapshot".to_string())
    };
    let (a, b, r) = (last(0.02)?, last(0.01)?, last(0.0025)?);
    let order = (a.l2_diff(&r) / b.l2_diff(&r)).log2();

    let lin = DiracSolver::new(s.symbol(0.0), g);
    let mut fwd = init(1.0);
    for _ in 0..100 {
        lin.strang_step(&mut fwd, 1e-2);
    }
    for _ in 0..100 {
        lin.strang_step(&mut fwd, -1e-2);
    }
    let rev = fwd.max_diff(&init(1.0));
    let pass = drift < 1e-10 && ratios.iter().all(|r| (3.4..4.6).contains(r)) && (order - 2.0).abs() < 0.1 && rev < 1e-11;
    Ok((
        pass,
        format!(
            "mass drift {drift:.1e} over T = 1, energy-drift ratios {:.2} / {:.2} (κ = ±1), Strang order {order:.3}, reversibility {rev:.1e}",
            ratios[0], ratios[1]
        ),
    ))
}

fn nls_suite(s: &Setup) -> Outcome {
    let eps = 1.0 / 6.0;
    let base = build_commensurate_grid(&s.geom, eps, CellCounts { cx: 12, cy: 18, ppc: 8 }).map_err(e)?;
    let g = Grid2::new(base.grid.l1, base.grid.l2, 12, 12).map_err(e)?;
    let c = [g.l1 / 2.0, g.l2 / 2.0];
    let packet = gaussian_envelopes(g, 0.5, [[c[0] - 0.2, c[1]], [c[0] + 0.2, c[1] + 0.1]], [C::new(1.0, 0.0), C::new(0.3, 0.6)], 4.0);
    let solver = TwoScaleNls::new(&s.v, s.dp.anchor, eps, 1.0, 4, g).map_err(e)?;
    let psi0 = WkbAssembler::new(&s.dp, None, 4).assemble(eps, &packet, None, None).map_err(e)?;
    let tr = solve_nls(&solver, &psi0, 1000.0 * eps / 8.0, eps / 8.0, 10, 0).map_err(e)?;
    let m0 = tr.observables[0].lift_mass;
    let drift = tr.observables.iter().map(|o| (o.lift_mass - m0).abs() / m0).fold(0.0, f64::max);

    let gb = Grid2::new(base.grid.l1, base.grid.l2, 8, 8).map_err(e)?;
    let bloch = TwoScaleNls::new(&s.v, s.dp.anchor, eps, 0.0, 5, gb).map_err(e)?;
    let asm = WkbAssembler::new(&s.dp, None, 5);
    let one = SpinorField::from_fn(gb, |_, _| (C::new(1.0, 0.0), C::new(0.0, 0.0)));
    let tr = solve_nls(&bloch, &asm.assemble(eps, &one, None, None).map_err(e)?, 0.5, eps / 8.0, 4, 0).map_err(e)?;
    let mut err: f64 = 0.0;
    for snap in &tr.snapshots {
        let mut exact = one.clone();
        exact.t = snap.t;
        let want = asm.assemble(eps, &exact, None, None).map_err(e)?;
        err = err.max(snap.diff(&want).map_err(e)?.scaled_norm(0).map_err(e)? / want.scaled_norm(0).map_err(e)?);
    }
    Ok((
        drift < 1e-12 && err < 1e-6,
        format!("mass drift {drift:.1e} over 1000 steps, Bloch-mode error {err:.1e} at ε = 1/6, dt = ε/8, T = 0.5"),
    ))
}

fn convergence_suite(s: &Setup) -> Outcome {
    let cfg = SimConfig::default();
    let r = run_convergence_study(&cfg, s).map_err(e)?;
    let fits: Vec<String> = r
        .fits
        .iter()
        .map(|f| format!("κ = {:+} order {}: slope {:.3} ({})", f.kappa, f.order, f.slope, f.band))
        .collect();
    let mut detail = fits.join(", ");
    for f in &r.failures {
        detail.push_str(&format!("; stage failure at ε = {:?}: {}", f.epsilon, f.reason));
    }
    Ok((r.pass, detail))
}

fn hartree_suite(s: &Setup) -> Outcome {
    let p = parseval_identities(&s.dp);
    let cfg = SimConfig::default();
    let h = hartree_check(&cfg, s).map_err(e)?.hartree.ok_or("no report")?;
    let cross: Vec<f64> = h.report.rows.iter().map(|r| r.cross).collect();
    let monotone = cross.windows(2).all(|w| w[1] < w[0]);
    let sq = p.sum_sqr.0.hypot(p.sum_sqr.1);
    let pass = (p.sum_abs_sqr - 1.0).abs() < 1e-12 && sq < 1e-10 && monotone && h.final_cross_ratio < 0.05;
    Ok((
        pass,
        format!(
            "Σ|c|² - 1 = {:.1e}, |Σc²| = {sq:.1e}, cross-sector sup {:?} (monotone {monotone}), final ratio {:.2}%",
            p.sum_abs_sqr - 1.0,
            cross,
            100.0 * h.final_cross_ratio
        ),
    ))
}

fn contraction_suite(s: &Setup) -> Outcome {
    let g = Grid2::new(16.0, 16.0, 32, 32).map_err(e)?;
    let ops = SpectralOps::new(g);
    let f = gaussian_envelopes(g, 1.2, [[7.0, 8.0], [9.0, 8.5]], [C::new(1.0, 0.0), C::new(0.3, 0.8)], 1.0);
    let sym = s.symbol(1.0);
    let c_s = 1.0;
    let t1 = local_existence_time(&ops, &f, 2, &sym, c_s).map_err(e)?;
    let t2 = local_existence_time(&ops, &f.scaled(2.0), 2, &sym, c_s).map_err(e)?;
    let r1 = ops.scaled_sobolev_norm(&f.a1, 2, 1.0);
    let r2 = ops.scaled_sobolev_norm(&f.a2, 2, 1.0);
    let r = (r1 * r1 + r2 * r2).sqrt();
    let formula = 1.0 / (8.0 * (sym.b1() + 2.0 * sym.b2()) * r * r * c_s * c_s);
    let pass = t1 == formula && t1 == 4.0 * t2 && contraction_time(2.0 * r, sym.b1(), sym.b2(), c_s) * 4.0 == t1;
    Ok((pass, format!("T = {t1:.12e} (formula {formula:.12e}), T(R)/T(2R) = {}", t1 / t2)))
}

#[test]
fn acceptance() {
    let mut lines = vec![run(1, "lattice and symmetry", Some(1.0), lattice_suite)];
    lines.push(run(2, "Dirac point", Some(10.0), dirac_point_suite));
    let setup = Setup::new(&SimConfig::default()).expect("setup");
    lines.push(run(3, "velocity identities and cone", None, || velocity_suite(&setup)));
    lines.push(run(4, "coupling tensor", Some(30.0), || tensor_suite(&setup)));
    lines.push(run(5, "effective Dirac solver", None, || dirac_solver_suite(&setup)));
    lines.push(run(6, "NLS solver", None, || nls_suite(&setup)));
    lines.push(run(7, "convergence study", Some(3600.0), || convergence_suite(&setup)));
    lines.push(run(8, "Hartree averaging", None, || hartree_suite(&setup)));
    lines.push(run(9, "contraction-time diagnostic", None, || contraction_suite(&setup)));
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!("acceptance: {} of {} criteria pass", lines.len() - failed.len(), lines.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
