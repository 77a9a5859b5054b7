//! Convergence of the two-scale approximation to the semiclassical NLS across an ε ladder.
//!
//! For each κ the effective Dirac system is solved once on the envelope grid with a step that
//! divides every NLS step of the ladder, so approximate solutions are evaluated exactly at the
//! NLS snapshot times. The corrector sources are formed at every Dirac sample and drive the
//! linearised system for `β` with `β(0) = 0`.

use std::collections::BTreeMap;
use std::time::Instant;

use honeycomb_dirac::corrector::{build_theta_sources, build_u1_perp, CorrectorData, ProfileBasis, WkbAssembler};
use honeycomb_dirac::dirac2d::{
    solve_inhomogeneous_dirac, solve_nonlinear_dirac, step_count, DiracSolver, SampledTrajectory, SpinorField,
};
use honeycomb_dirac::nls::{solve_nls, TwoScaleNls};
use honeycomb_dirac::spectral::Grid2;
use honeycomb_dirac::twoscale::{build_commensurate_grid, CellCounts};
use serde::Serialize;

use crate::config::SimConfig;
use crate::error::{CliError, Result};
use crate::setup::{boundary_fraction, initial_amplitudes, Setup};

/// Edge strip (fraction of each side) used for the wrap-around diagnostic.
pub const WRAP_MARGIN: f64 = 0.1;

/// Cap on the number of Dirac samples of the shared time grid.
const MAX_DIRAC_STEPS: usize = 200_000;

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub kappa: f64,
    pub order: u8,
    pub epsilon: f64,
    /// `max_t ‖ψ(t) - Ψ_app(t)‖_{H^s_ε}` over the snapshot times.
    pub error: f64,
    /// Same maximum in `L²`.
    pub error_l2: f64,
    /// `error / max_t ‖Ψ_app(t)‖_{H^s_ε}`.
    pub relative_error: f64,
    pub worst_time: f64,
    /// Largest relative change of the conserved lift mass.
    pub mass_drift: f64,
    pub nls_steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub kappa: f64,
    pub order: u8,
    pub epsilons: Vec<f64>,
    /// Least-squares slope of `log e` against `log ε`.
    pub slope: f64,
    /// `log2(e(ε)/e(ε/2))`-type slopes between consecutive rungs.
    pub pairwise: Vec<f64>,
    /// `C` in `e ≈ C ε^slope`.
    pub constant: f64,
    /// Largest ε from which all pairwise slopes stay within 0.3 of the fitted slope.
    pub asymptotic_onset: Option<f64>,
    pub band: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageFailure {
    pub kappa: f64,
    pub epsilon: Option<f64>,
    pub order: Option<u8>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub norm_s: u32,
    pub t_final: f64,
    pub dirac_dt: f64,
    pub box_size: [f64; 2],
    pub rows: Vec<StudyRow>,
    pub fits: Vec<SlopeFit>,
    /// Largest share of `|α|²` in the edge strip over `[0, T]`, per κ.
    pub wrap_fraction: BTreeMap<String, f64>,
    pub failures: Vec<StageFailure>,
    pub pass: bool,
}

/// Least-squares slope and constant of `log e = log C + p log ε`.
pub fn fit_power_law(eps: &[f64], err: &[f64]) -> (f64, f64) {
    let n = eps.len() as f64;
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let p = sxy / sxx;
    (p, (my - p * mx).exp())
}

fn pairwise_slopes(eps: &[f64], err: &[f64]) -> Vec<f64> {
    eps.windows(2)
        .zip(err.windows(2))
        .map(|(e, r)| (r[0] / r[1]).ln() / (e[0] / e[1]).ln())
        .collect()
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Dirac data of one κ at the sample indices the ladder needs.
struct AmplitudeRun {
    alpha: BTreeMap<usize, SpinorField<f64>>,
    beta: BTreeMap<usize, SpinorField<f64>>,
    corr: BTreeMap<usize, CorrectorData<f64>>,
    wrap: f64,
}

fn amplitude_run(
    solver: &DiracSolver<f64>,
    setup: &Setup,
    basis: Option<&ProfileBasis<f64>>,
    alpha0: &SpinorField<f64>,
    t_end: f64,
    steps: usize,
    needed: &[usize],
) -> Result<AmplitudeRun> {
    let dt = t_end / steps as f64;
    let tr = solve_nonlinear_dirac(solver, alpha0, t_end, dt, steps)?;
    let wrap = tr
        .snapshots
        .iter()
        .map(|a| boundary_fraction(a, WRAP_MARGIN))
        .fold(0.0, f64::max);
    let mut run = AmplitudeRun {
        alpha: BTreeMap::new(),
        beta: BTreeMap::new(),
        corr: BTreeMap::new(),
        wrap,
    };
    for &k in needed {
        run.alpha.insert(k, tr.snapshots[k].clone());
    }
    let Some(basis) = basis else {
        return Ok(run);
    };
    let mut thetas = Vec::with_capacity(tr.snapshots.len());
    for (k, a) in tr.snapshots.iter().enumerate() {
        let c = build_u1_perp(solver, &setup.dp, basis, a)?;
        thetas.push(build_theta_sources(&solver.ops, basis, solver.sym.kappa, a, &c));
        if needed.binary_search(&k).is_ok() {
            run.corr.insert(k, c);
        }
    }
    let at = SampledTrajectory {
        t0: 0.0,
        dt,
        samples: tr.snapshots,
    };
    let tt = SampledTrajectory {
        t0: 0.0,
        dt,
        samples: thetas,
    };
    let betas = solve_inhomogeneous_dirac(solver, &SpinorField::zeros(alpha0.grid), &at, &tt, t_end, dt)?;
    for &k in needed {
        run.beta.insert(k, betas[k].clone());
    }
    Ok(run)
}

fn band_check(cfg: &SimConfig, order: u8, slope: f64) -> (String, bool) {
    if order == 0 {
        let [lo, hi] = cfg.acceptance.order0_slope;
        (format!("[{lo}, {hi}]"), slope >= lo && slope <= hi)
    } else {
        let m = cfg.acceptance.order1_min_slope;
        (format!(">= {m}"), slope >= m)
    }
}

/// Runs the full study. Stage failures are recorded and the remaining ε values proceed.
pub fn run_convergence_study(cfg: &SimConfig, setup: &Setup) -> Result<ConvergenceReport> {
    let t_end = cfg.t_final;
    let nc = &cfg.nls;
    let base = build_commensurate_grid(
        &setup.geom,
        nc.epsilon,
        CellCounts {
            cx: nc.cells[0],
            cy: nc.cells[1],
            ppc: nc.ppc,
        },
    )?;
    let coarse = Grid2::new(base.grid.l1, base.grid.l2, nc.coarse, nc.coarse)?;
    let alpha0 = initial_amplitudes(&cfg.envelope, coarse, cfg.envelope.width, cfg.seed);
    let need_corrector = cfg.orders.contains(&1);
    let basis = if need_corrector {
        Some(ProfileBasis::new(&setup.v, &setup.dp, None)?)
    } else {
        None
    };

    // Shared Dirac time grid: a multiple of every NLS step count.
    let nls_steps: Vec<usize> = cfg
        .epsilons
        .iter()
        .map(|&e| step_count(t_end, e / nc.dt_per_eps))
        .collect::<std::result::Result<_, _>>()?;
    let l = nls_steps.iter().fold(1, |a, &b| lcm(a, b.max(1)));
    let dirac_steps = l * ((t_end / cfg.dirac_dt_max / l as f64).ceil() as usize).max(1);
    if dirac_steps > MAX_DIRAC_STEPS {
        return Err(CliError::Config {
            field: "epsilons",
            reason: format!("ladder needs {dirac_steps} Dirac steps to share one time grid"),
        });
    }
    let dirac_dt = t_end / dirac_steps as f64;
    let mut needed: Vec<usize> = vec![0];
    for &n in &nls_steps {
        let stride = dirac_steps / n;
        needed.extend((1..=n).map(|k| k * stride));
    }
    needed.sort_unstable();
    needed.dedup();

    let mut failures = Vec::new();
    let mut runs: Vec<(f64, Option<AmplitudeRun>)> = Vec::new();
    let mut wrap_fraction = BTreeMap::new();
    for &kappa in &cfg.kappas {
        let solver = DiracSolver::new(setup.symbol(kappa), coarse);
        match amplitude_run(&solver, setup, basis.as_ref(), &alpha0, t_end, dirac_steps, &needed) {
            Ok(r) => {
                wrap_fraction.insert(format!("{kappa}"), r.wrap);
                runs.push((kappa, Some(r)));
            }
            Err(e) => {
                failures.push(StageFailure {
                    kappa,
                    epsilon: None,
                    order: None,
                    reason: e.to_string(),
                });
                runs.push((kappa, None));
            }
        }
    }

    let asm = WkbAssembler::new(&setup.dp, basis.as_ref(), nc.cell_cutoff);
    let mut rows = Vec::new();
    for (ie, &eps) in cfg.epsilons.iter().enumerate() {
        let start = Instant::now();
        let solver = base
            .rescaled(eps)
            .map_err(CliError::from)
            .and_then(|_| Ok(TwoScaleNls::new(&setup.v, setup.dp.anchor, eps, 0.0, nc.cell_cutoff, coarse)?));
        let mut solver = match solver {
            Ok(s) => s,
            Err(e) => {
                for &(kappa, _) in &runs {
                    failures.push(StageFailure {
                        kappa,
                        epsilon: Some(eps),
                        order: None,
                        reason: e.to_string(),
                    });
                }
                continue;
            }
        };
        let build_seconds = start.elapsed().as_secs_f64();
        let n = nls_steps[ie];
        let stride = dirac_steps / n;
        for (kappa, run) in &runs {
            let Some(run) = run else { continue };
            solver.kappa = *kappa;
            for &order in &cfg.orders {
                let t0 = Instant::now();
                let approx = |k: usize| {
                    let a = &run.alpha[&k];
                    if order == 0 {
                        asm.assemble(eps, a, None, None)
                    } else {
                        asm.assemble(eps, a, Some(&run.beta[&k]), Some(&run.corr[&k]))
                    }
                };
                let outcome = (|| -> Result<StudyRow> {
                    let psi0 = approx(0)?;
                    let tr = solve_nls(&solver, &psi0, t_end, t_end / n as f64, cfg.snapshots, cfg.norm_s)?;
                    let (mut err, mut err_l2, mut worst, mut norm_max) = (0.0f64, 0.0f64, 0.0, 0.0f64);
                    for s in &tr.snapshots {
                        let k = (s.t / t_end * n as f64).round() as usize * stride;
                        let app = approx(k)?;
                        let d = s.diff(&app)?;
                        let e = d.scaled_norm(cfg.norm_s)?;
                        err_l2 = err_l2.max(d.scaled_norm(0)?);
                        norm_max = norm_max.max(app.scaled_norm(cfg.norm_s)?);
                        if e > err {
                            err = e;
                            worst = s.t;
                        }
                    }
                    let m0 = tr.observables[0].lift_mass;
                    let drift = tr.observables.iter().map(|o| (o.lift_mass - m0).abs() / m0).fold(0.0, f64::max);
                    Ok(StudyRow {
                        kappa: *kappa,
                        order,
                        epsilon: eps,
                        error: err,
                        error_l2: err_l2,
                        relative_error: err / norm_max,
                        worst_time: worst,
                        mass_drift: drift,
                        nls_steps: n,
                        seconds: t0.elapsed().as_secs_f64() + build_seconds,
                    })
                })();
                match outcome {
                    Ok(r) => rows.push(r),
                    Err(e) => failures.push(StageFailure {
                        kappa: *kappa,
                        epsilon: Some(eps),
                        order: Some(order),
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }

    let mut fits = Vec::new();
    for &kappa in &cfg.kappas {
        for &order in &cfg.orders {
            let sel: Vec<&StudyRow> = rows.iter().filter(|r| r.kappa == kappa && r.order == order).collect();
            let eps: Vec<f64> = sel.iter().map(|r| r.epsilon).collect();
            let err: Vec<f64> = sel.iter().map(|r| r.error).collect();
            let (slope, constant) = if sel.len() >= 2 {
                fit_power_law(&eps, &err)
            } else {
                (f64::NAN, f64::NAN)
            };
            let pairwise = pairwise_slopes(&eps, &err);
            let onset = (0..pairwise.len())
                .find(|&i| pairwise[i..].iter().all(|p| (p - slope).abs() < 0.3))
                .map(|i| eps[i]);
            let (band, pass) = band_check(cfg, order, slope);
            fits.push(SlopeFit {
                kappa,
                order,
                epsilons: eps,
                slope,
                pairwise,
                constant,
                asymptotic_onset: onset,
                band,
                pass,
            });
        }
    }
    let pass = failures.is_empty() && fits.iter().all(|f| f.pass);
    Ok(ConvergenceReport {
        norm_s: cfg.norm_s,
        t_final: t_end,
        dirac_dt,
        box_size: [coarse.l1, coarse.l2],
        rows,
        fits,
        wrap_fraction,
        failures,
        pass,
    })
}
