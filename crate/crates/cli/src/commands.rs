//! Subcommand bodies. Each takes the effective configuration and returns the results to emit;
//! snapshots are written directly into the output directory.

use std::path::Path;

use honeycomb_dirac::bloch::{band_structure, compute_lambda_sharp, verify_cone};
use honeycomb_dirac::corrector::{build_u1_perp, ProfileBasis, WkbAssembler, WkbField};
use honeycomb_dirac::dirac2d::{local_existence_time, solve_nonlinear_dirac, DiracSolver, SpinorField};
use honeycomb_dirac::effcoef::{hartree_limit_check, parseval_identities};
use honeycomb_dirac::lattice::default_path;
use honeycomb_dirac::nls::{solve_nls, FineGridNls, TwoScaleNls};
use honeycomb_dirac::spectral::Grid2;
use honeycomb_dirac::twoscale::{build_commensurate_grid, CellCounts, CommensurateGrid};
use serde_json::json;

use crate::config::{NlsScheme, SimConfig};
use crate::error::{CliError, Result};
use crate::report::{CoeffsOutput, DiracPointReport, FineGridObservables, HartreeOutput, Observables, Results};
use crate::setup::{initial_amplitudes, Setup};
use crate::snapshot::{read_two_scale, write_scalar, write_spinor, write_two_scale};
use crate::study::run_convergence_study;

pub fn bands(cfg: &SimConfig) -> Result<Results> {
    let geom = honeycomb_dirac::lattice::build_lattice(cfg.lattice_a)?;
    let v = cfg.potential.build(&geom)?;
    let path = default_path(&geom, cfg.bands.points_per_segment)?;
    let rows = band_structure(&v, &path, cfg.cutoff, cfg.bands.nbands)?;
    Ok(Results {
        bands: Some(rows),
        ..Results::default()
    })
}

pub fn dirac_point(cfg: &SimConfig, setup: &Setup) -> Result<Results> {
    let lambda = compute_lambda_sharp(&setup.dp)?;
    let radii: Vec<f64> = cfg.cone_radii.iter().map(|r| r * setup.geom.q).collect();
    let cone = verify_cone(&setup.v, &setup.dp, &radii, cfg.cutoff, cfg.cone_angles)?;
    Ok(Results {
        dirac_point: Some(DiracPointReport::new(setup.dp.summary(), &lambda, cone)),
        ..Results::default()
    })
}

pub fn coeffs(setup: &Setup) -> Result<Results> {
    Ok(Results {
        coeffs: Some(CoeffsOutput {
            coefficients: setup.coeffs.report(),
            parseval: parseval_identities(&setup.dp),
        }),
        ..Results::default()
    })
}

fn snapshot_name(prefix: &str, i: usize) -> String {
    format!("{prefix}_{i:04}")
}

pub fn solve_dirac(cfg: &SimConfig, setup: &Setup, outdir: &Path) -> Result<Results> {
    let d = &cfg.dirac;
    let grid = Grid2::new(d.box_size[0], d.box_size[1], d.grid[0], d.grid[1])?;
    let alpha0 = initial_amplitudes(&cfg.envelope, grid, d.width, cfg.seed);
    let solver = DiracSolver::new(setup.symbol(cfg.kappa), grid);
    let t_exist = local_existence_time(&solver.ops, &alpha0, cfg.norm_s.max(2), &solver.sym, cfg.c_s)?;
    let tr = solve_nonlinear_dirac(&solver, &alpha0, cfg.t_final, d.dt, cfg.snapshots)?;
    std::fs::create_dir_all(outdir).map_err(crate::error::io_err(outdir))?;
    let mut written = Vec::new();
    for (i, s) in tr.snapshots.iter().enumerate() {
        let name = snapshot_name("alpha", i);
        write_spinor(&outdir.join(&name), s)?;
        written.extend([format!("{name}.bin"), format!("{name}.json")]);
    }
    let m0 = tr.observables[0].mass;
    let drift = tr.observables.iter().map(|o| (o.mass - m0).abs() / m0).fold(0.0, f64::max);
    Ok(Results {
        observables: Some(Observables::Dirac(tr.observables)),
        extra: vec![(
            "dirac_run.json".into(),
            json!({
                "kappa": cfg.kappa,
                "b1": solver.sym.b1(),
                "b2": solver.sym.b2(),
                "contraction_time": t_exist,
                "contraction_time_note": "diagnostic with configured algebra constant c_s, not a guaranteed existence time",
                "c_s": cfg.c_s,
                "mass_drift": drift,
            }),
        )],
        written,
        ..Results::default()
    })
}

fn nls_grid(cfg: &SimConfig, setup: &Setup) -> Result<(CommensurateGrid<f64>, Grid2<f64>)> {
    let n = &cfg.nls;
    let fine = build_commensurate_grid(
        &setup.geom,
        n.epsilon,
        CellCounts {
            cx: n.cells[0],
            cy: n.cells[1],
            ppc: n.ppc,
        },
    )?;
    let coarse = Grid2::new(fine.grid.l1, fine.grid.l2, n.coarse, n.coarse)?;
    Ok((fine, coarse))
}

/// `Ψ0^ε` at the configured order with `β(0) = 0`.
pub fn prepare_initial_data(cfg: &SimConfig, setup: &Setup) -> Result<WkbField<f64>> {
    let (_, coarse) = nls_grid(cfg, setup)?;
    let alpha0 = initial_amplitudes(&cfg.envelope, coarse, cfg.envelope.width, cfg.seed);
    if cfg.order == 0 {
        let asm = WkbAssembler::new(&setup.dp, None, cfg.nls.cell_cutoff);
        return Ok(asm.assemble(cfg.nls.epsilon, &alpha0, None, None)?);
    }
    let basis = ProfileBasis::new(&setup.v, &setup.dp, None)?;
    let solver = DiracSolver::new(setup.symbol(cfg.kappa), coarse);
    let corr = build_u1_perp(&solver, &setup.dp, &basis, &alpha0)?;
    let beta0 = SpinorField::zeros(coarse);
    let asm = WkbAssembler::new(&setup.dp, Some(&basis), cfg.nls.cell_cutoff);
    Ok(asm.assemble(cfg.nls.epsilon, &alpha0, Some(&beta0), Some(&corr))?)
}

pub fn prepare_data(cfg: &SimConfig, setup: &Setup, outdir: &Path) -> Result<Results> {
    let psi0 = prepare_initial_data(cfg, setup)?;
    std::fs::create_dir_all(outdir).map_err(crate::error::io_err(outdir))?;
    let name = format!("psi0_order{}", cfg.order);
    write_two_scale(&outdir.join(&name), &psi0)?;
    Ok(Results {
        extra: vec![(
            "prepare.json".into(),
            json!({
                "epsilon": cfg.nls.epsilon,
                "order": cfg.order,
                "mass": psi0.mass()?,
                "lift_mass": psi0.lift_mass(),
                "norm_s": psi0.scaled_norm(cfg.norm_s)?,
            }),
        )],
        written: vec![format!("{name}.bin"), format!("{name}.json")],
        ..Results::default()
    })
}

pub fn solve_nls_command(cfg: &SimConfig, setup: &Setup, init: Option<&Path>, outdir: &Path) -> Result<Results> {
    let (fine, _) = nls_grid(cfg, setup)?;
    let psi0 = match init {
        Some(p) => read_two_scale(p)?,
        None => prepare_initial_data(cfg, setup)?,
    };
    let eps = cfg.nls.epsilon;
    if (psi0.eps - eps).abs() > 1e-12 * eps {
        return Err(CliError::Config {
            field: "nls.epsilon",
            reason: format!("initial data was prepared at ε = {}", psi0.eps),
        });
    }
    let dt = eps / cfg.nls.dt_per_eps;
    std::fs::create_dir_all(outdir).map_err(crate::error::io_err(outdir))?;
    let mut written = Vec::new();
    let observables = match cfg.nls.scheme {
        NlsScheme::TwoScale => {
            let solver = TwoScaleNls::new(&setup.v, setup.dp.anchor, eps, cfg.kappa, psi0.cell.cutoff(), psi0.grid)?;
            let tr = solve_nls(&solver, &psi0, cfg.t_final, dt, cfg.snapshots, cfg.norm_s)?;
            for (i, s) in tr.snapshots.iter().enumerate() {
                let name = snapshot_name("psi", i);
                write_two_scale(&outdir.join(&name), s)?;
                written.extend([format!("{name}.bin"), format!("{name}.json")]);
            }
            Observables::Nls(tr.observables)
        }
        NlsScheme::FineGrid => {
            let solver = FineGridNls::new(&setup.v, fine, cfg.kappa)?;
            let u0 = psi0.synthesize(&fine)?;
            let out = solver.solve(&u0, cfg.t_final, dt, cfg.snapshots)?;
            let mut obs = Vec::with_capacity(out.len());
            for (i, (t, u)) in out.iter().enumerate() {
                let t = *t;
                let name = snapshot_name("psi_fine", i);
                write_scalar(&outdir.join(&name), &fine, u, t)?;
                written.extend([format!("{name}.bin"), format!("{name}.json")]);
                obs.push(FineGridObservables {
                    t,
                    mass: solver.mass(u),
                    sup: u.iter().map(|z| z.norm()).fold(0.0, f64::max),
                });
            }
            Observables::FineGrid(obs)
        }
    };
    Ok(Results {
        observables: Some(observables),
        written,
        ..Results::default()
    })
}

pub fn converge(cfg: &SimConfig, setup: &Setup) -> Result<Results> {
    Ok(Results {
        convergence: Some(run_convergence_study(cfg, setup)?),
        ..Results::default()
    })
}

pub fn hartree_check(cfg: &SimConfig, setup: &Setup) -> Result<Results> {
    let h = &cfg.hartree;
    let base = build_commensurate_grid(
        &setup.geom,
        h.epsilons[0],
        CellCounts {
            cx: h.cells[0],
            cy: h.cells[1],
            ppc: h.ppc,
        },
    )?;
    let coarse = Grid2::new(base.grid.l1, base.grid.l2, h.coarse, h.coarse)?;
    let alpha = initial_amplitudes(&cfg.envelope, coarse, h.width, cfg.seed);
    let report = hartree_limit_check(&alpha, &setup.dp, &base, &h.epsilons)?;
    Ok(Results {
        hartree: Some(HartreeOutput {
            monotone: report.monotone(),
            final_cross_ratio: report.final_cross_ratio(),
            parseval: parseval_identities(&setup.dp),
            report,
        }),
        ..Results::default()
    })
}
