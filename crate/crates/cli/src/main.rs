use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use honeycomb_dirac_cli::commands;
use honeycomb_dirac_cli::config::NlsScheme;
use honeycomb_dirac_cli::setup::Setup;
use honeycomb_dirac_cli::{emit_reports, parse_config, CliError, Results, SimConfig};

#[derive(Parser)]
#[command(name = "hcdirac", version, about = "Honeycomb Dirac points, effective Dirac dynamics and NLS convergence")]
struct Cli {
    /// JSON configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Plane-wave cutoff M.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Seed for random envelope phases.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<[T; 2], String> {
    let parts: Vec<&str> = s.split([',', 'x']).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.trim().parse().map_err(|_| format!("bad value `{a}`"))?,
            b.trim().parse().map_err(|_| format!("bad value `{b}`"))?,
        ]),
        _ => Err(format!("expected two comma-separated values, got `{s}`")),
    }
}

fn parse_scheme(s: &str) -> Result<NlsScheme, String> {
    match s {
        "two-scale" => Ok(NlsScheme::TwoScale),
        "fine-grid" => Ok(NlsScheme::FineGrid),
        _ => Err(format!("unknown scheme `{s}` (two-scale or fine-grid)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Band structure along Γ–K–M–Γ–K'.
    Bands {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        nbands: Option<usize>,
    },
    /// Dirac point, velocity and cone fit.
    DiracPoint,
    /// Cubic coupling tensor and its symmetry pattern.
    Coeffs,
    /// Effective nonlinear Dirac evolution.
    SolveDirac {
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<f64>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Grid nodes `N1,N2`.
        #[arg(long, value_parser = parse_pair::<usize>)]
        grid: Option<[usize; 2]>,
        /// Box lengths `L1,L2`.
        #[arg(long = "box", value_parser = parse_pair::<f64>)]
        box_size: Option<[f64; 2]>,
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Semiclassical NLS evolution from prepared or freshly assembled data.
    SolveNls {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<f64>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Time step; defaults to ε / nls.dt_per_eps.
        #[arg(long)]
        dt: Option<f64>,
        /// Supercell counts `CX,CY` (CY a multiple of 3).
        #[arg(long, value_parser = parse_pair::<usize>)]
        cells: Option<[usize; 2]>,
        #[arg(long)]
        ppc: Option<usize>,
        /// Two-scale snapshot stem (without extension) written by `prepare-data`.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<NlsScheme>,
        #[arg(long)]
        cell_cutoff: Option<usize>,
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Writes Ψ0^ε at order 0 or 1.
    PrepareData {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        order: Option<u8>,
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<f64>,
        #[arg(long, value_parser = parse_pair::<usize>)]
        cells: Option<[usize; 2]>,
    },
    /// Convergence study over the ε ladder; exit code 1 when a slope band fails.
    Converge {
        /// Comma-separated ε ladder.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        kappas: Option<Vec<f64>>,
        #[arg(long = "T")]
        t_final: Option<f64>,
    },
    /// Hartree averaging check along a ladder.
    HartreeCheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bands { .. } => "bands",
            Command::DiracPoint => "dirac-point",
            Command::Coeffs => "coeffs",
            Command::SolveDirac { .. } => "solve-dirac",
            Command::SolveNls { .. } => "solve-nls",
            Command::PrepareData { .. } => "prepare-data",
            Command::Converge { .. } => "converge",
            Command::HartreeCheck => "hartree-check",
        }
    }

    /// Folds command-line flags into the configuration.
    fn apply(&self, cfg: &mut SimConfig) {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        match self {
            Command::Bands { points, nbands } => {
                set(&mut cfg.bands.points_per_segment, points);
                set(&mut cfg.bands.nbands, nbands);
            }
            Command::SolveDirac {
                kappa,
                t_final,
                dt,
                grid,
                box_size,
                snapshots,
            } => {
                set(&mut cfg.kappa, kappa);
                set(&mut cfg.t_final, t_final);
                set(&mut cfg.dirac.dt, dt);
                set(&mut cfg.dirac.grid, grid);
                set(&mut cfg.dirac.box_size, box_size);
                set(&mut cfg.snapshots, snapshots);
            }
            Command::SolveNls {
                epsilon,
                kappa,
                t_final,
                dt,
                cells,
                ppc,
                scheme,
                cell_cutoff,
                snapshots,
                ..
            } => {
                set(&mut cfg.nls.epsilon, epsilon);
                set(&mut cfg.kappa, kappa);
                set(&mut cfg.t_final, t_final);
                set(&mut cfg.nls.cells, cells);
                set(&mut cfg.nls.ppc, ppc);
                set(&mut cfg.nls.scheme, scheme);
                set(&mut cfg.nls.cell_cutoff, cell_cutoff);
                set(&mut cfg.snapshots, snapshots);
                if let Some(dt) = dt {
                    cfg.nls.dt_per_eps = cfg.nls.epsilon / dt;
                }
            }
            Command::PrepareData {
                epsilon,
                order,
                kappa,
                cells,
            } => {
                set(&mut cfg.nls.epsilon, epsilon);
                set(&mut cfg.order, order);
                set(&mut cfg.kappa, kappa);
                set(&mut cfg.nls.cells, cells);
            }
            Command::Converge {
                epsilons,
                kappas,
                t_final,
            } => {
                set(&mut cfg.epsilons, epsilons);
                set(&mut cfg.kappas, kappas);
                set(&mut cfg.t_final, t_final);
            }
            Command::DiracPoint | Command::Coeffs | Command::HartreeCheck => {}
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(m) = cli.cutoff {
        cfg.cutoff = m;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cli.command.apply(&mut cfg);
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    let setup = || Setup::new(&cfg);
    let results: Results = match &cli.command {
        Command::Bands { .. } => commands::bands(&cfg)?,
        Command::DiracPoint => commands::dirac_point(&cfg, &setup()?)?,
        Command::Coeffs => commands::coeffs(&setup()?)?,
        Command::SolveDirac { .. } => commands::solve_dirac(&cfg, &setup()?, &out)?,
        Command::SolveNls { init, .. } => commands::solve_nls_command(&cfg, &setup()?, init.as_deref(), &out)?,
        Command::PrepareData { .. } => commands::prepare_data(&cfg, &setup()?, &out)?,
        Command::Converge { .. } => commands::converge(&cfg, &setup()?)?,
        Command::HartreeCheck => commands::hartree_check(&cfg, &setup()?)?,
    };
    let files = emit_reports(&cfg, cli.command.name(), &results, &out)?;
    for f in &files {
        println!("{}", f.display());
    }
    Ok(results.convergence.as_ref().map_or(true, |c| {
        for fit in &c.fits {
            eprintln!(
                "kappa {:+} order {}: slope {:.3} (band {}) {}",
                fit.kappa,
                fit.order,
                fit.slope,
                fit.band,
                if fit.pass { "pass" } else { "FAIL" }
            );
        }
        for f in &c.failures {
            eprintln!("stage failure (kappa {}, epsilon {:?}): {}", f.kappa, f.epsilon, f.reason);
        }
        c.pass
    }))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
