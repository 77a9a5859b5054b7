//! Report files. Numbers are written with shortest round-trip formatting, so every `f64`
//! survives a text round trip bit for bit.

use std::path::{Path, PathBuf};

use honeycomb_dirac::bloch::{BandRow, ConeFitReport, DiracPointSummary, LambdaReport};
use honeycomb_dirac::dirac2d::DiracObservables;
use honeycomb_dirac::effcoef::{CoefficientsReport, HartreeReport, ParsevalReport};
use honeycomb_dirac::nls::NlsObservables;
use serde::Serialize;

use crate::config::SimConfig;
use crate::error::{io_err, Result};
use crate::study::ConvergenceReport;

pub const BANDS_CSV: &str = "bands.csv";
pub const DIRAC_POINT_JSON: &str = "dirac_point.json";
pub const COEFFS_JSON: &str = "coeffs.json";
pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const CONVERGENCE_JSON: &str = "convergence.json";
pub const HARTREE_CSV: &str = "hartree.csv";
pub const HARTREE_JSON: &str = "hartree.json";
pub const OBSERVABLES_CSV: &str = "observables.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct DiracPointReport {
    pub mustar: f64,
    pub gap: f64,
    pub lambda_sharp_re: f64,
    pub lambda_sharp_im: f64,
    pub lambda_modulus: f64,
    pub lambda_cross_re: f64,
    pub lambda_cross_im: f64,
    pub lambda_fourier_sum_re: f64,
    pub lambda_fourier_sum_im: f64,
    pub extraction_mismatch: f64,
    pub diagonal_overlap: f64,
    pub assumption_holds: bool,
    pub cone: ConeFitReport,
    pub summary: DiracPointSummary,
}

impl DiracPointReport {
    pub fn new(summary: DiracPointSummary, lambda: &LambdaReport<f64>, cone: ConeFitReport) -> Self {
        Self {
            mustar: summary.mustar,
            gap: summary.gap,
            lambda_sharp_re: lambda.lambda.re,
            lambda_sharp_im: lambda.lambda.im,
            lambda_modulus: lambda.lambda.norm(),
            lambda_cross_re: lambda.lambda_cross.re,
            lambda_cross_im: lambda.lambda_cross.im,
            lambda_fourier_sum_re: lambda.fourier_sum.re,
            lambda_fourier_sum_im: lambda.fourier_sum.im,
            extraction_mismatch: lambda.mismatch,
            diagonal_overlap: lambda.diagonal_overlap,
            assumption_holds: lambda.assumption_holds,
            cone,
            summary,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoeffsOutput {
    #[serde(flatten)]
    pub coefficients: CoefficientsReport,
    pub parseval: ParsevalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct HartreeOutput {
    #[serde(flatten)]
    pub report: HartreeReport,
    pub monotone: bool,
    pub final_cross_ratio: f64,
    pub parseval: ParsevalReport,
}

/// Time series written to `observables.csv`.
#[derive(Debug, Clone)]
pub enum Observables {
    Dirac(Vec<DiracObservables>),
    Nls(Vec<NlsObservables>),
    FineGrid(Vec<FineGridObservables>),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FineGridObservables {
    pub t: f64,
    pub mass: f64,
    pub sup: f64,
}

/// Everything a command may produce; absent parts are not written.
#[derive(Debug, Clone, Default)]
pub struct Results {
    pub bands: Option<Vec<BandRow<f64>>>,
    pub dirac_point: Option<DiracPointReport>,
    pub coeffs: Option<CoeffsOutput>,
    pub convergence: Option<ConvergenceReport>,
    pub hartree: Option<HartreeOutput>,
    pub observables: Option<Observables>,
    /// Additional JSON documents `(file name, value)`.
    pub extra: Vec<(String, serde_json::Value)>,
    /// Files already written by the command (snapshots), relative to the output directory.
    pub written: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub library: &'static str,
    pub library_version: &'static str,
    pub config_hash: String,
    pub config: &'a SimConfig,
    pub files: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serialises");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(f))
}

/// Column headers of `bands.csv` for `n` bands.
pub fn bands_header(n: usize) -> Vec<String> {
    let mut h = vec!["kx".to_string(), "ky".into(), "arclength".into()];
    h.extend((0..n).map(|i| format!("mu_{i}")));
    h
}

pub const DIRAC_OBSERVABLES_HEADER: [&str; 5] = ["t", "mass", "energy", "sup_alpha1", "sup_alpha2"];
pub const NLS_OBSERVABLES_HEADER: [&str; 5] = ["t", "mass", "lift_mass", "sup", "norm_s"];
pub const FINE_OBSERVABLES_HEADER: [&str; 3] = ["t", "mass", "sup"];
pub const CONVERGENCE_HEADER: [&str; 11] = [
    "kappa",
    "order",
    "epsilon",
    "error",
    "error_l2",
    "relative_error",
    "worst_time",
    "mass_drift",
    "nls_steps",
    "seconds",
    "slope",
];
pub const HARTREE_HEADER: [&str; 6] = ["epsilon", "deviation", "cross", "target", "imag_max", "dropped"];

fn num(x: f64) -> String {
    // shortest representation that parses back to the same f64
    format!("{x:?}")
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes every present part of `results` plus `manifest.json` into `outdir`; returns the file
/// names in the order written.
pub fn emit_reports(cfg: &SimConfig, command: &str, results: &Results, outdir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(io_err(outdir))?;
    let mut files: Vec<String> = results.written.clone();
    let mut put = |name: &str| -> PathBuf {
        files.push(name.to_string());
        outdir.join(name)
    };
    if let Some(rows) = &results.bands {
        let n = rows.first().map_or(0, |r| r.energies.len());
        let path = put(BANDS_CSV);
        let header = bands_header(n);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_rows(
            &path,
            &header,
            rows.iter().map(|r| {
                let mut v = vec![num(r.k[0]), num(r.k[1]), num(r.arclength)];
                v.extend(r.energies.iter().map(|&e| num(e)));
                v
            }),
        )?;
    }
    if let Some(d) = &results.dirac_point {
        write_json(&put(DIRAC_POINT_JSON), d)?;
    }
    if let Some(c) = &results.coeffs {
        write_json(&put(COEFFS_JSON), c)?;
    }
    if let Some(c) = &results.convergence {
        let slope = |k: f64, o: u8| {
            c.fits
                .iter()
                .find(|f| f.kappa == k && f.order == o)
                .map_or(f64::NAN, |f| f.slope)
        };
        write_rows(
            &put(CONVERGENCE_CSV),
            &CONVERGENCE_HEADER,
            c.rows.iter().map(|r| {
                vec![
                    num(r.kappa),
                    r.order.to_string(),
                    num(r.epsilon),
                    num(r.error),
                    num(r.error_l2),
                    num(r.relative_error),
                    num(r.worst_time),
                    num(r.mass_drift),
                    r.nls_steps.to_string(),
                    num(r.seconds),
                    num(slope(r.kappa, r.order)),
                ]
            }),
        )?;
        write_json(&put(CONVERGENCE_JSON), c)?;
    }
    if let Some(h) = &results.hartree {
        write_rows(
            &put(HARTREE_CSV),
            &HARTREE_HEADER,
            h.report.rows.iter().map(|r| {
                vec![num(r.epsilon), num(r.deviation), num(r.cross), num(r.target), num(r.imag_max), num(r.dropped)]
            }),
        )?;
        write_json(&put(HARTREE_JSON), h)?;
    }
    match &results.observables {
        Some(Observables::Dirac(obs)) => write_rows(
            &put(OBSERVABLES_CSV),
            &DIRAC_OBSERVABLES_HEADER,
            obs.iter().map(|o| vec![num(o.t), num(o.mass), num(o.energy), num(o.sup1), num(o.sup2)]),
        )?,
        Some(Observables::Nls(obs)) => write_rows(
            &put(OBSERVABLES_CSV),
            &NLS_OBSERVABLES_HEADER,
            obs.iter().map(|o| vec![num(o.t), num(o.mass), num(o.lift_mass), num(o.sup), num(o.norm_s)]),
        )?,
        Some(Observables::FineGrid(obs)) => write_rows(
            &put(OBSERVABLES_CSV),
            &FINE_OBSERVABLES_HEADER,
            obs.iter().map(|o| vec![num(o.t), num(o.mass), num(o.sup)]),
        )?,
        None => {}
    }
    for (name, value) in &results.extra {
        write_json(&put(name), value)?;
    }
    let manifest = Manifest {
        command,
        library: "honeycomb-dirac",
        library_version: honeycomb_dirac::VERSION,
        config_hash: cfg.hash(),
        config: cfg,
        files: files.clone(),
    };
    write_json(&outdir.join(MANIFEST_JSON), &manifest)?;
    let mut out: Vec<PathBuf> = files.iter().map(|f| outdir.join(f)).collect();
    out.push(outdir.join(MANIFEST_JSON));
    Ok(out)
}
