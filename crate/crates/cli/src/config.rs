//! Run configuration. Every field has a default, unknown keys are rejected, and the parsed
//! value is echoed into each report.

use std::path::{Path, PathBuf};

use honeycomb_dirac::potential::PotentialSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::setup::EnvelopeShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsConfig {
    pub points_per_segment: usize,
    pub nbands: usize,
}

impl Default for BandsConfig {
    fn default() -> Self {
        Self { points_per_segment: 24, nbands: 8 }
    }
}

/// Gaussian amplitudes centred in the box, offsets relative to the centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub shape: EnvelopeShape,
    pub width: f64,
    pub mass: f64,
    pub offsets: [[f64; 2]; 2],
    /// Complex weights `(re, im)` of the two components.
    pub weights: [[f64; 2]; 2],
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            shape: EnvelopeShape::Gaussian,
            width: 2.0,
            mass: 1.0,
            offsets: [[-0.5, 0.0], [0.5, 0.3]],
            weights: [[1.0, 0.0], [0.0, 0.7]],
        }
    }
}

/// Effective Dirac runs on their own periodic box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiracRunConfig {
    pub box_size: [f64; 2],
    pub grid: [usize; 2],
    pub dt: f64,
    pub width: f64,
}

impl Default for DiracRunConfig {
    fn default() -> Self {
        Self {
            box_size: [32.0, 32.0],
            grid: [256, 256],
            dt: 1e-3,
            width: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NlsScheme {
    TwoScale,
    FineGrid,
}

/// Semiclassical NLS discretisation. `cells` is given at `epsilon`; other ε reuse the same
/// physical box with rescaled cell counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NlsConfig {
    pub epsilon: f64,
    pub cells: [usize; 2],
    /// Nodes per supercell edge for fine-grid runs and exports.
    pub ppc: usize,
    /// Envelope nodes per box edge of the two-scale scheme.
    pub coarse: usize,
    /// Cell-frequency cutoff of the two-scale scheme.
    pub cell_cutoff: usize,
    /// `dt = ε / dt_per_eps`.
    pub dt_per_eps: f64,
    pub scheme: NlsScheme,
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0 / 6.0,
            cells: [63, 108],
            ppc: 8,
            coarse: 32,
            cell_cutoff: 5,
            dt_per_eps: 8.0,
            scheme: NlsScheme::TwoScale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HartreeConfig {
    pub epsilons: Vec<f64>,
    pub cells: [usize; 2],
    pub ppc: usize,
    pub coarse: usize,
    pub width: f64,
}

impl Default for HartreeConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 12.0],
            cells: [14, 24],
            ppc: 8,
            coarse: 64,
            width: 0.8,
        }
    }
}

/// Slope bands of the convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptanceBands {
    pub order0_slope: [f64; 2],
    pub order1_min_slope: f64,
}

impl Default for AcceptanceBands {
    fn default() -> Self {
        Self {
            order0_slope: [0.7, 1.3],
            order1_min_slope: 1.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub lattice_a: f64,
    pub potential: PotentialSpec,
    /// Plane-wave cutoff `M` of the Bloch problem.
    pub cutoff: usize,
    /// Lower index of the Dirac band pair; the lowest admissible pair when absent.
    pub band: Option<usize>,
    pub bands: BandsConfig,
    /// Cone-fit radii as fractions of `q`.
    pub cone_radii: Vec<f64>,
    pub cone_angles: usize,
    pub oversample: usize,
    /// Convergence ladder, strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Nonlinearity sign for single runs.
    pub kappa: f64,
    /// Nonlinearity signs swept by the convergence study.
    pub kappas: Vec<f64>,
    pub t_final: f64,
    pub snapshots: usize,
    /// Preparation order of single runs (0 or 1).
    pub order: u8,
    /// Preparation orders swept by the convergence study.
    pub orders: Vec<u8>,
    pub norm_s: u32,
    /// Algebra constant of the contraction-time diagnostic.
    pub c_s: f64,
    /// Largest Dirac step used to drive the corrector pipeline.
    pub dirac_dt_max: f64,
    pub envelope: EnvelopeConfig,
    pub dirac: DiracRunConfig,
    pub nls: NlsConfig,
    pub hartree: HartreeConfig,
    pub acceptance: AcceptanceBands,
    pub output_dir: PathBuf,
    /// Randomises the envelope phases when set.
    pub seed: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lattice_a: 1.0,
            potential: PotentialSpec::default(),
            cutoff: 12,
            band: None,
            bands: BandsConfig::default(),
            cone_radii: vec![1e-4, 2e-4, 1e-3, 1e-2],
            cone_angles: 8,
            oversample: 4,
            epsilons: vec![1.0 / 6.0, 1.0 / 12.0, 1.0 / 24.0],
            kappa: 1.0,
            kappas: vec![1.0, -1.0],
            t_final: 0.5,
            snapshots: 10,
            order: 1,
            orders: vec![0, 1],
            norm_s: 2,
            c_s: 1.0,
            dirac_dt_max: 1e-3,
            envelope: EnvelopeConfig::default(),
            dirac: DiracRunConfig::default(),
            nls: NlsConfig::default(),
            hartree: HartreeConfig::default(),
            acceptance: AcceptanceBands::default(),
            output_dir: PathBuf::from("out"),
            seed: None,
        }
    }
}

fn bad(field: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field,
        reason: reason.into(),
    }
}

fn positive(field: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite, got {x}")))
    }
}

fn ladder(field: &'static str, l: &[f64]) -> Result<()> {
    if l.is_empty() {
        return Err(bad(field, "ladder is empty"));
    }
    if l.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(bad(field, "every ε must lie in (0, 1]"));
    }
    if l.windows(2).any(|w| w[1] >= w[0]) {
        return Err(bad(field, "ladder must be strictly decreasing"));
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        positive("lattice_a", self.lattice_a)?;
        if self.cutoff == 0 {
            return Err(bad("cutoff", "must be at least 1"));
        }
        if self.bands.points_per_segment < 2 || self.bands.nbands == 0 {
            return Err(bad("bands", "need at least 2 points per segment and one band"));
        }
        if self.cone_radii.is_empty() || self.cone_radii.iter().any(|&r| !(r > 0.0 && r <= 0.1)) {
            return Err(bad("cone_radii", "radii are fractions of q in (0, 0.1]"));
        }
        if self.cone_angles < 3 {
            return Err(bad("cone_angles", "need at least 3 angles"));
        }
        if self.oversample < 2 {
            return Err(bad("oversample", "must be at least 2"));
        }
        ladder("epsilons", &self.epsilons)?;
        ladder("hartree.epsilons", &self.hartree.epsilons)?;
        for &k in self.kappas.iter().chain([&self.kappa]) {
            if !k.is_finite() {
                return Err(bad("kappa", "must be finite"));
            }
        }
        if self.kappas.is_empty() {
            return Err(bad("kappas", "sweep is empty"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(bad("t_final", "must be nonnegative and finite"));
        }
        if self.snapshots == 0 {
            return Err(bad("snapshots", "need at least one snapshot"));
        }
        if self.order > 1 || self.orders.iter().any(|&o| o > 1) || self.orders.is_empty() {
            return Err(bad("order", "preparation order must be 0 or 1"));
        }
        positive("c_s", self.c_s)?;
        positive("dirac_dt_max", self.dirac_dt_max)?;
        positive("envelope.width", self.envelope.width)?;
        positive("envelope.mass", self.envelope.mass)?;
        positive("dirac.dt", self.dirac.dt)?;
        positive("dirac.width", self.dirac.width)?;
        for &l in &self.dirac.box_size {
            positive("dirac.box_size", l)?;
        }
        if self.dirac.grid.iter().any(|&n| n < 4) {
            return Err(bad("dirac.grid", "need at least 4 nodes per direction"));
        }
        positive("nls.epsilon", self.nls.epsilon)?;
        if self.nls.epsilon > 1.0 {
            return Err(bad("nls.epsilon", "must lie in (0, 1]"));
        }
        if self.nls.cells[1] % 3 != 0 || self.nls.cells.contains(&0) {
            return Err(bad("nls.cells", "cell counts must be positive with cellsY a multiple of 3"));
        }
        if self.nls.coarse < 4 || self.nls.ppc < 8 {
            return Err(bad("nls", "need coarse ≥ 4 and ppc ≥ 8"));
        }
        positive("nls.dt_per_eps", self.nls.dt_per_eps)?;
        if self.hartree.cells[1] % 3 != 0 || self.hartree.cells.contains(&0) {
            return Err(bad("hartree.cells", "cell counts must be positive with cellsY a multiple of 3"));
        }
        positive("hartree.width", self.hartree.width)?;
        let [lo, hi] = self.acceptance.order0_slope;
        if !(lo > 0.0 && hi > lo) || !(self.acceptance.order1_min_slope > 0.0) {
            return Err(bad("acceptance", "slope bands must be positive and ordered"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses a JSON config; an empty file yields the defaults.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = if text.trim().is_empty() {
        SimConfig::default()
    } else {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config_str(&text)
}
