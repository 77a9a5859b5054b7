//! Field snapshots: flat little-endian complex64 (`f32` real, `f32` imaginary) in row-major
//! component, `x1`, `x2` order, plus a JSON sidecar describing the layout.

use std::path::{Path, PathBuf};

use honeycomb_dirac::corrector::WkbField;
use honeycomb_dirac::dirac2d::SpinorField;
use honeycomb_dirac::lattice::build_lattice;
use honeycomb_dirac::scalar::C;
use honeycomb_dirac::spectral::Grid2;
use honeycomb_dirac::twoscale::CommensurateGrid;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

pub const FORMAT: &str = "complex64-le";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotKind {
    /// Dirac amplitudes, components `alpha1` then `alpha2`.
    Spinor,
    /// Two-scale NLS field: one envelope per carrier `(sK + k_m)/ε`.
    TwoScale,
    /// Single field `psi` on a fine ε-grid.
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format: String,
    pub kind: SnapshotKind,
    /// `[components, n1, n2]`.
    pub shape: [usize; 3],
    #[serde(rename = "box")]
    pub box_size: [f64; 2],
    pub time: f64,
    pub components: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lattice_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub charge: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cell_cutoff: Option<usize>,
}

/// `<stem>.bin` and `<stem>.json`.
pub fn snapshot_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

fn encode(data: &[&[C<f64>]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * data.iter().map(|d| d.len()).sum::<usize>());
    for z in data.iter().flat_map(|d| d.iter()) {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Vec<C<f64>> {
    bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            C::new(re as f64, im as f64)
        })
        .collect()
}

fn write_raw(stem: &Path, header: &SnapshotHeader, data: &[&[C<f64>]]) -> Result<()> {
    let (bin, json) = snapshot_paths(stem);
    std::fs::write(&bin, encode(data)).map_err(io_err(&bin))?;
    let text = serde_json::to_string_pretty(header).expect("header serialises");
    std::fs::write(&json, text + "\n").map_err(io_err(&json))
}

pub fn read_snapshot(stem: &Path) -> Result<(SnapshotHeader, Vec<C<f64>>)> {
    let (bin, json) = snapshot_paths(stem);
    let text = std::fs::read_to_string(&json).map_err(io_err(&json))?;
    let header: SnapshotHeader = serde_json::from_str(&text).map_err(|e| CliError::Snapshot {
        path: json.clone(),
        reason: e.to_string(),
    })?;
    let fail = |reason: String| CliError::Snapshot {
        path: bin.clone(),
        reason,
    };
    if header.format != FORMAT {
        return Err(fail(format!("unsupported format `{}`", header.format)));
    }
    let bytes = std::fs::read(&bin).map_err(io_err(&bin))?;
    let n: usize = header.shape.iter().product();
    if bytes.len() != 8 * n {
        return Err(fail(format!("expected {} bytes for shape {:?}, found {}", 8 * n, header.shape, bytes.len())));
    }
    if header.components.len() != header.shape[0] {
        return Err(fail("component names do not match the shape".into()));
    }
    Ok((header, decode(&bytes)))
}

pub fn write_spinor(stem: &Path, f: &SpinorField<f64>) -> Result<()> {
    let g = f.grid;
    let header = SnapshotHeader {
        format: FORMAT.into(),
        kind: SnapshotKind::Spinor,
        shape: [2, g.n1, g.n2],
        box_size: [g.l1, g.l2],
        time: f.t,
        components: vec!["alpha1".into(), "alpha2".into()],
        epsilon: None,
        lattice_a: None,
        charge: None,
        cell_cutoff: None,
    };
    write_raw(stem, &header, &[&f.a1, &f.a2])
}

pub fn read_spinor(stem: &Path) -> Result<SpinorField<f64>> {
    let (h, data) = read_snapshot(stem)?;
    if h.kind != SnapshotKind::Spinor || h.shape[0] != 2 {
        return Err(CliError::Snapshot {
            path: stem.to_path_buf(),
            reason: "not a two-component spinor snapshot".into(),
        });
    }
    let grid = Grid2::new(h.box_size[0], h.box_size[1], h.shape[1], h.shape[2])?;
    let n = grid.len();
    let mut f = SpinorField::zeros(grid);
    f.a1.copy_from_slice(&data[..n]);
    f.a2.copy_from_slice(&data[n..]);
    f.t = h.time;
    Ok(f)
}

pub fn write_two_scale(stem: &Path, f: &WkbField<f64>) -> Result<()> {
    let g = f.grid;
    let components = f.cell.indices().iter().map(|m| format!("carrier({},{})", m.0, m.1)).collect();
    let header = SnapshotHeader {
        format: FORMAT.into(),
        kind: SnapshotKind::TwoScale,
        shape: [f.cell.len(), g.n1, g.n2],
        box_size: [g.l1, g.l2],
        time: f.t,
        components,
        epsilon: Some(f.eps),
        lattice_a: Some(f.geom.a),
        charge: Some(f.charge),
        cell_cutoff: Some(f.cell.cutoff()),
    };
    let parts: Vec<&[C<f64>]> = (0..f.cell.len()).map(|p| f.envelope(p)).collect();
    write_raw(stem, &header, &parts)
}

pub fn read_two_scale(stem: &Path) -> Result<WkbField<f64>> {
    let (h, data) = read_snapshot(stem)?;
    let missing = |what: &str| CliError::Snapshot {
        path: stem.to_path_buf(),
        reason: format!("two-scale snapshot lacks `{what}`"),
    };
    if h.kind != SnapshotKind::TwoScale {
        return Err(CliError::Snapshot {
            path: stem.to_path_buf(),
            reason: "not a two-scale snapshot".into(),
        });
    }
    let eps = h.epsilon.ok_or_else(|| missing("epsilon"))?;
    let geom = build_lattice(h.lattice_a.ok_or_else(|| missing("lattice_a"))?)?;
    let grid = Grid2::new(h.box_size[0], h.box_size[1], h.shape[1], h.shape[2])?;
    let mut f = WkbField::zeros(
        eps,
        geom,
        h.charge.ok_or_else(|| missing("charge"))?,
        h.cell_cutoff.ok_or_else(|| missing("cell_cutoff"))?,
        grid,
    )?;
    if f.data.len() != data.len() {
        return Err(CliError::Snapshot {
            path: stem.to_path_buf(),
            reason: "cell cutoff does not match the component count".into(),
        });
    }
    f.data = data;
    f.t = h.time;
    Ok(f)
}

pub fn write_scalar(stem: &Path, grid: &CommensurateGrid<f64>, psi: &[C<f64>], t: f64) -> Result<()> {
    let g = grid.grid;
    let header = SnapshotHeader {
        format: FORMAT.into(),
        kind: SnapshotKind::Scalar,
        shape: [1, g.n1, g.n2],
        box_size: [g.l1, g.l2],
        time: t,
        components: vec!["psi".into()],
        epsilon: Some(grid.eps),
        lattice_a: Some(grid.geom.a),
        charge: None,
        cell_cutoff: None,
    };
    write_raw(stem, &header, &[psi])
}
