//! Shared precomputation: potential, Dirac point, effective coefficients and initial data.

use honeycomb_dirac::bloch::{locate_dirac_point, DiracSearch};
use honeycomb_dirac::dirac2d::{gaussian_envelopes, DiracSymbol, SpinorField};
use honeycomb_dirac::effcoef::coupling_tensor;
use honeycomb_dirac::lattice::build_lattice;
use honeycomb_dirac::scalar::C;
use honeycomb_dirac::spectral::Grid2;
use honeycomb_dirac::{DiracPointData64, EffectiveCoefficients64, FourierPotential64, LatticeGeometry64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{EnvelopeConfig, SimConfig};
use crate::error::Result;

pub struct Setup {
    pub geom: LatticeGeometry64,
    pub v: FourierPotential64,
    pub dp: DiracPointData64,
    pub coeffs: EffectiveCoefficients64,
}

impl Setup {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let geom = build_lattice(cfg.lattice_a)?;
        let v = cfg.potential.build(&geom)?;
        let search = DiracSearch {
            band: cfg.band,
            ..DiracSearch::default()
        };
        let dp = locate_dirac_point(&v, cfg.cutoff, search)?;
        let coeffs = coupling_tensor(&dp, cfg.oversample)?;
        Ok(Self { geom, v, dp, coeffs })
    }

    pub fn symbol(&self, kappa: f64) -> DiracSymbol<f64> {
        DiracSymbol::new(self.dp.lambda_sharp, kappa, self.coeffs.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeShape {
    #[default]
    Gaussian,
    /// Spatially constant amplitudes (a pure Bloch wave at the vertex).
    Constant,
}

/// Initial amplitudes on `grid`, normalised to the configured mass. With a seed, the two
/// component weights receive independent random phases.
pub fn initial_amplitudes(env: &EnvelopeConfig, grid: Grid2<f64>, width: f64, seed: Option<u64>) -> SpinorField<f64> {
    let mut w = env.weights.map(|[re, im]| C::new(re, im));
    if let Some(s) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        for z in &mut w {
            *z *= C::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        }
    }
    match env.shape {
        EnvelopeShape::Gaussian => {
            let c = [grid.l1 / 2.0, grid.l2 / 2.0];
            let centers = env.offsets.map(|o| [c[0] + o[0], c[1] + o[1]]);
            gaussian_envelopes(grid, width, centers, w, env.mass)
        }
        EnvelopeShape::Constant => {
            let f = SpinorField::from_fn(grid, |_, _| (w[0], w[1]));
            let m = f.mass();
            if m > 0.0 {
                f.scaled((env.mass / m).sqrt())
            } else {
                f
            }
        }
    }
}

/// Share of the mass within `margin` (a fraction of each side) of the box boundary.
pub fn boundary_fraction(f: &SpinorField<f64>, margin: f64) -> f64 {
    let g = f.grid;
    let near = |x: f64, l: f64| x < margin * l || x > (1.0 - margin) * l;
    let mut edge = 0.0;
    let mut total = 0.0;
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let k = i * g.n2 + j;
            let m = f.a1[k].norm_sqr() + f.a2[k].norm_sqr();
            total += m;
            if near(g.x1(i), g.l1) || near(g.x2(j), g.l2) {
                edge += m;
            }
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}
