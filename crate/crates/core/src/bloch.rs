//! Plane-wave solver for the pseudo-periodic eigenvalue problem `(-Δ + V) Φ = μ Φ`,
//! Dirac-point detection at the zone vertex and extraction of the Dirac velocity `λ_#`.
//!
//! A Bloch mode at quasimomentum `k` is `Φ(y) = Σ_m c(m) e^{i(k + k_m)·y}`; the coefficient
//! inner product `Σ conj(a) b` equals the cell-averaged `L²` product.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{
    add, dot, rotate_dual_index, scale, Anchor, LatticeGeometry, PlaneWaveBasis, Vec2,
};
use crate::linalg::{eigh, HermitianEigen};
use crate::potential::FourierPotential;
use crate::scalar::{cdot, cis, czero, to_c64, Real, C};

/// Quasimomentum at which a Bloch problem is posed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quasimomentum<T: Real> {
    /// A high-symmetry anchor; kinetic energies are evaluated exactly so that rotation orbits
    /// share bit-identical diagonals.
    Anchor(Anchor),
    /// An arbitrary Cartesian point.
    Point(Vec2<T>),
}

impl<T: Real> Quasimomentum<T> {
    pub fn cartesian(&self, geom: &LatticeGeometry<T>) -> Vec2<T> {
        match *self {
            Quasimomentum::Anchor(a) => geom.anchor_point(a),
            Quasimomentum::Point(k) => k,
        }
    }

    /// `|k + k_m|²`.
    pub fn kinetic(&self, geom: &LatticeGeometry<T>, m: (i64, i64)) -> T {
        match *self {
            Quasimomentum::Anchor(a) => geom.anchored_norm_sqr(m, a),
            Quasimomentum::Point(k) => {
                let v = geom.shifted_vector(m, k);
                dot(v, v)
            }
        }
    }
}

/// Dense Hermitian Bloch matrix `H_{m,m'} = |k + k_m|² δ_{mm'} + V̂(m - m')`.
#[derive(Debug, Clone)]
pub struct BlochHamiltonian<T: Real> {
    pub k: Quasimomentum<T>,
    pub basis: PlaneWaveBasis,
    /// Row-major matrix entries.
    pub matrix: Vec<C<T>>,
}

pub fn assemble_bloch_hamiltonian<T: Real>(
    v: &FourierPotential<T>,
    k: Quasimomentum<T>,
    cutoff: usize,
) -> Result<BlochHamiltonian<T>> {
    let basis = PlaneWaveBasis::new(cutoff)?;
    let n = basis.len();
    let mut matrix = vec![czero(); n * n];
    for (p, &m) in basis.indices().iter().enumerate() {
        matrix[p * n + p] = C::new(k.kinetic(&v.geom, m), T::zero());
        for (&d, &vd) in &v.coeffs {
            if let Some(p2) = basis.position((m.0 - d.0, m.1 - d.1)) {
                matrix[p * n + p2] += vd;
            }
        }
    }
    Ok(BlochHamiltonian { k, basis, matrix })
}

impl<T: Real> BlochHamiltonian<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn entry(&self, p: usize, q: usize) -> C<T> {
        self.matrix[p * self.dim() + q]
    }

    pub fn apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.matrix[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .fold(czero(), |a, (h, xv)| a + h * xv)
            })
            .collect()
    }

    /// Max `|H - H†|`.
    pub fn hermiticity_defect(&self) -> T {
        let n = self.dim();
        let mut d = T::zero();
        for i in 0..n {
            for j in 0..n {
                d = d.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        d
    }

    /// Max `|(H P_R - P_R H)_{m m'}|` over rows and columns whose rotation orbits stay in the box.
    pub fn rotation_commutator_norm(&self, anchor: Anchor) -> T {
        let closed = self.basis.orbit_closed_positions(anchor);
        let rot: Vec<usize> = closed
            .iter()
            .map(|&p| {
                self.basis
                    .position(rotate_dual_index(self.basis.index(p), anchor))
                    .unwrap()
            })
            .collect();
        let mut d = T::zero();
        for (a, &p) in closed.iter().enumerate() {
            for (b, &q) in closed.iter().enumerate() {
                d = d.max((self.entry(rot[a], rot[b]) - self.entry(p, q)).norm());
            }
        }
        d
    }
}

/// Sparse application of a Bloch operator, used on large extended bases.
#[derive(Debug, Clone)]
pub struct SparseBlochOperator<T: Real> {
    pub basis: PlaneWaveBasis,
    pub diagonal: Vec<T>,
    couplings: Vec<Vec<(usize, C<T>)>>,
}

impl<T: Real> SparseBlochOperator<T> {
    pub fn new(v: &FourierPotential<T>, k: Quasimomentum<T>, cutoff: usize) -> Result<Self> {
        let basis = PlaneWaveBasis::new(cutoff)?;
        let v0 = v.coeff((0, 0)).re;
        let mut diagonal = Vec::with_capacity(basis.len());
        let mut couplings = Vec::with_capacity(basis.len());
        for &m in basis.indices() {
            diagonal.push(k.kinetic(&v.geom, m) + v0);
            let row = v
                .coeffs
                .iter()
                .filter(|(&d, _)| d != (0, 0))
                .filter_map(|(&d, &vd)| basis.position((m.0 - d.0, m.1 - d.1)).map(|q| (q, vd)))
                .collect();
            couplings.push(row);
        }
        Ok(Self {
            basis,
            diagonal,
            couplings,
        })
    }

    pub fn apply_into(&self, x: &[C<T>], y: &mut [C<T>]) {
        for (i, row) in self.couplings.iter().enumerate() {
            let mut acc = x[i] * self.diagonal[i];
            for &(q, vd) in row {
                acc += vd * x[q];
            }
            y[i] = acc;
        }
    }
}

/// Eigenpairs of a Bloch matrix; bands ascend.
#[derive(Debug, Clone)]
pub struct BlochSolution<T: Real> {
    pub k: Quasimomentum<T>,
    pub basis: PlaneWaveBasis,
    pub eigenvalues: Vec<T>,
    /// One coefficient vector per retained band.
    pub eigenvectors: Vec<Vec<C<T>>>,
}

pub fn solve_bloch<T: HermitianEigen>(h: &BlochHamiltonian<T>, nbands: usize) -> Result<BlochSolution<T>> {
    let n = h.dim();
    if nbands > n {
        return Err(invalid("nbands", format!("{nbands} bands requested from a basis of {n}")));
    }
    let e = eigh(n, &h.matrix, true)?;
    let mut vecs = e.vectors.expect("vectors requested");
    vecs.truncate(nbands);
    Ok(BlochSolution {
        k: h.k,
        basis: h.basis.clone(),
        eigenvalues: e.values,
        eigenvectors: vecs,
    })
}

/// Lowest `nbands` eigenvalues without eigenvectors.
pub fn bloch_eigenvalues<T: HermitianEigen>(
    v: &FourierPotential<T>,
    k: Quasimomentum<T>,
    cutoff: usize,
    nbands: usize,
) -> Result<Vec<T>> {
    let h = assemble_bloch_hamiltonian(v, k, cutoff)?;
    let mut e = eigh(h.dim(), &h.matrix, false)?.values;
    e.truncate(nbands);
    Ok(e)
}

/// One row of a band diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow<T: Real> {
    pub k: Vec2<T>,
    pub arclength: T,
    pub energies: Vec<T>,
}

pub fn band_structure<T: HermitianEigen>(
    v: &FourierPotential<T>,
    path: &[crate::lattice::PathPoint<T>],
    cutoff: usize,
    nbands: usize,
) -> Result<Vec<BandRow<T>>> {
    path.iter()
        .map(|p| {
            Ok(BandRow {
                k: p.k,
                arclength: p.arclength,
                energies: bloch_eigenvalues(v, Quasimomentum::Point(p.k), cutoff, nbands)?,
            })
        })
        .collect()
}

/// Rotation operator on coefficients, `(P c)(rot m) = c(m)`, truncated to the box.
pub fn apply_rotation<T: Real>(basis: &PlaneWaveBasis, c: &[C<T>], anchor: Anchor) -> Vec<C<T>> {
    let mut out = vec![czero(); c.len()];
    for (p, &m) in basis.indices().iter().enumerate() {
        if let Some(q) = basis.position(rotate_dual_index(m, anchor)) {
            out[q] = c[p];
        }
    }
    out
}

/// Conjugation-inversion partner `Φ(y) ↦ conj(Φ(-y))`. At a vertex the partner of
/// `Σ c(m) e^{i(K + k_m)·y}` is `Σ conj(c(m)) e^{i(K + k_m)·y}`: same index, conjugated.
pub fn inversion_conjugate<T: Real>(c: &[C<T>]) -> Vec<C<T>> {
    c.iter().map(|z| z.conj()).collect()
}

/// Phase rotation applied by gauge fixing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeRecord {
    /// Basis position of the reference coefficient.
    pub reference_position: usize,
    pub reference_index: (i64, i64),
    /// Phase (radians) multiplied into the raw eigenvector.
    pub applied_phase: f64,
}

/// Degenerate pair at a vertex with its symmetry-adapted basis.
#[derive(Debug, Clone)]
pub struct DiracPointData<T: Real> {
    pub geom: LatticeGeometry<T>,
    pub anchor: Anchor,
    pub basis: PlaneWaveBasis,
    pub mustar: T,
    pub phi1: Vec<C<T>>,
    pub phi2: Vec<C<T>>,
    pub lambda_sharp: C<T>,
    pub gap: T,
    pub band_pair: (usize, usize),
    /// Full spectrum at the vertex, used for resolvent margins.
    pub spectrum: Vec<T>,
    /// Eigenvalues of the rotation restricted to the pair (τ-sector first).
    pub rotation_eigenvalues: [C<T>; 2],
    /// Max coefficient mismatch between the computed τ̄ eigenvector and the conjugation partner of Φ1.
    pub inversion_mismatch: T,
    pub gauge: GaugeRecord,
}

impl<T: Real> DiracPointData<T> {
    /// Cartesian `K* + k_m` for each basis element.
    pub fn shifted_vectors(&self) -> Vec<Vec2<T>> {
        let k = self.geom.anchor_point(self.anchor);
        self.basis
            .indices()
            .iter()
            .map(|&m| self.geom.shifted_vector(m, k))
            .collect()
    }

    /// Replaces `Φ1 ↦ e^{iθ} Φ1`, keeping `Φ2` as its conjugation partner and `λ_#` consistent.
    pub fn with_gauge(&self, theta: T) -> Self {
        let ph = cis(theta);
        let mut out = self.clone();
        out.phi1 = self.phi1.iter().map(|z| z * ph).collect();
        out.phi2 = inversion_conjugate(&out.phi1);
        out.lambda_sharp = self.lambda_sharp * ph * ph;
        out.gauge.applied_phase += theta.as_f64();
        out
    }

    /// Coefficient vector of `Φ_j` (`j` = 1 or 2).
    pub fn phi(&self, j: usize) -> &[C<T>] {
        match j {
            1 => &self.phi1,
            2 => &self.phi2,
            _ => panic!("mode index must be 1 or 2"),
        }
    }

    /// `⟨Φ_a, ∂_{y_d} Φ_b⟩` for `a, b ∈ {1,2}`, `d ∈ {0,1}`.
    pub fn derivative_overlap(&self, a: usize, b: usize, d: usize) -> C<T> {
        let ks = self.shifted_vectors();
        let (fa, fb) = (self.phi(a), self.phi(b));
        let mut s = czero::<T>();
        for i in 0..fa.len() {
            s += fa[i].conj() * fb[i] * C::new(T::zero(), ks[i][d]);
        }
        s
    }
}

/// Options for Dirac-point detection.
#[derive(Debug, Clone, Copy)]
pub struct DiracSearch {
    pub anchor: Anchor,
    /// Relative degeneracy tolerance `gap ≤ tol (1 + |μ|)`.
    pub tol_degeneracy: f64,
    /// Number of low eigenvalues scanned for a pair.
    pub scan_bands: usize,
    /// Force a specific lower band index instead of the lowest admissible pair.
    pub band: Option<usize>,
    /// Tolerance on the restricted rotation eigenvalues.
    pub tol_sector: f64,
}

impl Default for DiracSearch {
    fn default() -> Self {
        Self {
            anchor: Anchor::K,
            tol_degeneracy: 1e-6,
            scan_bands: 24,
            band: None,
            tol_sector: 1e-6,
        }
    }
}

fn eig2<T: Real>(a: [[C<T>; 2]; 2]) -> ([C<T>; 2], [[C<T>; 2]; 2]) {
    // Eigen-decomposition of a general 2×2 complex matrix; columns are unit eigenvectors.
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let half = T::lit(0.5);
    let disc = (tr * tr * half * half - det).sqrt();
    let l = [tr * half + disc, tr * half - disc];
    let mut vecs = [[czero(); 2]; 2];
    for (j, &lj) in l.iter().enumerate() {
        let (x, y) = if a[0][1].norm() + (a[0][0] - lj).norm() > a[1][0].norm() + (a[1][1] - lj).norm() {
            (a[0][1], lj - a[0][0])
        } else {
            (lj - a[1][1], a[1][0])
        };
        let (x, y) = if x.norm() + y.norm() == T::zero() {
            if j == 0 {
                (C::new(T::one(), T::zero()), czero())
            } else {
                (czero(), C::new(T::one(), T::zero()))
            }
        } else {
            (x, y)
        };
        let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
        vecs[j] = [x / n, y / n];
    }
    (l, vecs)
}

fn fix_gauge<T: Real>(basis: &PlaneWaveBasis, c: &mut [C<T>]) -> GaugeRecord {
    let max = c.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    // Orbit partners share a modulus; break ties by the lowest basis position.
    let thresh = max * (T::one() - T::lit(1e-8));
    let p = c.iter().position(|z| z.norm() >= thresh).unwrap_or(0);
    let phase = -c[p].arg();
    let ph = cis(phase);
    c.iter_mut().for_each(|z| *z = *z * ph);
    c[p] = C::new(c[p].re, T::zero());
    GaugeRecord {
        reference_position: p,
        reference_index: basis.index(p),
        applied_phase: phase.as_f64(),
    }
}

/// Finds the degenerate τ/τ̄ pair at the vertex and builds the gauge-fixed Dirac data.
pub fn locate_dirac_point<T: HermitianEigen>(
    v: &FourierPotential<T>,
    cutoff: usize,
    search: DiracSearch,
) -> Result<DiracPointData<T>> {
    let h = assemble_bloch_hamiltonian(v, Quasimomentum::Anchor(search.anchor), cutoff)?;
    let n = h.dim();
    let scan = search.scan_bands.min(n);
    let e = eigh(n, &h.matrix, true)?;
    let vals = e.values;
    let vecs = e.vectors.expect("vectors requested");
    let tol = T::lit(search.tol_degeneracy);
    let degenerate = |i: usize| vals[i + 1] - vals[i] <= tol * (T::one() + vals[i].abs());

    let tau = v.geom.tau;
    let tau_bar = tau.conj();
    let mut smallest_gap = f64::INFINITY;
    let mut last_sector_err: Option<Error> = None;
    let candidates: Vec<usize> = match search.band {
        Some(b) => vec![b],
        None => (0..scan.saturating_sub(1)).collect(),
    };
    for i in candidates {
        if i + 1 >= n {
            break;
        }
        smallest_gap = smallest_gap.min((vals[i + 1] - vals[i]).as_f64());
        let isolated = (i == 0 || !degenerate(i - 1)) && (i + 2 >= n || !degenerate(i + 1));
        if !degenerate(i) || !isolated {
            continue;
        }
        let (e1, e2) = (&vecs[i], &vecs[i + 1]);
        let pe1 = apply_rotation(&h.basis, e1, search.anchor);
        let pe2 = apply_rotation(&h.basis, e2, search.anchor);
        let a = [[cdot(e1, &pe1), cdot(e1, &pe2)], [cdot(e2, &pe1), cdot(e2, &pe2)]];
        let (l, w) = eig2(a);
        let ts = T::lit(search.tol_sector);
        let (it, itb) = if (l[0] - tau).norm() <= ts && (l[1] - tau_bar).norm() <= ts {
            (0, 1)
        } else if (l[1] - tau).norm() <= ts && (l[0] - tau_bar).norm() <= ts {
            (1, 0)
        } else {
            last_sector_err = Some(Error::WrongSymmetrySector {
                lower: i,
                upper: i + 1,
                eigenvalues: [
                    (l[0].re.as_f64(), l[0].im.as_f64()),
                    (l[1].re.as_f64(), l[1].im.as_f64()),
                ],
            });
            if search.band.is_some() {
                break;
            }
            continue;
        };
        let combine = |wc: [C<T>; 2]| -> Vec<C<T>> {
            let mut c: Vec<C<T>> = e1.iter().zip(e2).map(|(x, y)| x * wc[0] + y * wc[1]).collect();
            let nn = cdot(&c, &c).re.sqrt();
            c.iter_mut().for_each(|z| *z = *z / nn);
            c
        };
        let mut phi1 = combine(w[it]);
        let gauge = fix_gauge(&h.basis, &mut phi1);
        let phi2 = inversion_conjugate(&phi1);
        // Compare the independently computed τ̄ vector with the partner, modulo a phase.
        let raw2 = combine(w[itb]);
        let ov = cdot(&raw2, &phi2);
        let ph = if ov.norm() > T::zero() { ov / ov.norm() } else { C::new(T::one(), T::zero()) };
        let inversion_mismatch = raw2
            .iter()
            .zip(&phi2)
            .fold(T::zero(), |m, (a, b)| m.max((a * ph - b).norm()));
        let mut dp = DiracPointData {
            geom: v.geom,
            anchor: search.anchor,
            basis: h.basis.clone(),
            mustar: (vals[i] + vals[i + 1]) * T::lit(0.5),
            phi1,
            phi2,
            lambda_sharp: czero(),
            gap: vals[i + 1] - vals[i],
            band_pair: (i, i + 1),
            spectrum: vals.clone(),
            rotation_eigenvalues: [l[it], l[itb]],
            inversion_mismatch,
            gauge,
        };
        let rep = compute_lambda_sharp(&dp)?;
        dp.lambda_sharp = rep.lambda;
        return Ok(dp);
    }
    Err(last_sector_err.unwrap_or(Error::NoDiracPoint { smallest_gap }))
}

/// Splitting of bands `(band, band + 1)` at a quasimomentum.
pub fn pair_gap<T: HermitianEigen>(
    v: &FourierPotential<T>,
    k: Quasimomentum<T>,
    cutoff: usize,
    band: usize,
) -> Result<T> {
    let e = bloch_eigenvalues(v, k, cutoff, band + 2)?;
    Ok(e[band + 1] - e[band])
}

/// Independent extractions of `λ_#` and the diagonal overlaps.
#[derive(Debug, Clone, Copy)]
pub struct LambdaReport<T: Real> {
    /// `-2i⟨Φ2, ∂_{y1}Φ1⟩`.
    pub lambda: C<T>,
    /// `2⟨Φ2, ∂_{y2}Φ1⟩`.
    pub lambda_cross: C<T>,
    /// `Σ_m c(m)² (1, i)·(K* + k_m)` over the whole basis.
    pub fourier_sum: C<T>,
    /// Relative mismatch between the two inner-product extractions.
    pub mismatch: f64,
    /// Largest `|⟨Φ_n, ∂_{y_d} Φ_n⟩|`.
    pub diagonal_overlap: f64,
    /// `λ_# ≠ 0`.
    pub assumption_holds: bool,
}

pub fn compute_lambda_sharp<T: Real>(dp: &DiracPointData<T>) -> Result<LambdaReport<T>> {
    let i2 = C::new(T::zero(), T::lit(2.0));
    let lambda = -(i2 * dp.derivative_overlap(2, 1, 0));
    let lambda_cross = dp.derivative_overlap(2, 1, 1) * T::lit(2.0);
    let ks = dp.shifted_vectors();
    let fourier_sum = dp
        .phi1
        .iter()
        .zip(&ks)
        .fold(czero::<T>(), |s, (c, k)| s + c * c * C::new(k[0], k[1]));
    let modulus = lambda.norm().as_f64();
    let mismatch = (lambda - lambda_cross).norm().as_f64() / modulus.max(f64::MIN_POSITIVE);
    let mut diag = 0.0f64;
    for n in 1..=2 {
        for d in 0..2 {
            diag = diag.max(dp.derivative_overlap(n, n, d).norm().as_f64());
        }
    }
    if modulus < 1e-8 {
        return Err(Error::AssumptionViolated { modulus });
    }
    if mismatch > 1e-6 {
        return Err(Error::SymmetryClassification { mismatch });
    }
    Ok(LambdaReport {
        lambda,
        lambda_cross,
        fourier_sum,
        mismatch,
        diagonal_overlap: diag,
        assumption_holds: true,
    })
}

/// Cone fit at one radius.
#[derive(Debug, Clone, Serialize)]
pub struct ConeRadius {
    pub radius: f64,
    pub slope_plus: f64,
    pub slope_minus: f64,
    /// Mean of `(μ_+ - μ_-)/(2r)` over angles.
    pub slope_symmetric: f64,
    /// `(max - min)/mean` of the symmetric slope over angles.
    pub anisotropy: f64,
    /// `max |E_±|` over angles, with `μ_± - μ* = ±|λ_#| r (1 + E_±)`.
    pub max_remainder: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeFitReport {
    pub mustar: f64,
    pub lambda_modulus: f64,
    pub radii: Vec<ConeRadius>,
    /// `max_r max|E_±| / r`.
    pub remainder_constant: f64,
}

impl ConeFitReport {
    /// Symmetric slope at the smallest radius.
    pub fn fitted_slope(&self) -> f64 {
        self.radii
            .iter()
            .min_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap())
            .map(|r| r.slope_symmetric)
            .unwrap_or(f64::NAN)
    }
}

pub fn verify_cone<T: HermitianEigen>(
    v: &FourierPotential<T>,
    dp: &DiracPointData<T>,
    radii: &[T],
    cutoff: usize,
    angles: usize,
) -> Result<ConeFitReport> {
    let q = v.geom.q;
    if radii.iter().any(|&r| !(r > T::zero()) || r > T::lit(0.1) * q) {
        return Err(invalid("radii", "cone radii must lie in (0, 0.1 q]"));
    }
    let b = dp.band_pair.0;
    let nb = b + 3;
    let k0 = v.geom.anchor_point(dp.anchor);
    let e0 = bloch_eigenvalues(v, Quasimomentum::Anchor(dp.anchor), cutoff, nb)?;
    let mustar = (e0[b] + e0[b + 1]).as_f64() * 0.5;
    let lam = dp.lambda_sharp.norm().as_f64();
    let mut out = Vec::new();
    let mut cmax = 0.0f64;
    for &r in radii {
        let rf = r.as_f64();
        let (mut sp, mut sm, mut ss) = (0.0, 0.0, Vec::new());
        let mut emax = 0.0f64;
        for j in 0..angles {
            let th = T::lit(2.0 * std::f64::consts::PI * (j as f64 + 0.5) / angles as f64);
            let k = add(k0, scale(r, [th.cos(), th.sin()]));
            let e = bloch_eigenvalues(v, Quasimomentum::Point(k), cutoff, nb)?;
            let (lo, hi) = (e[b].as_f64(), e[b + 1].as_f64());
            let span = hi - lo;
            let below = if b > 0 { lo - e[b - 1].as_f64() } else { f64::INFINITY };
            let above = e[b + 2].as_f64() - hi;
            if below < span || above < span {
                return Err(Error::TrackingFailure { radius: rf });
            }
            let (p, m) = ((hi - mustar) / rf, (mustar - lo) / rf);
            sp += p;
            sm += m;
            ss.push(span / (2.0 * rf));
            emax = emax.max((p / lam - 1.0).abs()).max((m / lam - 1.0).abs());
        }
        let a = angles as f64;
        let mean = ss.iter().sum::<f64>() / a;
        let (mn, mx) = ss
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        cmax = cmax.max(emax / rf);
        out.push(ConeRadius {
            radius: rf,
            slope_plus: sp / a,
            slope_minus: sm / a,
            slope_symmetric: mean,
            anisotropy: (mx - mn) / mean,
            max_remainder: emax,
        });
    }
    Ok(ConeFitReport {
        mustar,
        lambda_modulus: lam,
        radii: out,
        remainder_constant: cmax,
    })
}

/// Distance from `μ*` to the nearest eigenvalue outside the degenerate pair.
pub fn spectral_margin<T: Real>(dp: &DiracPointData<T>) -> (T, T) {
    let (a, b) = dp.band_pair;
    dp.spectrum
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != a && *i != b)
        .map(|(_, &e)| ((e - dp.mustar).abs(), e))
        .fold((T::infinity(), T::nan()), |acc, x| if x.0 < acc.0 { x } else { acc })
}

/// Double-precision summary of the Dirac point for reports.
#[derive(Debug, Clone, Serialize)]
pub struct DiracPointSummary {
    pub mustar: f64,
    pub gap: f64,
    pub band_pair: (usize, usize),
    pub lambda_sharp_re: f64,
    pub lambda_sharp_im: f64,
    pub lambda_modulus: f64,
    pub rotation_eigenvalues: [(f64, f64); 2],
    pub inversion_mismatch: f64,
    pub gauge: GaugeRecord,
    pub cutoff: usize,
}

impl<T: Real> DiracPointData<T> {
    pub fn summary(&self) -> DiracPointSummary {
        let l = to_c64(self.lambda_sharp);
        let r = self.rotation_eigenvalues.map(|z| (z.re.as_f64(), z.im.as_f64()));
        DiracPointSummary {
            mustar: self.mustar.as_f64(),
            gap: self.gap.as_f64(),
            band_pair: self.band_pair,
            lambda_sharp_re: l.re,
            lambda_sharp_im: l.im,
            lambda_modulus: l.norm(),
            rotation_eigenvalues: r,
            inversion_mismatch: self.inversion_mismatch.as_f64(),
            gauge: self.gauge,
            cutoff: self.basis.cutoff(),
        }
    }
}
