//! Cubic coupling tensor of the effective Dirac system, Parseval identities of the Dirac
//! modes and the Hartree averaging check.

use serde::Serialize;

use crate::bloch::DiracPointData;
use crate::dirac2d::SpinorField;
use crate::error::{invalid, Error, Result};
use crate::profile::{BlochProfile, CellProducts};
use crate::scalar::{czero, Real, C};
use crate::spectral::Fft2;
use crate::twoscale::{place_two_scale, CommensurateGrid};

/// Rotation weight of mode `j`: `+1` for the τ-sector, `-1` for τ̄.
fn sector(j: usize) -> i32 {
    if j == 1 {
        1
    } else {
        -1
    }
}

/// Whether `⟨Φ_m, Φ_j Φ̄_k Φ_l⟩` is allowed by the rotation symmetry.
pub fn symmetry_allowed(j: usize, k: usize, l: usize, m: usize) -> bool {
    sector(j) + sector(l) == sector(k) + sector(m)
}

/// `⟨Φ_m, Φ_j Φ̄_k Φ_l⟩` with the cell-averaged product, `b1` and `b2`.
#[derive(Debug, Clone)]
pub struct EffectiveCoefficients<T: Real> {
    /// `tensor[j-1][k-1][l-1][m-1]`.
    pub tensor: [[[[C<T>; 2]; 2]; 2]; 2],
    pub b1: T,
    pub b2: T,
    pub oversample: usize,
    pub grid_points: usize,
    /// Largest entry change when the quadrature grid is doubled.
    pub refinement_change: f64,
}

impl<T: Real> EffectiveCoefficients<T> {
    /// Entry with one-based mode labels.
    pub fn entry(&self, j: usize, k: usize, l: usize, m: usize) -> C<T> {
        self.tensor[j - 1][k - 1][l - 1][m - 1]
    }

    /// Tensor built directly from `b1` and `b2` in the symmetric pattern.
    pub fn from_b(b1: T, b2: T) -> Self {
        let mut tensor = [[[[czero(); 2]; 2]; 2]; 2];
        for (j, k, l, m) in all_indices() {
            tensor[j - 1][k - 1][l - 1][m - 1] = if !symmetry_allowed(j, k, l, m) {
                czero()
            } else if j == k && k == l && l == m {
                C::new(b1, T::zero())
            } else {
                C::new(b2, T::zero())
            };
        }
        Self {
            tensor,
            b1,
            b2,
            oversample: 0,
            grid_points: 0,
            refinement_change: 0.0,
        }
    }

    /// Largest forbidden entry relative to `b1`.
    pub fn forbidden_max(&self) -> f64 {
        all_indices()
            .filter(|&(j, k, l, m)| !symmetry_allowed(j, k, l, m))
            .map(|(j, k, l, m)| self.entry(j, k, l, m).norm().as_f64())
            .fold(0.0, f64::max)
            / self.b1.as_f64()
    }

    /// Largest relative spread within the printed equality classes.
    pub fn equality_defect(&self) -> f64 {
        let b1 = C::new(self.b1, T::zero());
        let b2 = C::new(self.b2, T::zero());
        let d1 = (self.entry(2, 2, 2, 2) - b1).norm() / self.b1;
        let d2 = [(1, 2, 2, 1), (2, 2, 1, 1), (2, 1, 1, 2), (1, 1, 2, 2)]
            .iter()
            .map(|&(j, k, l, m)| (self.entry(j, k, l, m) - b2).norm() / self.b2)
            .fold(T::zero(), |a, b| a.max(b));
        d1.max(d2).as_f64()
    }

    /// `max |conj(T_{jklm}) - T_{mlkj}|`.
    pub fn hermitian_defect(&self) -> f64 {
        all_indices()
            .map(|(j, k, l, m)| {
                (self.entry(j, k, l, m).conj() - self.entry(m, l, k, j)).norm().as_f64()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ_{jkl} T_{jkln} α_j conj(α_k) α_l`.
    #[inline]
    pub fn cubic(&self, n: usize, a: [C<T>; 2]) -> C<T> {
        let mut s = czero();
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += self.tensor[j][k][l][n - 1] * a[j] * a[k].conj() * a[l];
                }
            }
        }
        s
    }

    pub fn report(&self) -> CoefficientsReport {
        let entries = all_indices()
            .map(|(j, k, l, m)| {
                let z = self.entry(j, k, l, m);
                TensorEntry {
                    index: [j, k, l, m],
                    re: z.re.as_f64(),
                    im: z.im.as_f64(),
                    modulus: z.norm().as_f64(),
                    allowed: symmetry_allowed(j, k, l, m),
                }
            })
            .collect();
        let forbidden = self.forbidden_max();
        let equality = self.equality_defect();
        CoefficientsReport {
            b1: self.b1.as_f64(),
            b2: self.b2.as_f64(),
            entries,
            forbidden_max_relative: forbidden,
            equality_defect_relative: equality,
            refinement_change: self.refinement_change,
            vanishing_pattern_holds: forbidden < 1e-9 && equality < 1e-10,
            grid_points: self.grid_points,
            oversample: self.oversample,
        }
    }
}

/// Iterates `(j, k, l, m) ∈ {1,2}⁴`.
pub fn all_indices() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|b| (1 + (b >> 3 & 1), 1 + (b >> 2 & 1), 1 + (b >> 1 & 1), 1 + (b & 1)))
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorEntry {
    pub index: [usize; 4],
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub allowed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientsReport {
    pub b1: f64,
    pub b2: f64,
    pub entries: Vec<TensorEntry>,
    pub forbidden_max_relative: f64,
    pub equality_defect_relative: f64,
    pub refinement_change: f64,
    pub vanishing_pattern_holds: bool,
    pub grid_points: usize,
    pub oversample: usize,
}

/// Bloch profiles `Φ1`, `Φ2` of the Dirac point.
pub fn dirac_profiles<T: Real>(dp: &DiracPointData<T>) -> [BlochProfile<T>; 2] {
    let q = dp.anchor.charge();
    let mk = |c: &[C<T>]| BlochProfile::from_coeffs(q, dp.basis.clone(), c.to_vec()).unwrap();
    [mk(&dp.phi1), mk(&dp.phi2)]
}

fn tensor_on_grid<T: Real>(phis: &[BlochProfile<T>; 2], n: usize) -> [[[[C<T>; 2]; 2]; 2]; 2] {
    let cp = CellProducts::<T>::new(n);
    let g: Vec<Vec<C<T>>> = phis.iter().map(|p| cp.grid(p)).collect();
    let mut t = [[[[czero(); 2]; 2]; 2]; 2];
    let inv = T::one() / T::from_usize_exact(n * n);
    for (j, k, l, m) in all_indices() {
        let (a, b, c, d) = (&g[j - 1], &g[k - 1], &g[l - 1], &g[m - 1]);
        let mut s = czero::<T>();
        for i in 0..n * n {
            s += d[i].conj() * a[i] * b[i].conj() * c[i];
        }
        t[j - 1][k - 1][l - 1][m - 1] = s * inv;
    }
    t
}

/// Coupling tensor by quadrature on a cell grid of `oversample · (2M+1)` nodes per direction,
/// cross-checked on the doubled grid.
pub fn coupling_tensor<T: Real>(dp: &DiracPointData<T>, oversample: usize) -> Result<EffectiveCoefficients<T>> {
    let oversample = oversample.max(1);
    let phis = dirac_profiles(dp);
    let side = dp.basis.side();
    let n = (oversample * side).next_multiple_of(2);
    let tensor = tensor_on_grid(&phis, n);
    let fine = tensor_on_grid(&phis, 2 * n);
    let change = all_indices()
        .map(|(j, k, l, m)| {
            (tensor[j - 1][k - 1][l - 1][m - 1] - fine[j - 1][k - 1][l - 1][m - 1])
                .norm()
                .as_f64()
        })
        .fold(0.0, f64::max);
    if change > 1e-8 {
        return Err(Error::Resolution { change });
    }
    Ok(EffectiveCoefficients {
        tensor,
        b1: tensor[0][0][0][0].re,
        b2: tensor[0][0][1][1].re,
        oversample,
        grid_points: n * n,
        refinement_change: change,
    })
}

/// Coefficient sums of the τ-sector mode.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParsevalReport {
    pub sum_abs_sqr: f64,
    pub sum_sqr: (f64, f64),
    pub sum_conj_sqr: (f64, f64),
}

pub fn parseval_identities<T: Real>(dp: &DiracPointData<T>) -> ParsevalReport {
    let mut a = T::zero();
    let mut s = czero::<T>();
    for c in &dp.phi1 {
        a += c.norm_sqr();
        s += c * c;
    }
    let sc = s.conj();
    ParsevalReport {
        sum_abs_sqr: a.as_f64(),
        sum_sqr: (s.re.as_f64(), s.im.as_f64()),
        sum_conj_sqr: (sc.re.as_f64(), sc.im.as_f64()),
    }
}

/// Coefficients below this modulus are skipped when synthesising fine spectra.
const PLACEMENT_THRESHOLD: f64 = 1e-15;

/// `V^ε` on the fine grid, split by sector.
#[derive(Debug, Clone)]
pub struct HartreeFields<T: Real> {
    /// Full potential `V^ε`.
    pub total: Vec<T>,
    /// Cross-sector part (`j ≠ k`).
    pub cross: Vec<T>,
    /// Averaged limit `(2π/|ξ|)(|α1|² + |α2|²)` on the same grid.
    pub limit: Vec<T>,
    /// Largest imaginary part encountered before taking real parts.
    pub imag_max: f64,
    /// Spectral mass that fell outside the fine band.
    pub dropped: f64,
}

fn check_box<T: Real>(alpha: &SpinorField<T>, grid: &CommensurateGrid<T>) -> Result<()> {
    let tol = T::lit(1e-9) * (grid.grid.l1 + grid.grid.l2);
    if (alpha.grid.l1 - grid.grid.l1).abs() > tol || (alpha.grid.l2 - grid.grid.l2).abs() > tol {
        return Err(Error::NonCommensurate(format!(
            "envelope box {} × {} differs from the ε-grid box {} × {}",
            alpha.grid.l1, alpha.grid.l2, grid.grid.l1, grid.grid.l2
        )));
    }
    if alpha.grid.n1 > grid.grid.n1 || alpha.grid.n2 > grid.grid.n2 {
        return Err(invalid("grid", "envelope grid is finer than the ε-grid"));
    }
    Ok(())
}

/// Applies `2π/|ξ|` (zero mode dropped) to a fine spectrum and returns real and imaginary parts.
fn coulomb_physical<T: Real>(spec: &mut [C<T>], grid: &CommensurateGrid<T>, fft: &Fft2<T>) -> (Vec<T>, T) {
    let (xi1, xi2) = grid.grid.wavenumbers();
    let n2 = grid.grid.n2;
    let tp = T::TAU();
    for (p, z) in spec.iter_mut().enumerate() {
        let k = xi1[p / n2].hypot(xi2[p % n2]);
        *z = if k == T::zero() { czero() } else { *z * (tp / k) };
    }
    fft.to_physical(spec);
    let im = spec.iter().fold(T::zero(), |m, z| m.max(z.im.abs()));
    (spec.iter().map(|z| z.re).collect(), im)
}

/// `V^ε = (1/|·|) ∗ Σ_{jk} α_j ᾱ_k (Φ_j Φ̄_k)(·/ε)` for arbitrary profiles of equal charge,
/// on the fine grid of `grid`. The envelope `α` lives on a coarser grid of the same box.
pub fn hartree_potential_with_profiles<T: Real>(
    alpha: &SpinorField<T>,
    profiles: &[BlochProfile<T>; 2],
    grid: &CommensurateGrid<T>,
) -> Result<HartreeFields<T>> {
    check_box(alpha, grid)?;
    if profiles[0].charge != profiles[1].charge {
        return Err(invalid("profiles", "profiles must carry the same vertex charge"));
    }
    let cutoff = 2 * profiles[0].cutoff().max(profiles[1].cutoff());
    let bw = profiles[0].cutoff() + profiles[1].cutoff();
    let cp = CellProducts::<T>::for_bandwidth(bw, cutoff);
    let coarse_shape = (alpha.grid.n1, alpha.grid.n2);
    let coarse_fft = Fft2::<T>::new(coarse_shape.0, coarse_shape.1);
    let fine_len = grid.grid.len();
    let mut total = vec![czero::<T>(); fine_len];
    let mut cross = vec![czero::<T>(); fine_len];
    let mut limit = vec![czero::<T>(); fine_len];
    let mut dropped = T::zero();
    let thr = T::lit(PLACEMENT_THRESHOLD);
    for j in 0..2 {
        for k in 0..2 {
            let a = alpha.component(j + 1);
            let b = alpha.component(k + 1);
            let mut rho: Vec<C<T>> = a.iter().zip(b).map(|(x, y)| x * y.conj()).collect();
            coarse_fft.to_spectral(&mut rho);
            let prod = cp.product(&[&profiles[j], &profiles[k].conj()], cutoff)?;
            let target = if j == k { &mut total } else { &mut cross };
            dropped += place_two_scale(target, grid, &rho, coarse_shape, &prod, thr);
            if j == k {
                let unit = BlochProfile::from_coeffs(0, prod.basis.clone(), {
                    let mut c = vec![czero(); prod.basis.len()];
                    c[prod.basis.position((0, 0)).expect("origin in basis")] = C::new(T::one(), T::zero());
                    c
                })?;
                place_two_scale(&mut limit, grid, &rho, coarse_shape, &unit, thr);
            }
        }
    }
    for (t, c) in total.iter_mut().zip(&cross) {
        *t += c;
    }
    let fft = Fft2::<T>::new(grid.grid.n1, grid.grid.n2);
    let (total, i1) = coulomb_physical(&mut total, grid, &fft);
    let (cross, i2) = coulomb_physical(&mut cross, grid, &fft);
    let (limit, i3) = coulomb_physical(&mut limit, grid, &fft);
    Ok(HartreeFields {
        total,
        cross,
        limit,
        imag_max: i1.max(i2).max(i3).as_f64(),
        dropped: dropped.as_f64(),
    })
}

/// Hartree potential generated by the Dirac modes.
pub fn hartree_epsilon_potential<T: Real>(
    alpha: &SpinorField<T>,
    dp: &DiracPointData<T>,
    grid: &CommensurateGrid<T>,
) -> Result<HartreeFields<T>> {
    hartree_potential_with_profiles(alpha, &dirac_profiles(dp), grid)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HartreeRow {
    pub epsilon: f64,
    /// `‖V^ε - V^lim‖_∞`.
    pub deviation: f64,
    /// `‖V_2^ε‖_∞`.
    pub cross: f64,
    /// `‖V^lim‖_∞`.
    pub target: f64,
    pub imag_max: f64,
    pub dropped: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HartreeReport {
    pub rows: Vec<HartreeRow>,
}

impl HartreeReport {
    /// Deviations strictly decrease along the ladder.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].deviation < w[0].deviation)
    }

    /// `‖V_2‖_∞ / ‖V^lim‖_∞` at the smallest ε.
    pub fn final_cross_ratio(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.cross / r.target)
    }
}

fn sup<T: Real>(v: &[T]) -> f64 {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs())).as_f64()
}

/// Evaluates `V^ε` along a strictly decreasing ladder. `base` fixes the box and resolution;
/// every rung uses the same box with rescaled cell counts.
pub fn hartree_limit_check<T: Real>(
    alpha: &SpinorField<T>,
    dp: &DiracPointData<T>,
    base: &CommensurateGrid<T>,
    ladder: &[T],
) -> Result<HartreeReport> {
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("ladder", "ε ladder must be strictly decreasing"));
    }
    let profiles = dirac_profiles(dp);
    let mut rows = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let g = base.rescaled(eps)?;
        let h = hartree_potential_with_profiles(alpha, &profiles, &g)?;
        let dev: Vec<T> = h.total.iter().zip(&h.limit).map(|(a, b)| *a - *b).collect();
        rows.push(HartreeRow {
            epsilon: eps.as_f64(),
            deviation: sup(&dev),
            cross: sup(&h.cross),
            target: sup(&h.limit),
            imag_max: h.imag_max,
            dropped: h.dropped,
        });
    }
    Ok(HartreeReport { rows })
}
