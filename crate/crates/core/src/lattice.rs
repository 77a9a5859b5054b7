//! Honeycomb (triangular Bravais) lattice geometry and its 2π/3 rotation symmetry.
//!
//! Dual indices `m = (m1, m2)` label reciprocal vectors `k_m = m1 k1 + m2 k2`.
//! The rotation acts on dual coordinates as `R(a, b) = (-b, a - b)`, which lets
//! every symmetry operation on plane-wave bases be an exact integer permutation.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{tau, Real, C};

/// Integer dual-lattice index.
pub type DualIndex = (i64, i64);

/// Two-component real vector.
pub type Vec2<T> = [T; 2];

#[inline]
pub fn dot<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm<T: Real>(a: Vec2<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn add<T: Real>(a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub<T: Real>(a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale<T: Real>(s: T, a: Vec2<T>) -> Vec2<T> {
    [s * a[0], s * a[1]]
}

/// Anchor point of a rotation orbit in reciprocal space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Anchor {
    /// The Brillouin-zone vertex `K`.
    K,
    /// The opposite vertex `K' = -K`.
    KPrime,
    /// The zone centre; pure dual-lattice rotation.
    Gamma,
}

impl Anchor {
    /// Anchor position in dual coordinates as thirds: `(3a, 3b)`.
    pub fn thirds(self) -> DualIndex {
        match self {
            Anchor::K => (1, -1),
            Anchor::KPrime => (-1, 1),
            Anchor::Gamma => (0, 0),
        }
    }

    /// Multiple of `K` represented by the anchor.
    pub fn charge(self) -> i64 {
        match self {
            Anchor::K => 1,
            Anchor::KPrime => -1,
            Anchor::Gamma => 0,
        }
    }
}

/// Exact rational point in dual coordinates, `k = a k1 + b k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DualCoord {
    pub a: Ratio<i64>,
    pub b: Ratio<i64>,
}

impl DualCoord {
    pub fn new(a: Ratio<i64>, b: Ratio<i64>) -> Self {
        Self { a, b }
    }

    pub fn anchor(anchor: Anchor) -> Self {
        let (a, b) = anchor.thirds();
        Self::new(Ratio::new(a, 3), Ratio::new(b, 3))
    }

    /// Shift by an integer dual index.
    pub fn shifted(self, m: DualIndex) -> Self {
        Self::new(self.a + m.0, self.b + m.1)
    }

    /// Rotation by the lattice symmetry `R`, exact.
    pub fn rotated(self) -> Self {
        Self::new(-self.b, self.a - self.b)
    }

    /// `|k|² / q²` as an exact rational.
    pub fn norm_sqr_over_q2(self) -> Ratio<i64> {
        self.a * self.a - self.a * self.b + self.b * self.b
    }

    pub fn to_cartesian<T: Real>(self, geom: &LatticeGeometry<T>) -> Vec2<T> {
        let r = |x: Ratio<i64>| T::from_i64_exact(*x.numer()) / T::from_i64_exact(*x.denom());
        add(scale(r(self.a), geom.k1), scale(r(self.b), geom.k2))
    }
}

/// Lattice vectors, dual vectors, zone vertices and the rotation for lattice constant `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGeometry<T: Real> {
    pub a: T,
    pub v1: Vec2<T>,
    pub v2: Vec2<T>,
    pub k1: Vec2<T>,
    pub k2: Vec2<T>,
    pub q: T,
    pub cell_area: T,
    pub k_vertex: Vec2<T>,
    pub k_prime: Vec2<T>,
    pub rotation: [[T; 2]; 2],
    pub tau: C<T>,
}

/// Builds the honeycomb geometry for lattice constant `a > 0`.
pub fn build_lattice<T: Real>(a: T) -> Result<LatticeGeometry<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(invalid("a", format!("lattice constant must be positive, got {a}")));
    }
    let half = T::lit(0.5);
    let s3 = T::lit(3.0).sqrt();
    let hs3 = s3 * half;
    let q = T::lit(4.0) * T::PI() / (a * s3);
    let k1 = [q * half, q * hs3];
    let k2 = [q * half, -q * hs3];
    // K = (k1 - k2)/3 = (0, q/√3); see the rotation relations R K = K + k2, R² K = K - k1.
    let k_vertex = [T::zero(), q / s3];
    Ok(LatticeGeometry {
        a,
        v1: [a * hs3, a * half],
        v2: [a * hs3, -a * half],
        k1,
        k2,
        q,
        cell_area: hs3 * a * a,
        k_vertex,
        k_prime: [-k_vertex[0], -k_vertex[1]],
        rotation: [[-half, hs3], [-hs3, -half]],
        tau: tau(),
    })
}

impl<T: Real> LatticeGeometry<T> {
    pub fn anchor_point(&self, anchor: Anchor) -> Vec2<T> {
        match anchor {
            Anchor::K => self.k_vertex,
            Anchor::KPrime => self.k_prime,
            Anchor::Gamma => [T::zero(), T::zero()],
        }
    }

    /// `k_m = m1 k1 + m2 k2`.
    pub fn dual_vector(&self, m: DualIndex) -> Vec2<T> {
        add(
            scale(T::from_i64_exact(m.0), self.k1),
            scale(T::from_i64_exact(m.1), self.k2),
        )
    }

    /// `k + k_m`.
    pub fn shifted_vector(&self, m: DualIndex, k: Vec2<T>) -> Vec2<T> {
        add(k, self.dual_vector(m))
    }

    /// Applies the rotation matrix to a Cartesian vector.
    pub fn rotate(&self, x: Vec2<T>) -> Vec2<T> {
        let r = &self.rotation;
        [r[0][0] * x[0] + r[0][1] * x[1], r[1][0] * x[0] + r[1][1] * x[1]]
    }

    /// Dual coordinates `(a, b)` with `k = a k1 + b k2`.
    pub fn to_dual(&self, k: Vec2<T>) -> Vec2<T> {
        let two_pi = T::lit(2.0) * T::PI();
        [dot(k, self.v1) / two_pi, dot(k, self.v2) / two_pi]
    }

    /// Exact `|anchor + k_m|²`, identical in floating point for every member of a rotation orbit.
    pub fn anchored_norm_sqr(&self, m: DualIndex, anchor: Anchor) -> T {
        let (ta, tb) = anchor.thirds();
        let (a, b) = (3 * m.0 + ta, 3 * m.1 + tb);
        let n = a * a - a * b + b * b;
        T::from_i64_exact(n) * self.q * self.q / T::lit(9.0)
    }
}

/// Index map `m ↦ m'` with `anchor + k_{m'} = R (anchor + k_m)`.
pub fn rotate_dual_index(m: DualIndex, anchor: Anchor) -> DualIndex {
    match anchor {
        Anchor::K => (-m.1, 1 + m.0 - m.1),
        Anchor::KPrime => (-m.1, -1 + m.0 - m.1),
        Anchor::Gamma => (-m.1, m.0 - m.1),
    }
}

/// Inversion of a dual index. Note `-(K + k_m) = K' + k_{-m}`: inversion exchanges the two
/// vertices, so on `K` bases it is always combined with complex conjugation.
pub fn invert_dual_index(m: DualIndex) -> DualIndex {
    (-m.0, -m.1)
}

/// Centered square index box `|m1|, |m2| ≤ M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneWaveBasis {
    cutoff: usize,
    indices: Vec<DualIndex>,
}

impl PlaneWaveBasis {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(invalid("M", "plane-wave cutoff must be at least 1"));
        }
        let m = cutoff as i64;
        let indices = (-m..=m)
            .flat_map(|m1| (-m..=m).map(move |m2| (m1, m2)))
            .collect();
        Ok(Self { cutoff, indices })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[DualIndex] {
        &self.indices
    }

    pub fn index(&self, pos: usize) -> DualIndex {
        self.indices[pos]
    }

    pub fn contains(&self, m: DualIndex) -> bool {
        let c = self.cutoff as i64;
        m.0.abs() <= c && m.1.abs() <= c
    }

    pub fn position(&self, m: DualIndex) -> Option<usize> {
        if !self.contains(m) {
            return None;
        }
        let c = self.cutoff as i64;
        let s = self.side() as i64;
        Some(((m.0 + c) * s + (m.1 + c)) as usize)
    }

    /// Positions whose rotation orbit about `anchor` stays inside the box.
    pub fn orbit_closed_positions(&self, anchor: Anchor) -> Vec<usize> {
        (0..self.len())
            .filter(|&p| {
                let m1 = rotate_dual_index(self.indices[p], anchor);
                let m2 = rotate_dual_index(m1, anchor);
                self.contains(m1) && self.contains(m2)
            })
            .collect()
    }
}

/// Named high-symmetry points of the hexagonal zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryPoint {
    Gamma,
    K,
    KPrime,
    /// Edge midpoint `k1/2`.
    M,
}

impl SymmetryPoint {
    pub fn position<T: Real>(self, geom: &LatticeGeometry<T>) -> Vec2<T> {
        match self {
            SymmetryPoint::Gamma => [T::zero(), T::zero()],
            SymmetryPoint::K => geom.k_vertex,
            SymmetryPoint::KPrime => geom.k_prime,
            SymmetryPoint::M => scale(T::lit(0.5), geom.k1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SymmetryPoint::Gamma => "G",
            SymmetryPoint::K => "K",
            SymmetryPoint::KPrime => "K'",
            SymmetryPoint::M => "M",
        }
    }
}

/// A sampled point on a reciprocal-space path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint<T: Real> {
    pub k: Vec2<T>,
    pub arclength: T,
}

/// Samples the polyline through `corners` with `points_per_segment` points per segment
/// (endpoints included, shared corners emitted once).
pub fn high_symmetry_path<T: Real>(
    geom: &LatticeGeometry<T>,
    corners: &[SymmetryPoint],
    points_per_segment: usize,
) -> Result<Vec<PathPoint<T>>> {
    if corners.len() < 2 {
        return Err(invalid("segments", "a path needs at least one segment"));
    }
    if points_per_segment < 2 {
        return Err(invalid("pointsPerSegment", "need at least 2 points per segment"));
    }
    let mut out: Vec<PathPoint<T>> = Vec::new();
    let mut s0 = T::zero();
    for w in corners.windows(2) {
        let (p, r) = (w[0].position(geom), w[1].position(geom));
        let d = sub(r, p);
        let len = norm(d);
        let n = points_per_segment - 1;
        let start = usize::from(!out.is_empty());
        for i in start..=n {
            let f = T::from_usize_exact(i) / T::from_usize_exact(n);
            // Endpoints are copied exactly so corners such as K appear bit-for-bit.
            let k = if i == 0 {
                p
            } else if i == n {
                r
            } else {
                add(p, scale(f, d))
            };
            out.push(PathPoint {
                k,
                arclength: s0 + f * len,
            });
        }
        s0 += len;
    }
    Ok(out)
}

/// The conventional band-diagram path Γ–K–M–Γ–K'.
pub fn default_path<T: Real>(
    geom: &LatticeGeometry<T>,
    points_per_segment: usize,
) -> Result<Vec<PathPoint<T>>> {
    use SymmetryPoint::*;
    high_symmetry_path(geom, &[Gamma, K, M, Gamma, KPrime], points_per_segment)
}

/// `n` points on the circle of radius `r` about `center`, starting at angle `phase`.
pub fn circle_points<T: Real>(center: Vec2<T>, r: T, n: usize, phase: T) -> Vec<Vec2<T>> {
    (0..n)
        .map(|i| {
            let th = phase + T::lit(2.0) * T::PI() * T::from_usize_exact(i) / T::from_usize_exact(n);
            [center[0] + r * th.cos(), center[1] + r * th.sin()]
        })
        .collect()
}
