//! Lattice geometry: the tetrahedral direction set, step 4-vectors, site
//! addressing by step counts, null face normals and the volume per point.
//!
//! Sites and displacements are always addressed by four integer step counts
//! `N^j`; the embedding into Minkowski coordinates is `ε Σ_j N^j N_j` with
//! `N_j = (1, α n̂_j)`. Metric signature is `(+, −, −, −)`.

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for constructor-level identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for deciding lattice membership of user-supplied points.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub enum DimensionMode {
    /// 3+1 dimensions, four tetrahedral directions.
    #[default]
    Spacetime4,
    /// 2+1 dimensions, three planar directions at 120°.
    Planar3,
}

impl DimensionMode {
    pub fn n_directions(self) -> usize {
        match self {
            DimensionMode::Spacetime4 => 4,
            DimensionMode::Planar3 => 3,
        }
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            DimensionMode::Spacetime4 => 3,
            DimensionMode::Planar3 => 2,
        }
    }

    /// Step speed at which the faces of the discrete light cone are null.
    pub fn marginal_speed(self) -> f64 {
        self.spatial_dim() as f64
    }

    /// Weight multiplying each projector in the one-step rule: 1/2 in 4D, 2/3 in 2+1.
    pub fn step_weight(self) -> f64 {
        2.0 / self.n_directions() as f64
    }

    /// Pairwise dot product of distinct direction vectors.
    pub fn pair_dot(self) -> f64 {
        -1.0 / self.spatial_dim() as f64
    }

    pub fn directions(self) -> impl Iterator<Item = Direction> {
        (1..=self.n_directions() as u8).map(move |index| Direction { index, mode: self })
    }
}

/// One of the lattice step directions, 1-based as in `n̂_1 … n̂_4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Direction {
    index: u8,
    mode: DimensionMode,
}

impl Direction {
    pub const D1: Direction = Direction::spacetime(1);
    pub const D2: Direction = Direction::spacetime(2);
    pub const D3: Direction = Direction::spacetime(3);
    pub const D4: Direction = Direction::spacetime(4);
    pub const ALL4: [Direction; 4] = [Self::D1, Self::D2, Self::D3, Self::D4];

    const fn spacetime(index: u8) -> Direction {
        Direction { index, mode: DimensionMode::Spacetime4 }
    }

    pub fn new(index: u8, mode: DimensionMode) -> Result<Direction> {
        if index == 0 || index as usize > mode.n_directions() {
            return Err(Error::InvalidDirection { index, mode });
        }
        Ok(Direction { index, mode })
    }

    pub fn planar(index: u8) -> Result<Direction> {
        Direction::new(index, DimensionMode::Planar3)
    }

    pub fn index(self) -> u8 {
        self.index
    }

    /// Zero-based position, for array indexing.
    pub fn slot(self) -> usize {
        self.index as usize - 1
    }

    pub fn mode(self) -> DimensionMode {
        self.mode
    }

    /// Unit 3-vector `n̂_i` (planar vectors have zero z component).
    pub fn unit_vector(self) -> [f64; 3] {
        match self.mode {
            DimensionMode::Spacetime4 => match self.index {
                1 => [2.0 * SQRT2 / 3.0, 0.0, -1.0 / 3.0],
                2 => [-SQRT2 / 3.0, 6f64.sqrt() / 3.0, -1.0 / 3.0],
                3 => [-SQRT2 / 3.0, -(6f64.sqrt()) / 3.0, -1.0 / 3.0],
                _ => [0.0, 0.0, 1.0],
            },
            DimensionMode::Planar3 => {
                let half_root3 = 3f64.sqrt() / 2.0;
                match self.index {
                    1 => [1.0, 0.0, 0.0],
                    2 => [-0.5, half_root3, 0.0],
                    _ => [-0.5, -half_root3, 0.0],
                }
            }
        }
    }
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Minkowski inner product with signature `(+, −, −, −)`.
pub fn minkowski(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

/// The set of spatial step directions for one dimension mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tetrad {
    pub mode: DimensionMode,
    pub vectors: Vec<[f64; 3]>,
}

/// Largest deviations of a [`Tetrad`] from its defining identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TetradCheck {
    pub unit_norm: f64,
    pub vector_sum: f64,
    pub pair_dot: f64,
    pub second_moment: f64,
}

impl TetradCheck {
    pub fn max_deviation(&self) -> f64 {
        self.unit_norm
            .max(self.vector_sum)
            .max(self.pair_dot)
            .max(self.second_moment)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation() <= tol
    }
}

pub fn tetrad(mode: DimensionMode) -> Tetrad {
    Tetrad { mode, vectors: mode.directions().map(Direction::unit_vector).collect() }
}

impl Tetrad {
    /// Re-checks unit norms, `Σ n̂ = 0`, the pairwise dot product and
    /// `Σ_i n̂_i^a n̂_i^b = (n/d) δ^{ab}` over the spatial block.
    pub fn check(&self) -> TetradCheck {
        let n = self.vectors.len();
        let d = self.mode.spatial_dim();
        let mut check = TetradCheck { unit_norm: 0.0, vector_sum: 0.0, pair_dot: 0.0, second_moment: 0.0 };
        let mut sum = [0.0; 3];
        for (i, a) in self.vectors.iter().enumerate() {
            check.unit_norm = check.unit_norm.max((dot3(a, a) - 1.0).abs());
            for c in 0..3 {
                sum[c] += a[c];
            }
            for b in &self.vectors[i + 1..] {
                check.pair_dot = check.pair_dot.max((dot3(a, b) - self.mode.pair_dot()).abs());
            }
        }
        check.vector_sum = sum.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        for a in 0..3 {
            for b in 0..3 {
                let moment: f64 = self.vectors.iter().map(|v| v[a] * v[b]).sum();
                let expected = if a == b && a < d { n as f64 / d as f64 } else { 0.0 };
                check.second_moment = check.second_moment.max((moment - expected).abs());
            }
        }
        check
    }
}

/// Step 4-vectors `N_i = (1, α n̂_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepVectors {
    pub alpha: f64,
    pub mode: DimensionMode,
    pub vectors: Vec<[f64; 4]>,
}

pub fn step_vectors(alpha: f64, mode: DimensionMode) -> Result<StepVectors> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    let vectors = mode
        .directions()
        .map(|dir| {
            let n = dir.unit_vector();
            [1.0, alpha * n[0], alpha * n[1], alpha * n[2]]
        })
        .collect();
    Ok(StepVectors { alpha, mode, vectors })
}

impl StepVectors {
    pub fn get(&self, dir: Direction) -> [f64; 4] {
        self.vectors[dir.slot()]
    }
}

/// Sum `k` of the three step vectors spanning a face of the discrete cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceNormal {
    pub face: [u8; 3],
    pub k: [f64; 4],
    /// Minkowski norm² of `k`, equal to `9 − α²`.
    pub norm2: f64,
    /// `k · N_i` for the three face vectors.
    pub face_products: [f64; 3],
}

pub fn face_null_normal(face: [Direction; 3], alpha: f64) -> Result<FaceNormal> {
    if face.iter().any(|d| d.mode() != DimensionMode::Spacetime4)
        || face[0] == face[1]
        || face[1] == face[2]
        || face[0] == face[2]
    {
        return Err(Error::MalformedFace);
    }
    let steps = step_vectors(alpha, DimensionMode::Spacetime4)?;
    let mut k = [0.0; 4];
    for dir in face {
        let n = steps.get(dir);
        for mu in 0..4 {
            k[mu] += n[mu];
        }
    }
    let face_products = face.map(|dir| minkowski(&k, &steps.get(dir)));
    Ok(FaceNormal { face: face.map(Direction::index), k, norm2: minkowski(&k, &k), face_products })
}

/// Integer step counts `N^j`, one per direction. Planar displacements leave
/// the fourth count at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct LatticeDisplacement {
    pub counts: [i64; 4],
}

impl LatticeDisplacement {
    pub const ORIGIN: LatticeDisplacement = LatticeDisplacement { counts: [0; 4] };

    pub fn new(counts: [i64; 4]) -> Self {
        LatticeDisplacement { counts }
    }

    pub fn unit(dir: Direction) -> Self {
        let mut counts = [0; 4];
        counts[dir.slot()] = 1;
        LatticeDisplacement { counts }
    }

    /// Total number of steps, i.e. the time slice of a site.
    pub fn total(&self) -> i64 {
        self.counts.iter().sum()
    }

    pub fn is_forward(&self) -> bool {
        self.counts.iter().all(|&c| c >= 0)
    }

    /// The site one step further along `dir`.
    pub fn step(&self, dir: Direction) -> Self {
        let mut counts = self.counts;
        counts[dir.slot()] += 1;
        LatticeDisplacement { counts }
    }

    /// The site one step back along `dir`.
    pub fn step_back(&self, dir: Direction) -> Self {
        let mut counts = self.counts;
        counts[dir.slot()] -= 1;
        LatticeDisplacement { counts }
    }
}

/// Time step, spatial step and derived lengths of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeScales {
    pub epsilon: f64,
    pub alpha: f64,
    /// Spatial step length `a = α ε`.
    pub a: f64,
    /// Edge of the constituent fcc cube, `L = 2a/√3`.
    pub cube_edge: f64,
    /// Spatial volume per lattice point.
    pub vp: f64,
}

impl LatticeScales {
    pub fn new(epsilon: f64, alpha: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::NonPositiveLength(epsilon));
        }
        if !(alpha > 0.0) {
            return Err(Error::NonPositiveAlpha(alpha));
        }
        let a = alpha * epsilon;
        Ok(LatticeScales { epsilon, alpha, a, cube_edge: 2.0 * a / 3f64.sqrt(), vp: volume_per_point(a)? })
    }

    /// Spacetime position `ε Σ_j N^j N_j` of a displacement.
    pub fn embed(&self, disp: &LatticeDisplacement) -> [f64; 4] {
        let mut x = [0.0; 4];
        for dir in Direction::ALL4 {
            let count = disp.counts[dir.slot()] as f64;
            let n = dir.unit_vector();
            x[0] += self.epsilon * count;
            for a in 0..3 {
                x[a + 1] += self.epsilon * count * self.alpha * n[a];
            }
        }
        x
    }

    /// Recovers step counts from a spacetime position using
    /// `N^i = x⁰/(4ε) + 3 n̂_i·x/(4αε)`.
    pub fn invert(&self, x: &[f64; 4]) -> Result<LatticeDisplacement> {
        let spatial = [x[1], x[2], x[3]];
        let mut counts = [0i64; 4];
        let mut worst = 0.0f64;
        for dir in Direction::ALL4 {
            let exact = x[0] / (4.0 * self.epsilon)
                + 3.0 * dot3(&dir.unit_vector(), &spatial) / (4.0 * self.alpha * self.epsilon);
            let rounded = exact.round();
            worst = worst.max((exact - rounded).abs());
            counts[dir.slot()] = rounded as i64;
        }
        if worst > MEMBERSHIP_TOL {
            return Err(Error::OffLattice(worst));
        }
        Ok(LatticeDisplacement { counts })
    }
}

/// Contracts a wave covector with the α = 3 step vectors: `k_j = k_μ N_j^μ`.
pub fn wavevector_to_lattice(k_mu: &[f64; 4]) -> [f64; 4] {
    Direction::ALL4.map(|dir| {
        let n = dir.unit_vector();
        k_mu[0] + 3.0 * (k_mu[1] * n[0] + k_mu[2] * n[1] + k_mu[3] * n[2])
    })
}

/// Inverse of [`wavevector_to_lattice`].
pub fn lattice_to_wavevector(k_j: &[f64; 4]) -> [f64; 4] {
    let mut k = [0.0; 4];
    for dir in Direction::ALL4 {
        let kj = k_j[dir.slot()];
        let n = dir.unit_vector();
        k[0] += kj / 4.0;
        for a in 0..3 {
            k[a + 1] += kj * n[a] / 4.0;
        }
    }
    k
}

/// `|det ∂k_j/∂k_μ|` for the α = 3 step vectors; equals `48√3`.
pub fn jacobian() -> f64 {
    let steps = step_vectors(3.0, DimensionMode::Spacetime4).expect("alpha = 3 is valid");
    Matrix4::from_fn(|j, mu| steps.vectors[j][mu]).determinant().abs()
}

/// Spatial volume per fcc lattice point, `16 a³ / (3√3)`.
pub fn volume_per_point(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NonPositiveLength(a));
    }
    Ok(16.0 / (3.0 * 3f64.sqrt()) * a.powi(3))
}
