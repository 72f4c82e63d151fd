//! The amplification matrix `A(θ) = ½ Σ_j P_j e^{iθ_j}`, its closed-form
//! eigenstructure, the norm-bound determinant `Φ = det(A†A − 1)`, spectrum
//! scans over the angle torus and the lattice dispersion relation.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{dot3, Direction};
use crate::spin::{chiral_projector, weighted_projector, Chirality, SpinMatrix, Spinor};
use crate::C64;

/// Discriminant magnitude below which the two eigenvalues are treated as equal.
pub const DEFECT_TOL: f64 = 1e-14;
/// Relative tolerance when ordering eigenvalues of (nearly) equal modulus.
const ORDER_TOL: f64 = 1e-13;
/// Largest number of grid points a scan may visit.
pub const MAX_SCAN_POINTS: u64 = 100_000_000;
/// Tolerance for treating two angles as coincident mod 2π.
pub const COINCIDENCE_TOL: f64 = 1e-9;

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
const PARTITIONS: [((usize, usize), (usize, usize)); 3] = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))];

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// Distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Four phase angles `θ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaQuad {
    pub theta: [f64; 4],
    /// Set when `Σ θ_j ≡ 0 (mod 2π)` is enforced.
    pub constrained: bool,
}

impl ThetaQuad {
    /// Unconstrained angles, each required to lie in `[−π, π]`.
    pub fn new(theta: [f64; 4]) -> Result<Self> {
        for &t in &theta {
            if !(-PI - 1e-12..=PI + 1e-12).contains(&t) {
                return Err(Error::AngleOutOfRange(t));
            }
        }
        Ok(ThetaQuad { theta, constrained: false })
    }

    /// Angles that must sum to zero mod 2π.
    pub fn new_constrained(theta: [f64; 4]) -> Result<Self> {
        let mut q = ThetaQuad::new(theta)?;
        let sum: f64 = theta.iter().sum();
        if wrap_angle(sum).abs() > 1e-12 {
            return Err(Error::UnconstrainedAngles(sum));
        }
        q.constrained = true;
        Ok(q)
    }

    /// Free `θ₁, θ₂, θ₃` with `θ₄ = −(θ₁+θ₂+θ₃)` wrapped into `[−π, π)`.
    pub fn from_free(t1: f64, t2: f64, t3: f64) -> Self {
        ThetaQuad { theta: [t1, t2, t3, wrap_angle(-(t1 + t2 + t3))], constrained: true }
    }

    /// Builds angles without range checks. Periodicity of `A` makes any real
    /// values meaningful; this is the form used by the dispersion relation.
    pub fn raw(theta: [f64; 4]) -> Self {
        ThetaQuad { theta, constrained: false }
    }

    pub fn sum(&self) -> f64 {
        self.theta.iter().sum()
    }

    /// Every angle shifted by `delta` and wrapped.
    pub fn shifted(&self, delta: f64) -> Self {
        ThetaQuad { theta: self.theta.map(|t| wrap_angle(t + delta)), constrained: self.constrained }
    }

    /// True when at least three of the angles agree mod 2π within `tol`.
    pub fn three_coincide(&self, tol: f64) -> bool {
        let t = &self.theta;
        let close = |a: usize, b: usize| circular_distance(t[a], t[b]) <= tol;
        [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
            .iter()
            .any(|&(a, b, c)| close(a, b) && close(b, c) && close(a, c))
    }
}

/// Precomputed weights `W_j = ½(1 + (3/α) n̂_j·σ⃗)`, or chiral projectors.
#[derive(Debug, Clone, Copy)]
pub struct Amplifier {
    weights: [SpinMatrix; 4],
}

impl Amplifier {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::NonPositiveAlpha(alpha));
        }
        Ok(Amplifier { weights: Direction::ALL4.map(|d| weighted_projector(d, alpha)) })
    }

    /// `½ Σ_j Q_j e^{iθ_j}` with `Q = P` or `P̄`.
    pub fn chiral(chirality: Chirality) -> Self {
        Amplifier { weights: Direction::ALL4.map(|d| chiral_projector(d, chirality)) }
    }

    pub fn matrix(&self, theta: &[f64; 4]) -> SpinMatrix {
        let mut a = SpinMatrix::ZERO;
        for (w, &t) in self.weights.iter().zip(theta) {
            a += w.scale(C64::from_polar(0.5, t));
        }
        a
    }
}

/// `A(θ) = ½ Σ_j W_j e^{iθ_j}`; at `α = 3` the weights are the projectors `P_j`.
pub fn amplification(theta: &ThetaQuad, alpha: f64) -> Result<SpinMatrix> {
    Ok(Amplifier::new(alpha)?.matrix(&theta.theta))
}

/// Eigenvalues and eigenvectors of a 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub lambda1: C64,
    pub lambda2: C64,
    pub v1: Spinor,
    /// Absent when the matrix is defective.
    pub v2: Option<Spinor>,
    pub defective: bool,
}

impl EigenPair {
    pub fn values(&self) -> [C64; 2] {
        [self.lambda1, self.lambda2]
    }

    /// `max_k |A v_k − λ_k v_k|` over the returned pairs.
    pub fn residual(&self, a: &SpinMatrix) -> f64 {
        let mut worst = a.apply(&self.v1).max_abs_diff(&(self.v1 * self.lambda1));
        if let Some(v2) = self.v2 {
            worst = worst.max(a.apply(&v2).max_abs_diff(&(v2 * self.lambda2)));
        }
        worst
    }
}

/// `true` when `a` should come before `b`: larger modulus, then larger real
/// part, then larger imaginary part.
fn precedes(a: C64, b: C64) -> bool {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > ORDER_TOL * ma.max(mb).max(1.0) {
        return ma > mb;
    }
    if a.re != b.re {
        return a.re > b.re;
    }
    a.im >= b.im
}

fn null_vector(a: &SpinMatrix, lambda: C64) -> Spinor {
    let m = &a.m;
    let row0 = Spinor::new(m[0][1], lambda - m[0][0]);
    let row1 = Spinor::new(lambda - m[1][1], m[1][0]);
    let v = if row0.norm2() >= row1.norm2() { row0 } else { row1 };
    if v.norm2() == 0.0 {
        Spinor::up()
    } else {
        v.normalized()
    }
}

/// Closed-form roots of `λ² − tr(A) λ + det(A)` with eigenvectors from the
/// null space of `A − λ`.
pub fn eigenvalues(a: &SpinMatrix) -> EigenPair {
    let tr = a.trace();
    let det = a.det();
    let disc = tr * tr - det * 4.0;
    if disc.norm() < DEFECT_TOL {
        let lambda = tr * 0.5;
        let shifted = *a - SpinMatrix::IDENTITY.scale(lambda);
        if shifted.max_abs() < 1e-12 {
            return EigenPair { lambda1: lambda, lambda2: lambda, v1: Spinor::up(), v2: Some(Spinor::down()), defective: false };
        }
        return EigenPair { lambda1: lambda, lambda2: lambda, v1: null_vector(a, lambda), v2: None, defective: true };
    }
    let root = disc.sqrt();
    // pick the sign that avoids cancellation, then use λ₁λ₂ = det
    let big = if (tr + root).norm() >= (tr - root).norm() { (tr + root) * 0.5 } else { (tr - root) * 0.5 };
    let small = if big.norm() > 0.0 { det / big } else { C64::new(0.0, 0.0) };
    let (l1, l2) = if precedes(big, small) { (big, small) } else { (small, big) };
    EigenPair { lambda1: l1, lambda2: l2, v1: null_vector(a, l1), v2: Some(null_vector(a, l2)), defective: false }
}

fn alpha3() -> Amplifier {
    Amplifier::new(3.0).expect("alpha = 3 is valid")
}

/// `Φ` from the closed form `(1/18) Σ_{(ij)(kl)} (1 − cos θ_ij)(1 − cos θ_kl)`.
pub fn phi(theta: &ThetaQuad) -> f64 {
    let t = &theta.theta;
    let term = |(i, j): (usize, usize)| 1.0 - (t[i] - t[j]).cos();
    PARTITIONS.iter().map(|&(p, q)| term(p) * term(q)).sum::<f64>() / 18.0
}

/// `Φ = det(A†A − 1)` evaluated directly at `α = 3`.
pub fn phi_direct(theta: &ThetaQuad) -> f64 {
    let a = alpha3().matrix(&theta.theta);
    ((a.dagger() * a) - SpinMatrix::IDENTITY).det().re
}

/// `tr(A†A) = 1 + (1/6) Σ_{(ij)} cos(θ_i − θ_j)`.
pub fn trace_adag_a(theta: &ThetaQuad) -> f64 {
    let t = &theta.theta;
    1.0 + PAIRS.iter().map(|&(i, j)| (t[i] - t[j]).cos()).sum::<f64>() / 6.0
}

/// `tr(A†A)` from the matrix itself.
pub fn trace_adag_a_direct(theta: &ThetaQuad) -> f64 {
    let a = alpha3().matrix(&theta.theta);
    (a.dagger() * a).trace().re
}

/// Equally spaced angles `−π + 2πk/M`, `k = 0..M`.
pub fn grid_angles(m: usize) -> Vec<f64> {
    (0..m).map(|k| -PI + TAU * k as f64 / m as f64).collect()
}

/// Indices of the `width` grid angles closest to zero (ties to the lower index).
fn excluded_indices(m: usize, width: usize) -> Vec<bool> {
    let angles = grid_angles(m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| angles[a].abs().total_cmp(&angles[b].abs()).then(a.cmp(&b)));
    let mut excluded = vec![false; m];
    for &k in order.iter().take(width) {
        excluded[k] = true;
    }
    excluded
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub grid: usize,
    pub constrained: bool,
    /// Number of `θ₁` values nearest zero to leave out (0 keeps all).
    pub exclude_center: usize,
    pub alpha: f64,
    pub execution: Execution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { grid: 40, constrained: true, exclude_center: 0, alpha: 3.0, execution: Execution::default() }
    }
}

impl ScanConfig {
    pub fn with_grid(grid: usize) -> Self {
        ScanConfig { grid, ..Default::default() }
    }

    fn n_points(&self) -> u64 {
        let m = self.grid as u64;
        if self.constrained {
            m.saturating_pow(3)
        } else {
            m.saturating_pow(4)
        }
    }

    fn validate(&self, min_grid: usize) -> Result<()> {
        if self.grid < min_grid {
            return Err(Error::GridTooSmall { min: min_grid, got: self.grid });
        }
        if self.n_points() > MAX_SCAN_POINTS {
            return Err(Error::GridTooLarge(self.n_points()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::NonPositiveAlpha(self.alpha));
        }
        Ok(())
    }

    /// Grid points of the scan in lexicographic index order.
    fn thetas(&self) -> Vec<ThetaQuad> {
        let angles = grid_angles(self.grid);
        let excluded = excluded_indices(self.grid, self.exclude_center);
        let m = self.grid;
        let mut out = Vec::with_capacity(self.n_points() as usize);
        for k1 in (0..m).filter(|&k| !excluded[k]) {
            for k2 in 0..m {
                for k3 in 0..m {
                    if self.constrained {
                        out.push(ThetaQuad::from_free(angles[k1], angles[k2], angles[k3]));
                    } else {
                        for k4 in 0..m {
                            out.push(ThetaQuad::raw([angles[k1], angles[k2], angles[k3], angles[k4]]));
                        }
                    }
                }
            }
        }
        out
    }
}

/// One eigenvalue at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub theta: [f64; 4],
    pub lambda: C64,
    pub branch: u8,
}

fn scan_eigen(cfg: &ScanConfig, min_grid: usize) -> Result<Vec<(ThetaQuad, EigenPair)>> {
    cfg.validate(min_grid)?;
    let amp = Amplifier::new(cfg.alpha)?;
    let thetas = cfg.thetas();
    Ok(cfg.execution.map_slice(&thetas, |q| (*q, eigenvalues(&amp.matrix(&q.theta)))))
}

/// Both eigenvalues of `A(θ)` at every grid point.
pub fn spectrum_scan(cfg: &ScanConfig) -> Result<Vec<ScanPoint>> {
    let pairs = scan_eigen(cfg, 2)?;
    Ok(pairs
        .iter()
        .flat_map(|(q, e)| {
            [
                ScanPoint { theta: q.theta, lambda: e.lambda1, branch: 0 },
                ScanPoint { theta: q.theta, lambda: e.lambda2, branch: 1 },
            ]
        })
        .collect())
}

/// Largest real eigenvalue strictly inside the unit disk.
fn real_interior(lambda: C64) -> Option<f64> {
    (lambda.im.abs() < 1e-9 && lambda.norm() < 1.0 - 1e-9).then_some(lambda.re)
}

fn best_real(amp: &Amplifier, theta: &[f64; 4]) -> Option<f64> {
    let e = eigenvalues(&amp.matrix(theta));
    match (real_interior(e.lambda1), real_interior(e.lambda2)) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

/// Maximises the real interior eigenvalue by a compass search over the free
/// angles `θ₁, θ₂, θ₃` (with `θ₄ = −Σ`), starting from `seed`.
pub fn refine_real_gap(seed: &ThetaQuad, alpha: f64) -> Result<(f64, ThetaQuad)> {
    let amp = Amplifier::new(alpha)?;
    let mut free = [seed.theta[0], seed.theta[1], seed.theta[2]];
    let eval = |f: &[f64; 3]| best_real(&amp, &ThetaQuad::from_free(f[0], f[1], f[2]).theta);
    let mut best = eval(&free).ok_or_else(|| Error::Invalid("seed has no real interior eigenvalue".into()))?;
    let mut moves: Vec<[f64; 3]> = Vec::new();
    for a in 0..3 {
        for s in [1.0, -1.0] {
            let mut v = [0.0; 3];
            v[a] = s;
            moves.push(v);
            for b in (a + 1)..3 {
                for s2 in [1.0, -1.0] {
                    let mut w = v;
                    w[b] = s2;
                    moves.push(w);
                }
            }
        }
    }
    let mut h = 0.1;
    while h > 1e-12 {
        let mut improved = false;
        for mv in &moves {
            let trial = [free[0] + h * mv[0], free[1] + h * mv[1], free[2] + h * mv[2]];
            if let Some(v) = eval(&trial) {
                if v > best {
                    best = v;
                    free = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok((best, ThetaQuad::from_free(free[0], free[1], free[2])))
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub grid: usize,
    pub alpha: f64,
    /// Largest real eigenvalue with modulus below one found on the grid.
    pub gap: f64,
    pub argmax_theta: [f64; 4],
    pub refined_gap: f64,
    pub refined_theta: [f64; 4],
    /// Largest eigenvalue modulus anywhere on the grid.
    pub max_modulus: f64,
}

/// The gap between the unit-modulus zero-frequency point and the rest of the
/// positive real axis.
pub fn real_axis_gap(cfg: &ScanConfig) -> Result<GapReport> {
    let pairs = scan_eigen(cfg, 2)?;
    let mut gap = f64::NEG_INFINITY;
    let mut argmax = [0.0; 4];
    let mut max_modulus = 0.0f64;
    for (q, e) in &pairs {
        for l in e.values() {
            max_modulus = max_modulus.max(l.norm());
            if let Some(re) = real_interior(l) {
                if re > gap {
                    gap = re;
                    argmax = q.theta;
                }
            }
        }
    }
    let seed = ThetaQuad::from_free(0.0, 0.0, PI);
    let (refined_gap, refined) = refine_real_gap(&seed, cfg.alpha)?;
    Ok(GapReport {
        grid: cfg.grid,
        alpha: cfg.alpha,
        gap,
        argmax_theta: argmax,
        refined_gap,
        refined_theta: refined.theta,
        max_modulus,
    })
}

/// Scan eigenvalues that are real within 1e−9 and lie strictly between `lo` and `hi`.
pub fn real_eigenvalues_between(cfg: &ScanConfig, lo: f64, hi: f64) -> Result<Vec<ScanPoint>> {
    Ok(spectrum_scan(cfg)?
        .into_iter()
        .filter(|p| p.lambda.im.abs() < 1e-9 && p.lambda.re > lo && p.lambda.re < hi)
        .collect())
}

/// Max deviation between the spectrum at `θ + π/2` and `i ×` the spectrum at
/// `θ`, over a constrained grid whose size is a multiple of four. The shifted
/// point is itself a grid point, so this checks set equality point by point.
pub fn fourfold_symmetry_residual(grid: usize, execution: Execution) -> Result<f64> {
    if grid % 4 != 0 || grid < 4 {
        return Err(Error::Invalid(format!("grid {grid} must be a positive multiple of 4")));
    }
    let cfg = ScanConfig { grid, execution, ..Default::default() };
    cfg.validate(4)?;
    let amp = alpha3();
    let angles = grid_angles(grid);
    let m = grid;
    let residuals = execution.map_range(m * m * m, |idx| {
        let (k1, k2, k3) = (idx / (m * m), (idx / m) % m, idx % m);
        let base = ThetaQuad::from_free(angles[k1], angles[k2], angles[k3]);
        let s = m / 4;
        let moved = ThetaQuad::from_free(angles[(k1 + s) % m], angles[(k2 + s) % m], angles[(k3 + s) % m]);
        let rot = C64::new(0.0, 1.0);
        let a = eigenvalues(&amp.matrix(&base.theta)).values().map(|l| l * rot);
        let b = eigenvalues(&amp.matrix(&moved.theta)).values();
        let direct = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
        let swapped = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
        direct.min(swapped)
    });
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// Phases `θ_j = 3ε k·n̂_j` for a spatial wavevector.
pub fn lattice_phases(k_spatial: &[f64; 3], epsilon: f64) -> ThetaQuad {
    ThetaQuad::raw(Direction::ALL4.map(|d| 3.0 * epsilon * dot3(k_spatial, &d.unit_vector())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionBranch {
    pub lambda: C64,
    /// `ω = (i/ε) Ln λ`; absent for `λ = 0` (infinite decay).
    pub omega: Option<C64>,
    pub real_frequency: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionReport {
    pub theta: [f64; 4],
    pub branches: [DispersionBranch; 2],
    pub three_coincident: bool,
    /// A unit-modulus branch exists exactly when three angles coincide.
    pub consistent: bool,
}

/// Frequency from an eigenvalue `λ = e^{−iωε}` on the principal branch,
/// `Re ω ∈ (−π/ε, π/ε]`, `Im ω = ln|λ|/ε`.
pub fn frequency(lambda: C64, epsilon: f64) -> Option<C64> {
    if lambda.norm() == 0.0 {
        return None;
    }
    let arg = lambda.arg();
    let re = if arg.abs() == PI { PI / epsilon } else { -arg / epsilon };
    Some(C64::new(re, lambda.norm().ln() / epsilon))
}

/// Exact lattice dispersion: both eigen-frequencies of `A(θ)` at a real
/// spatial wavevector.
pub fn dispersion(k_spatial: &[f64; 3], epsilon: f64) -> Result<DispersionReport> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveLength(epsilon));
    }
    let theta = lattice_phases(k_spatial, epsilon);
    let e = eigenvalues(&alpha3().matrix(&theta.theta));
    let branch = |lambda: C64| DispersionBranch {
        lambda,
        omega: frequency(lambda, epsilon),
        real_frequency: (lambda.norm() - 1.0).abs() < 1e-10,
    };
    let branches = [branch(e.lambda1), branch(e.lambda2)];
    let three_coincident = theta.three_coincide(COINCIDENCE_TOL);
    let any_real = branches.iter().any(|b| b.real_frequency);
    Ok(DispersionReport { theta: theta.theta, branches, three_coincident, consistent: any_real == three_coincident })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormBoundReport {
    pub alpha: f64,
    pub grid: usize,
    pub max_modulus: f64,
    pub argmax_theta: [f64; 4],
    /// Set when some eigenvalue modulus exceeds `1 + 1e−9`.
    pub exceeds_bound: bool,
}

/// Largest eigenvalue modulus of `A(θ)` with weights for step speed `alpha`
/// over the constrained grid.
pub fn norm_bound_probe(alpha: f64, grid: usize, execution: Execution) -> Result<NormBoundReport> {
    let cfg = ScanConfig { grid, alpha, execution, ..Default::default() };
    let pairs = scan_eigen(&cfg, 20)?;
    let mut max_modulus = f64::NEG_INFINITY;
    let mut argmax = [0.0; 4];
    for (q, e) in &pairs {
        let m = e.lambda1.norm().max(e.lambda2.norm());
        if m > max_modulus {
            max_modulus = m;
            argmax = q.theta;
        }
    }
    Ok(NormBoundReport { alpha, grid, max_modulus, argmax_theta: argmax, exceeds_bound: max_modulus > 1.0 + 1e-9 })
}

/// `θ` shifted by a quarter turn in every component.
pub fn quarter_turn(theta: &ThetaQuad) -> ThetaQuad {
    theta.shifted(FRAC_PI_2)
}
