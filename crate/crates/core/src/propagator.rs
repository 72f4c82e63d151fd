//! The lattice retarded propagator by dynamic programming, path sums and
//! Fourier extraction, and continuum-limit studies.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{dirac_dispersion_deviation, gather};
use crate::exec::Execution;
use crate::geometry::{jacobian, volume_per_point, DimensionMode, Direction, LatticeDisplacement};
use crate::paths::{amplitude_matrix, enumerate_paths, PathQuery, DEFAULT_ENUMERATION_CAP};
use crate::spectral::{dispersion, Amplifier};
use crate::spin::{chiral_projector, ChargeConjugation, Chirality, SpinMatrix};
use crate::C64;

/// Largest Fourier grid (points on the 4-torus) a single extraction may use.
pub const MAX_FOURIER_POINTS: u64 = 50_000_000;

/// Matrix-valued kernel `K_t[d]` on the slice `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub t: usize,
    pub chirality: Chirality,
    pub entries: BTreeMap<LatticeDisplacement, SpinMatrix>,
}

impl KernelTable {
    pub fn identity(chirality: Chirality) -> Self {
        KernelTable {
            t: 0,
            chirality,
            entries: BTreeMap::from([(LatticeDisplacement::ORIGIN, SpinMatrix::IDENTITY)]),
        }
    }

    /// Zero off the table's support.
    pub fn get(&self, d: &LatticeDisplacement) -> SpinMatrix {
        self.entries.get(d).copied().unwrap_or(SpinMatrix::ZERO)
    }

    pub fn sum(&self) -> SpinMatrix {
        self.entries.values().fold(SpinMatrix::ZERO, |acc, m| acc + *m)
    }

    pub fn to_json(&self) -> KernelJson {
        KernelJson {
            t: self.t,
            entries: self
                .entries
                .iter()
                .map(|(d, m)| KernelEntryJson {
                    counts: d.counts,
                    matrix: [m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]].map(|z| [z.re, z.im]),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEntryJson {
    pub counts: [i64; 4],
    /// Row-major `[re, im]` pairs.
    pub matrix: [[f64; 2]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelJson {
    pub t: usize,
    pub entries: Vec<KernelEntryJson>,
}

/// Evolves the matrix delta source `t` steps.
pub fn kernel_dp(t: usize, chirality: Chirality, execution: Execution) -> KernelTable {
    let q = Direction::ALL4.map(|d| chiral_projector(d, chirality) * 0.5);
    let mut table = KernelTable::identity(chirality);
    for _ in 0..t {
        table = kernel_dp_step(&table, &q, execution);
    }
    table
}

/// Brute-force sum of `amplitude_matrix` over every ordering of the steps.
pub fn kernel_pathsum(disp: &LatticeDisplacement, chirality: Chirality) -> Result<SpinMatrix> {
    if !disp.is_forward() {
        return Ok(SpinMatrix::ZERO);
    }
    if disp.total() == 0 {
        return Ok(SpinMatrix::IDENTITY);
    }
    let paths = enumerate_paths(PathQuery::Displacement(*disp), DEFAULT_ENUMERATION_CAP)?;
    Ok(paths.iter().fold(SpinMatrix::ZERO, |acc, p| acc + amplitude_matrix(p, chirality)))
}

/// Coefficient of `e^{iθ·d}` in `A(θ)^N`, extracted by an `M⁴` DFT.
///
/// Each angle carries modes `0..=N`, so the extraction is exact for
/// `M ≥ N + 1` and aliases otherwise.
pub fn kernel_fourier(
    disp: &LatticeDisplacement,
    n: usize,
    grid: usize,
    chirality: Chirality,
    execution: Execution,
) -> Result<SpinMatrix> {
    if grid < n + 1 {
        return Err(Error::Aliasing { grid, steps: n });
    }
    let points = (grid as u64).pow(4);
    if points > MAX_FOURIER_POINTS {
        return Err(Error::GridTooLarge(points));
    }
    if !disp.is_forward() || disp.total() != n as i64 {
        return Ok(SpinMatrix::ZERO);
    }
    let amp = Amplifier::chiral(chirality);
    let m = grid;
    let terms = execution.map_range(points as usize, |code| {
        let idx = [code % m, (code / m) % m, (code / (m * m)) % m, code / (m * m * m)];
        let theta = idx.map(|k| TAU * k as f64 / m as f64);
        let shift: f64 = (0..4).map(|j| theta[j] * disp.counts[j] as f64).sum();
        amp.matrix(&theta).powi(n as u32) * C64::from_polar(1.0, -shift)
    });
    let total = terms.into_iter().fold(SpinMatrix::ZERO, |acc, t| acc + t);
    Ok(total * (1.0 / points as f64))
}

/// `Σ_d ‖K_t[d]‖` with the operator norm.
pub fn kernel_norm_sum(table: &KernelTable) -> f64 {
    table.entries.values().map(SpinMatrix::operator_norm).sum()
}

/// Pairwise maximum entry deviations between the three kernel routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEquivalenceReport {
    pub max_t: usize,
    pub entries_checked: usize,
    pub dp_vs_pathsum: f64,
    pub dp_vs_fourier: f64,
    pub pathsum_vs_fourier: f64,
}

impl KernelEquivalenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.dp_vs_pathsum.max(self.dp_vs_fourier).max(self.pathsum_vs_fourier)
    }
}

/// Compares all three routes on every displacement with `1 ≤ t ≤ max_t`,
/// using the exact grid `M = t + 1`.
pub fn verify_kernels(max_t: usize, chirality: Chirality, execution: Execution) -> Result<KernelEquivalenceReport> {
    let mut report = KernelEquivalenceReport {
        max_t,
        entries_checked: 0,
        dp_vs_pathsum: 0.0,
        dp_vs_fourier: 0.0,
        pathsum_vs_fourier: 0.0,
    };
    for t in 1..=max_t {
        let table = kernel_dp(t, chirality, execution);
        for (d, dp) in &table.entries {
            let ps = kernel_pathsum(d, chirality)?;
            let ft = kernel_fourier(d, t, t + 1, chirality, execution)?;
            report.dp_vs_pathsum = report.dp_vs_pathsum.max(dp.max_abs_diff(&ps));
            report.dp_vs_fourier = report.dp_vs_fourier.max(dp.max_abs_diff(&ft));
            report.pathsum_vs_fourier = report.pathsum_vs_fourier.max(ps.max_abs_diff(&ft));
            report.entries_checked += 1;
        }
    }
    Ok(report)
}

/// Largest `|Σ_d K_t[d] − 1|` over `1 ≤ t ≤ max_t`.
pub fn identity_sum_deviation(max_t: usize, chirality: Chirality, execution: Execution) -> f64 {
    let q = Direction::ALL4.map(|d| chiral_projector(d, chirality) * 0.5);
    let mut table = KernelTable::identity(chirality);
    let mut worst = 0.0f64;
    for _ in 0..max_t {
        table = kernel_dp_step(&table, &q, execution);
        worst = worst.max(table.sum().max_abs_diff(&SpinMatrix::IDENTITY));
    }
    worst
}

fn kernel_dp_step(table: &KernelTable, q: &[SpinMatrix; 4], execution: Execution) -> KernelTable {
    let prev = &table.entries;
    let entries = gather(&[prev], execution, |x| {
        let mut out = SpinMatrix::ZERO;
        for (dir, qi) in Direction::ALL4.iter().zip(q) {
            if let Some(m) = prev.get(&x.step_back(*dir)) {
                out += *qi * *m;
            }
        }
        out
    });
    KernelTable { t: table.t + 1, chirality: table.chirality, entries }
}

/// `Σ_d ‖K_t[d]‖_F²`, equal by Parseval to the grid average of `‖A(θ)^t‖_F²`.
pub fn kernel_l2_sum(table: &KernelTable) -> f64 {
    table.entries.values().map(|m| m.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>()).sum()
}

/// `(Σ_d ‖K_t[d]‖, Σ_d ‖K_t[d]‖_F²)` for `t = 0..=max_t`.
pub fn kernel_norm_sums(max_t: usize, chirality: Chirality, execution: Execution) -> Vec<(f64, f64)> {
    let q = Direction::ALL4.map(|d| chiral_projector(d, chirality) * 0.5);
    let mut table = KernelTable::identity(chirality);
    let mut sums = vec![(kernel_norm_sum(&table), kernel_l2_sum(&table))];
    for _ in 0..max_t {
        table = kernel_dp_step(&table, &q, execution);
        sums.push((kernel_norm_sum(&table), kernel_l2_sum(&table)));
    }
    sums
}

/// `max_d |K_L[d] − C K_R[d] C⁻¹|` at slice `t`.
pub fn conjugation_deviation(t: usize, execution: Execution) -> f64 {
    let right = kernel_dp(t, Chirality::Right, execution);
    let left = kernel_dp(t, Chirality::Left, execution);
    right
        .entries
        .iter()
        .map(|(d, m)| left.get(d).max_abs_diff(&ChargeConjugation.conjugate_operator(m)))
        .fold(0.0, f64::max)
}

/// `ε₀, ε₀/2, …` with `halvings + 1` entries.
pub fn halving_sequence(epsilon0: f64, halvings: usize) -> Vec<f64> {
    (0..=halvings).map(|k| epsilon0 / 2f64.powi(k as i32)).collect()
}

fn validate_epsilons(epsilons: &[f64]) -> Result<()> {
    let positive = epsilons.iter().all(|e| e.is_finite() && *e > 0.0);
    let decreasing = epsilons.windows(2).all(|w| w[1] < w[0]);
    if epsilons.is_empty() || !positive || !decreasing {
        return Err(Error::InvalidEpsilonSequence);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub deviation: f64,
    /// Local order from the previous row; absent on the first row or when
    /// either deviation is zero.
    pub fitted_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln deviation` against `ln ε`.
    pub order: Option<f64>,
    /// Deviations strictly decrease (or are all zero).
    pub monotone: bool,
}

fn convergence_report(epsilons: &[f64], deviations: Vec<f64>) -> ConvergenceReport {
    let rows: Vec<ConvergenceRow> = epsilons
        .iter()
        .zip(&deviations)
        .enumerate()
        .map(|(i, (&epsilon, &deviation))| {
            let fitted_order = (i > 0 && deviation > 0.0 && deviations[i - 1] > 0.0)
                .then(|| (deviations[i - 1] / deviation).ln() / (epsilons[i - 1] / epsilon).ln());
            ConvergenceRow { epsilon, deviation, fitted_order }
        })
        .collect();
    let all_zero = deviations.iter().all(|d| *d == 0.0);
    let monotone = all_zero || deviations.windows(2).all(|w| w[1] < w[0]);
    let points: Vec<(f64, f64)> = epsilons
        .iter()
        .zip(&deviations)
        .filter(|(_, d)| **d > 0.0)
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    let order = (points.len() >= 2).then(|| {
        let n = points.len() as f64;
        let (mx, my) = (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        sxy / sxx
    });
    ConvergenceReport { rows, order, monotone }
}

/// Deviation of the propagating (positive-frequency) massless branch from
/// `ω = |k|` for each `ε`.
pub fn continuum_convergence_study(k_spatial: &[f64; 3], epsilons: &[f64]) -> Result<ConvergenceReport> {
    validate_epsilons(epsilons)?;
    let k = k_spatial.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut deviations = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let report = dispersion(k_spatial, eps)?;
        let omega = report
            .branches
            .iter()
            .filter_map(|b| b.omega)
            .map(|w| w.re)
            .fold(f64::NEG_INFINITY, f64::max);
        deviations.push((omega - k).abs());
    }
    Ok(convergence_report(epsilons, deviations))
}

/// Deviation of the Dirac transfer-matrix frequencies from `±√(k² + m²)`.
pub fn dirac_convergence_study(k_spatial: &[f64; 3], mass: f64, epsilons: &[f64]) -> Result<ConvergenceReport> {
    validate_epsilons(epsilons)?;
    let deviations = epsilons
        .iter()
        .map(|&eps| dirac_dispersion_deviation(k_spatial, eps, mass))
        .collect::<Result<Vec<_>>>()?;
    Ok(convergence_report(epsilons, deviations))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefactorCheck {
    /// `|det ∂x/∂N| ε³ = 48√3 ε³`.
    pub jacobian_volume: f64,
    /// `V_p` at cube edge `a = 3ε`.
    pub volume_per_point: f64,
    pub relative_deviation: f64,
}

/// The continuum propagator's prefactor against the volume per lattice point.
pub fn continuum_prefactor(epsilon: f64) -> Result<PrefactorCheck> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveLength(epsilon));
    }
    let jacobian_volume = jacobian() * epsilon.powi(3);
    let alpha = DimensionMode::Spacetime4.marginal_speed();
    let vp = volume_per_point(alpha * epsilon)?;
    Ok(PrefactorCheck { jacobian_volume, volume_per_point: vp, relative_deviation: (jacobian_volume - vp).abs() / vp })
}
