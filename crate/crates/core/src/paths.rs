//! Lattice paths and their amplitudes.
//!
//! A path is the ordered list of step directions. Its amplitude can be read
//! off as a product of projectors or, with eigenspinor end caps, from the
//! bend statistics `(N, B, T)` alone.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{DimensionMode, Direction, LatticeDisplacement};
use crate::spin::{chiral_eigenspinor, chiral_projector, spinor_along, Chirality, PhaseRule, SpinMatrix, Spinor};
use crate::C64;

pub const DEFAULT_ENUMERATION_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    steps: Vec<Direction>,
}

impl Path {
    pub fn new(steps: Vec<Direction>) -> Result<Path> {
        let first = steps.first().ok_or_else(|| Error::Invalid("empty path".into()))?;
        if steps.iter().any(|d| d.mode() != first.mode()) {
            return Err(Error::Invalid("path mixes dimension modes".into()));
        }
        Ok(Path { steps })
    }

    /// Parses a digit string such as `"1321"`.
    pub fn parse(text: &str, mode: DimensionMode) -> Result<Path> {
        let steps = text
            .trim()
            .chars()
            .map(|ch| {
                let index = ch.to_digit(10).ok_or_else(|| Error::Invalid(format!("bad direction '{ch}'")))?;
                Direction::new(index as u8, mode)
            })
            .collect::<Result<Vec<_>>>()?;
        Path::new(steps)
    }

    pub fn steps(&self) -> &[Direction] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn mode(&self) -> DimensionMode {
        self.steps[0].mode()
    }

    pub fn first(&self) -> Direction {
        self.steps[0]
    }

    pub fn last(&self) -> Direction {
        self.steps[self.steps.len() - 1]
    }

    /// Step counts per direction (unused slots stay zero in 2+1).
    pub fn displacement(&self) -> LatticeDisplacement {
        let mut counts = [0; 4];
        for d in &self.steps {
            counts[d.slot()] += 1;
        }
        LatticeDisplacement::new(counts)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.steps {
            write!(f, "{}", d.index())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathQuery {
    StepCount { n: usize, mode: DimensionMode },
    Displacement(LatticeDisplacement),
}

/// All paths of a given length, or all orderings of a displacement's steps,
/// in lexicographic order.
pub fn enumerate_paths(query: PathQuery, cap: usize) -> Result<Vec<Path>> {
    match query {
        PathQuery::StepCount { n, mode } => {
            if n == 0 {
                return Err(Error::Invalid("paths need at least one step".into()));
            }
            if n > cap {
                return Err(Error::EnumerationCap { len: n, cap });
            }
            let dirs: Vec<Direction> = mode.directions().collect();
            let base = dirs.len();
            let total = base.pow(n as u32);
            Ok((0..total)
                .map(|mut code| {
                    let mut steps = vec![dirs[0]; n];
                    for slot in steps.iter_mut().rev() {
                        *slot = dirs[code % base];
                        code /= base;
                    }
                    Path { steps }
                })
                .collect())
        }
        PathQuery::Displacement(disp) => {
            if !disp.is_forward() {
                return Err(Error::NegativeCounts(disp.counts));
            }
            let n = disp.total() as usize;
            if n == 0 {
                return Err(Error::Invalid("paths need at least one step".into()));
            }
            if n > cap {
                return Err(Error::EnumerationCap { len: n, cap });
            }
            let mut out = Vec::new();
            let mut remaining = disp.counts;
            let mut prefix = Vec::with_capacity(n);
            multiset_orderings(&mut remaining, &mut prefix, n, &mut out);
            Ok(out)
        }
    }
}

fn multiset_orderings(remaining: &mut [i64; 4], prefix: &mut Vec<Direction>, n: usize, out: &mut Vec<Path>) {
    if prefix.len() == n {
        out.push(Path { steps: prefix.clone() });
        return;
    }
    for (slot, dir) in Direction::ALL4.iter().enumerate() {
        if remaining[slot] > 0 {
            remaining[slot] -= 1;
            prefix.push(*dir);
            multiset_orderings(remaining, prefix, n, out);
            prefix.pop();
            remaining[slot] += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathStats {
    pub n_steps: usize,
    pub n_bends: usize,
    /// Right-handed minus left-handed bends.
    pub handed_excess: i64,
}

/// `+1` for a bend in `{1→3, 3→2, 2→1}`, `−1` for the reverse, `0` for no
/// bend or a bend involving direction 4.
pub fn turn_sign(from: Direction, to: Direction) -> i64 {
    match (from.index(), to.index()) {
        (1, 3) | (3, 2) | (2, 1) => 1,
        (3, 1) | (2, 3) | (1, 2) => -1,
        _ => 0,
    }
}

pub fn path_stats(path: &Path) -> PathStats {
    let mut stats = PathStats { n_steps: path.len(), n_bends: 0, handed_excess: 0 };
    for pair in path.steps.windows(2) {
        if pair[0] != pair[1] {
            stats.n_bends += 1;
            stats.handed_excess += turn_sign(pair[0], pair[1]);
        }
    }
    stats
}

/// `w^N Q_{i_N} ⋯ Q_{i_1}` with `w` the mode's step weight.
pub fn amplitude_matrix(path: &Path, chirality: Chirality) -> SpinMatrix {
    let weight = path.mode().step_weight();
    path.steps
        .iter()
        .fold(SpinMatrix::IDENTITY, |acc, d| chiral_projector(*d, chirality) * acc)
        * weight.powi(path.len() as i32)
}

fn i_pow(t: i64) -> C64 {
    match t.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// `i^{±T} 3^{−B/2} 2^{−N}`, `+` for right-handed.
pub fn amplitude_bend_rule(stats: &PathStats, chirality: Chirality) -> C64 {
    let t = match chirality {
        Chirality::Right => stats.handed_excess,
        Chirality::Left => -stats.handed_excess,
    };
    i_pow(t) * 3f64.powf(-(stats.n_bends as f64) / 2.0) * 0.5f64.powi(stats.n_steps as i32)
}

/// `2^{−N} ⟨out|i_N⟩⟨i_N|i_{N−1}⟩ ⋯ ⟨i_1|in⟩` with eigenspinors of the
/// chirality's projectors.
pub fn scalar_amplitude(path: &Path, in_dir: Direction, out_dir: Direction, rule: PhaseRule, chirality: Chirality) -> C64 {
    let ket = |d: Direction| chiral_eigenspinor(d, rule, chirality);
    let mut amp = ket(path.first()).inner(&ket(in_dir));
    for pair in path.steps.windows(2) {
        amp *= ket(pair[1]).inner(&ket(pair[0]));
    }
    amp * ket(out_dir).inner(&ket(path.last())) * 0.5f64.powi(path.len() as i32)
}

/// `⟨out|i_N⟩⟨i_1|in⟩`, the end-cap overlaps excluded from the bend rule.
pub fn end_cap_factor(path: &Path, in_dir: Direction, out_dir: Direction, rule: PhaseRule, chirality: Chirality) -> C64 {
    let ket = |d: Direction| chiral_eigenspinor(d, rule, chirality);
    ket(path.first()).inner(&ket(in_dir)) * ket(out_dir).inner(&ket(path.last()))
}

pub fn end_cap_mismatches(path: &Path, in_dir: Direction, out_dir: Direction) -> usize {
    usize::from(path.first() != in_dir) + usize::from(path.last() != out_dir)
}

/// Phase conventions for the planar eigenspinors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PlanarVariant {
    ChiralPlus,
    ChiralMinus,
    Symmetric,
}

impl PlanarVariant {
    pub const ALL: [PlanarVariant; 3] = [PlanarVariant::ChiralPlus, PlanarVariant::ChiralMinus, PlanarVariant::Symmetric];

    /// Expected transition for a bend with the given turn sign.
    pub fn bend_factor(self, sign: i64) -> C64 {
        match self {
            PlanarVariant::ChiralPlus => C64::from_polar(0.5, sign as f64 * PI / 3.0),
            PlanarVariant::ChiralMinus => C64::from_polar(0.5, -sign as f64 * PI / 3.0),
            PlanarVariant::Symmetric => C64::new(-0.5, 0.0),
        }
    }
}

fn planar_angle(dir: Direction) -> f64 {
    let n = dir.unit_vector();
    n[1].atan2(n[0])
}

fn require_planar(dir: Direction) -> Result<()> {
    if dir.mode() != DimensionMode::Planar3 {
        return Err(Error::WrongMode { expected: DimensionMode::Planar3 });
    }
    Ok(())
}

/// Eigenspinor of `P_i` in the plane: `(1, e^{iφ})/√2` times `1`,
/// `e^{−iφ}` or `e^{iφ}` for the three variants.
pub fn planar_spinor(dir: Direction, variant: PlanarVariant) -> Result<Spinor> {
    require_planar(dir)?;
    let phi = planar_angle(dir);
    let phase = match variant {
        PlanarVariant::ChiralPlus => 0.0,
        PlanarVariant::ChiralMinus => -phi,
        PlanarVariant::Symmetric => phi,
    };
    Ok(spinor_along(&dir.unit_vector()) * C64::from_polar(1.0, phase))
}

pub fn planar_transition(from: Direction, to: Direction, variant: PlanarVariant) -> Result<C64> {
    Ok(planar_spinor(to, variant)?.inner(&planar_spinor(from, variant)?))
}

/// Product of the interior transitions along a planar path.
pub fn planar_amplitudes(path: &Path, variant: PlanarVariant) -> Result<C64> {
    require_planar(path.first())?;
    let mut amp = C64::new(1.0, 0.0);
    for pair in path.steps.windows(2) {
        amp *= planar_transition(pair[0], pair[1], variant)?;
    }
    Ok(amp)
}

/// `⟨i_N|amplitude_matrix|i_1⟩` with the variant's spinors; carries the
/// `(2/3)^N` step weight.
pub fn planar_matrix_element(path: &Path, variant: PlanarVariant) -> Result<C64> {
    let (a, b) = (planar_spinor(path.first(), variant)?, planar_spinor(path.last(), variant)?);
    Ok(b.inner(&amplitude_matrix(path, Chirality::Right).apply(&a)))
}

/// The `2^{−N}` normalisation quoted for planar paths.
pub fn planar_display_normalization(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

/// Ratio of the projector step weight to the display convention, `(4/3)^N`.
pub fn planar_normalization_discrepancy(n: usize) -> f64 {
    DimensionMode::Planar3.step_weight().powi(n as i32) / planar_display_normalization(n)
}

/// Net number of full turns of a closed planar direction cycle, clockwise
/// about `+z` counted positive.
pub fn winding_number(cycle: &[Direction]) -> Result<i64> {
    if cycle.is_empty() {
        return Err(Error::Invalid("empty cycle".into()));
    }
    let mut turns = 0;
    for (k, d) in cycle.iter().enumerate() {
        require_planar(*d)?;
        turns += turn_sign(*d, cycle[(k + 1) % cycle.len()]);
    }
    Ok(turns / 3)
}

/// Phase of the product of bend factors around a closed cycle, wrap-around
/// bend included.
pub fn closed_loop_phase(cycle: &[Direction], variant: PlanarVariant) -> Result<C64> {
    if cycle.is_empty() {
        return Err(Error::Invalid("empty cycle".into()));
    }
    let mut amp = C64::new(1.0, 0.0);
    for (k, d) in cycle.iter().enumerate() {
        amp *= planar_transition(*d, cycle[(k + 1) % cycle.len()], variant)?;
    }
    Ok(amp / amp.norm())
}

/// One CSV row of a path report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRow {
    pub path: String,
    pub n: usize,
    pub b: usize,
    pub t: i64,
    pub re_amp: f64,
    pub im_amp: f64,
    pub abs_amp: f64,
    pub re_matrix: f64,
    pub im_matrix: f64,
    pub deviation: f64,
}

fn row(path: &Path, stats: PathStats, rule_amp: C64, matrix: C64) -> PathRow {
    PathRow {
        path: path.to_string(),
        n: stats.n_steps,
        b: stats.n_bends,
        t: stats.handed_excess,
        re_amp: rule_amp.re,
        im_amp: rule_amp.im,
        abs_amp: rule_amp.norm(),
        re_matrix: matrix.re,
        im_matrix: matrix.im,
        deviation: (rule_amp - matrix).norm(),
    }
}

/// Bend-rule amplitude next to the matrix element `⟨i_N|M|i_1⟩` (RuleB) for
/// each 4D path.
pub fn path_rows(paths: &[Path], chirality: Chirality, execution: Execution) -> Vec<PathRow> {
    execution.map_slice(paths, |p| {
        let stats = path_stats(p);
        let ket = |d: Direction| chiral_eigenspinor(d, PhaseRule::RuleB, chirality);
        let matrix = ket(p.last()).inner(&amplitude_matrix(p, chirality).apply(&ket(p.first())));
        row(p, stats, amplitude_bend_rule(&stats, chirality), matrix)
    })
}

/// Planar bend-factor product with the projector weight `(2/3)^N`, next to
/// the matrix element.
pub fn planar_path_rows(paths: &[Path], variant: PlanarVariant, execution: Execution) -> Result<Vec<PathRow>> {
    execution
        .map_slice(paths, |p| {
            let stats = path_stats(p);
            let weight = DimensionMode::Planar3.step_weight().powi(p.len() as i32);
            Ok(row(p, stats, planar_amplitudes(p, variant)? * weight, planar_matrix_element(p, variant)?))
        })
        .into_iter()
        .collect()
}

/// Maximum deviations between the amplitude calculi over all paths up to a
/// length, in/out caps and both chiralities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEquivalenceReport {
    pub max_steps: usize,
    pub paths_checked: usize,
    /// `scalar_amplitude` (RuleB) vs `⟨out|amplitude_matrix|in⟩`.
    pub matrix_element: f64,
    /// `scalar_amplitude` vs bend rule times end caps.
    pub bend_rule: f64,
    /// `|scalar_amplitude|` vs `3^{−(B+b_end)/2} 2^{−N}`.
    pub modulus: f64,
    /// `|RuleA|` vs `|RuleB|`.
    pub rule_independence: f64,
    /// Left-handed value vs conjugate of right-handed value.
    pub conjugation: f64,
}

impl PathEquivalenceReport {
    pub fn max_deviation(&self) -> f64 {
        [self.matrix_element, self.bend_rule, self.modulus, self.rule_independence, self.conjugation]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn verify_path_calculus(max_steps: usize, execution: Execution) -> Result<PathEquivalenceReport> {
    let mut report = PathEquivalenceReport {
        max_steps,
        paths_checked: 0,
        matrix_element: 0.0,
        bend_rule: 0.0,
        modulus: 0.0,
        rule_independence: 0.0,
        conjugation: 0.0,
    };
    for n in 1..=max_steps {
        let paths = enumerate_paths(PathQuery::StepCount { n, mode: DimensionMode::Spacetime4 }, max_steps.max(DEFAULT_ENUMERATION_CAP))?;
        let per_path = execution.map_slice(&paths, check_path);
        report.paths_checked += paths.len();
        for d in per_path {
            report.matrix_element = report.matrix_element.max(d[0]);
            report.bend_rule = report.bend_rule.max(d[1]);
            report.modulus = report.modulus.max(d[2]);
            report.rule_independence = report.rule_independence.max(d[3]);
            report.conjugation = report.conjugation.max(d[4]);
        }
    }
    Ok(report)
}

fn check_path(path: &Path) -> [f64; 5] {
    let stats = path_stats(path);
    let mut worst = [0.0f64; 5];
    for in_dir in Direction::ALL4 {
        for out_dir in Direction::ALL4 {
            let mut values = [C64::new(0.0, 0.0); 2];
            for (slot, chir) in [Chirality::Right, Chirality::Left].into_iter().enumerate() {
                let scalar = scalar_amplitude(path, in_dir, out_dir, PhaseRule::RuleB, chir);
                let ket = |d: Direction| chiral_eigenspinor(d, PhaseRule::RuleB, chir);
                let matrix = ket(out_dir).inner(&amplitude_matrix(path, chir).apply(&ket(in_dir)));
                let rule = amplitude_bend_rule(&stats, chir) * end_cap_factor(path, in_dir, out_dir, PhaseRule::RuleB, chir);
                let b_end = end_cap_mismatches(path, in_dir, out_dir);
                let modulus = 3f64.powf(-((stats.n_bends + b_end) as f64) / 2.0) * 0.5f64.powi(stats.n_steps as i32);
                let rule_a = scalar_amplitude(path, in_dir, out_dir, PhaseRule::RuleA, chir);
                worst[0] = worst[0].max((scalar - matrix).norm());
                worst[1] = worst[1].max((scalar - rule).norm());
                worst[2] = worst[2].max((scalar.norm() - modulus).abs());
                worst[3] = worst[3].max((scalar.norm() - rule_a.norm()).abs());
                values[slot] = scalar;
            }
            worst[4] = worst[4].max((values[1] - values[0].conj()).norm());
        }
    }
    worst
}

/// Planar checks over all `3^N` paths up to a length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarReport {
    pub max_steps: usize,
    pub paths_checked: usize,
    /// Measured single-bend factors (clockwise, counter-clockwise) per variant.
    pub bend_factors: Vec<(PlanarVariant, [C64; 2])>,
    /// Measured bend factors vs the closed forms.
    pub bend_factor_deviation: f64,
    /// Spread of `|amplitude|` across variants on one path.
    pub modulus_spread: f64,
    /// Symmetric matrix element vs `(2/3)^N (−2)^{−B}`.
    pub symmetric_rule: f64,
    /// Largest `(4/3)^N` between the projector weight and `2^{−N}`.
    pub normalization_discrepancy: f64,
}

pub fn verify_planar(max_steps: usize, execution: Execution) -> Result<PlanarReport> {
    let d = |i| Direction::planar(i);
    let (d1, d3) = (d(1)?, d(3)?);
    let mut bend_factors = Vec::new();
    let mut bend_dev = 0.0f64;
    for v in PlanarVariant::ALL {
        let cw = planar_transition(d1, d3, v)?;
        let ccw = planar_transition(d3, d1, v)?;
        bend_dev = bend_dev.max((cw - v.bend_factor(1)).norm()).max((ccw - v.bend_factor(-1)).norm());
        bend_factors.push((v, [cw, ccw]));
    }
    let mut report = PlanarReport {
        max_steps,
        paths_checked: 0,
        bend_factors,
        bend_factor_deviation: bend_dev,
        modulus_spread: 0.0,
        symmetric_rule: 0.0,
        normalization_discrepancy: planar_normalization_discrepancy(max_steps),
    };
    for n in 1..=max_steps {
        let paths = enumerate_paths(PathQuery::StepCount { n, mode: DimensionMode::Planar3 }, max_steps.max(DEFAULT_ENUMERATION_CAP))?;
        let per_path = execution.map_slice(&paths, |p| -> Result<[f64; 2]> {
            let stats = path_stats(p);
            let mut mods = [0.0; 3];
            for (m, v) in mods.iter_mut().zip(PlanarVariant::ALL) {
                *m = planar_amplitudes(p, v)?.norm();
            }
            let spread = mods.iter().fold(0.0f64, |m, x| m.max((x - mods[0]).abs()));
            let want = DimensionMode::Planar3.step_weight().powi(n as i32) * (-2f64).powi(-(stats.n_bends as i32));
            let sym = (planar_matrix_element(p, PlanarVariant::Symmetric)? - want).norm();
            Ok([spread, sym])
        });
        report.paths_checked += paths.len();
        for r in per_path {
            let [spread, sym] = r?;
            report.modulus_spread = report.modulus_spread.max(spread);
            report.symmetric_rule = report.symmetric_rule.max(sym);
        }
    }
    Ok(report)
}
