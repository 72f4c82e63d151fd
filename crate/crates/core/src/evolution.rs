//! One-step lattice evolution of spinor fields.
//!
//! A field lives on one time slice: sites are step-count 4-tuples whose sum is
//! the slice index. Every step is written in gather form, each output site
//! reading its four predecessors in a fixed order, so the parallel and
//! sequential paths agree bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{Direction, LatticeDisplacement};
use crate::spectral::{eigenvalues, frequency, lattice_phases, Amplifier};
use crate::spin::{chiral_projector, projector, Chirality, SpinMatrix, Spinor};
use crate::C64;

/// Applies `f` at every site reachable in one step from the support of any
/// of `sources`, returning the results keyed by site.
pub(crate) fn gather<T, R, F>(
    sources: &[&BTreeMap<LatticeDisplacement, T>],
    execution: Execution,
    f: F,
) -> BTreeMap<LatticeDisplacement, R>
where
    R: Send,
    F: Fn(&LatticeDisplacement) -> R + Sync + Send,
{
    let targets: BTreeSet<LatticeDisplacement> = sources
        .iter()
        .flat_map(|map| map.keys())
        .flat_map(|site| Direction::ALL4.map(|d| site.step(d)))
        .collect();
    let targets: Vec<LatticeDisplacement> = targets.into_iter().collect();
    let values = execution.map_slice(&targets, |site| f(site));
    targets.into_iter().zip(values).collect()
}

/// One site of a serialized field snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteRecord {
    pub counts: [i64; 4],
    /// `[re0, im0, re1, im1]`.
    pub spinor: [f64; 4],
}

/// A spinor field on one time slice with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceField {
    pub time_step: i64,
    pub chirality: Chirality,
    values: BTreeMap<LatticeDisplacement, Spinor>,
}

impl SliceField {
    pub fn empty(time_step: i64, chirality: Chirality) -> Self {
        SliceField { time_step, chirality, values: BTreeMap::new() }
    }

    /// A single nonzero spinor at `site`, on the slice `site.total()`.
    pub fn delta(site: LatticeDisplacement, spinor: Spinor, chirality: Chirality) -> Result<Self> {
        let mut field = SliceField::empty(site.total(), chirality);
        field.insert(site, spinor)?;
        Ok(field)
    }

    pub fn insert(&mut self, site: LatticeDisplacement, spinor: Spinor) -> Result<()> {
        if !site.is_forward() || site.total() != self.time_step {
            return Err(Error::SiteNotOnSlice { counts: site.counts, time_step: self.time_step });
        }
        self.values.insert(site, spinor);
        Ok(())
    }

    pub fn get(&self, site: &LatticeDisplacement) -> Spinor {
        self.values.get(site).copied().unwrap_or(Spinor::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticeDisplacement, &Spinor)> {
        self.values.iter()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn norm2(&self) -> f64 {
        norm2(self)
    }

    /// `Σ_x ⟨self(x)|other(x)⟩`.
    pub fn overlap(&self, other: &SliceField) -> C64 {
        self.values.iter().map(|(site, s)| s.inner(&other.get(site))).sum()
    }

    pub fn scaled(&self, z: C64) -> SliceField {
        SliceField {
            time_step: self.time_step,
            chirality: self.chirality,
            values: self.values.iter().map(|(k, v)| (*k, *v * z)).collect(),
        }
    }

    /// Sitewise sum; both fields must share the time slice.
    pub fn plus(&self, other: &SliceField) -> SliceField {
        let mut values = self.values.clone();
        for (site, s) in &other.values {
            *values.entry(*site).or_insert(Spinor::ZERO) += *s;
        }
        SliceField { time_step: self.time_step, chirality: self.chirality, values }
    }

    /// Largest sitewise difference over the union of supports.
    pub fn max_abs_diff(&self, other: &SliceField) -> f64 {
        self.values
            .keys()
            .chain(other.values.keys())
            .map(|site| self.get(site).max_abs_diff(&other.get(site)))
            .fold(0.0, f64::max)
    }

    /// Snapshot sorted lexicographically by counts.
    pub fn snapshot(&self) -> Vec<SiteRecord> {
        self.values
            .iter()
            .map(|(site, s)| SiteRecord { counts: site.counts, spinor: s.to_components() })
            .collect()
    }
}

/// `Σ` over the support of `|c0|² + |c1|²`.
pub fn norm2(field: &SliceField) -> f64 {
    field.values.values().map(Spinor::norm2).sum()
}

fn half_projectors(chirality: Chirality) -> [SpinMatrix; 4] {
    Direction::ALL4.map(|d| chiral_projector(d, chirality) * 0.5)
}

/// `Ψ'(x) = ½ Σ_i Q_i Ψ(x − e_i)` with `Q = P` (right) or `P̄` (left).
pub fn step_weyl(field: &SliceField) -> SliceField {
    step_weyl_with(field, Execution::default())
}

pub fn step_weyl_with(field: &SliceField, execution: Execution) -> SliceField {
    let q = half_projectors(field.chirality);
    let values = gather(&[&field.values], execution, |x| {
        let mut out = Spinor::ZERO;
        for (dir, qi) in Direction::ALL4.iter().zip(&q) {
            out += qi.apply(&field.get(&x.step_back(*dir)));
        }
        out
    });
    SliceField { time_step: field.time_step + 1, chirality: field.chirality, values }
}

/// Evolves `steps` times, returning the final field and `norm2` after each
/// step (starting with the input).
pub fn evolve_weyl(field: &SliceField, steps: usize) -> (SliceField, Vec<f64>) {
    let mut current = field.clone();
    let mut norms = vec![current.norm2()];
    for _ in 0..steps {
        current = step_weyl(&current);
        norms.push(current.norm2());
    }
    (current, norms)
}

/// Right- and left-handed components coupled by a Dirac mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracSliceField {
    pub r: SliceField,
    pub l: SliceField,
    pub mass: f64,
    pub epsilon: f64,
}

impl DiracSliceField {
    pub fn new(r: SliceField, l: SliceField, mass: f64, epsilon: f64) -> Result<Self> {
        if r.time_step != l.time_step {
            return Err(Error::Invalid(format!("R at t={} but L at t={}", r.time_step, l.time_step)));
        }
        if r.chirality != Chirality::Right || l.chirality != Chirality::Left {
            return Err(Error::Invalid("Dirac components must be (Right, Left)".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::NonPositiveLength(epsilon));
        }
        Ok(DiracSliceField { r, l, mass, epsilon })
    }

    pub fn time_step(&self) -> i64 {
        self.r.time_step
    }

    pub fn norm2(&self) -> f64 {
        self.r.norm2() + self.l.norm2()
    }

    fn flip(&self) -> C64 {
        C64::new(0.0, self.epsilon * self.mass)
    }
}

/// `R'(x) = ½ Σ_i P_i (R + iεm L)(x − e_i)`,
/// `L'(x) = ½ Σ_i P̄_i (L + iεm R)(x − e_i)`.
pub fn step_dirac(state: &DiracSliceField) -> DiracSliceField {
    step_dirac_with(state, Execution::default())
}

pub fn step_dirac_with(state: &DiracSliceField, execution: Execution) -> DiracSliceField {
    let (pr, pl) = (half_projectors(Chirality::Right), half_projectors(Chirality::Left));
    let flip = state.flip();
    let both = gather(&[&state.r.values, &state.l.values], execution, |x| {
        let (mut r, mut l) = (Spinor::ZERO, Spinor::ZERO);
        for (k, dir) in Direction::ALL4.iter().enumerate() {
            let src = x.step_back(*dir);
            let (rs, ls) = (state.r.get(&src), state.l.get(&src));
            r += pr[k].apply(&(rs + ls * flip));
            l += pl[k].apply(&(ls + rs * flip));
        }
        (r, l)
    });
    let t = state.time_step() + 1;
    let mut r = SliceField::empty(t, Chirality::Right);
    let mut l = SliceField::empty(t, Chirality::Left);
    for (site, (rs, ls)) in both {
        r.values.insert(site, rs);
        l.values.insert(site, ls);
    }
    DiracSliceField { r, l, mass: state.mass, epsilon: state.epsilon }
}

/// Where the conjugation sits relative to the projector in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MajoranaVariant {
    /// `½ Σ_i P_i (1 + iεm C) ψ(x − e_i)`.
    ConjugateThenPropagate,
    /// `½ Σ_i (1 + iεm C) P_i ψ(x − e_i)`.
    PropagateThenConjugate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajoranaSliceField {
    pub field: SliceField,
    pub mass: f64,
    pub epsilon: f64,
    pub variant: MajoranaVariant,
}

impl MajoranaSliceField {
    pub fn new(field: SliceField, mass: f64, epsilon: f64, variant: MajoranaVariant) -> Result<Self> {
        if field.chirality != Chirality::Right {
            return Err(Error::Invalid("Majorana field is carried by the right-handed component".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::NonPositiveLength(epsilon));
        }
        Ok(MajoranaSliceField { field, mass, epsilon, variant })
    }
}

/// One Majorana step; `C` acts antilinearly, so the map is only real-linear.
pub fn step_majorana(state: &MajoranaSliceField) -> MajoranaSliceField {
    step_majorana_with(state, Execution::default())
}

pub fn step_majorana_with(state: &MajoranaSliceField, execution: Execution) -> MajoranaSliceField {
    let p = half_projectors(Chirality::Right);
    let flip = C64::new(0.0, state.epsilon * state.mass);
    let field = &state.field;
    let values = gather(&[&field.values], execution, |x| {
        let mut out = Spinor::ZERO;
        for (k, dir) in Direction::ALL4.iter().enumerate() {
            let psi = field.get(&x.step_back(*dir));
            out += match state.variant {
                MajoranaVariant::ConjugateThenPropagate => p[k].apply(&(psi + psi.charge_conjugate() * flip)),
                MajoranaVariant::PropagateThenConjugate => {
                    let moved = p[k].apply(&psi);
                    moved + moved.charge_conjugate() * flip
                }
            };
        }
        out
    });
    MajoranaSliceField {
        field: SliceField { time_step: field.time_step + 1, chirality: field.chirality, values },
        ..state.clone()
    }
}

/// Wavevector whose phases `θ_j = 3ε k·n̂_j` satisfy
/// `θ_i − θ_4 = 2π m_i / period`, so the plane wave is periodic.
pub fn commensurate_wavevector(modes: [i64; 3], period: usize, epsilon: f64) -> Result<[f64; 3]> {
    if period == 0 {
        return Err(Error::Invalid("period must be positive".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveLength(epsilon));
    }
    let unit = TAU / period as f64;
    let theta4 = -unit * modes.iter().sum::<i64>() as f64 / 4.0;
    let mut theta = [theta4; 4];
    for i in 0..3 {
        theta[i] = theta4 + unit * modes[i] as f64;
    }
    // k = Σ_j n̂_j θ_j / (4ε) inverts θ_j = 3ε k·n̂_j when Σθ = 0
    let mut k = [0.0; 3];
    for dir in Direction::ALL4 {
        let n = dir.unit_vector();
        for a in 0..3 {
            k[a] += n[a] * theta[dir.slot()] / (4.0 * epsilon);
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaneWaveMeasurement {
    pub theta: [f64; 4],
    /// Eigenvalue of `A(θ)` for the chosen branch.
    pub expected: C64,
    /// Per-step multiplier measured in the final step.
    pub multiplier: C64,
    pub per_step: Vec<C64>,
    /// Largest deviation of the evolved field from an exact plane wave.
    pub max_residual: f64,
}

/// Evolves an eigenvector plane wave on a periodic slice of `period³` sites
/// and measures the complex factor it picks up per step.
///
/// On the periodic slice a site is `(n₁, n₂, n₃)` mod `period` with `n₄`
/// implied by the time step, so a step along direction 4 stays in place.
pub fn plane_wave_multiplier(
    k_spatial: &[f64; 3],
    epsilon: f64,
    steps: usize,
    period: usize,
    branch: usize,
) -> Result<PlaneWaveMeasurement> {
    if steps == 0 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    if period == 0 {
        return Err(Error::Invalid("period must be positive".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveLength(epsilon));
    }
    let theta = lattice_phases(k_spatial, epsilon).theta;
    let mut rel = [0.0; 3];
    for i in 0..3 {
        let winding = (theta[i] - theta[3]) * period as f64 / TAU;
        if (winding - winding.round()).abs() > 1e-9 {
            return Err(Error::Incommensurate(period));
        }
        rel[i] = theta[i] - theta[3];
    }
    let eig = eigenvalues(&Amplifier::chiral(Chirality::Right).matrix(&theta));
    let (expected, v) = match branch {
        0 => (eig.lambda1, eig.v1),
        _ => (eig.lambda2, eig.v2.unwrap_or(eig.v1)),
    };
    let l = period;
    let n_sites = l * l * l;
    let coords = |idx: usize| [idx % l, (idx / l) % l, idx / (l * l)];
    let phase = |idx: usize, t: usize| {
        let n = coords(idx);
        let arg: f64 = (0..3).map(|i| rel[i] * n[i] as f64).sum::<f64>() + theta[3] * t as f64;
        C64::from_polar(1.0, -arg)
    };
    let p = Direction::ALL4.map(|d| projector(d) * 0.5);
    let execution = Execution::default();
    let mut field: Vec<Spinor> = (0..n_sites).map(|idx| v * phase(idx, 0)).collect();
    let mut per_step = Vec::with_capacity(steps);
    let mut max_residual = 0.0f64;
    let mut prev = v.inner(&field[0]);
    for t in 1..=steps {
        let next = execution.map_range(n_sites, |idx| {
            let n = coords(idx);
            let mut out = Spinor::ZERO;
            for i in 0..3 {
                let mut m = n;
                m[i] = (m[i] + l - 1) % l;
                out += p[i].apply(&field[m[0] + l * (m[1] + l * m[2])]);
            }
            out + p[3].apply(&field[idx])
        });
        field = next;
        let amp = v.inner(&field[0]) * C64::from_polar(1.0, theta[3] * t as f64);
        let prev_amp = prev * C64::from_polar(1.0, theta[3] * (t - 1) as f64);
        per_step.push(amp / prev_amp);
        prev = v.inner(&field[0]);
        for (idx, s) in field.iter().enumerate() {
            max_residual = max_residual.max(s.max_abs_diff(&(v * (amp * phase(idx, t)))));
        }
    }
    Ok(PlaneWaveMeasurement { theta, expected, multiplier: *per_step.last().expect("steps >= 1"), per_step, max_residual })
}

/// One-step transfer matrix of the Dirac system for a plane wave, acting on
/// `(R, L)`: `[[A_R, iεm A_R], [iεm A_L, A_L]]`.
pub fn dirac_transfer_matrix(theta: &[f64; 4], epsilon: f64, mass: f64) -> Matrix4<C64> {
    let ar = Amplifier::chiral(Chirality::Right).matrix(theta);
    let al = Amplifier::chiral(Chirality::Left).matrix(theta);
    let flip = C64::new(0.0, epsilon * mass);
    Matrix4::from_fn(|r, c| {
        let (block_r, block_c) = (r / 2, c / 2);
        let a = if block_r == 0 { &ar } else { &al };
        let entry = a.m[r % 2][c % 2];
        if block_r == block_c {
            entry
        } else {
            entry * flip
        }
    })
}

/// The four eigen-frequencies `ω = (i/ε) Ln λ` of the Dirac transfer matrix.
pub fn dirac_frequencies(k_spatial: &[f64; 3], epsilon: f64, mass: f64) -> Result<Vec<Option<C64>>> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveLength(epsilon));
    }
    let theta = lattice_phases(k_spatial, epsilon).theta;
    let t = dirac_transfer_matrix(&theta, epsilon, mass);
    let eig = t
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Invalid("Schur form did not triangularise".into()))?;
    Ok(eig.iter().map(|&l| frequency(l, epsilon)).collect())
}

/// `max | |Re ω| − √(k² + m²) |` over the four Dirac branches.
pub fn dirac_dispersion_deviation(k_spatial: &[f64; 3], epsilon: f64, mass: f64) -> Result<f64> {
    let target = (k_spatial.iter().map(|k| k * k).sum::<f64>() + mass * mass).sqrt();
    let omegas = dirac_frequencies(k_spatial, epsilon, mass)?;
    omegas
        .into_iter()
        .map(|w| w.map(|w| (w.re.abs() - target).abs()).ok_or(Error::Invalid("zero eigenvalue".into())))
        .try_fold(0.0f64, |acc, d| Ok(acc.max(d?)))
}
