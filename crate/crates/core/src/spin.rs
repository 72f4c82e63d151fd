//! Two-component spinors, complex 2×2 matrices and the spin algebra of the
//! tetrahedral directions: projectors, eigenspinors under two phase rules,
//! spin transition amplitudes and charge conjugation.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{step_vectors, DimensionMode, Direction};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Spinor {
    pub c0: C64,
    pub c1: C64,
}

impl Spinor {
    pub const ZERO: Spinor = Spinor { c0: ZERO, c1: ZERO };

    pub fn new(c0: C64, c1: C64) -> Self {
        Spinor { c0, c1 }
    }

    pub fn up() -> Self {
        Spinor::new(ONE, ZERO)
    }

    pub fn down() -> Self {
        Spinor::new(ZERO, ONE)
    }

    pub fn norm2(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        *self * (1.0 / self.norm2().sqrt())
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Spinor) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    pub fn conj(&self) -> Self {
        Spinor::new(self.c0.conj(), self.c1.conj())
    }

    /// `C ψ = iσ₂ ψ*`, the antilinear charge conjugation.
    pub fn charge_conjugate(&self) -> Self {
        Spinor::new(self.c1.conj(), -self.c0.conj())
    }

    pub fn max_abs_diff(&self, other: &Spinor) -> f64 {
        (self.c0 - other.c0).norm().max((self.c1 - other.c1).norm())
    }

    /// `[re0, im0, re1, im1]`.
    pub fn to_components(&self) -> [f64; 4] {
        [self.c0.re, self.c0.im, self.c1.re, self.c1.im]
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.c0 + rhs.c0, self.c1 + rhs.c1)
    }
}

impl AddAssign for Spinor {
    fn add_assign(&mut self, rhs: Spinor) {
        self.c0 += rhs.c0;
        self.c1 += rhs.c1;
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.c0 - rhs.c0, self.c1 - rhs.c1)
    }
}

impl Neg for Spinor {
    type Output = Spinor;
    fn neg(self) -> Spinor {
        Spinor::new(-self.c0, -self.c1)
    }
}

impl Mul<C64> for Spinor {
    type Output = Spinor;
    fn mul(self, rhs: C64) -> Spinor {
        Spinor::new(self.c0 * rhs, self.c1 * rhs)
    }
}

impl Mul<f64> for Spinor {
    type Output = Spinor;
    fn mul(self, rhs: f64) -> Spinor {
        Spinor::new(self.c0 * rhs, self.c1 * rhs)
    }
}

/// Complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SpinMatrix {
    pub m: [[C64; 2]; 2],
}

impl SpinMatrix {
    pub const ZERO: SpinMatrix = SpinMatrix { m: [[ZERO; 2]; 2] };
    pub const IDENTITY: SpinMatrix = SpinMatrix { m: [[ONE, ZERO], [ZERO, ONE]] };

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        SpinMatrix { m: [[a, b], [c, d]] }
    }

    pub fn sigma_x() -> Self {
        SpinMatrix::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn sigma_y() -> Self {
        SpinMatrix::new(ZERO, -I, I, ZERO)
    }

    pub fn sigma_z() -> Self {
        SpinMatrix::new(ONE, ZERO, ZERO, -ONE)
    }

    /// `σ^μ = (1, σ⃗)` for `μ = 0..3`.
    pub fn sigma(mu: usize) -> Self {
        match mu {
            0 => SpinMatrix::IDENTITY,
            1 => SpinMatrix::sigma_x(),
            2 => SpinMatrix::sigma_y(),
            _ => SpinMatrix::sigma_z(),
        }
    }

    /// `n⃗·σ⃗`.
    pub fn n_dot_sigma(n: &[f64; 3]) -> Self {
        SpinMatrix::new(
            C64::new(n[2], 0.0),
            C64::new(n[0], -n[1]),
            C64::new(n[0], n[1]),
            C64::new(-n[2], 0.0),
        )
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &Spinor, b: &Spinor) -> Self {
        SpinMatrix::new(a.c0 * b.c0.conj(), a.c0 * b.c1.conj(), a.c1 * b.c0.conj(), a.c1 * b.c1.conj())
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        SpinMatrix::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn conj(&self) -> Self {
        SpinMatrix { m: self.m.map(|row| row.map(|z| z.conj())) }
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        Spinor::new(self.m[0][0] * v.c0 + self.m[0][1] * v.c1, self.m[1][0] * v.c0 + self.m[1][1] * v.c1)
    }

    pub fn scale(&self, z: C64) -> Self {
        SpinMatrix { m: self.m.map(|row| row.map(|w| w * z)) }
    }

    pub fn column(&self, j: usize) -> Spinor {
        Spinor::new(self.m[0][j], self.m[1][j])
    }

    pub fn from_columns(a: &Spinor, b: &Spinor) -> Self {
        SpinMatrix::new(a.c0, b.c0, a.c1, b.c1)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &SpinMatrix) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&SpinMatrix::ZERO)
    }

    /// Operator 2-norm, the square root of the larger eigenvalue of `M†M`.
    pub fn operator_norm(&self) -> f64 {
        let h = self.dagger() * *self;
        let a = h.m[0][0].re;
        let d = h.m[1][1].re;
        let b = h.m[0][1].norm();
        let top = 0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b * b).sqrt();
        top.max(0.0).sqrt()
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = SpinMatrix::IDENTITY;
        for _ in 0..n {
            out = *self * out;
        }
        out
    }
}

impl Add for SpinMatrix {
    type Output = SpinMatrix;
    fn add(self, rhs: SpinMatrix) -> SpinMatrix {
        let mut out = self;
        out += rhs;
        out
    }
}

impl AddAssign for SpinMatrix {
    fn add_assign(&mut self, rhs: SpinMatrix) {
        for r in 0..2 {
            for c in 0..2 {
                self.m[r][c] += rhs.m[r][c];
            }
        }
    }
}

impl Sub for SpinMatrix {
    type Output = SpinMatrix;
    fn sub(self, rhs: SpinMatrix) -> SpinMatrix {
        self + rhs.scale(-ONE)
    }
}

impl Mul for SpinMatrix {
    type Output = SpinMatrix;
    fn mul(self, rhs: SpinMatrix) -> SpinMatrix {
        let (a, b) = (&self.m, &rhs.m);
        SpinMatrix::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<f64> for SpinMatrix {
    type Output = SpinMatrix;
    fn mul(self, rhs: f64) -> SpinMatrix {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for SpinMatrix {
    type Output = SpinMatrix;
    fn mul(self, rhs: C64) -> SpinMatrix {
        self.scale(rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum Chirality {
    #[default]
    Right,
    Left,
}

impl Chirality {
    pub fn flipped(self) -> Self {
        match self {
            Chirality::Right => Chirality::Left,
            Chirality::Left => Chirality::Right,
        }
    }
}

/// `P_i = ½(1 + n̂_i·σ⃗)`, the projector onto spin up along `n̂_i`.
pub fn projector(dir: Direction) -> SpinMatrix {
    (SpinMatrix::IDENTITY + SpinMatrix::n_dot_sigma(&dir.unit_vector())) * 0.5
}

/// `P̄_i = ½(1 − n̂_i·σ⃗)`.
pub fn anti_projector(dir: Direction) -> SpinMatrix {
    (SpinMatrix::IDENTITY - SpinMatrix::n_dot_sigma(&dir.unit_vector())) * 0.5
}

pub fn chiral_projector(dir: Direction, chirality: Chirality) -> SpinMatrix {
    match chirality {
        Chirality::Right => projector(dir),
        Chirality::Left => anti_projector(dir),
    }
}

/// `½(1 + (c/α) n̂_i·σ⃗)` where `c` is the marginal step speed of the mode.
/// Reduces to [`projector`] at `α = c`.
pub fn weighted_projector(dir: Direction, alpha: f64) -> SpinMatrix {
    let n = dir.unit_vector();
    let s = dir.mode().marginal_speed() / alpha;
    (SpinMatrix::IDENTITY + SpinMatrix::n_dot_sigma(&[s * n[0], s * n[1], s * n[2]])) * 0.5
}

/// Max-entry residual of `σ^μ = w Σ_i ½(1 + (c/α) n̂_i·σ⃗) N_i^μ`, with
/// `w = 1/2, c = 3` in 4D and `w = 2/3, c = 2` in 2+1, over all `μ`.
pub fn sigma_identity_residual(alpha: f64, mode: DimensionMode) -> Result<f64> {
    let steps = step_vectors(alpha, mode)?;
    let weight = mode.step_weight();
    let mut worst = 0.0f64;
    for mu in 0..=mode.spatial_dim() {
        let mut rhs = SpinMatrix::ZERO;
        for dir in mode.directions() {
            rhs += weighted_projector(dir, alpha) * (weight * steps.get(dir)[mu]);
        }
        worst = worst.max(rhs.max_abs_diff(&SpinMatrix::sigma(mu)));
    }
    Ok(worst)
}

/// Phase convention for the tetrahedral eigenspinors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseRule {
    /// `δ₄ = π/2`, `δ₁ = δ₂ = δ₃ = 0`: all distinct overlaps are `±i/√3`.
    RuleA,
    /// All `δ_i = 0`: bends away from the preferred axis have real overlap.
    RuleB,
}

impl PhaseRule {
    pub fn phase(self, dir: Direction) -> f64 {
        match (self, dir.mode(), dir.index()) {
            (PhaseRule::RuleA, DimensionMode::Spacetime4, 4) => FRAC_PI_2,
            _ => 0.0,
        }
    }
}

/// `(cos θ/2, sin θ/2 e^{iφ})` for the unit vector with polar angles `(θ, φ)`.
pub fn spinor_along(n: &[f64; 3]) -> Spinor {
    let cos_half = ((1.0 + n[2]) / 2.0).max(0.0).sqrt();
    let sin_half = ((1.0 - n[2]) / 2.0).max(0.0).sqrt();
    let phi = n[1].atan2(n[0]);
    Spinor::new(C64::new(cos_half, 0.0), C64::from_polar(sin_half, phi))
}

/// Unit eigenspinor `|i⟩` of `P_i` with the rule's phase `e^{iδ_i}`.
pub fn eigenspinor(dir: Direction, rule: PhaseRule) -> Spinor {
    spinor_along(&dir.unit_vector()) * C64::from_polar(1.0, rule.phase(dir))
}

/// Eigenspinor of the chirality's projector: `|i⟩` for right-handed, its
/// charge conjugate `iσ₂|i⟩*` (an eigenspinor of `P̄_i`) for left-handed.
pub fn chiral_eigenspinor(dir: Direction, rule: PhaseRule, chirality: Chirality) -> Spinor {
    let s = eigenspinor(dir, rule);
    match chirality {
        Chirality::Right => s,
        Chirality::Left => s.charge_conjugate(),
    }
}

/// Spin transition amplitude `⟨to|from⟩`.
pub fn transition(from: Direction, to: Direction, rule: PhaseRule) -> C64 {
    eigenspinor(to, rule).inner(&eigenspinor(from, rule))
}

pub fn chiral_transition(from: Direction, to: Direction, rule: PhaseRule, chirality: Chirality) -> C64 {
    chiral_eigenspinor(to, rule, chirality).inner(&chiral_eigenspinor(from, rule, chirality))
}

/// Transition amplitudes `⟨to|from⟩` for every ordered pair of directions.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionTable {
    pub rule: PhaseRule,
    pub chirality: Chirality,
    /// `amplitudes[from - 1][to - 1]`.
    pub amplitudes: Vec<Vec<C64>>,
}

pub fn transition_table(rule: PhaseRule, chirality: Chirality) -> TransitionTable {
    let amplitudes = Direction::ALL4
        .iter()
        .map(|&from| Direction::ALL4.iter().map(|&to| chiral_transition(from, to, rule, chirality)).collect())
        .collect();
    TransitionTable { rule, chirality, amplitudes }
}

/// The antilinear charge conjugation `C ψ = iσ₂ ψ*`.
///
/// `C` is never stored as a matrix: conjugating an operator goes through
/// [`ChargeConjugation::conjugate_operator`], which keeps the complex
/// conjugation explicit.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChargeConjugation;

impl ChargeConjugation {
    pub fn apply(&self, psi: &Spinor) -> Spinor {
        psi.charge_conjugate()
    }

    /// The linear map `C ∘ M ∘ C⁻¹`, equal to `J M* J⁻¹` with `J = iσ₂`.
    pub fn conjugate_operator(&self, m: &SpinMatrix) -> SpinMatrix {
        let j = SpinMatrix::new(ZERO, ONE, -ONE, ZERO);
        let j_inv = SpinMatrix::new(ZERO, -ONE, ONE, ZERO);
        j * m.conj() * j_inv
    }
}

pub fn charge_conjugate(psi: &Spinor) -> Spinor {
    psi.charge_conjugate()
}

/// Largest violation of `C² = −1`, `C P_i = P̄_i C` and `P_i C = C P̄_i`, each
/// checked as a map on the real basis `{e₀, e₁, i e₀, i e₁}`.
pub fn conjugation_relations_residual() -> f64 {
    let basis = [
        Spinor::up(),
        Spinor::down(),
        Spinor::up() * I,
        Spinor::down() * I,
    ];
    let c = ChargeConjugation;
    let mut worst = 0.0f64;
    for psi in &basis {
        worst = worst.max(c.apply(&c.apply(psi)).max_abs_diff(&-*psi));
        for dir in Direction::ALL4 {
            let (p, pbar) = (projector(dir), anti_projector(dir));
            worst = worst.max(c.apply(&p.apply(psi)).max_abs_diff(&pbar.apply(&c.apply(psi))));
            worst = worst.max(p.apply(&c.apply(psi)).max_abs_diff(&c.apply(&pbar.apply(psi))));
        }
    }
    worst
}

/// Shows that no choice of `δ₁, δ₂, δ₃` makes all three cyclic phase ratios `−1`.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseImpossibility {
    /// `e^{i(δ₁−δ₂)} e^{i(δ₂−δ₃)} e^{i(δ₃−δ₁)}`; its exponent cancels identically.
    pub product: C64,
    /// The value the product would need: `(−1)³`.
    pub required: C64,
    pub consistent: bool,
    /// Coefficients of `δ₁, δ₂, δ₃` in the summed exponent.
    pub exponent_coefficients: [i32; 3],
}

pub fn phase_impossibility_certificate() -> PhaseImpossibility {
    let factors: [[i32; 3]; 3] = [[1, -1, 0], [0, 1, -1], [-1, 0, 1]];
    let mut exponent_coefficients = [0i32; 3];
    for f in &factors {
        for k in 0..3 {
            exponent_coefficients[k] += f[k];
        }
    }
    // the exponent is identically zero, so the product is e^0 for every choice of phases
    let product = if exponent_coefficients == [0, 0, 0] {
        ONE
    } else {
        C64::new(f64::NAN, f64::NAN)
    };
    let required = C64::new(-1.0, 0.0);
    PhaseImpossibility { product, required, consistent: product == required, exponent_coefficients }
}

/// Builds a spinor from `[re0, im0, re1, im1]`.
pub fn spinor_from_components(c: [f64; 4]) -> Spinor {
    Spinor::new(C64::new(c[0], c[1]), C64::new(c[2], c[3]))
}

/// Parses a source spin label (`up`, `down`, or a direction `n1`..`n4`).
pub fn parse_spin_label(label: &str) -> Result<Spinor> {
    match label {
        "up" => Ok(Spinor::up()),
        "down" => Ok(Spinor::down()),
        other => {
            let idx = other
                .strip_prefix('n')
                .and_then(|s| s.parse::<u8>().ok())
                .ok_or_else(|| Error::Invalid(format!("unknown spin label `{other}`")))?;
            Ok(eigenspinor(Direction::new(idx, DimensionMode::Spacetime4)?, PhaseRule::RuleB))
        }
    }
}
