//! Command-line front end: scans, evolutions, path and propagator reports.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when an internal
//! invariant check fails (the invariant's identifier is printed).

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::evolution::{
    commensurate_wavevector, plane_wave_multiplier, step_dirac_with, step_majorana_with, step_weyl_with,
    DiracSliceField, MajoranaSliceField, MajoranaVariant, SiteRecord, SliceField,
};
use crate::exec::Execution;
use crate::geometry::{
    face_null_normal, jacobian, step_vectors, tetrad, volume_per_point, DimensionMode, Direction, LatticeDisplacement,
    IDENTITY_TOL,
};
use crate::paths::{
    enumerate_paths, path_rows, planar_normalization_discrepancy, planar_path_rows, verify_path_calculus, PathQuery,
    PathRow, PlanarVariant,
};
use crate::propagator::{
    continuum_convergence_study, continuum_prefactor, dirac_convergence_study, halving_sequence,
    identity_sum_deviation, kernel_dp, kernel_fourier, kernel_pathsum, ConvergenceReport, KernelJson, KernelTable,
};
use crate::spectral::{
    phi, phi_direct, real_axis_gap, spectrum_scan, trace_adag_a, trace_adag_a_direct, ScanConfig, ThetaQuad,
};
use crate::spin::{
    conjugation_relations_residual, parse_spin_label, phase_impossibility_certificate, projector,
    sigma_identity_residual, transition_table, Chirality, PhaseRule, SpinMatrix,
};

#[derive(Debug, Parser)]
#[command(name = "checkerboard", version, about = "Weyl, Dirac and Majorana fields on the time-diagonal hypercubic lattice")]
pub struct Cli {
    /// Run every data-parallel loop on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of A(θ) over a grid, as CSV or JSON.
    Spectrum(SpectrumArgs),
    /// Real-axis spectral gap and norm bound, as JSON.
    Gap(GapArgs),
    /// Evolve a delta or plane-wave source.
    Evolve(EvolveArgs),
    /// Enumerate paths with bend statistics and both amplitudes.
    Paths(PathsArgs),
    /// Retarded kernel tables and the continuum convergence study.
    Propagator(PropagatorArgs),
    /// Run the algebraic identity suites and print a pass/fail table.
    Selfcheck(SelfcheckArgs),
    /// Dump tetrad, step vectors and face normals.
    Geometry(GeometryArgs),
    /// Dump the spin transition table.
    Transitions(TransitionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChiralityArg {
    Right,
    Left,
}

impl From<ChiralityArg> for Chirality {
    fn from(c: ChiralityArg) -> Self {
        match c {
            ChiralityArg::Right => Chirality::Right,
            ChiralityArg::Left => Chirality::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "4d")]
    Spacetime4,
    #[value(name = "2+1")]
    Planar3,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 40)]
    pub grid: usize,
    /// Scan the constrained grid Σθ = 0 (the default).
    #[arg(long, conflicts_with = "unconstrained")]
    pub constrained: bool,
    /// Scan all four angles independently.
    #[arg(long)]
    pub unconstrained: bool,
    /// Leave out this many θ₁ values nearest zero.
    #[arg(long, default_value_t = 0)]
    pub exclude_center: usize,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long, default_value_t = 40)]
    pub grid: usize,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvolveMode {
    Weyl,
    Dirac,
    Majorana,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Delta,
    PlaneWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MajoranaArg {
    ConjugateFirst,
    PropagateFirst,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long, value_enum, default_value_t = EvolveMode::Weyl)]
    pub mode: EvolveMode,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = SourceArg::Delta)]
    pub source: SourceArg,
    /// Source spinor: up, down or n1..n4.
    #[arg(long, default_value = "up")]
    pub spin: String,
    /// Chirality of a Weyl field.
    #[arg(long, value_enum, default_value_t = ChiralityArg::Right)]
    pub chirality: ChiralityArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mass: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = MajoranaArg::ConjugateFirst)]
    pub variant: MajoranaArg,
    /// Integer plane-wave modes m₁,m₂,m₃ on the periodic slice.
    #[arg(long, default_value = "1,0,0", value_delimiter = ',', allow_negative_numbers = true)]
    pub modes: Vec<i64>,
    #[arg(long, default_value_t = 6)]
    pub period: usize,
    /// Eigenvalue branch (0 = larger modulus).
    #[arg(long, default_value_t = 0)]
    pub branch: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathsArgs {
    #[arg(long, conflicts_with = "displacement", required_unless_present = "displacement")]
    pub steps: Option<usize>,
    /// Step counts n1,n2,n3,n4.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub displacement: Option<Vec<i64>>,
    #[arg(long, value_enum, default_value_t = ModeArg::Spacetime4)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = VariantArg::Symmetric)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = ChiralityArg::Right)]
    pub chirality: ChiralityArg,
    #[arg(long, default_value_t = crate::paths::DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plus,
    Minus,
    Symmetric,
}

impl From<VariantArg> for PlanarVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Plus => PlanarVariant::ChiralPlus,
            VariantArg::Minus => PlanarVariant::ChiralMinus,
            VariantArg::Symmetric => PlanarVariant::Symmetric,
        }
    }
}

#[derive(Debug, Args)]
pub struct PropagatorArgs {
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, value_enum, default_value_t = ChiralityArg::Right)]
    pub chirality: ChiralityArg,
    /// Also build the path-sum and Fourier tables and compare.
    #[arg(long)]
    pub verify: bool,
    /// Fourier grid per angle (default t + 1).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Run the ε-halving dispersion study instead.
    #[arg(long)]
    pub converge: bool,
    #[arg(long, default_value = "0.3,0.2,0.1", value_delimiter = ',', allow_negative_numbers = true)]
    pub k: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub halvings: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub epsilon0: f64,
    /// Study the Dirac transfer matrix at this mass.
    #[arg(long, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Spacetime4)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    A,
    B,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    #[arg(long, value_enum, default_value_t = RuleArg::B)]
    pub rule: RuleArg,
    #[arg(long, value_enum, default_value_t = ChiralityArg::Right)]
    pub chirality: ChiralityArg,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("invariant violated [{id}]: {detail}")]
    Invariant { id: &'static str, detail: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Invariant { .. } => 3,
        }
    }

    fn invariant(id: &'static str, detail: impl Into<String>) -> Self {
        CliError::Invariant { id, detail: detail.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Validation(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json error: {e}"))
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Runs one parsed invocation. Data goes to `--output` or `stdout`; human
/// summaries go to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a, exec, stdout),
        Command::Gap(a) => cmd_gap(a, exec, stdout),
        Command::Evolve(a) => cmd_evolve(a, exec, stdout),
        Command::Paths(a) => cmd_paths(a, exec, stdout, stderr),
        Command::Propagator(a) => cmd_propagator(a, exec, stdout, stderr),
        Command::Selfcheck(a) => cmd_selfcheck(a, exec, stdout),
        Command::Geometry(a) => cmd_geometry(a, stdout),
        Command::Transitions(a) => cmd_transitions(a, stdout),
    }
}

fn sink<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(stdout)),
    }
}

fn write_json<T: Serialize>(value: &T, path: &Option<PathBuf>, stdout: &mut dyn Write) -> CliResult {
    let mut out = sink(path, stdout)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Scientific notation with 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>, path: &Option<PathBuf>, stdout: &mut dyn Write) -> CliResult {
    let mut writer = csv::Writer::from_writer(sink(path, stdout)?);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_spectrum(a: &SpectrumArgs, exec: Execution, stdout: &mut dyn Write) -> CliResult {
    let cfg = ScanConfig {
        grid: a.grid,
        constrained: !a.unconstrained,
        exclude_center: a.exclude_center,
        alpha: a.alpha,
        execution: exec,
    };
    let points = spectrum_scan(&cfg)?;
    if a.alpha >= 3.0 {
        if let Some(p) = points.iter().find(|p| p.lambda.norm() > 1.0 + 1e-12) {
            return Err(CliError::invariant("spectrum.norm_bound", format!("|λ| = {} at θ = {:?}", p.lambda.norm(), p.theta)));
        }
    }
    match a.format {
        Format::Json => write_json(&points, &a.output, stdout),
        Format::Csv => write_csv(
            &["theta1", "theta2", "theta3", "theta4", "branch", "re", "im", "abs"],
            points.iter().map(|p| {
                let mut row: Vec<String> = p.theta.iter().map(|t| num(*t)).collect();
                row.extend([p.branch.to_string(), num(p.lambda.re), num(p.lambda.im), num(p.lambda.norm())]);
                row
            }),
            &a.output,
            stdout,
        ),
    }
}

#[derive(Debug, Serialize)]
struct GapOutput {
    grid: usize,
    alpha: f64,
    gap: f64,
    argmax_theta: [f64; 4],
    refined_gap: f64,
    refined_theta: [f64; 4],
    expected_gap: f64,
    max_modulus: f64,
    bound_violation: bool,
}

fn cmd_gap(a: &GapArgs, exec: Execution, stdout: &mut dyn Write) -> CliResult {
    if a.grid < 40 {
        return Err(Error::GridTooSmall { min: 40, got: a.grid }.into());
    }
    let report = real_axis_gap(&ScanConfig { grid: a.grid, alpha: a.alpha, execution: exec, ..Default::default() })?;
    let bound_violation = report.max_modulus > 1.0 + 1e-12;
    if a.alpha == 3.0 && bound_violation {
        return Err(CliError::invariant("gap.norm_bound", format!("max |λ| = {}", report.max_modulus)));
    }
    let out = GapOutput {
        grid: report.grid,
        alpha: report.alpha,
        gap: report.gap,
        argmax_theta: report.argmax_theta,
        refined_gap: report.refined_gap,
        refined_theta: report.refined_theta,
        expected_gap: 1.0 / 3f64.sqrt(),
        max_modulus: report.max_modulus,
        bound_violation,
    };
    write_json(&out, &a.output, stdout)
}

#[derive(Debug, Serialize)]
struct EvolveOutput {
    mode: &'static str,
    steps: usize,
    epsilon: f64,
    mass: f64,
    /// Squared norm before the first step and after each step.
    norms: Vec<f64>,
    /// Final field (the right-handed component in Dirac mode).
    field: Vec<SiteRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left: Option<Vec<SiteRecord>>,
}

fn cmd_evolve(a: &EvolveArgs, exec: Execution, stdout: &mut dyn Write) -> CliResult {
    if a.mode != EvolveMode::Weyl && a.mass < 0.0 {
        return Err(CliError::Validation(format!("mass must be non-negative, got {}", a.mass)));
    }
    if a.source == SourceArg::PlaneWave {
        if a.mode != EvolveMode::Weyl {
            return Err(CliError::Validation("plane-wave sources are supported in weyl mode only".into()));
        }
        let modes: [i64; 3] =
            a.modes.clone().try_into().map_err(|_| CliError::Validation("--modes needs three integers".into()))?;
        let k = commensurate_wavevector(modes, a.period, a.epsilon)?;
        let m = plane_wave_multiplier(&k, a.epsilon, a.steps, a.period, a.branch)?;
        let worst = m.per_step.iter().map(|mu| (mu - m.expected).norm()).fold(0.0, f64::max);
        if worst > 1e-10 {
            return Err(CliError::invariant("evolve.plane_wave_multiplier", format!("deviation {worst}")));
        }
        return write_json(&m, &a.output, stdout);
    }
    let spinor = parse_spin_label(&a.spin)?;
    let origin = LatticeDisplacement::ORIGIN;
    let out = match a.mode {
        EvolveMode::Weyl => {
            let mut field = SliceField::delta(origin, spinor, a.chirality.into())?;
            let mut norms = vec![field.norm2()];
            for _ in 0..a.steps {
                field = step_weyl_with(&field, exec);
                norms.push(field.norm2());
            }
            if norms.windows(2).any(|w| w[1] > w[0] + 1e-12) {
                return Err(CliError::invariant("evolve.norm_contraction", format!("{norms:?}")));
            }
            EvolveOutput { mode: "weyl", steps: a.steps, epsilon: a.epsilon, mass: 0.0, norms, field: field.snapshot(), left: None }
        }
        EvolveMode::Dirac => {
            let r = SliceField::delta(origin, spinor, Chirality::Right)?;
            let l = SliceField::empty(0, Chirality::Left);
            let mut state = DiracSliceField::new(r, l, a.mass, a.epsilon)?;
            let mut norms = vec![state.norm2()];
            for _ in 0..a.steps {
                state = step_dirac_with(&state, exec);
                norms.push(state.norm2());
            }
            EvolveOutput {
                mode: "dirac",
                steps: a.steps,
                epsilon: a.epsilon,
                mass: a.mass,
                norms,
                field: state.r.snapshot(),
                left: Some(state.l.snapshot()),
            }
        }
        EvolveMode::Majorana => {
            let variant = match a.variant {
                MajoranaArg::ConjugateFirst => MajoranaVariant::ConjugateThenPropagate,
                MajoranaArg::PropagateFirst => MajoranaVariant::PropagateThenConjugate,
            };
            let field = SliceField::delta(origin, spinor, Chirality::Right)?;
            let mut state = MajoranaSliceField::new(field, a.mass, a.epsilon, variant)?;
            let mut norms = vec![state.field.norm2()];
            for _ in 0..a.steps {
                state = step_majorana_with(&state, exec);
                norms.push(state.field.norm2());
            }
            EvolveOutput {
                mode: "majorana",
                steps: a.steps,
                epsilon: a.epsilon,
                mass: a.mass,
                norms,
                field: state.field.snapshot(),
                left: None,
            }
        }
    };
    write_json(&out, &a.output, stdout)
}

#[derive(Debug, Serialize)]
struct PathsSummary {
    rows: usize,
    max_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    display_normalization_ratio: Option<f64>,
}

fn cmd_paths(a: &PathsArgs, exec: Execution, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let mode = match a.mode {
        ModeArg::Spacetime4 => DimensionMode::Spacetime4,
        ModeArg::Planar3 => DimensionMode::Planar3,
    };
    let query = match (&a.steps, &a.displacement) {
        (Some(n), _) => PathQuery::StepCount { n: *n, mode },
        (None, Some(counts)) => {
            if mode != DimensionMode::Spacetime4 {
                return Err(CliError::Validation("--displacement is available in 4d mode only".into()));
            }
            let counts: [i64; 4] = counts
                .clone()
                .try_into()
                .map_err(|_| CliError::Validation("--displacement needs four integers".into()))?;
            PathQuery::Displacement(LatticeDisplacement::new(counts))
        }
        (None, None) => return Err(CliError::Validation("give --steps or --displacement".into())),
    };
    let paths = enumerate_paths(query, a.cap)?;
    let (rows, ratio): (Vec<PathRow>, Option<f64>) = match mode {
        DimensionMode::Spacetime4 => (path_rows(&paths, a.chirality.into(), exec), None),
        DimensionMode::Planar3 => {
            let n = paths.iter().map(|p| p.len()).max().unwrap_or(0);
            (planar_path_rows(&paths, a.variant.into(), exec)?, Some(planar_normalization_discrepancy(n)))
        }
    };
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    write_csv(
        &["path", "n", "b", "t", "re_amp", "im_amp", "abs_amp", "re_matrix", "im_matrix", "deviation"],
        rows.iter().map(|r| {
            vec![
                r.path.clone(),
                r.n.to_string(),
                r.b.to_string(),
                r.t.to_string(),
                num(r.re_amp),
                num(r.im_amp),
                num(r.abs_amp),
                num(r.re_matrix),
                num(r.im_matrix),
                num(r.deviation),
            ]
        }),
        &a.output,
        stdout,
    )?;
    let summary = PathsSummary { rows: rows.len(), max_deviation, display_normalization_ratio: ratio };
    writeln!(stderr, "{}", serde_json::to_string(&summary)?)?;
    if max_deviation > IDENTITY_TOL {
        return Err(CliError::invariant("paths.amplitude_equivalence", format!("max deviation {max_deviation}")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Deviations {
    dp_vs_pathsum: f64,
    dp_vs_fourier: f64,
    pathsum_vs_fourier: f64,
}

#[derive(Debug, Serialize)]
struct PropagatorOutput {
    t: usize,
    identity_sum_deviation: f64,
    dp: KernelJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pathsum: Option<KernelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fourier: Option<KernelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviations: Option<Deviations>,
}

fn cmd_propagator(a: &PropagatorArgs, exec: Execution, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    if a.converge {
        return cmd_converge(a, stdout, stderr);
    }
    let chir: Chirality = a.chirality.into();
    let dp = kernel_dp(a.t, chir, exec);
    let identity = identity_sum_deviation(a.t, chir, exec);
    if identity > IDENTITY_TOL {
        return Err(CliError::invariant("propagator.identity_sum", format!("deviation {identity}")));
    }
    let mut out = PropagatorOutput { t: a.t, identity_sum_deviation: identity, dp: dp.to_json(), pathsum: None, fourier: None, deviations: None };
    if a.verify {
        let grid = a.grid.unwrap_or(a.t + 1);
        let mut pathsum = KernelTable { t: a.t, chirality: chir, entries: Default::default() };
        let mut fourier = pathsum.clone();
        let mut dev = Deviations { dp_vs_pathsum: 0.0, dp_vs_fourier: 0.0, pathsum_vs_fourier: 0.0 };
        for (d, m) in &dp.entries {
            let ps = kernel_pathsum(d, chir)?;
            let ft = if a.t == 0 { SpinMatrix::IDENTITY } else { kernel_fourier(d, a.t, grid, chir, exec)? };
            dev.dp_vs_pathsum = dev.dp_vs_pathsum.max(m.max_abs_diff(&ps));
            dev.dp_vs_fourier = dev.dp_vs_fourier.max(m.max_abs_diff(&ft));
            dev.pathsum_vs_fourier = dev.pathsum_vs_fourier.max(ps.max_abs_diff(&ft));
            pathsum.entries.insert(*d, ps);
            fourier.entries.insert(*d, ft);
        }
        let worst = dev.dp_vs_pathsum.max(dev.dp_vs_fourier).max(dev.pathsum_vs_fourier);
        writeln!(stderr, "triple equivalence max deviation {worst:e}")?;
        if worst > 1e-10 {
            return Err(CliError::invariant("propagator.triple_equivalence", format!("max deviation {worst}")));
        }
        out.pathsum = Some(pathsum.to_json());
        out.fourier = Some(fourier.to_json());
        out.deviations = Some(dev);
    }
    write_json(&out, &a.output, stdout)
}

fn cmd_converge(a: &PropagatorArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let k: [f64; 3] = a.k.clone().try_into().map_err(|_| CliError::Validation("--k needs three components".into()))?;
    let eps = halving_sequence(a.epsilon0, a.halvings);
    let report: ConvergenceReport = match a.mass {
        Some(m) => dirac_convergence_study(&k, m, &eps)?,
        None => continuum_convergence_study(&k, &eps)?,
    };
    write_csv(
        &["epsilon", "deviation", "fitted_order"],
        report.rows.iter().map(|r| vec![num(r.epsilon), num(r.deviation), r.fitted_order.map(num).unwrap_or_default()]),
        &a.output,
        stdout,
    )?;
    writeln!(stderr, "monotone: {}, fitted order: {:?}", report.monotone, report.order)?;
    if !report.monotone {
        return Err(CliError::invariant("propagator.convergence_monotone", "deviation column is not decreasing"));
    }
    Ok(())
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn selfcheck_suite(a: &SelfcheckArgs, exec: Execution) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    let mut push = |name, value, tolerance| checks.push(Check { name, value, tolerance });
    push("geometry.tetrad_4d", tetrad(DimensionMode::Spacetime4).check().max_deviation(), 1e-12);
    push("geometry.tetrad_2+1", tetrad(DimensionMode::Planar3).check().max_deviation(), 1e-12);
    let faces = [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]];
    let mut face_dev = 0.0f64;
    for f in faces {
        let face = f.map(|i| Direction::ALL4[i - 1]);
        let n = face_null_normal(face, 3.0)?;
        face_dev = face_dev.max(n.norm2.abs()).max(n.face_products.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    push("geometry.face_null_normals", face_dev, 1e-12);
    let half_sum = Direction::ALL4.iter().fold(SpinMatrix::ZERO, |acc, d| acc + projector(*d) * 0.5);
    push("spin.projector_sum", half_sum.max_abs_diff(&SpinMatrix::IDENTITY), 1e-12);
    let mut sigma = 0.0f64;
    for alpha in [2.0, 3.0, 5.0] {
        sigma = sigma.max(sigma_identity_residual(alpha, DimensionMode::Spacetime4)?);
        sigma = sigma.max(sigma_identity_residual(alpha, DimensionMode::Planar3)?);
    }
    push("spin.sigma_identity", sigma, 1e-12);
    push("spin.charge_conjugation", conjugation_relations_residual(), 1e-12);
    let cert = phase_impossibility_certificate();
    push("spin.phase_impossibility", if cert.consistent { 1.0 } else { 0.0 }, 0.0);
    push("spectral.phi_at_0_0_pi_pi", (phi(&ThetaQuad::raw([0.0, 0.0, PI, PI])) - 4.0 / 9.0).abs(), 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (mut phi_dev, mut trace_dev, mut trace_max) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..a.samples {
        let q = ThetaQuad::raw([0; 4].map(|_| rng.gen_range(-PI..PI)));
        phi_dev = phi_dev.max((phi(&q) - phi_direct(&q)).abs());
        trace_dev = trace_dev.max((trace_adag_a(&q) - trace_adag_a_direct(&q)).abs());
        trace_max = trace_max.max(trace_adag_a(&q));
    }
    push("spectral.phi_closed_form", phi_dev, 1e-12);
    push("spectral.trace_closed_form", trace_dev, 1e-12);
    push("spectral.trace_at_most_two", (trace_max - 2.0).max(0.0), 1e-12);
    push("paths.calculus_n4", verify_path_calculus(4, exec)?.max_deviation(), 1e-12);
    push("propagator.identity_sum_t8", identity_sum_deviation(8, Chirality::Right, exec), 1e-12);
    push("propagator.prefactor", continuum_prefactor(0.1)?.relative_deviation, 1e-12);
    Ok(checks)
}

fn cmd_selfcheck(a: &SelfcheckArgs, exec: Execution, stdout: &mut dyn Write) -> CliResult {
    let checks = selfcheck_suite(a, exec)?;
    writeln!(stdout, "{:<32} {:>24} {:>10}  status", "check", "value", "tolerance")?;
    let mut first_failure = None;
    for c in &checks {
        let pass = c.value <= c.tolerance;
        writeln!(stdout, "{:<32} {:>24.16e} {:>10.0e}  {}", c.name, c.value, c.tolerance, if pass { "PASS" } else { "FAIL" })?;
        if !pass && first_failure.is_none() {
            first_failure = Some(c);
        }
    }
    match first_failure {
        Some(c) => Err(CliError::invariant(c.name, format!("value {} exceeds {}", c.value, c.tolerance))),
        None => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct GeometryOutput {
    tetrad: crate::geometry::Tetrad,
    check: crate::geometry::TetradCheck,
    step_vectors: crate::geometry::StepVectors,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    faces: Vec<crate::geometry::FaceNormal>,
    jacobian: f64,
    volume_per_point: f64,
}

fn cmd_geometry(a: &GeometryArgs, stdout: &mut dyn Write) -> CliResult {
    let mode = match a.mode {
        ModeArg::Spacetime4 => DimensionMode::Spacetime4,
        ModeArg::Planar3 => DimensionMode::Planar3,
    };
    let t = tetrad(mode);
    let faces = match mode {
        DimensionMode::Spacetime4 => [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]]
            .into_iter()
            .map(|f: [usize; 3]| face_null_normal(f.map(|i| Direction::ALL4[i - 1]), a.alpha))
            .collect::<Result<Vec<_>, _>>()?,
        DimensionMode::Planar3 => Vec::new(),
    };
    let out = GeometryOutput {
        check: t.check(),
        tetrad: t,
        step_vectors: step_vectors(a.alpha, mode)?,
        faces,
        jacobian: jacobian(),
        volume_per_point: volume_per_point(a.alpha * a.epsilon)?,
    };
    write_json(&out, &a.output, stdout)
}

fn cmd_transitions(a: &TransitionArgs, stdout: &mut dyn Write) -> CliResult {
    let rule = match a.rule {
        RuleArg::A => PhaseRule::RuleA,
        RuleArg::B => PhaseRule::RuleB,
    };
    write_json(&transition_table(rule, a.chirality.into()), &a.output, stdout)
}
