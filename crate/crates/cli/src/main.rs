use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use posstab::criteria::{self, Consensus, CrossCheckConfig, DEFAULT_TOL};
use posstab::gallery;
use posstab::io;
use posstab::iss;
use posstab::lyapunov;
use posstab::{ConeKind, ConeSpec, Norm, OperatorSpec};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_UNSTABLE: u8 = 2;
const EXIT_UNDECIDED: u8 = 3;

#[derive(Parser)]
#[command(name = "posstab", version, about = "Stability certificates for positive linear discrete-time systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every criterion and print the certificate report.
    Analyze(AnalyzeArgs),
    /// Construct a point of strict decay z = (λI − T)⁻¹y.
    DecayPoint(DecayPointArgs),
    /// Build a Lyapunov certificate.
    Lyapunov(LyapunovArgs),
    /// Simulate x(k+1) = Tx(k) + u(k) and check the ISS bound.
    Simulate(SimulateArgs),
    /// Partial sums of ‖Tᵏx‖ᵖ and their convergence class.
    Datko(DatkoArgs),
    /// Built-in examples: `list`, `build NAME`, or `NAME` to run one.
    Gallery(GalleryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConeArg {
    Orthant,
    Lorentz,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
    Linf,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Norm {
        match n {
            NormArg::L1 => Norm::L1,
            NormArg::L2 => Norm::L2,
            NormArg::Linf => Norm::LInf,
        }
    }
}

#[derive(Args)]
struct SystemArgs {
    /// Operator file: JSON, or CSV rows for a dense matrix.
    #[arg(long, value_name = "PATH")]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value = "orthant")]
    cone: ConeArg,
    #[arg(long, value_enum, default_value = "linf")]
    norm: NormArg,
}

impl SystemArgs {
    fn load(&self) -> Result<(OperatorSpec, ConeSpec)> {
        let op = io::read_operator(&self.matrix).with_context(|| format!("reading {}", self.matrix.display()))?;
        let kind = match self.cone {
            ConeArg::Orthant => ConeKind::Orthant,
            ConeArg::Lorentz => ConeKind::Lorentz,
        };
        let cone = ConeSpec::new(kind, op.dim(), self.norm.into())?;
        Ok((op, cone))
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the main artifact here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Leave the generation timestamp out of JSON output.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Perturbation size for the robust small-gain checks.
    #[arg(long)]
    eps: Option<f64>,
    /// Interior point for the interior small-gain margin (vector file).
    #[arg(long, value_name = "PATH")]
    interior_point: Option<PathBuf>,
    /// Scaling for the equivalent-norm certificate.
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Args)]
struct DecayPointArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    lambda: f64,
    /// Interior vector y; the cone axis when absent.
    #[arg(long, value_name = "PATH")]
    y_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LyapunovMode {
    Stein,
    Norm,
}

#[derive(Args)]
struct LyapunovArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, value_enum, default_value = "stein")]
    mode: LyapunovMode,
    /// Scaling s > 1 for the norm certificate; sqrt(1/spr) when absent.
    #[arg(long)]
    s: Option<f64>,
    /// Use the lattice (absolute-value) variant of the norm certificate.
    #[arg(long)]
    lattice: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Trajectory CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// ISS summary JSON destination; stderr when absent.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
    #[arg(long)]
    no_timestamp: bool,
    /// Initial state (vector file); zero when absent.
    #[arg(long, value_name = "PATH")]
    x0: Option<PathBuf>,
    /// Input signal JSON; zero input when absent.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DatkoArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Partial-sum CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Classification JSON destination; stderr when absent.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Start vector (vector file); the cone axis when absent.
    #[arg(long, value_name = "PATH")]
    x0: Option<PathBuf>,
    #[arg(long, default_value_t = iss::DEFAULT_RESPONSE_HORIZON)]
    horizon: usize,
}

#[derive(Args)]
struct GalleryArgs {
    /// `list`, `build`, or an entry name.
    target: String,
    /// Entry name after `build`.
    name: Option<String>,
    /// Truncation or grid size.
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn json_artifact<T: Serialize>(value: &T, timestamp: bool) -> Result<String> {
    let mut v = io::to_json_value(value)?;
    if timestamp {
        if let Some(obj) = v.as_object_mut() {
            obj.insert("generated_at_unix".into(), unix_now().into());
        }
    }
    let mut s = io::to_json_string(&v)?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_side(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn consensus_code(c: Consensus) -> u8 {
    match c {
        Consensus::Stable => EXIT_OK,
        Consensus::Unstable => EXIT_UNSTABLE,
        Consensus::Boundary | Consensus::Inconsistent => EXIT_UNDECIDED,
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<u8> {
    let (op, cone) = a.system.load()?;
    let interior_point = a.interior_point.as_deref().map(io::read_vector).transpose()?;
    let config = CrossCheckConfig {
        tol: a.tol,
        seed: a.seed,
        threads: a.threads.max(1),
        robust_eps: a.eps,
        interior_point,
        lyapunov_s: a.s,
        ..CrossCheckConfig::default()
    };
    let report = criteria::cross_check(&op, &cone, &config)?;
    emit(&json_artifact(&report, !a.output.no_timestamp)?, a.output.out.as_deref())?;
    Ok(consensus_code(report.consensus))
}

fn decay_point(a: &DecayPointArgs) -> Result<u8> {
    let (op, cone) = a.system.load()?;
    let y = match &a.y_file {
        Some(p) => io::read_vector(p)?,
        None => cone.axis(),
    };
    let cert = criteria::strict_decay_point(&op, &cone, a.lambda, &y)?;
    emit(&json_artifact(&cert, !a.output.no_timestamp)?, a.output.out.as_deref())?;
    Ok(EXIT_OK)
}

fn lyapunov_cmd(a: &LyapunovArgs) -> Result<u8> {
    let (op, cone) = a.system.load()?;
    let text = match a.mode {
        LyapunovMode::Stein => json_artifact(&lyapunov::solve_stein(&op)?, !a.output.no_timestamp)?,
        LyapunovMode::Norm => {
            let est = posstab::operators::spectral_radius_on_cone(&op, &cone)?;
            let s = a.s.unwrap_or_else(|| criteria::default_norm_scaling(est.upper));
            let n = lyapunov::equivalent_norm(&op, s, a.lattice, &cone, a.seed)?;
            json_artifact(&n.certificate, !a.output.no_timestamp)?
        }
    };
    emit(&text, a.output.out.as_deref())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulationSummary {
    steps: usize,
    sup_state_norm: f64,
    sup_input_norm: f64,
    iss: Option<iss::IssEstimate>,
    verification: Option<iss::IssVerification>,
    note: Option<String>,
}

fn simulate(a: &SimulateArgs) -> Result<u8> {
    let (op, cone) = a.system.load()?;
    let n = op.dim();
    let x0 = match &a.x0 {
        Some(p) => io::read_vector(p)?,
        None => vec![0.0; n],
    };
    let u = match &a.input {
        Some(p) => io::read_input_signal(p)?,
        None => iss::InputSignal::new(iss::SignalClass::LInf, None, vec![])?,
    };
    let traj = iss::simulate(&op, &x0, &u, a.steps, cone.norm)?;
    let (est, verification, note) = match iss::iss_constants(&op, cone.norm) {
        Ok(e) => {
            let v = iss::verify_iss_bound(&op, &e, a.trials, a.seed)?;
            (Some(e), Some(v), None)
        }
        Err(e) => (None, None, Some(e.to_string())),
    };
    let summary = SimulationSummary {
        steps: a.steps,
        sup_state_norm: traj.norms.iter().copied().fold(0.0, f64::max),
        sup_input_norm: u.sup_norm(cone.norm),
        iss: est,
        verification,
        note,
    };
    emit(&io::trajectory_csv(&traj), a.out.as_deref())?;
    emit_side(&json_artifact(&summary, !a.no_timestamp)?, a.summary.as_deref())?;
    Ok(EXIT_OK)
}

fn datko(a: &DatkoArgs) -> Result<u8> {
    let (op, cone) = a.system.load()?;
    let x = match &a.x0 {
        Some(p) => io::read_vector(p)?,
        None => cone.axis(),
    };
    let d = iss::datko_test(&op, &x, a.p, a.horizon, cone.norm)?;
    emit(&io::datko_csv(&d), a.out.as_deref())?;
    emit_side(&json_artifact(&d, !a.no_timestamp)?, a.summary.as_deref())?;
    Ok(EXIT_OK)
}

fn gallery_cmd(a: &GalleryArgs) -> Result<u8> {
    match (a.target.as_str(), a.name.as_deref()) {
        ("list", None) => {
            let mut text = gallery::NAMES.join("\n");
            text.push('\n');
            emit(&text, a.output.out.as_deref())?;
            Ok(EXIT_OK)
        }
        ("build", Some(name)) => {
            let entry = gallery::gallery_build(name, a.dim)?;
            emit(&json_artifact(&entry, !a.output.no_timestamp)?, a.output.out.as_deref())?;
            Ok(EXIT_OK)
        }
        ("build", None) => bail!("gallery build needs an entry name"),
        (name, None) => {
            let entry = gallery::gallery_build(name, a.dim)?;
            let config = CrossCheckConfig {
                seed: a.seed,
                threads: a.threads.max(1),
                ..CrossCheckConfig::default()
            };
            let r = gallery::run_gallery(&entry, &config)?;
            emit(&json_artifact(&r, !a.output.no_timestamp)?, a.output.out.as_deref())?;
            Ok(if r.all_passed() { EXIT_OK } else { EXIT_UNDECIDED })
        }
        (other, Some(_)) => bail!("unexpected argument after '{other}'"),
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::DecayPoint(a) => decay_point(a),
        Command::Lyapunov(a) => lyapunov_cmd(a),
        Command::Simulate(a) => simulate(a),
        Command::Datko(a) => datko(a),
        Command::Gallery(a) => gallery_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap exits with 2 on usage errors, which would read as UNSTABLE
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
