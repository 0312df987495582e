//! The `concordia` command line.
//!
//! Exit status: 0 on success, 2 when the mathematics refuses a well-formed
//! request (state not concordant in the given basis, transcript mismatch,
//! problem too large), 1 for malformed input or usage errors. Failures print
//! `{"error": CODE, "message": ...}` on standard error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::correlations::{discord, verify_concordant, OptimizerConfig};
use crate::darwinism::{mutual_info_curve, plateau_metrics, random_pure_global, FragmentChoice};
use crate::degeneracy::{conditional_decomposition, frase};
use crate::error::ConcordiaError;
use crate::gates::{compose, ConcordantGate};
use crate::lbf::{run_lbf, ProjectorFamily};
use crate::mcsim::{dense_reference, simulate, tvd, CircuitPlan, DENSE_MAX_QUBITS};
use crate::protocol::session::{run_session, EveMode, SessionConfig};
use crate::protocol::{EncodeOptions, FirstGate, Message};
use crate::states::{build_sbs, from_density, table_to_labels, ConcordantState, DensityMatrix, LocalBasis, SbsSpec};
use crate::tensor::{ComplexMatrix, SubsystemShape};
use crate::tol;

pub const DEFAULT_SEED: u64 = 1729;
pub const DEFAULT_SHOTS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "concordia", version, about = "Concordant quantum computation toolkit")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Overrides the command's main tolerance (FRASE grouping, plateau
    /// deficit, protocol degeneracy).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Shots for sampling commands.
    #[arg(long, global = true, default_value_t = DEFAULT_SHOTS)]
    pub shots: u64,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum discord of a two-party state, measuring one qubit.
    Discord(DiscordArgs),
    /// Decide whether a qubit state is diagonal in some product basis.
    Verify(StateArgs),
    /// Group support projectors with equal conditional operators.
    Frase(FraseArgs),
    /// Recover the output product basis of a gate.
    Lbf(LbfArgs),
    /// Mutual information between a system and growing environment fragments.
    Darwinism(DarwinismArgs),
    /// Sample a permutation circuit classically.
    Mc(McArgs),
    /// Hidden-basis message protocol.
    #[command(subcommand)]
    Protocol(ProtocolCommand),
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// Density matrix JSON `{dims, matrix}`.
    #[arg(long)]
    pub state: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiscordArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Subsystem that is measured.
    #[arg(long, default_value_t = 0)]
    pub measured: usize,
    #[arg(long, default_value_t = 64)]
    pub theta_steps: usize,
    #[arg(long, default_value_t = 128)]
    pub phi_steps: usize,
}

#[derive(Debug, Args)]
pub struct FraseArgs {
    /// Concordant state `{dims, basis, probs}` or density matrix `{dims, matrix}`.
    #[arg(long)]
    pub state: PathBuf,
    /// Comma-separated support subsystems.
    #[arg(long, value_delimiter = ',', required = true)]
    pub support: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct LbfArgs {
    /// Gate JSON, either `{support, u_out, perm, block, u_in}` or a raw
    /// unitary `{dims, matrix}`.
    #[arg(long)]
    pub gate: PathBuf,
    /// Basis before the gate; identity when omitted.
    #[arg(long)]
    pub prev: Option<PathBuf>,
    /// Projector support; every subsystem when omitted.
    #[arg(long, value_delimiter = ',')]
    pub support: Option<Vec<usize>>,
    /// Include every sum of support projectors, not only rank one.
    #[arg(long)]
    pub all_ranks: bool,
}

#[derive(Debug, Args)]
pub struct DarwinismArgs {
    /// System plus environment density matrix.
    #[arg(long, conflicts_with_all = ["sbs", "random_pure"])]
    pub state: Option<PathBuf>,
    /// Built-in broadcast state with this many single-qubit records.
    #[arg(long)]
    pub sbs: Option<usize>,
    /// Pointer probabilities for `--sbs`.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    pub pointer: Vec<f64>,
    /// Haar-random pure state on this many qubits.
    #[arg(long)]
    pub random_pure: Option<usize>,
    /// System subsystems; the rest form the environment in index order.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub system: Vec<usize>,
    /// Average over this many random fragments per size.
    #[arg(long)]
    pub subsets: Option<usize>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Plan JSON `{dims, p0, perms, u_final}`.
    #[arg(long, conflicts_with = "random")]
    pub plan: Option<PathBuf>,
    /// Random plan on this many qubits.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
}

#[derive(Debug, Subcommand)]
pub enum ProtocolCommand {
    /// Encode, optionally attack, and decode one message.
    Run(ProtocolArgs),
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// Message JSON `{dims, table}`; the demo message when omitted.
    #[arg(long)]
    pub msg: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub qubits: usize,
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = EveArg::None)]
    pub eve: EveArg,
    /// Signal purity of the single-qubit channel.
    #[arg(long, default_value_t = 1.0)]
    pub p1: f64,
    #[arg(long, default_value_t = 10_000)]
    pub sifted_bits: usize,
    /// Fold a decoy block into the first gate.
    #[arg(long)]
    pub block_first: bool,
    /// Publish the first gate without the `U_0†` factor.
    #[arg(long)]
    pub bare_first_gate: bool,
    /// Write the public transcript here.
    #[arg(long)]
    pub transcript_out: Option<PathBuf>,
    /// Write the secret key here.
    #[arg(long)]
    pub export_key: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EveArg {
    None,
    Measure,
    Quantum,
    Intercept,
}

impl From<EveArg> for EveMode {
    fn from(e: EveArg) -> Self {
        match e {
            EveArg::None => EveMode::None,
            EveArg::Measure => EveMode::Measure,
            EveArg::Quantum => EveMode::Quantum,
            EveArg::Intercept => EveMode::Intercept,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Domain(ConcordiaError),
    Io { path: PathBuf, message: String },
    Parse { path: PathBuf, message: String },
    Usage(String),
    Threads(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Domain(e) => e.code(),
            CliError::Io { .. } => "IO_ERROR",
            CliError::Parse { .. } => "PARSE_ERROR",
            CliError::Usage(_) => "USAGE",
            CliError::Threads(_) => "BAD_THREAD_COUNT",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(e) if e.is_domain() => 2,
            _ => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Domain(e) => e.to_string(),
            CliError::Io { path, message } => format!("{}: {message}", path.display()),
            CliError::Parse { path, message } => format!("{}: {message}", path.display()),
            CliError::Usage(m) | CliError::Threads(m) => m.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.code(), "message": self.message() }).to_string()
    }
}

impl From<ConcordiaError> for CliError {
    fn from(e: ConcordiaError) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}

fn json_only(cli: &Cli) -> CliResult<()> {
    if cli.format == Format::Csv {
        return Err(CliError::Usage("csv output is available for darwinism and mc only".into()));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateInput {
    Concordant(ConcordantState),
    Density(DensityMatrix),
}

#[derive(Deserialize)]
struct RawMatrix {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GateInput {
    Gate(ConcordantGate),
    Raw(RawMatrix),
}

#[derive(Serialize)]
struct VerifyOut {
    concordant: bool,
    basis: Option<LocalBasis>,
    probs: Option<std::collections::BTreeMap<String, f64>>,
}

#[derive(Serialize)]
struct DarwinismOut {
    curve: crate::darwinism::MutualInfoCurve,
    delta: f64,
    metrics: crate::darwinism::PlateauMetrics,
}

#[derive(Serialize)]
struct McOut {
    #[serde(flatten)]
    report: crate::mcsim::SampleReport,
    dense_tvd: Option<f64>,
}

/// Runs one command and returns the rendered primary artifact.
pub fn dispatch(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Discord(a) => {
            json_only(cli)?;
            let rho: DensityMatrix = read_json(&a.state)?;
            let opt = OptimizerConfig::with_grid(a.theta_steps, a.phi_steps);
            Ok(to_json(&discord(&rho, a.measured, &opt)?))
        }
        Command::Verify(a) => {
            json_only(cli)?;
            let rho: DensityMatrix = read_json(&a.state)?;
            let out = match verify_concordant(&rho)? {
                Some(basis) => {
                    let c = from_density(&rho, &basis)?;
                    VerifyOut { concordant: true, probs: Some(table_to_labels(c.shape(), c.probs())), basis: Some(basis) }
                }
                None => VerifyOut { concordant: false, basis: None, probs: None },
            };
            Ok(to_json(&out))
        }
        Command::Frase(a) => {
            json_only(cli)?;
            let state = match read_json::<StateInput>(&a.state)? {
                StateInput::Concordant(c) => c,
                StateInput::Density(rho) => match verify_concordant(&rho)? {
                    Some(basis) => from_density(&rho, &basis)?,
                    // reports the off-diagonal weight in the computational basis
                    None => from_density(&rho, &LocalBasis::identity(rho.shape().clone()))?,
                },
            };
            let dec = conditional_decomposition(&state, &a.support)?;
            Ok(to_json(&frase(&dec, cli.tol.unwrap_or(tol::FRASE_DEFAULT))))
        }
        Command::Lbf(a) => {
            json_only(cli)?;
            let (shape, g) = match read_json::<GateInput>(&a.gate)? {
                GateInput::Gate(g) => (g.u_out().shape().clone(), compose(&g)),
                GateInput::Raw(r) => {
                    let shape = SubsystemShape::new(r.dims)?;
                    r.matrix.check_dim(shape.total_dim())?;
                    r.matrix.check_unitary()?;
                    (shape, r.matrix)
                }
            };
            let prev = match &a.prev {
                Some(p) => read_json::<LocalBasis>(p)?,
                None => LocalBasis::identity(shape.clone()),
            };
            let support = a.support.clone().unwrap_or_else(|| (0..shape.len()).collect());
            let family = if a.all_ranks {
                ProjectorFamily::all_ranks(&shape, support)?
            } else {
                ProjectorFamily::rank_one(&shape, support)?
            };
            Ok(to_json(&run_lbf(&g, &prev, &family)?))
        }
        Command::Darwinism(a) => darwinism_cmd(cli, a),
        Command::Mc(a) => {
            let plan = match (&a.plan, a.random) {
                (Some(p), _) => read_json::<CircuitPlan>(p)?,
                (None, Some(n)) => CircuitPlan::random(SubsystemShape::qubits(n), a.steps, cli.seed),
                (None, None) => return Err(CliError::Usage("mc needs --plan or --random".into())),
            };
            let report = simulate(&plan, cli.shots, cli.seed)?;
            if cli.format == Format::Csv {
                let mut s = String::from("outcome,count\n");
                for (k, c) in report.counts.iter().enumerate() {
                    s.push_str(&format!("{},{c}\n", report.shape.label(k)));
                }
                return Ok(s);
            }
            let dense_tvd = if plan.shape().len() <= DENSE_MAX_QUBITS {
                Some(tvd(&report.distribution(), &dense_reference(&plan)?)?)
            } else {
                None
            };
            Ok(to_json(&McOut { report, dense_tvd }))
        }
        Command::Protocol(ProtocolCommand::Run(a)) => protocol_cmd(cli, a),
    }
}

fn darwinism_cmd(cli: &Cli, a: &DarwinismArgs) -> CliResult<String> {
    let rho = match (&a.state, a.sbs, a.random_pure) {
        (Some(p), _, _) => read_json::<DensityMatrix>(p)?,
        (None, Some(k), _) => build_sbs(&SbsSpec::orthogonal_records(a.pointer.clone(), k)?)?,
        (None, None, Some(n)) => random_pure_global(SubsystemShape::qubits(n), cli.seed),
        _ => return Err(CliError::Usage("darwinism needs --state, --sbs or --random-pure".into())),
    };
    let shape = rho.shape();
    shape.check_subset(&a.system)?;
    let env: Vec<usize> = shape.complement(&a.system);
    let choice = match a.subsets {
        Some(per_size) => FragmentChoice::RandomSubsets { per_size, seed: cli.seed },
        None => FragmentChoice::Prefix,
    };
    let curve = mutual_info_curve(&rho, &a.system, &env, choice)?;
    if cli.format == Format::Csv {
        let mut s = String::from("f,mutual_info\n");
        for p in &curve.points {
            s.push_str(&format!("{},{}\n", p.f, p.mutual_info));
        }
        return Ok(s);
    }
    let delta = cli.tol.unwrap_or(0.1 * curve.h_system);
    let metrics = plateau_metrics(&curve, delta);
    Ok(to_json(&DarwinismOut { curve, delta, metrics }))
}

fn protocol_cmd(cli: &Cli, a: &ProtocolArgs) -> CliResult<String> {
    json_only(cli)?;
    let message = match &a.msg {
        Some(p) => read_json::<Message>(p)?,
        None => Message::demo(a.qubits),
    };
    let mut encode = EncodeOptions {
        block_first: a.block_first,
        first_gate: if a.bare_first_gate { FirstGate::Bare } else { FirstGate::Full },
        ..EncodeOptions::default()
    };
    if let Some(t) = cli.tol {
        encode.degeneracy_tol = t;
    }
    let cfg = SessionConfig {
        shots: cli.shots,
        eve: a.eve.into(),
        encode,
        p1: a.p1,
        sifted_bits: a.sifted_bits,
        ..SessionConfig::new(message, a.steps, cli.seed)
    };
    let out = run_session(&cfg)?;
    if let Some(p) = &a.transcript_out {
        write_file(p, &to_json(&out.transcript))?;
    }
    if let Some(p) = &a.export_key {
        write_file(p, &to_json(&out.key))?;
    }
    Ok(to_json(&out.report))
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("CONCORDIA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Threads(format!("CONCORDIA_THREADS must be a positive integer, got {v:?}")))?;
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args`, runs the command and reports errors.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| dispatch(&cli)).and_then(|text| match &cli.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os())
}
