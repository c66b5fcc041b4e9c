//! Command-line front end for the `entclass` toolkit.
//!
//! Party numbers on the command line and in reports are 1-based (`--party 1`
//! is Alice); the library indexes parties from 0.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when the
//! classifier's determinant and `rank(R^T R)` votes disagree or the two
//! local-rank routes disagree.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use entclass::classify::{path, witness_map, Margin, PartialOrder};
use entclass::invariants::{known_stabilizer_dim, nonlocal_dimension, DimensionCount};
use entclass::monotone::MONOTONE_REL_TOL;
use entclass::protocols::{
    distill_from_generic, distill_ghz_deterministic, entanglement_swap, DistillTarget,
    ProtocolOutcome,
};
use entclass::{
    apply_local, classify, invariant_report, representative, run_monotone_trials, ClassLabel,
    Error, InvariantReport, LocalOperation, Measure, MonteCarloSummary, TolerancePolicy,
};
use serde::Serialize;

pub mod report;
pub mod state_file;

use report::{Report, SCHEMA};
use state_file::StateFile;

/// Seed used by `monotone` when neither `--seed` nor `ENTCLASS_SEED` is set.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(
    name = "entclass",
    version,
    about = "SLOCC classification of 2x2xn pure states"
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, global = true, env = "ENTCLASS_RANK_EPS", value_name = "X")]
    pub rank_eps: Option<f64>,
    /// Relative threshold below which a hyperdeterminant counts as zero.
    #[arg(long, global = true, env = "ENTCLASS_DET_EPS", value_name = "X")]
    pub det_eps: Option<f64>,
    /// Seed for randomized subcommands.
    #[arg(long, global = true, env = "ENTCLASS_SEED", value_name = "S")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a state file into one of the nine classes.
    Classify {
        /// State file, or `-` for stdin.
        #[arg(long = "in", value_name = "FILE")]
        input: String,
    },
    /// Compute the invariant suite of a 2x2xn state file.
    Invariants {
        /// State file, or `-` for stdin.
        #[arg(long = "in", value_name = "FILE")]
        input: String,
    },
    /// Monte-Carlo check of the monotone inequality under random local POVMs.
    Monotone {
        /// det222 (on 2x2x2 states) or det223 (on 2x2x3 states).
        #[arg(long)]
        measure: Measure,
        #[arg(long)]
        trials: u64,
        /// Measured party (1-3); cycles through all parties when omitted.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=3))]
        party: Option<u64>,
    },
    /// Reachability and witnesses in the order of classes, or the whole diagram.
    Order {
        #[arg(long, requires = "to", conflicts_with = "dump")]
        from: Option<ClassLabel>,
        #[arg(long, requires = "from", conflicts_with = "dump")]
        to: Option<ClassLabel>,
        /// Print the covering edges and the longest chain.
        #[arg(long)]
        dump: bool,
        /// Clare dimension for witnesses, or for restricting the dump.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Entanglement swapping on two Bell pairs.
    Swap,
    /// Distill a target state from the generic 2x2x4 state.
    Distill {
        /// GHZ, W or BELL_AB.
        #[arg(long)]
        target: DistillTarget,
        /// Report every outcome of the complete GHZ measurement.
        #[arg(long)]
        all_outcomes: bool,
    },
    /// Write the representative state of a class as a state file.
    Rep {
        #[arg(long)]
        class: ClassLabel,
        /// Clare dimension (defaults to the smallest that holds the class, at least 2).
        #[arg(long)]
        n: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Dimension count of nonlocal parameters for a format.
    Dim {
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        dims: Vec<usize>,
        /// Stabilizer dimension of the generic point; looked up when omitted.
        #[arg(long)]
        delta: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Core(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Ambiguous { .. })
            | CliError::Core(Error::NumericalInstability(_)) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

/// Parse `argv` (including the program name), execute, and return the exit code.
pub fn run<I, T>(
    argv: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let echo: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, &echo, stdin, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "entclass: error: {e}");
            e.exit_code()
        }
    }
}

fn policy(g: &GlobalArgs) -> Result<TolerancePolicy, CliError> {
    let d = TolerancePolicy::default();
    TolerancePolicy::new(
        g.rank_eps.unwrap_or(d.rank_rel_eps),
        g.det_eps.unwrap_or(d.det_rel_eps),
    )
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn read_state_file(input: &str, stdin: &mut dyn Read) -> Result<StateFile, CliError> {
    let (name, text) = if input == "-" {
        let mut s = String::new();
        stdin
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(format!("reading stdin: {e}")))?;
        ("<stdin>".to_string(), s)
    } else {
        let s =
            fs::read_to_string(input).map_err(|e| CliError::Io(format!("reading {input}: {e}")))?;
        (input.to_string(), s)
    };
    StateFile::parse(&text)
        .map_err(|m| CliError::Input(format!("malformed state file {name}: {m}")))
}

fn load_state(input: &str, stdin: &mut dyn Read) -> Result<entclass::StateTensor, CliError> {
    let file = read_state_file(input, stdin)?;
    file.to_state()
        .map_err(|e| CliError::Input(format!("invalid state file {input}: {e}")))
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    echo: &[String],
    tolerances: TolerancePolicy,
    seed: Option<u64>,
    result: T,
) -> Result<(), CliError> {
    let report = Report {
        schema: SCHEMA,
        command: echo,
        tolerances,
        seed,
        result,
    };
    let bytes = report::to_bytes(&report).map_err(|e| CliError::Io(e.to_string()))?;
    out.write_all(&bytes)
        .map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct ClassifyResult<'a> {
    label: ClassLabel,
    description: &'static str,
    grade: u8,
    signature: [usize; 3],
    weakest_margin: Option<&'a Margin>,
    margins: &'a [Margin],
    invariants: &'a InvariantReport,
}

#[derive(Serialize)]
struct MonotoneResult {
    pass: bool,
    rel_tolerance: f64,
    #[serde(flatten)]
    summary: MonteCarloSummary,
}

#[derive(Serialize)]
struct WitnessStep {
    from: ClassLabel,
    to: ClassLabel,
    witness: LocalOperation,
}

#[derive(Serialize)]
struct OrderQuery {
    from: ClassLabel,
    to: ClassLabel,
    n: usize,
    reachable: bool,
    path: Option<Vec<ClassLabel>>,
    steps: Vec<WitnessStep>,
    witness: Option<LocalOperation>,
    /// Class of the witness applied to the source representative.
    witness_result: Option<ClassLabel>,
}

#[derive(Serialize)]
struct ProtocolResult {
    protocol: &'static str,
    total_probability: f64,
    outcomes: Vec<ProtocolOutcome>,
}

#[derive(Serialize)]
struct DimResult {
    delta_source: &'static str,
    #[serde(flatten)]
    count: DimensionCount,
}

fn protocol_result(protocol: &'static str, outcomes: Vec<ProtocolOutcome>) -> ProtocolResult {
    ProtocolResult {
        protocol,
        total_probability: outcomes.iter().map(|o| o.probability).sum(),
        outcomes,
    }
}

fn execute(
    cli: &Cli,
    echo: &[String],
    stdin: &mut dyn Read,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let tol = policy(&cli.globals)?;
    let seed = cli.globals.seed;
    match &cli.command {
        Command::Classify { input } => {
            let psi = load_state(input, stdin)?;
            let c = classify(&psi, &tol)?;
            let result = ClassifyResult {
                label: c.label,
                description: c.label.description(),
                grade: c.label.grade(),
                signature: c.label.signature(),
                weakest_margin: c.weakest_margin(),
                margins: &c.margins,
                invariants: &c.report,
            };
            emit(out, echo, tol, seed, result)
        }
        Command::Invariants { input } => {
            let psi = load_state(input, stdin)?;
            emit(out, echo, tol, seed, invariant_report(&psi, &tol)?)
        }
        Command::Monotone {
            measure,
            trials,
            party,
        } => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let party = party.map(|p| p as usize - 1);
            let summary = run_monotone_trials(*measure, *trials, seed, party)?;
            let result = MonotoneResult {
                pass: summary.all_pass(),
                rel_tolerance: MONOTONE_REL_TOL,
                summary,
            };
            emit(out, echo, tol, Some(seed), result)
        }
        Command::Order { from, to, dump, n } => match (from, to) {
            (Some(from), Some(to)) if !dump => {
                let n = n.unwrap_or(from.min_clare_dim().max(2));
                let chain = path(*from, *to);
                let mut steps = Vec::new();
                if let Some(chain) = &chain {
                    for pair in chain.windows(2) {
                        if let Some(w) = witness_map(pair[0], pair[1], n)? {
                            steps.push(WitnessStep {
                                from: pair[0],
                                to: pair[1],
                                witness: w,
                            });
                        }
                    }
                }
                let witness = witness_map(*from, *to, n)?;
                let witness_result = match &witness {
                    Some(w) => {
                        let image = apply_local(w, &representative(*from, n)?)?;
                        Some(classify(&image, &tol)?.label)
                    }
                    None => None,
                };
                let result = OrderQuery {
                    from: *from,
                    to: *to,
                    n,
                    reachable: chain.is_some(),
                    path: chain,
                    steps,
                    witness,
                    witness_result,
                };
                emit(out, echo, tol, seed, result)
            }
            _ => {
                let order = match n {
                    Some(n) => PartialOrder::for_clare_dim(*n),
                    None => PartialOrder::standard(),
                };
                emit(out, echo, tol, seed, order)
            }
        },
        Command::Swap => emit(
            out,
            echo,
            tol,
            seed,
            protocol_result("entanglement-swap", entanglement_swap()?),
        ),
        Command::Distill {
            target,
            all_outcomes,
        } => {
            let outcomes = if *all_outcomes {
                if *target != DistillTarget::Ghz {
                    return Err(CliError::Usage(
                        "--all-outcomes is only available for --target GHZ".into(),
                    ));
                }
                distill_ghz_deterministic()?
            } else {
                vec![distill_from_generic(*target)?]
            };
            emit(
                out,
                echo,
                tol,
                seed,
                protocol_result("distill-from-generic", outcomes),
            )
        }
        Command::Rep {
            class,
            n,
            out: path,
        } => {
            let n = n.unwrap_or(class.min_clare_dim().max(2));
            let psi = representative(*class, n)?;
            let bytes = report::to_bytes(&StateFile::from_state(&psi))
                .map_err(|e| CliError::Io(e.to_string()))?;
            match path {
                Some(p) => fs::write(p, bytes)
                    .map_err(|e| CliError::Io(format!("writing {}: {e}", p.display()))),
                None => out
                    .write_all(&bytes)
                    .map_err(|e| CliError::Io(e.to_string())),
            }
        }
        Command::Dim { dims, delta } => {
            let (delta, source) = match delta {
                Some(d) => (*d, "given"),
                None => (
                    known_stabilizer_dim(dims).ok_or_else(|| {
                        CliError::Usage(format!(
                            "no known stabilizer dimension for {dims:?}; pass --delta"
                        ))
                    })?,
                    "table",
                ),
            };
            let result = DimResult {
                delta_source: source,
                count: nonlocal_dimension(dims, delta),
            };
            emit(out, echo, tol, seed, result)
        }
    }
}
