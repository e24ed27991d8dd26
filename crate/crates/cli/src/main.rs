use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use locfin::{
    asdim_zero_profile, bijectively_coarsely_equivalent, block_decompose, build_back_and_forth,
    coarsely_equivalent, conjugate_by_bijection, embed_into_nonneg_integers, k0_equal,
    k0_iso_exists, k0_positive, obstruction_witness, r_components, trace_vector, unit_divide,
    verify_bijective_coarse_equivalence, BlockSpace, Error, FiniteMetricSpace, K0Class,
    PropagationOperator, Tower, TowerBijection,
};
use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "locfin", version, about = "Coarse invariants of locally finite groups and their uniform Roe algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Supernatural number of a tower.
    Sn { tower: PathBuf },
    /// Bijective coarse equivalence, coarse equivalence, K0 isomorphism and obstruction.
    Classify { first: PathBuf, second: PathBuf },
    /// Build or verify truncated bijective coarse equivalences.
    #[command(subcommand)]
    Bce(BceCommand),
    /// Decisions in the ordered K0 group.
    #[command(subcommand)]
    K0(K0Command),
    /// Embed a finite metric space or block space into the nonnegative integers.
    Embed { space: PathBuf },
    /// Components of a finite metric space or block space at a radius.
    Components {
        #[arg(long)]
        radius: u64,
        space: PathBuf,
    },
    /// Largest component diameter and size at every radius.
    Profile { space: PathBuf },
    /// Finite-propagation operators.
    #[command(subcommand)]
    Roe(RoeCommand),
}

#[derive(Subcommand)]
enum BceCommand {
    /// Run the back-and-forth construction between two towers.
    Build {
        #[arg(long)]
        depth: usize,
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Check a map file; exits 1 when any check fails.
    Verify { map: PathBuf },
}

#[derive(Subcommand)]
enum K0Command {
    /// Whether two classes are equal.
    Eq { first: PathBuf, second: PathBuf },
    /// Whether a class is positive.
    Pos {
        class: PathBuf,
        /// Print the decision level and a nonnegative representative.
        #[arg(long)]
        witness: bool,
    },
    /// A class w with p^r w equal to the unit, or null.
    DivideUnit {
        #[arg(long)]
        prime: String,
        #[arg(long)]
        exp: u32,
        tower: PathBuf,
        #[command(flatten)]
        output: OutputArg,
    },
}

#[derive(Subcommand)]
enum RoeCommand {
    /// Block-diagonal form at a level.
    Decompose {
        #[arg(long)]
        level: usize,
        operator: PathBuf,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Trace vector at a level.
    Trace {
        #[arg(long)]
        level: usize,
        /// Require every block to be a projection.
        #[arg(long)]
        projection: bool,
        operator: PathBuf,
    },
    /// Conjugate an operator by a map file.
    Conjugate {
        map: PathBuf,
        operator: PathBuf,
        #[command(flatten)]
        output: OutputArg,
    },
}

#[derive(Args)]
struct OutputArg {
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::InvalidTower(_)
            | Error::NotPrime(_)
            | Error::InvalidSupernatural(_)
            | Error::InvalidMetric(_)
            | Error::MalformedMap(_)
            | Error::PointOutOfRange { .. } => 2,
            Error::DepthExhausted(_) => 3,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn malformed(message: String) -> Failure {
    Failure { code: 2, message }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).map_err(|e| malformed(format!("stdin: {e}")))?;
        Ok(text)
    } else {
        fs::read_to_string(path).map_err(|e| malformed(format!("{}: {e}", path.display())))
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_input(path)?).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

/// A metric space file: either `{"size", "distances"}` or a block space.
fn load_metric(path: &Path) -> Result<FiniteMetricSpace, Failure> {
    let value: Value = load(path)?;
    let parsed = if value.get("tower").is_some() {
        serde_json::from_value::<BlockSpace>(value).map(|s| FiniteMetricSpace::from_block_space(&s))
    } else {
        serde_json::from_value::<FiniteMetricSpace>(value)
    };
    parsed.map_err(|e| malformed(format!("{}: {e}", path.display())))
}

/// Canonical JSON: sorted keys, compact, newline-terminated.
fn canonical<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("serializable");
    format!("{}\n", serde_json::to_string(&value).expect("serializable"))
}

fn emit<T: Serialize>(value: &T, output: &OutputArg) -> Result<String, Failure> {
    let text = canonical(value);
    match &output.output {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Failure { code: 4, message: format!("{}: {e}", path.display()) })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn number_or_string(n: &BigUint) -> Value {
    u64::try_from(n).map_or_else(|_| Value::String(n.to_string()), Value::from)
}

/// Runs one command; returns stdout text and whether the command succeeded.
fn run(command: Command) -> Result<(String, bool), Failure> {
    let text = match command {
        Command::Sn { tower } => canonical(&load::<Tower>(&tower)?.supernatural()),
        Command::Classify { first, second } => {
            let (t1, t2) = (load::<Tower>(&first)?, load::<Tower>(&second)?);
            let obstruction = obstruction_witness(&t1, &t2)
                .map(|o| json!([number_or_string(&o.prime), o.exponent]));
            canonical(&json!({
                "bce": bijectively_coarsely_equivalent(&t1, &t2),
                "ce": coarsely_equivalent(&t1, &t2),
                "k0_iso": k0_iso_exists(&t1, &t2),
                "obstruction": obstruction,
            }))
        }
        Command::Bce(BceCommand::Build { depth, first, second, output }) => {
            let (t1, t2) = (load::<Tower>(&first)?, load::<Tower>(&second)?);
            emit(&build_back_and_forth(&t1, &t2, depth)?, &output)?
        }
        Command::Bce(BceCommand::Verify { map }) => {
            let report = verify_bijective_coarse_equivalence(&load::<TowerBijection>(&map)?)?;
            return Ok((canonical(&report), report.passed));
        }
        Command::K0(K0Command::Eq { first, second }) => {
            let equal = k0_equal(&load::<K0Class>(&first)?, &load::<K0Class>(&second)?)?;
            canonical(&equal)
        }
        Command::K0(K0Command::Pos { class, witness }) => {
            let p = k0_positive(&load::<K0Class>(&class)?)?;
            if witness {
                canonical(&json!({
                    "positive": p.positive,
                    "level": p.level,
                    "representative": p.representative,
                }))
            } else {
                canonical(&p.positive)
            }
        }
        Command::K0(K0Command::DivideUnit { prime, exp, tower, output }) => {
            let p: BigUint = prime.parse().map_err(|_| malformed(format!("--prime: expected an integer, got {prime:?}")))?;
            emit(&unit_divide(&load::<Tower>(&tower)?, &p, exp)?, &output)?
        }
        Command::Embed { space } => canonical(&embed_into_nonneg_integers(&load_metric(&space)?)),
        Command::Components { radius, space } => canonical(&r_components(&load_metric(&space)?, radius)),
        Command::Profile { space } => canonical(&asdim_zero_profile(&load_metric(&space)?)),
        Command::Roe(RoeCommand::Decompose { level, operator, output }) => {
            emit(&block_decompose(&load::<PropagationOperator>(&operator)?, level)?, &output)?
        }
        Command::Roe(RoeCommand::Trace { level, projection, operator }) => {
            let blocks = block_decompose(&load::<PropagationOperator>(&operator)?, level)?;
            canonical(&trace_vector(&blocks, projection)?)
        }
        Command::Roe(RoeCommand::Conjugate { map, operator, output }) => {
            let b = load::<TowerBijection>(&map)?;
            emit(&conjugate_by_bijection(&b, &load::<PropagationOperator>(&operator)?)?, &output)?
        }
    };
    Ok((text, true))
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let _ = e.print();
        std::process::exit(if e.use_stderr() { 2 } else { 0 })
    });
    match run(cli.command) {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
