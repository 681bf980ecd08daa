//! `dilatox`: batch runs of axiom checks, tangent limits, Menelaos solves and
//! word normalizations, driven by a JSON config file and/or flags.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dilatox::driver::{emit, run, write_atomic, Format, RunConfig, Task};
use dilatox::{Error, ModelDescriptor, Point, Result, Scalar, ToleranceSchedule};

const SEED_ENV: &str = "DILATOX_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "dilatox",
    version,
    about = "Dilatation structure checks and solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Model, e.g. `heisenberg`, `euclidean:dim=2,p=inf`,
    /// `step2:dim1=3,dim2=2,bracket_seed=7`, `sphere:radius=1`.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Task, as an alternative to the subcommand.
    #[arg(long, global = true)]
    task: Option<String>,
    /// Sampling seed [default: config file, then $DILATOX_SEED, then 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Residual tolerance of the sampled checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Coefficient schedule `eps0:ratio:steps`.
    #[arg(long, global = true)]
    schedule: Option<String>,
    /// Samples for the pointwise checks.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Side k of the k³ grid for the limit checks.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Probe points for the Menelaos and normal-form checks.
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Base point, as comma-separated coordinates (u, v, y likewise).
    #[arg(long, global = true, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    v: Option<String>,
    /// First dilatation coefficient.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Second dilatation coefficient.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Word of dilatations, e.g. `D(1;0.5) D(0;0.5)`.
    #[arg(long, global = true)]
    word: Option<String>,
    /// Report file, written atomically; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `json`, or `csv` for menelaos traces.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    /// Record wall time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// A1, A2, linearity, norm axioms and grid runs of A3/A4.
    CheckAxioms,
    /// Tangent distance, operation, inverse and cone properties at a point.
    Tangent,
    /// Centre of the composition of two dilatations.
    Menelaos,
    /// Normal form of a word of dilatations.
    Normalize,
}

impl From<Command> for Task {
    fn from(c: Command) -> Task {
        match c {
            Command::CheckAxioms => Task::CheckAxioms,
            Command::Tangent => Task::Tangent,
            Command::Menelaos => Task::Menelaos,
            Command::Normalize => Task::Normalize,
        }
    }
}

fn parse_point(text: &str) -> Result<Point> {
    let coords = text
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Error::ConfigParse(format!("bad coordinate {c:?} in {text:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Point::new(coords)
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::ConfigParse(format!("{SEED_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(None),
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let file: Option<serde_json::Value> = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| Error::ConfigParse(e.to_string()))?)
        }
        None => None,
    };

    let flag_task = cli.task.as_deref().map(str::parse::<Task>).transpose()?;
    let sub_task = cli.command.map(Task::from);
    let task = match (sub_task, flag_task) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::ConfigParse("subcommand and --task disagree".into()))
        }
        (a, b) => a.or(b),
    };
    let model = cli
        .model
        .as_deref()
        .map(ModelDescriptor::parse_flag)
        .transpose()?;

    let mut config = match file {
        Some(mut value) => {
            // Fill the required fields from flags before strict parsing.
            if let serde_json::Value::Object(map) = &mut value {
                if let Some(t) = task {
                    map.insert(
                        "task".into(),
                        serde_json::to_value(t).expect("task serializes"),
                    );
                }
                if let Some(m) = &model {
                    map.insert(
                        "model".into(),
                        serde_json::to_value(m).expect("model serializes"),
                    );
                }
                if !map.contains_key("seed") {
                    if let Some(seed) = env_seed()? {
                        map.insert("seed".into(), seed.into());
                    }
                }
            }
            serde_json::from_value(value).map_err(|e| Error::ConfigParse(e.to_string()))?
        }
        None => {
            let model =
                model.ok_or_else(|| Error::ConfigParse("no model given (--model)".into()))?;
            let task = task.ok_or_else(|| Error::ConfigParse("no task given".into()))?;
            let mut c = RunConfig::new(model, task);
            if let Some(seed) = env_seed()? {
                c.seed = seed;
            }
            c
        }
    };

    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(tol) = cli.tol {
        config.tol = tol;
    }
    if let Some(s) = &cli.schedule {
        config.schedule = s.parse::<ToleranceSchedule>()?;
    }
    if let Some(n) = cli.samples {
        config.samples = n;
    }
    if let Some(n) = cli.grid {
        config.grid = n;
    }
    if let Some(n) = cli.points {
        config.points = n;
    }
    let inputs = &mut config.inputs;
    for (flag, slot) in [
        (&cli.x, &mut inputs.x),
        (&cli.y, &mut inputs.y),
        (&cli.u, &mut inputs.u),
        (&cli.v, &mut inputs.v),
    ] {
        if let Some(text) = flag {
            *slot = Some(parse_point(text)?);
        }
    }
    if let Some(e) = cli.eps {
        inputs.eps = Some(Scalar::new(e)?);
    }
    if let Some(m) = cli.mu {
        inputs.mu = Some(Scalar::new(m)?);
    }
    if let Some(w) = &cli.word {
        inputs.word = Some(w.parse()?);
    }
    if cli.timing {
        config.timing = true;
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<bool> {
    let format: Format = cli.format.parse()?;
    let config = build_config(cli)?;
    let report = run(&config)?;
    let bytes = emit(&report, format)?;
    match &cli.out {
        Some(path) => write_atomic(path, &bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dilatox: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
