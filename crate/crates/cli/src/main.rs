use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ctxkit::format::{parse_document, Document};
use ctxkit::logic::Parity;
use ctxkit::metacontext::AssumptionSet;
use ctxkit::report::{analyze, demo_document, render_text, to_json, Command, Demo, Options, ReportError};
use ctxkit::scenario::{Scenario, DEFAULT_SUPPORT_EPS};

#[derive(Parser)]
#[command(
    name = "ctxkit",
    version,
    about = "Contextuality analysis of small measurement scenarios"
)]
struct Cli {
    /// Probabilities at or below this count as impossible
    #[arg(long, global = true, default_value_t = DEFAULT_SUPPORT_EPS)]
    eps: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Check claims under one set, e.g. Q,NMC,NC,S or none
    #[arg(long, global = true)]
    assumptions: Option<AssumptionSet>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze a built-in example
    Demo {
        #[command(subcommand)]
        which: DemoCmd,
    },
    /// Full analysis of a scenario file
    Analyze { file: PathBuf },
    /// Noncontextual fraction of a scenario file
    Ncf { file: PathBuf },
    /// Liar cycles of a scenario file
    Cycles {
        file: PathBuf,
        /// Seed context and outcome: indices, or comma-separated labels
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["CONTEXT", "TUPLE"])]
        seed: Option<Vec<String>>,
    },
}

#[derive(Subcommand)]
enum DemoCmd {
    Hardy,
    Fr,
    Wigner,
    /// n-cycle of binary observables with neighbouring pairs as contexts
    Cycle {
        n: usize,
        #[arg(value_enum, default_value_t = ParityArg::Odd)]
        parity: ParityArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Odd,
    Even,
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Signalling(_) => Failure::Verification(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

fn load(path: &PathBuf) -> Result<Document, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
}

fn resolve_seed(sc: &Scenario, context: &str, tuple: &str) -> Option<(usize, usize)> {
    let c = match context.parse::<usize>() {
        Ok(c) if c < sc.contexts().len() => c,
        Ok(_) => return None,
        Err(_) => sc.find_context(&context.split(',').map(str::trim).collect::<Vec<_>>())?,
    };
    let t = match tuple.parse::<usize>() {
        Ok(t) if t < sc.tuple_count(c) => t,
        Ok(_) => return None,
        Err(_) => sc.resolve_tuple(c, &tuple.split(',').map(str::trim).collect::<Vec<_>>())?,
    };
    Some((c, t))
}

fn run(cli: Cli) -> Result<String, Failure> {
    let mut options = Options {
        eps: cli.eps,
        assumptions: cli.assumptions,
        seed: None,
    };
    let (doc, command) = match cli.command {
        Cmd::Demo { which } => {
            let demo = match which {
                DemoCmd::Hardy => Demo::Hardy,
                DemoCmd::Fr => Demo::Fr,
                DemoCmd::Wigner => Demo::Wigner,
                DemoCmd::Cycle { n, parity } => Demo::Cycle(
                    n,
                    match parity {
                        ParityArg::Odd => Parity::Odd,
                        ParityArg::Even => Parity::Even,
                    },
                ),
            };
            (demo_document(demo)?, Command::Analyze)
        }
        Cmd::Analyze { file } => (load(&file)?, Command::Analyze),
        Cmd::Ncf { file } => (load(&file)?, Command::Ncf),
        Cmd::Cycles { file, seed } => {
            let doc = load(&file)?;
            if let Some(seed) = seed {
                let sc = doc
                    .scenario
                    .as_ref()
                    .ok_or_else(|| Failure::Usage("--seed needs a file with observables".into()))?;
                options.seed = Some(
                    resolve_seed(sc, &seed[0], &seed[1])
                        .ok_or_else(|| Failure::Usage(format!("no outcome `{}` in context `{}`", seed[1], seed[0])))?,
                );
            }
            (doc, Command::Cycles)
        }
    };
    if !(options.eps >= 0.0 && options.eps < 1.0) {
        return Err(Failure::Usage(format!("--eps must lie in [0, 1), got {}", options.eps)));
    }
    let report = analyze(&doc, command, &options)?;
    Ok(match cli.format {
        Format::Text => render_text(&report),
        Format::Json => to_json(&report),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
