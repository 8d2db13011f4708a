//! Command-line front end.
//!
//! Exit codes: 0 analysis completed, 1 negative verdict under `--strict`,
//! 2 input or parse error, 3 internal contradiction (the instance is dumped
//! on standard error).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::capacity::{parse_capacity, Capacity, CapacityError, DEFAULT_ATOM_CAP, MAX_ATOMS};
use crate::coherence::{CoherenceError, Grade};
use crate::gamble::DEFAULT_CLIQUE_CAP;
use crate::instance::DecisionInstance;
use crate::io::{instance_to_json, parse_instance};
use crate::rational::{parse_rational, Rational};
use crate::report::{self, AnalysisOptions, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONTRADICTION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "coherence-lab", version, about = "Coherence grading of finite decision instances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: OutputFormat,
    /// Exit with status 1 when the verdict is negative (grade NONE for analyze).
    #[arg(long, global = true)]
    pub strict: bool,
    /// Add missing truncation splices valued by the Choquet integral against γ_V.
    #[arg(long, global = true)]
    pub synthesize_truncations: bool,
    #[arg(long, default_value_t = DEFAULT_CLIQUE_CAP as u64, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    pub clique_cap: u64,
    #[arg(long, default_value_t = DEFAULT_ATOM_CAP as u64, value_parser = clap::value_parser!(u64).range(1..=MAX_ATOMS as u64), global = true)]
    pub atom_cap: u64,
    /// Seed for sampled diagnostics.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structure clauses, the event algebra and the normalization.
    Validate { input: PathBuf },
    /// Grade ladder with every representation and certificate.
    Analyze { input: PathBuf },
    /// Expected-utility prior, or the violation of full coherence.
    Seu { input: PathBuf },
    /// Canonical prior set and per-act minima.
    Meu { input: PathBuf },
    /// Subjective capacity, convexity and Choquet integrals.
    Ceu { input: PathBuf },
    /// Cone test for arbitrage against the value order.
    Arbitrage { input: PathBuf },
    /// Order-equivalent expected-utility values.
    Repair { input: PathBuf },
    /// Convexity, core, partition axiom and null structure of a capacity file.
    Capacity { input: PathBuf },
    /// Choquet integral of a profile against a capacity file.
    Choquet {
        input: PathBuf,
        /// Comma-separated rationals, one per atom.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 4)]
        grid_exponent: u32,
    },
    /// Order-equivalent submeasure of a capacity file.
    Submeasure { input: PathBuf },
}

enum Failure {
    Input(String),
    Contradiction { message: String, dump: Option<String> },
}

impl Failure {
    fn from_coherence(e: CoherenceError, instance: &DecisionInstance) -> Self {
        match e {
            CoherenceError::InternalContradiction(_) | CoherenceError::Lp(_) => Failure::Contradiction {
                message: e.to_string(),
                dump: serde_json::to_string_pretty(&instance_to_json(instance)).ok(),
            },
            CoherenceError::Capacity(c) => Failure::from_capacity(c, None),
            CoherenceError::Instance(_)
            | CoherenceError::Gamble(_)
            | CoherenceError::NotNormalized
            | CoherenceError::NotRepresentable(_) => Failure::Input(e.to_string()),
        }
    }

    fn from_capacity(e: CapacityError, capacity: Option<&Capacity>) -> Self {
        match e {
            CapacityError::InternalContradiction(_) | CapacityError::Lp(_) => Failure::Contradiction {
                message: e.to_string(),
                dump: capacity.map(|c| crate::capacity::capacity_to_json(c).to_string()),
            },
            other => Failure::Input(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<DecisionInstance, Failure> {
    let text = read(path)?;
    parse_instance(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_capacity(path: &Path) -> Result<Capacity, Failure> {
    let text = read(path)?;
    parse_capacity(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_profile(text: &str) -> Result<Vec<Rational>, Failure> {
    text.split(',')
        .map(|p| parse_rational(p.trim()).map_err(|e| Failure::Input(format!("--profile: {e}"))))
        .collect()
}

/// Builds the report and whether its verdict is negative.
fn execute(cli: &Cli) -> Result<(Report, bool), Failure> {
    let atom_cap = cli.atom_cap as usize;
    let on_instance = |path: &Path,
                       build: &dyn Fn(&DecisionInstance, &report::Prepared) -> Result<(Report, bool), CoherenceError>|
     -> Result<(Report, bool), Failure> {
        let original = load_instance(path)?;
        let prepared = report::prepare(&original, cli.synthesize_truncations)
            .map_err(|e| Failure::from_coherence(e, &original))?;
        build(&original, &prepared).map_err(|e| Failure::from_coherence(e, &prepared.instance))
    };
    let flag = |r: &Report, key: &str| r.body[key].as_bool() == Some(false);
    match &cli.command {
        Command::Validate { input } => {
            let inst = load_instance(input)?;
            let r = report::validate_report(&inst);
            let negative = r.body["structure"]["passes"].as_bool() == Some(false);
            Ok((r, negative))
        }
        Command::Analyze { input } => {
            let original = load_instance(input)?;
            let opts = AnalysisOptions {
                clique_cap: cli.clique_cap as usize,
                seed: cli.seed,
                synthesize_truncations: cli.synthesize_truncations,
            };
            let a = report::analyze(&original, opts).map_err(|e| Failure::from_coherence(e, &original))?;
            let negative = a.ladder.grade == Grade::None;
            Ok((report::analysis_report(&original, &a), negative))
        }
        Command::Seu { input } => on_instance(input, &|o, p| {
            report::seu_report(o, p).map(|r| {
                let n = flag(&r, "representable");
                (r, n)
            })
        }),
        Command::Meu { input } => on_instance(input, &|o, p| {
            report::meu_report(o, p).map(|r| {
                let n = flag(&r, "positive");
                (r, n)
            })
        }),
        Command::Ceu { input } => on_instance(input, &|o, p| {
            report::ceu_report(o, p).map(|r| {
                let n = flag(&r, "positive");
                (r, n)
            })
        }),
        Command::Arbitrage { input } => on_instance(input, &|o, p| {
            report::arbitrage_report(o, p).map(|r| {
                let n = flag(&r, "ok");
                (r, n)
            })
        }),
        Command::Repair { input } => on_instance(input, &|o, p| {
            report::repair_report(o, p).map(|r| {
                let n = r.body["status"] == "impossible";
                (r, n)
            })
        }),
        Command::Capacity { input } => {
            let cap = load_capacity(input)?;
            let r = report::capacity_report(&cap, atom_cap).map_err(|e| Failure::from_capacity(e, Some(&cap)))?;
            let n = flag(&r, "convex");
            Ok((r, n))
        }
        Command::Choquet {
            input,
            profile,
            grid_exponent,
        } => {
            let cap = load_capacity(input)?;
            let profile = parse_profile(profile)?;
            let r = report::choquet_report(&cap, &profile, *grid_exponent)
                .map_err(|e| Failure::from_capacity(e, Some(&cap)))?;
            Ok((r, false))
        }
        Command::Submeasure { input } => {
            let cap = load_capacity(input)?;
            let r = report::submeasure_report(&cap, atom_cap).map_err(|e| Failure::from_capacity(e, Some(&cap)))?;
            let n = flag(&r, "verified");
            Ok((r, n))
        }
    }
}

/// Runs one command; reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok((report, negative)) => {
            let text = match cli.format {
                OutputFormat::Json => report.render_json(),
                OutputFormat::Text => report.render_text(),
            };
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_INPUT;
            }
            if cli.strict && negative {
                EXIT_NEGATIVE
            } else {
                EXIT_OK
            }
        }
        Err(Failure::Input(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_INPUT
        }
        Err(Failure::Contradiction { message, dump }) => {
            if message.starts_with("internal contradiction") {
                let _ = writeln!(err, "{message}");
            } else {
                let _ = writeln!(err, "internal contradiction: {message}");
            }
            if let Some(d) = dump {
                let _ = writeln!(err, "input for reproduction:\n{d}");
            }
            EXIT_CONTRADICTION
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["coherence-lab", "analyze", "/nonexistent/e1.json"], &mut out, &mut err);
        assert_eq!(code, EXIT_INPUT);
        assert!(String::from_utf8(err).unwrap().starts_with("error:"));
    }

    #[test]
    fn zero_caps_are_rejected() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["coherence-lab", "analyze", "x.json", "--clique-cap", "0"], &mut out, &mut err), EXIT_INPUT);
    }
}
