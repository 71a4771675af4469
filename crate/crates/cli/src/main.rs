//! `focal`: batch front-end for computations in `H ⋊_α Z`.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 a check failed
//! (a counterexample was found and printed).

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "focal",
    version,
    about = "Exact computations in focal hyperbolic groups"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Family: `lamplighter:q=2`, `nadic:n=2`, `product(A,B)`, `identity_alpha:q=2`, or JSON.
    #[arg(long, global = true, default_value = "lamplighter:q=2")]
    pub family: String,
    /// Ball or tree radius.
    #[arg(long, global = true)]
    pub radius: Option<u32>,
    /// Window `lo:hi[:den_pow]` bounding enumerated elements of `H`.
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Horizon for limits, orbits and word enumeration.
    #[arg(long, global = true)]
    pub horizon: Option<u32>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fail unless the result is backed by an exact certificate.
    #[arg(long, global = true)]
    pub exact_only: bool,
    /// Allow families whose length oracle is not validated.
    #[arg(long, global = true)]
    pub unchecked: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the confining axioms and the distortion inclusion.
    Verify {
        /// Largest `m` in `A^{2^m} ⊆ B(2·n0·m + 1)`.
        #[arg(long, default_value_t = 3)]
        levels: u32,
        /// Random products per level when the family is not enumerated exhaustively.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Ball of the word metric with all pairwise distances.
    Ball {
        /// Sample this many points instead of enumerating the window.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Four-point δ of a ball, a regular tree ball or a CSV distance matrix.
    Delta {
        #[arg(long)]
        samples: Option<usize>,
        /// Regular tree with this branching instead of the group.
        #[arg(long, conflicts_with = "input")]
        tree: Option<u32>,
        /// CSV distance matrix to analyse.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Always enumerate every quadruple.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Normal form of a word, e.g. `a- g{0:1} a+`.
    Nf { word: String },
    /// Distance between the endpoints of two words.
    Dist { x: String, y: String },
    /// Isometry type of one element, or action type of the subgroup generated by several.
    Classify {
        #[arg(required = true)]
        words: Vec<String>,
        /// Treat a single word as a subgroup generator.
        #[arg(long)]
        subgroup: bool,
        /// δ used for the axis neighbourhood; computed from a ball when absent.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Busemann quasicharacter of an element.
    Beta { word: String },
    /// Bass–Serre tree ball of a lamplighter family, or a regular tree ball.
    Tree {
        #[arg(long)]
        branching: Option<u32>,
        /// Report `g·v₀` for this element.
        #[arg(long)]
        act: Option<String>,
    },
    /// Fiber product of two Busemann graphs: `T<d>` or `line`.
    Millefeuille { x: String, t: String },
    /// Positive words in two elements: injectivity and quasi-isometry constants.
    Schottky { a: String, b: String },
    /// Verification, δ and boundary invariants of the family in one report.
    Report,
}

pub enum Output {
    Json(serde_json::Value),
    Text(String),
}

/// Result of a command: what to print and whether a check failed.
pub struct Outcome {
    pub output: Output,
    pub failed: bool,
}

fn emit(global: &Global, out: &Output) -> anyhow::Result<()> {
    let mut text = match out {
        Output::Json(v) => serde_json::to_string_pretty(v)?,
        Output::Text(s) => s.clone(),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &global.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = commands::run(&cli.global, &cli.command);
    match outcome.and_then(|o| emit(&cli.global, &o.output).map(|_| o.failed)) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
