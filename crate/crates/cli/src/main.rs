//! `designlab`: reproducible experiments on Haar moments, designs, shadows
//! and brickwork circuits.
//!
//! Exit codes: 0 success, 1 failed self-test or I/O error, 2 invalid input,
//! 3 budget exceeded, 4 no convergence.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use designlab::circuits::ArchitectureKind;
use designlab::designs::{DesignMode, Embedding};
use designlab::GroupFamily;
use serde::Serialize;

#[derive(Parser, Serialize)]
#[command(name = "designlab", version, about = "Moments of Haar-random states and unitaries")]
struct Cli {
    #[command(flatten)]
    #[serde(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct GlobalOpts {
    /// Master seed for all random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    streams: u64,
    /// Write the record here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Cap on d^t for any tensor-space operator.
    #[arg(long, global = true, env = "DESIGNLAB_BUDGET_DIM")]
    budget_dim: Option<usize>,
    /// Cap on Monte-Carlo sample counts.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    max_samples: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exact,
    Mc,
}

impl From<Mode> for DesignMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => DesignMode::Exact,
            Mode::Mc => DesignMode::MonteCarlo,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EmbeddingArg {
    FirstTwo,
    OmegaPartners,
}

impl From<EmbeddingArg> for Embedding {
    fn from(e: EmbeddingArg) -> Self {
        match e {
            EmbeddingArg::FirstTwo => Embedding::FirstTwo,
            EmbeddingArg::OmegaPartners => Embedding::OmegaPartners,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Architecture {
    Unitary,
    Symplectic,
}

impl From<Architecture> for ArchitectureKind {
    fn from(a: Architecture) -> Self {
        match a {
            Architecture::Unitary => ArchitectureKind::Unitary,
            Architecture::Symplectic => ArchitectureKind::Symplectic,
        }
    }
}

fn parse_family(s: &str) -> Result<GroupFamily, String> {
    s.parse().map_err(|e: designlab::Error| e.to_string())
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Enumerate Brauer pairings of 2t points.
    Pairings {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        count_only: bool,
    },
    /// Exact twirl of an operator over a group, in the commutant basis.
    Twirl {
        #[arg(long, value_parser = parse_family)]
        family: GroupFamily,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        d: usize,
        /// Operator JSON file; defaults to |k⟩⟨k|^⊗t with k from --state.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        state: usize,
        /// Also estimate the twirl from this many Haar samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Write the twirled operator as Operator JSON.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Distance of the t-th state moment from the symmetric projector.
    DesignTest {
        #[arg(long, value_parser = parse_family)]
        family: GroupFamily,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Comma-separated sample counts for a distance-vs-N table (mc only).
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
    },
    /// Annihilation residuals of every diagram against ψ^⊗t and Π_sym.
    Lemma1 {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        d: usize,
        /// Random states checked in addition to |0⟩.
        #[arg(long, default_value_t = 0)]
        random_states: usize,
    },
    /// Second-moment gap between U and SP for a rank-two mixed state.
    MixedGap {
        #[arg(long)]
        lambda0: f64,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value_t = EmbeddingArg::FirstTwo)]
        embedding: EmbeddingArg,
    },
    /// Classical-shadow estimate of Tr[ρO].
    Shadows {
        #[arg(long)]
        d: usize,
        #[arg(long, value_parser = parse_family, default_value = "sp")]
        ensemble: GroupFamily,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Observable as Operator JSON (t = 1); defaults to Z on the first qubit.
        #[arg(long)]
        observable: Option<PathBuf>,
        /// State as Operator JSON (t = 1); defaults to |0⟩⟨0|.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Per-layer spectral gap of a brickwork second-moment operator.
    Gap {
        #[arg(long)]
        n: usize,
        /// Sweep n..=n-max and emit one row per size.
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, value_enum, default_value_t = Architecture::Unitary)]
        architecture: Architecture,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
    },
    /// Total-parameter ratio at equal design quality.
    Ratio {
        #[arg(long)]
        lambda_u: f64,
        #[arg(long)]
        lambda_sp: f64,
        #[arg(long, default_value_t = 15)]
        params_u: usize,
        #[arg(long, default_value_t = 6)]
        params_sp: usize,
        /// With --n, also report the depths reaching λ^L ≤ ε/2^n.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the invariant suite.
    Selftest,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<designlab::Error>() {
        Some(e) if e.is_budget() => 3,
        Some(designlab::Error::Convergence { .. }) => 4,
        Some(_) => 2,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(dim) = cli.global.budget_dim {
        designlab::budget::set_max_dim(dim);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.streams as usize)
        .build_global()
        .context("configuring worker threads")?;

    let mut config = serde_json::to_value(&cli)?;
    config["budget_dim"] = designlab::budget::max_dim().into();
    let outcome = commands::dispatch(&cli.command, &cli.global)?;

    let text = match cli.global.format {
        Format::Json => {
            let name = config["command"]
                .as_object()
                .and_then(|o| o.keys().next().cloned())
                .or_else(|| config["command"].as_str().map(String::from))
                .unwrap_or_default();
            output::to_json_string(&output::record(&name, config, outcome.result)?)?
        }
        Format::Csv => match &outcome.table {
            Some(table) => table.to_csv()?,
            None => {
                return Err(designlab::Error::Domain(
                    "CSV output is only available for sweep tables (gap --n-max, design-test --sweep)".into(),
                )
                .into())
            }
        },
    };
    match &cli.global.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
