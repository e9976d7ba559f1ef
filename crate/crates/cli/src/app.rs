//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use bicog::theory::{self, PacParams, TheoryError};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::experiment::run_experiment;
use crate::generators::{generate_dataset, GeneratorName, GeneratorParams};
use crate::{CliError, OUT_DIR_ENV};

const DEFAULT_OUT_DIR: &str = "bicog-out";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    /// One `key=value` pair per line.
    Machine,
}

#[derive(Debug, Parser)]
#[command(
    name = "bicog",
    version,
    about = "Bi-consistency guided self-training experiments"
)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment config and write reports.
    Run {
        config: PathBuf,
        /// Replaces the config's seed list. Repeatable.
        #[arg(long)]
        seed: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample-complexity bound under label noise.
    Pac {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        hypotheses: u64,
        #[arg(long)]
        delta: f64,
    },
    /// Check whether a new (error, count) pair improves on the previous one.
    Lemma {
        e_t: f64,
        e_prev: f64,
        l_t: u64,
        l_prev: u64,
        /// Labeled-set size for the noise-ratio witness.
        #[arg(long, default_value_t = 40)]
        labeled: u64,
    },
    /// Monte Carlo error of the peer majority vote.
    Simulate {
        /// Accuracy of one peer. Repeat once per peer.
        #[arg(long = "peer", required = true)]
        peers: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic dataset as CSV.
    Gen {
        generator: GeneratorName,
        #[command(flatten)]
        params: GenArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file. Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 50)]
    pub test_per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 0)]
    pub bias_class: usize,
    #[arg(long, default_value_t = 3.0)]
    pub bias_factor: f64,
}

impl From<GenArgs> for GeneratorParams {
    fn from(a: GenArgs) -> Self {
        Self {
            num_classes: a.classes,
            dim: a.dim,
            train_per_class: a.train_per_class,
            test_per_class: a.test_per_class,
            separation: a.separation,
            spread: a.spread,
            bias_class: a.bias_class,
            bias_factor: a.bias_factor,
        }
    }
}

fn usage(e: TheoryError) -> CliError {
    CliError::Usage(e.to_string())
}

struct Printer<'a> {
    format: Format,
    out: &'a mut dyn Write,
}

impl Printer<'_> {
    fn field(&mut self, key: &str, value: impl std::fmt::Display) -> Result<(), CliError> {
        let line = match self.format {
            Format::Text => format!("{key:<20} {value}"),
            Format::Machine => format!("{key}={value}"),
        };
        writeln!(self.out, "{line}").map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Output directory: flag, then config, then environment, then a fixed default.
pub fn resolve_out_dir(
    flag: Option<&Path>,
    cfg: &ExperimentConfig,
    env: Option<OsString>,
) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| env.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut p = Printer {
        format: cli.format,
        out,
    };
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            let dir = resolve_out_dir(out.as_deref(), &cfg, std::env::var_os(OUT_DIR_ENV));
            let summary = run_experiment(&cfg, &dir)?;
            let agg = &summary.aggregate;
            p.field("out_dir", dir.display())?;
            p.field("seeds", cfg.seeds.len())?;
            if let Some(m) = &agg.baseline_overall_accuracy {
                p.field(
                    "baseline_accuracy",
                    format!("{:.4} +- {:.4}", m.mean, m.std),
                )?;
            }
            if let Some(m) = &agg.final_overall_accuracy {
                p.field("final_accuracy", format!("{:.4} +- {:.4}", m.mean, m.std))?;
            }
            if let Some(m) = &agg.final_harmonic_mean {
                p.field("final_hm", format!("{:.4} +- {:.4}", m.mean, m.std))?;
            }
            p.field("files", summary.files.len())?;
        }
        Command::Pac {
            epsilon,
            eta,
            hypotheses,
            delta,
        } => {
            let params = PacParams::new(epsilon, eta, hypotheses, delta).map_err(usage)?;
            let m = params.sample_bound().map_err(usage)?;
            p.field("epsilon", epsilon)?;
            p.field("eta", eta)?;
            p.field("hypotheses", hypotheses)?;
            p.field("delta", delta)?;
            p.field("samples", m)?;
        }
        Command::Lemma {
            e_t,
            e_prev,
            l_t,
            l_prev,
            labeled,
        } => {
            for (name, e) in [("e_t", e_t), ("e_prev", e_prev)] {
                if !(0.0..=1.0).contains(&e) {
                    return Err(CliError::Usage(format!(
                        "{name} must lie in [0, 1], got {e}"
                    )));
                }
            }
            let w = theory::sufficient_condition_holds(e_t, e_prev, l_t, l_prev, labeled);
            p.field("e_t", e_t)?;
            p.field("e_prev", e_prev)?;
            p.field("l_t", l_t)?;
            p.field("l_prev", l_prev)?;
            p.field("labeled", labeled)?;
            p.field("improves", theory::lemma1_holds(e_t, e_prev, l_t, l_prev))?;
            p.field("eta_t", w.eta_t)?;
            p.field("eta_prev", w.eta_prev)?;
            p.field("precision_t", w.lhs)?;
            p.field("precision_prev", w.rhs)?;
        }
        Command::Simulate {
            peers,
            classes,
            trials,
            seed,
        } => {
            if let Some(bad) = peers.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(CliError::Usage(format!(
                    "peer accuracy must lie in [0, 1], got {bad}"
                )));
            }
            if classes < 2 || trials == 0 {
                return Err(CliError::Usage(
                    "need at least 2 classes and 1 trial".into(),
                ));
            }
            let sim = theory::mc_vote_error(&peers, classes, trials, seed);
            let peer_list: Vec<String> = peers.iter().map(f64::to_string).collect();
            p.field("peers", peer_list.join(","))?;
            p.field("classes", classes)?;
            p.field("trials", trials)?;
            p.field("seed", seed)?;
            p.field("acceptance_rate", sim.acceptance_rate())?;
            match sim.conditional_error() {
                Some(e) => p.field("conditional_error", e)?,
                None => p.field("conditional_error", "null")?,
            }
        }
        Command::Gen {
            generator,
            params,
            seed,
            out,
        } => {
            let pool = generate_dataset(generator, &params.into(), seed)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let text = pool_csv(&pool)?;
            match out {
                Some(path) => {
                    crate::reports::write_file(&path, &text)?;
                    p.field("rows", pool.train.len() + pool.test.len())?;
                    p.field("out", path.display())?;
                }
                None => p
                    .out
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::Io(e.to_string()))?,
            }
        }
    }
    Ok(())
}

/// CSV with columns `f0..`, `label` and `pool` (`train` or `test`).
pub fn pool_csv(pool: &bicog::LabeledPool<f64>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut header: Vec<String> = (0..pool.dim).map(|i| format!("f{i}")).collect();
    header.extend(["label".to_string(), "pool".to_string()]);
    w.write_record(&header).map_err(io)?;
    for (part, rows) in [("train", &pool.train), ("test", &pool.test)] {
        for ex in rows {
            let mut rec: Vec<String> = ex.features.iter().map(|v| format!("{v:.16e}")).collect();
            rec.push(ex.label.map(|l| l.to_string()).unwrap_or_default());
            rec.push(part.to_string());
            w.write_record(&rec).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with(
    args: impl IntoIterator<Item = OsString>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "bicog: {e}");
            e.exit_code()
        }
    }
}
