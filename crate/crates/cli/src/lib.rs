//! Command-line front end: ingest, train, mine, explain, evaluate, report.

pub mod artifacts;
pub mod config;
pub mod report;
pub mod stages;

use std::path::PathBuf;

use anyhow::Context as _;
use clap::{Parser, Subcommand, ValueEnum};
use kgexplain::rules::RuleMode;
use kgexplain::synth;
use kgexplain::ErrorClass;

use crate::artifacts::{Layout, MissingArtifact};
use crate::config::{Config, ConfigError, Overrides, ScopeKind};

#[derive(Debug, Parser)]
#[command(name = "kgexplain", version, about = "Rule-based explanations for knowledge graph embeddings")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for training and explanation; overrides the file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub scope: Option<ScopeKind>,
    /// Rule language: unbounded or bounded.
    #[arg(long, global = true)]
    pub rule_mode: Option<RuleMode>,
    /// Restrict to a predicate label; repeatable.
    #[arg(long = "predicate", global = true)]
    pub predicates: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Raise log verbosity; repeatable.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the configured splits into the output directory.
    Ingest,
    /// Train the black-box embedding model.
    Train,
    /// Build contexts and mine surrogate rules per predicate.
    Mine,
    /// Fit surrogate explanations in the configured scope.
    Explain,
    /// Aggregate fidelity of the explanations.
    Evaluate,
    /// Summarize every evaluated scope.
    Report,
    /// Run every stage in order.
    All,
    /// Print the effective configuration.
    PrintConfig,
    /// Write a synthetic dataset and a configuration for it.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        /// Directory receiving the TSV files and config.toml.
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Composition and group membership patterns together.
    Toy,
    /// Nationality through birthplace and city location.
    Composition,
    /// Club membership explained by constants.
    Groups,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            scope: self.scope,
            rule_mode: self.rule_mode,
            predicates: self.predicates.clone(),
            out: self.out.clone(),
        }
    }

    /// The file configuration (or the defaults) with flags applied.
    pub fn resolved_config(&self) -> anyhow::Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

/// Runs one parsed invocation.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Command::Synth { kind, dir } = &cli.command {
        return synthesize(*kind, dir, cli.seed.unwrap_or(7));
    }
    let cfg = cli.resolved_config()?;
    let layout = Layout::new(&cfg.output.dir);
    match cli.command {
        Command::Ingest => {
            let s = stages::ingest(&cfg)?;
            println!("{} entities, {} predicates, {} train / {} valid / {} test facts", s.entities, s.predicates, s.train, s.valid, s.test);
        }
        Command::Train => {
            let log = stages::train(&cfg)?;
            println!("{} final loss {:.6}", log.kind, log.epoch_losses.last().copied().unwrap_or_default());
        }
        Command::Mine => {
            for e in stages::mine(&cfg)? {
                match e.rules {
                    Some(n) => println!("{}: {} facts, {n} rules", e.predicate, e.facts),
                    None => println!("{}: {} facts, {}", e.predicate, e.facts, e.note.unwrap_or_default()),
                }
            }
        }
        Command::Explain => {
            for pe in stages::explain(&cfg)? {
                println!("{}: {} explanations", pe.predicate, pe.explanations.len());
            }
        }
        Command::Evaluate => print_evaluation(&stages::evaluate(&cfg)?),
        Command::Report => {
            report::report(&layout)?;
            println!("{}", layout.report_dir().display());
        }
        Command::All => {
            stages::ingest(&cfg)?;
            stages::train(&cfg)?;
            stages::mine(&cfg)?;
            stages::explain(&cfg)?;
            print_evaluation(&stages::evaluate(&cfg)?);
            report::report(&layout)?;
        }
        Command::PrintConfig => {
            let cfg = if cli.config.is_some() {
                cfg
            } else {
                let mut cfg = Config::example();
                cfg.apply(&cli.overrides());
                cfg
            };
            cfg.validate(false)?;
            print!("{}", cfg.to_toml());
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn print_evaluation(e: &stages::Evaluation) {
    let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"));
    let r = e.overall.as_ref();
    println!(
        "{} {}-{}: roc_auc {} s_mrr {} o_mrr {} covered {}/{}",
        e.model,
        e.scope,
        e.mode,
        fmt(r.and_then(|r| r.roc_auc)),
        fmt(r.and_then(|r| r.s_mrr)),
        fmt(r.and_then(|r| r.o_mrr)),
        e.covered_predicates,
        e.predicates
    );
}

fn synthesize(kind: SynthKind, dir: &std::path::Path, seed: u64) -> anyhow::Result<()> {
    let triples = match kind {
        SynthKind::Toy => synth::toy(seed),
        SynthKind::Composition => synth::composition(seed, 60, 10, 4, 0.3),
        SynthKind::Groups => synth::bounded_groups(seed, 120, 5, 1, 0.3),
    };
    triples.write_dir(dir).with_context(|| format!("writing {}", dir.display()))?;
    if seed > config::MAX_SEED {
        return Err(ConfigError(vec![format!("seed must be at most {}", config::MAX_SEED)]).into());
    }
    let mut cfg = Config::example();
    cfg.model.seed = Some(seed);
    cfg.explain.seed = Some(config::explain_seed_for(seed));
    cfg.output.dir = PathBuf::from("out");
    artifacts::write_text(&dir.join("config.toml"), &cfg.to_toml())?;
    println!("{}", dir.display());
    Ok(())
}

/// 1 for usage and configuration problems, 2 for data and missing
/// artifacts, 3 for numerical failures.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<kgexplain::Error>() {
            return match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numeric => 3,
            };
        }
        if cause.downcast_ref::<MissingArtifact>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    2
}
