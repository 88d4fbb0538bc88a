//! Command-line front end for building and checking relative-cue datasets.
//!
//! Exit codes: 0 on success, 1 when `validate` finds violations, 2 when a
//! run is aborted by a configuration or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use relcue::corpus::Split;
use relcue::pipeline::{self, BuildConfig, CONFIG_FILE};
use relcue::prompts::RephraseConfig;

#[derive(Parser, Debug)]
#[command(name = "relcue", version, about = "Two-speaker mixtures with relative-cue extraction prompts")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the bundled synthetic 40-utterance corpus.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Read manifests, split corpora and assign train/val/test.
    Ingest(BuildArgs),
    /// Measure attribute profiles of the ingested utterances.
    Attributes(BuildArgs),
    /// Simulate RIR pairs (every split with a configured count, or one split).
    Rir {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        split: Option<Split>,
        /// Pairs for `--split`; defaults to the configured count.
        #[arg(long, requires = "split")]
        count: Option<usize>,
    },
    /// Render mixtures and prompts from the stage files in `--out`.
    Mix(BuildArgs),
    /// Regenerate the prompt bundles of an existing dataset.
    Prompts {
        #[arg(long)]
        out: PathBuf,
        /// Attach external paraphrases from the endpoint named by
        /// RELCUE_REPHRASE_URL.
        #[arg(long)]
        rephrase: bool,
    },
    /// Run every stage.
    Build(BuildArgs),
    /// Re-check a built dataset and report violations.
    Validate {
        #[arg(long)]
        out: PathBuf,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct BuildArgs {
    /// TOML config. Without it, `<out>/config.toml` is used if present.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Corpus manifest to ingest (repeatable); replaces the configured list.
    #[arg(long = "manifest")]
    manifests: Vec<PathBuf>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    val: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    emotion_frac: Option<f64>,
    #[arg(long)]
    age_frac: Option<f64>,
    #[arg(long)]
    rir_train: Option<usize>,
    #[arg(long)]
    rir_val: Option<usize>,
    #[arg(long)]
    rir_test: Option<usize>,
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct Aborted(anyhow::Error);

impl BuildArgs {
    fn resolve(&self, jobs: Option<usize>) -> Result<BuildConfig> {
        let from_out = self.out.as_ref().map(|o| o.join(CONFIG_FILE)).filter(|p| p.is_file());
        let mut cfg = match self.config.as_ref().or(from_out.as_ref()) {
            Some(path) => BuildConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => BuildConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        } else if let Some(path) = &self.config {
            cfg.output_dir = path.parent().unwrap_or(Path::new(".")).join("out");
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if !self.manifests.is_empty() {
            cfg.manifests = self.manifests.clone();
        }
        let set = |slot: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.mixtures.train, self.train);
        set(&mut cfg.mixtures.val, self.val);
        set(&mut cfg.mixtures.test, self.test);
        set(&mut cfg.rir_pairs.train, self.rir_train);
        set(&mut cfg.rir_pairs.val, self.rir_val);
        set(&mut cfg.rir_pairs.test, self.rir_test);
        if let Some(f) = self.emotion_frac {
            cfg.pool_fractions.emotion = f;
        }
        if let Some(f) = self.age_frac {
            cfg.pool_fractions.age = f;
        }
        cfg.jobs = jobs;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<ExitCode, Aborted> {
    let abort = |e: anyhow::Error| Aborted(e);
    let jobs = cli.jobs;
    match cli.command {
        Command::Fixture { out, seed } => {
            let manifests = relcue::fixture::write_fixture_corpus(&out, seed).map_err(|e| abort(e.into()))?;
            for m in manifests {
                println!("{}", m.display());
            }
        }
        Command::Ingest(args) => {
            let cfg = args.resolve(jobs).map_err(abort)?;
            let prepared = pipeline::run_ingest(&cfg).map_err(|e| abort(e.into()))?;
            println!(
                "{} utterances ingested, {} dropped for shared transcriptions",
                prepared.records.len(),
                prepared.dropped.len()
            );
        }
        Command::Attributes(args) => {
            let cfg = args.resolve(jobs).map_err(abort)?;
            let pool = pipeline::thread_pool(cfg.jobs).map_err(|e| abort(e.into()))?;
            let (n, skipped) = pipeline::run_attributes(&cfg, &pool).map_err(|e| abort(e.into()))?;
            println!("{n} profiles written, {} utterances without speech", skipped.len());
        }
        Command::Rir { build, split, count } => {
            let cfg = build.resolve(jobs).map_err(abort)?;
            let pool = pipeline::thread_pool(cfg.jobs).map_err(|e| abort(e.into()))?;
            let plan: Vec<(Split, usize)> = match split {
                Some(s) => vec![(s, count.unwrap_or(cfg.rir_pairs.get(s)))],
                None => Split::ALL.iter().map(|&s| (s, cfg.rir_pairs.get(s))).collect(),
            };
            for (s, n) in plan.into_iter().filter(|(_, n)| *n > 0) {
                pipeline::run_rirs(&cfg, s, n, &pool).map_err(|e| abort(e.into()))?;
                println!("{s}: {n} RIR pairs");
            }
        }
        Command::Mix(args) => {
            let cfg = args.resolve(jobs).map_err(abort)?;
            let summary = pipeline::remix_dataset(&cfg).map_err(|e| abort(e.into()))?;
            print_json(&summary).map_err(abort)?;
        }
        Command::Prompts { out, rephrase } => {
            let rc = if rephrase {
                Some(RephraseConfig::from_env().ok_or_else(|| {
                    abort(anyhow::anyhow!("--rephrase needs RELCUE_REPHRASE_URL to be set"))
                })?)
            } else {
                None
            };
            let n = pipeline::regenerate_prompts(&out, rc.as_ref()).map_err(|e| abort(e.into()))?;
            println!("{n} prompts written");
        }
        Command::Build(args) => {
            let cfg = args.resolve(jobs).map_err(abort)?;
            let summary = pipeline::build_dataset(&cfg).map_err(|e| abort(e.into()))?;
            print_json(&summary).map_err(abort)?;
        }
        Command::Validate { out, json } => {
            let report = pipeline::validate_dataset(&out).map_err(|e| abort(e.into()))?;
            if json {
                print_json(&report).map_err(abort)?;
            } else {
                for v in &report.violations {
                    println!("{}\t{}\t{}", v.mixture_id, v.check, v.detail);
                }
                println!(
                    "{} mixtures, {} prompts checked, {} violations",
                    report.mixtures_checked,
                    report.prompts_checked,
                    report.violations.len()
                );
            }
            if !report.is_clean() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Aborted(e)) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
