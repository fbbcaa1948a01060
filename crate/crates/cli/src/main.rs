//! `statebench` command line.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use statebench::eval::{self, EpisodeRecord, Manifest};
use statebench::llm::{Gateway, MockRegistry};

use config::{ConfigError, Overrides};

#[derive(Debug, Parser)]
#[command(name = "statebench", version, about = "Run, compare and replay state-representation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every cell of an experiment file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use the named scripted policy instead of the configured model.
        #[arg(long)]
        mock: Option<String>,
        #[arg(long)]
        episodes: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Bootstrap comparison of two log directories (A minus B).
    Compare {
        log_dir_a: PathBuf,
        log_dir_b: PathBuf,
        #[arg(long, default_value_t = eval::stats::DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the result as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute logged actions and check rewards and termination.
    Replay { log: PathBuf },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_INCIDENT: u8 = 2;
const EXIT_REPLAY: u8 = 3;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            mock,
            episodes,
            seed,
            out,
            parallelism,
        } => cmd_run(
            &config,
            Overrides {
                mock,
                episodes,
                seed,
                out,
                parallelism,
            },
        ),
        Command::Compare {
            log_dir_a,
            log_dir_b,
            resamples,
            seed,
            out,
        } => cmd_compare(&log_dir_a, &log_dir_b, resamples, seed, out.as_deref()),
        Command::Replay { log } => cmd_replay(&log),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Some(c) = e.downcast_ref::<ConfigError>() {
                eprintln!("invalid configuration: {c}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn cmd_run(config_path: &Path, overrides: Overrides) -> Result<u8> {
    let file = config::load(config_path)?;
    let plan = config::plan(&file, &overrides)?;
    let mocks = MockRegistry::with_builtins();
    let gateway = Gateway::new(plan.model.clone(), mocks).map_err(|e| ConfigError {
        key: "model".into(),
        message: e.to_string(),
    })?;

    let episodes_dir = plan.out_dir.join("episodes");
    fs::create_dir_all(&episodes_dir).with_context(|| format!("creating {}", episodes_dir.display()))?;
    let mut all = Vec::new();
    let mut written = Vec::new();
    for cell in &plan.cells {
        let label = cell.representation.label();
        eprintln!("running {} {} ({} run(s) x {} episodes)", cell.environment, label, cell.runs, cell.episodes);
        let records = eval::run_with_gateway(cell, &gateway)?;
        let rel = format!("episodes/{}.jsonl", config::slug(&cell.environment, &label));
        eval::write_jsonl(&plan.out_dir.join(&rel), &records)?;
        written.push(rel);
        all.extend(records);
    }

    let report = eval::summarize_default(&all, Some(&plan.baseline));
    eval::emit_report(&report, &plan.out_dir)?;
    written.extend(["report.csv".to_string(), "report.md".to_string()]);

    let first = &plan.cells[0];
    let resolved = serde_json::json!({
        "config_file": config_path.display().to_string(),
        "baseline": plan.baseline,
        "model": plan.model,
        "cells": plan.cells.iter().map(|c| serde_json::json!({
            "environment": c.environment,
            "representation": c.representation,
            "episodes": c.episodes,
        })).collect::<Vec<_>>(),
        "parallelism": first.parallelism,
    });
    let mut manifest = Manifest::new(first.episodes, first.runs, first.run_seed, resolved);
    for rel in &written {
        manifest.add_file(&plan.out_dir, rel)?;
    }
    manifest.write(&plan.out_dir.join("manifest.json"))?;

    print!("{}", eval::render_markdown(&report));
    let incidents = all.iter().filter(|r| r.is_incident()).count();
    if incidents > 0 {
        eprintln!("{incidents} episode(s) ended in an incident");
        return Ok(EXIT_INCIDENT);
    }
    Ok(0)
}

/// Every `.jsonl` under `path` (or `path` itself), sorted.
fn log_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "jsonl") {
                out.push(p);
            }
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("no .jsonl logs under {}", path.display());
    }
    Ok(out)
}

fn load_records(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut records = Vec::new();
    for f in log_files(path)? {
        records.extend(eval::read_jsonl(&f)?);
    }
    Ok(records)
}

fn single_environment(records: &[EpisodeRecord], path: &Path) -> Result<String> {
    let mut envs: Vec<&str> = records.iter().map(|r| r.environment.as_str()).collect();
    envs.sort_unstable();
    envs.dedup();
    match envs.as_slice() {
        [one] => Ok(one.to_string()),
        [] => bail!("{} holds no episode records", path.display()),
        many => bail!("{} mixes environments: {}", path.display(), many.join(", ")),
    }
}

fn cmd_compare(a: &Path, b: &Path, resamples: usize, seed: u64, out: Option<&Path>) -> Result<u8> {
    let (ra, rb) = (load_records(a)?, load_records(b)?);
    let (ea, eb) = (single_environment(&ra, a)?, single_environment(&rb, b)?);
    if ea != eb {
        bail!("refusing to compare {ea} logs with {eb} logs");
    }
    let scores = |rs: &[EpisodeRecord]| -> Vec<f64> { rs.iter().filter_map(|r| r.normalized_score).collect() };
    let (sa, sb) = (scores(&ra), scores(&rb));
    if sa.is_empty() || sb.is_empty() {
        bail!("both sides need at least one scored episode");
    }
    let r = eval::bootstrap_mean_diff(&sa, &sb, resamples, eval::stats::DEFAULT_LEVEL, seed);
    let star = if r.significant { "*" } else { "" };
    println!("environment: {ea}");
    println!("A: {:.3} ± {:.3} (n={})", r.mean_a, r.sd_a, sa.len());
    println!("B: {:.3} ± {:.3} (n={})", r.mean_b, r.sd_b, sb.len());
    println!(
        "A - B: {:.3}{star} [{:.3}, {:.3}] ({}% CI, {} resamples), significant: {}",
        r.mean_diff,
        r.ci_low,
        r.ci_high,
        r.level * 100.0,
        r.resamples,
        r.significant
    );
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(&r)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(0)
}

fn cmd_replay(path: &Path) -> Result<u8> {
    let mut checked = 0;
    for file in log_files(path)? {
        for (i, record) in eval::read_jsonl(&file)?.iter().enumerate() {
            if let Err(m) = eval::replay(record) {
                println!(
                    "replay MISMATCH in {} record {} (run {}, episode {}): {m}",
                    file.display(),
                    i + 1,
                    record.run_index,
                    record.seed.episode_index
                );
                println!("- {}: {}", m.field, m.logged);
                println!("+ {}: {}", m.field, m.replayed);
                return Ok(EXIT_REPLAY);
            }
            checked += 1;
        }
    }
    println!("replay OK ({checked} records)");
    Ok(0)
}
