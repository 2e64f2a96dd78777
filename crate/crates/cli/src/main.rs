use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ncmax_cli::report::{write_artifacts, write_meta, Meta};
use ncmax_cli::scenario::Scenario;
use ncmax_cli::selftest::run_selftest;
use ncmax_cli::tasks::execute;

#[derive(Parser)]
#[command(
    name = "ncmax",
    version,
    about = "Maximal-inequality experiments over tracial block algebras"
)]
struct Cli {
    /// Worker threads for the probe pool; defaults to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file and write its artifacts.
    Run {
        /// Path to the scenario JSON document.
        scenario: PathBuf,
        /// Directory the artifacts are written into.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the probe seed embedded in the scenario.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a scenario file without running it.
    Check {
        /// Path to the scenario JSON document.
        scenario: PathBuf,
    },
    /// Run the built-in scenario battery and print its digests.
    Selftest {
        /// Directory the artifacts are written into.
        #[arg(long, default_value = "selftest-out")]
        out: PathBuf,
    },
}

fn effective_threads(requested: Option<usize>) -> anyhow::Result<usize> {
    if let Some(k) = requested {
        if k == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
        Ok(k)
    } else {
        Ok(rayon::current_num_threads())
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let threads = effective_threads(cli.threads)?;
    match cli.cmd {
        Cmd::Run {
            scenario,
            out,
            seed,
        } => {
            let text = std::fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let sc = Scenario::from_json(&text)?;
            let started = Instant::now();
            let result = execute(&sc, seed)?;
            let art = write_artifacts(&out, &sc.id, sc.task.name(), &result.rows, &result.summary)
                .context("writing artifacts")?;
            write_meta(
                &out,
                &Meta {
                    scenario: sc.id.clone(),
                    wall_ms: started.elapsed().as_millis(),
                    threads,
                },
            )
            .context("writing the timing sidecar")?;
            let errors = result.rows.iter().filter(|r| r.kind == "error").count();
            println!(
                "{}: rows={} errors={errors} digest={:016x}",
                sc.id,
                result.rows.len(),
                art.digest
            );
            if !result.summary.is_empty() {
                println!("summary ({}):", ncmax_cli::report::CONSTANTS_NOTE);
                for (key, value) in &result.summary {
                    println!("  {key} = {value:.12e}");
                }
            }
            if errors > 0 {
                eprintln!("{errors} probe(s) failed; see the error rows in the artifacts");
            }
        }
        Cmd::Check { scenario } => {
            let text = std::fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let sc = Scenario::from_json(&text)?;
            // Also make sure the family itself can be built.
            if sc.t_grid.is_empty() {
                sc.semigroup.build().context("building the family")?;
            } else {
                sc.semigroup
                    .build_at(sc.t_grid[0])
                    .context("building the family at the first grid time")?;
            }
            println!("ok: {} ({})", sc.id, sc.task.name());
        }
        Cmd::Selftest { out } => {
            let report = run_selftest(&out, threads)?;
            for line in &report.lines {
                println!("{line}");
            }
            println!("combined digest={:016x}", report.combined);
        }
    }
    Ok(())
}
