use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use ablate::checkpoint::load_checkpoint;
use ablate::config::parse_config;
use ablate::gradcheck::{gradcheck_report, GRADCHECK_TOL};
use ablate::pipeline::run_pipeline;
use ablate::reports::{bar_chart_svg, eval_csv, write_json};

#[derive(Parser)]
#[command(name = "ablate", version, about = "Train small denoisers over synthetic concept universes and remove concepts from them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full pipeline: pretrain, ablate, evaluate, write artifacts.
    Run {
        /// Experiment file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override; replaces the config's seed everywhere.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate an existing baseline/ablated checkpoint pair under a config's eval plan.
    Eval {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        ablated: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check analytic gradients of both removal losses against finite differences.
    Gradcheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config, out, seed } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            let outcome = run_pipeline(&cfg, out.as_deref(), None)?;
            println!("run complete: {}", outcome.out_dir.display());
            println!("  config hash {}", outcome.manifest.config_hash);
            println!(
                "  pretrain cache {}",
                if outcome.manifest.pretrain_cache_hit { "hit" } else { "miss" }
            );
            for (tag, report) in &outcome.evals {
                if let Some(pair) = report.scores.first() {
                    println!(
                        "  [{tag}] target `{}` alignment: baseline {:.3} -> ablated {:.3}",
                        pair.concept, pair.baseline.posterior, pair.ablated.posterior
                    );
                }
            }
            if let Some(cmp) = &outcome.comparison {
                println!("  method comparison: {:?}", cmp.verdict);
            }
            println!("  {} artifacts in {}", outcome.manifest.artifacts.len(), outcome.out_dir.display());
            Ok(())
        }
        Cmd::Eval { baseline, ablated, config, out } => {
            let cfg = parse_config(&config)?;
            let out_dir = out
                .or_else(|| cfg.out_dir.clone())
                .ok_or_else(|| anyhow!("no output directory: pass --out or set out_dir"))?;
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating output directory {}", out_dir.display()))?;
            let base = load_checkpoint(&baseline)
                .with_context(|| format!("loading baseline {}", baseline.display()))?;
            let abla = load_checkpoint(&ablated)
                .with_context(|| format!("loading ablated {}", ablated.display()))?;
            let sched = cfg.schedule()?;
            let report = ablate_core::eval::eval_suite(
                &base,
                &abla,
                &cfg.vocab,
                &cfg.labeled_concepts(),
                &cfg.eval.candidates,
                cfg.eval.trademark.as_ref(),
                &sched,
                cfg.eval.n,
                cfg.seed,
                &cfg.config_hash(),
            )
            .context("stage eval failed")?;
            write_json(&out_dir.join("eval.json"), &report)?;
            std::fs::write(out_dir.join("eval.csv"), eval_csv(&report))?;
            std::fs::write(out_dir.join("bars.svg"), bar_chart_svg(&report))?;
            for pair in &report.scores {
                println!(
                    "{:<12} `{}` baseline {:.3} -> ablated {:.3}",
                    pair.role.to_string(),
                    pair.concept,
                    pair.baseline.posterior,
                    pair.ablated.posterior
                );
            }
            println!("wrote eval.json, eval.csv, bars.svg to {}", out_dir.display());
            Ok(())
        }
        Cmd::Gradcheck => {
            let lines = gradcheck_report().context("stage gradcheck failed")?;
            let mut worst = 0.0f64;
            for line in &lines {
                println!(
                    "{:<14} scope {:<16} max rel err {:.3e} over {} entries",
                    line.loss_name,
                    line.scope.to_string(),
                    line.max_rel_err,
                    line.entries
                );
                worst = worst.max(line.max_rel_err);
            }
            if worst >= GRADCHECK_TOL {
                return Err(anyhow!("stage gradcheck failed: max rel err {worst:.3e} >= {GRADCHECK_TOL:.0e}"));
            }
            println!("all gradients within {GRADCHECK_TOL:.0e}");
            Ok(())
        }
    }
}
