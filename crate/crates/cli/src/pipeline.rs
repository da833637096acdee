use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use ablate_core::ablation::{run_ablation, AblationMethod, TrainingLog};
use ablate_core::eval::{
    compare_methods, eval_suite, far_concept_report, leakage_probe, EvalReport, MethodComparison,
    ModelTag,
};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::ExperimentConfig;
use crate::pretrain::pretrain_baseline;
use crate::reports::{bar_chart_svg, eval_csv, probe_chart_svg, write_json};

/// The run ledger. The only artifact carrying wall-clock values, so
/// every other artifact byte-matches across reruns of the same config.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub pretrain_cache_hit: bool,
    pub artifacts: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub logs: Vec<(String, TrainingLog)>,
    pub evals: Vec<(String, EvalReport)>,
    pub comparison: Option<MethodComparison>,
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("stage {name} failed"))
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn method_tag(m: AblationMethod) -> &'static str {
    match m {
        AblationMethod::NoiseBased => "noise",
        AblationMethod::ModelBased => "model",
    }
}

/// Runs the full experiment: pretrain (or reuse a cached baseline), ablate
/// with each configured method, evaluate, and write artifacts into the
/// output directory. Artifacts are written as each stage finishes, so a
/// failed run keeps everything produced before the failure.
pub fn run_pipeline(
    cfg: &ExperimentConfig,
    out_override: Option<&Path>,
    cache_override: Option<&Path>,
) -> Result<RunOutcome> {
    let started = now_unix();
    let out_dir: PathBuf = match (out_override, &cfg.out_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => return Err(anyhow!("no output directory: pass --out or set out_dir")),
    };
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let cache_dir = cache_override.map(Path::to_path_buf).unwrap_or_else(|| out_dir.join("cache"));

    let config_hash = cfg.config_hash();
    let sched = cfg.schedule()?;
    let mut artifacts: Vec<String> = Vec::new();

    let cache_path = cache_dir.join(format!("pretrain-{}.ckpt", cfg.pretrain_hash()));
    let cache_hit = cache_path.is_file();
    let baseline = stage("pretrain", || {
        if cache_hit {
            return Ok(load_checkpoint(&cache_path)?);
        }
        let model = pretrain_baseline(cfg, &sched)?;
        std::fs::create_dir_all(&cache_dir)?;
        save_checkpoint(&cache_path, &model)?;
        Ok(model)
    })?;
    stage("save baseline", || {
        save_checkpoint(&out_dir.join("baseline.ckpt"), &baseline)?;
        artifacts.push("baseline.ckpt".into());
        Ok(())
    })?;

    let concepts = cfg.labeled_concepts();
    let probe = cfg.probe_spec();
    let mut logs: Vec<(String, TrainingLog)> = Vec::new();
    let mut evals: Vec<(String, EvalReport)> = Vec::new();

    if !cfg.eval.synonyms.is_empty() {
        stage("baseline leakage", || {
            let report = leakage_probe(
                &baseline,
                ModelTag::Baseline,
                &cfg.vocab,
                &cfg.eval.synonyms,
                &cfg.ablation.target,
                &cfg.eval.candidates,
                &sched,
                cfg.eval.n,
                cfg.seed,
            )?;
            write_json(&out_dir.join("leak_baseline.json"), &report)?;
            artifacts.push("leak_baseline.json".into());
            Ok(())
        })?;
    }

    for &method in &cfg.methods {
        let tag = method_tag(method);
        let mut run_cfg = cfg.ablation.clone();
        run_cfg.method = method;

        let mut model = baseline.clone();
        let log = stage(&format!("ablation ({tag})"), || {
            Ok(run_ablation(&run_cfg, &mut model, &cfg.vocab, &sched, &probe)?)
        })?;
        stage(&format!("save ablated ({tag})"), || {
            save_checkpoint(&out_dir.join(format!("ablated_{tag}.ckpt")), &model)?;
            artifacts.push(format!("ablated_{tag}.ckpt"));
            write_json(&out_dir.join(format!("log_{tag}.json")), &log)?;
            artifacts.push(format!("log_{tag}.json"));
            Ok(())
        })?;

        let report = stage(&format!("eval ({tag})"), || {
            eval_suite(
                &baseline,
                &model,
                &cfg.vocab,
                &concepts,
                &cfg.eval.candidates,
                cfg.eval.trademark.as_ref(),
                &sched,
                cfg.eval.n,
                cfg.seed,
                &config_hash,
            )
            .map_err(Into::into)
        })?;
        stage(&format!("eval artifacts ({tag})"), || {
            write_json(&out_dir.join(format!("eval_{tag}.json")), &report)?;
            artifacts.push(format!("eval_{tag}.json"));
            std::fs::write(out_dir.join(format!("eval_{tag}.csv")), eval_csv(&report))?;
            artifacts.push(format!("eval_{tag}.csv"));
            std::fs::write(out_dir.join(format!("bars_{tag}.svg")), bar_chart_svg(&report))?;
            artifacts.push(format!("bars_{tag}.svg"));
            Ok(())
        })?;

        if !cfg.eval.synonyms.is_empty() {
            stage(&format!("leakage ({tag})"), || {
                let leak = leakage_probe(
                    &model,
                    ModelTag::Ablated,
                    &cfg.vocab,
                    &cfg.eval.synonyms,
                    &cfg.ablation.target,
                    &cfg.eval.candidates,
                    &sched,
                    cfg.eval.n,
                    cfg.seed,
                )?;
                write_json(&out_dir.join(format!("leak_{tag}.json")), &leak)?;
                artifacts.push(format!("leak_{tag}.json"));
                Ok(())
            })?;
        }
        if !cfg.eval.far.is_empty() {
            stage(&format!("far concepts ({tag})"), || {
                let mut excluded = vec![cfg.ablation.target.clone(), cfg.ablation.anchor.clone()];
                excluded.extend(cfg.eval.surrounding.iter().cloned());
                let far = far_concept_report(
                    &baseline,
                    &model,
                    &cfg.vocab,
                    &cfg.eval.far,
                    &excluded,
                    &cfg.eval.candidates,
                    &sched,
                    cfg.eval.n,
                    cfg.seed,
                )?;
                write_json(&out_dir.join(format!("far_{tag}.json")), &far)?;
                artifacts.push(format!("far_{tag}.json"));
                Ok(())
            })?;
        }

        logs.push((tag.to_string(), log));
        evals.push((tag.to_string(), report));
    }

    let with_probes: Vec<(String, Vec<(usize, f64)>)> = logs
        .iter()
        .map(|(tag, log)| (tag.clone(), log.probe_points()))
        .filter(|(_, pts)| !pts.is_empty())
        .collect();
    if !with_probes.is_empty() {
        stage("probe chart", || {
            std::fs::write(out_dir.join("probes.svg"), probe_chart_svg(&with_probes))?;
            artifacts.push("probes.svg".into());
            Ok(())
        })?;
    }

    let mut comparison = None;
    if let [(_, log_noise), (_, log_model)] = &logs[..] {
        if !log_noise.probe_points().is_empty() && !log_model.probe_points().is_empty() {
            stage("method comparison", || {
                let cmp = compare_methods(log_noise, log_model)?;
                write_json(&out_dir.join("compare.json"), &cmp)?;
                artifacts.push("compare.json".into());
                comparison = Some(cmp);
                Ok(())
            })?;
        }
    }

    artifacts.push("manifest.json".into());
    let manifest = RunManifest {
        config_hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: now_unix(),
        pretrain_cache_hit: cache_hit,
        artifacts,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;

    Ok(RunOutcome { out_dir, manifest, logs, evals, comparison })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const VOCAB: &str = r#"
d_obj = 2
d_tm = 1

[[token]]
name = "blob"
kind = "object"
mean = [0.8, -0.6]
sigma = 0.25

[[token]]
name = "spot"
kind = "object"
mean = [-0.7, 0.9]
sigma = 0.25

[[token]]
name = "smudge"
kind = "synonym"
of = "blob"

[[token]]
name = "tint"
kind = "style"
matrix = [[0.9, 0.2], [-0.1, 1.1]]
"#;

    const EXP: &str = r#"
version = 1
seed = 9
vocab = "vocab.toml"

[pretrain]
steps = 4
batch_size = 4
prompts = [["blob"], ["spot"]]

[ablation]
variant = "instance"
method = "both"
target = ["blob"]
anchor = ["spot"]
scope = "cross_attention"
steps = 3
batch_size = 4
probe_interval = 2
probe_samples = 100

[eval]
n = 100
synonyms = [["smudge"]]
"#;

    fn setup(name: &str) -> (ExperimentConfig, PathBuf) {
        let dir = std::env::temp_dir().join(format!("ablate-pipeline-{name}"));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("vocab.toml"), VOCAB).unwrap();
        std::fs::write(dir.join("exp.toml"), EXP).unwrap();
        let cfg = parse_config(&dir.join("exp.toml")).unwrap();
        (cfg, dir)
    }

    #[test]
    fn pipeline_writes_every_manifest_artifact() {
        let (cfg, dir) = setup("artifacts");
        let out = run_pipeline(&cfg, Some(&dir.join("out")), None).unwrap();
        assert!(!out.manifest.pretrain_cache_hit);
        for name in &out.manifest.artifacts {
            assert!(out.out_dir.join(name).is_file(), "missing artifact {name}");
        }
        for want in [
            "baseline.ckpt",
            "ablated_noise.ckpt",
            "ablated_model.ckpt",
            "log_noise.json",
            "log_model.json",
            "eval_noise.json",
            "eval_model.csv",
            "bars_model.svg",
            "leak_baseline.json",
            "leak_model.json",
            "probes.svg",
            "compare.json",
            "manifest.json",
        ] {
            assert!(out.manifest.artifacts.iter().any(|a| a == want), "manifest lacks {want}");
        }
        assert_eq!(out.evals.len(), 2);
        assert!(out.comparison.is_some());
    }

    #[test]
    fn second_run_hits_the_pretrain_cache() {
        let (cfg, dir) = setup("cache");
        let first = run_pipeline(&cfg, Some(&dir.join("out")), None).unwrap();
        assert!(!first.manifest.pretrain_cache_hit);
        let second = run_pipeline(&cfg, Some(&dir.join("out")), None).unwrap();
        assert!(second.manifest.pretrain_cache_hit);

        let a = std::fs::read(dir.join("out/baseline.ckpt")).unwrap();
        let b = std::fs::read(dir.join("out/cache").join(format!(
            "pretrain-{}.ckpt",
            cfg.pretrain_hash()
        )))
        .unwrap();
        assert_eq!(a, b, "cached and saved baselines differ");
    }

    #[test]
    fn failures_name_their_stage() {
        let (mut cfg, dir) = setup("stagefail");
        cfg.eval.n = 40;
        let err = run_pipeline(&cfg, Some(&dir.join("out")), None).unwrap_err();
        let chain = format!("{err:#}");
        assert!(chain.contains("stage baseline leakage failed"), "unexpected error: {chain}");
    }
}
