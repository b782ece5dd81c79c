use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{load_checkpoint, save_checkpoint, DType};
use crate::model::{Model, ModelConfig};

use super::{
    clean_sequence, encode_targets, evaluate, fixed, split_dataset, train, Artifacts, EpochLog,
    LabelCodec, LabelOrder, MetricsReport, PipelineError, Predictor, PreparedDrug, RunConfig,
    SeedSummary, Split,
};

pub const MANIFEST_VERSION: u32 = 1;

/// Everything needed to reload a trained run, written as `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub seed: u64,
    pub config: RunConfig,
    pub config_hash: String,
    pub artifact_hash: String,
    pub model: ModelConfig,
    pub split: Split,
    pub initial_loss: f64,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub model: Model,
    pub artifacts: Artifacts,
    pub test: MetricsReport,
}

/// The label-id set a perfect prediction would produce: codec mapping,
/// frequency order, truncation to `max_len`, then the same cleaning as
/// predictions (so out-of-codec labels drop out).
pub fn truth_set<S: AsRef<str>>(labels: &[S], codec: &LabelCodec, max_len: usize) -> BTreeSet<usize> {
    clean_sequence(&encode_targets(labels, codec, max_len, LabelOrder::Frequency))
}

fn pick<'a>(by_id: &HashMap<&str, &'a PreparedDrug>, ids: &[String]) -> Vec<&'a PreparedDrug> {
    ids.iter().map(|id| by_id[id.as_str()]).collect()
}

/// Split, fit artifacts on the training part, train, and score the test part
/// with each test drug attached on its own as a query molecule.
pub fn run_experiment(
    cfg: &RunConfig,
    drugs: &[PreparedDrug],
    seed: u64,
) -> Result<RunResult, PipelineError> {
    let ids: Vec<&str> = drugs.iter().map(|d| d.drug_id.as_str()).collect();
    let split = split_dataset(&ids, seed)?;
    let by_id: HashMap<&str, &PreparedDrug> = drugs.iter().map(|d| (d.drug_id.as_str(), d)).collect();
    let (tr, va, te) = (pick(&by_id, &split.train), pick(&by_id, &split.valid), pick(&by_id, &split.test));
    let artifacts = Artifacts::build(&tr, cfg)?;
    let outcome = train(cfg, &artifacts, &tr, &va, seed)?;
    let predictor = Predictor::new(&outcome.model, &artifacts, cfg.allow_duplicates);
    let mut preds = Vec::with_capacity(te.len());
    let mut truths = Vec::with_capacity(te.len());
    for d in &te {
        preds.push(predictor.predict_query(d)?.into_iter().collect::<BTreeSet<usize>>());
        truths.push(truth_set(&d.labels, &artifacts.codec, cfg.max_len));
    }
    let test = evaluate(&preds, &truths)?;
    let manifest = RunManifest {
        version: MANIFEST_VERSION,
        seed,
        config: cfg.clone(),
        config_hash: cfg.hash(),
        artifact_hash: artifacts.hash(),
        model: outcome.model.config.clone(),
        split,
        initial_loss: outcome.initial_loss,
        best_epoch: outcome.best_epoch,
        log: outcome.log,
    };
    Ok(RunResult {
        manifest,
        model: outcome.model,
        artifacts,
        test,
    })
}

/// One full experiment per seed; mean and sample standard deviation of the
/// test metrics.
pub fn run_seeds(
    cfg: &RunConfig,
    drugs: &[PreparedDrug],
) -> Result<(SeedSummary, Vec<RunResult>), PipelineError> {
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = run_experiment(cfg, drugs, seed).map_err(|e| PipelineError::Seed {
            seed,
            source: Box::new(e),
        })?;
        log::info!("seed {seed}: test F1 {:.4}", run.test.f1);
        runs.push(run);
    }
    let summary = SeedSummary::new(runs.iter().map(|r| (r.manifest.seed, r.test)).collect());
    Ok((summary, runs))
}

fn round_log(log: &[EpochLog]) -> Vec<EpochLog> {
    log.iter()
        .map(|e| EpochLog {
            train_loss: fixed(e.train_loss),
            lr: fixed(e.lr),
            valid_f1: e.valid_f1.map(fixed),
            ..e.clone()
        })
        .collect()
}

/// Writes `run.json`, `model.ckpt` and the artifact files into `dir`.
pub fn save_run(dir: &Path, manifest: &RunManifest, model: &Model, art: &Artifacts) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    art.save(dir)?;
    let dtype = if manifest.config.float_width == 32 { DType::F32 } else { DType::F64 };
    let mut w = BufWriter::new(File::create(dir.join("model.ckpt"))?);
    save_checkpoint(&model.params, dtype, &mut w)?;
    let m = RunManifest {
        initial_loss: fixed(manifest.initial_loss),
        log: round_log(&manifest.log),
        ..manifest.clone()
    };
    let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(dir.join("run.json"), json + "\n")?;
    Ok(())
}

pub fn load_run(dir: &Path) -> Result<(RunManifest, Model, Artifacts), PipelineError> {
    let path = dir.join("run.json");
    let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::FileNotFound(path.clone()),
        _ => PipelineError::Io(e),
    })?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| PipelineError::Format(format!("run.json: {e}")))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(PipelineError::Format(format!(
            "run.json version {} unsupported",
            manifest.version
        )));
    }
    let art = Artifacts::load(dir)?;
    let ckpt = dir.join("model.ckpt");
    let file = File::open(&ckpt).map_err(|_| PipelineError::FileNotFound(ckpt))?;
    let params = load_checkpoint(std::io::BufReader::new(file))?;
    let model = Model::from_params(manifest.model.clone(), &params)?;
    Ok((manifest, model, art))
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    seed: Option<u64>,
    precision: f64,
    recall: f64,
    f1: f64,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    config_hash: &'a str,
}

/// `metrics.json`: `{seed, precision, recall, f1, tp, fp, fn, config_hash}`.
pub fn write_metrics_json(
    path: &Path,
    seed: Option<u64>,
    m: &MetricsReport,
    config_hash: &str,
) -> Result<(), PipelineError> {
    let j = MetricsJson {
        seed,
        precision: fixed(m.precision),
        recall: fixed(m.recall),
        f1: fixed(m.f1),
        tp: m.tp,
        fp: m.fp,
        fn_: m.fn_,
        config_hash,
    };
    let json = serde_json::to_string_pretty(&j).expect("metrics serialize");
    std::fs::write(path, json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_drops_unknown_labels() {
        let codec = LabelCodec::build(&[vec!["a", "b"]], 10);
        let t = truth_set(&["b", "zzz", "a"], &codec, 200);
        assert_eq!(t, [codec.id("a").unwrap(), codec.id("b").unwrap()].into());
        assert_eq!(truth_set(&["b", "a"], &codec, 1).len(), 1);
    }

    #[test]
    fn metrics_json_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("metrics.json");
        write_metrics_json(&p, Some(3), &MetricsReport::from_counts(2, 1, 1), "abc").unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        for k in ["seed", "precision", "recall", "f1", "tp", "fp", "fn", "config_hash"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["precision"].as_f64().unwrap(), 0.6666666667);
    }
}
