//! Memorize the bundled 16-drug corpus and report training-set F1.
//!
//! cargo run --release --example train_toy [epochs]

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use gmmlg::pipeline::{
    evaluate, load_dataset, prepare_records, train, truth_set, Artifacts, Predictor, PreparedDrug,
    RunConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let epochs = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let data = load_dataset(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_adr.tsv"))?;
    let (drugs, _) = prepare_records(&data.records);
    let all: Vec<&PreparedDrug> = drugs.iter().collect();

    let cfg = RunConfig {
        d_model: 64,
        batch_size: 4,
        epochs,
        ..RunConfig::default()
    };
    let art = Artifacts::build(&all, &cfg)?;
    let started = Instant::now();
    let out = train(&cfg, &art, &all, &[], cfg.seed)?;
    let n_labels = art.codec.labels.len() as f64;
    println!(
        "initial loss {:.4}  ln(labels) {:.4}  ln(tokens) {:.4}",
        out.initial_loss,
        n_labels.ln(),
        (art.codec.n_tokens() as f64).ln()
    );
    for e in out.log.iter().step_by((epochs / 10).max(1)) {
        println!("epoch {:>3}  loss {:.4}  lr {:.2e}", e.epoch, e.train_loss, e.lr);
    }

    let predictor = Predictor::new(&out.model, &art, false);
    let preds: Vec<BTreeSet<usize>> = predictor
        .predict_in_graph(&all)?
        .into_iter()
        .map(|p| p.into_iter().collect())
        .collect();
    let truths: Vec<BTreeSet<usize>> =
        all.iter().map(|d| truth_set(&d.labels, &art.codec, cfg.max_len)).collect();
    let m = evaluate(&preds, &truths)?;
    println!(
        "training-set P {:.4} R {:.4} F1 {:.4}  ({:.1}s)",
        m.precision,
        m.recall,
        m.f1,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
