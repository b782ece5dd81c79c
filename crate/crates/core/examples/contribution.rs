//! Motif masking contributions for one drug, written as CSV to stdout.
//!
//! cargo run --release --example contribution [drug_id]

use std::path::Path;

use gmmlg::pipeline::{
    contribution_analysis, load_dataset, prepare_records, train, write_contrib_csv, Artifacts,
    PreparedDrug, RunConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "DB00945".into());
    let data = load_dataset(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_adr.tsv"))?;
    let (drugs, _) = prepare_records(&data.records);
    let all: Vec<&PreparedDrug> = drugs.iter().collect();
    let drug = drugs.iter().find(|d| d.drug_id == id).ok_or(format!("unknown drug {id}"))?;
    let cfg = RunConfig {
        d_model: 64,
        batch_size: 4,
        epochs: 60,
        ..RunConfig::default()
    };
    let art = Artifacts::build(&all, &cfg)?;
    let out = train(&cfg, &art, &all, &[], cfg.seed)?;
    let m = contribution_analysis(&out.model, &art, drug)?;
    write_contrib_csv(&mut std::io::stdout().lock(), &m, &art.vocab, &art.codec)?;
    Ok(())
}
