//! Train briefly on the toy corpus, then decode label sequences for a
//! training drug and for an unseen molecule.
//!
//! cargo run --release --example generate

use std::path::Path;

use gmmlg::pipeline::{
    load_dataset, parse_dataset, prepare_records, train, Artifacts, Predictor, PreparedDrug,
    RunConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = load_dataset(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_adr.tsv"))?;
    let (drugs, _) = prepare_records(&data.records);
    let all: Vec<&PreparedDrug> = drugs.iter().collect();
    let cfg = RunConfig {
        d_model: 64,
        batch_size: 4,
        epochs: 60,
        ..RunConfig::default()
    };
    let art = Artifacts::build(&all, &cfg)?;
    let out = train(&cfg, &art, &all, &[], cfg.seed)?;
    let p = Predictor::new(&out.model, &art, false);

    let seen = p.predict_in_graph(&all[..1])?.remove(0);
    println!("{} (training): {}", all[0].drug_id, p.label_names(&seen).join(", "));

    let query = parse_dataset("drug_id\tstructure\tlabels\nphenacetin\tCCOc1ccc(NC(C)=O)cc1\t-\n")?;
    let (q, _) = prepare_records(&query.records);
    let labels = p.predict_query(&q[0])?;
    println!("phenacetin (unseen): {}", p.label_names(&labels).join(", "));
    Ok(())
}
