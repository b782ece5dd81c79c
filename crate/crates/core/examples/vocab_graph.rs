//! Build the motif vocabulary and the molecule-motif association graph for
//! the bundled toy corpus and print the strongest edges.
//!
//! cargo run --example vocab_graph

use std::path::Path;

use gmmlg::graph::EdgeKind;
use gmmlg::pipeline::{load_dataset, prepare_records, Artifacts, PreparedDrug, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = load_dataset(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_adr.tsv"))?;
    let (drugs, _) = prepare_records(&data.records);
    let all: Vec<&PreparedDrug> = drugs.iter().collect();
    let art = Artifacts::build(&all, &RunConfig::default())?;

    println!("{} drugs, {} motifs, {} edges", drugs.len(), art.vocab.len(), art.assoc.edges.len());
    for e in art.vocab.entries.iter().take(8) {
        println!("  motif {:>3} df {:>2} tf-idf {:.3}  {}", e.index, e.df, e.avg_tfidf, e.canonical);
    }
    let mut pmi: Vec<_> = art.assoc.edges.iter().filter(|e| e.kind == EdgeKind::MotifMotif).collect();
    pmi.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    println!("top motif-motif PMI edges:");
    for e in pmi.iter().take(5) {
        let name = |i: usize| art.vocab.entries[i].canonical.as_str();
        println!("  {:.3}  {} -- {}", e.weight, name(e.u), name(e.v));
    }
    Ok(())
}
