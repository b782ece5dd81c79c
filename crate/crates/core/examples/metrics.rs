//! Micro-averaged set metrics over predicted and true label sets, plus the
//! mean and standard deviation format used for multi-seed summaries.
//!
//! cargo run --example metrics

use std::collections::BTreeSet;

use gmmlg::pipeline::{evaluate, format_pm, mean_std};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let set = |xs: &[&'static str]| xs.iter().copied().collect::<BTreeSet<_>>();
    let preds = vec![set(&["Nausea", "Rash"]), set(&["Headache"]), set(&[])];
    let truths = vec![set(&["Nausea", "Vomiting"]), set(&["Headache"]), set(&["Rash"])];
    let m = evaluate(&preds, &truths)?;
    println!("tp {} fp {} fn {}", m.tp, m.fp, m.fn_);
    println!("precision {:.4} recall {:.4} f1 {:.4}", m.precision, m.recall, m.f1);

    let f1 = mean_std(&[0.61, 0.63, 0.60, 0.62, 0.64]);
    println!("f1 over seeds {}", format_pm(f1));
    Ok(())
}
