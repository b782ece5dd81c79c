//! Fragment molecules into motifs with the builtin BRICS rules plus the
//! ring/branch refinement.
//!
//! cargo run --example fragment -- 'ClCc1ccccc1'

use gmmlg::chem::{parse_smiles, perceive};
use gmmlg::frag::{fragment_molecule, BricsRuleTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = ["ClCc1ccccc1", "CC(C)(C)C", "CCc1ccccc1", "CC(=O)Nc1ccc(O)cc1"]
            .map(String::from)
            .to_vec();
    }
    let rules = BricsRuleTable::builtin();
    for s in &inputs {
        let p = perceive(&parse_smiles(s)?)?;
        let f = fragment_molecule(&p, &rules);
        println!("{s}: {} cuts, {} motifs", f.cuts.len(), f.motifs.len());
        for m in &f.motifs {
            println!("  {:<24} heavy atoms {}", m.canonical, m.heavy_atom_count);
        }
    }
    Ok(())
}
