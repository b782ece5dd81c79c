//! Parse SMILES from the command line (or a default set), perceive rings
//! and aromaticity, and print the canonical form.
//!
//! cargo run --example parse_smiles -- 'CC(=O)Oc1ccccc1C(=O)O' 'C1CC'

use gmmlg::chem::{parse_smiles, perceive, write_canonical};

fn main() {
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = ["CC(=O)Oc1ccccc1C(=O)O", "OCC", "c1cc[nH]c1", "N[C@@H](C)C(=O)O", "C1CC"]
            .map(String::from)
            .to_vec();
    }
    for s in &inputs {
        let parsed = parse_smiles(s).map_err(|e| e.to_string()).and_then(|m| {
            let canon = write_canonical(&m, &m.all_atoms()).map_err(|e| e.to_string())?;
            let p = perceive(&m).map_err(|e| e.to_string())?;
            let rings = p.ring_bonds.iter().filter(|&&r| r).count();
            Ok(format!("{canon}  atoms {}  ring bonds {rings}", p.atom_count()))
        });
        match parsed {
            Ok(line) => println!("{s:<28} {line}"),
            Err(e) => println!("{s:<28} error: {e}"),
        }
    }
}
