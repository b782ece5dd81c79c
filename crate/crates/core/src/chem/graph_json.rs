//! Pre-parsed molecular graphs, for structures converted upstream (e.g. from
//! InChI) instead of written as SMILES.

use serde::{Deserialize, Serialize};

use super::{elements, Atom, Bond, BondOrder, BondStereo, Chirality, Molecule, SmilesError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphAtomJson {
    pub element: String,
    #[serde(default)]
    pub charge: i8,
    /// Hydrogen count; omitted means "fill from the valence table".
    #[serde(default)]
    pub h: Option<u8>,
    #[serde(default)]
    pub aromatic: bool,
    #[serde(default)]
    pub isotope: u16,
    #[serde(default)]
    pub chirality: Chirality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBondJson {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    #[serde(default)]
    pub stereo: BondStereo,
    #[serde(default)]
    pub conjugated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub drug_id: String,
    pub atoms: Vec<GraphAtomJson>,
    pub bonds: Vec<GraphBondJson>,
}

/// Validates and converts a graph record. Errors reuse the SMILES error
/// vocabulary with atom/bond indices in place of byte offsets.
pub fn molecule_from_json(g: &GraphJson) -> Result<Molecule, SmilesError> {
    if g.atoms.is_empty() {
        return Err(SmilesError::EmptyInput);
    }
    let mut atoms = Vec::with_capacity(g.atoms.len());
    for (i, a) in g.atoms.iter().enumerate() {
        let z = elements::atomic_number(&a.element).ok_or_else(|| SmilesError::UnknownElement {
            symbol: a.element.clone(),
            offset: i,
        })?;
        let mut atom = Atom::new(z);
        atom.formal_charge = a.charge;
        atom.explicit_h = a.h;
        atom.aromatic = a.aromatic;
        atom.isotope = a.isotope;
        atom.chirality = a.chirality;
        atoms.push(atom);
    }
    let mut bonds: Vec<Bond> = Vec::with_capacity(g.bonds.len());
    for (i, b) in g.bonds.iter().enumerate() {
        if b.a >= atoms.len() || b.b >= atoms.len() {
            return Err(SmilesError::UnexpectedEnd(i));
        }
        if b.a == b.b {
            return Err(SmilesError::SelfBond(i));
        }
        if bonds
            .iter()
            .any(|x| (x.a == b.a && x.b == b.b) || (x.a == b.b && x.b == b.a))
        {
            return Err(SmilesError::DuplicateBond(i));
        }
        if b.order == BondOrder::Aromatic && !(atoms[b.a].aromatic && atoms[b.b].aromatic) {
            return Err(SmilesError::AromaticBondMismatch(i));
        }
        let mut bond = Bond::new(b.a, b.b, b.order);
        bond.stereo = b.stereo;
        bond.conjugated = b.conjugated;
        bonds.push(bond);
    }
    // single component only
    let mut seen = vec![false; atoms.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for bond in &bonds {
            if bond.touches(u) {
                let v = bond.other(u);
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(SmilesError::MultiComponentInput(i));
    }
    Ok(Molecule {
        atoms,
        bonds,
        source_text: format!("graph:{}", g.drug_id),
        neighbor_order: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol_from_json() {
        let json = r#"{"drug_id":"d1","atoms":[{"element":"C"},{"element":"C"},{"element":"O"}],
                       "bonds":[{"a":0,"b":1,"order":"single"},{"a":1,"b":2,"order":"single"}]}"#;
        let g: GraphJson = serde_json::from_str(json).unwrap();
        let m = molecule_from_json(&g).unwrap();
        assert_eq!(m.atoms.len(), 3);
        let p = crate::chem::perceive(&m).unwrap();
        assert_eq!(p.implicit_h, vec![3, 2, 1]);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let json = r#"{"drug_id":"d1","atoms":[{"element":"C"},{"element":"O"}],"bonds":[]}"#;
        let g: GraphJson = serde_json::from_str(json).unwrap();
        assert!(matches!(
            molecule_from_json(&g),
            Err(SmilesError::MultiComponentInput(1))
        ));
    }
}
