use serde::{Deserialize, Serialize};

use super::{elements, rings, BondOrder, Molecule, PerceiveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hybridization {
    Sp,
    Sp2,
    Sp3,
    Other,
}

impl Hybridization {
    pub fn code(self) -> u8 {
        match self {
            Hybridization::Sp => 1,
            Hybridization::Sp2 => 2,
            Hybridization::Sp3 => 3,
            Hybridization::Other => 0,
        }
    }
}

/// A molecule with the derived per-atom and per-bond attributes filled in.
/// `base.bonds[*].in_ring` and `.conjugated` are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedMolecule {
    pub base: Molecule,
    /// Hydrogens not present as graph atoms (bracket count or valence fill).
    pub implicit_h: Vec<u8>,
    pub degree: Vec<usize>,
    pub hybridization: Vec<Hybridization>,
    pub ring_membership: Vec<bool>,
    pub ring_bonds: Vec<bool>,
    /// Valence-relevant bond order sum, including the pi electron credited to
    /// aromatic B/C/N/P/As atoms.
    pub bond_order_sum: Vec<u8>,
    /// The valence the atom was assigned (bond sum + H + radicals), or
    /// `None` for elements outside the valence table.
    pub target_valence: Vec<Option<u8>>,
}

impl PerceivedMolecule {
    pub fn atom_count(&self) -> usize {
        self.base.atoms.len()
    }

    /// Hydrogen count: implicit/bracket hydrogens plus explicit `[H]` atoms.
    pub fn total_h(&self, atom: usize) -> u8 {
        let explicit = self
            .base
            .bonds
            .iter()
            .filter(|b| b.touches(atom) && self.base.atoms[b.other(atom)].is_hydrogen())
            .count() as u8;
        self.implicit_h[atom] + explicit
    }

    /// Number of non-hydrogen neighbors.
    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.base
            .bonds
            .iter()
            .filter(|b| b.touches(atom) && !self.base.atoms[b.other(atom)].is_hydrogen())
            .count()
    }

    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.base
            .bonds
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.touches(atom))
            .map(move |(bi, b)| (b.other(atom), bi))
    }
}

fn pi_credit_element(z: u8) -> bool {
    matches!(z, 5 | 6 | 7 | 15 | 33)
}

pub fn perceive(mol: &Molecule) -> Result<PerceivedMolecule, PerceiveError> {
    let n = mol.atoms.len();
    let mut base = mol.clone();
    let bridges = rings::bridge_bonds(n, &base.bonds);
    let ring_bonds: Vec<bool> = bridges.iter().map(|b| !b).collect();
    let mut ring_membership = vec![false; n];
    for (bi, bond) in base.bonds.iter_mut().enumerate() {
        bond.in_ring = ring_bonds[bi];
        if bond.in_ring {
            ring_membership[bond.a] = true;
            ring_membership[bond.b] = true;
        }
    }

    let mut degree = vec![0usize; n];
    let mut raw_sum = vec![0u8; n];
    let mut aromatic_bonds = vec![0u8; n];
    let mut doubles = vec![0u8; n];
    let mut triples = vec![0u8; n];
    for bond in &base.bonds {
        for end in [bond.a, bond.b] {
            degree[end] += 1;
            raw_sum[end] = raw_sum[end].saturating_add(bond.order.valence_contribution());
            match bond.order {
                BondOrder::Aromatic => aromatic_bonds[end] += 1,
                BondOrder::Double => doubles[end] += 1,
                BondOrder::Triple => triples[end] += 1,
                BondOrder::Single => {}
            }
        }
    }

    let mut implicit_h = vec![0u8; n];
    let mut bond_order_sum = vec![0u8; n];
    let mut target_valence = vec![None; n];
    for i in 0..n {
        let atom = &mut base.atoms[i];
        let bracket_h = atom.explicit_h;
        let h_fixed = bracket_h.unwrap_or(0);
        let valences = if atom.is_wildcard() {
            None
        } else {
            elements::charge_adjusted_valences(atom.atomic_number, atom.formal_charge)
        };
        let mut used = raw_sum[i];
        if let Some(vals) = &valences {
            let lowest = vals.first().copied().unwrap_or(0);
            if atom.aromatic
                && aromatic_bonds[i] > 0
                && pi_credit_element(atom.atomic_number)
                && used + h_fixed < lowest
            {
                used += 1;
            }
            let needed = used + h_fixed;
            let v = vals.iter().copied().find(|&v| v >= needed).ok_or_else(|| {
                PerceiveError::ValenceExceeded {
                    atom: i,
                    element: atom.element.clone(),
                    used: needed,
                    charge: atom.formal_charge,
                }
            })?;
            match bracket_h {
                Some(h) => {
                    implicit_h[i] = h;
                    atom.radical_electrons = v - needed;
                }
                None => implicit_h[i] = v - used,
            }
            target_valence[i] = Some(v);
        } else {
            implicit_h[i] = h_fixed;
        }
        bond_order_sum[i] = used;
    }

    let hybridization = (0..n)
        .map(|i| {
            let atom = &base.atoms[i];
            if atom.is_wildcard()
                || atom.is_hydrogen()
                || elements::default_valences(atom.atomic_number).is_none()
            {
                Hybridization::Other
            } else if triples[i] > 0 || doubles[i] >= 2 {
                Hybridization::Sp
            } else if atom.aromatic || doubles[i] >= 1 || aromatic_bonds[i] > 0 {
                Hybridization::Sp2
            } else {
                Hybridization::Sp3
            }
        })
        .collect();

    // Conjugation: aromatic bonds; single bonds whose both ends carry a
    // multiple/aromatic bond elsewhere; multiple bonds next to such a single.
    let unsaturated_elsewhere = |atom: usize, skip: usize| {
        base.bonds
            .iter()
            .enumerate()
            .any(|(bi, b)| bi != skip && b.touches(atom) && b.order != BondOrder::Single)
    };
    let mut conjugated: Vec<bool> = base
        .bonds
        .iter()
        .enumerate()
        .map(|(bi, b)| match b.order {
            BondOrder::Aromatic => true,
            BondOrder::Single => unsaturated_elsewhere(b.a, bi) && unsaturated_elsewhere(b.b, bi),
            _ => false,
        })
        .collect();
    for bi in 0..base.bonds.len() {
        let b = &base.bonds[bi];
        if matches!(b.order, BondOrder::Double | BondOrder::Triple) {
            let touches_conjugated_single = base.bonds.iter().enumerate().any(|(bj, o)| {
                bj != bi
                    && o.order == BondOrder::Single
                    && (o.touches(b.a) || o.touches(b.b))
                    && conjugated[bj]
            });
            if touches_conjugated_single {
                conjugated[bi] = true;
            }
        }
    }
    for (bond, c) in base.bonds.iter_mut().zip(conjugated) {
        bond.conjugated = c;
    }

    Ok(PerceivedMolecule {
        base,
        implicit_h,
        degree,
        hybridization,
        ring_membership,
        ring_bonds,
        bond_order_sum,
        target_valence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn p(s: &str) -> PerceivedMolecule {
        perceive(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn methane() {
        let m = p("C");
        assert_eq!(m.implicit_h, vec![4]);
        assert_eq!(m.degree, vec![0]);
        assert_eq!(m.hybridization, vec![Hybridization::Sp3]);
    }

    #[test]
    fn benzene() {
        let m = p("c1ccccc1");
        for i in 0..6 {
            assert!(m.ring_membership[i]);
            assert!(m.base.atoms[i].aromatic);
            assert_eq!(m.hybridization[i], Hybridization::Sp2);
            assert_eq!(m.implicit_h[i], 1);
        }
        assert!(m.base.bonds.iter().all(|b| b.conjugated && b.in_ring));
    }

    #[test]
    fn hydrogen_cyanide() {
        let m = p("C#N");
        assert_eq!(m.hybridization, vec![Hybridization::Sp, Hybridization::Sp]);
        assert_eq!(m.implicit_h, vec![1, 0]);
    }

    #[test]
    fn heteroaromatics() {
        let pyridine = p("c1ccncc1");
        assert_eq!(pyridine.implicit_h[3], 0);
        let pyrrole = p("c1cc[nH]c1");
        assert_eq!(pyrrole.implicit_h[3], 1);
        assert_eq!(pyrrole.base.atoms[3].radical_electrons, 0);
        let methylpyrrole = p("Cn1cccc1");
        assert_eq!(methylpyrrole.implicit_h[1], 0);
        let thiophene = p("c1ccsc1");
        assert_eq!(thiophene.implicit_h[3], 0);
        assert_eq!(thiophene.implicit_h[0], 1);
    }

    #[test]
    fn charged_and_radical() {
        let m = p("C[N+](C)(C)C");
        assert_eq!(m.implicit_h[1], 0);
        let m = p("[CH3]");
        assert_eq!(m.base.atoms[0].radical_electrons, 1);
        let m = p("CC(=O)[O-]");
        assert_eq!(m.implicit_h[3], 0);
        assert_eq!(m.base.atoms[3].radical_electrons, 0);
    }

    #[test]
    fn valence_exceeded() {
        let err = perceive(&parse_smiles("C(C)(C)(C)(C)C").unwrap()).unwrap_err();
        assert!(matches!(err, PerceiveError::ValenceExceeded { atom: 0, .. }));
        assert!(perceive(&parse_smiles("F=C").unwrap()).is_err());
        assert!(perceive(&parse_smiles("[CH5]").unwrap()).is_err());
    }

    #[test]
    fn conjugation() {
        let butadiene = p("C=CC=C");
        assert!(butadiene.base.bonds.iter().all(|b| b.conjugated));
        let propene = p("C=CC");
        assert!(propene.base.bonds.iter().all(|b| !b.conjugated));
        let styrene = p("C=Cc1ccccc1");
        assert!(styrene.base.bonds[0].conjugated && styrene.base.bonds[1].conjugated);
    }

    #[test]
    fn hypervalent_sulfur() {
        let m = p("CS(=O)(=O)C");
        assert_eq!(m.implicit_h[1], 0);
        assert_eq!(m.target_valence[1], Some(6));
    }
}
