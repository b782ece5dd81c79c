//! Molecular graphs: SMILES parsing, chemical perception and canonical
//! writing of whole molecules or connected atom subsets.

mod canon;
pub mod elements;
mod graph_json;
mod perceive;
mod rings;
mod smiles;

pub use canon::{canonical_ranks, write_canonical};
pub use graph_json::{molecule_from_json, GraphAtomJson, GraphBondJson, GraphJson};
pub use perceive::{perceive, Hybridization, PerceivedMolecule};
pub use rings::bridge_bonds;
pub use smiles::parse_smiles;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Chirality {
    #[default]
    None,
    /// `@@`
    Clockwise,
    /// `@`
    Counterclockwise,
}

impl Chirality {
    pub fn inverted(self) -> Self {
        match self {
            Chirality::None => Chirality::None,
            Chirality::Clockwise => Chirality::Counterclockwise,
            Chirality::Counterclockwise => Chirality::Clockwise,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Chirality::None => 0,
            Chirality::Clockwise => 1,
            Chirality::Counterclockwise => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub element: String,
    /// 0 only for the `*` wildcard used as an attachment point.
    pub atomic_number: u8,
    pub formal_charge: i8,
    /// Hydrogen count written in a bracket atom; `None` for organic-subset
    /// atoms whose hydrogens are implied by the valence table.
    pub explicit_h: Option<u8>,
    /// 0 means unspecified.
    pub isotope: u16,
    pub aromatic: bool,
    pub chirality: Chirality,
    pub radical_electrons: u8,
}

impl Atom {
    pub fn new(atomic_number: u8) -> Self {
        Atom {
            element: elements::symbol(atomic_number).unwrap_or("*").to_string(),
            atomic_number,
            formal_charge: 0,
            explicit_h: None,
            isotope: 0,
            aromatic: false,
            chirality: Chirality::None,
            radical_electrons: 0,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        self.atomic_number == 0
    }

    pub fn is_hydrogen(&self) -> bool {
        self.atomic_number == 1
    }

    /// Atomic mass feature: the isotope when given, otherwise the standard
    /// atomic weight.
    pub fn mass(&self) -> f64 {
        if self.isotope > 0 {
            self.isotope as f64
        } else {
            elements::standard_mass(self.atomic_number)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Integer contribution to an atom's valence. Aromatic bonds count as 1;
    /// the extra pi electron is accounted for in perception.
    pub fn valence_contribution(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn smiles_symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BondStereo {
    #[default]
    None,
    Cis,
    Trans,
}

impl BondStereo {
    pub fn code(self) -> u8 {
        match self {
            BondStereo::None => 0,
            BondStereo::Cis => 1,
            BondStereo::Trans => 2,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BondStereo::None => BondStereo::None,
            BondStereo::Cis => BondStereo::Trans,
            BondStereo::Trans => BondStereo::Cis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: BondStereo,
    /// Reference substituents (neighbor of `a`, neighbor of `b`) that the
    /// cis/trans label refers to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stereo_atoms: Option<(usize, usize)>,
    pub conjugated: bool,
    pub in_ring: bool,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond {
            a,
            b,
            order,
            stereo: BondStereo::None,
            stereo_atoms: None,
            conjugated: false,
            in_ring: false,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, atom: usize) -> bool {
        self.a == atom || self.b == atom
    }
}

/// Neighbor slot used to interpret tetrahedral chirality: either a bonded
/// atom or the (single) hydrogen written inside the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeighborSlot {
    Atom(usize),
    ImplicitH,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub source_text: String,
    /// Per-atom neighbor order as written; `@`/`@@` are relative to it.
    #[serde(default)]
    pub neighbor_order: Vec<Vec<NeighborSlot>>,
}

impl Molecule {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.bonds
            .iter()
            .position(|bond| (bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
    }

    /// Adjacency as (neighbor, bond index) lists.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (bi, bond) in self.bonds.iter().enumerate() {
            adj[bond.a].push((bond.b, bi));
            adj[bond.b].push((bond.a, bi));
        }
        adj
    }

    /// Chirality reference order for `atom`. Falls back to bond-list order
    /// (hydrogen first) when the molecule was not built from SMILES.
    pub fn chiral_neighbor_order(&self, atom: usize) -> Vec<NeighborSlot> {
        if let Some(order) = self.neighbor_order.get(atom) {
            if !order.is_empty() {
                return order.clone();
            }
        }
        let mut order = Vec::new();
        if self.atoms[atom].explicit_h.unwrap_or(0) == 1 {
            order.push(NeighborSlot::ImplicitH);
        }
        for bond in &self.bonds {
            if bond.touches(atom) {
                order.push(NeighborSlot::Atom(bond.other(atom)));
            }
        }
        order
    }

    /// Every atom index, the subset used for whole-molecule canonicalization.
    pub fn all_atoms(&self) -> Vec<usize> {
        (0..self.atoms.len()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-ASCII byte at offset {0}")]
    NonAscii(usize),
    #[error("unbalanced parenthesis at offset {0}")]
    UnbalancedParenthesis(usize),
    #[error("ring bond {label} opened at offset {offset} is never closed")]
    UnclosedRingBond { label: u16, offset: usize },
    #[error("unknown element '{symbol}' at offset {offset}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("multi-component input ('.') at offset {0}")]
    MultiComponentInput(usize),
    #[error("ring closure {label} at offset {offset} has conflicting bond orders")]
    BondOrderMismatch { label: u16, offset: usize },
    #[error("unexpected character '{ch}' at offset {offset}")]
    UnexpectedCharacter { ch: char, offset: usize },
    #[error("unexpected end of input at offset {0}")]
    UnexpectedEnd(usize),
    #[error("atoms already bonded (offset {0})")]
    DuplicateBond(usize),
    #[error("ring closure to the same atom at offset {0}")]
    SelfBond(usize),
    #[error("aromatic bond between non-aromatic atoms at offset {0}")]
    AromaticBondMismatch(usize),
    #[error("numeric field overflow at offset {0}")]
    Overflow(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerceiveError {
    #[error("atom {atom} ({element}) exceeds its allowed valence: bond order sum {used}, charge {charge}")]
    ValenceExceeded {
        atom: usize,
        element: String,
        used: u8,
        charge: i8,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error("atom subset is empty")]
    EmptySubset,
    #[error("atom index {0} out of range")]
    AtomOutOfRange(usize),
    #[error("atom subset does not induce a connected subgraph")]
    DisconnectedSubset,
}
