//! Retrosynthetic fragmentation: BRICS cleavage followed by two extra rules
//! applied inside each BRICS fragment.
//!
//! Rule 1 cuts acyclic bonds between a ring atom and a non-ring atom. Rule 2
//! isolates every non-ring atom with three or more heavy neighbors. Ring bonds
//! and bonds to hydrogen atoms are never cut.

mod rules;

pub use rules::{
    AtomPredicate, BondKind, BricsRuleTable, Environment, NeighborPattern, ENVIRONMENT_COUNT,
    RULES_VERSION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{write_canonical, BondOrder, PerceivedMolecule};

#[derive(Debug, Error, PartialEq)]
pub enum FragError {
    #[error("rule file: {0}")]
    RuleFile(String),
    #[error("unsupported rule file version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutRule {
    /// Environment ids of `bond.a` and `bond.b`.
    Brics(u8, u8),
    RingSubstituent,
    BranchAtom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleavableBond {
    pub bond: usize,
    pub rule: CutRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    /// Sorted parent atom indices.
    pub atoms: Vec<usize>,
    /// (parent atom index inside the fragment, order of the severed bond)
    pub attachment_points: Vec<(usize, BondOrder)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Motif {
    pub canonical: String,
    pub heavy_atom_count: usize,
}

/// Everything the graph builder needs from one molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragmentation {
    pub fragments: Vec<Fragment>,
    /// Parallel to `fragments`.
    pub motifs: Vec<Motif>,
    pub cuts: Vec<CleavableBond>,
    /// Fragment index of every atom.
    pub atom_fragment: Vec<usize>,
}

impl Fragmentation {
    /// Unordered fragment pairs joined by at least one severed bond.
    pub fn adjacent_fragments(&self, mol: &PerceivedMolecule) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .cuts
            .iter()
            .map(|c| {
                let b = &mol.base.bonds[c.bond];
                let (x, y) = (self.atom_fragment[b.a], self.atom_fragment[b.b]);
                (x.min(y), x.max(y))
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

fn is_h(mol: &PerceivedMolecule, atom: usize) -> bool {
    mol.base.atoms[atom].is_hydrogen()
}

/// Acyclic single bonds whose endpoints match a compatible environment pair,
/// in bond-index order.
pub fn find_brics_bonds(mol: &PerceivedMolecule, rules: &BricsRuleTable) -> Vec<CleavableBond> {
    let mut out = Vec::new();
    for (bi, bond) in mol.base.bonds.iter().enumerate() {
        if bond.in_ring || bond.order != BondOrder::Single || is_h(mol, bond.a) || is_h(mol, bond.b)
        {
            continue;
        }
        let ea = rules.matching_envs(mol, bond.a, bond.b);
        if ea.is_empty() {
            continue;
        }
        let eb = rules.matching_envs(mol, bond.b, bond.a);
        let hit = ea
            .iter()
            .flat_map(|&x| eb.iter().map(move |&y| (x, y)))
            .find(|&(x, y)| rules.is_compatible(x, y));
        if let Some((x, y)) = hit {
            out.push(CleavableBond {
                bond: bi,
                rule: CutRule::Brics(x, y),
            });
        }
    }
    out
}

/// Connected components after removing `cut` bonds, ordered by smallest atom.
fn components(mol: &PerceivedMolecule, cut: &[bool]) -> Vec<Fragment> {
    let n = mol.atom_count();
    let mut adj = vec![Vec::new(); n];
    for (bi, b) in mol.base.bonds.iter().enumerate() {
        if !cut[bi] {
            adj[b.a].push(b.b);
            adj[b.b].push(b.a);
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut atoms = Vec::new();
        while let Some(u) = stack.pop() {
            atoms.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        atoms.sort_unstable();
        out.push(fragment_from_atoms(mol, atoms));
    }
    out
}

fn fragment_from_atoms(mol: &PerceivedMolecule, atoms: Vec<usize>) -> Fragment {
    let mut inside = vec![false; mol.atom_count()];
    for &a in &atoms {
        inside[a] = true;
    }
    let mut attachment_points = Vec::new();
    for b in &mol.base.bonds {
        if inside[b.a] != inside[b.b] {
            let a = if inside[b.a] { b.a } else { b.b };
            attachment_points.push((a, b.order));
        }
    }
    attachment_points.sort_by_key(|&(a, o)| (a, o.code()));
    Fragment {
        atoms,
        attachment_points,
    }
}

pub fn brics_fragment(mol: &PerceivedMolecule, rules: &BricsRuleTable) -> Vec<Fragment> {
    let mut cut = vec![false; mol.base.bonds.len()];
    for c in find_brics_bonds(mol, rules) {
        cut[c.bond] = true;
    }
    components(mol, &cut)
}

/// Bonds the two extra rules cut inside the given fragments, in bond order.
/// A bond matching both rules is reported as a ring-substituent cut.
fn refinement_cuts(mol: &PerceivedMolecule, frags: &[Fragment]) -> Vec<CleavableBond> {
    let mut owner = vec![usize::MAX; mol.atom_count()];
    for (fi, f) in frags.iter().enumerate() {
        for &a in &f.atoms {
            owner[a] = fi;
        }
    }
    let branch = |a: usize| !mol.ring_membership[a] && !is_h(mol, a) && mol.heavy_degree(a) >= 3;
    let mut out = Vec::new();
    for (bi, b) in mol.base.bonds.iter().enumerate() {
        if owner[b.a] != owner[b.b] || b.in_ring || is_h(mol, b.a) || is_h(mol, b.b) {
            continue;
        }
        let rule = if mol.ring_membership[b.a] != mol.ring_membership[b.b] {
            CutRule::RingSubstituent
        } else if branch(b.a) || branch(b.b) {
            CutRule::BranchAtom
        } else {
            continue;
        };
        out.push(CleavableBond { bond: bi, rule });
    }
    out
}

/// Applies both extra rules within each fragment and re-extracts components.
/// Bonds already severed between fragments stay severed.
pub fn refine_fragments(mol: &PerceivedMolecule, frags: &[Fragment]) -> Vec<Fragment> {
    refine_with_cuts(mol, frags).0
}

fn refine_with_cuts(
    mol: &PerceivedMolecule,
    frags: &[Fragment],
) -> (Vec<Fragment>, Vec<CleavableBond>) {
    let mut owner = vec![usize::MAX; mol.atom_count()];
    for (fi, f) in frags.iter().enumerate() {
        for &a in &f.atoms {
            owner[a] = fi;
        }
    }
    let mut cut: Vec<bool> = mol.base.bonds.iter().map(|b| owner[b.a] != owner[b.b]).collect();
    let extra = refinement_cuts(mol, frags);
    for c in &extra {
        cut[c.bond] = true;
    }
    (components(mol, &cut), extra)
}

fn motif_of(mol: &PerceivedMolecule, frag: &Fragment) -> Motif {
    let canonical =
        write_canonical(&mol.base, &frag.atoms).expect("fragments are connected and non-empty");
    let heavy_atom_count = frag.atoms.iter().filter(|&&a| !is_h(mol, a)).count();
    Motif {
        canonical,
        heavy_atom_count,
    }
}

/// Full fragmentation with per-fragment motifs and the list of cut bonds.
pub fn fragment_molecule(mol: &PerceivedMolecule, rules: &BricsRuleTable) -> Fragmentation {
    let mut cuts = find_brics_bonds(mol, rules);
    let brics = brics_fragment(mol, rules);
    let (fragments, extra) = refine_with_cuts(mol, &brics);
    cuts.extend(extra);
    cuts.sort_by_key(|c| c.bond);
    let mut atom_fragment = vec![0; mol.atom_count()];
    for (fi, f) in fragments.iter().enumerate() {
        for &a in &f.atoms {
            atom_fragment[a] = fi;
        }
    }
    let motifs = fragments.iter().map(|f| motif_of(mol, f)).collect();
    Fragmentation {
        fragments,
        motifs,
        cuts,
        atom_fragment,
    }
}

/// Motif multiset, sorted by canonical string; repeats are kept.
pub fn motifs_of(mol: &PerceivedMolecule, rules: &BricsRuleTable) -> Vec<Motif> {
    let mut motifs = fragment_molecule(mol, rules).motifs;
    motifs.sort();
    motifs
}
