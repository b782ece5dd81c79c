//! The BRICS environment table and its predicate evaluator.
//!
//! Environments are matched with simple per-atom predicates instead of
//! SMARTS. A predicate sees the atom, its neighbors, and the partner atom
//! across the bond being considered.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::FragError;
use crate::chem::{BondOrder, PerceivedMolecule};

pub const RULES_VERSION: u32 = 1;
pub const ENVIRONMENT_COUNT: usize = 16;

const BUILTIN_RULES: &str = include_str!("../../data/brics_rules.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondKind {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
}

impl BondKind {
    fn accepts(self, order: BondOrder) -> bool {
        match self {
            BondKind::Any => true,
            BondKind::Single => order == BondOrder::Single,
            BondKind::Double => order == BondOrder::Double,
            BondKind::Triple => order == BondOrder::Triple,
            BondKind::Aromatic => order == BondOrder::Aromatic,
        }
    }
}

fn any_bond() -> BondKind {
    BondKind::Any
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborPattern {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub not_elements: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aromatic: Option<bool>,
    #[serde(default = "any_bond")]
    pub bond: BondKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_bond: Option<bool>,
    /// The neighbor must itself carry a double bond to one of these elements
    /// (not counting the bond back to the center atom).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub double_bonded_to: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomPredicate {
    pub elements: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aromatic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden_bond_orders: Vec<BondKind>,
    /// Each pattern must match a different neighbor.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required_neighbors: Vec<NeighborPattern>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden_neighbors: Vec<NeighborPattern>,
    /// Allowed elements for the atom on the other side of the cut bond.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner_elements: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub env_id: u8,
    pub description: String,
    pub predicate: AtomPredicate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    version: u32,
    environments: Vec<Environment>,
    compatible_pairs: Vec<[u8; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BricsRuleTable {
    pub environments: Vec<Environment>,
    /// Stored in both orientations.
    pub compatible_pairs: BTreeSet<(u8, u8)>,
}

impl BricsRuleTable {
    /// The table bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_RULES).expect("bundled BRICS table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, FragError> {
        let file: RuleFile =
            serde_json::from_str(text).map_err(|e| FragError::RuleFile(e.to_string()))?;
        if file.version != RULES_VERSION {
            return Err(FragError::UnsupportedVersion(file.version));
        }
        if file.environments.len() != ENVIRONMENT_COUNT {
            return Err(FragError::RuleFile(format!(
                "expected {ENVIRONMENT_COUNT} environments, found {}",
                file.environments.len()
            )));
        }
        let mut by_id = BTreeMap::new();
        for env in &file.environments {
            if !(1..=ENVIRONMENT_COUNT as u8).contains(&env.env_id) {
                return Err(FragError::RuleFile(format!("env_id {} out of range", env.env_id)));
            }
            if by_id.insert(env.env_id, ()).is_some() {
                return Err(FragError::RuleFile(format!("duplicate env_id {}", env.env_id)));
            }
        }
        let mut compatible_pairs = BTreeSet::new();
        for [a, b] in file.compatible_pairs {
            if !by_id.contains_key(&a) || !by_id.contains_key(&b) {
                return Err(FragError::RuleFile(format!("pair [{a}, {b}] names an unknown env")));
            }
            compatible_pairs.insert((a, b));
            compatible_pairs.insert((b, a));
        }
        let mut environments = file.environments;
        environments.sort_by_key(|e| e.env_id);
        Ok(BricsRuleTable {
            environments,
            compatible_pairs,
        })
    }

    pub fn to_json(&self) -> String {
        let pairs = self
            .compatible_pairs
            .iter()
            .filter(|(a, b)| a <= b)
            .map(|&(a, b)| [a, b])
            .collect();
        let file = RuleFile {
            version: RULES_VERSION,
            environments: self.environments.clone(),
            compatible_pairs: pairs,
        };
        serde_json::to_string_pretty(&file).expect("rule table serializes")
    }

    pub fn is_compatible(&self, a: u8, b: u8) -> bool {
        self.compatible_pairs.contains(&(a, b))
    }

    /// Environments matched by `atom` when the bond to `partner` is the one
    /// being considered for cleavage.
    pub fn matching_envs(&self, mol: &PerceivedMolecule, atom: usize, partner: usize) -> Vec<u8> {
        self.environments
            .iter()
            .filter(|e| e.predicate.matches(mol, atom, partner))
            .map(|e| e.env_id)
            .collect()
    }
}

impl NeighborPattern {
    fn matches(&self, mol: &PerceivedMolecule, center: usize, nb: usize, bond: usize) -> bool {
        let atom = &mol.base.atoms[nb];
        let b = &mol.base.bonds[bond];
        if let Some(els) = &self.elements {
            if !els.contains(&atom.atomic_number) {
                return false;
            }
        }
        if let Some(els) = &self.not_elements {
            if els.contains(&atom.atomic_number) {
                return false;
            }
        }
        if self.aromatic.is_some_and(|ar| ar != atom.aromatic) {
            return false;
        }
        if !self.bond.accepts(b.order) {
            return false;
        }
        if self.ring_bond.is_some_and(|r| r != b.in_ring) {
            return false;
        }
        if let Some(els) = &self.double_bonded_to {
            let found = mol.neighbors(nb).any(|(other, bi)| {
                other != center
                    && mol.base.bonds[bi].order == BondOrder::Double
                    && els.contains(&mol.base.atoms[other].atomic_number)
            });
            if !found {
                return false;
            }
        }
        true
    }
}

impl AtomPredicate {
    pub fn matches(&self, mol: &PerceivedMolecule, atom: usize, partner: usize) -> bool {
        let a = &mol.base.atoms[atom];
        if !self.elements.contains(&a.atomic_number) {
            return false;
        }
        if self.aromatic.is_some_and(|ar| ar != a.aromatic) {
            return false;
        }
        if self.ring.is_some_and(|r| r != mol.ring_membership[atom]) {
            return false;
        }
        if self.charge.is_some_and(|c| c != a.formal_charge) {
            return false;
        }
        let degree = mol.heavy_degree(atom);
        if self.min_degree.is_some_and(|d| degree < d) || self.max_degree.is_some_and(|d| degree > d)
        {
            return false;
        }
        if let Some(els) = &self.partner_elements {
            if !els.contains(&mol.base.atoms[partner].atomic_number) {
                return false;
            }
        }
        let nbs: Vec<(usize, usize)> = mol.neighbors(atom).collect();
        for &(_, bi) in &nbs {
            let order = mol.base.bonds[bi].order;
            if self.forbidden_bond_orders.iter().any(|k| k.accepts(order)) {
                return false;
            }
        }
        for pat in &self.forbidden_neighbors {
            if nbs.iter().any(|&(nb, bi)| pat.matches(mol, atom, nb, bi)) {
                return false;
            }
        }
        let mut used = vec![false; nbs.len()];
        assign_distinct(&self.required_neighbors, 0, mol, atom, &nbs, &mut used)
    }
}

/// Backtracking assignment of required patterns to distinct neighbors.
fn assign_distinct(
    pats: &[NeighborPattern],
    k: usize,
    mol: &PerceivedMolecule,
    center: usize,
    nbs: &[(usize, usize)],
    used: &mut [bool],
) -> bool {
    if k == pats.len() {
        return true;
    }
    for i in 0..nbs.len() {
        if used[i] || !pats[k].matches(mol, center, nbs[i].0, nbs[i].1) {
            continue;
        }
        used[i] = true;
        if assign_distinct(pats, k + 1, mol, center, nbs, used) {
            return true;
        }
        used[i] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_smiles, perceive};

    fn p(s: &str) -> PerceivedMolecule {
        perceive(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn builtin_table_shape() {
        let t = BricsRuleTable::builtin();
        assert_eq!(t.environments.len(), 16);
        for &(a, b) in &t.compatible_pairs {
            assert!(t.is_compatible(b, a));
        }
        let again = BricsRuleTable::from_json(&t.to_json()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn version_checked() {
        let text = BUILTIN_RULES.replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(matches!(
            BricsRuleTable::from_json(&text),
            Err(FragError::UnsupportedVersion(7))
        ));
    }

    #[test]
    fn amide_environments() {
        let t = BricsRuleTable::builtin();
        let m = p("CC(=O)NC");
        // carbonyl carbon looking at N; N looking at the carbonyl carbon
        assert!(t.matching_envs(&m, 1, 3).contains(&1));
        assert!(t.matching_envs(&m, 3, 1).contains(&5));
    }

    #[test]
    fn lactam_nitrogen_is_not_an_amine() {
        let t = BricsRuleTable::builtin();
        let m = p("CN1CCCC1=O");
        let envs = t.matching_envs(&m, 1, 0);
        assert!(envs.contains(&10));
        assert!(!envs.contains(&5));
    }

    #[test]
    fn aromatic_carbons() {
        let t = BricsRuleTable::builtin();
        let m = p("Cc1ccccc1");
        assert!(t.matching_envs(&m, 1, 0).contains(&16));
        let m = p("Cc1ccccn1");
        assert!(t.matching_envs(&m, 1, 0).contains(&14));
    }
}
