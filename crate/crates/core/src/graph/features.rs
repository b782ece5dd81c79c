use serde::{Deserialize, Serialize};

use crate::chem::{BondStereo, PerceivedMolecule};

pub const NODE_FEATURES: usize = 9;
pub const EDGE_FEATURES: usize = 3;

/// Node columns: atomic number, degree, formal charge, chirality code, H
/// count, hybridization code, aromatic flag, atomic mass, radical electrons.
pub const NODE_COLUMNS: [&str; NODE_FEATURES] = [
    "atomic_number",
    "degree",
    "formal_charge",
    "chirality",
    "h_count",
    "hybridization",
    "aromatic",
    "mass",
    "radical_electrons",
];

/// Columns that get z-scored; the rest are categorical codes or flags.
pub const NUMERIC_COLUMNS: [usize; 6] = [0, 1, 2, 4, 7, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularGraphTensors {
    pub node_feat: Vec<[f64; NODE_FEATURES]>,
    /// Both directions of every bond: bond k gives rows 2k (a→b) and 2k+1.
    pub edge_index: Vec<(usize, usize)>,
    pub edge_feat: Vec<[f64; EDGE_FEATURES]>,
    pub n_atoms: usize,
}

fn stereo_code(s: BondStereo) -> f64 {
    s.code() as f64
}

pub fn featurize_molecule(p: &PerceivedMolecule) -> MolecularGraphTensors {
    let n = p.atom_count();
    let node_feat = (0..n)
        .map(|i| {
            let a = &p.base.atoms[i];
            [
                a.atomic_number as f64,
                p.degree[i] as f64,
                a.formal_charge as f64,
                a.chirality.code() as f64,
                p.total_h(i) as f64,
                p.hybridization[i].code() as f64,
                if a.aromatic { 1.0 } else { 0.0 },
                a.mass(),
                a.radical_electrons as f64,
            ]
        })
        .collect();
    let mut edge_index = Vec::with_capacity(2 * p.base.bonds.len());
    let mut edge_feat = Vec::with_capacity(2 * p.base.bonds.len());
    for b in &p.base.bonds {
        let f = [
            b.order.code() as f64,
            stereo_code(b.stereo),
            if b.conjugated { 1.0 } else { 0.0 },
        ];
        edge_index.push((b.a, b.b));
        edge_feat.push(f);
        edge_index.push((b.b, b.a));
        edge_feat.push(f);
    }
    MolecularGraphTensors {
        node_feat,
        edge_index,
        edge_feat,
        n_atoms: n,
    }
}

/// Per-column mean and standard deviation of the numeric node columns, taken
/// over every atom of the training molecules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    /// Identity transform, used for raw-feature runs.
    pub fn identity() -> Self {
        FeatureStats {
            columns: NUMERIC_COLUMNS.iter().map(|&c| NODE_COLUMNS[c].to_string()).collect(),
            mean: vec![0.0; NUMERIC_COLUMNS.len()],
            std: vec![1.0; NUMERIC_COLUMNS.len()],
        }
    }

    pub fn fit<'a>(graphs: impl IntoIterator<Item = &'a MolecularGraphTensors>) -> Self {
        let k = NUMERIC_COLUMNS.len();
        let mut count = 0usize;
        let mut sum = vec![0.0; k];
        let mut sq = vec![0.0; k];
        for g in graphs {
            for row in &g.node_feat {
                count += 1;
                for (j, &c) in NUMERIC_COLUMNS.iter().enumerate() {
                    sum[j] += row[c];
                    sq[j] += row[c] * row[c];
                }
            }
        }
        let mut stats = Self::identity();
        if count == 0 {
            return stats;
        }
        for j in 0..k {
            let mean = sum[j] / count as f64;
            let var = (sq[j] / count as f64 - mean * mean).max(0.0);
            stats.mean[j] = mean;
            // constant columns are only centered
            stats.std[j] = if var > 1e-12 { var.sqrt() } else { 1.0 };
        }
        stats
    }

    pub fn apply(&self, g: &mut MolecularGraphTensors) {
        for row in &mut g.node_feat {
            for (j, &c) in NUMERIC_COLUMNS.iter().enumerate() {
                row[c] = (row[c] - self.mean[j]) / self.std[j];
            }
        }
    }
}
