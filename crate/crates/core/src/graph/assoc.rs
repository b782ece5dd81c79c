use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::vocab::{pmi_weight, term_counts, tfidf_weight, MotifVocabulary};
use super::{FeatureStats, GraphError};
use crate::chem::PerceivedMolecule;
use crate::frag::Fragmentation;

pub const ASSOC_VERSION: u32 = 1;

/// One training molecule as the association graph sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusMolecule {
    pub drug_id: String,
    /// Canonical motif of every fragment.
    pub motifs: Vec<String>,
    /// Fragment index pairs joined by a severed bond.
    pub adjacent: Vec<(usize, usize)>,
}

impl CorpusMolecule {
    pub fn from_fragmentation(drug_id: &str, mol: &PerceivedMolecule, f: &Fragmentation) -> Self {
        CorpusMolecule {
            drug_id: drug_id.to_string(),
            motifs: f.motifs.iter().map(|m| m.canonical.clone()).collect(),
            adjacent: f.adjacent_fragments(mol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssocNode {
    Motif { index: usize },
    Molecule { drug_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    MolMotif,
    MotifMotif,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocEdge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationGraph {
    pub vocab_size: usize,
    pub nodes: Vec<AssocNode>,
    pub edges: Vec<AssocEdge>,
    /// Sparse node features over the motif vocabulary: a single `(i, 1)` for
    /// motif node `i`, motif counts for molecule nodes.
    pub node_init: Vec<Vec<(usize, f64)>>,
    /// Query motifs dropped because they are not in the vocabulary.
    pub oov_warnings: usize,
}

#[derive(Serialize, Deserialize)]
struct AssocFile {
    version: u32,
    graph: AssociationGraph,
    standardization: Option<FeatureStats>,
}

fn bag(counts: &BTreeMap<usize, usize>) -> Vec<(usize, f64)> {
    counts.iter().map(|(&i, &c)| (i, c as f64)).collect()
}

pub fn build_association_graph(
    corpus: &[CorpusMolecule],
    vocab: &MotifVocabulary,
) -> Result<AssociationGraph, GraphError> {
    let v = vocab.len();
    let mut nodes: Vec<AssocNode> = (0..v).map(|index| AssocNode::Motif { index }).collect();
    let mut node_init: Vec<Vec<(usize, f64)>> = (0..v).map(|i| vec![(i, 1.0)]).collect();

    let mut order: Vec<&CorpusMolecule> = corpus.iter().collect();
    order.sort_by(|a, b| a.drug_id.cmp(&b.drug_id));
    for w in order.windows(2) {
        if w[0].drug_id == w[1].drug_id {
            return Err(GraphError::DuplicateDrug(w[0].drug_id.clone()));
        }
    }

    let mut edges = Vec::new();
    // molecules containing each motif, and adjacent motif pairs
    let mut containing: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); v];
    let mut adjacent_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (k, m) in order.iter().enumerate() {
        let mut ids = Vec::with_capacity(m.motifs.len());
        for s in &m.motifs {
            ids.push(vocab.index_of(s).ok_or_else(|| GraphError::UnknownMotif(s.clone()))?);
        }
        let node = v + k;
        nodes.push(AssocNode::Molecule {
            drug_id: m.drug_id.clone(),
        });
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &ids {
            *counts.entry(i).or_insert(0) += 1;
        }
        for (&i, &tf) in &counts {
            containing[i].insert(k);
            edges.push(AssocEdge {
                u: node,
                v: i,
                kind: EdgeKind::MolMotif,
                weight: tfidf_weight(tf, vocab.entries[i].df, vocab.n_molecules)?,
            });
        }
        node_init.push(bag(&counts));
        for &(fa, fb) in &m.adjacent {
            let (x, y) = (ids[fa], ids[fb]);
            if x != y {
                adjacent_pairs.insert((x.min(y), x.max(y)));
            }
        }
    }
    let n = order.len();
    for (i, j) in adjacent_pairs {
        let c_ij = containing[i].intersection(&containing[j]).count();
        // negative PMI is clamped to a zero-weight edge, not removed
        edges.push(AssocEdge {
            u: i,
            v: j,
            kind: EdgeKind::MotifMotif,
            weight: pmi_weight(c_ij, containing[i].len(), containing[j].len(), n)?,
        });
    }
    Ok(AssociationGraph {
        vocab_size: v,
        nodes,
        edges,
        node_init,
        oov_warnings: 0,
    })
}

impl AssociationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn molecule_node(&self, drug_id: &str) -> Option<usize> {
        self.nodes.iter().position(
            |n| matches!(n, AssocNode::Molecule { drug_id: d } if d == drug_id),
        )
    }

    pub fn molecule_nodes(&self) -> HashMap<String, usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n {
                AssocNode::Molecule { drug_id } => Some((drug_id.clone(), i)),
                AssocNode::Motif { .. } => None,
            })
            .collect()
    }

    pub fn node_init_dense(&self, node: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.vocab_size];
        for &(i, c) in &self.node_init[node] {
            out[i] = c;
        }
        out
    }

    /// Both directions of every edge as (source, target, weight).
    pub fn message_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.edges.len());
        for e in &self.edges {
            out.push((e.u, e.v, e.weight));
            out.push((e.v, e.u, e.weight));
        }
        out
    }

    /// Adds a held-out or unseen molecule without touching the vocabulary.
    /// Edge weights use the training-time document frequencies.
    pub fn attach_query_molecule<S: AsRef<str>>(
        &mut self,
        vocab: &MotifVocabulary,
        drug_id: &str,
        motifs: &[S],
    ) -> Result<usize, GraphError> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut unknown = 0;
        for (m, tf) in term_counts(motifs) {
            match vocab.index_of(m) {
                Some(i) => {
                    counts.insert(i, tf);
                }
                None => unknown += tf,
            }
        }
        if counts.is_empty() {
            return Err(GraphError::NoKnownMotif(drug_id.to_string()));
        }
        if unknown > 0 {
            log::warn!("{drug_id}: {unknown} motif(s) not in vocabulary");
        }
        self.oov_warnings += unknown;
        let node = self.nodes.len();
        self.nodes.push(AssocNode::Molecule {
            drug_id: drug_id.to_string(),
        });
        for (&i, &tf) in &counts {
            self.edges.push(AssocEdge {
                u: node,
                v: i,
                kind: EdgeKind::MolMotif,
                weight: tfidf_weight(tf, vocab.entries[i].df, vocab.n_molecules)?,
            });
        }
        self.node_init.push(bag(&counts));
        Ok(node)
    }

    /// Removes motif `motif` from molecule node `node`: zero bag-of-words
    /// entry and no molecule–motif edge. A motif the molecule lacks is a no-op.
    pub fn mask_motif(&mut self, node: usize, motif: usize) {
        self.node_init[node].retain(|&(i, _)| i != motif);
        self.edges
            .retain(|e| !(e.kind == EdgeKind::MolMotif && e.u == node && e.v == motif));
    }

    pub fn write_json(&self, stats: Option<&FeatureStats>, w: impl Write) -> std::io::Result<()> {
        let file = AssocFile {
            version: ASSOC_VERSION,
            graph: self.clone(),
            standardization: stats.cloned(),
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn read_json(text: &str) -> Result<(Self, Option<FeatureStats>), GraphError> {
        let file: AssocFile =
            serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
        if file.version != ASSOC_VERSION {
            return Err(GraphError::Format(format!(
                "unsupported association graph version {}",
                file.version
            )));
        }
        Ok((file.graph, file.standardization))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_vocabulary;

    fn mol(id: &str, motifs: &[&str], adjacent: &[(usize, usize)]) -> CorpusMolecule {
        CorpusMolecule {
            drug_id: id.to_string(),
            motifs: motifs.iter().map(|s| s.to_string()).collect(),
            adjacent: adjacent.to_vec(),
        }
    }

    fn vocab_of(c: &[CorpusMolecule]) -> MotifVocabulary {
        let rows: Vec<(String, Vec<String>)> =
            c.iter().map(|m| (m.drug_id.clone(), m.motifs.clone())).collect();
        build_vocabulary(&rows).unwrap()
    }

    #[test]
    fn one_molecule_two_motifs() {
        let c = vec![mol("bc", &["*CCl", "*c1ccccc1"], &[(0, 1)])];
        let g = build_association_graph(&c, &vocab_of(&c)).unwrap();
        assert_eq!(g.node_count(), 3);
        let mm = g.edges.iter().filter(|e| e.kind == EdgeKind::MolMotif).count();
        let mt = g.edges.iter().filter(|e| e.kind == EdgeKind::MotifMotif).count();
        assert_eq!((mm, mt), (2, 1));
        let mt_edge = g.edges.iter().find(|e| e.kind == EdgeKind::MotifMotif).unwrap();
        assert_eq!(mt_edge.weight, 0.0);
    }

    #[test]
    fn never_adjacent_means_no_edge() {
        let c = vec![
            mol("a", &["A", "B"], &[]),
            mol("b", &["A", "B"], &[]),
            mol("c", &["C"], &[]),
        ];
        let g = build_association_graph(&c, &vocab_of(&c)).unwrap();
        assert!(g.edges.iter().all(|e| e.kind == EdgeKind::MolMotif));
    }

    #[test]
    fn repeated_motif_collapses_to_one_edge() {
        let c = vec![mol("a", &["A", "A", "B"], &[]), mol("b", &["B"], &[])];
        let v = vocab_of(&c);
        let g = build_association_graph(&c, &v).unwrap();
        let node = g.molecule_node("a").unwrap();
        let a = v.index_of("A").unwrap();
        assert_eq!(g.node_init_dense(node)[a], 2.0);
        let edges: Vec<&AssocEdge> = g.edges.iter().filter(|e| e.u == node && e.v == a).collect();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].weight, 2.0 * (2.0f64 / 2.0).ln());
    }

    #[test]
    fn unknown_motif() {
        let c = vec![mol("a", &["A"], &[])];
        let v = vocab_of(&[mol("x", &["B"], &[])]);
        assert!(matches!(
            build_association_graph(&c, &v),
            Err(GraphError::UnknownMotif(_))
        ));
    }

    #[test]
    fn query_attachment() {
        let c = vec![mol("a", &["A", "B"], &[]), mol("b", &["B", "C"], &[])];
        let v = vocab_of(&c);
        let mut g = build_association_graph(&c, &v).unwrap();
        let before = g.edges.len();
        let node = g.attach_query_molecule(&v, "q", &["A", "C", "Z"]).unwrap();
        assert_eq!(g.edges.len(), before + 2);
        assert_eq!(g.oov_warnings, 1);
        assert_eq!(g.node_init[node].iter().map(|x| x.1).sum::<f64>(), 2.0);
        assert!(matches!(
            g.attach_query_molecule(&v, "q2", &["Z"]),
            Err(GraphError::NoKnownMotif(_))
        ));
        assert_eq!(v, vocab_of(&c));
    }

    #[test]
    fn mask_motif_removes_edge_and_count() {
        let c = vec![mol("a", &["A", "B"], &[]), mol("b", &["B"], &[])];
        let v = vocab_of(&c);
        let mut g = build_association_graph(&c, &v).unwrap();
        let node = g.molecule_node("a").unwrap();
        let a = v.index_of("A").unwrap();
        let untouched = g.clone();
        g.mask_motif(node, 99);
        assert_eq!(g, untouched);
        g.mask_motif(node, a);
        assert_eq!(g.node_init_dense(node)[a], 0.0);
        assert!(!g.edges.iter().any(|e| e.u == node && e.v == a));
    }

    #[test]
    fn json_round_trip() {
        let c = vec![mol("a", &["A", "B"], &[(0, 1)]), mol("b", &["B"], &[])];
        let g = build_association_graph(&c, &vocab_of(&c)).unwrap();
        let mut buf = Vec::new();
        g.write_json(Some(&FeatureStats::identity()), &mut buf).unwrap();
        let (back, stats) = AssociationGraph::read_json(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, g);
        assert_eq!(stats, Some(FeatureStats::identity()));
    }
}
