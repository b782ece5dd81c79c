use std::path::Path;

use sha2::{Digest, Sha256};

use crate::chem::{molecule_from_json, parse_smiles, perceive, PerceivedMolecule};
use crate::frag::{fragment_molecule, BricsRuleTable};
use crate::graph::{
    build_association_graph, build_vocabulary, featurize_molecule, AssociationGraph,
    CorpusMolecule, FeatureStats, GraphError, MolecularGraphTensors, MotifVocabulary,
};
use crate::model::{AssocInput, MolInput};

use super::{DatasetRecord, LabelCodec, PipelineError, RowError, RunConfig, Structure};

/// A record after perception, fragmentation and featurization. Features are
/// raw; standardization happens with the training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDrug {
    pub drug_id: String,
    pub labels: Vec<String>,
    pub corpus: CorpusMolecule,
    pub features: MolecularGraphTensors,
}

fn perceive_structure(drug_id: &str, s: &Structure) -> Result<PerceivedMolecule, PipelineError> {
    let fail = |message: String| PipelineError::Structure {
        drug_id: drug_id.to_string(),
        message,
    };
    let mol = match s {
        Structure::Smiles(text) => parse_smiles(text).map_err(|e| fail(e.to_string()))?,
        Structure::Graph(g) => molecule_from_json(g).map_err(|e| fail(e.to_string()))?,
    };
    perceive(&mol).map_err(|e| fail(e.to_string()))
}

pub fn prepare_structure(
    drug_id: &str,
    s: &Structure,
    rules: &BricsRuleTable,
) -> Result<(CorpusMolecule, MolecularGraphTensors), PipelineError> {
    let p = perceive_structure(drug_id, s)?;
    let f = fragment_molecule(&p, rules);
    Ok((CorpusMolecule::from_fragmentation(drug_id, &p, &f), featurize_molecule(&p)))
}

/// Prepares every record. Structures that fail to parse or perceive are
/// returned as row errors (line = position in `records`, 1-based).
pub fn prepare_records(records: &[DatasetRecord]) -> (Vec<PreparedDrug>, Vec<RowError>) {
    let rules = BricsRuleTable::builtin();
    let mut out = Vec::with_capacity(records.len());
    let mut errors = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match prepare_structure(&r.drug_id, &r.structure, &rules) {
            Ok((corpus, features)) => out.push(PreparedDrug {
                drug_id: r.drug_id.clone(),
                labels: r.labels.clone(),
                corpus,
                features,
            }),
            Err(e) => errors.push(RowError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    (out, errors)
}

/// Drops fragments whose motif is not in `vocab` and renumbers the
/// adjacency pairs that survive.
pub fn restrict_to_vocab(m: &CorpusMolecule, vocab: &MotifVocabulary) -> CorpusMolecule {
    let mut remap = vec![None; m.motifs.len()];
    let mut motifs = Vec::new();
    for (i, s) in m.motifs.iter().enumerate() {
        if vocab.index_of(s).is_some() {
            remap[i] = Some(motifs.len());
            motifs.push(s.clone());
        }
    }
    let adjacent = m
        .adjacent
        .iter()
        .filter_map(|&(a, b)| Some((remap[a]?, remap[b]?)))
        .collect();
    CorpusMolecule {
        drug_id: m.drug_id.clone(),
        motifs,
        adjacent,
    }
}

/// Everything fitted on the training split: motif vocabulary, association
/// graph, atom-feature standardization and label codec.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub vocab: MotifVocabulary,
    pub assoc: AssociationGraph,
    pub stats: FeatureStats,
    pub codec: LabelCodec,
}

impl Artifacts {
    pub fn build(train: &[&PreparedDrug], cfg: &RunConfig) -> Result<Self, PipelineError> {
        let docs: Vec<(String, Vec<String>)> = train
            .iter()
            .map(|d| (d.drug_id.clone(), d.corpus.motifs.clone()))
            .collect();
        let mut vocab = build_vocabulary(&docs)?;
        if cfg.prune_threshold > 0.0 {
            vocab = vocab.pruned(cfg.prune_threshold);
            if vocab.is_empty() {
                return Err(PipelineError::Config(format!(
                    "prune_threshold {} removes every motif",
                    cfg.prune_threshold
                )));
            }
        }
        let corpus: Vec<CorpusMolecule> =
            train.iter().map(|d| restrict_to_vocab(&d.corpus, &vocab)).collect();
        let assoc = build_association_graph(&corpus, &vocab)?;
        let stats = if cfg.raw_features {
            FeatureStats::identity()
        } else {
            FeatureStats::fit(train.iter().map(|d| &d.features))
        };
        let labels: Vec<Vec<String>> = train.iter().map(|d| d.labels.clone()).collect();
        let codec = LabelCodec::build(&labels, cfg.vocab_size);
        Ok(Artifacts {
            vocab,
            assoc,
            stats,
            codec,
        })
    }

    fn vocab_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        self.vocab.write_jsonl(&mut b).expect("write to memory");
        b
    }

    fn assoc_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        self.assoc
            .write_json(Some(&self.stats), &mut b)
            .expect("write to memory");
        b
    }

    /// SHA-256 over the serialized artifacts.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.vocab_bytes());
        h.update(self.assoc_bytes());
        h.update(self.codec.to_json());
        hex::encode(h.finalize())
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::write(dir.join("vocab.jsonl"), self.vocab_bytes())?;
        std::fs::write(dir.join("assoc.json"), self.assoc_bytes())?;
        std::fs::write(dir.join("codec.json"), self.codec.to_json())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => PipelineError::FileNotFound(p),
                _ => PipelineError::Io(e),
            })
        };
        let vocab = MotifVocabulary::read_jsonl(read("vocab.jsonl")?.as_bytes())?;
        let (assoc, stats) = AssociationGraph::read_json(&read("assoc.json")?)?;
        let stats = stats.ok_or_else(|| {
            PipelineError::Format("assoc.json carries no standardization statistics".into())
        })?;
        let codec = LabelCodec::from_json(&read("codec.json")?)?;
        Ok(Artifacts {
            vocab,
            assoc,
            stats,
            codec,
        })
    }

    pub fn mol_input(&self, features: &MolecularGraphTensors) -> Result<MolInput, PipelineError> {
        let mut g = features.clone();
        self.stats.apply(&mut g);
        Ok(MolInput::new(&g)?)
    }

    /// The training graph with `corpus` attached as a query molecule, or
    /// `None` when none of its motifs is in the vocabulary.
    pub fn query_graph(
        &self,
        corpus: &CorpusMolecule,
    ) -> Result<Option<(AssociationGraph, usize)>, PipelineError> {
        let mut g = self.assoc.clone();
        match g.attach_query_molecule(&self.vocab, &corpus.drug_id, &corpus.motifs) {
            Ok(node) => Ok(Some((g, node))),
            Err(GraphError::NoKnownMotif(id)) => {
                log::warn!("{id}: no motif in the vocabulary; prediction is empty");
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn train_input(&self) -> Result<AssocInput, PipelineError> {
        Ok(AssocInput::new(&self.assoc)?)
    }
}
