//! Motif contribution: how much each label's teacher-forced probability
//! drops when one motif is removed from the drug's association-graph node.

use std::io::Write;

use crate::autodiff::Tape;
use crate::graph::{AssociationGraph, GraphError, MotifVocabulary};
use crate::model::{AssocInput, GenerateOptions, Memory, Model, MolInput, BOS, EOS, N_SPECIAL};

use super::{encode_targets, Artifacts, LabelCodec, LabelOrder, PipelineError, PreparedDrug};

pub const CONTRIB_HEADER: &str = "motif_index,motif_canonical,label_id,label_name,score";

/// Rows are the drug's motifs, columns its scored labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionMatrix {
    pub drug_id: String,
    pub motifs: Vec<usize>,
    pub labels: Vec<usize>,
    /// Teacher-forced probability of each label with nothing masked.
    pub baseline: Vec<f64>,
    /// `scores[i][j]`: baseline minus masked probability of label `j` with
    /// motif `motifs[i]` removed.
    pub scores: Vec<Vec<f64>>,
}

/// Fixed probe of one drug: its atom graph, its node in an association
/// graph, and the label sequence fed under teacher forcing.
pub struct Explainer<'a> {
    model: &'a Model,
    graph: AssociationGraph,
    node: usize,
    mol: MolInput,
    pub labels: Vec<usize>,
    pub baseline: Vec<f64>,
}

impl<'a> Explainer<'a> {
    /// Training drugs use their own node; other drugs are attached as a
    /// query. The sequence is the drug's known labels in frequency order, or
    /// the generated labels when none is known to the codec.
    pub fn new(model: &'a Model, art: &Artifacts, drug: &PreparedDrug) -> Result<Self, PipelineError> {
        let (graph, node) = match art.assoc.molecule_node(&drug.drug_id) {
            Some(node) => (art.assoc.clone(), node),
            None => art
                .query_graph(&drug.corpus)?
                .ok_or_else(|| GraphError::NoKnownMotif(drug.drug_id.clone()))?,
        };
        let mol = art.mol_input(&drug.features)?;
        let mut labels: Vec<usize> =
            encode_targets(&drug.labels, &art.codec, model.config.max_len, LabelOrder::Frequency)
                .into_iter()
                .skip(1)
                .take_while(|&t| t != EOS)
                .filter(|&t| t >= N_SPECIAL)
                .collect();
        if labels.is_empty() {
            let (mem, keep) = model.memory_tensor(&mol, &AssocInput::new(&graph)?, node)?;
            let opts = GenerateOptions {
                max_len: model.config.max_len,
                allow_duplicates: false,
            };
            labels = model.generate(&mem, &keep, opts)?;
        }
        let mut e = Explainer {
            model,
            graph,
            node,
            mol,
            labels,
            baseline: Vec::new(),
        };
        e.baseline = e.label_probs(&[])?;
        Ok(e)
    }

    /// Motif indices present in the drug's bag of words.
    pub fn motifs(&self) -> Vec<usize> {
        self.graph.node_init[self.node].iter().map(|&(i, _)| i).collect()
    }

    /// Probability of each label at its teacher-forced step with `masked`
    /// motifs removed from the drug.
    pub fn label_probs(&self, masked: &[usize]) -> Result<Vec<f64>, PipelineError> {
        if self.labels.is_empty() {
            return Ok(Vec::new());
        }
        let mut g = self.graph.clone();
        for &m in masked {
            g.mask_motif(self.node, m);
        }
        let (mem, keep) = self.model.memory_tensor(&self.mol, &AssocInput::new(&g)?, self.node)?;
        let mut tape = Tape::new();
        let bound = self.model.params.bind_frozen(&mut tape);
        let memory = Memory {
            value: tape.constant(mem),
            keep,
        };
        let mut tokens = vec![BOS];
        tokens.extend_from_slice(&self.labels[..self.labels.len() - 1]);
        let logits = self.model.decoder_forward(&mut tape, &bound, &tokens, &memory)?;
        let probs = tape.softmax_rows(logits, None)?;
        let p = tape.value(probs);
        Ok(self.labels.iter().enumerate().map(|(t, &l)| p.get(t, l)).collect())
    }

    /// Baseline minus masked probability per label.
    pub fn contribution(&self, masked: &[usize]) -> Result<Vec<f64>, PipelineError> {
        let probs = self.label_probs(masked)?;
        Ok(self.baseline.iter().zip(&probs).map(|(b, p)| b - p).collect())
    }
}

/// One row per motif of the drug, masked one at a time.
pub fn contribution_analysis(
    model: &Model,
    art: &Artifacts,
    drug: &PreparedDrug,
) -> Result<ContributionMatrix, PipelineError> {
    let e = Explainer::new(model, art, drug)?;
    let motifs = e.motifs();
    let scores = motifs
        .iter()
        .map(|&m| e.contribution(&[m]))
        .collect::<Result<_, _>>()?;
    Ok(ContributionMatrix {
        drug_id: drug.drug_id.clone(),
        motifs,
        labels: e.labels.clone(),
        baseline: e.baseline.clone(),
        scores,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_contrib_csv(
    mut w: impl Write,
    m: &ContributionMatrix,
    vocab: &MotifVocabulary,
    codec: &LabelCodec,
) -> std::io::Result<()> {
    writeln!(w, "{CONTRIB_HEADER}")?;
    for (i, &motif) in m.motifs.iter().enumerate() {
        let canonical = vocab.entries.get(motif).map_or("", |e| e.canonical.as_str());
        for (j, &label) in m.labels.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{:.10}",
                motif,
                csv_field(canonical),
                label,
                csv_field(codec.token_name(label)),
                m.scores[i][j]
            )?;
        }
    }
    Ok(())
}
