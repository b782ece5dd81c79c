use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{BOS, EOS, N_SPECIAL, PAD, UNK};

use super::PipelineError;

pub const CODEC_VERSION: u32 = 1;
pub const SPECIAL_TOKENS: [&str; N_SPECIAL] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Label vocabulary built from training records. Token ids 0..4 are the
/// specials; labels follow in descending training frequency, ties broken
/// by the label string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCodec {
    pub version: u32,
    pub labels: Vec<String>,
    pub frequency: Vec<usize>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

/// Order of the labels inside a target sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelOrder {
    /// Descending training frequency (ascending token id).
    Frequency,
    /// As listed in the record.
    Dataset,
    /// Shuffled with the given seed.
    Random(u64),
}

impl LabelCodec {
    pub fn build<S: AsRef<str>>(train_labels: &[Vec<S>], cap: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for labels in train_labels {
            for l in labels {
                *counts.entry(l.as_ref()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(cap);
        Self::from_parts(
            ranked.iter().map(|(l, _)| l.to_string()).collect(),
            ranked.iter().map(|&(_, c)| c).collect(),
        )
    }

    fn from_parts(labels: Vec<String>, frequency: Vec<usize>) -> Self {
        let lookup = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i + N_SPECIAL))
            .collect();
        LabelCodec {
            version: CODEC_VERSION,
            labels,
            frequency,
            lookup,
        }
    }

    /// Number of token ids, specials included.
    pub fn n_tokens(&self) -> usize {
        self.labels.len() + N_SPECIAL
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.lookup.get(label).copied()
    }

    pub fn token_name(&self, id: usize) -> &str {
        if id < N_SPECIAL {
            SPECIAL_TOKENS[id]
        } else {
            self.labels.get(id - N_SPECIAL).map_or("<invalid>", String::as_str)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("codec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let raw: LabelCodec =
            serde_json::from_str(text).map_err(|e| PipelineError::Format(e.to_string()))?;
        if raw.version != CODEC_VERSION {
            return Err(PipelineError::Format(format!(
                "codec version {} unsupported",
                raw.version
            )));
        }
        if raw.labels.len() != raw.frequency.len() {
            return Err(PipelineError::Format("codec label/frequency length mismatch".into()));
        }
        Ok(Self::from_parts(raw.labels, raw.frequency))
    }
}

/// `BOS + first max_len label ids + EOS`, padded with PAD to `max_len + 2`.
/// Labels outside the codec become UNK; under frequency order they sort
/// after every known label.
pub fn encode_targets<S: AsRef<str>>(
    labels: &[S],
    codec: &LabelCodec,
    max_len: usize,
    order: LabelOrder,
) -> Vec<usize> {
    let mut ids: Vec<usize> = labels
        .iter()
        .map(|l| codec.id(l.as_ref()).unwrap_or(UNK))
        .collect();
    match order {
        LabelOrder::Frequency => ids.sort_by_key(|&id| if id == UNK { usize::MAX } else { id }),
        LabelOrder::Dataset => {}
        LabelOrder::Random(seed) => ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
    ids.truncate(max_len);
    let mut seq = Vec::with_capacity(max_len + 2);
    seq.push(BOS);
    seq.extend(ids);
    seq.push(EOS);
    seq.resize(max_len + 2, PAD);
    seq
}

/// Cuts at the first EOS and keeps the set of label ids.
pub fn clean_sequence(tokens: &[usize]) -> BTreeSet<usize> {
    tokens
        .iter()
        .take_while(|&&t| t != EOS)
        .filter(|&&t| t >= N_SPECIAL)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codec() -> LabelCodec {
        LabelCodec::build(
            &[
                vec!["Pain", "Nausea"],
                vec!["Nausea", "Rash"],
                vec!["Nausea", "Pain", "Acne"],
            ],
            10,
        )
    }

    #[test]
    fn ids_follow_frequency_then_name() {
        let c = codec();
        assert_eq!(c.labels, vec!["Nausea", "Pain", "Acne", "Rash"]);
        assert_eq!(c.id("Nausea"), Some(4));
        assert_eq!(c.id("Acne"), Some(6));
        assert_eq!(c.n_tokens(), 8);
        assert_eq!(c.token_name(2), "<eos>");
        let capped = LabelCodec::build(&[vec!["a", "b", "b"]], 1);
        assert_eq!(capped.labels, vec!["b"]);
    }

    #[test]
    fn padding_arithmetic() {
        let seq = encode_targets(&["Rash", "Nausea"], &codec(), 200, LabelOrder::Frequency);
        assert_eq!(seq.len(), 202);
        assert_eq!(&seq[..4], &[BOS, 4, 7, EOS]);
        assert!(seq[4..].iter().all(|&t| t == PAD));
        let seq = encode_targets(&["Rash", "Nausea"], &codec(), 200, LabelOrder::Dataset);
        assert_eq!(&seq[..4], &[BOS, 7, 4, EOS]);
    }

    #[test]
    fn unknown_label_is_one_unk() {
        let seq = encode_targets(&["Zzz", "Pain"], &codec(), 10, LabelOrder::Frequency);
        assert_eq!(seq.iter().filter(|&&t| t == UNK).count(), 1);
        assert_eq!(&seq[..4], &[BOS, 5, UNK, EOS]);
    }

    #[test]
    fn truncation() {
        let labels: Vec<String> = (0..250).map(|i| format!("L{i:03}")).collect();
        let c = LabelCodec::build(&[labels.clone()], 13191);
        let seq = encode_targets(&labels, &c, 200, LabelOrder::Frequency);
        assert_eq!(seq.len(), 202);
        assert_eq!(clean_sequence(&seq).len(), 200);
        assert_eq!(seq[201], EOS);
    }

    #[test]
    fn cleaning() {
        let (a, b, c) = (4, 5, 6);
        assert_eq!(clean_sequence(&[BOS, a, b, EOS, c]), [a, b].into());
        assert!(clean_sequence(&[BOS, EOS]).is_empty());
        assert_eq!(clean_sequence(&[BOS, a, UNK, a, EOS]), [a].into());
        assert_eq!(clean_sequence(&[BOS, a, PAD, PAD]), [a].into());
    }

    #[test]
    fn json_round_trip() {
        let c = codec();
        let back = LabelCodec::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.id("Rash"), Some(7));
    }
}
