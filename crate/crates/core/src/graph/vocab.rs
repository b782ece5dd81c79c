use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::GraphError;

pub const VOCAB_VERSION: u32 = 1;

/// `tf · ln(n / (1 + df))`.
pub fn tfidf_weight(tf: usize, df: usize, n: usize) -> Result<f64, GraphError> {
    if tf == 0 || df == 0 || n == 0 {
        return Err(GraphError::Domain(format!("tfidf(tf={tf}, df={df}, n={n})")));
    }
    Ok(tf as f64 * (n as f64 / (1.0 + df as f64)).ln())
}

/// Pointwise mutual information over molecule counts, clamped at zero.
pub fn pmi_weight(c_ij: usize, c_i: usize, c_j: usize, n: usize) -> Result<f64, GraphError> {
    if c_i == 0 || c_j == 0 || c_ij > c_i.min(c_j) || c_i.max(c_j) > n {
        return Err(GraphError::Domain(format!(
            "pmi(c_ij={c_ij}, c_i={c_i}, c_j={c_j}, n={n})"
        )));
    }
    if c_ij == 0 {
        return Ok(0.0);
    }
    let n = n as f64;
    let raw = ((c_ij as f64 / n) / ((c_i as f64 / n) * (c_j as f64 / n))).ln();
    Ok(raw.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub canonical: String,
    pub index: usize,
    pub df: usize,
    pub avg_tfidf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifVocabulary {
    pub entries: Vec<VocabEntry>,
    pub n_molecules: usize,
    lookup: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabHeader {
    n_molecules: usize,
    version: u32,
}

/// Motif counts of one molecule, keyed by canonical string.
pub fn term_counts<S: AsRef<str>>(motifs: &[S]) -> BTreeMap<&str, usize> {
    let mut tf = BTreeMap::new();
    for m in motifs {
        *tf.entry(m.as_ref()).or_insert(0) += 1;
    }
    tf
}

pub fn build_vocabulary<S: AsRef<str>>(
    corpus: &[(String, Vec<S>)],
) -> Result<MotifVocabulary, GraphError> {
    if corpus.is_empty() {
        return Err(GraphError::EmptyCorpus);
    }
    let n = corpus.len();
    let counts: Vec<BTreeMap<&str, usize>> = corpus.iter().map(|(_, m)| term_counts(m)).collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tf in &counts {
        for &m in tf.keys() {
            *df.entry(m).or_insert(0) += 1;
        }
    }
    let mut tfidf_sum: BTreeMap<&str, f64> = BTreeMap::new();
    for tf in &counts {
        for (&m, &t) in tf {
            *tfidf_sum.entry(m).or_insert(0.0) += tfidf_weight(t, df[m], n)?;
        }
    }
    let mut order: Vec<(&str, usize)> = df.iter().map(|(&m, &d)| (m, d)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(index, (m, d))| VocabEntry {
            canonical: m.to_string(),
            index,
            df: d,
            avg_tfidf: tfidf_sum[m] / d as f64,
        })
        .collect();
    Ok(MotifVocabulary::from_entries(entries, n))
}

impl MotifVocabulary {
    fn from_entries(entries: Vec<VocabEntry>, n_molecules: usize) -> Self {
        let lookup = entries.iter().map(|e| (e.canonical.clone(), e.index)).collect();
        MotifVocabulary {
            entries,
            n_molecules,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, canonical: &str) -> Option<usize> {
        self.lookup.get(canonical).copied()
    }

    /// Drops entries whose averaged TF-IDF is below `min_avg_tfidf` and
    /// re-indexes the rest in their existing order.
    pub fn pruned(&self, min_avg_tfidf: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|e| e.avg_tfidf >= min_avg_tfidf)
            .enumerate()
            .map(|(i, e)| VocabEntry {
                index: i,
                ..e.clone()
            })
            .collect();
        Self::from_entries(entries, self.n_molecules)
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        let header = VocabHeader {
            n_molecules: self.n_molecules,
            version: VOCAB_VERSION,
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for e in &self.entries {
            writeln!(w, "{}", serde_json::to_string(e)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self, GraphError> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| GraphError::Format("empty vocabulary file".into()))??;
        let header: VocabHeader =
            serde_json::from_str(&first).map_err(|e| GraphError::Format(e.to_string()))?;
        if header.version != VOCAB_VERSION {
            return Err(GraphError::Format(format!(
                "unsupported vocabulary version {}",
                header.version
            )));
        }
        let mut entries = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: VocabEntry =
                serde_json::from_str(&line).map_err(|e| GraphError::Format(e.to_string()))?;
            if e.index != k {
                return Err(GraphError::Format(format!("entry {k} has index {}", e.index)));
            }
            entries.push(e);
        }
        Ok(Self::from_entries(entries, header.n_molecules))
    }
}
