//! Tab-separated dataset: header `drug_id<TAB>structure<TAB>labels`, one drug
//! per row. `structure` is a SMILES string, or a pre-parsed graph as inline
//! JSON when it starts with `{`. `labels` is a comma-separated list.

use std::collections::HashSet;
use std::path::Path;

use crate::chem::GraphJson;

use super::PipelineError;

pub const DATASET_HEADER: [&str; 3] = ["drug_id", "structure", "labels"];

#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Smiles(String),
    Graph(Box<GraphJson>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub drug_id: String,
    pub structure: Structure,
    /// Distinct labels in first-occurrence order.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the file.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    /// Rows that could not be read; they are reported, never silently kept.
    pub errors: Vec<RowError>,
}

pub fn load_dataset(path: &Path) -> Result<Dataset, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::FileNotFound(path.to_path_buf()),
        _ => PipelineError::Io(e),
    })?;
    parse_dataset(&text)
}

/// Splits, trims and deduplicates a label list, keeping first occurrences.
pub fn parse_labels(field: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    field
        .split(',')
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .filter(|l| seen.insert(l.to_string()))
        .map(String::from)
        .collect()
}

pub fn parse_dataset(text: &str) -> Result<Dataset, PipelineError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(PipelineError::EmptyDataset),
        }
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    if cols != DATASET_HEADER {
        return Err(PipelineError::HeaderMismatch(header.to_string()));
    }
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in lines {
        let line = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split('\t').collect();
        let fail = |message: String| RowError { line, message };
        if fields.len() != 3 {
            errors.push(fail(format!("expected 3 tab-separated fields, found {}", fields.len())));
            continue;
        }
        let (id, structure, labels) = (fields[0].trim(), fields[1].trim(), fields[2]);
        if id.is_empty() {
            errors.push(fail("empty drug_id".into()));
            continue;
        }
        if structure.is_empty() {
            errors.push(fail(format!("{id}: missing structure")));
            continue;
        }
        let structure = if structure.starts_with('{') {
            match serde_json::from_str::<GraphJson>(structure) {
                Ok(g) => Structure::Graph(Box::new(g)),
                Err(e) => {
                    errors.push(fail(format!("{id}: bad graph JSON: {e}")));
                    continue;
                }
            }
        } else {
            Structure::Smiles(structure.to_string())
        };
        let labels = parse_labels(labels);
        if labels.is_empty() {
            errors.push(fail(format!("{id}: no labels")));
            continue;
        }
        if !ids.insert(id.to_string()) {
            errors.push(fail(format!("{id}: duplicate drug_id")));
            continue;
        }
        records.push(DatasetRecord {
            drug_id: id.to_string(),
            structure,
            labels,
        });
    }
    if records.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    Ok(Dataset { records, errors })
}
