//! Run configuration. Config files are flat `key = value` lines; `#` starts
//! a comment. Every key:
//!
//! ```text
//! key               default   meaning
//! gat_heads         2         attention heads per GAT layer
//! gat_layers        2         GAT layers per graph
//! epochs            50        training epochs
//! batch_size        64        drugs per optimizer step
//! num_layers        3         decoder layers
//! dec_heads         4         decoder attention heads
//! d_model           128       embedding width
//! max_len           200       maximum labels per sequence
//! max_atoms         128       decoder memory length (atoms)
//! vocab_size        13191     label vocabulary cap
//! lr_max            0.001     peak learning rate (cosine schedule start)
//! lr_min            0.00001   final learning rate
//! dropout           0.1       dropout on attention weights and FFN
//! clip_norm         0         global gradient-norm clip; 0 disables
//! seed              1         seed for split, init and batching
//! seeds             1,2,3,4,5 seeds for multi-seed runs
//! prune_threshold   0         drop motifs with average TF-IDF below this
//! raw_features      false     skip atom-feature standardization
//! sinusoidal_pos    false     fixed sine/cosine positions instead of learned
//! allow_duplicates  false     let generation repeat a label
//! label_order       frequency frequency | dataset | random
//! float_width       64        checkpoint float width: 64 or 32
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LabelOrder, PipelineError};
use crate::model::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderChoice {
    Frequency,
    Dataset,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gat_heads: usize,
    pub gat_layers: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub num_layers: usize,
    pub dec_heads: usize,
    pub d_model: usize,
    pub max_len: usize,
    pub max_atoms: usize,
    pub vocab_size: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    pub dropout: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub prune_threshold: f64,
    pub raw_features: bool,
    pub sinusoidal_pos: bool,
    pub allow_duplicates: bool,
    pub label_order: OrderChoice,
    pub float_width: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gat_heads: 2,
            gat_layers: 2,
            epochs: 50,
            batch_size: 64,
            num_layers: 3,
            dec_heads: 4,
            d_model: 128,
            max_len: 200,
            max_atoms: 128,
            vocab_size: 13191,
            lr_max: 1e-3,
            lr_min: 1e-5,
            dropout: 0.1,
            clip_norm: 0.0,
            seed: 1,
            seeds: vec![1, 2, 3, 4, 5],
            prune_threshold: 0.0,
            raw_features: false,
            sinusoidal_pos: false,
            allow_duplicates: false,
            label_order: OrderChoice::Frequency,
            float_width: 64,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| PipelineError::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let v = value.trim();
        match key.trim() {
            "gat_heads" => self.gat_heads = parse(key, v)?,
            "gat_layers" => self.gat_layers = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "num_layers" => self.num_layers = parse(key, v)?,
            "dec_heads" => self.dec_heads = parse(key, v)?,
            "d_model" => self.d_model = parse(key, v)?,
            "max_len" => self.max_len = parse(key, v)?,
            "max_atoms" => self.max_atoms = parse(key, v)?,
            "vocab_size" => self.vocab_size = parse(key, v)?,
            "lr_max" => self.lr_max = parse(key, v)?,
            "lr_min" => self.lr_min = parse(key, v)?,
            "dropout" => self.dropout = parse(key, v)?,
            "clip_norm" => self.clip_norm = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "seeds" => {
                self.seeds = v
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "prune_threshold" => self.prune_threshold = parse(key, v)?,
            "raw_features" => self.raw_features = parse(key, v)?,
            "sinusoidal_pos" => self.sinusoidal_pos = parse(key, v)?,
            "allow_duplicates" => self.allow_duplicates = parse(key, v)?,
            "label_order" => {
                self.label_order = match v {
                    "frequency" => OrderChoice::Frequency,
                    "dataset" => OrderChoice::Dataset,
                    "random" => OrderChoice::Random,
                    _ => return Err(PipelineError::Config(format!("label_order: unknown {v:?}"))),
                }
            }
            "float_width" => self.float_width = parse(key, v)?,
            other => return Err(PipelineError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key = value", i + 1))
            })?;
            self.set(k, v)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.d_model == 0 || self.dec_heads == 0 || self.d_model % self.dec_heads != 0 {
            return bad("d_model must be a positive multiple of dec_heads");
        }
        if self.gat_heads == 0 || self.gat_layers == 0 || self.num_layers == 0 {
            return bad("head and layer counts must be positive");
        }
        if self.batch_size == 0 || self.max_len == 0 || self.max_atoms == 0 || self.vocab_size == 0 {
            return bad("batch_size, max_len, max_atoms and vocab_size must be positive");
        }
        if !(self.lr_max >= self.lr_min && self.lr_min > 0.0) {
            return bad("need lr_max >= lr_min > 0");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.float_width != 32 && self.float_width != 64 {
            return bad("float_width must be 32 or 64");
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    pub fn label_order(&self, epoch: u64) -> LabelOrder {
        match self.label_order {
            OrderChoice::Frequency => LabelOrder::Frequency,
            OrderChoice::Dataset => LabelOrder::Dataset,
            OrderChoice::Random => LabelOrder::Random(self.seed ^ epoch.wrapping_mul(0x9e37_79b9)),
        }
    }

    pub fn model_config(&self, n_tokens: usize, motif_vocab: usize) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            gat_heads: self.gat_heads,
            gat_layers: self.gat_layers,
            dec_layers: self.num_layers,
            dec_heads: self.dec_heads,
            max_len: self.max_len,
            max_atoms: self.max_atoms,
            n_tokens,
            motif_vocab,
            dropout: self.dropout,
            sinusoidal_pos: self.sinusoidal_pos,
        }
    }
}
