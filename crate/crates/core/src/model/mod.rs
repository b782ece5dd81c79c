//! The network: two GAT stacks (atoms and the molecule-motif association
//! graph), an MLP that fuses each atom with its molecule's global embedding,
//! and a transformer decoder that emits label tokens.
//!
//! Parameter names form a stable namespace inside checkpoints:
//!
//! ```text
//! gat.mol.layer{l}.head{k}.{W,a,U}      atom graph
//! gat.assoc.layer{l}.head{k}.{W,a,U}    association graph
//! fusion.{0,1}.{W,b}
//! dec.tok_emb  dec.pos_emb
//! dec.layer{l}.{self,cross}.{Wq,Wk,Wv,Wo}
//! dec.layer{l}.ffn.{W1,b1,W2,b2}
//! dec.layer{l}.{ln_self,ln_cross,ln_ffn}.{g,b}
//! dec.ln_final.{g,b}  dec.out.{W,b}
//! ```

mod attention;
mod decoder;
mod fusion;
mod gat;

pub use attention::{attention, multi_head, MhaParams};
pub use decoder::{
    decoder_forward, decoder_hidden, project, sinusoidal_table, DecoderLayerParams, DecoderParams,
    NormParams, Positions, FFN_MULT, LN_EPS,
};
pub use fusion::{serialize_and_fuse, FusionParams, Memory};
pub use gat::{gat_forward, gat_layer, GatGraph, GatHead, GatInput, GatLayer, GatStack, LEAKY_SLOPE};

use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{restore_into, Bound, ParamStore, SparseRows, Tape, Tensor, TensorError, Var};
use crate::graph::{AssociationGraph, MolecularGraphTensors, NODE_FEATURES};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const N_SPECIAL: usize = 4;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("node {node} is not a molecule node of the association graph")]
    UnknownMoleculeNode { node: usize },
    #[error("{n_atoms} atoms exceed the memory length {max_atoms}")]
    TooManyAtoms { n_atoms: usize, max_atoms: usize },
    #[error("sequence of {len} tokens exceeds {max} positions")]
    SequenceTooLong { len: usize, max: usize },
    #[error("empty token sequence")]
    EmptySequence,
    #[error("non-finite logits during generation")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub gat_heads: usize,
    pub gat_layers: usize,
    pub dec_layers: usize,
    pub dec_heads: usize,
    /// Maximum number of labels per sequence.
    pub max_len: usize,
    pub max_atoms: usize,
    /// Decoder vocabulary: specials plus labels.
    pub n_tokens: usize,
    /// Association-graph input width (motif vocabulary size).
    pub motif_vocab: usize,
    pub dropout: f64,
    pub sinusoidal_pos: bool,
}

impl ModelConfig {
    pub fn new(n_tokens: usize, motif_vocab: usize) -> Self {
        ModelConfig {
            d_model: 128,
            gat_heads: 2,
            gat_layers: 2,
            dec_layers: 3,
            dec_heads: 4,
            max_len: 200,
            max_atoms: 128,
            n_tokens,
            motif_vocab,
            dropout: 0.1,
            sinusoidal_pos: false,
        }
    }
}

/// Association graph prepared for the GAT.
#[derive(Debug, Clone)]
pub struct AssocInput {
    pub graph: GatGraph,
    pub init: SparseRows,
    pub molecule_nodes: Vec<bool>,
}

impl AssocInput {
    pub fn new(g: &AssociationGraph) -> Result<Self, ModelError> {
        Ok(AssocInput {
            graph: GatGraph::from_association(g)?,
            init: Rc::new(g.node_init.clone()),
            molecule_nodes: g
                .nodes
                .iter()
                .map(|n| matches!(n, crate::graph::AssocNode::Molecule { .. }))
                .collect(),
        })
    }
}

/// Atom graph prepared for the GAT.
#[derive(Debug, Clone)]
pub struct MolInput {
    pub graph: GatGraph,
    pub x: Tensor,
}

impl MolInput {
    pub fn new(g: &MolecularGraphTensors) -> Result<Self, ModelError> {
        let data: Vec<f64> = g.node_feat.iter().flatten().copied().collect();
        Ok(MolInput {
            graph: GatGraph::from_molecule(g)?,
            x: Tensor::new(g.n_atoms, NODE_FEATURES, data)?,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.x.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateOptions {
    pub max_len: usize,
    pub allow_duplicates: bool,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub gat_mol: GatStack,
    pub gat_assoc: GatStack,
    pub fusion: FusionParams,
    pub decoder: DecoderParams,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        let c = &config;
        if c.n_tokens <= N_SPECIAL {
            return Err(ModelError::Config("decoder vocabulary has no labels".into()));
        }
        if c.motif_vocab == 0 {
            return Err(ModelError::Config("motif vocabulary is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let d = c.d_model;
        let gat_mol = GatStack::init(&mut p, "gat.mol", NODE_FEATURES, d, 3, c.gat_layers, c.gat_heads, &mut rng)?;
        let gat_assoc = GatStack::init(&mut p, "gat.assoc", c.motif_vocab, d, 1, c.gat_layers, c.gat_heads, &mut rng)?;
        let fusion = FusionParams::init(&mut p, d, d, d, &mut rng)?;
        let decoder = DecoderParams::init(
            &mut p,
            c.n_tokens,
            d,
            c.dec_layers,
            c.dec_heads,
            c.max_len + 1,
            c.sinusoidal_pos,
            c.dropout,
            &mut rng,
        )?;
        Ok(Model {
            config,
            params: p,
            gat_mol,
            gat_assoc,
            fusion,
            decoder,
        })
    }

    /// Rebuilds the layout for `config` and copies `loaded` into it.
    pub fn from_params(config: ModelConfig, loaded: &ParamStore) -> Result<Self, ModelError> {
        let mut m = Model::new(config, 0)?;
        restore_into(&mut m.params, loaded)?;
        Ok(m)
    }

    /// Embeddings of every association-graph node.
    pub fn encode_association(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        assoc: &AssocInput,
    ) -> Result<Var, ModelError> {
        gat_forward(tape, bound, &self.gat_assoc, GatInput::Sparse(assoc.init.clone()), &assoc.graph)
    }

    /// Atom embeddings (`n_atoms x d`) and the molecule's global embedding
    /// (`1 x d`) read from the association-graph embeddings.
    pub fn encode_molecule(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        mol: &MolInput,
        assoc: &AssocInput,
        assoc_emb: Var,
        node: usize,
    ) -> Result<(Var, Var), ModelError> {
        if !assoc.molecule_nodes.get(node).copied().unwrap_or(false) {
            return Err(ModelError::UnknownMoleculeNode { node });
        }
        let x = tape.constant(mol.x.clone());
        let atoms = gat_forward(tape, bound, &self.gat_mol, GatInput::Dense(x), &mol.graph)?;
        let global = tape.slice_rows(assoc_emb, node, 1)?;
        Ok((atoms, global))
    }

    /// Encodes and fuses a molecule into decoder memory. Molecules longer
    /// than `max_atoms` keep their first `max_atoms` atoms.
    #[allow(clippy::too_many_arguments)]
    pub fn memory(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        mol: &MolInput,
        assoc: &AssocInput,
        assoc_emb: Var,
        node: usize,
        trim: bool,
    ) -> Result<Memory, ModelError> {
        let (mut atoms, global) = self.encode_molecule(tape, bound, mol, assoc, assoc_emb, node)?;
        let max = self.config.max_atoms;
        if mol.n_atoms() > max {
            log::warn!("truncating memory from {} to {max} atoms", mol.n_atoms());
            atoms = tape.slice_rows(atoms, 0, max)?;
        }
        serialize_and_fuse(tape, bound, &self.fusion, atoms, global, max, trim)
    }

    pub fn decoder_forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        tokens: &[usize],
        memory: &Memory,
    ) -> Result<Var, ModelError> {
        decoder_forward(tape, bound, &self.decoder, tokens, memory)
    }

    /// Greedy decoding from BOS. PAD, BOS, UNK and (unless allowed) labels
    /// already emitted are never chosen. Returns label token ids only.
    pub fn generate(
        &self,
        memory: &Tensor,
        keep: &[bool],
        opts: GenerateOptions,
    ) -> Result<Vec<usize>, ModelError> {
        let max_len = opts.max_len.min(self.config.max_len);
        let mut tape = Tape::new();
        let bound = self.params.bind_frozen(&mut tape);
        let mem = Memory {
            value: tape.constant(memory.clone()),
            keep: keep.to_vec(),
        };
        let base = tape.len();
        let mut tokens = vec![BOS];
        let mut banned = vec![false; self.config.n_tokens];
        banned[PAD] = true;
        banned[BOS] = true;
        banned[UNK] = true;
        while tokens.len() - 1 < max_len {
            tape.truncate(base);
            let h = decoder_hidden(&mut tape, &bound, &self.decoder, &tokens, &mem)?;
            let last = tape.slice_rows(h, tokens.len() - 1, 1)?;
            let logits = project(&mut tape, &bound, &self.decoder, last)?;
            let row = tape.value(logits);
            let mut best: Option<(usize, f64)> = None;
            for (id, &v) in row.data.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ModelError::NonFinite);
                }
                if banned[id] {
                    continue;
                }
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((id, v));
                }
            }
            let (id, _) = best.expect("EOS is never banned");
            if id == EOS {
                break;
            }
            tokens.push(id);
            if !opts.allow_duplicates {
                banned[id] = true;
            }
        }
        Ok(tokens[1..].to_vec())
    }

    /// Memory for one molecule computed on a throwaway tape.
    pub fn memory_tensor(
        &self,
        mol: &MolInput,
        assoc: &AssocInput,
        node: usize,
    ) -> Result<(Tensor, Vec<bool>), ModelError> {
        let mut tape = Tape::new();
        let bound = self.params.bind_frozen(&mut tape);
        let emb = self.encode_association(&mut tape, &bound, assoc)?;
        let m = self.memory(&mut tape, &bound, mol, assoc, emb, node, true)?;
        Ok((tape.value(m.value).clone(), m.keep))
    }
}
