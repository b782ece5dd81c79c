//! Edge-featured multi-head graph attention.
//!
//! For a message edge j -> i with edge features E_ij, head k computes
//! `h = x W`, the score `LeakyReLU(a . [h_i | h_j | E_ij])`, normalizes the
//! scores over all edges entering i, and sums `alpha_ij * h_j U`. Heads are
//! averaged and the mean goes through ELU.

use rand::Rng;

use crate::autodiff::{glorot_uniform, Bound, ParamId, ParamStore, SparseRows, Tape, Tensor, Var};
use crate::graph::{AssociationGraph, MolecularGraphTensors, EDGE_FEATURES};

use super::ModelError;

pub const LEAKY_SLOPE: f64 = 0.2;

/// Message-passing structure with self-loops already included.
#[derive(Debug, Clone, PartialEq)]
pub struct GatGraph {
    pub n_nodes: usize,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// One row per edge in `src`/`dst` order.
    pub edge_feat: Tensor,
}

impl GatGraph {
    /// Appends a zero-feature self-loop for every node after the given edges.
    pub fn with_self_loops(
        n_nodes: usize,
        edges: &[(usize, usize)],
        feats: &[Vec<f64>],
        edge_dim: usize,
    ) -> Result<Self, ModelError> {
        if edges.len() != feats.len() {
            return Err(ModelError::Graph(format!(
                "{} edges but {} feature rows",
                edges.len(),
                feats.len()
            )));
        }
        let mut src = Vec::with_capacity(edges.len() + n_nodes);
        let mut dst = Vec::with_capacity(edges.len() + n_nodes);
        let mut data = Vec::with_capacity((edges.len() + n_nodes) * edge_dim);
        for (&(s, d), f) in edges.iter().zip(feats) {
            if s >= n_nodes || d >= n_nodes {
                return Err(ModelError::Graph(format!(
                    "edge ({s}, {d}) outside {n_nodes} nodes"
                )));
            }
            if f.len() != edge_dim {
                return Err(ModelError::Graph(format!(
                    "edge feature width {} != {edge_dim}",
                    f.len()
                )));
            }
            src.push(s);
            dst.push(d);
            data.extend_from_slice(f);
        }
        for i in 0..n_nodes {
            src.push(i);
            dst.push(i);
            data.extend(std::iter::repeat(0.0).take(edge_dim));
        }
        let rows = src.len();
        Ok(GatGraph {
            n_nodes,
            src,
            dst,
            edge_feat: Tensor::new(rows, edge_dim, data)?,
        })
    }

    pub fn from_molecule(g: &MolecularGraphTensors) -> Result<Self, ModelError> {
        let feats: Vec<Vec<f64>> = g.edge_feat.iter().map(|f| f.to_vec()).collect();
        Self::with_self_loops(g.n_atoms, &g.edge_index, &feats, EDGE_FEATURES)
    }

    /// The scalar association weight is the single edge feature.
    pub fn from_association(g: &AssociationGraph) -> Result<Self, ModelError> {
        let msgs = g.message_edges();
        let edges: Vec<(usize, usize)> = msgs.iter().map(|&(s, d, _)| (s, d)).collect();
        let feats: Vec<Vec<f64>> = msgs.iter().map(|&(_, _, w)| vec![w]).collect();
        Self::with_self_loops(g.node_count(), &edges, &feats, 1)
    }
}

/// Node features entering the first layer.
#[derive(Debug, Clone)]
pub enum GatInput {
    Dense(Var),
    /// Constant sparse rows (the association graph's bag-of-words init).
    Sparse(SparseRows),
}

#[derive(Debug, Clone, Copy)]
pub struct GatHead {
    pub w: ParamId,
    pub a: ParamId,
    pub u: ParamId,
}

#[derive(Debug, Clone)]
pub struct GatLayer {
    pub heads: Vec<GatHead>,
    pub out_dim: usize,
}

#[derive(Debug, Clone)]
pub struct GatStack {
    pub layers: Vec<GatLayer>,
    pub edge_dim: usize,
}

impl GatStack {
    /// Registers `{prefix}.layer{l}.head{k}.{W,a,U}`.
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        dim: usize,
        edge_dim: usize,
        depth: usize,
        heads: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        if heads == 0 || depth == 0 {
            return Err(ModelError::Config("GAT needs at least one head and one layer".into()));
        }
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let fan_in = if l == 0 { in_dim } else { dim };
            let mut hs = Vec::with_capacity(heads);
            for k in 0..heads {
                let p = format!("{prefix}.layer{l}.head{k}");
                hs.push(GatHead {
                    w: store.insert(&format!("{p}.W"), glorot_uniform(fan_in, dim, rng))?,
                    a: store.insert(
                        &format!("{p}.a"),
                        glorot_uniform(2 * dim + edge_dim, 1, rng),
                    )?,
                    u: store.insert(&format!("{p}.U"), glorot_uniform(dim, dim, rng))?,
                });
            }
            layers.push(GatLayer {
                heads: hs,
                out_dim: dim,
            });
        }
        Ok(GatStack { layers, edge_dim })
    }
}

/// One GAT layer.
pub fn gat_layer(
    tape: &mut Tape,
    bound: &Bound,
    layer: &GatLayer,
    input: &GatInput,
    graph: &GatGraph,
) -> Result<Var, ModelError> {
    let d = layer.out_dim;
    let e = tape.constant(graph.edge_feat.clone());
    let mut total: Option<Var> = None;
    for head in &layer.heads {
        let w = bound.var(head.w);
        let h = match input {
            GatInput::Dense(x) => tape.matmul(*x, w)?,
            GatInput::Sparse(rows) => {
                if rows.len() != graph.n_nodes {
                    return Err(ModelError::Graph(format!(
                        "{} feature rows for {} nodes",
                        rows.len(),
                        graph.n_nodes
                    )));
                }
                tape.sparse_matmul(rows.clone(), w)?
            }
        };
        let a = bound.var(head.a);
        let a_dst = tape.slice_rows(a, 0, d)?;
        let a_src = tape.slice_rows(a, d, d)?;
        let a_edge = tape.slice_rows(a, 2 * d, graph.edge_feat.cols)?;
        let s_dst = tape.matmul(h, a_dst)?;
        let s_src = tape.matmul(h, a_src)?;
        let s_dst = tape.gather_rows(s_dst, &graph.dst)?;
        let s_src = tape.gather_rows(s_src, &graph.src)?;
        let s_edge = tape.matmul(e, a_edge)?;
        let score = tape.add(s_dst, s_src)?;
        let score = tape.add(score, s_edge)?;
        let score = tape.leaky_relu(score, LEAKY_SLOPE);
        let alpha = tape.segment_softmax(score, &graph.dst, graph.n_nodes)?;
        let hu = tape.matmul(h, bound.var(head.u))?;
        let msg = tape.gather_rows(hu, &graph.src)?;
        let msg = tape.mul(msg, alpha)?;
        let agg = tape.scatter_add_rows(msg, &graph.dst, graph.n_nodes)?;
        total = Some(match total {
            None => agg,
            Some(t) => tape.add(t, agg)?,
        });
    }
    let total = total.expect("layer has at least one head");
    let mean = tape.scale(total, 1.0 / layer.heads.len() as f64);
    Ok(tape.elu(mean, 1.0))
}

/// Runs every layer of the stack; returns `n_nodes x dim` embeddings.
pub fn gat_forward(
    tape: &mut Tape,
    bound: &Bound,
    stack: &GatStack,
    input: GatInput,
    graph: &GatGraph,
) -> Result<Var, ModelError> {
    if graph.edge_feat.cols != stack.edge_dim {
        return Err(ModelError::Graph(format!(
            "edge features have width {}, stack expects {}",
            graph.edge_feat.cols, stack.edge_dim
        )));
    }
    let mut x = input;
    let mut out = None;
    for layer in &stack.layers {
        let y = gat_layer(tape, bound, layer, &x, graph)?;
        out = Some(y);
        x = GatInput::Dense(y);
    }
    Ok(out.expect("stack has at least one layer"))
}
