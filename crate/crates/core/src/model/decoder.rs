//! Post-norm transformer decoder: masked self-attention, cross-attention
//! over the fused molecule memory, then a ReLU feed-forward block. Each
//! sub-layer adds its input back and normalizes.

use rand::Rng;

use crate::autodiff::{glorot_uniform, normal, Bound, ParamId, ParamStore, Tape, Tensor, Var};

use super::attention::{multi_head, MhaParams};
use super::fusion::Memory;
use super::ModelError;

pub const LN_EPS: f64 = 1e-5;
pub const FFN_MULT: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct NormParams {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl NormParams {
    fn init(store: &mut ParamStore, prefix: &str, d: usize) -> Result<Self, ModelError> {
        Ok(NormParams {
            gain: store.insert(&format!("{prefix}.g"), Tensor::filled(1, d, 1.0))?,
            bias: store.insert(&format!("{prefix}.b"), Tensor::zeros(1, d))?,
        })
    }

    fn apply(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var, ModelError> {
        Ok(tape.layer_norm(x, bound.var(self.gain), bound.var(self.bias), LN_EPS)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecoderLayerParams {
    pub self_attn: MhaParams,
    pub cross_attn: MhaParams,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub norm_self: NormParams,
    pub norm_cross: NormParams,
    pub norm_ffn: NormParams,
}

#[derive(Debug, Clone)]
pub enum Positions {
    Learned(ParamId),
    /// Fixed sine/cosine table.
    Sinusoidal(Tensor),
}

#[derive(Debug, Clone)]
pub struct DecoderParams {
    pub tok_emb: ParamId,
    pub positions: Positions,
    pub layers: Vec<DecoderLayerParams>,
    pub norm_final: NormParams,
    pub out_w: ParamId,
    pub out_b: ParamId,
    pub max_positions: usize,
    pub dropout: f64,
}

/// Standard sine/cosine table: even columns sin, odd columns cos.
pub fn sinusoidal_table(rows: usize, d: usize) -> Tensor {
    let mut t = Tensor::zeros(rows, d);
    for pos in 0..rows {
        for i in 0..d {
            let freq = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let angle = pos as f64 * freq;
            t.set(pos, i, if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    t
}

impl DecoderParams {
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        store: &mut ParamStore,
        n_tokens: usize,
        d: usize,
        layers: usize,
        heads: usize,
        max_positions: usize,
        sinusoidal: bool,
        dropout: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        let tok_emb = store.insert("dec.tok_emb", normal(n_tokens, d, 0.02, rng))?;
        let positions = if sinusoidal {
            Positions::Sinusoidal(sinusoidal_table(max_positions, d))
        } else {
            Positions::Learned(store.insert("dec.pos_emb", normal(max_positions, d, 0.02, rng))?)
        };
        let mut ls = Vec::with_capacity(layers);
        for l in 0..layers {
            let p = format!("dec.layer{l}");
            ls.push(DecoderLayerParams {
                self_attn: MhaParams::init(store, &format!("{p}.self"), d, heads, rng)?,
                cross_attn: MhaParams::init(store, &format!("{p}.cross"), d, heads, rng)?,
                w1: store.insert(&format!("{p}.ffn.W1"), glorot_uniform(d, FFN_MULT * d, rng))?,
                b1: store.insert(&format!("{p}.ffn.b1"), Tensor::zeros(1, FFN_MULT * d))?,
                w2: store.insert(&format!("{p}.ffn.W2"), glorot_uniform(FFN_MULT * d, d, rng))?,
                b2: store.insert(&format!("{p}.ffn.b2"), Tensor::zeros(1, d))?,
                norm_self: NormParams::init(store, &format!("{p}.ln_self"), d)?,
                norm_cross: NormParams::init(store, &format!("{p}.ln_cross"), d)?,
                norm_ffn: NormParams::init(store, &format!("{p}.ln_ffn"), d)?,
            });
        }
        Ok(DecoderParams {
            tok_emb,
            positions,
            layers: ls,
            norm_final: NormParams::init(store, "dec.ln_final", d)?,
            out_w: store.insert("dec.out.W", normal(d, n_tokens, 0.02, rng))?,
            out_b: store.insert("dec.out.b", Tensor::zeros(1, n_tokens))?,
            max_positions,
            dropout,
        })
    }
}

fn causal_keep(t: usize) -> Vec<bool> {
    (0..t * t).map(|k| k % t <= k / t).collect()
}

fn cross_keep(t: usize, memory: &Memory) -> Vec<bool> {
    (0..t).flat_map(|_| memory.keep.iter().copied()).collect()
}

/// Hidden states after the final norm, `T x d`.
pub fn decoder_hidden(
    tape: &mut Tape,
    bound: &Bound,
    p: &DecoderParams,
    tokens: &[usize],
    memory: &Memory,
) -> Result<Var, ModelError> {
    let t = tokens.len();
    if t > p.max_positions {
        return Err(ModelError::SequenceTooLong {
            len: t,
            max: p.max_positions,
        });
    }
    if t == 0 {
        return Err(ModelError::EmptySequence);
    }
    let emb = tape.embedding_lookup(bound.var(p.tok_emb), tokens)?;
    let pos = match &p.positions {
        Positions::Learned(id) => tape.slice_rows(bound.var(*id), 0, t)?,
        Positions::Sinusoidal(table) => {
            let rows = Tensor::new(t, table.cols, table.data[..t * table.cols].to_vec())?;
            tape.constant(rows)
        }
    };
    let mut x = tape.add(emb, pos)?;
    let self_keep = causal_keep(t);
    let mem_keep = cross_keep(t, memory);
    for l in &p.layers {
        let a = multi_head(tape, bound, &l.self_attn, x, x, Some(&self_keep), p.dropout)?;
        let r = tape.add(x, a)?;
        x = l.norm_self.apply(tape, bound, r)?;

        let c = multi_head(tape, bound, &l.cross_attn, x, memory.value, Some(&mem_keep), p.dropout)?;
        let r = tape.add(x, c)?;
        x = l.norm_cross.apply(tape, bound, r)?;

        let h = tape.matmul(x, bound.var(l.w1))?;
        let h = tape.add(h, bound.var(l.b1))?;
        let h = tape.relu(h);
        let h = tape.dropout(h, p.dropout);
        let f = tape.matmul(h, bound.var(l.w2))?;
        let f = tape.add(f, bound.var(l.b2))?;
        let r = tape.add(x, f)?;
        x = l.norm_ffn.apply(tape, bound, r)?;
    }
    p.norm_final.apply(tape, bound, x)
}

pub fn project(tape: &mut Tape, bound: &Bound, p: &DecoderParams, hidden: Var) -> Result<Var, ModelError> {
    let y = tape.matmul(hidden, bound.var(p.out_w))?;
    Ok(tape.add(y, bound.var(p.out_b))?)
}

/// Logits `T x n_tokens` for a teacher-forced input sequence.
pub fn decoder_forward(
    tape: &mut Tape,
    bound: &Bound,
    p: &DecoderParams,
    tokens: &[usize],
    memory: &Memory,
) -> Result<Var, ModelError> {
    let h = decoder_hidden(tape, bound, p, tokens, memory)?;
    project(tape, bound, p, h)
}
