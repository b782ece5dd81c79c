use rand::Rng;

use crate::autodiff::{glorot_uniform, Bound, ParamId, ParamStore, Tape, Var};

use super::ModelError;

/// Scaled dot-product attention. `keep` is a flat `T_q x T_k` mask where
/// false marks a disallowed key; those weights are exactly zero.
pub fn attention(
    tape: &mut Tape,
    q: Var,
    k: Var,
    v: Var,
    keep: Option<&[bool]>,
    dropout: f64,
) -> Result<Var, ModelError> {
    let dk = tape.value(q).cols;
    let kt = tape.transpose(k);
    let logits = tape.matmul(q, kt)?;
    let logits = tape.scale(logits, 1.0 / (dk as f64).sqrt());
    let w = tape.softmax_rows(logits, keep)?;
    let w = tape.dropout(w, dropout);
    Ok(tape.matmul(w, v)?)
}

/// Projections of one multi-head attention block. Q/K/V have no bias.
#[derive(Debug, Clone, Copy)]
pub struct MhaParams {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
    pub wo: ParamId,
    pub heads: usize,
}

impl MhaParams {
    /// Registers `{prefix}.{Wq,Wk,Wv,Wo}`, each `d x d`; head i owns
    /// columns `i*d_k .. (i+1)*d_k` of Wq, Wk and Wv.
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        d: usize,
        heads: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        if heads == 0 || d % heads != 0 {
            return Err(ModelError::Config(format!(
                "d_model {d} is not divisible by {heads} heads"
            )));
        }
        Ok(MhaParams {
            wq: store.insert(&format!("{prefix}.Wq"), glorot_uniform(d, d, rng))?,
            wk: store.insert(&format!("{prefix}.Wk"), glorot_uniform(d, d, rng))?,
            wv: store.insert(&format!("{prefix}.Wv"), glorot_uniform(d, d, rng))?,
            wo: store.insert(&format!("{prefix}.Wo"), glorot_uniform(d, d, rng))?,
            heads,
        })
    }
}

pub fn multi_head(
    tape: &mut Tape,
    bound: &Bound,
    p: &MhaParams,
    q_in: Var,
    kv_in: Var,
    keep: Option<&[bool]>,
    dropout: f64,
) -> Result<Var, ModelError> {
    let q = tape.matmul(q_in, bound.var(p.wq))?;
    let k = tape.matmul(kv_in, bound.var(p.wk))?;
    let v = tape.matmul(kv_in, bound.var(p.wv))?;
    let d = tape.value(q).cols;
    let dk = d / p.heads;
    let mut outs = Vec::with_capacity(p.heads);
    for h in 0..p.heads {
        let qh = tape.slice_cols(q, h * dk, dk)?;
        let kh = tape.slice_cols(k, h * dk, dk)?;
        let vh = tape.slice_cols(v, h * dk, dk)?;
        outs.push(attention(tape, qh, kh, vh, keep, dropout)?);
    }
    let cat = tape.concat_cols(&outs)?;
    Ok(tape.matmul(cat, bound.var(p.wo))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn attend(q: Tensor, k: Tensor, v: Tensor, keep: Option<&[bool]>) -> Tensor {
        let mut t = Tape::new();
        let (q, k, v) = (t.constant(q), t.constant(k), t.constant(v));
        let y = attention(&mut t, q, k, v, keep, 0.0).unwrap();
        t.value(y).clone()
    }

    #[test]
    fn single_key_returns_its_value() {
        let v = Tensor::from_rows(&[vec![4.0, -1.0, 0.5]]).unwrap();
        let q = Tensor::from_rows(&[vec![9.0, 3.0], vec![-2.0, 0.1]]).unwrap();
        let k = Tensor::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let out = attend(q, k, v.clone(), None);
        assert_eq!(out.row(0), v.row(0));
        assert_eq!(out.row(1), v.row(0));
    }

    #[test]
    fn orthogonal_query_averages_values() {
        let q = Tensor::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let k = Tensor::from_rows(&[vec![0.0, 1.0], vec![0.0, -3.0], vec![0.0, 2.0]]).unwrap();
        let v = Tensor::from_rows(&[vec![3.0], vec![6.0], vec![0.0]]).unwrap();
        let out = attend(q, k, v, None);
        assert!((out.item() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn hand_softmax_quarter_three_quarters() {
        // d_k = 1, logits 0 and ln 3
        let q = Tensor::scalar(1.0);
        let k = Tensor::new(2, 1, vec![0.0, 3f64.ln()]).unwrap();
        let v = Tensor::identity(2);
        let out = attend(q, k, v, None);
        assert!((out.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((out.get(0, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn masked_key_gets_zero_weight() {
        let q = Tensor::scalar(1.0);
        let k = Tensor::new(2, 1, vec![0.0, 50.0]).unwrap();
        let v = Tensor::identity(2);
        let out = attend(q, k, v, Some(&[true, false]));
        assert_eq!(out.data, vec![1.0, 0.0]);
    }

    #[test]
    fn one_head_is_attention_then_output_projection() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut s = ParamStore::new();
        let p = MhaParams::init(&mut s, "m", 4, 1, &mut rng).unwrap();
        let x = glorot_uniform(3, 4, &mut rng);
        let mut t = Tape::new();
        let b = s.bind(&mut t);
        let xv = t.constant(x.clone());
        let y = multi_head(&mut t, &b, &p, xv, xv, None, 0.0).unwrap();
        let y = t.value(y).clone();

        let mut t2 = Tape::new();
        let q = t2.constant(x.matmul(s.get(p.wq)).unwrap());
        let k = t2.constant(x.matmul(s.get(p.wk)).unwrap());
        let v = t2.constant(x.matmul(s.get(p.wv)).unwrap());
        let a = attention(&mut t2, q, k, v, None, 0.0).unwrap();
        let expect = t2.value(a).matmul(s.get(p.wo)).unwrap();
        assert_eq!(y, expect);
    }

    #[test]
    fn rejects_indivisible_heads() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(MhaParams::init(&mut ParamStore::new(), "m", 6, 4, &mut rng).is_err());
    }
}
