use rand::Rng;

use crate::autodiff::{glorot_uniform, Bound, ParamId, ParamStore, Tape, Tensor, Var};

use super::ModelError;

/// Two-layer MLP over `[atom embedding | global embedding]`.
#[derive(Debug, Clone, Copy)]
pub struct FusionParams {
    pub w0: ParamId,
    pub b0: ParamId,
    pub w1: ParamId,
    pub b1: ParamId,
}

impl FusionParams {
    pub fn init(
        store: &mut ParamStore,
        atom_dim: usize,
        global_dim: usize,
        d_model: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        Ok(FusionParams {
            w0: store.insert("fusion.0.W", glorot_uniform(atom_dim + global_dim, d_model, rng))?,
            b0: store.insert("fusion.0.b", Tensor::zeros(1, d_model))?,
            w1: store.insert("fusion.1.W", glorot_uniform(d_model, d_model, rng))?,
            b1: store.insert("fusion.1.b", Tensor::zeros(1, d_model))?,
        })
    }
}

/// Decoder memory: one row per atom position plus a validity mask.
#[derive(Debug, Clone)]
pub struct Memory {
    pub value: Var,
    /// `keep[t]` is false for padding rows.
    pub keep: Vec<bool>,
}

impl Memory {
    pub fn rows(&self) -> usize {
        self.keep.len()
    }

    pub fn valid(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// Builds the memory sequence. With `trim` the padding rows are left out;
/// masked rows never change the decoder output, so both layouts produce the
/// same logits.
#[allow(clippy::too_many_arguments)]
pub fn serialize_and_fuse(
    tape: &mut Tape,
    bound: &Bound,
    p: &FusionParams,
    atom_emb: Var,
    global_emb: Var,
    max_atoms: usize,
    trim: bool,
) -> Result<Memory, ModelError> {
    let n_atoms = tape.value(atom_emb).rows;
    if n_atoms > max_atoms {
        return Err(ModelError::TooManyAtoms {
            n_atoms,
            max_atoms,
        });
    }
    let g = tape.repeat_rows(global_emb, n_atoms)?;
    let x = tape.concat_cols(&[atom_emb, g])?;
    let h = tape.matmul(x, bound.var(p.w0))?;
    let h = tape.add(h, bound.var(p.b0))?;
    let h = tape.relu(h);
    let y = tape.matmul(h, bound.var(p.w1))?;
    let y = tape.add(y, bound.var(p.b1))?;
    if trim || n_atoms == max_atoms {
        return Ok(Memory {
            value: y,
            keep: vec![true; n_atoms],
        });
    }
    let d = tape.value(y).cols;
    let pad = tape.constant(Tensor::zeros(max_atoms - n_atoms, d));
    let value = tape.concat_rows(&[y, pad])?;
    let mut keep = vec![true; n_atoms];
    keep.resize(max_atoms, false);
    Ok(Memory { value, keep })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ParamStore, FusionParams, Tensor, Tensor) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = ParamStore::new();
        let p = FusionParams::init(&mut s, 3, 3, 4, &mut rng).unwrap();
        (s, p, glorot_uniform(3, 3, &mut rng), glorot_uniform(1, 3, &mut rng))
    }

    fn fuse(s: &ParamStore, p: &FusionParams, atoms: &Tensor, g: &Tensor, max: usize) -> (Tensor, Vec<bool>) {
        let mut t = Tape::new();
        let b = s.bind(&mut t);
        let (a, g) = (t.constant(atoms.clone()), t.constant(g.clone()));
        let m = serialize_and_fuse(&mut t, &b, p, a, g, max, false).unwrap();
        (t.value(m.value).clone(), m.keep)
    }

    #[test]
    fn mask_counts() {
        let (s, p, atoms, g) = setup();
        let (v, keep) = fuse(&s, &p, &atoms, &g, 3);
        assert_eq!(keep, vec![true; 3]);
        assert_eq!(v.rows, 3);
        let one = Tensor::from_rows(&[atoms.row(0).to_vec()]).unwrap();
        let (v, keep) = fuse(&s, &p, &one, &g, 5);
        assert_eq!(keep, vec![true, false, false, false, false]);
        assert!(v.data[4..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn too_many_atoms() {
        let (s, p, atoms, g) = setup();
        let mut t = Tape::new();
        let b = s.bind(&mut t);
        let (a, g) = (t.constant(atoms), t.constant(g));
        let err = serialize_and_fuse(&mut t, &b, &p, a, g, 2, false).unwrap_err();
        assert!(matches!(err, ModelError::TooManyAtoms { n_atoms: 3, max_atoms: 2 }));
    }

    #[test]
    fn atom_permutation_permutes_rows() {
        let (s, p, atoms, g) = setup();
        let (base, _) = fuse(&s, &p, &atoms, &g, 4);
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for perm in perms {
            let rows: Vec<Vec<f64>> = perm.iter().map(|&i| atoms.row(i).to_vec()).collect();
            let (out, _) = fuse(&s, &p, &Tensor::from_rows(&rows).unwrap(), &g, 4);
            for (new, &old) in perm.iter().enumerate() {
                assert_eq!(out.row(new), base.row(old));
            }
        }
    }
}
