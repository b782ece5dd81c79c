use gmmlg::autodiff::{grad_check, Axis, Tape, Tensor, TensorError, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::rc::Rc;

const TOL: f64 = 1e-4;
const EPS: f64 = 1e-5;

/// Random values kept away from 0 so kinked activations are differentiable
/// within the finite-difference step.
fn rand_t(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| {
            let x: f64 = rng.gen_range(-1.0..1.0);
            x + 0.05 * x.signum()
        })
        .collect();
    Tensor::new(rows, cols, data).unwrap()
}

/// Reduces any output to a scalar with fixed random weights so every
/// output coordinate contributes a distinct amount.
fn weighted_sum(t: &mut Tape, y: Var, seed: u64) -> Result<Var, TensorError> {
    let shape = t.value(y).shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let w = t.constant(rand_t(shape[0], shape[1], &mut rng));
    let p = t.mul(y, w)?;
    Ok(t.sum(p, Axis::All))
}

fn check<F>(inputs: Vec<Tensor>, seed: u64, f: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    grad_check(
        |t, v| {
            let y = f(t, v)?;
            weighted_sum(t, y, seed)
        },
        &inputs,
        EPS,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matmul(m in 1usize..=16, k in 1usize..=16, n in 1usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let err = check(vec![rand_t(m, k, &mut rng), rand_t(k, n, &mut rng)], seed, |t, v| t.matmul(v[0], v[1]));
        prop_assert!(err < TOL, "{}", err);
    }

    #[test]
    fn add_mul_broadcasts(m in 1usize..=16, n in 1usize..=16, kind in 0usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = match kind {
            0 => rand_t(m, n, &mut rng),
            1 => rand_t(1, n, &mut rng),
            2 => rand_t(m, 1, &mut rng),
            _ => rand_t(1, 1, &mut rng),
        };
        let a = rand_t(m, n, &mut rng);
        let err = check(vec![a.clone(), b.clone()], seed, |t, v| t.add(v[0], v[1]));
        prop_assert!(err < TOL, "add {}", err);
        let err = check(vec![a.clone(), b.clone()], seed, |t, v| t.sub(v[0], v[1]));
        prop_assert!(err < TOL, "sub {}", err);
        let err = check(vec![a, b], seed, |t, v| t.mul(v[0], v[1]));
        prop_assert!(err < TOL, "mul {}", err);
    }

    #[test]
    fn shape_ops(m in 1usize..=16, n in 2usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rand_t(m, n, &mut rng);
        let b = rand_t(m, n, &mut rng);
        let ops: Vec<Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>>> = vec![
            Box::new(|t, v| Ok(t.transpose(v[0]))),
            Box::new(|t, v| Ok(t.scale(v[0], -1.7))),
            Box::new(|t, v| t.concat_cols(&[v[0], v[1], v[0]])),
            Box::new(|t, v| t.concat_rows(&[v[1], v[0]])),
            Box::new(|t, v| t.slice_cols(v[0], 1, t.value(v[0]).cols - 1)),
            Box::new(|t, v| t.slice_rows(v[1], 0, 1)),
            Box::new(|t, v| Ok(t.sum(v[0], Axis::Rows))),
            Box::new(|t, v| Ok(t.sum(v[0], Axis::Cols))),
            Box::new(|t, v| Ok(t.mean(v[0], Axis::All))),
            Box::new(|t, v| { let r = t.slice_rows(v[0], 0, 1)?; t.repeat_rows(r, 3) }),
        ];
        for (i, op) in ops.iter().enumerate() {
            let err = check(vec![a.clone(), b.clone()], seed, op);
            prop_assert!(err < TOL, "op {} err {}", i, err);
        }
    }

    #[test]
    fn gather_scatter_sparse(rows in 1usize..=16, cols in 1usize..=16, k in 1usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = rand_t(rows, cols, &mut rng);
        let ids: Vec<usize> = (0..k).map(|_| rng.gen_range(0..rows)).collect();
        let ids2 = ids.clone();
        let err = check(vec![table.clone()], seed, move |t, v| t.gather_rows(v[0], &ids2));
        prop_assert!(err < TOL, "gather {}", err);
        let idx: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..k)).collect();
        let err = check(vec![table.clone()], seed, move |t, v| t.scatter_add_rows(v[0], &idx, k));
        prop_assert!(err < TOL, "scatter {}", err);
        let sparse: Vec<Vec<(usize, f64)>> = (0..k)
            .map(|_| (0..2).map(|_| (rng.gen_range(0..rows), rng.gen_range(0.5..3.0))).collect())
            .collect();
        let sparse = Rc::new(sparse);
        let err = check(vec![table], seed, move |t, v| t.sparse_matmul(sparse.clone(), v[0]));
        prop_assert!(err < TOL, "sparse {}", err);
    }

    #[test]
    fn activations(m in 1usize..=16, n in 1usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rand_t(m, n, &mut rng);
        let err = check(vec![a.clone()], seed, |t, v| Ok(t.leaky_relu(v[0], 0.2)));
        prop_assert!(err < TOL, "leaky {}", err);
        let err = check(vec![a.clone()], seed, |t, v| Ok(t.relu(v[0])));
        prop_assert!(err < TOL, "relu {}", err);
        let err = check(vec![a], seed, |t, v| Ok(t.elu(v[0], 1.0)));
        prop_assert!(err < TOL, "elu {}", err);
    }

    #[test]
    fn softmaxes(m in 1usize..=16, n in 2usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rand_t(m, n, &mut rng);
        let mask: Vec<bool> = (0..m * n).map(|i| i % n == 0 || rng.gen_bool(0.6)).collect();
        let err = check(vec![a.clone()], seed, |t, v| t.softmax_rows(v[0], None));
        prop_assert!(err < TOL, "softmax {}", err);
        let err = check(vec![a], seed, move |t, v| t.softmax_rows(v[0], Some(&mask)));
        prop_assert!(err < TOL, "masked softmax {}", err);
        let e = rand_t(m * n, 1, &mut rng);
        let seg: Vec<usize> = (0..m * n).map(|_| rng.gen_range(0..m)).collect();
        let err = check(vec![e], seed, move |t, v| t.segment_softmax(v[0], &seg, m));
        prop_assert!(err < TOL, "segment {}", err);
    }

    // With two columns the normalized output is nearly constant (+-1), so
    // input gradients shrink to O(eps) and finite differences lose precision.
    #[test]
    fn layer_norm(m in 1usize..=16, n in 3usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = vec![rand_t(m, n, &mut rng), rand_t(1, n, &mut rng), rand_t(1, n, &mut rng)];
        let err = check(inputs, seed, |t, v| t.layer_norm(v[0], v[1], v[2], 1e-5));
        prop_assert!(err < TOL, "{}", err);
    }

    #[test]
    fn cross_entropy(m in 1usize..=16, c in 2usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = rand_t(m, c, &mut rng);
        let mut targets: Vec<usize> = (0..m).map(|_| rng.gen_range(0..c)).collect();
        targets[0] = 1;
        let err = grad_check(|t, v| t.cross_entropy_masked(v[0], &targets, 0), &[logits], EPS).unwrap();
        prop_assert!(err < TOL, "{}", err);
    }

    #[test]
    fn softmax_rows_sum_to_one(m in 1usize..=16, n in 1usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask: Vec<bool> = (0..m * n).map(|i| i % n == 0 || rng.gen_bool(0.5)).collect();
        let mut t = Tape::new();
        let x = t.constant(rand_t(m, n, &mut rng).map(|v| v * 30.0));
        let y = t.softmax_rows(x, Some(&mask)).unwrap();
        let y = t.value(y);
        for r in 0..m {
            let s: f64 = y.row(r).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
            for c in 0..n {
                if !mask[r * n + c] {
                    prop_assert_eq!(y.get(r, c), 0.0);
                }
            }
        }
    }
}

#[test]
fn dropout_gradient_uses_same_mask() {
    let mut t = Tape::training(5);
    let x = t.param(Tensor::filled(8, 8, 1.0));
    let y = t.dropout(x, 0.3);
    let s = t.sum(y, Axis::All);
    let g = t.backward(s).unwrap();
    assert_eq!(g.get(x).unwrap().data, t.value(y).data);
}

#[test]
fn forward_and_backward_are_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut t = Tape::training(7);
        let a = t.param(rand_t(6, 5, &mut rng));
        let b = t.param(rand_t(5, 4, &mut rng));
        let y = t.matmul(a, b).unwrap();
        let y = t.dropout(y, 0.2);
        let y = t.softmax_rows(y, None).unwrap();
        let l = t.cross_entropy_masked(y, &[1, 2, 3, 0, 1, 2], 0).unwrap();
        let g = t.backward(l).unwrap();
        (t.value(l).clone(), g.of(a, &t), g.of(b, &t))
    };
    assert_eq!(run(), run());
}
