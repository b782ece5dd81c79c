mod common;

use common::checks;
use gmmlg::autodiff::{glorot_uniform, grad_check, Bound, ParamStore, Tape, Tensor, Var};
use gmmlg::model::{
    gat_layer, multi_head, GatGraph, GatHead, GatInput, GatLayer, GenerateOptions, MhaParams,
    Model, ModelConfig, ModelError, BOS, EOS, PAD, UNK,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config(n_tokens: usize, motif_vocab: usize) -> ModelConfig {
    ModelConfig {
        d_model: 8,
        gat_heads: 2,
        gat_layers: 2,
        dec_layers: 2,
        dec_heads: 2,
        max_len: 6,
        max_atoms: 16,
        n_tokens,
        motif_vocab,
        dropout: 0.0,
        sinusoidal_pos: false,
    }
}

#[test]
fn architectural_invariants_hold_on_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        checks::causality(&mut rng).unwrap_or_else(|e| panic!("case {case}: {e}"));
        checks::attention_rows(&mut rng).unwrap_or_else(|e| panic!("case {case}: {e}"));
        checks::memory_mask(&mut rng).unwrap_or_else(|e| panic!("case {case}: {e}"));
        checks::gat_locality(&mut rng).unwrap_or_else(|e| panic!("case {case}: {e}"));
    }
}

/// Index-by-index evaluation of one GAT layer.
fn gat_oracle(
    x: &Tensor,
    heads: &[(Tensor, Tensor, Tensor)],
    edges: &[(usize, usize)],
    feats: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let n = x.rows;
    let mut all_edges: Vec<(usize, usize, Vec<f64>)> = edges
        .iter()
        .zip(feats)
        .map(|(&(s, d), f)| (s, d, f.clone()))
        .collect();
    let ed = feats.first().map_or(heads[0].1.rows - 2 * heads[0].0.cols, |f| f.len());
    for i in 0..n {
        all_edges.push((i, i, vec![0.0; ed]));
    }
    let dim = heads[0].0.cols;
    let mut out = vec![vec![0.0; dim]; n];
    for (w, a, u) in heads {
        let h: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..dim)
                    .map(|c| (0..x.cols).map(|k| x.get(i, k) * w.get(k, c)).sum())
                    .collect()
            })
            .collect();
        for i in 0..n {
            let incoming: Vec<&(usize, usize, Vec<f64>)> =
                all_edges.iter().filter(|e| e.1 == i).collect();
            let scores: Vec<f64> = incoming
                .iter()
                .map(|(j, _, f)| {
                    let mut s = 0.0;
                    for c in 0..dim {
                        s += a.data[c] * h[i][c] + a.data[dim + c] * h[*j][c];
                    }
                    for (c, fv) in f.iter().enumerate() {
                        s += a.data[2 * dim + c] * fv;
                    }
                    if s > 0.0 {
                        s
                    } else {
                        0.2 * s
                    }
                })
                .collect();
            let z: f64 = scores.iter().map(|s| s.exp()).sum();
            for ((j, _, _), s) in incoming.iter().zip(&scores) {
                let alpha = s.exp() / z;
                for c in 0..dim {
                    let hu: f64 = (0..dim).map(|k| h[*j][k] * u.get(k, c)).sum();
                    out[i][c] += alpha * hu / heads.len() as f64;
                }
            }
        }
    }
    for row in &mut out {
        for v in row.iter_mut() {
            if *v <= 0.0 {
                *v = v.exp_m1();
            }
        }
    }
    out
}

#[test]
fn gat_layer_matches_brute_force_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let (in_dim, dim, ed, k) = (
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
        );
        let mut edges = Vec::new();
        for s in 0..n {
            for d in 0..n {
                if s != d && rng.gen_bool(0.5) {
                    edges.push((s, d));
                }
            }
        }
        let feats: Vec<Vec<f64>> = edges
            .iter()
            .map(|_| (0..ed).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let heads: Vec<(Tensor, Tensor, Tensor)> = (0..k)
            .map(|_| {
                (
                    glorot_uniform(in_dim, dim, &mut rng),
                    glorot_uniform(2 * dim + ed, 1, &mut rng),
                    glorot_uniform(dim, dim, &mut rng),
                )
            })
            .collect();
        let x = glorot_uniform(n, in_dim, &mut rng).map(|v| 2.0 * v);

        let mut store = ParamStore::new();
        let layer = GatLayer {
            heads: heads
                .iter()
                .enumerate()
                .map(|(i, (w, a, u))| GatHead {
                    w: store.insert(&format!("{i}.W"), w.clone()).unwrap(),
                    a: store.insert(&format!("{i}.a"), a.clone()).unwrap(),
                    u: store.insert(&format!("{i}.U"), u.clone()).unwrap(),
                })
                .collect(),
            out_dim: dim,
        };
        let graph = GatGraph::with_self_loops(n, &edges, &feats, ed).unwrap();
        let mut tape = Tape::new();
        let b = store.bind(&mut tape);
        let xv = tape.constant(x.clone());
        let y = gat_layer(&mut tape, &b, &layer, &GatInput::Dense(xv), &graph).unwrap();
        let y = tape.value(y);
        let expect = gat_oracle(&x, &heads, &edges, &feats);
        for i in 0..n {
            for c in 0..dim {
                assert!(
                    (y.get(i, c) - expect[i][c]).abs() < 1e-12,
                    "{} vs {}",
                    y.get(i, c),
                    expect[i][c]
                );
            }
        }
    }
}

#[test]
fn multi_head_matches_head_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let heads = 2;
        let d = heads * rng.gen_range(1..=3);
        let (tq, tk) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let mut store = ParamStore::new();
        let p = MhaParams::init(&mut store, "m", d, heads, &mut rng).unwrap();
        let xq = glorot_uniform(tq, d, &mut rng);
        let xk = glorot_uniform(tk, d, &mut rng);
        let mut tape = Tape::new();
        let b = store.bind(&mut tape);
        let (qv, kv) = (tape.constant(xq.clone()), tape.constant(xk.clone()));
        let y = multi_head(&mut tape, &b, &p, qv, kv, None, 0.0).unwrap();
        let y = tape.value(y).clone();

        let q = xq.matmul(store.get(p.wq)).unwrap();
        let k = xk.matmul(store.get(p.wk)).unwrap();
        let v = xk.matmul(store.get(p.wv)).unwrap();
        let dk = d / heads;
        let mut cat = Tensor::zeros(tq, d);
        for h in 0..heads {
            for i in 0..tq {
                let logits: Vec<f64> = (0..tk)
                    .map(|j| {
                        (0..dk).map(|c| q.get(i, h * dk + c) * k.get(j, h * dk + c)).sum::<f64>()
                            / (dk as f64).sqrt()
                    })
                    .collect();
                let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|l| (l - mx).exp()).sum();
                for c in 0..dk {
                    let val: f64 = (0..tk)
                        .map(|j| (logits[j] - mx).exp() / z * v.get(j, h * dk + c))
                        .sum();
                    cat.set(i, h * dk + c, val);
                }
            }
        }
        let expect = cat.matmul(store.get(p.wo)).unwrap();
        for (a, e) in y.data.iter().zip(&expect.data) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}

#[test]
fn tied_heads_give_repeated_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut store = ParamStore::new();
    let p = MhaParams::init(&mut store, "m", 4, 2, &mut rng).unwrap();
    // copy head 0's columns into head 1 and use an identity output map
    for id in [p.wq, p.wk, p.wv] {
        let t = store.get_mut(id);
        for r in 0..4 {
            for c in 0..2 {
                let v = t.get(r, c);
                t.set(r, c + 2, v);
            }
        }
    }
    *store.get_mut(p.wo) = Tensor::identity(4);
    let x = glorot_uniform(3, 4, &mut rng);
    let mut tape = Tape::new();
    let b = store.bind(&mut tape);
    let xv = tape.constant(x);
    let y = multi_head(&mut tape, &b, &p, xv, xv, None, 0.0).unwrap();
    let y = tape.value(y);
    for r in 0..3 {
        assert_eq!(y.row(r)[..2], y.row(r)[2..]);
    }
}

#[test]
fn full_model_gradient_check() {
    let fx = common::fixture(&["ClCc1ccccc1", "CCc1ccccc1", "CC(=O)NC"]);
    let cfg = small_config(9, fx.vocab.len());
    let mut model = Model::new(cfg, 3).unwrap();
    // Move away from the small-scale init, where near-uniform attention makes
    // many gradients tiny and finite differences mostly measure round-off.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in model.params.tensors_mut() {
        for x in &mut t.data {
            *x += rng.gen_range(-0.5..0.5);
        }
    }
    let model = model;
    let tokens = [BOS, 5, 7, 4];
    let targets = [5, 7, 4, EOS];
    let loss = |t: &mut Tape, v: &[Var]| -> Result<Var, gmmlg::autodiff::TensorError> {
        let b = Bound::from_vars(v.to_vec());
        let run = |t: &mut Tape| -> Result<Var, ModelError> {
            let emb = model.encode_association(t, &b, &fx.assoc_in)?;
            let mut total = None;
            for (i, mol) in fx.mols.iter().enumerate().take(2) {
                let mem = model.memory(t, &b, mol, &fx.assoc_in, emb, fx.nodes[i], i == 0)?;
                let logits = model.decoder_forward(t, &b, &tokens, &mem)?;
                let l = t.cross_entropy_masked(logits, &targets, PAD)?;
                total = Some(match total {
                    None => l,
                    Some(acc) => t.add(acc, l)?,
                });
            }
            Ok(total.unwrap())
        };
        run(t).map_err(|e| match e {
            ModelError::Tensor(e) => e,
            other => panic!("{other}"),
        })
    };
    let err = grad_check(loss, model.params.tensors(), 1e-5).unwrap();
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn encode_molecule_shapes_and_symmetry() {
    // the two ethylbenzene copies share every motif and count
    let fx = common::fixture(&["ClCc1ccccc1", "CCc1ccccc1", "CCc1ccccc1"]);
    let model = Model::new(small_config(9, fx.vocab.len()), 1).unwrap();
    let mut tape = Tape::new();
    let b = model.params.bind(&mut tape);
    let emb = model.encode_association(&mut tape, &b, &fx.assoc_in).unwrap();
    let (atoms, global) = model
        .encode_molecule(&mut tape, &b, &fx.mols[0], &fx.assoc_in, emb, fx.nodes[0])
        .unwrap();
    assert_eq!(tape.value(atoms).shape(), [8, 8]);
    assert_eq!(tape.value(global).shape(), [1, 8]);
    assert!(tape.value(atoms).all_finite() && tape.value(global).all_finite());
    let e = tape.value(emb);
    assert_eq!(e.row(fx.nodes[1]), e.row(fx.nodes[2]));
    let motif_node = 0;
    assert!(matches!(
        model.encode_molecule(&mut tape, &b, &fx.mols[0], &fx.assoc_in, emb, motif_node),
        Err(ModelError::UnknownMoleculeNode { .. })
    ));
}

#[test]
fn isolated_molecule_depends_only_on_itself() {
    // Methane is one motif; its association graph is that motif plus the
    // molecule. Removing the edge leaves a global embedding computed from
    // the molecule's own features alone.
    let mut fx = common::fixture(&["C"]);
    fx.assoc.edges.clear();
    let assoc_in = gmmlg::model::AssocInput::new(&fx.assoc).unwrap();
    let model = Model::new(small_config(9, fx.vocab.len()), 1).unwrap();
    let global = |a: &gmmlg::model::AssocInput| {
        let mut tape = Tape::new();
        let b = model.params.bind(&mut tape);
        let emb = model.encode_association(&mut tape, &b, a).unwrap();
        tape.value(emb).row(fx.nodes[0]).to_vec()
    };
    let base = global(&assoc_in);
    let mut other = assoc_in.clone();
    let mut init = (*other.init).clone();
    init[0] = vec![(0, 5.0)];
    other.init = std::rc::Rc::new(init);
    assert_eq!(global(&other), base);
}

#[test]
fn decoder_errors_and_shapes() {
    let fx = common::fixture(&["CCO", "CCN"]);
    let model = Model::new(small_config(9, fx.vocab.len()), 1).unwrap();
    let mut tape = Tape::new();
    let b = model.params.bind(&mut tape);
    let emb = model.encode_association(&mut tape, &b, &fx.assoc_in).unwrap();
    let mem = model
        .memory(&mut tape, &b, &fx.mols[0], &fx.assoc_in, emb, fx.nodes[0], false)
        .unwrap();
    assert_eq!(mem.rows(), 16);
    assert_eq!(mem.valid(), 3);
    let y = model.decoder_forward(&mut tape, &b, &[BOS], &mem).unwrap();
    assert_eq!(tape.value(y).shape(), [1, 9]);
    let long = vec![BOS; 8];
    assert!(matches!(
        model.decoder_forward(&mut tape, &b, &long, &mem),
        Err(ModelError::SequenceTooLong { len: 8, max: 7 })
    ));
    let dead = gmmlg::model::Memory {
        value: tape.constant(Tensor::zeros(4, 8)),
        keep: vec![false; 4],
    };
    assert!(matches!(
        model.decoder_forward(&mut tape, &b, &[BOS], &dead),
        Err(ModelError::Tensor(gmmlg::autodiff::TensorError::AllPositionsMasked))
    ));
}

fn generation_model(n_labels: usize, seed: u64) -> (Model, Tensor, Vec<bool>) {
    let fx = common::fixture(&["CCO", "c1ccccc1O"]);
    let mut cfg = small_config(n_labels + 4, fx.vocab.len());
    cfg.d_model = 4;
    cfg.dec_layers = 1;
    cfg.max_len = 200;
    let model = Model::new(cfg, seed).unwrap();
    let (mem, keep) = model.memory_tensor(&fx.mols[1], &fx.assoc_in, fx.nodes[1]).unwrap();
    (model, mem, keep)
}

#[test]
fn generation_contract() {
    let opts = GenerateOptions {
        max_len: 200,
        allow_duplicates: false,
    };
    for seed in 0..10 {
        let (model, mem, keep) = generation_model(20, seed);
        let out = model.generate(&mem, &keep, opts).unwrap();
        let mut seen = std::collections::HashSet::new();
        for &t in &out {
            assert!(![PAD, BOS, EOS, UNK].contains(&t));
            assert!(seen.insert(t), "duplicate {t}");
        }
        assert!(out.len() <= 20);
    }

    let (mut model, mem, keep) = generation_model(20, 1);
    let out_b = model.params.id("dec.out.b").unwrap();
    model.params.get_mut(out_b).data[EOS] = 100.0;
    assert!(model.generate(&mem, &keep, opts).unwrap().is_empty());

    // EOS suppressed: decoding stops at the label cap
    let (mut model, mem, keep) = generation_model(230, 2);
    let out_b = model.params.id("dec.out.b").unwrap();
    model.params.get_mut(out_b).data[EOS] = -100.0;
    let out = model.generate(&mem, &keep, opts).unwrap();
    assert_eq!(out.len(), 200);
}
