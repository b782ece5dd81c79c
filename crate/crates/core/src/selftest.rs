//! Quick built-in checks run by `gmmlg selftest`: finite-difference
//! gradients, count oracles for graph weights, fragmentation golden cases
//! and canonical round trips.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{glorot_uniform, grad_check, Axis, Bound, ParamStore, Tape, TensorError, Var};
use crate::chem::{parse_smiles, perceive, write_canonical};
use crate::frag::{fragment_molecule, motifs_of, BricsRuleTable};
use crate::graph::{
    build_association_graph, build_vocabulary, featurize_molecule, CorpusMolecule, EdgeKind,
    FeatureStats,
};
use crate::model::{gat_forward, AssocInput, GatGraph, GatInput, GatStack, Model, ModelConfig, MolInput, BOS, EOS, PAD};
use crate::pipeline::evaluate;

pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

const GRAD_TOL: f64 = 1e-4;

fn grad_ok(err: Result<f64, TensorError>) -> Result<(), String> {
    match err {
        Ok(e) if e < GRAD_TOL => Ok(()),
        Ok(e) => Err(format!("max relative error {e:.3e}")),
        Err(e) => Err(e.to_string()),
    }
}

fn ops() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inputs = vec![
        glorot_uniform(4, 5, &mut rng),
        glorot_uniform(5, 6, &mut rng),
        glorot_uniform(1, 6, &mut rng),
        glorot_uniform(1, 6, &mut rng),
    ];
    grad_ok(grad_check(
        |t, v| {
            let h = t.matmul(v[0], v[1])?;
            let h = t.layer_norm(h, v[2], v[3], 1e-5)?;
            let h = t.elu(h, 1.0);
            let h = t.leaky_relu(h, 0.2);
            let p = t.softmax_rows(h, None)?;
            let s = t.mul(p, h)?;
            let l = t.cross_entropy_masked(h, &[1, 0, 5, 2], 0)?;
            let s = t.sum(s, Axis::All);
            t.add(s, l)
        },
        &inputs,
        1e-5,
    ))
}

fn gat_layer() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut store = ParamStore::new();
    let stack = GatStack::init(&mut store, "g", 3, 4, 2, 1, 2, &mut rng).map_err(|e| e.to_string())?;
    let edges = [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2)];
    let feats: Vec<Vec<f64>> = edges.iter().map(|_| vec![rng.gen(), rng.gen()]).collect();
    let graph = GatGraph::with_self_loops(3, &edges, &feats, 2).map_err(|e| e.to_string())?;
    let mut inputs = vec![glorot_uniform(3, 3, &mut rng)];
    inputs.extend(store.tensors().iter().cloned());
    grad_ok(grad_check(
        |t, v| {
            let b = Bound::from_vars(v[1..].to_vec());
            let y = gat_forward(t, &b, &stack, GatInput::Dense(v[0]), &graph)
                .map_err(|e| TensorError::Checkpoint(e.to_string()))?;
            let sq = t.mul(y, y)?;
            Ok(t.sum(sq, Axis::All))
        },
        &inputs,
        1e-5,
    ))
}

fn full_model() -> Result<(), String> {
    let rules = BricsRuleTable::builtin();
    let mut corpus = Vec::new();
    let mut feats = Vec::new();
    for (i, s) in ["ClCc1ccccc1", "CCc1ccccc1"].iter().enumerate() {
        let p = perceive(&parse_smiles(s).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        corpus.push(CorpusMolecule::from_fragmentation(&format!("d{i}"), &p, &fragment_molecule(&p, &rules)));
        feats.push(featurize_molecule(&p));
    }
    let stats = FeatureStats::fit(feats.iter());
    feats.iter_mut().for_each(|g| stats.apply(g));
    let docs: Vec<(String, Vec<String>)> = corpus.iter().map(|c| (c.drug_id.clone(), c.motifs.clone())).collect();
    let vocab = build_vocabulary(&docs).map_err(|e| e.to_string())?;
    let assoc = build_association_graph(&corpus, &vocab).map_err(|e| e.to_string())?;
    let assoc_in = AssocInput::new(&assoc).map_err(|e| e.to_string())?;
    let mol = MolInput::new(&feats[0]).map_err(|e| e.to_string())?;
    let node = assoc.molecule_node("d0").ok_or("molecule node missing")?;
    let cfg = ModelConfig {
        d_model: 8,
        gat_layers: 1,
        dec_layers: 1,
        dec_heads: 2,
        max_len: 4,
        max_atoms: 16,
        dropout: 0.0,
        ..ModelConfig::new(8, vocab.len())
    };
    let mut model = Model::new(cfg, 1).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in model.params.tensors_mut() {
        t.data.iter_mut().for_each(|x| *x += rng.gen_range(-0.5..0.5));
    }
    let loss = |t: &mut Tape, v: &[Var]| -> Result<Var, TensorError> {
        let b = Bound::from_vars(v.to_vec());
        let wrap = |e: crate::model::ModelError| TensorError::Checkpoint(e.to_string());
        let emb = model.encode_association(t, &b, &assoc_in).map_err(wrap)?;
        let mem = model.memory(t, &b, &mol, &assoc_in, emb, node, false).map_err(wrap)?;
        let logits = model.decoder_forward(t, &b, &[BOS, 5, 6], &mem).map_err(wrap)?;
        t.cross_entropy_masked(logits, &[5, 6, EOS], PAD)
    };
    grad_ok(grad_check(loss, model.params.tensors(), 1e-5))
}

fn graph_weights() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let corpus: Vec<CorpusMolecule> = (0..rng.gen_range(2..10))
            .map(|k| {
                let len = rng.gen_range(1..5);
                CorpusMolecule {
                    drug_id: format!("D{k}"),
                    motifs: (0..len).map(|_| format!("M{}", rng.gen_range(0..6))).collect(),
                    adjacent: (1..len).map(|j| (j - 1, j)).collect(),
                }
            })
            .collect();
        let docs: Vec<(String, Vec<String>)> = corpus.iter().map(|c| (c.drug_id.clone(), c.motifs.clone())).collect();
        let vocab = build_vocabulary(&docs).map_err(|e| e.to_string())?;
        let g = build_association_graph(&corpus, &vocab).map_err(|e| e.to_string())?;
        let n = corpus.len() as f64;
        let has = |c: &CorpusMolecule, m: &str| c.motifs.iter().any(|s| s == m);
        let df = |m: &str| corpus.iter().filter(|c| has(c, m)).count() as f64;
        for e in &g.edges {
            let expect = match e.kind {
                EdgeKind::MolMotif => {
                    let c = corpus.iter().find(|c| g.molecule_node(&c.drug_id) == Some(e.u)).ok_or("molecule")?;
                    let m = &vocab.entries[e.v].canonical;
                    c.motifs.iter().filter(|s| *s == m).count() as f64 * (n / (1.0 + df(m))).ln()
                }
                EdgeKind::MotifMotif => {
                    let (a, b) = (&vocab.entries[e.u].canonical, &vocab.entries[e.v].canonical);
                    let both = corpus.iter().filter(|c| has(c, a) && has(c, b)).count() as f64;
                    if both == 0.0 {
                        0.0
                    } else {
                        (both * n / (df(a) * df(b))).ln().max(0.0)
                    }
                }
            };
            if (e.weight - expect).abs() > 1e-12 * expect.abs().max(1.0) {
                return Err(format!("edge {}-{}: {} vs oracle {}", e.u, e.v, e.weight, expect));
            }
        }
    }
    Ok(())
}

fn fragmentation() -> Result<(), String> {
    let rules = BricsRuleTable::builtin();
    for (smiles, expect) in [("ClCc1ccccc1", 2), ("CC(C)(C)C", 5), ("CCc1ccccc1", 2)] {
        let p = perceive(&parse_smiles(smiles).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let n = motifs_of(&p, &rules).len();
        if n != expect {
            return Err(format!("{smiles}: {n} motifs, expected {expect}"));
        }
    }
    Ok(())
}

fn canonical_round_trip() -> Result<(), String> {
    for s in ["CC(=O)Oc1ccccc1C(=O)O", "C1CCCCC1", "N[C@@H](C)C(=O)O", "c1ccncc1", "F/C=C/F", "[NH4+]"] {
        let canon = |t: &str| -> Result<String, String> {
            let m = parse_smiles(t).map_err(|e| format!("{t}: {e}"))?;
            write_canonical(&m, &m.all_atoms()).map_err(|e| e.to_string())
        };
        let once = canon(s)?;
        let twice = canon(&once)?;
        if once != twice {
            return Err(format!("{s}: {once} then {twice}"));
        }
    }
    Ok(())
}

fn set_metrics() -> Result<(), String> {
    let p: Vec<BTreeSet<u8>> = vec![[1, 2, 3].into()];
    let t: Vec<BTreeSet<u8>> = vec![[1, 2, 4].into()];
    let m = evaluate(&p, &t).map_err(|e| e.to_string())?;
    if (m.tp, m.fp, m.fn_) != (2, 1, 1) || (m.f1 - 2.0 / 3.0).abs() > 1e-15 {
        return Err(format!("{m:?}"));
    }
    Ok(())
}

pub fn run_selftest() -> Vec<CheckResult> {
    let checks: [(&'static str, fn() -> Result<(), String>); 7] = [
        ("autodiff ops", ops),
        ("GAT layer gradients", gat_layer),
        ("full model gradients", full_model),
        ("TF-IDF/PMI count oracle", graph_weights),
        ("fragmentation golden cases", fragmentation),
        ("canonical round trip", canonical_round_trip),
        ("set metrics", set_metrics),
    ];
    checks
        .into_iter()
        .map(|(name, f)| CheckResult { name, outcome: f() })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_pass() {
        for r in super::run_selftest() {
            assert!(r.outcome.is_ok(), "{}: {:?}", r.name, r.outcome);
        }
    }
}
