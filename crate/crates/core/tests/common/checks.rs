//! Randomized architectural checks shared by the model tests and the
//! acceptance suite. Each returns a description of the first violation.

use gmmlg::autodiff::{glorot_uniform, ParamStore, Tape, Tensor};
use gmmlg::model::{
    attention, decoder_forward, gat_forward, DecoderParams, GatGraph, GatInput, GatStack, Memory,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub struct RandomDecoder {
    pub store: ParamStore,
    pub params: DecoderParams,
    pub d: usize,
    pub n_tokens: usize,
    pub max_positions: usize,
}

pub fn random_decoder(rng: &mut impl Rng) -> RandomDecoder {
    // d >= 4: with two columns a layer norm keeps only the sign pattern.
    let heads = rng.gen_range(1..=2);
    let d = if heads == 1 { rng.gen_range(4..=6) } else { 2 * rng.gen_range(2..=3) };
    let layers = rng.gen_range(1..=2);
    let n_tokens = rng.gen_range(6..=12);
    let max_positions = rng.gen_range(3..=9);
    let mut store = ParamStore::new();
    let mut init_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    let params = DecoderParams::init(
        &mut store,
        n_tokens,
        d,
        layers,
        heads,
        max_positions,
        rng.gen_bool(0.3),
        0.1,
        &mut init_rng,
    )
    .unwrap();
    // Small init scales make every check trivially pass; widen them.
    for t in store.tensors_mut() {
        for x in &mut t.data {
            *x += init_rng.gen_range(-0.5..0.5);
        }
    }
    RandomDecoder {
        store,
        params,
        d,
        n_tokens,
        max_positions,
    }
}

fn random_memory(rng: &mut impl Rng, d: usize) -> (Tensor, Vec<bool>) {
    let rows = rng.gen_range(1..=6);
    let mut keep: Vec<bool> = (0..rows).map(|_| rng.gen_bool(0.6)).collect();
    let k = rng.gen_range(0..rows);
    keep[k] = true;
    (glorot_uniform(rows, d, rng).map(|x| 3.0 * x), keep)
}

fn logits(dec: &RandomDecoder, tokens: &[usize], mem: &Tensor, keep: &[bool]) -> Tensor {
    let mut tape = Tape::new();
    let b = dec.store.bind(&mut tape);
    let m = Memory {
        value: tape.constant(mem.clone()),
        keep: keep.to_vec(),
    };
    let y = decoder_forward(&mut tape, &b, &dec.params, tokens, &m).unwrap();
    tape.value(y).clone()
}

/// Changing token t never changes logits at positions before t.
pub fn causality(rng: &mut impl Rng) -> Result<(), String> {
    let dec = random_decoder(rng);
    let (mem, keep) = random_memory(rng, dec.d);
    let len = rng.gen_range(2..=dec.max_positions);
    let tokens: Vec<usize> = (0..len).map(|_| rng.gen_range(0..dec.n_tokens)).collect();
    let base = logits(&dec, &tokens, &mem, &keep);
    let t = rng.gen_range(1..len);
    let mut changed = tokens.clone();
    changed[t] = (tokens[t] + rng.gen_range(1..dec.n_tokens)) % dec.n_tokens;
    let out = logits(&dec, &changed, &mem, &keep);
    for r in 0..t {
        if out.row(r) != base.row(r) {
            return Err(format!("row {r} changed after perturbing token {t}"));
        }
    }
    if out.row(t) == base.row(t) {
        return Err(format!("row {t} did not react to its own token"));
    }
    Ok(())
}

/// Weights sum to one over allowed keys and are exactly zero elsewhere.
/// Using V = I makes the attention output equal to the weight matrix.
pub fn attention_rows(rng: &mut impl Rng) -> Result<(), String> {
    let (tq, tk, dk) = (rng.gen_range(1..=8), rng.gen_range(1..=8), rng.gen_range(1..=6));
    let q = glorot_uniform(tq, dk, rng).map(|x| 10.0 * x);
    let k = glorot_uniform(tk, dk, rng).map(|x| 10.0 * x);
    let mut keep: Vec<bool> = (0..tq * tk).map(|_| rng.gen_bool(0.5)).collect();
    for r in 0..tq {
        keep[r * tk + rng.gen_range(0..tk)] = true;
    }
    let mut tape = Tape::new();
    let (q, k, v) = (
        tape.constant(q),
        tape.constant(k),
        tape.constant(Tensor::identity(tk)),
    );
    let w = attention(&mut tape, q, k, v, Some(&keep), 0.0).map_err(|e| e.to_string())?;
    let w = tape.value(w);
    for r in 0..tq {
        let s: f64 = w.row(r).iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(format!("row {r} sums to {s}"));
        }
        for c in 0..tk {
            if !keep[r * tk + c] && w.get(r, c) != 0.0 {
                return Err(format!("masked weight ({r},{c}) = {}", w.get(r, c)));
            }
        }
    }
    Ok(())
}

/// Rewriting masked memory rows leaves every logit bit-identical.
pub fn memory_mask(rng: &mut impl Rng) -> Result<(), String> {
    let dec = random_decoder(rng);
    let (mem, mut keep) = random_memory(rng, dec.d);
    if keep.iter().all(|&k| k) {
        keep[0] = false;
        if keep.len() == 1 {
            return Ok(());
        }
        keep[1] = true;
    }
    let len = rng.gen_range(1..=dec.max_positions);
    let tokens: Vec<usize> = (0..len).map(|_| rng.gen_range(0..dec.n_tokens)).collect();
    let base = logits(&dec, &tokens, &mem, &keep);
    let mut noisy = mem.clone();
    for (r, &k) in keep.iter().enumerate() {
        if !k {
            for x in noisy.row_mut(r) {
                *x = rng.gen_range(-100.0..100.0);
            }
        }
    }
    if logits(&dec, &tokens, &noisy, &keep) != base {
        return Err("masked memory rows changed the logits".into());
    }
    // Dropping the masked rows altogether must not matter either.
    let rows: Vec<Vec<f64>> = (0..keep.len())
        .filter(|&r| keep[r])
        .map(|r| mem.row(r).to_vec())
        .collect();
    let trimmed = Tensor::from_rows(&rows).unwrap();
    if logits(&dec, &tokens, &trimmed, &vec![true; rows.len()]) != base {
        return Err("trimmed memory changed the logits".into());
    }
    Ok(())
}

/// Perturbing a node more than L hops upstream of node i leaves node i's
/// embedding unchanged after L layers.
pub fn gat_locality(rng: &mut impl Rng) -> Result<(), String> {
    let n = rng.gen_range(3..=10);
    let depth = rng.gen_range(1..=3);
    let (in_dim, dim, edge_dim) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=3));
    let mut edges = Vec::new();
    for _ in 0..rng.gen_range(0..=2 * n) {
        let (s, d) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if s != d {
            edges.push((s, d));
        }
    }
    let feats: Vec<Vec<f64>> = edges
        .iter()
        .map(|_| (0..edge_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let graph = GatGraph::with_self_loops(n, &edges, &feats, edge_dim).unwrap();
    let mut store = ParamStore::new();
    let heads = rng.gen_range(1..=2);
    let stack = GatStack::init(&mut store, "g", in_dim, dim, edge_dim, depth, heads, rng).unwrap();

    // hops[j] = shortest path length from j to target along message edges
    let target = rng.gen_range(0..n);
    let mut hops = vec![usize::MAX; n];
    hops[target] = 0;
    let mut frontier = vec![target];
    while let Some(v) = frontier.pop() {
        for &(s, d) in &edges {
            if d == v && hops[s] > hops[v] + 1 {
                hops[s] = hops[v] + 1;
                frontier.push(s);
            }
        }
    }
    let far: Vec<usize> = (0..n).filter(|&j| hops[j] > depth).collect();
    if far.is_empty() {
        return Ok(());
    }
    let x = glorot_uniform(n, in_dim, rng);
    let run = |x: &Tensor| {
        let mut tape = Tape::new();
        let b = store.bind(&mut tape);
        let xv = tape.constant(x.clone());
        let y = gat_forward(&mut tape, &b, &stack, GatInput::Dense(xv), &graph).unwrap();
        tape.value(y).row(target).to_vec()
    };
    let base = run(&x);
    let mut moved = x.clone();
    let j = far[rng.gen_range(0..far.len())];
    for v in moved.row_mut(j) {
        *v += rng.gen_range(1.0..5.0);
    }
    if run(&moved) != base {
        return Err(format!(
            "node {target} changed after perturbing node {j} at {} hops with {depth} layers",
            hops[j]
        ));
    }
    Ok(())
}
