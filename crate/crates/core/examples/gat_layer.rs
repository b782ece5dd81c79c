//! Run a two-layer edge-aware GAT over a small graph and print the node
//! embeddings.
//!
//! cargo run --example gat_layer

use gmmlg::autodiff::{ParamStore, Tape, Tensor};
use gmmlg::model::{gat_forward, GatGraph, GatInput, GatStack};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut store = ParamStore::new();
    let stack = GatStack::init(&mut store, "gat", 3, 8, 1, 2, 2, &mut rng)?;

    // a path 0-1-2-3 with weighted edges
    let edges = [(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)];
    let weights: Vec<Vec<f64>> = [1.0, 1.0, 0.5, 0.5, 2.0, 2.0].iter().map(|&w| vec![w]).collect();
    let graph = GatGraph::with_self_loops(4, &edges, &weights, 1)?;
    let x = Tensor::new(4, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1., 1., 1., 1.])?;

    let mut tape = Tape::new();
    let bound = store.bind(&mut tape);
    let x = tape.constant(x);
    let h = gat_forward(&mut tape, &bound, &stack, GatInput::Dense(x), &graph)?;
    let h = tape.value(h);
    for r in 0..4 {
        let row: Vec<String> = h.row(r).iter().map(|v| format!("{v:+.3}")).collect();
        println!("node {r}: {}", row.join(" "));
    }
    Ok(())
}
