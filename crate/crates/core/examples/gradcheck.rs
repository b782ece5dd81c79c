//! Compare reverse-mode gradients with central differences on a small
//! composite expression.
//!
//! cargo run --example gradcheck

use gmmlg::autodiff::{glorot_uniform, grad_check, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let inputs = vec![
        glorot_uniform(4, 6, &mut rng),
        glorot_uniform(6, 5, &mut rng),
        glorot_uniform(1, 5, &mut rng),
        glorot_uniform(1, 5, &mut rng),
    ];
    let err = grad_check(
        |t, v| {
            let h = t.matmul(v[0], v[1])?;
            let h = t.layer_norm(h, v[2], v[3], 1e-5)?;
            let h = t.elu(h, 1.0);
            let p = t.softmax_rows(h, None)?;
            let ce = t.cross_entropy_masked(h, &[1, 4, 0, 2], 0)?;
            let s = t.sum(p, Axis::Cols);
            let s = t.mean(s, Axis::All);
            t.add(s, ce)
        },
        &inputs,
        1e-5,
    )?;
    println!("max relative error {err:.3e} ({})", if err < 1e-4 { "ok" } else { "too large" });
    Ok(())
}
