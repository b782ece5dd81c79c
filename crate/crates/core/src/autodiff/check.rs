use super::{Tape, Tensor, TensorError, Var};

/// Compares backward gradients of a scalar function with central finite
/// differences at every coordinate of every input. Returns the maximum of
/// `|a - n| / max(GRAD_CHECK_FLOOR, |a| + |n|)`.
///
/// `f` receives a fresh non-training tape and the inputs bound as trainable
/// leaves, in order.
/// Denominator floor of the relative error. Central differences of an f64
/// loss of order 1 carry round-off near 1e-11 at eps = 1e-5, so gradients
/// that are structurally zero would otherwise read as large relative errors.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

pub fn grad_check<F>(f: F, inputs: &[Tensor], eps: f64) -> Result<f64, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    let eval = |xs: &[Tensor]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.param(x.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| tape.param(x.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.of(v, &tape)).collect();

    let mut worst: f64 = 0.0;
    let mut xs = inputs.to_vec();
    for k in 0..xs.len() {
        for i in 0..xs[k].len() {
            let orig = xs[k].data[i];
            xs[k].data[i] = orig + eps;
            let up = eval(&xs)?;
            xs[k].data[i] = orig - eps;
            let down = eval(&xs)?;
            xs[k].data[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[k].data[i];
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(GRAD_CHECK_FLOOR);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
