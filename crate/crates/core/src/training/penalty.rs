use alloc::vec::Vec;

use super::losses::gradient_penalty;
use crate::model::layers::Sequential;

/// Finite-difference step used for the Hessian-vector product.
const HVP_STEP: f64 = 1e-4;

/// Evaluate the gradient penalty at `x_hat` for a scalar-output network and
/// accumulate `scale * d penalty / d params` into `grads`. A one-sided
/// penalty only charges norms above 1.
///
/// The parameter gradient of `||grad_x D||` equals the parameter gradient of
/// the directional derivative of `D` along the unit gradient direction `u`;
/// that derivative is taken by central differences at `x_hat +- h u`, which
/// is exact on linear pieces of a rectifier network.
pub(crate) fn accumulate_penalty(
    net: &Sequential,
    params: &[f64],
    x_hat: &[f64],
    lambda: f64,
    one_sided: bool,
    scale: f64,
    grads: &mut [f64],
) -> (f64, f64) {
    let trace = net.forward(params, x_hat);
    let g = net
        .backward(params, &trace, &[1.0], None, true)
        .expect("input gradient requested");
    let norm = libm::sqrt(g.iter().map(|v| v * v).sum::<f64>());
    if one_sided && norm <= 1.0 {
        return (0.0, norm);
    }
    let penalty = gradient_penalty(norm, lambda);
    if norm > 0.0 {
        let coef = scale * 2.0 * lambda * (norm - 1.0) / (2.0 * HVP_STEP);
        for sign in [1.0, -1.0] {
            let x: Vec<f64> = x_hat
                .iter()
                .zip(&g)
                .map(|(x, gi)| x + sign * HVP_STEP * gi / norm)
                .collect();
            let t = net.forward(params, &x);
            net.backward(params, &t, &[sign * coef], Some(grads), false);
        }
    }
    (penalty, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::layers::{Dense, Layer};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let net = Sequential::new(vec![
            Layer::Dense(Dense {
                inputs: 3,
                outputs: 5,
            }),
            Layer::Tanh { size: 5 },
            Layer::Dense(Dense {
                inputs: 5,
                outputs: 1,
            }),
        ]);
        let params = net.init_params(&mut ChaCha8Rng::seed_from_u64(3));
        let x = [0.3, -0.2, 0.9];
        let mut grads = vec![0.0; params.len()];
        accumulate_penalty(&net, &params, &x, 10.0, false, 1.0, &mut grads);
        let value = |p: &[f64]| {
            let mut sink = vec![0.0; p.len()];
            accumulate_penalty(&net, p, &x, 10.0, false, 0.0, &mut sink).0
        };
        let h = 1e-6;
        for i in 0..params.len() {
            let mut a = params.clone();
            a[i] += h;
            let mut b = params.clone();
            b[i] -= h;
            let fd = (value(&a) - value(&b)) / (2.0 * h);
            assert!(
                (fd - grads[i]).abs() < 1e-4 * (1.0 + fd.abs()),
                "{i}: {fd} vs {}",
                grads[i]
            );
        }
    }
}
