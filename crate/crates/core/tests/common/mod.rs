#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpsurf::field::{forward_jet, loss_param_grads, JetAdjoint, MlpParams, NetworkConfig};
use tpsurf::Vec3;

/// Random network with nonzero biases so that no unit sits exactly at its kink.
pub fn random_network(width: usize, depth: usize, seed: u64) -> MlpParams {
    let config = NetworkConfig {
        width,
        depth,
        ..NetworkConfig::desk()
    };
    let mut params = MlpParams::zeros(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut params.layers {
        let scale = (2.0 / layer.in_dim as f64).sqrt();
        for w in &mut layer.weight {
            *w = scale * rng.random_range(-1.0..1.0);
        }
        for b in &mut layer.bias {
            *b = 0.05 * rng.random_range(-1.0..1.0);
        }
    }
    params
}

pub fn random_points(n: usize, half: f64, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Vec3::from_fn(|_, _| rng.random_range(-half..half))).collect()
}

/// `|a - b| / |b|` for vectors, with `b` the oracle.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// Relative gradient error against central differences of the value.
pub fn grad_fd_error(params: &MlpParams, x: Vec3, h: f64) -> f64 {
    let jet = forward_jet(params, x);
    let fd: Vec<f64> = (0..3)
        .map(|d| {
            let e = Vec3::ith(d, h);
            (params.value(x + e) - params.value(x - e)) / (2.0 * h)
        })
        .collect();
    rel_error(jet.grad.as_slice(), &fd)
}

/// Relative Hessian error against central differences of the analytic gradient.
pub fn hess_fd_error(params: &MlpParams, x: Vec3, h: f64) -> f64 {
    let m = forward_jet(params, x).hess_matrix();
    let mut fd = [0.0; 9];
    for d in 0..3 {
        let e = Vec3::ith(d, h);
        let col = (forward_jet(params, x + e).grad - forward_jet(params, x - e).grad) / (2.0 * h);
        for r in 0..3 {
            fd[3 * r + d] = col[r];
        }
    }
    let analytic: Vec<f64> = m.transpose().iter().copied().collect();
    rel_error(&analytic, &fd)
}

/// Largest per-parameter mismatch between `loss_param_grads` and central
/// differences of `loss`, as `|a - b| / (max(|a|, |b|) + floor * max_k |a_k|)`.
///
/// The floor keeps near-dead units, whose differences are pure roundoff, from
/// dominating the comparison.
pub fn param_fd_error(
    params: &MlpParams,
    points: &[Vec3],
    adjoint: impl Fn(&tpsurf::field::Jet3) -> JetAdjoint,
    loss: impl Fn(&tpsurf::field::Jet3) -> f64,
    h: f64,
    floor: f64,
) -> f64 {
    let batch: Vec<(Vec3, JetAdjoint)> = points.iter().map(|&x| (x, adjoint(&forward_jet(params, x)))).collect();
    let analytic = loss_param_grads(params, &batch).unwrap().flat();
    let floor = floor * analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let total = |p: &MlpParams| points.iter().map(|&x| loss(&forward_jet(p, x))).sum::<f64>();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    for l in 0..params.layers.len() {
        let n_w = params.layers[l].weight.len();
        for i in 0..n_w + params.layers[l].bias.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            if i < n_w {
                plus.layers[l].weight[i] += h;
                minus.layers[l].weight[i] -= h;
            } else {
                plus.layers[l].bias[i - n_w] += h;
                minus.layers[l].bias[i - n_w] -= h;
            }
            let fd = (total(&plus) - total(&minus)) / (2.0 * h);
            let a = analytic[k];
            worst = worst.max((a - fd).abs() / (a.abs().max(fd.abs()) + floor));
            k += 1;
        }
    }
    assert_eq!(k, analytic.len(), "flat gradient layout must follow layer order");
    worst
}
