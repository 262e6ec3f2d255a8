use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrdbnet::{
    backward, forward_train, loss_and_gradients, mse_loss, mse_loss_grad, net_forward, NetConfig, NetParams, Tensor4,
};

const STEP: f64 = 1e-4;
/// Gradients below this magnitude are compared absolutely.
const FLOOR: f64 = 1e-6;

fn random(dims: [usize; 4], seed: u64, lo: f64, hi: f64) -> Tensor4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dims.iter().product();
    Tensor4::from_vec(dims, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn loss(params: &NetParams<f64>, x: &Tensor4<f64>, t: &Tensor4<f64>) -> f64 {
    mse_loss(&net_forward(params, x).unwrap(), t).unwrap()
}

fn central_difference(params: &NetParams<f64>, x: &Tensor4<f64>, t: &Tensor4<f64>, p: usize, i: usize) -> f64 {
    let mut plus = params.clone();
    plus.values_mut()[p][i] += STEP;
    let mut minus = params.clone();
    minus.values_mut()[p][i] -= STEP;
    (loss(&plus, x, t) - loss(&minus, x, t)) / (2.0 * STEP)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FLOOR)
}

/// Random biases too, so every bias path is exercised away from zero.
fn perturbed(cfg: &NetConfig, seed: u64) -> NetParams<f64> {
    let mut p = NetParams::<f32>::init(cfg, seed).unwrap().cast::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    for (spec, v) in p.specs().to_vec().iter().zip(p.values_mut()) {
        if spec.name.ends_with(".bias") {
            v.iter_mut().for_each(|b| *b = rng.random_range(-0.05..0.05));
        }
    }
    p
}

#[test]
fn every_entry_of_a_tiny_net() {
    let cfg = NetConfig {
        num_rrdb: 1,
        base_channels: 2,
        ..NetConfig::default()
    };
    let params = perturbed(&cfg, 11);
    let x = random([1, 1, 8, 8], 1, 0.0, 1.0);
    let t = random([1, 1, 8, 8], 2, 0.0, 1.0);
    let (_, grads) = loss_and_gradients(&params, &x, &t).unwrap();
    for (p, spec) in params.specs().iter().enumerate() {
        for i in 0..spec.len() {
            let fd = central_difference(&params, &x, &t, p, i);
            let an = grads.values()[p][i];
            assert!(
                rel_err(an, fd) < 1e-3,
                "{}[{i}]: analytic {an:e} vs fd {fd:e}",
                spec.name
            );
        }
    }
}

#[test]
fn sampled_entries_of_full_width_net() {
    let cfg = NetConfig {
        num_rrdb: 1,
        ..NetConfig::default()
    };
    let params = perturbed(&cfg, 12);
    let x = random([1, 1, 8, 8], 3, 0.0, 1.0);
    let t = random([1, 1, 8, 8], 4, 0.0, 1.0);
    let (_, grads) = loss_and_gradients(&params, &x, &t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (p, spec) in params.specs().iter().enumerate() {
        let g = &grads.values()[p];
        let largest = (0..g.len()).max_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs())).unwrap();
        let mut picks = vec![largest];
        picks.extend((0..3).map(|_| rng.random_range(0..g.len())));
        for i in picks {
            let fd = central_difference(&params, &x, &t, p, i);
            assert!(
                rel_err(g[i], fd) < 1e-3,
                "{}[{i}]: analytic {:e} vs fd {fd:e}",
                spec.name,
                g[i]
            );
        }
    }
}

#[test]
fn gradients_are_linear_in_the_loss() {
    let cfg = NetConfig {
        num_rrdb: 1,
        base_channels: 4,
        ..NetConfig::default()
    };
    let params = perturbed(&cfg, 13);
    let x = random([2, 1, 8, 6], 6, 0.0, 1.0);
    let t = random([2, 1, 8, 6], 7, 0.0, 1.0);
    let (pred, cache) = forward_train(&params, &x).unwrap();
    let d = mse_loss_grad(&pred, &t).unwrap();
    let g1 = backward(&params, &cache, &d).unwrap();
    let g2 = backward(&params, &cache, &d.map(|v| 2.0 * v)).unwrap();
    for (a, b) in g1.values().iter().flatten().zip(g2.values().iter().flatten()) {
        assert!((2.0 * a - b).abs() <= 1e-10 * (1.0 + b.abs()));
    }
}

#[test]
fn perfect_prediction_has_zero_gradient() {
    let cfg = NetConfig {
        num_rrdb: 1,
        base_channels: 3,
        ..NetConfig::default()
    };
    let params = perturbed(&cfg, 14);
    let x = random([1, 1, 6, 6], 8, 0.0, 1.0);
    let target = net_forward(&params, &x).unwrap();
    let (loss, grads) = loss_and_gradients(&params, &x, &target).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.values().iter().flatten().all(|&g| g == 0.0));
}

#[test]
fn backward_checks_gradient_shape() {
    let cfg = NetConfig {
        num_rrdb: 1,
        base_channels: 2,
        ..NetConfig::default()
    };
    let params = perturbed(&cfg, 15);
    let (_, cache) = forward_train(&params, &random([1, 1, 4, 4], 9, 0.0, 1.0)).unwrap();
    assert!(backward(&params, &cache, &random([1, 1, 6, 4], 1, 0.0, 1.0)).is_err());
}
