use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrdbnet::{conv2d, leaky_relu, maxpool2x2, mse_loss, mse_loss_grad, upsample_nearest2, Tensor4};

fn random(dims: [usize; 4], seed: u64) -> Tensor4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dims.iter().product();
    Tensor4::from_vec(dims, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Six nested loops over the textbook definition.
fn conv_oracle(x: &Tensor4<f64>, w: &[f64], b: &[f64], cout: usize) -> Vec<f64> {
    let [n, cin, h, wd] = x.dims();
    let at = |s: usize, c: usize, r: isize, q: isize| {
        if r < 0 || q < 0 || r >= h as isize || q >= wd as isize {
            0.0
        } else {
            x.data()[((s * cin + c) * h + r as usize) * wd + q as usize]
        }
    };
    let mut out = vec![0.0; n * cout * h * wd];
    for s in 0..n {
        for o in 0..cout {
            for i in 0..h {
                for j in 0..wd {
                    let mut acc = b[o];
                    for c in 0..cin {
                        for dy in 0..3 {
                            for dx in 0..3 {
                                acc += w[((o * cin + c) * 3 + dy) * 3 + dx]
                                    * at(s, c, i as isize + dy as isize - 1, j as isize + dx as isize - 1);
                            }
                        }
                    }
                    out[((s * cout + o) * h + i) * wd + j] = acc;
                }
            }
        }
    }
    out
}

#[test]
fn conv_matches_loop_oracle() {
    for (dims, cout, seed) in [
        ([1, 2, 5, 5], 3, 1),
        ([2, 3, 4, 7], 2, 2),
        ([1, 1, 1, 1], 1, 3),
        ([1, 4, 6, 3], 5, 4),
    ] {
        let x = random(dims, seed);
        let w = random([cout, dims[1], 3, 3], seed + 10).into_data();
        let b = random([1, 1, 1, cout], seed + 20).into_data();
        let y = conv2d(&x, &w, &b, cout).unwrap();
        assert_eq!(y.dims(), [dims[0], cout, dims[2], dims[3]]);
        let oracle = conv_oracle(&x, &w, &b, cout);
        let err = y
            .data()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{dims:?}: {err:e}");
    }
}

#[test]
fn conv_identity_and_bias_only() {
    let x = random([2, 1, 6, 5], 5);
    let mut w = vec![0.0; 9];
    w[4] = 1.0;
    assert_eq!(conv2d(&x, &w, &[0.0], 1).unwrap(), x);

    let y = conv2d(&x, &[0.0; 9], &[0.3], 1).unwrap();
    assert!(y.data().iter().all(|&v| v == 0.3));
}

#[test]
fn conv_rejects_bad_shapes() {
    let x = random([1, 2, 4, 4], 6);
    assert!(conv2d(&x, &[0.0; 9], &[0.0], 1).is_err());
    assert!(conv2d(&x, &[0.0; 18], &[0.0, 0.0], 1).is_err());
}

#[test]
fn leaky_relu_values() {
    let x = Tensor4::from_vec([1, 1, 1, 3], vec![1.0, -1.0, 0.0]).unwrap();
    assert_eq!(leaky_relu(&x, 0.2).data(), &[1.0, -0.2, 0.0]);
    let r = random([2, 3, 4, 4], 7);
    assert_eq!(leaky_relu(&r, 1.0), r);
}

#[test]
fn mse_values() {
    let a = random([2, 1, 4, 4], 8);
    assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
    assert!(mse_loss_grad(&a, &a).unwrap().data().iter().all(|&g| g == 0.0));
    let shifted = a.map(|v| v + 0.1);
    assert!((mse_loss(&shifted, &a).unwrap() - 0.01).abs() < 1e-12);
    let b = random([2, 1, 4, 4], 9);
    let oracle = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / 32.0;
    assert!((mse_loss(&a, &b).unwrap() - oracle).abs() < 1e-12);
    assert!(mse_loss(&a, &random([1, 1, 4, 4], 1)).is_err());
}

#[test]
fn maxpool_rejects_odd() {
    assert!(maxpool2x2(&random([1, 1, 3, 4], 1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn upsample_then_pool_is_identity(n in 1usize..3, c in 1usize..4, h in 1usize..9, w in 1usize..9, seed in 0u64..1000) {
        let x = random([n, c, h, w], seed);
        let up = upsample_nearest2(&x);
        prop_assert_eq!(up.dims(), [n, c, 2 * h, 2 * w]);
        prop_assert_eq!(maxpool2x2(&up).unwrap(), x);
    }

    #[test]
    fn conv_preserves_spatial_dims(h in 1usize..10, w in 1usize..10, cin in 1usize..4, cout in 1usize..4) {
        let x = random([1, cin, h, w], (h * 31 + w) as u64);
        let y = conv2d(&x, &vec![0.1; cout * cin * 9], &vec![0.0; cout], cout).unwrap();
        prop_assert_eq!(y.dims(), [1, cout, h, w]);
    }
}
