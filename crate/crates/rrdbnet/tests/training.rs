use deblur_core::blursynth::{convolve, gaussian_kernel};
use deblur_core::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrdbnet::{infer_image, train_pairs, InferOptions, InferOutput, NetConfig, NetParams, TrainConfig, TrainingPair};

fn texture(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(h, w, |_, _| rng.random::<f64>()).unwrap()
}

fn pairs(count: usize, size: usize) -> Vec<TrainingPair> {
    let k = gaussian_kernel(1.0).unwrap();
    (0..count as u64)
        .map(|i| {
            let sharp = texture(size, size, i);
            TrainingPair {
                blur: convolve(&sharp, &k).unwrap(),
                sharp,
            }
        })
        .collect()
}

fn tiny() -> NetConfig {
    NetConfig {
        num_rrdb: 1,
        base_channels: 4,
        ..NetConfig::default()
    }
}

#[test]
fn deterministic_with_report() {
    let data = pairs(10, 16);
    let cfg = TrainConfig {
        batch_size: 4,
        epochs: 3,
        seed: 7,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let mut seen = Vec::new();
    let (pa, ra) = train_pairs(&data, &tiny(), &cfg, |s, l| seen.push((s, l))).unwrap();
    let (pb, rb) = train_pairs(&data, &tiny(), &cfg, |_, _| {}).unwrap();
    assert_eq!(pa, pb);
    assert_eq!(ra.step_losses, rb.step_losses);
    assert_eq!(ra.validation_pairs, 1);
    assert_eq!(ra.train_pairs, 9);
    // 9 training pairs in batches of 4: 3 steps per epoch.
    assert_eq!(ra.steps, 9);
    assert_eq!(seen.len(), 9);
    assert_eq!(ra.epochs.len(), 3);
    assert!(ra.epochs.iter().all(|e| e.validation_mse.is_some_and(f64::is_finite)));
    let json = serde_json::to_value(&ra).unwrap();
    assert_eq!(json["seed"], 7);
}

#[test]
fn max_steps_stops_mid_epoch() {
    let cfg = TrainConfig {
        batch_size: 2,
        epochs: 10,
        max_steps: Some(5),
        validation_fraction: 0.0,
        ..TrainConfig::default()
    };
    let (_, r) = train_pairs(&pairs(6, 8), &tiny(), &cfg, |_, _| {}).unwrap();
    assert_eq!(r.steps, 5);
    assert_eq!(r.epochs.len(), 2);
    assert!(r.epochs[0].validation_mse.is_none());
}

#[test]
fn zero_learning_rate_keeps_init() {
    let cfg = TrainConfig {
        batch_size: 3,
        epochs: 2,
        learning_rate: 0.0,
        seed: 3,
        ..TrainConfig::default()
    };
    let (p, _) = train_pairs(&pairs(8, 8), &tiny(), &cfg, |_, _| {}).unwrap();
    assert_eq!(p, NetParams::<f32>::init(&tiny(), 3).unwrap());
}

#[test]
fn rejects_too_few_or_odd_pairs() {
    let cfg = TrainConfig::default();
    assert!(train_pairs(&pairs(4, 8), &tiny(), &cfg, |_, _| {}).is_err());
    let small = TrainConfig { batch_size: 2, ..cfg };
    assert!(train_pairs(&pairs(4, 7), &tiny(), &small, |_, _| {}).is_err());
}

#[test]
fn inference_shapes_and_determinism() {
    let params = NetParams::<f32>::init(&tiny(), 2).unwrap();
    let opts = InferOptions::default();
    let img = texture(64, 64, 1);
    let InferOutput::Image(out) = infer_image(&img, &params, &opts, false).unwrap() else {
        panic!()
    };
    assert_eq!(out.dims(), (64, 64));

    let big = texture(100, 130, 2);
    let a = infer_image(&big, &params, &opts, false).unwrap();
    let b = infer_image(&big, &params, &opts, false).unwrap();
    assert_eq!(a, b);
    let InferOutput::Image(a) = a else { panic!() };
    assert_eq!(a.dims(), (100, 130));

    let InferOutput::Stretched(s) = infer_image(&big, &params, &opts, true).unwrap() else {
        panic!()
    };
    let (lo, hi) = s
        .image
        .data()
        .iter()
        .fold((255u8, 0u8), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(s.degenerate || (lo, hi) == (0, 255));

    assert!(infer_image(&texture(40, 80, 3), &params, &opts, false).is_err());
}
