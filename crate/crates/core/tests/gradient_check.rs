//! Central finite differences against the hand-derived gradients.

use metasets::geometry::PointCloud;
use metasets::nn::{init_params_seeded, loss_and_grad, loss_batch, Architecture, ModelParams};
use metasets::rng::seeded;
use rand::Rng;

const STEP: f64 = 1e-5;

fn batch(seed: u64, clouds: usize, points: usize, classes: usize) -> Vec<PointCloud> {
    let mut rng = seeded(seed);
    (0..clouds)
        .map(|i| {
            let pts = (0..points)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            PointCloud::new(pts, i % classes)
        })
        .collect()
}

fn finite_difference(params: &ModelParams, batch: &[PointCloud], index: usize) -> f64 {
    let mut plus = params.clone();
    plus.values_mut()[index] += STEP;
    let mut minus = params.clone();
    minus.values_mut()[index] -= STEP;
    (loss_batch(&plus, batch).unwrap() - loss_batch(&minus, batch).unwrap()) / (2.0 * STEP)
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn default_architecture_random_coordinates() {
    let arch = Architecture::pointnet(3);
    for seed in 0..5u64 {
        let params = init_params_seeded(&arch, 100 + seed).unwrap();
        let data = batch(200 + seed, 3, 5, 3);
        let (_, grads) = loss_and_grad(&params, &data).unwrap();
        let mut rng = seeded(300 + seed);
        for _ in 0..120 {
            let i = rng.random_range(0..params.len());
            let fd = finite_difference(&params, &data, i);
            let err = relative_error(grads.values()[i], fd);
            assert!(err < 1e-4, "seed {seed} coordinate {i}: analytic {} vs fd {fd}", grads.values()[i]);
        }
    }
}

#[test]
fn gradients_stay_finite_over_a_training_run() {
    use metasets::nn::AdamState;
    let arch = Architecture::compact(4);
    let mut params = init_params_seeded(&arch, 1).unwrap();
    let mut adam = AdamState::new(&arch);
    for step in 0..500u64 {
        let data = batch(step, 4, 8, 4);
        let (loss, grads) = loss_and_grad(&params, &data).unwrap();
        assert!(loss.is_finite() && loss >= 0.0);
        adam.update(&mut params, &grads, 1e-2).unwrap();
        assert!(params.is_finite(), "non-finite parameter after step {step}");
    }
}
