//! Temporal covariance of the 1-d branch: valid convolutions commute with
//! time shifts, and each width-5 pooling divides the shift by five. A
//! 5-frame input shift moves the first pooled stage by one step; a
//! 25-frame shift moves the pre-flatten features by one pooled step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use timbre_tensor::ops::{conv2d_valid, maxpool, relu_leaky};
use timbre_tensor::{ConvKernel, Tensor};

fn one_d_stage(input: &Tensor<f64>, kernel: &ConvKernel<f64>) -> Tensor<f64> {
    let conv = conv2d_valid(input, kernel).unwrap();
    let act = relu_leaky(&conv, 0.3).unwrap();
    maxpool(&act, 5, 1).unwrap()
}

fn crop_time(input: &Tensor<f64>, shift: usize) -> Tensor<f64> {
    let s = input.shape();
    let row = s[1] * s[2];
    Tensor::from_vec(&[s[0] - shift, s[1], s[2]], input.data()[shift * row..].to_vec()).unwrap()
}

#[test]
fn five_frame_shift_moves_first_pooled_stage_by_one_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let input = Tensor::<f64>::uniform(&[133, 36, 1], 1.0, &mut rng);
    let kernel = ConvKernel::new(
        Tensor::uniform(&[3, 36, 1, 8], 0.3, &mut rng),
        Tensor::uniform(&[8], 0.1, &mut rng),
    )
    .unwrap();

    let full = one_d_stage(&input, &kernel);
    let shifted = one_d_stage(&crop_time(&input, 5), &kernel);

    // shifted[i] == full[i + 1] wherever both windows are complete.
    let row = full.shape()[1] * full.shape()[2];
    let common = shifted.shape()[0].min(full.shape()[0] - 1);
    for i in 0..common * row {
        let a = shifted.data()[i];
        let b = full.data()[row + i];
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "step {i}: {a} vs {b}");
    }
}

#[test]
fn twenty_five_frame_shift_moves_pre_flatten_features_by_one_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let input = Tensor::<f64>::uniform(&[128 + 25, 36, 1], 1.0, &mut rng);
    let k1 = ConvKernel::new(
        Tensor::uniform(&[3, 36, 1, 8], 0.3, &mut rng),
        Tensor::uniform(&[8], 0.1, &mut rng),
    )
    .unwrap();
    let k2 = ConvKernel::new(
        Tensor::uniform(&[3, 1, 8, 8], 0.3, &mut rng),
        Tensor::uniform(&[8], 0.1, &mut rng),
    )
    .unwrap();

    let features = |x: &Tensor<f64>| one_d_stage(&one_d_stage(x, &k1), &k2);
    let full = features(&input);
    let shifted = features(&crop_time(&input, 25));

    let row = full.shape()[1] * full.shape()[2];
    let common = shifted.shape()[0].min(full.shape()[0] - 1);
    assert!(common >= 3, "need interior steps to compare");
    for i in 0..common * row {
        let a = shifted.data()[i];
        let b = full.data()[row + i];
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "step {i}: {a} vs {b}");
    }
}
