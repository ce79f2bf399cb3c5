//! Central finite-difference oracle for every backward implementation.
//! All checks run in f64 with h = 1e-5 and demand relative error < 1e-4.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use timbre_tensor::ops::{
    conv2d_valid, conv2d_valid_backward, cross_entropy, dense, dense_backward, maxpool,
    maxpool_backward, maxpool_with_indices, relu_leaky, relu_leaky_backward, softmax,
    softmax_cross_entropy_grad, spiral_conv, spiral_conv_backward,
};
use timbre_tensor::{ConvKernel, DenseWeights, SpiralKernel, Tensor};

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn assert_close(analytic: f64, numeric: f64, what: &str) {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    assert!(
        diff <= REL_TOL * scale || diff < 1e-8,
        "{what}: analytic {analytic} vs numeric {numeric} (rel {})",
        diff / scale.max(1e-300),
    );
}

/// Numeric gradient of `loss` with respect to each element of `theta`.
fn numeric_grad(theta: &mut Tensor<f64>, mut loss: impl FnMut(&Tensor<f64>) -> f64) -> Vec<f64> {
    let mut grads = Vec::with_capacity(theta.numel());
    for i in 0..theta.numel() {
        let orig = theta.data()[i];
        theta.data_mut()[i] = orig + H;
        let up = loss(theta);
        theta.data_mut()[i] = orig - H;
        let down = loss(theta);
        theta.data_mut()[i] = orig;
        grads.push((up - down) / (2.0 * H));
    }
    grads
}

/// Scalar projection of a tensor so the upstream gradient is `weights`.
fn project(out: &Tensor<f64>, weights: &Tensor<f64>) -> f64 {
    out.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
}

#[test]
fn conv2d_gradients_match_finite_differences() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut input = Tensor::<f64>::uniform(&[6, 7, 2], 1.0, &mut rng);
        let mut weights = Tensor::uniform(&[3, 2, 2, 3], 1.0, &mut rng);
        let mut bias = Tensor::uniform(&[3], 1.0, &mut rng);
        let kernel = ConvKernel::new(weights.clone(), bias.clone()).unwrap();
        let out = conv2d_valid(&input, &kernel).unwrap();
        let proj = Tensor::uniform(out.shape(), 1.0, &mut rng);

        let grads = conv2d_valid_backward(&input, &kernel, &proj, true).unwrap();

        let num_w = numeric_grad(&mut weights, |w| {
            let k = ConvKernel::new(w.clone(), bias.clone()).unwrap();
            project(&conv2d_valid(&input, &k).unwrap(), &proj)
        });
        for (a, n) in grads.weights.data().iter().zip(&num_w) {
            assert_close(*a, *n, "conv2d weight");
        }

        let num_b = numeric_grad(&mut bias, |b| {
            let k = ConvKernel::new(weights.clone(), b.clone()).unwrap();
            project(&conv2d_valid(&input, &k).unwrap(), &proj)
        });
        for (a, n) in grads.bias.data().iter().zip(&num_b) {
            assert_close(*a, *n, "conv2d bias");
        }

        let kernel = ConvKernel::new(weights.clone(), bias.clone()).unwrap();
        let num_x = numeric_grad(&mut input, |x| {
            project(&conv2d_valid(x, &kernel).unwrap(), &proj)
        });
        for (a, n) in grads.input.as_ref().unwrap().data().iter().zip(&num_x) {
            assert_close(*a, *n, "conv2d input");
        }
    }
}

#[test]
fn spiral_conv_gradients_match_finite_differences() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let q = 3;
        let mut input = Tensor::<f64>::uniform(&[5, 12, 2], 1.0, &mut rng);
        let mut weights = Tensor::uniform(&[2, 2, 3, 2, 2], 1.0, &mut rng);
        let mut bias = Tensor::uniform(&[2], 1.0, &mut rng);
        let kernel = SpiralKernel::new(weights.clone(), bias.clone(), q).unwrap();
        let out = spiral_conv(&input, &kernel).unwrap();
        let proj = Tensor::uniform(out.shape(), 1.0, &mut rng);

        let grads = spiral_conv_backward(&input, &kernel, &proj, true).unwrap();

        let num_w = numeric_grad(&mut weights, |w| {
            let k = SpiralKernel::new(w.clone(), bias.clone(), q).unwrap();
            project(&spiral_conv(&input, &k).unwrap(), &proj)
        });
        for (a, n) in grads.weights.data().iter().zip(&num_w) {
            assert_close(*a, *n, "spiral weight");
        }

        let num_b = numeric_grad(&mut bias, |b| {
            let k = SpiralKernel::new(weights.clone(), b.clone(), q).unwrap();
            project(&spiral_conv(&input, &k).unwrap(), &proj)
        });
        for (a, n) in grads.bias.data().iter().zip(&num_b) {
            assert_close(*a, *n, "spiral bias");
        }

        let kernel = SpiralKernel::new(weights.clone(), bias.clone(), q).unwrap();
        let num_x = numeric_grad(&mut input, |x| {
            project(&spiral_conv(x, &kernel).unwrap(), &proj)
        });
        for (a, n) in grads.input.as_ref().unwrap().data().iter().zip(&num_x) {
            assert_close(*a, *n, "spiral input");
        }
    }
}

#[test]
fn dense_gradients_match_finite_differences() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let mut x = Tensor::<f64>::uniform(&[9], 1.0, &mut rng);
        let mut weights = Tensor::uniform(&[9, 4], 1.0, &mut rng);
        let mut bias = Tensor::uniform(&[4], 1.0, &mut rng);
        let proj = Tensor::uniform(&[4], 1.0, &mut rng);
        let w = DenseWeights::new(weights.clone(), Some(bias.clone())).unwrap();

        let grads = dense_backward(&x, &w, &proj).unwrap();

        let num_w = numeric_grad(&mut weights, |wt| {
            let w = DenseWeights::new(wt.clone(), Some(bias.clone())).unwrap();
            project(&dense(&x, &w).unwrap(), &proj)
        });
        for (a, n) in grads.weights.data().iter().zip(&num_w) {
            assert_close(*a, *n, "dense weight");
        }

        let num_b = numeric_grad(&mut bias, |b| {
            let w = DenseWeights::new(weights.clone(), Some(b.clone())).unwrap();
            project(&dense(&x, &w).unwrap(), &proj)
        });
        for (a, n) in grads.bias.as_ref().unwrap().data().iter().zip(&num_b) {
            assert_close(*a, *n, "dense bias");
        }

        let w = DenseWeights::new(weights.clone(), Some(bias.clone())).unwrap();
        let num_x = numeric_grad(&mut x, |xv| project(&dense(xv, &w).unwrap(), &proj));
        for (a, n) in grads.input.data().iter().zip(&num_x) {
            assert_close(*a, *n, "dense input");
        }
    }
}

#[test]
fn relu_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        // Keep values away from the kink so the numeric derivative is clean.
        let mut x = Tensor::<f64>::uniform(&[5, 4, 2], 1.0, &mut rng)
            .map(|v| if v.abs() < 1e-3 { v + 0.1 } else { v });
        let proj = Tensor::uniform(x.shape(), 1.0, &mut rng);
        let analytic = relu_leaky_backward(&x, &proj, 0.3).unwrap();
        let numeric = numeric_grad(&mut x, |xv| {
            project(&relu_leaky(xv, 0.3).unwrap(), &proj)
        });
        for (a, n) in analytic.data().iter().zip(&numeric) {
            assert_close(*a, *n, "leaky relu");
        }
    }
}

#[test]
fn maxpool_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        // Spread values so no two window entries sit within the probe step.
        let mut x = Tensor::<f64>::uniform(&[6, 6, 2], 1.0, &mut rng);
        let proj = Tensor::uniform(&[3, 2, 2], 1.0, &mut rng);
        let (_, idx) = maxpool_with_indices(&x, 2, 3).unwrap();
        let analytic = maxpool_backward(x.shape(), &idx, &proj).unwrap();
        let numeric = numeric_grad(&mut x, |xv| project(&maxpool(xv, 2, 3).unwrap(), &proj));
        for (a, n) in analytic.data().iter().zip(&numeric) {
            assert_close(*a, *n, "maxpool");
        }
    }
}

#[test]
fn fused_softmax_cross_entropy_matches_finite_differences() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let mut logits = Tensor::<f64>::uniform(&[8], 2.0, &mut rng);
        let class = (seed % 8) as usize;
        let probs = softmax(&logits).unwrap();
        let analytic = softmax_cross_entropy_grad(&probs, class).unwrap();
        let numeric = numeric_grad(&mut logits, |y| {
            cross_entropy(&softmax(y).unwrap(), class).unwrap()
        });
        for (a, n) in analytic.data().iter().zip(&numeric) {
            assert_close(*a, *n, "softmax+ce");
        }
    }
}
