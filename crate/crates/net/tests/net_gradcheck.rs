//! Whole-network gradient checks on small toy architectures: every
//! parameter gradient is compared against central finite differences in
//! f64 (h = 1e-5, relative error < 1e-4).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use timbre_net::{BandCrop, BranchSpec, LayerSpec, Network, NetworkSpec};
use timbre_tensor::ops::cross_entropy;
use timbre_tensor::Tensor;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn dropout_free_head(hidden: usize, classes: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Concat,
        LayerSpec::Dropout { rate: 0.0 },
        LayerSpec::Dense { units: hidden, bias: true },
        LayerSpec::Relu { alpha: 0.3 },
        LayerSpec::Dropout { rate: 0.0 },
        LayerSpec::Dense { units: classes, bias: false },
        LayerSpec::Softmax,
    ]
}

fn check_network(spec: &NetworkSpec, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::<f64>::init(spec, &mut rng).unwrap();
    let input = Tensor::<f64>::uniform(
        &[spec.input_frames, spec.input_bins],
        1.0,
        &mut rng,
    );
    let class = 1usize;

    let (probs, tape) = net.forward_train(&input, &mut rng).unwrap();
    assert!((probs.data().iter().copied().sum::<f64>() - 1.0).abs() < 1e-12);
    let analytic = net.backward(tape, class).unwrap();

    let mut checked = 0usize;
    for (p_idx, analytic_tensor) in analytic.iter().enumerate() {
        let numel = net.params()[p_idx].numel();
        for e_idx in 0..numel {
            let orig = net.params()[p_idx].data()[e_idx];
            net.params_mut()[p_idx].data_mut()[e_idx] = orig + H;
            let up = cross_entropy(&net.forward(&input).unwrap(), class).unwrap();
            net.params_mut()[p_idx].data_mut()[e_idx] = orig - H;
            let down = cross_entropy(&net.forward(&input).unwrap(), class).unwrap();
            net.params_mut()[p_idx].data_mut()[e_idx] = orig;

            let numeric = (up - down) / (2.0 * H);
            let a = analytic_tensor.data()[e_idx];
            let diff = (a - numeric).abs();
            assert!(
                diff <= REL_TOL * a.abs().max(numeric.abs()) || diff < 1e-8,
                "param {p_idx}[{e_idx}]: analytic {a} vs numeric {numeric}"
            );
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn two_layer_planar_toy_net_passes_gradcheck() {
    let spec = NetworkSpec {
        name: "toy-2d".into(),
        input_frames: 12,
        input_bins: 10,
        branches: vec![BranchSpec {
            crop: BandCrop::new(0, 10).unwrap(),
            layers: vec![
                LayerSpec::Conv2d { dt: 3, dk: 3, cout: 3 },
                LayerSpec::Relu { alpha: 0.3 },
                LayerSpec::MaxPool { pt: 2, pk: 2 },
                LayerSpec::Flatten,
            ],
        }],
        head: dropout_free_head(6, 3),
    };
    check_network(&spec, 41);
}

#[test]
fn hybrid_toy_net_with_all_branch_kinds_passes_gradcheck() {
    let spec = NetworkSpec {
        name: "toy-hybrid".into(),
        input_frames: 11,
        input_bins: 10,
        branches: vec![
            BranchSpec {
                crop: BandCrop::new(0, 10).unwrap(),
                layers: vec![
                    LayerSpec::Conv2d { dt: 2, dk: 3, cout: 2 },
                    LayerSpec::Relu { alpha: 0.3 },
                    LayerSpec::MaxPool { pt: 2, pk: 2 },
                    LayerSpec::Flatten,
                ],
            },
            BranchSpec {
                crop: BandCrop::new(4, 10).unwrap(),
                layers: vec![
                    LayerSpec::Conv1dFullHeight { dt: 3, cout: 2 },
                    LayerSpec::Relu { alpha: 0.3 },
                    LayerSpec::MaxPool { pt: 3, pk: 1 },
                    LayerSpec::Flatten,
                ],
            },
            BranchSpec {
                crop: BandCrop::new(1, 9).unwrap(),
                layers: vec![
                    LayerSpec::Spiral { dt: 2, dk: 2, octaves: 2, q: 3, cout: 2 },
                    LayerSpec::Relu { alpha: 0.3 },
                    LayerSpec::MaxPool { pt: 2, pk: 2 },
                    LayerSpec::Flatten,
                ],
            },
        ],
        head: dropout_free_head(5, 4),
    };
    check_network(&spec, 42);
}
