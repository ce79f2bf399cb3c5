//! Rough per-sample timing of forward and forward+backward passes for
//! each registered architecture.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use timbre_net::{by_name, canonical_names, Network};
use timbre_tensor::Tensor;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let input = Tensor::<f32>::uniform(&[128, 96], 1.0, &mut rng);
    for name in canonical_names() {
        let spec = by_name(name).unwrap();
        let net = Network::<f32>::init(&spec, &mut rng).unwrap();

        let reps = 8;
        let start = Instant::now();
        for _ in 0..reps {
            let _ = net.forward(&input).unwrap();
        }
        let fwd = start.elapsed().as_secs_f64() / reps as f64;

        let start = Instant::now();
        for _ in 0..reps {
            let (_, tape) = net.forward_train(&input, &mut rng).unwrap();
            let _ = net.backward(tape, 0).unwrap();
        }
        let both = start.elapsed().as_secs_f64() / reps as f64;

        println!("{name:>10}: forward {:7.2} ms   forward+backward {:7.2} ms", fwd * 1e3, both * 1e3);
    }
}
