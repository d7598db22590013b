//! Compares backpropagated gradients with central finite differences for
//! both weight modes.
//!
//! cargo run --example gradient_check

use motifset::network::{loss, Activation, InitScheme, Network, NetworkConfig, WeightMode};
use motifset::topology::{BlockDensitySpec, MotifTopology};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> motifset::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = Array2::from_shape_fn((6, 8), |_| rng.random_range(-1.0..1.0));
    let mut y = Array2::zeros((6, 3));
    for r in 0..6 {
        y[[r, r % 3]] = 1.0;
    }
    let h = 1e-5;
    for mode in [WeightMode::Shared, WeightMode::Independent] {
        let topo = MotifTopology::build(&[8, 8, 3], 2, BlockDensitySpec::fixed(0.5), 0)?;
        let cfg = NetworkConfig {
            activation: Activation::Sigmoid,
            init: InitScheme::HeNormal,
            weight_mode: mode,
        };
        let mut net = Network::init(topo, cfg, 1);
        let grads = net.backward(&net.forward(x.view())?, y.view())?;
        let mut worst: f64 = 0.0;
        for l in 0..net.layers().len() {
            let w0 = net.layers()[l].weights().clone();
            let b0 = net.layers()[l].bias().clone();
            for ((r, c), &g) in grads.layers[l].weights.indexed_iter() {
                if w0[[r, c]] == 0.0 {
                    continue; // inactive
                }
                let mut at = |delta: f64| -> motifset::Result<f64> {
                    let mut w = w0.clone();
                    w[[r, c]] += delta;
                    net.set_layer_params(l, w, b0.clone())?;
                    loss(&net.forward(x.view())?, y.view())
                };
                let numeric = (at(h)? - at(-h)?) / (2.0 * h);
                worst = worst.max((g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-8));
            }
            net.set_layer_params(l, w0, b0)?;
        }
        println!("{mode:?}: worst relative error {worst:.2e}");
    }
    Ok(())
}
