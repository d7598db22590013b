//! Trains a shared-weight motif network on synthetic Gaussian blobs with a
//! hand-written loop: SGD over mini-batches, evaluation, and prune-and-regrow
//! between epochs.
//!
//! cargo run --release --example train_toy

use motifset::evolution::{evolution_schedule, evolve, EvolutionPolicy};
use motifset::network::{loss, Network, NetworkConfig};
use motifset::topology::{BlockDensitySpec, MotifTopology};
use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(n: usize, features: usize, classes: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>) {
    let centers = Array2::from_shape_fn((classes, features), |_| rng.random_range(-1.5..1.5));
    let mut x = Array2::zeros((n, features));
    let mut y = Array2::zeros((n, classes));
    for i in 0..n {
        let c = rng.random_range(0..classes);
        y[[i, c]] = 1.0;
        for f in 0..features {
            x[[i, f]] = centers[[c, f]] + rng.random_range(-1.0..1.0);
        }
    }
    (x, y)
}

fn main() -> motifset::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (x, y) = blobs(1200, 32, 4, &mut rng);
    let (x_train, y_train) = (x.slice(s![..900, ..]), y.slice(s![..900, ..]));
    let (x_test, y_test) = (x.slice(s![900.., ..]), y.slice(s![900.., ..]));

    let topo = MotifTopology::build(&[32, 64, 64, 4], 2, BlockDensitySpec::erdos_renyi(4.0), 1)?;
    let mut net = Network::init(topo, NetworkConfig::default(), 2);
    let policy = EvolutionPolicy::default();
    let epochs = 15;
    for epoch in 0..epochs {
        let mut total = 0.0;
        for start in (0..900).step_by(32) {
            let end = (start + 32).min(900);
            let (xb, yb) = (x_train.slice(s![start..end, ..]), y_train.slice(s![start..end, ..]));
            let cache = net.forward(xb)?;
            total += loss(&cache, yb)? * (end - start) as f64;
            let grads = net.backward(&cache, yb)?;
            net.sgd_step(&grads, 0.05)?;
        }
        let acc = net.accuracy(x_test, y_test)?;
        print!("epoch {epoch:>2}: loss {:.4}, test accuracy {acc:.3}", total / 900.0);
        if evolution_schedule(epoch, epochs, policy.period) {
            let stats = evolve(&mut net, &policy, epoch as u64)?;
            let moved: usize = stats.layers.iter().map(|s| s.regrown).sum();
            print!(", {moved} blocks rewired");
        }
        println!();
    }
    println!("distinct weights per layer: {:?}", net.trainable_weights());
    Ok(())
}
