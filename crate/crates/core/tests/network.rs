mod common;

use common::{batch, config, max_abs_diff, motif_network, randomize_biases, DenseMlp};
use motifset::network::{self, load_checkpoint, save_checkpoint, Activation, Network, WeightMode};
use motifset::topology::{BlockDensitySpec, MotifTopology};
use proptest::prelude::*;

#[test]
fn dense_oracle_matches_output_and_loss() {
    let net = motif_network(&[8, 12, 4], 1, 0.6, config(Activation::Sigmoid, WeightMode::Shared), 4);
    let (x, y) = batch(10, 8, 4, 1);
    let oracle = DenseMlp::from_network(&net);
    let cache = net.forward(x.view()).unwrap();
    assert!(max_abs_diff(cache.output(), &oracle.probs(&x)) < 1e-14);
    let loss = network::loss(&cache, y.view()).unwrap();
    assert!((loss - oracle.loss(&x, &y)).abs() < 1e-13);
}

#[test]
fn gradients_match_dense_oracle_after_tiling() {
    // shared-weight gradient = sum of the dense gradient over the tile
    for m in [2, 4] {
        let mut net = motif_network(&[8, 16, 8], m, 0.5, config(Activation::Relu, WeightMode::Shared), m as u64);
        randomize_biases(&mut net, 3);
        let (x, y) = batch(7, 8, 8, 2);
        let grads = net.backward(&net.forward(x.view()).unwrap(), y.view()).unwrap();
        let (gw, gb) = DenseMlp::from_network(&net).gradients(&x, &y);
        for (l, g) in grads.layers.iter().enumerate() {
            let mask = &net.topology().layers()[l].mask;
            for ((j, k), &v) in g.weights.indexed_iter() {
                let mut tile = 0.0;
                for p in 0..m {
                    for q in 0..m {
                        tile += gw[l][j * m + p][k * m + q];
                    }
                }
                let want = if mask.get(j, k) { tile } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "layer {l} block ({j},{k}): {v} vs {want}");
            }
            for (o, &v) in g.bias.iter().enumerate() {
                assert!((v - gb[l][o]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn independent_mode_matches_dense_oracle_within_active_tiles() {
    let mut net = motif_network(&[8, 8, 4], 2, 0.5, config(Activation::Sigmoid, WeightMode::Independent), 9);
    randomize_biases(&mut net, 9);
    let (x, y) = batch(5, 8, 4, 9);
    let grads = net.backward(&net.forward(x.view()).unwrap(), y.view()).unwrap();
    let (gw, _) = DenseMlp::from_network(&net).gradients(&x, &y);
    for (l, g) in grads.layers.iter().enumerate() {
        let mask = &net.topology().layers()[l].mask;
        for ((i, o), &v) in g.weights.indexed_iter() {
            let want = if mask.get(i / 2, o / 2) { gw[l][i][o] } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }
}

#[test]
fn checkpoint_round_trip_on_disk() {
    let net = motif_network(&[8, 8, 4], 2, 0.5, config(Activation::Relu, WeightMode::Independent), 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.bin");
    save_checkpoint(&net, &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), net);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    std::fs::write(&path, bytes).unwrap();
    assert!(load_checkpoint(&path).is_err());
}

#[test]
fn training_reduces_loss_on_separable_data() {
    let topo = MotifTopology::build(&[4, 16, 2], 2, BlockDensitySpec::fixed(0.8), 0).unwrap();
    let mut net = Network::init(topo, config(Activation::Relu, WeightMode::Shared), 0);
    let (x, _) = batch(64, 4, 2, 0);
    let mut y = ndarray::Array2::zeros((64, 2));
    for (r, row) in x.outer_iter().enumerate() {
        y[[r, usize::from(row[0] + row[1] > 0.0)]] = 1.0;
    }
    let first = network::loss(&net.forward(x.view()).unwrap(), y.view()).unwrap();
    for _ in 0..200 {
        let g = net.backward(&net.forward(x.view()).unwrap(), y.view()).unwrap();
        net.sgd_step(&g, 0.2).unwrap();
    }
    let last = network::loss(&net.forward(x.view()).unwrap(), y.view()).unwrap();
    assert!(last < 0.5 * first, "{first} -> {last}");
    assert!(net.accuracy(x.view(), y.view()).unwrap() > 0.9);
}

fn inactive_are_zero(net: &Network) -> bool {
    net.layers().iter().enumerate().all(|(l, layer)| {
        let mask = &net.topology().layers()[l].mask;
        let w = layer.weights();
        let block = if w.nrows() == layer.in_neurons() { layer.motif() } else { 1 };
        w.indexed_iter().all(|((r, c), &v)| mask.get(r / block, c / block) || v == 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sgd_keeps_inactive_weights_zero(
        m in prop_oneof![Just(1usize), Just(2), Just(4)],
        units in prop::collection::vec(1usize..4, 3),
        density in 0.1f64..1.0,
        independent in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let sizes: Vec<usize> = units.iter().map(|u| u * m).collect();
        let mode = if independent { WeightMode::Independent } else { WeightMode::Shared };
        let mut net = motif_network(&sizes, m, density, config(Activation::Relu, mode), seed);
        let (x, y) = batch(4, sizes[0], sizes[2], seed);
        for _ in 0..3 {
            let g = net.backward(&net.forward(x.view()).unwrap(), y.view()).unwrap();
            net.sgd_step(&g, 0.5).unwrap();
        }
        prop_assert!(inactive_are_zero(&net));
    }

    #[test]
    fn outputs_are_distributions(
        m in prop_oneof![Just(1usize), Just(2)],
        seed in any::<u64>(),
        scale in 0.1f64..1e3,
    ) {
        let net = motif_network(&[4 * m, 4 * m, 2 * m], m, 0.7, config(Activation::Relu, WeightMode::Shared), seed);
        let (x, _) = batch(3, 4 * m, 2 * m, seed);
        let p = net.predict_proba((x * scale).view()).unwrap();
        for row in p.outer_iter() {
            prop_assert!(row.iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn init_is_deterministic(seed in any::<u64>()) {
        let topo = MotifTopology::build(&[8, 8, 3], 2, BlockDensitySpec::fixed(0.5), seed).unwrap();
        let a = Network::init(topo.clone(), config(Activation::Relu, WeightMode::Shared), seed);
        let b = Network::init(topo, config(Activation::Relu, WeightMode::Shared), seed);
        prop_assert_eq!(a.to_bytes(), b.to_bytes());
    }
}
