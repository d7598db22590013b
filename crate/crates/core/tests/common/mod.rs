//! Test support: a dense MLP written with plain scalar loops, used as an
//! independent reference for the sparse implementation, plus fixtures.

#![allow(dead_code)]

use motifset::network::{Activation, InitScheme, Network, NetworkConfig, WeightMode};
use motifset::topology::{BlockDensitySpec, MotifTopology, OutputGranularity};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fully materialised MLP: `w[l][i][o]` connects input `i` to output `o`.
#[derive(Clone, Debug)]
pub struct DenseMlp {
    pub w: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
    pub sigmoid: bool,
}

fn act(sigmoid: bool, z: f64) -> f64 {
    if sigmoid {
        1.0 / (1.0 + (-z).exp())
    } else if z > 0.0 {
        z
    } else {
        0.0
    }
}

fn act_grad(sigmoid: bool, z: f64) -> f64 {
    if sigmoid {
        let s = 1.0 / (1.0 + (-z).exp());
        s * (1.0 - s)
    } else if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

impl DenseMlp {
    /// Rebuilds the neuron-level weights from the raw parameters and block masks,
    /// without going through the library's own expansion.
    pub fn from_network(net: &Network) -> Self {
        let mut w = Vec::new();
        let mut b = Vec::new();
        for (l, layer) in net.layers().iter().enumerate() {
            let mask = &net.topology().layers()[l].mask;
            let m = layer.motif();
            let raw = layer.weights();
            // shared layers store one value per block
            let shared = raw.nrows() != layer.in_neurons();
            let mut dense = vec![vec![0.0; layer.out_neurons()]; layer.in_neurons()];
            for (i, row) in dense.iter_mut().enumerate() {
                for (o, v) in row.iter_mut().enumerate() {
                    if mask.get(i / m, o / m) {
                        *v = if shared { raw[[i / m, o / m]] } else { raw[[i, o]] };
                    }
                }
            }
            w.push(dense);
            b.push(layer.bias().to_vec());
        }
        DenseMlp {
            w,
            b,
            sigmoid: net.activation() == Activation::Sigmoid,
        }
    }

    /// Pre-activations and activations of every layer for one sample.
    pub fn forward_one(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut zs = Vec::new();
        let mut acts = vec![x.to_vec()];
        let last = self.w.len() - 1;
        for l in 0..self.w.len() {
            let a = &acts[l];
            let mut z = self.b[l].clone();
            for (i, &ai) in a.iter().enumerate() {
                for (o, zo) in z.iter_mut().enumerate() {
                    *zo += ai * self.w[l][i][o];
                }
            }
            let next = if l == last {
                softmax(&z)
            } else {
                z.iter().map(|&v| act(self.sigmoid, v)).collect()
            };
            zs.push(z);
            acts.push(next);
        }
        (zs, acts)
    }

    pub fn probs(&self, x: &Array2<f64>) -> Array2<f64> {
        let outs = self.w.last().unwrap()[0].len();
        let mut p = Array2::zeros((x.nrows(), outs));
        for (n, row) in x.outer_iter().enumerate() {
            let (_, acts) = self.forward_one(row.as_slice().unwrap());
            for (o, v) in acts.last().unwrap().iter().enumerate() {
                p[[n, o]] = *v;
            }
        }
        p
    }

    pub fn loss(&self, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
        let p = self.probs(x);
        let mut total = 0.0;
        for n in 0..x.nrows() {
            for o in 0..y.ncols() {
                if y[[n, o]] != 0.0 {
                    total -= y[[n, o]] * p[[n, o]].max(1e-12).ln();
                }
            }
        }
        total / x.nrows() as f64
    }

    /// Mean-loss gradients `(dW, db)` over the batch.
    pub fn gradients(&self, x: &Array2<f64>, y: &Array2<f64>) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        let n = x.nrows() as f64;
        let mut gw: Vec<Vec<Vec<f64>>> = self
            .w
            .iter()
            .map(|m| vec![vec![0.0; m[0].len()]; m.len()])
            .collect();
        let mut gb: Vec<Vec<f64>> = self.b.iter().map(|v| vec![0.0; v.len()]).collect();
        for (s, row) in x.outer_iter().enumerate() {
            let (zs, acts) = self.forward_one(row.as_slice().unwrap());
            let last = self.w.len() - 1;
            let mut delta: Vec<f64> = acts[last + 1]
                .iter()
                .enumerate()
                .map(|(o, p)| (p - y[[s, o]]) / n)
                .collect();
            for l in (0..=last).rev() {
                for (i, &ai) in acts[l].iter().enumerate() {
                    for (o, &d) in delta.iter().enumerate() {
                        gw[l][i][o] += ai * d;
                    }
                }
                for (o, &d) in delta.iter().enumerate() {
                    gb[l][o] += d;
                }
                if l > 0 {
                    let mut prev = vec![0.0; acts[l].len()];
                    for (i, p) in prev.iter_mut().enumerate() {
                        let mut sum = 0.0;
                        for (o, &d) in delta.iter().enumerate() {
                            sum += self.w[l][i][o] * d;
                        }
                        *p = sum * act_grad(self.sigmoid, zs[l - 1][i]);
                    }
                    delta = prev;
                }
            }
        }
        (gw, gb)
    }

    pub fn sgd_step(&mut self, x: &Array2<f64>, y: &Array2<f64>, lr: f64) {
        let (gw, gb) = self.gradients(x, y);
        for l in 0..self.w.len() {
            for i in 0..self.w[l].len() {
                for o in 0..self.w[l][i].len() {
                    self.w[l][i][o] -= lr * gw[l][i][o];
                }
            }
            for o in 0..self.b[l].len() {
                self.b[l][o] -= lr * gb[l][o];
            }
        }
    }
}

pub fn config(activation: Activation, mode: WeightMode) -> NetworkConfig {
    NetworkConfig {
        activation,
        init: InitScheme::HeUniform,
        weight_mode: mode,
    }
}

/// Random network whose output layer shares the hidden motif size.
pub fn motif_network(
    sizes: &[usize],
    m: usize,
    density: f64,
    cfg: NetworkConfig,
    seed: u64,
) -> Network {
    let topo = MotifTopology::build_with_output(
        sizes,
        m,
        BlockDensitySpec::fixed(density),
        OutputGranularity::Motif,
        seed,
    )
    .unwrap();
    Network::init(topo, cfg, seed.wrapping_add(1))
}

/// Gives every bias a random value so bias paths are exercised.
pub fn randomize_biases(net: &mut Network, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in 0..net.layers().len() {
        let w = net.layers()[l].weights().clone();
        let b = net.layers()[l].bias().mapv(|_| rng.random_range(-0.5..0.5));
        net.set_layer_params(l, w, b).unwrap();
    }
}

/// Random inputs in `[-1, 1]` and one-hot targets.
pub fn batch(n: usize, features: usize, classes: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, features), |_| rng.random_range(-1.0..1.0));
    let mut y = Array2::zeros((n, classes));
    for r in 0..n {
        y[[r, rng.random_range(0..classes)]] = 1.0;
    }
    (x, y)
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Toy CSV: `classes` Gaussian blobs in `features` dimensions, label last.
pub fn toy_csv(samples: usize, features: usize, classes: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..features).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let mut out: String = (0..features).map(|f| format!("f{f},")).collect();
    out.push_str("label\n");
    for s in 0..samples {
        let c = s % classes;
        for f in 0..features {
            let v = centers[c][f] + rng.random_range(-1.0..1.0);
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("class{c}\n"));
    }
    out
}
