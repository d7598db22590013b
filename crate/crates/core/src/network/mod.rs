//! Motif-based sparse MLP.
//!
//! Each weight layer holds parameters only for the active blocks of its
//! topology mask. In [`WeightMode::Shared`] one scalar serves the whole
//! `m x m` tile of a block, so the forward pass pools the `m` inputs of each
//! input motif, multiplies at block granularity and broadcasts the result to
//! the `m` outputs of each output motif. That is exactly the product with the
//! tiled neuron-level weight matrix, at `1/m^2` of the multiply count.

mod checkpoint;
mod layer;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::topology::MotifTopology;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layer::SparseLayer;
pub(crate) use layer::ActiveIndex;

/// Probability floor applied before taking logarithms in the loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    #[default]
    HeUniform,
    HeNormal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// One scalar per active block.
    #[default]
    Shared,
    /// Independent neuron-level weights inside active blocks.
    Independent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NetworkConfig {
    pub activation: Activation,
    pub init: InitScheme,
    pub weight_mode: WeightMode,
}

/// Pre- and post-activation matrices of one forward pass. `a[0]` is the input
/// batch, `z[i]` and `a[i + 1]` belong to weight layer `i`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub z: Vec<Array2<f64>>,
    pub a: Vec<Array2<f64>>,
}

impl ForwardCache {
    /// Softmax output of the final layer.
    pub fn output(&self) -> &Array2<f64> {
        self.a.last().expect("cache holds at least the input")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gradients with the same shapes as the network parameters; zero at inactive blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub(crate) topology: MotifTopology,
    pub(crate) layers: Vec<SparseLayer>,
    pub(crate) config: NetworkConfig,
}

impl Network {
    /// Creates a network with all parameters zero.
    pub fn zeros(topology: MotifTopology, config: NetworkConfig) -> Self {
        let layers = topology
            .layers()
            .iter()
            .map(|blocks| SparseLayer::zeros(blocks, config.weight_mode))
            .collect();
        Network {
            topology,
            layers,
            config,
        }
    }

    /// He-initialized active weights, zero biases.
    pub fn init(topology: MotifTopology, config: NetworkConfig, seed: u64) -> Self {
        let mut net = Network::zeros(topology, config);
        for l in 0..net.layers.len() {
            let mut rng = rng::stream(seed, &[rng::DOMAIN_INIT, l as u64]);
            let blocks = &net.topology.layers()[l];
            let fan_in = blocks.mean_fan_in();
            let active: Vec<_> = blocks.mask.active().collect();
            for (j, k) in active {
                net.init_block(l, fan_in, j, k, &mut rng);
            }
        }
        net
    }

    /// Draws fresh weights for block `(j, k)` of layer `l` at the layer's current fan-in.
    pub(crate) fn init_block<R: Rng + ?Sized>(
        &mut self,
        l: usize,
        fan_in: f64,
        j: usize,
        k: usize,
        rng: &mut R,
    ) {
        let scheme = self.config.init;
        let mut draw = || -> f64 {
            match scheme {
                InitScheme::HeUniform => {
                    let bound = (6.0 / fan_in).sqrt();
                    Uniform::new_inclusive(-bound, bound)
                        .expect("finite bound")
                        .sample(rng)
                }
                InitScheme::HeNormal => Normal::new(0.0, (2.0 / fan_in).sqrt())
                    .expect("finite std")
                    .sample(rng),
            }
        };
        let layer = &mut self.layers[l];
        let b = layer.motif;
        if layer.is_shared() {
            layer.weights[[j, k]] = draw();
        } else {
            for p in 0..b {
                for q in 0..b {
                    layer.weights[[j * b + p, k * b + q]] = draw();
                }
            }
        }
    }

    pub fn topology(&self) -> &MotifTopology {
        &self.topology
    }

    pub fn layers(&self) -> &[SparseLayer] {
        &self.layers
    }

    pub fn config(&self) -> NetworkConfig {
        self.config
    }

    pub fn activation(&self) -> Activation {
        self.config.activation
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.config.weight_mode
    }

    pub fn input_size(&self) -> usize {
        self.topology.layer_sizes()[0]
    }

    pub fn output_size(&self) -> usize {
        *self.topology.layer_sizes().last().unwrap()
    }

    /// Replaces the parameters of one layer. Weights must keep the layer's
    /// shape and be exactly zero outside active blocks.
    pub fn set_layer_params(
        &mut self,
        index: usize,
        weights: Array2<f64>,
        bias: Array1<f64>,
    ) -> Result<()> {
        let layers = self.layers.len();
        let layer = self
            .layers
            .get_mut(index)
            .ok_or(Error::LayerIndex { index, layers })?;
        if weights.dim() != layer.weights.dim() || bias.len() != layer.bias.len() {
            return Err(Error::Shape {
                what: "layer parameters",
                expected: format!("{:?} + {}", layer.weights.dim(), layer.bias.len()),
                found: format!("{:?} + {}", weights.dim(), bias.len()),
            });
        }
        let mask = &self.topology.layers()[index].mask;
        let b = layer.motif;
        let shared = layer.is_shared();
        for ((r, c), &w) in weights.indexed_iter() {
            let active = if shared {
                mask.get(r, c)
            } else {
                mask.get(r / b, c / b)
            };
            if !active && w != 0.0 {
                return Err(Error::Shape {
                    what: "inactive weight",
                    expected: "0".into(),
                    found: format!("{w} at ({r}, {c})"),
                });
            }
        }
        layer.weights = weights.as_standard_layout().into_owned();
        layer.bias = bias;
        Ok(())
    }

    /// Neuron-level `in x out` weight matrix of layer `index` (tiles shared blocks).
    pub fn expanded_weights(&self, index: usize) -> Result<Array2<f64>> {
        let layers = self.layers.len();
        let layer = self
            .layers
            .get(index)
            .ok_or(Error::LayerIndex { index, layers })?;
        if !layer.is_shared() || layer.motif == 1 {
            return Ok(layer.weights.clone());
        }
        let b = layer.motif;
        let mut out = Array2::zeros((layer.in_neurons(), layer.out_neurons()));
        for ((j, k), &w) in layer.weights.indexed_iter() {
            for p in 0..b {
                for q in 0..b {
                    out[[j * b + p, k * b + q]] = w;
                }
            }
        }
        Ok(out)
    }

    /// Distinct trainable weights per layer (biases excluded).
    pub fn trainable_weights(&self) -> Vec<usize> {
        self.layers
            .iter()
            .map(|l| {
                let blocks = l.index.cols.len();
                if l.is_shared() {
                    blocks
                } else {
                    blocks * l.motif * l.motif
                }
            })
            .collect()
    }

    pub(crate) fn refresh_index(&mut self, l: usize) {
        self.layers[l].index = ActiveIndex::from_mask(&self.topology.layers()[l].mask);
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_size() || x.nrows() == 0 {
            return Err(Error::Shape {
                what: "input batch",
                expected: format!("n x {} with n > 0", self.input_size()),
                found: format!("{} x {}", x.nrows(), x.ncols()),
            });
        }
        Ok(())
    }

    /// Applies the hidden activation or, for the last layer, a row-wise
    /// softmax shifted by the row maximum.
    fn activate(&self, l: usize, z: &[f64], width: usize) -> Vec<f64> {
        if l + 1 == self.layers.len() {
            let mut a = z.to_vec();
            for row in a.chunks_exact_mut(width) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                row.iter_mut().for_each(|v| *v /= sum);
            }
            a
        } else {
            let act = self.config.activation;
            z.iter().map(|&v| act.apply(v)).collect()
        }
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(&x)?;
        let n = x.nrows();
        let mut cache = ForwardCache {
            z: Vec::with_capacity(self.layers.len()),
            a: vec![x.as_standard_layout().into_owned()],
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = cache.a[l].as_slice().expect("standard layout");
            let width = layer.out_neurons();
            let z = layer::layer_forward(layer, prev, n);
            let a = self.activate(l, &z, width);
            cache.z.push(Array2::from_shape_vec((n, width), z).expect("shape"));
            cache.a.push(Array2::from_shape_vec((n, width), a).expect("shape"));
        }
        Ok(cache)
    }

    /// Softmax probabilities without keeping intermediate activations.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let n = x.nrows();
        let mut a = x.as_standard_layout().into_owned().into_raw_vec_and_offset().0;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer::layer_forward(layer, &a, n);
            a = self.activate(l, &z, layer.out_neurons());
        }
        Ok(Array2::from_shape_vec((n, self.output_size()), a).expect("shape"))
    }

    pub fn backward(&self, cache: &ForwardCache, y_true: ArrayView2<f64>) -> Result<Gradients> {
        self.check_cache(cache)?;
        let out = cache.output();
        if y_true.dim() != out.dim() {
            return Err(Error::Shape {
                what: "labels",
                expected: format!("{:?}", out.dim()),
                found: format!("{:?}", y_true.dim()),
            });
        }
        let n = out.nrows();
        let inv_n = 1.0 / n as f64;
        // softmax + cross-entropy: dL/dz = (A - Y) / n
        let mut dz: Vec<f64> = out
            .iter()
            .zip(y_true.iter())
            .map(|(&a, &y)| (a - y) * inv_n)
            .collect();

        let mut grads: Vec<LayerGradient> = self
            .layers
            .iter()
            .map(|l| LayerGradient {
                weights: Array2::zeros(l.weights.dim()),
                bias: Array1::zeros(l.bias.len()),
            })
            .collect();

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let a_prev = cache.a[l].as_slice().expect("standard layout");
            let g = &mut grads[l];
            let da = layer::layer_backward(
                layer,
                a_prev,
                &dz,
                n,
                g.weights.as_slice_mut().expect("standard layout"),
                g.bias.as_slice_mut().expect("contiguous"),
                l > 0,
            );
            if let Some(da) = da {
                let z_prev = cache.z[l - 1].as_slice().expect("standard layout");
                let act = self.config.activation;
                dz = da
                    .iter()
                    .zip(z_prev)
                    .zip(a_prev)
                    .map(|((&d, &z), &a)| d * act.derivative(z, a))
                    .collect();
            }
        }
        Ok(Gradients { layers: grads })
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        let layers = self.layers.len();
        if cache.a.len() != layers + 1 || cache.z.len() != layers {
            return Err(Error::StaleCache(format!(
                "{} activations / {} pre-activations for {layers} layers",
                cache.a.len(),
                cache.z.len()
            )));
        }
        let n = cache.a[0].nrows();
        if cache.a[0].ncols() != self.input_size() {
            return Err(Error::StaleCache("input width differs".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let shape = (n, layer.out_neurons());
            if cache.z[l].dim() != shape || cache.a[l + 1].dim() != shape {
                return Err(Error::StaleCache(format!("layer {l} has a different width")));
            }
        }
        Ok(())
    }

    /// Plain SGD on active parameters: `w -= lr * g`, `b -= lr * g_b`.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Shape {
                what: "gradients",
                expected: format!("{} layers", self.layers.len()),
                found: format!("{} layers", grads.layers.len()),
            });
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            if g.weights.dim() != layer.weights.dim() || g.bias.len() != layer.bias.len() {
                return Err(Error::Shape {
                    what: "layer gradient",
                    expected: format!("{:?}", layer.weights.dim()),
                    found: format!("{:?}", g.weights.dim()),
                });
            }
            let b = layer.motif;
            let shared = layer.is_shared();
            let cols = layer.weights.ncols();
            let w = layer.weights.as_slice_mut().expect("standard layout");
            let gw = g.weights.as_slice().expect("standard layout");
            for j in 0..layer.index.row_ptr.len() - 1 {
                for &k in layer.index.row(j) {
                    if shared {
                        let i = j * cols + k;
                        w[i] -= learning_rate * gw[i];
                    } else {
                        for p in 0..b {
                            let start = (j * b + p) * cols + k * b;
                            for i in start..start + b {
                                w[i] -= learning_rate * gw[i];
                            }
                        }
                    }
                }
            }
            layer.bias.scaled_add(-learning_rate, &g.bias);
        }
        Ok(())
    }

    /// True when every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|w| w.is_finite()) && l.bias.iter().all(|b| b.is_finite())
        })
    }

    /// Fraction of rows whose argmax prediction matches the argmax label.
    pub fn accuracy(&self, x: ArrayView2<f64>, y_true: ArrayView2<f64>) -> Result<f64> {
        if x.nrows() != y_true.nrows() || y_true.ncols() != self.output_size() {
            return Err(Error::Shape {
                what: "labels",
                expected: format!("{} x {}", x.nrows(), self.output_size()),
                found: format!("{} x {}", y_true.nrows(), y_true.ncols()),
            });
        }
        const CHUNK: usize = 1024;
        let mut correct = 0usize;
        for start in (0..x.nrows()).step_by(CHUNK) {
            let end = (start + CHUNK).min(x.nrows());
            let probs = self.predict_proba(x.slice(ndarray::s![start..end, ..]))?;
            for (p, y) in probs.outer_iter().zip(y_true.slice(ndarray::s![start..end, ..]).outer_iter()) {
                if argmax(p.iter().copied()) == argmax(y.iter().copied()) {
                    correct += 1;
                }
            }
        }
        Ok(correct as f64 / x.nrows() as f64)
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Mean cross-entropy of the cached softmax output against one-hot labels.
pub fn loss(cache: &ForwardCache, y_true: ArrayView2<f64>) -> Result<f64> {
    cross_entropy(cache.output().view(), y_true)
}

pub fn cross_entropy(probs: ArrayView2<f64>, y_true: ArrayView2<f64>) -> Result<f64> {
    if probs.dim() != y_true.dim() || probs.nrows() == 0 {
        return Err(Error::Shape {
            what: "labels",
            expected: format!("{:?}", probs.dim()),
            found: format!("{:?}", y_true.dim()),
        });
    }
    let total: f64 = probs
        .iter()
        .zip(y_true.iter())
        .map(|(&p, &y)| if y == 0.0 { 0.0 } else { -y * p.max(PROB_FLOOR).ln() })
        .sum();
    Ok(total / probs.nrows() as f64)
}

pub fn init_network(topology: MotifTopology, config: NetworkConfig, seed: u64) -> Network {
    Network::init(topology, config, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{BlockDensitySpec, OutputGranularity};
    use ndarray::{array, Array2};

    fn full(sizes: &[usize], m: usize) -> MotifTopology {
        MotifTopology::build(sizes, m, BlockDensitySpec::fixed(1.0), 0).unwrap()
    }

    #[test]
    fn zero_network_gives_uniform_softmax() {
        let net = Network::zeros(full(&[5, 4, 10], 1), NetworkConfig::default());
        let x = Array2::from_shape_fn((3, 5), |(i, j)| (i * 5 + j) as f64 - 4.0);
        let cache = net.forward(x.view()).unwrap();
        for v in cache.output() {
            assert!((v - 0.1).abs() < 1e-15);
        }
        let y = Array2::from_shape_fn((3, 10), |(_, j)| if j == 0 { 1.0 } else { 0.0 });
        assert!((loss(&cache, y.view()).unwrap() - 10f64.ln()).abs() < 1e-12);
        // uniform output, lowest-index tie-break picks class 0
        assert_eq!(net.accuracy(x.view(), y.view()).unwrap(), 1.0);
    }

    #[test]
    fn he_uniform_bound_at_full_density() {
        let net = Network::init(full(&[20, 8, 3], 1), NetworkConfig::default(), 9);
        let bound0 = (6.0f64 / 20.0).sqrt();
        assert!(net.layers()[0].weights().iter().all(|w| w.abs() <= bound0));
        let bound1 = (6.0f64 / 8.0).sqrt();
        assert!(net.layers()[1].weights().iter().all(|w| w.abs() <= bound1));
        assert!(net.layers().iter().all(|l| l.bias().iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_respects_mask_and_is_deterministic() {
        for mode in [WeightMode::Shared, WeightMode::Independent] {
            let topo = MotifTopology::build(&[8, 8, 4], 2, BlockDensitySpec::fixed(0.5), 4).unwrap();
            let cfg = NetworkConfig {
                weight_mode: mode,
                init: InitScheme::HeNormal,
                ..Default::default()
            };
            let a = Network::init(topo.clone(), cfg, 3);
            let b = Network::init(topo.clone(), cfg, 3);
            assert_eq!(a, b);
            for (l, layer) in a.layers().iter().enumerate() {
                let mask = topo.expand_mask(l).unwrap();
                let w = a.expanded_weights(l).unwrap();
                for ((r, c), &v) in w.indexed_iter() {
                    assert_eq!(mask.get(r, c), v != 0.0, "layer {l} ({r},{c})");
                }
                assert_eq!(layer.motif(), topo.layers()[l].motif);
            }
        }
    }

    #[test]
    fn input_shape_errors() {
        let net = Network::zeros(full(&[4, 2], 1), NetworkConfig::default());
        assert!(matches!(net.forward(Array2::zeros((2, 3)).view()), Err(Error::Shape { .. })));
        assert!(matches!(net.forward(Array2::zeros((0, 4)).view()), Err(Error::Shape { .. })));
        let cache = net.forward(Array2::zeros((2, 4)).view()).unwrap();
        assert!(loss(&cache, Array2::zeros((2, 3)).view()).is_err());
        assert!(net.backward(&cache, Array2::zeros((3, 2)).view()).is_err());
    }

    #[test]
    fn stale_cache_detected() {
        let small = Network::zeros(full(&[4, 2], 1), NetworkConfig::default());
        let big = Network::zeros(full(&[4, 3, 2], 1), NetworkConfig::default());
        let cache = small.forward(Array2::zeros((2, 4)).view()).unwrap();
        let y = Array2::zeros((2, 2));
        assert!(matches!(big.backward(&cache, y.view()), Err(Error::StaleCache(_))));
    }

    #[test]
    fn exact_target_gives_zero_gradient() {
        let net = Network::init(full(&[3, 4, 2], 1), NetworkConfig::default(), 1);
        let x = array![[0.3, -0.2, 0.9], [1.0, 0.5, -0.4]];
        let cache = net.forward(x.view()).unwrap();
        let y = cache.output().clone();
        let g = net.backward(&cache, y.view()).unwrap();
        for lg in &g.layers {
            assert!(lg.weights.iter().chain(lg.bias.iter()).all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn sgd_single_block_arithmetic() {
        let topo = MotifTopology::build_with_output(
            &[2, 2],
            2,
            BlockDensitySpec::fixed(1.0),
            OutputGranularity::Motif,
            0,
        )
        .unwrap();
        let mut net = Network::zeros(topo, NetworkConfig::default());
        net.set_layer_params(0, array![[0.4]], array![0.0, 0.0]).unwrap();
        let g = Gradients {
            layers: vec![LayerGradient {
                weights: array![[2.0]],
                bias: array![0.0, 0.0],
            }],
        };
        net.sgd_step(&g, 0.05).unwrap();
        assert_eq!(net.layers()[0].weights()[[0, 0]], 0.4 - 0.05 * 2.0);
    }

    #[test]
    fn zero_gradient_step_is_identity() {
        let mut net = Network::init(full(&[6, 4, 3], 1), NetworkConfig::default(), 2);
        let before = net.clone();
        let g = Gradients {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: Array2::zeros(l.weights().dim()),
                    bias: Array1::zeros(l.bias().len()),
                })
                .collect(),
        };
        net.sgd_step(&g, 0.05).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn set_params_rejects_inactive_weights() {
        let mut mask_topo = MotifTopology::build(&[4, 2], 1, BlockDensitySpec::fixed(0.5), 0).unwrap();
        let (r, c) = mask_topo.layers()[0].mask.inactive().next().unwrap();
        let mut net = Network::zeros(mask_topo.clone(), NetworkConfig::default());
        let mut w = Array2::zeros((4, 2));
        w[[r, c]] = 1.0;
        assert!(net.set_layer_params(0, w, Array1::zeros(2)).is_err());
        mask_topo = net.topology().clone();
        assert_eq!(mask_topo.num_layers(), 1);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax([0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax([1.0, 1.0]), 0);
    }

    #[test]
    fn trainable_weights_follow_motif_squares() {
        let topo = MotifTopology::build(&[8, 8, 8, 2], 2, BlockDensitySpec::fixed(1.0), 0).unwrap();
        let shared = Network::zeros(topo.clone(), NetworkConfig::default());
        assert_eq!(shared.trainable_weights(), vec![16, 16, 16]);
        let indep = Network::zeros(
            topo,
            NetworkConfig {
                weight_mode: WeightMode::Independent,
                ..Default::default()
            },
        );
        assert_eq!(indep.trainable_weights(), vec![64, 64, 16]);
    }
}
