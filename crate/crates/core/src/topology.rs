//! Motif-block connectivity.
//!
//! A weight layer between `rows` and `cols` neurons with motif size `m` is
//! described by a `(rows/m) x (cols/m)` boolean block mask. An active block
//! `(j, k)` connects every neuron of input motif `j` to every neuron of output
//! motif `k`. Masks are only ever stored at block granularity; neuron-level
//! views are produced on demand by [`BlockMask::expand`].

use std::fmt::Write as _;

use bitvec::vec::BitVec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// Per-layer density `min(1, eps * (rows + cols) / (rows * cols))` in blocks.
    ErdosRenyiSet,
    /// The same block density for every layer.
    FixedDensity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDensitySpec {
    pub mode: DensityMode,
    pub value: f64,
}

impl BlockDensitySpec {
    pub fn erdos_renyi(epsilon: f64) -> Self {
        BlockDensitySpec {
            mode: DensityMode::ErdosRenyiSet,
            value: epsilon,
        }
    }

    pub fn fixed(density: f64) -> Self {
        BlockDensitySpec {
            mode: DensityMode::FixedDensity,
            value: density,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.mode {
            DensityMode::ErdosRenyiSet => self.value > 0.0 && self.value.is_finite(),
            DensityMode::FixedDensity => self.value > 0.0 && self.value <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDensity(format!(
                "{:?} value {} out of range",
                self.mode, self.value
            )))
        }
    }

    /// Target fraction of active blocks for a `rows x cols` block mask.
    pub fn block_density(&self, rows: usize, cols: usize) -> f64 {
        match self.mode {
            DensityMode::FixedDensity => self.value,
            DensityMode::ErdosRenyiSet => {
                let (r, c) = (rows as f64, cols as f64);
                (self.value * (r + c) / (r * c)).min(1.0)
            }
        }
    }
}

/// Granularity of the final (hidden -> output) weight layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputGranularity {
    /// Output layer built at motif size 1; the class count need not be divisible by `m`.
    #[default]
    Neuron,
    /// Output layer uses the network motif size too (requires `m | classes`).
    Motif,
}

/// Row-major bitset over the blocks of one weight layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMask {
    rows: usize,
    cols: usize,
    bits: BitVec,
}

impl BlockMask {
    pub fn empty(rows: usize, cols: usize) -> Self {
        BlockMask {
            rows,
            cols,
            bits: BitVec::repeat(false, rows * cols),
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        BlockMask {
            rows,
            cols,
            bits: BitVec::repeat(true, rows * cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, active: bool) {
        self.bits.set(row * self.cols + col, active);
    }

    pub fn count_active(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn density(&self) -> f64 {
        self.count_active() as f64 / self.len() as f64
    }

    /// Active blocks in row-major (lexicographic) order.
    pub fn active(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.bits.iter_ones().map(move |i| (i / cols, i % cols))
    }

    /// Inactive blocks in row-major order.
    pub fn inactive(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.bits.iter_zeros().map(move |i| (i / cols, i % cols))
    }

    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for (_, c) in self.active() {
            counts[c] += 1;
        }
        counts
    }

    /// Tiles every block into a `motif x motif` square of neurons.
    pub fn expand(&self, motif: usize) -> BlockMask {
        if motif == 1 {
            return self.clone();
        }
        let mut out = BlockMask::empty(self.rows * motif, self.cols * motif);
        for (j, k) in self.active() {
            for p in 0..motif {
                for q in 0..motif {
                    out.set(j * motif + p, k * motif + q, true);
                }
            }
        }
        out
    }
}

/// Block mask of one weight layer together with its block edge length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerBlocks {
    pub motif: usize,
    pub mask: BlockMask,
}

impl LayerBlocks {
    pub fn in_neurons(&self) -> usize {
        self.mask.rows() * self.motif
    }

    pub fn out_neurons(&self) -> usize {
        self.mask.cols() * self.motif
    }

    /// Mean number of active incoming neuron connections per output neuron.
    pub fn mean_fan_in(&self) -> f64 {
        let active = self.mask.count_active() as f64;
        (active * self.motif as f64 / self.mask.cols() as f64).max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotifTopology {
    layer_sizes: Vec<usize>,
    motif_size: usize,
    density: BlockDensitySpec,
    output: OutputGranularity,
    layers: Vec<LayerBlocks>,
}

impl MotifTopology {
    /// Samples a topology with the default neuron-granularity output layer.
    pub fn build(
        layer_sizes: &[usize],
        motif_size: usize,
        density: BlockDensitySpec,
        seed: u64,
    ) -> Result<Self> {
        Self::build_with_output(
            layer_sizes,
            motif_size,
            density,
            OutputGranularity::Neuron,
            seed,
        )
    }

    pub fn build_with_output(
        layer_sizes: &[usize],
        motif_size: usize,
        density: BlockDensitySpec,
        output: OutputGranularity,
        seed: u64,
    ) -> Result<Self> {
        let motifs = Self::layer_motifs(layer_sizes, motif_size, output)?;
        density.validate()?;
        let layers = motifs
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let rows = layer_sizes[i] / m;
                let cols = layer_sizes[i + 1] / m;
                let p = density.block_density(rows, cols);
                let mut rng = rng::stream(seed, &[rng::DOMAIN_TOPOLOGY, i as u64]);
                LayerBlocks {
                    motif: m,
                    mask: sample_mask(rows, cols, p, &mut rng),
                }
            })
            .collect();
        Ok(MotifTopology {
            layer_sizes: layer_sizes.to_vec(),
            motif_size,
            density,
            output,
            layers,
        })
    }

    /// Block edge length of each weight layer, validating divisibility.
    fn layer_motifs(
        layer_sizes: &[usize],
        motif_size: usize,
        output: OutputGranularity,
    ) -> Result<Vec<usize>> {
        if layer_sizes.len() < 2 {
            return Err(Error::EmptyNetwork(layer_sizes.len()));
        }
        if motif_size == 0 {
            return Err(Error::Config("motif size must be positive".into()));
        }
        if let Some(i) = layer_sizes.iter().position(|&s| s == 0) {
            return Err(Error::Config(format!("layer {i} has zero neurons")));
        }
        let last = layer_sizes.len() - 1;
        let output_motif = match output {
            OutputGranularity::Neuron => 1,
            OutputGranularity::Motif => motif_size,
        };
        for (i, &size) in layer_sizes.iter().enumerate() {
            let m = if i == last { output_motif } else { motif_size };
            if size % m != 0 {
                return Err(Error::Divisibility {
                    layer: i,
                    size,
                    motif: m,
                });
            }
        }
        Ok((0..last)
            .map(|i| if i + 1 == last { output_motif } else { motif_size })
            .collect())
    }

    /// Assembles a topology from explicit masks, checking that the shapes chain.
    pub fn from_layers(
        layers: Vec<LayerBlocks>,
        motif_size: usize,
        density: BlockDensitySpec,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyNetwork(layers.len()));
        }
        let mut layer_sizes = vec![layers[0].in_neurons()];
        for (i, layer) in layers.iter().enumerate() {
            let expected = if i + 1 == layers.len() {
                layer.motif == 1 || layer.motif == motif_size
            } else {
                layer.motif == motif_size
            };
            if !expected {
                return Err(Error::Config(format!(
                    "layer {i} has motif {} but the network motif size is {motif_size}",
                    layer.motif
                )));
            }
            if layer.in_neurons() != *layer_sizes.last().unwrap() {
                return Err(Error::Shape {
                    what: "layer input width",
                    expected: layer_sizes.last().unwrap().to_string(),
                    found: layer.in_neurons().to_string(),
                });
            }
            layer_sizes.push(layer.out_neurons());
        }
        let output = if layers.last().unwrap().motif == 1 {
            OutputGranularity::Neuron
        } else {
            OutputGranularity::Motif
        };
        Ok(MotifTopology {
            layer_sizes,
            motif_size,
            density,
            output,
            layers,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn motif_size(&self) -> usize {
        self.motif_size
    }

    pub fn density_spec(&self) -> BlockDensitySpec {
        self.density
    }

    pub fn output_granularity(&self) -> OutputGranularity {
        self.output
    }

    pub fn layers(&self) -> &[LayerBlocks] {
        &self.layers
    }

    pub fn layer(&self, index: usize) -> Result<&LayerBlocks> {
        self.layers.get(index).ok_or(Error::LayerIndex {
            index,
            layers: self.layers.len(),
        })
    }

    pub(crate) fn layer_mut(&mut self, index: usize) -> &mut LayerBlocks {
        &mut self.layers[index]
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Active blocks per weight layer.
    pub fn active_block_count(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.mask.count_active()).collect()
    }

    /// Neuron-granularity mask of one layer.
    pub fn expand_mask(&self, layer_index: usize) -> Result<BlockMask> {
        let layer = self.layer(layer_index)?;
        Ok(layer.mask.expand(layer.motif))
    }

    /// Line-based export: a `motif-topology v1` header, then per layer a
    /// `layer <i> <rows> <cols> <m>` line followed by one `row col` line per
    /// active block.
    pub fn to_text(&self) -> String {
        let mut out = String::from("motif-topology v1\n");
        for (i, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(
                out,
                "layer {} {} {} {}",
                i,
                layer.mask.rows(),
                layer.mask.cols(),
                layer.motif
            );
            for (r, c) in layer.mask.active() {
                let _ = writeln!(out, "{r} {c}");
            }
        }
        out
    }

    /// Parses [`MotifTopology::to_text`] output. The text format does not
    /// carry the density specification, so the caller supplies it.
    pub fn from_text(text: &str, density: BlockDensitySpec) -> Result<Self> {
        let bad = |line: usize, reason: &str| Error::TopologyFormat {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, "motif-topology v1")) => {}
            _ => return Err(bad(1, "expected header `motif-topology v1`")),
        }
        let mut layers: Vec<LayerBlocks> = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "layer" {
                let nums = parse_fields(&fields[1..], n)?;
                if nums.len() != 4 {
                    return Err(bad(n, "layer line needs <i> <rows> <cols> <m>"));
                }
                if nums[0] != layers.len() {
                    return Err(bad(n, "layer indices must be consecutive from 0"));
                }
                if nums[1] == 0 || nums[2] == 0 || nums[3] == 0 {
                    return Err(bad(n, "layer dimensions must be positive"));
                }
                layers.push(LayerBlocks {
                    motif: nums[3],
                    mask: BlockMask::empty(nums[1], nums[2]),
                });
            } else {
                let nums = parse_fields(&fields, n)?;
                let layer = layers
                    .last_mut()
                    .ok_or_else(|| bad(n, "block entry before any layer line"))?;
                if nums.len() != 2 {
                    return Err(bad(n, "block entry needs <row> <col>"));
                }
                if nums[0] >= layer.mask.rows() || nums[1] >= layer.mask.cols() {
                    return Err(bad(n, "block entry out of range"));
                }
                layer.mask.set(nums[0], nums[1], true);
            }
        }
        let motif = layers
            .first()
            .map(|l| l.motif)
            .ok_or_else(|| bad(1, "no layers"))?;
        Self::from_layers(layers, motif, density)
    }
}

fn parse_fields(fields: &[&str], line: usize) -> Result<Vec<usize>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<usize>().map_err(|_| Error::TopologyFormat {
                line,
                reason: format!("not an unsigned integer: {f:?}"),
            })
        })
        .collect()
}

/// Draws exactly `round(p * rows * cols)` distinct blocks uniformly, then
/// activates one random block in every column left without any.
pub(crate) fn sample_mask<R: Rng + ?Sized>(rows: usize, cols: usize, p: f64, rng: &mut R) -> BlockMask {
    let total = rows * cols;
    let target = ((p * total as f64).round() as usize).min(total);
    let mut mask = BlockMask::empty(rows, cols);
    for idx in rand::seq::index::sample(rng, total, target) {
        mask.set(idx / cols, idx % cols, true);
    }
    for (col, count) in mask.column_counts().into_iter().enumerate() {
        if count == 0 {
            let row = rng.random_range(0..rows);
            mask.set(row, col, true);
        }
    }
    mask
}

/// Samples a topology; see [`MotifTopology::build`].
pub fn build_topology(
    layer_sizes: &[usize],
    motif_size: usize,
    density: BlockDensitySpec,
    seed: u64,
) -> Result<MotifTopology> {
    MotifTopology::build(layer_sizes, motif_size, density, seed)
}

pub fn active_block_count(topology: &MotifTopology) -> Vec<usize> {
    topology.active_block_count()
}

pub fn expand_mask(topology: &MotifTopology, layer_index: usize) -> Result<BlockMask> {
    topology.expand_mask(layer_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_density_single_layer() {
        let t = build_topology(&[4, 4], 1, BlockDensitySpec::fixed(1.0), 0).unwrap();
        assert_eq!(t.layers()[0].mask.rows(), 4);
        assert_eq!(t.active_block_count(), vec![16]);
    }

    #[test]
    fn motif_two_full_layer_has_four_blocks() {
        let t = MotifTopology::build_with_output(
            &[4, 4],
            2,
            BlockDensitySpec::fixed(1.0),
            OutputGranularity::Motif,
            0,
        )
        .unwrap();
        assert_eq!(t.active_block_count(), vec![4]);
        assert_eq!(t.expand_mask(0).unwrap().count_active(), 16);
    }

    #[test]
    fn large_fmnist_layout_block_shapes() {
        let sizes = [784, 3000, 3000, 3000, 10];
        let shapes = |t: &MotifTopology| -> Vec<(usize, usize)> {
            t.layers()
                .iter()
                .map(|l| (l.mask.rows(), l.mask.cols()))
                .collect()
        };
        let t = MotifTopology::build_with_output(
            &sizes,
            2,
            BlockDensitySpec::erdos_renyi(20.0),
            OutputGranularity::Motif,
            1,
        )
        .unwrap();
        assert_eq!(
            shapes(&t),
            vec![(392, 1500), (1500, 1500), (1500, 1500), (1500, 5)]
        );
        // default: neuron-granularity output layer
        let t = build_topology(&sizes, 2, BlockDensitySpec::erdos_renyi(20.0), 1).unwrap();
        assert_eq!(
            shapes(&t),
            vec![(392, 1500), (1500, 1500), (1500, 1500), (3000, 10)]
        );
        // ten classes are not divisible by four; only the motif output mode rejects that
        assert!(build_topology(&sizes, 4, BlockDensitySpec::erdos_renyi(20.0), 1).is_ok());
        assert!(matches!(
            MotifTopology::build_with_output(
                &sizes,
                4,
                BlockDensitySpec::erdos_renyi(20.0),
                OutputGranularity::Motif,
                1
            ),
            Err(Error::Divisibility { layer: 4, .. })
        ));
    }

    #[test]
    fn divisibility_and_empty_errors() {
        let d = BlockDensitySpec::fixed(0.5);
        assert!(matches!(
            build_topology(&[6, 5, 2], 2, d, 0),
            Err(Error::Divisibility { layer: 1, size: 5, motif: 2 })
        ));
        assert!(matches!(
            build_topology(&[7, 4, 2], 2, d, 0),
            Err(Error::Divisibility { layer: 0, .. })
        ));
        assert!(matches!(build_topology(&[8], 2, d, 0), Err(Error::EmptyNetwork(1))));
        assert!(matches!(build_topology(&[], 2, d, 0), Err(Error::EmptyNetwork(0))));
    }

    #[test]
    fn invalid_density_rejected() {
        assert!(build_topology(&[4, 4], 1, BlockDensitySpec::fixed(0.0), 0).is_err());
        assert!(build_topology(&[4, 4], 1, BlockDensitySpec::fixed(1.5), 0).is_err());
        assert!(build_topology(&[4, 4], 1, BlockDensitySpec::erdos_renyi(-1.0), 0).is_err());
    }

    #[test]
    fn erdos_renyi_density_formula() {
        let d = BlockDensitySpec::erdos_renyi(20.0);
        assert!((d.block_density(784, 256) - 20.0 * 1040.0 / 200_704.0).abs() < 1e-15);
        assert_eq!(d.block_density(4, 4), 1.0);
    }

    #[test]
    fn expand_single_block() {
        let mut mask = BlockMask::empty(2, 2);
        mask.set(0, 0, true);
        let n = mask.expand(2);
        let active: Vec<_> = n.active().collect();
        assert_eq!(active, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn expand_identity_at_motif_one() {
        let t = build_topology(&[10, 8, 3], 1, BlockDensitySpec::fixed(0.4), 5).unwrap();
        assert_eq!(t.expand_mask(0).unwrap(), t.layers()[0].mask);
        assert!(matches!(t.expand_mask(2), Err(Error::LayerIndex { index: 2, layers: 2 })));
    }

    #[test]
    fn every_output_column_connected() {
        // density low enough that repair is certainly needed
        let t = build_topology(&[40, 40, 20], 2, BlockDensitySpec::fixed(0.01), 3).unwrap();
        for layer in t.layers() {
            assert!(layer.mask.column_counts().iter().all(|&c| c >= 1));
        }
    }

    #[test]
    fn text_round_trip() {
        let t = build_topology(&[12, 8, 8, 3], 4, BlockDensitySpec::fixed(0.5), 11).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("motif-topology v1\nlayer 0 3 2 4\n"));
        let back = MotifTopology::from_text(&text, t.density_spec()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn text_parse_errors() {
        let d = BlockDensitySpec::fixed(1.0);
        assert!(MotifTopology::from_text("nope\n", d).is_err());
        assert!(MotifTopology::from_text("motif-topology v1\n0 0\n", d).is_err());
        assert!(MotifTopology::from_text("motif-topology v1\nlayer 0 2 2 1\n5 0\n", d).is_err());
        assert!(MotifTopology::from_text("motif-topology v1\nlayer 1 2 2 1\n", d).is_err());
        // widths must chain: 2*1 outputs vs 3*1 inputs
        assert!(MotifTopology::from_text(
            "motif-topology v1\nlayer 0 2 2 1\nlayer 1 3 2 1\n",
            d
        )
        .is_err());
    }
}
