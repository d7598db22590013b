use ndarray::{Array1, Array2};

use crate::topology::{BlockMask, LayerBlocks};

use super::WeightMode;

/// Row-compressed list of active blocks: the active output motifs of input
/// motif `j` are `cols[row_ptr[j]..row_ptr[j + 1]]`, ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct ActiveIndex {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
}

impl ActiveIndex {
    pub fn from_mask(mask: &BlockMask) -> Self {
        let mut row_ptr = Vec::with_capacity(mask.rows() + 1);
        let mut cols = Vec::with_capacity(mask.count_active());
        row_ptr.push(0);
        let mut row = 0;
        for (r, c) in mask.active() {
            while row < r {
                row_ptr.push(cols.len());
                row += 1;
            }
            cols.push(c);
        }
        while row_ptr.len() < mask.rows() + 1 {
            row_ptr.push(cols.len());
        }
        ActiveIndex { row_ptr, cols }
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[usize] {
        &self.cols[self.row_ptr[j]..self.row_ptr[j + 1]]
    }
}

/// Parameters of one weight layer.
///
/// In shared mode `weights` has one entry per block (`in/m x out/m`); in
/// independent mode it is a neuron-level `in x out` matrix whose entries
/// outside active blocks stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseLayer {
    pub(crate) motif: usize,
    pub(crate) mode: WeightMode,
    pub(crate) weights: Array2<f64>,
    pub(crate) bias: Array1<f64>,
    pub(crate) index: ActiveIndex,
}

impl SparseLayer {
    pub(crate) fn zeros(blocks: &LayerBlocks, mode: WeightMode) -> Self {
        let shape = match mode {
            WeightMode::Shared => (blocks.mask.rows(), blocks.mask.cols()),
            WeightMode::Independent => (blocks.in_neurons(), blocks.out_neurons()),
        };
        SparseLayer {
            motif: blocks.motif,
            mode,
            weights: Array2::zeros(shape),
            bias: Array1::zeros(blocks.out_neurons()),
            index: ActiveIndex::from_mask(&blocks.mask),
        }
    }

    pub fn motif(&self) -> usize {
        self.motif
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn in_neurons(&self) -> usize {
        (self.index.row_ptr.len() - 1) * self.motif
    }

    pub fn out_neurons(&self) -> usize {
        self.bias.len()
    }

    pub(crate) fn block_rows(&self) -> usize {
        self.index.row_ptr.len() - 1
    }

    pub(crate) fn block_cols(&self) -> usize {
        self.out_neurons() / self.motif
    }

    /// Whether parameters are stored per block; at motif size 1 both modes coincide.
    pub(crate) fn is_shared(&self) -> bool {
        self.mode == WeightMode::Shared || self.motif == 1
    }
}

/// Sums every run of `motif` consecutive columns: `n x (w*motif)` -> `n x w`.
pub(crate) fn pool_columns(src: &[f64], n: usize, width: usize, motif: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * width];
    for (dst, row) in out.chunks_exact_mut(width).zip(src.chunks_exact(width * motif)) {
        for (d, group) in dst.iter_mut().zip(row.chunks_exact(motif)) {
            *d = group.iter().sum();
        }
    }
    out
}

/// `z = a_prev * W_tiled + bias` for a batch of `n` rows.
pub(crate) fn layer_forward(layer: &SparseLayer, a_prev: &[f64], n: usize) -> Vec<f64> {
    let b = layer.motif;
    let rb = layer.block_rows();
    let cb = layer.block_cols();
    let in_w = rb * b;
    let out_w = cb * b;
    let w = layer
        .weights
        .as_slice()
        .expect("layer weights are contiguous");
    let bias = layer.bias.as_slice().expect("bias is contiguous");
    let mut z = vec![0.0; n * out_w];

    if layer.is_shared() {
        let pooled;
        let p: &[f64] = if b == 1 {
            a_prev
        } else {
            pooled = pool_columns(a_prev, n, rb, b);
            &pooled
        };
        let mut zb = vec![0.0; cb];
        for (s, zrow) in z.chunks_exact_mut(out_w).enumerate() {
            zb.iter_mut().for_each(|v| *v = 0.0);
            let prow = &p[s * rb..(s + 1) * rb];
            for (j, &pj) in prow.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                let wrow = &w[j * cb..(j + 1) * cb];
                for &k in layer.index.row(j) {
                    zb[k] += pj * wrow[k];
                }
            }
            for (k, &v) in zb.iter().enumerate() {
                for q in 0..b {
                    zrow[k * b + q] = v + bias[k * b + q];
                }
            }
        }
    } else {
        for (s, zrow) in z.chunks_exact_mut(out_w).enumerate() {
            zrow.copy_from_slice(bias);
            let arow = &a_prev[s * in_w..(s + 1) * in_w];
            for j in 0..rb {
                for p in 0..b {
                    let a = arow[j * b + p];
                    if a == 0.0 {
                        continue;
                    }
                    let wrow = &w[(j * b + p) * out_w..(j * b + p + 1) * out_w];
                    for &k in layer.index.row(j) {
                        let span = k * b..(k + 1) * b;
                        for (zv, &wv) in zrow[span.clone()].iter_mut().zip(&wrow[span]) {
                            *zv += a * wv;
                        }
                    }
                }
            }
        }
    }
    z
}

/// Accumulates the weight and bias gradients for `dz` (already scaled by
/// `1/n`) into `gw`/`gb`, and returns `dL/da_prev` when `want_input_grad`.
pub(crate) fn layer_backward(
    layer: &SparseLayer,
    a_prev: &[f64],
    dz: &[f64],
    n: usize,
    gw: &mut [f64],
    gb: &mut [f64],
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let b = layer.motif;
    let rb = layer.block_rows();
    let cb = layer.block_cols();
    let in_w = rb * b;
    let out_w = cb * b;
    let w = layer
        .weights
        .as_slice()
        .expect("layer weights are contiguous");

    for row in dz.chunks_exact(out_w) {
        for (g, &d) in gb.iter_mut().zip(row) {
            *g += d;
        }
    }

    let mut da = want_input_grad.then(|| vec![0.0; n * in_w]);

    if layer.is_shared() {
        let (pooled_a, pooled_d);
        let (p, d): (&[f64], &[f64]) = if b == 1 {
            (a_prev, dz)
        } else {
            pooled_a = pool_columns(a_prev, n, rb, b);
            pooled_d = pool_columns(dz, n, cb, b);
            (&pooled_a, &pooled_d)
        };
        for s in 0..n {
            let prow = &p[s * rb..(s + 1) * rb];
            let drow = &d[s * cb..(s + 1) * cb];
            for (j, &pj) in prow.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                let grow = &mut gw[j * cb..(j + 1) * cb];
                for &k in layer.index.row(j) {
                    grow[k] += pj * drow[k];
                }
            }
            if let Some(da) = da.as_mut() {
                let darow = &mut da[s * in_w..(s + 1) * in_w];
                for j in 0..rb {
                    let wrow = &w[j * cb..(j + 1) * cb];
                    let mut acc = 0.0;
                    for &k in layer.index.row(j) {
                        acc += drow[k] * wrow[k];
                    }
                    darow[j * b..(j + 1) * b].iter_mut().for_each(|v| *v = acc);
                }
            }
        }
    } else {
        for s in 0..n {
            let arow = &a_prev[s * in_w..(s + 1) * in_w];
            let drow = &dz[s * out_w..(s + 1) * out_w];
            for j in 0..rb {
                for p in 0..b {
                    let r = j * b + p;
                    let a = arow[r];
                    let wrow = &w[r * out_w..(r + 1) * out_w];
                    let grow = &mut gw[r * out_w..(r + 1) * out_w];
                    let mut acc = 0.0;
                    for &k in layer.index.row(j) {
                        let span = k * b..(k + 1) * b;
                        for q in span {
                            grow[q] += a * drow[q];
                            acc += wrow[q] * drow[q];
                        }
                    }
                    if let Some(da) = da.as_mut() {
                        da[s * in_w + r] = acc;
                    }
                }
            }
        }
    }
    da
}
