//! Binary checkpoint container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic            8 bytes  "MOTIFCKP"
//! version          u32
//! activation       u8       0 = relu, 1 = sigmoid
//! init             u8       0 = he_uniform, 1 = he_normal
//! weight_mode      u8       0 = shared, 1 = independent
//! density_mode     u8       0 = erdos_renyi_set, 1 = fixed_density
//! density_value    f64
//! motif_size       u64
//! topology_len     u64, followed by the topology text export (UTF-8)
//! per layer:       rows u64, cols u64, rows*cols f64 weights (row-major),
//!                  bias_len u64, bias_len f64
//! ```

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::topology::{BlockDensitySpec, DensityMode, MotifTopology};

use super::{Activation, InitScheme, Network, NetworkConfig, WeightMode};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MOTIFCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

impl Network {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
        w.write_u8(match self.config.activation {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
        })?;
        w.write_u8(match self.config.init {
            InitScheme::HeUniform => 0,
            InitScheme::HeNormal => 1,
        })?;
        w.write_u8(match self.config.weight_mode {
            WeightMode::Shared => 0,
            WeightMode::Independent => 1,
        })?;
        let density = self.topology.density_spec();
        w.write_u8(match density.mode {
            DensityMode::ErdosRenyiSet => 0,
            DensityMode::FixedDensity => 1,
        })?;
        w.write_f64::<LittleEndian>(density.value)?;
        w.write_u64::<LittleEndian>(self.topology.motif_size() as u64)?;
        let text = self.topology.to_text();
        w.write_u64::<LittleEndian>(text.len() as u64)?;
        w.write_all(text.as_bytes())?;
        for layer in &self.layers {
            let (rows, cols) = layer.weights.dim();
            w.write_u64::<LittleEndian>(rows as u64)?;
            w.write_u64::<LittleEndian>(cols as u64)?;
            for &v in layer.weights.iter() {
                w.write_f64::<LittleEndian>(v)?;
            }
            w.write_u64::<LittleEndian>(layer.bias.len() as u64)?;
            for &v in layer.bias.iter() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Network> {
        let mut r = Cursor::new(bytes);
        let trunc = |_: std::io::Error| Error::Checkpoint("unexpected end of data".into());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(trunc)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(trunc)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let tag = |r: &mut Cursor<&[u8]>, what: &str, max: u8| -> Result<u8> {
            let v = r.read_u8().map_err(trunc)?;
            if v > max {
                return Err(Error::Checkpoint(format!("invalid {what} tag {v}")));
            }
            Ok(v)
        };
        let activation = [Activation::Relu, Activation::Sigmoid][tag(&mut r, "activation", 1)? as usize];
        let init = [InitScheme::HeUniform, InitScheme::HeNormal][tag(&mut r, "init", 1)? as usize];
        let weight_mode =
            [WeightMode::Shared, WeightMode::Independent][tag(&mut r, "weight mode", 1)? as usize];
        let mode = [DensityMode::ErdosRenyiSet, DensityMode::FixedDensity]
            [tag(&mut r, "density mode", 1)? as usize];
        let value = r.read_f64::<LittleEndian>().map_err(trunc)?;
        let motif_size = r.read_u64::<LittleEndian>().map_err(trunc)? as usize;
        let text_len = read_len(&mut r, bytes.len())?;
        let mut text = vec![0u8; text_len];
        r.read_exact(&mut text).map_err(trunc)?;
        let text = String::from_utf8(text)
            .map_err(|_| Error::Checkpoint("topology section is not UTF-8".into()))?;
        let topology = MotifTopology::from_text(&text, BlockDensitySpec { mode, value })?;
        if topology.motif_size() != motif_size {
            return Err(Error::Checkpoint("motif size disagrees with topology".into()));
        }
        let config = NetworkConfig {
            activation,
            init,
            weight_mode,
        };
        let mut net = Network::zeros(topology, config);
        for l in 0..net.layers.len() {
            let rows = read_len(&mut r, bytes.len())?;
            let cols = read_len(&mut r, bytes.len())?;
            let mut weights = vec![0.0; rows * cols];
            r.read_f64_into::<LittleEndian>(&mut weights).map_err(trunc)?;
            let blen = read_len(&mut r, bytes.len())?;
            let mut bias = vec![0.0; blen];
            r.read_f64_into::<LittleEndian>(&mut bias).map_err(trunc)?;
            let weights = Array2::from_shape_vec((rows, cols), weights)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            net.set_layer_params(l, weights, Array1::from(bias))
                .map_err(|e| Error::Checkpoint(format!("layer {l}: {e}")))?;
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after last layer".into()));
        }
        Ok(net)
    }
}

fn read_len(r: &mut Cursor<&[u8]>, limit: usize) -> Result<usize> {
    let v = r
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::Checkpoint("unexpected end of data".into()))?;
    if v > limit as u64 {
        return Err(Error::Checkpoint(format!("length {v} exceeds file size")));
    }
    Ok(v as usize)
}

pub fn save_checkpoint(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, net.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Network::from_bytes(&bytes).map_err(|e| e.context(path.display().to_string()))
}
