//! Between-epoch connectivity evolution.
//!
//! Two variants are provided:
//!
//! - [`EvolutionMode::MagnitudeSet`]: classic SET. Per layer, the
//!   `floor(zeta * active)` active blocks of smallest magnitude are removed
//!   and the same number of currently inactive blocks are switched on with
//!   fresh He weights, so the active count never changes.
//! - [`EvolutionMode::Listing4`]: every active weight is zeroed with
//!   probability `epsilon_prune` and then perturbed by
//!   `noise_scale * N(0, 1)`, unconditionally, so a zeroed weight is
//!   immediately perturbed again. The mask is left alone.
//!
//! Each layer draws from its own stream derived from
//! `(rng_seed, event, layer)`, so trajectories are reproducible.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    #[default]
    MagnitudeSet,
    Listing4,
    /// Static topology.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionPolicy {
    pub mode: EvolutionMode,
    /// Fraction of active blocks pruned per event (magnitude_set).
    pub zeta: f64,
    /// Per-weight zeroing probability (listing4).
    pub epsilon_prune: f64,
    /// Standard deviation of the additive noise (listing4).
    pub noise_scale: f64,
    /// Evolve after every `period`-th epoch.
    pub period: usize,
    pub rng_seed: u64,
}

impl Default for EvolutionPolicy {
    fn default() -> Self {
        EvolutionPolicy {
            mode: EvolutionMode::MagnitudeSet,
            zeta: 0.3,
            epsilon_prune: 0.1,
            noise_scale: 0.01,
            period: 1,
            rng_seed: 0,
        }
    }
}

impl EvolutionPolicy {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidPolicy(msg));
        match self.mode {
            EvolutionMode::MagnitudeSet if !(self.zeta > 0.0 && self.zeta < 1.0) => {
                fail(format!("zeta must lie in (0, 1), got {}", self.zeta))
            }
            EvolutionMode::Listing4 if !(0.0..=1.0).contains(&self.epsilon_prune) => fail(format!(
                "epsilon_prune must lie in [0, 1], got {}",
                self.epsilon_prune
            )),
            EvolutionMode::Listing4 if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) => {
                fail(format!("noise_scale must be >= 0, got {}", self.noise_scale))
            }
            _ if self.period == 0 => fail("period must be at least 1".into()),
            _ => Ok(()),
        }
    }
}

/// Outcome of one evolution event on one layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LayerEvolution {
    pub layer: usize,
    pub pruned: usize,
    pub regrown: usize,
    /// Weights set to zero (listing4).
    pub zeroed: usize,
    pub active_blocks: usize,
    /// The layer had no inactive block to regrow into; nothing was changed.
    pub saturated: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvolutionStats {
    pub layers: Vec<LayerEvolution>,
}

impl EvolutionStats {
    /// Rows of the run's `evolution.csv` (`epoch,layer,pruned,regrown,active_blocks`).
    pub fn csv_rows(&self, epoch: usize) -> Vec<String> {
        self.layers
            .iter()
            .map(|s| {
                let pruned = s.pruned.max(s.zeroed);
                format!("{epoch},{},{},{},{}", s.layer, pruned, s.regrown, s.active_blocks)
            })
            .collect()
    }
}

/// Whether evolution runs after `epoch` (0-based) of a run lasting `epochs`.
/// Never after the final epoch.
pub fn evolution_schedule(epoch: usize, epochs: usize, period: usize) -> bool {
    let period = period.max(1);
    epoch + 1 < epochs && (epoch + 1).is_multiple_of(period)
}

/// Dispatches on `policy.mode`; `event` numbers successive events of a run.
pub fn evolve(net: &mut Network, policy: &EvolutionPolicy, event: u64) -> Result<EvolutionStats> {
    match policy.mode {
        EvolutionMode::MagnitudeSet => evolve_magnitude(net, policy, event),
        EvolutionMode::Listing4 => evolve_listing4(net, policy, event),
        EvolutionMode::None => Ok(EvolutionStats::default()),
    }
}

/// Magnitude of an active block: `|w|` in shared mode, the mean absolute
/// weight of its tile in independent mode.
fn block_magnitude(net: &Network, l: usize, j: usize, k: usize) -> f64 {
    let layer = &net.layers[l];
    if layer.is_shared() {
        layer.weights[[j, k]].abs()
    } else {
        let b = layer.motif;
        let mut sum = 0.0;
        for p in 0..b {
            for q in 0..b {
                sum += layer.weights[[j * b + p, k * b + q]].abs();
            }
        }
        sum / (b * b) as f64
    }
}

fn zero_block(net: &mut Network, l: usize, j: usize, k: usize) {
    let layer = &mut net.layers[l];
    if layer.is_shared() {
        layer.weights[[j, k]] = 0.0;
    } else {
        let b = layer.motif;
        for p in 0..b {
            for q in 0..b {
                layer.weights[[j * b + p, k * b + q]] = 0.0;
            }
        }
    }
}

pub fn evolve_magnitude(
    net: &mut Network,
    policy: &EvolutionPolicy,
    event: u64,
) -> Result<EvolutionStats> {
    if policy.mode != EvolutionMode::MagnitudeSet {
        return Err(Error::InvalidPolicy("evolve_magnitude needs mode magnitude_set".into()));
    }
    policy.validate()?;
    let mut stats = EvolutionStats::default();
    for l in 0..net.layers.len() {
        let mut rng = rng::stream(policy.rng_seed, &[rng::DOMAIN_EVOLUTION, event, l as u64]);
        let mask = &net.topology.layers()[l].mask;
        let active: Vec<(usize, usize)> = mask.active().collect();
        let inactive: Vec<(usize, usize)> = mask.inactive().collect();
        let mut s = LayerEvolution {
            layer: l,
            active_blocks: active.len(),
            ..Default::default()
        };
        let prune = (policy.zeta * active.len() as f64).floor() as usize;
        if inactive.is_empty() {
            s.saturated = true;
            log::debug!("layer {l} is fully connected; skipping evolution");
            stats.layers.push(s);
            continue;
        }
        if prune == 0 {
            stats.layers.push(s);
            continue;
        }

        // stable sort keeps row-major order among equal magnitudes
        let mut ranked: Vec<(f64, (usize, usize))> = active
            .iter()
            .map(|&(j, k)| (block_magnitude(net, l, j, k), (j, k)))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let pruned: Vec<(usize, usize)> = ranked[..prune].iter().map(|&(_, p)| p).collect();

        // regrow into blocks that were inactive before this event when possible
        let candidates = if inactive.len() >= prune {
            inactive
        } else {
            let mut all = inactive;
            all.extend_from_slice(&pruned);
            all.sort_unstable();
            all
        };
        let chosen: Vec<(usize, usize)> = rand::seq::index::sample(&mut rng, candidates.len(), prune)
            .into_iter()
            .map(|i| candidates[i])
            .collect();

        for &(j, k) in &pruned {
            zero_block(net, l, j, k);
            net.topology.layer_mut(l).mask.set(j, k, false);
        }
        for &(j, k) in &chosen {
            net.topology.layer_mut(l).mask.set(j, k, true);
        }
        let fan_in = net.topology.layers()[l].mean_fan_in();
        for &(j, k) in &chosen {
            net.init_block(l, fan_in, j, k, &mut rng);
        }
        net.refresh_index(l);
        s.pruned = prune;
        s.regrown = prune;
        s.active_blocks = net.topology.layers()[l].mask.count_active();
        stats.layers.push(s);
    }
    Ok(stats)
}

pub fn evolve_listing4(
    net: &mut Network,
    policy: &EvolutionPolicy,
    event: u64,
) -> Result<EvolutionStats> {
    if policy.mode != EvolutionMode::Listing4 {
        return Err(Error::InvalidPolicy("evolve_listing4 needs mode listing4".into()));
    }
    policy.validate()?;
    let mut stats = EvolutionStats::default();
    for l in 0..net.layers.len() {
        let mut rng = rng::stream(policy.rng_seed, &[rng::DOMAIN_EVOLUTION, event, l as u64]);
        let active: Vec<(usize, usize)> = net.topology.layers()[l].mask.active().collect();
        let layer = &mut net.layers[l];
        let b = layer.motif;
        let shared = layer.is_shared();
        let mut zeroed = 0;
        let mut perturb = |w: &mut f64, rng: &mut rng::StreamRng| {
            if rng.random::<f64>() < policy.epsilon_prune {
                *w = 0.0;
                zeroed += 1;
            }
            let noise: f64 = StandardNormal.sample(rng);
            *w += noise * policy.noise_scale;
        };
        for &(j, k) in &active {
            if shared {
                perturb(&mut layer.weights[[j, k]], &mut rng);
            } else {
                for p in 0..b {
                    for q in 0..b {
                        perturb(&mut layer.weights[[j * b + p, k * b + q]], &mut rng);
                    }
                }
            }
        }
        stats.layers.push(LayerEvolution {
            layer: l,
            zeroed,
            active_blocks: active.len(),
            ..Default::default()
        });
    }
    Ok(stats)
}
