//! One magnitude prune-and-regrow event and one noise-perturbation event on
//! a small network, with the statistics each reports.
//!
//! cargo run --example evolution

use motifset::evolution::{evolve, EvolutionMode, EvolutionPolicy};
use motifset::network::{Network, NetworkConfig};
use motifset::topology::{BlockDensitySpec, MotifTopology};

fn main() -> motifset::Result<()> {
    let topo = MotifTopology::build(&[16, 16, 4], 2, BlockDensitySpec::fixed(0.4), 5)?;
    let mut net = Network::init(topo, NetworkConfig::default(), 5);
    println!("active blocks before: {:?}", net.topology().active_block_count());

    let magnitude = EvolutionPolicy {
        zeta: 0.3,
        rng_seed: 9,
        ..Default::default()
    };
    let stats = evolve(&mut net, &magnitude, 0)?;
    println!("magnitude_set event:\n  epoch,layer,pruned,regrown,active_blocks");
    for row in stats.csv_rows(0) {
        println!("  {row}");
    }
    println!("active blocks after:  {:?}", net.topology().active_block_count());

    let noise = EvolutionPolicy {
        mode: EvolutionMode::Listing4,
        epsilon_prune: 0.2,
        noise_scale: 0.01,
        rng_seed: 9,
        ..Default::default()
    };
    let stats = evolve(&mut net, &noise, 1)?;
    for s in &stats.layers {
        println!("listing4 layer {}: {} of {} active weights zeroed", s.layer, s.zeroed, net.trainable_weights()[s.layer]);
    }
    Ok(())
}
