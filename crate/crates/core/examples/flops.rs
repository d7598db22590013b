//! Distinct parameters and analytic multiply-accumulate counts per training
//! sample for the large FMNIST layout as the motif size grows.
//!
//! cargo run --example flops

use motifset::metrics::{flop_counter, hidden_weight_count, trainable_weight_counts};
use motifset::network::WeightMode;
use motifset::topology::{BlockDensitySpec, MotifTopology};

fn main() -> motifset::Result<()> {
    let sizes = [784, 3000, 3000, 3000, 10];
    for (label, density) in [("full density", BlockDensitySpec::fixed(1.0)), ("sparse", BlockDensitySpec::erdos_renyi(150.0))] {
        println!("{label}");
        for m in [1, 2, 4] {
            let spec = match density.mode {
                motifset::DensityMode::ErdosRenyiSet => BlockDensitySpec::erdos_renyi(density.value / m as f64),
                _ => density,
            };
            let topo = MotifTopology::build(&sizes, m, spec, 0)?;
            for mode in [WeightMode::Shared, WeightMode::Independent] {
                let f = flop_counter(&topo, mode, 1);
                println!(
                    "  m={m} {mode:<11?} hidden params {:>9}  all params {:>9}  MACs fwd {:>9} bwd {:>9}",
                    hidden_weight_count(&topo, mode),
                    trainable_weight_counts(&topo, mode).iter().sum::<usize>(),
                    f.forward,
                    f.backward
                );
            }
        }
    }
    Ok(())
}
