//! Samples block topologies for the large FMNIST layout at several motif
//! sizes and prints their shapes and densities.
//!
//! cargo run --example topology

use motifset::topology::{BlockDensitySpec, MotifTopology};

fn main() -> motifset::Result<()> {
    let sizes = [784, 3000, 3000, 3000, 10];
    for m in [1, 2, 4] {
        let density = BlockDensitySpec::erdos_renyi(150.0 / m as f64);
        let topo = MotifTopology::build(&sizes, m, density, 42)?;
        println!("motif size {m}");
        for (l, layer) in topo.layers().iter().enumerate() {
            println!(
                "  layer {l}: {:>4} x {:<4} blocks of {}x{}, {:>8} active ({:.3} dense)",
                layer.mask.rows(),
                layer.mask.cols(),
                layer.motif,
                layer.motif,
                layer.mask.count_active(),
                layer.mask.density()
            );
        }
    }

    let small = MotifTopology::build(&[8, 4, 3], 2, BlockDensitySpec::fixed(0.5), 7)?;
    println!("\ntext export of a small topology:\n{}", small.to_text());
    let neurons = small.expand_mask(0)?;
    println!("neuron-level mask of layer 0:");
    for r in 0..neurons.rows() {
        let row: String = (0..neurons.cols()).map(|c| if neurons.get(r, c) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
    Ok(())
}
