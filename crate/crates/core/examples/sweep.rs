//! Sweeps the efficiency weight from 0 to 1 and reports where each motif
//! variant starts to outscore the baseline.
//!
//! cargo run --example sweep

use motifset::metrics::{analytic_crossover, score_csv, tradeoff_sweep, weight_grid};

fn main() -> motifset::Result<()> {
    let variants = [
        ("FMNIST m=2", 25236.2, 14307.5, 0.761, 0.733),
        ("FMNIST m=4", 25236.2, 9209.3, 0.761, 0.692),
        ("Lung m=2", 4953.2, 3448.7, 0.937, 0.926),
        ("Lung m=4", 4953.2, 3417.3, 0.937, 0.914),
    ];
    for (name, tb, t, ab, a) in variants {
        let sweep = tradeoff_sweep(tb, t, ab, a, &weight_grid(0.01))?;
        let r = &sweep.reports[0];
        println!(
            "{name}: grid crossover {:?}, closed form {:.4}",
            sweep.crossover,
            analytic_crossover(r.r_r, r.a_r).unwrap_or(f64::NAN)
        );
    }
    let coarse = tradeoff_sweep(25236.2, 14307.5, 0.761, 0.733, &weight_grid(0.1))?;
    print!("\nFMNIST m=2 on a 0.1 grid:\n{}", score_csv(&coarse.reports));
    Ok(())
}
