//! Runs a config-driven experiment, the same path the `motifset train`
//! command takes, and scores it against an optional baseline run.
//!
//! cargo run --release --example experiment -- presets/fmnist-desk-m2.toml /tmp/m2 [/tmp/m1]

use std::path::PathBuf;

use motifset::experiment::{run_score, run_train, ExperimentConfig};

fn main() -> motifset::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "presets/fmnist-desk-m1.toml".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/desk".into()));
    let cfg = ExperimentConfig::from_file(&config, &[])?;
    let outcome = run_train(&cfg, &out)?;
    println!(
        "final accuracy {:.4} after {} epochs, {} MACs",
        outcome.measurement.final_accuracy,
        outcome.measurement.epochs.len(),
        outcome.measurement.flop_count
    );
    if let Some(baseline) = args.next() {
        let r = run_score(baseline.as_ref(), &out, cfg.score.w_eff, cfg.score.w_acc, true, Some(&out))?;
        println!("score vs {baseline} (MAC channel): R_r {:.4}, A_r {:.4}, S {:.4}", r.r_r, r.a_r, r.s);
    }
    Ok(())
}
