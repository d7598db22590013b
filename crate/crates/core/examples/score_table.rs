//! Comprehensive scores of the motif variants against the unstructured
//! baseline for the published FMNIST and Lung runtimes and accuracies.
//!
//! cargo run --example score_table

use motifset::metrics::comprehensive_score;

fn main() -> motifset::Result<()> {
    let tables = [
        ("FMNIST", [(1, 25236.2, 0.761), (2, 14307.5, 0.733), (4, 9209.3, 0.692)]),
        ("Lung", [(1, 4953.2, 0.937), (2, 3448.7, 0.926), (4, 3417.3, 0.914)]),
    ];
    for (name, rows) in tables {
        let (_, t_base, a_base) = rows[0];
        println!("{name}\n  m   time (s)  accuracy   R_r      A_r      S");
        for (m, t, a) in rows {
            let r = comprehensive_score(t_base, t, a_base, a, 0.1, 0.9)?;
            println!("  {m}  {t:>9.1}  {a:>8.3}  {:>7.4}  {:>7.4}  {:.4}", r.r_r, r.a_r, r.s);
        }
    }
    Ok(())
}
