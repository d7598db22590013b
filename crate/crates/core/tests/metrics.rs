use motifset::metrics::{
    analytic_crossover, comprehensive_score, flop_counter, parse_metrics_csv, tradeoff_sweep,
    trainable_weight_counts, weight_grid, RunMeasurement,
};
use motifset::network::WeightMode;
use motifset::topology::{BlockDensitySpec, MotifTopology, OutputGranularity};
use proptest::prelude::*;

#[test]
fn table_rows_give_the_reported_reductions() {
    let r = comprehensive_score(25236.2, 14307.5, 0.761, 0.733, 0.1, 0.9).unwrap();
    assert!((r.r_r - 0.433).abs() < 5e-4);
    assert!((r.a_r - 0.037).abs() < 5e-4);
    let r = comprehensive_score(4953.2, 3448.7, 0.937, 0.926, 0.1, 0.9).unwrap();
    assert!((r.r_r - 0.3039).abs() < 5e-4);
    assert!((r.a_r - 0.0117).abs() < 5e-5);
}

#[test]
fn sweep_endpoints_and_single_point() {
    let grid = [0.0, 0.5, 1.0];
    let equal = tradeoff_sweep(10.0, 10.0, 0.8, 0.8, &grid).unwrap();
    let s: Vec<f64> = equal.reports.iter().map(|r| r.s).collect();
    assert_eq!(s, vec![1.0, 0.5, 0.0]);
    assert_eq!(equal.crossover, None);

    let one = tradeoff_sweep(25236.2, 14307.5, 0.761, 0.733, &[0.1]).unwrap();
    let direct = comprehensive_score(25236.2, 14307.5, 0.761, 0.733, 0.1, 0.9).unwrap();
    assert_eq!(one.reports[0], direct);
}

#[test]
fn grid_crossover_agrees_with_closed_form() {
    let grid = weight_grid(0.001);
    for (tb, t, ab, a) in [
        (25236.2, 14307.5, 0.761, 0.733),
        (25236.2, 9209.3, 0.761, 0.692),
        (4953.2, 3448.7, 0.937, 0.926),
        (4953.2, 3417.3, 0.937, 0.914),
    ] {
        let sweep = tradeoff_sweep(tb, t, ab, a, &grid).unwrap();
        let r = &sweep.reports[0];
        let w = analytic_crossover(r.r_r, r.a_r).unwrap();
        let found = sweep.crossover.unwrap();
        assert!(found > w && found - w <= 0.001 + 1e-12, "{found} vs {w}");
    }
}

#[test]
fn shared_flops_approach_m_squared_on_large_square_layers() {
    for m in [2usize, 4] {
        let n = 1500 * m;
        let dense = MotifTopology::build(&[n, n], 1, BlockDensitySpec::fixed(1.0), 0).unwrap();
        let motif = MotifTopology::build_with_output(&[n, n], m, BlockDensitySpec::fixed(1.0), OutputGranularity::Motif, 0).unwrap();
        let ratio = flop_counter(&dense, WeightMode::Shared, 1).total() as f64
            / flop_counter(&motif, WeightMode::Shared, 1).total() as f64;
        assert!(ratio > (m * m) as f64 / 2.0, "m={m}: ratio {ratio}");
    }
}

#[test]
fn independent_mode_counts_neuron_weights() {
    let t = MotifTopology::build(&[8, 8, 3], 2, BlockDensitySpec::fixed(1.0), 0).unwrap();
    assert_eq!(trainable_weight_counts(&t, WeightMode::Shared), vec![16, 24]);
    assert_eq!(trainable_weight_counts(&t, WeightMode::Independent), vec![64, 24]);
    let f = flop_counter(&t, WeightMode::Independent, 2);
    assert_eq!(f.forward, 2 * (64 + 24));
    assert_eq!(f.backward, 2 * (64 + 24 + 24));
}

proptest! {
    #[test]
    fn score_identity(
        tb in 1e-3f64..1e5, t in 0.0f64..1e5, ab in 1e-3f64..1.0, a in 0.0f64..1.0, w in 0.0f64..=1.0,
    ) {
        let r = comprehensive_score(tb, t, ab, a, w, 1.0 - w).unwrap();
        prop_assert_eq!(r.r_r, (tb - t) / tb);
        prop_assert_eq!(r.a_r, (ab - a) / ab);
        prop_assert_eq!(r.s, w * r.r_r + (1.0 - w) * (1.0 - r.a_r));
    }

    #[test]
    fn baseline_fixed_point(t in 1e-3f64..1e5, a in 1e-3f64..1.0, w in 0.0f64..=1.0) {
        prop_assert_eq!(comprehensive_score(t, t, a, a, w, 1.0 - w).unwrap().s, 1.0 - w);
    }

    #[test]
    fn sweep_is_monotone_with_one_crossing(
        tb in 1.0f64..1e4, speedup in 0.01f64..0.99, ab in 0.1f64..1.0, drop in 0.001f64..0.5,
    ) {
        let sweep = tradeoff_sweep(tb, tb * (1.0 - speedup), ab, ab * (1.0 - drop), &weight_grid(0.01)).unwrap();
        // the variant's own S may fall with w_eff (slope R_r + A_r - 1); its lead
        // over the baseline always grows
        for w in sweep.reports.windows(2) {
            prop_assert!(w[1].s - w[1].s_baseline() > w[0].s - w[0].s_baseline());
            prop_assert!(w[1].s_baseline() < w[0].s_baseline());
        }
        let signs: Vec<bool> = sweep.reports.iter().map(|r| r.s > r.s_baseline()).collect();
        prop_assert!(signs.windows(2).filter(|p| p[0] != p[1]).count() <= 1);
    }

    #[test]
    fn metrics_csv_round_trips_exactly(
        rows in prop::collection::vec((any::<f64>(), 0.0f64..=1.0, 0.0f64..1e4, any::<u32>()), 1..20),
    ) {
        let mut run = RunMeasurement::default();
        for &(loss, acc, t, flops) in &rows {
            run.record_epoch(t, loss, acc, flops as u64);
        }
        let parsed = parse_metrics_csv(&run.metrics_csv()).unwrap();
        prop_assert_eq!(parsed.len(), rows.len());
        for (p, e) in parsed.iter().zip(&run.epochs) {
            prop_assert_eq!(p.train_loss.to_bits(), e.train_loss.to_bits());
            prop_assert_eq!(p.test_accuracy.to_bits(), e.test_accuracy.to_bits());
            prop_assert_eq!(p.epoch_time_s.to_bits(), e.epoch_time_s.to_bits());
            prop_assert_eq!(p.flops, e.flops);
        }
    }

    #[test]
    fn total_time_covers_epochs(times in prop::collection::vec(0.0f64..10.0, 1..40)) {
        let mut run = RunMeasurement::default();
        for &t in &times {
            run.record_epoch(t, 0.0, 0.5, 1);
        }
        prop_assert!(run.total_time_s >= run.epoch_time_sum() * 0.99);
        prop_assert_eq!(run.per_epoch_time_s(), times);
    }

    #[test]
    fn flops_decrease_with_motif_size(units in prop::collection::vec(1usize..6, 3), d in 0.2f64..=1.0) {
        let sizes: Vec<usize> = units.iter().map(|u| u * 16).collect();
        let t = |m| MotifTopology::build(&sizes, m, BlockDensitySpec::fixed(d), 0).unwrap();
        let f: Vec<u64> = [1, 2, 4].iter().map(|&m| flop_counter(&t(m), WeightMode::Shared, 1).total()).collect();
        prop_assert!(f[0] > f[1] && f[1] > f[2], "{:?}", f);
    }
}
