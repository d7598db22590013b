//! Run bookkeeping, analytic work counts and the efficiency/accuracy score.
//!
//! The comprehensive score of a variant against a baseline is
//!
//! ```text
//! R_r = (T_base - T) / T_base          runtime reduction
//! A_r = (A_base - A) / A_base          accuracy reduction
//! S   = w_eff * R_r + w_acc * (1 - A_r)
//! ```
//!
//! with `w_eff + w_acc = 1` (0.1 / 0.9 by default). Nothing is clamped: a
//! slower variant gets a negative `R_r`. The time channel can be wall-clock
//! seconds or multiply-accumulate counts; only ratios enter the score.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::network::WeightMode;
use crate::topology::MotifTopology;

pub const DEFAULT_W_EFF: f64 = 0.1;
pub const DEFAULT_W_ACC: f64 = 0.9;
const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreReport {
    pub t_base: f64,
    pub t: f64,
    pub a_base: f64,
    pub a: f64,
    pub w_eff: f64,
    pub w_acc: f64,
    pub r_r: f64,
    pub a_r: f64,
    pub s: f64,
}

impl ScoreReport {
    /// Score of the baseline against itself at the same weights (`= w_acc`).
    pub fn s_baseline(&self) -> f64 {
        self.w_eff * 0.0 + self.w_acc * (1.0 - 0.0)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.w_eff,
            self.w_acc,
            self.r_r,
            self.a_r,
            self.s,
            self.s_baseline()
        )
    }
}

pub const SCORE_CSV_HEADER: &str = "w_eff,w_acc,r_r,a_r,s_variant,s_baseline";

pub fn score_csv(reports: &[ScoreReport]) -> String {
    let mut out = String::from(SCORE_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn comprehensive_score(
    t_base: f64,
    t: f64,
    a_base: f64,
    a: f64,
    w_eff: f64,
    w_acc: f64,
) -> Result<ScoreReport> {
    if !(t_base > 0.0) {
        return Err(Error::NonPositiveBaseline("time"));
    }
    if !(a_base > 0.0) {
        return Err(Error::NonPositiveBaseline("accuracy"));
    }
    if !(w_eff >= 0.0 && w_acc >= 0.0 && (w_eff + w_acc - 1.0).abs() <= WEIGHT_SUM_TOL) {
        return Err(Error::WeightSum { w_eff, w_acc });
    }
    let r_r = (t_base - t) / t_base;
    let a_r = (a_base - a) / a_base;
    Ok(ScoreReport {
        t_base,
        t,
        a_base,
        a,
        w_eff,
        w_acc,
        r_r,
        a_r,
        s: w_eff * r_r + w_acc * (1.0 - a_r),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub reports: Vec<ScoreReport>,
    /// First grid weight at which the variant scores strictly above the baseline.
    pub crossover: Option<f64>,
}

/// `0, step, 2*step, ..., 1`.
pub fn weight_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Scores the variant at every `w_eff` in `grid` (with `w_acc = 1 - w_eff`).
pub fn tradeoff_sweep(t_base: f64, t: f64, a_base: f64, a: f64, grid: &[f64]) -> Result<Sweep> {
    let reports = grid
        .iter()
        .map(|&w| {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::WeightSum {
                    w_eff: w,
                    w_acc: 1.0 - w,
                });
            }
            comprehensive_score(t_base, t, a_base, a, w, 1.0 - w)
        })
        .collect::<Result<Vec<_>>>()?;
    let crossover = reports.iter().find(|r| r.s > r.s_baseline()).map(|r| r.w_eff);
    Ok(Sweep { reports, crossover })
}

/// Closed-form crossover: the variant wins iff `w_eff * (R_r + A_r) > A_r`.
/// `None` when the variant never wins on `[0, 1]`; `Some(0.0)` when it already
/// wins at `w_eff = 0`.
pub fn analytic_crossover(r_r: f64, a_r: f64) -> Option<f64> {
    let denom = r_r + a_r;
    if a_r < 0.0 {
        return Some(0.0);
    }
    if denom <= 0.0 {
        return None;
    }
    let w = a_r / denom;
    (w < 1.0).then_some(w)
}

/// Multiply-accumulate counts for one pass over a number of samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlopCount {
    pub forward: u64,
    pub backward: u64,
}

impl FlopCount {
    pub fn total(&self) -> u64 {
        self.forward + self.backward
    }
}

/// Analytic multiply-accumulate count of training on `samples` samples.
///
/// Per weight layer with `a` active blocks of edge `b` between `R` input and
/// `C` output neurons, per sample:
///
/// | mode | forward | backward |
/// |------|---------|----------|
/// | shared, `b = 1` or any independent | `a b^2` | `a b^2` (weight grads) `+ a b^2` (input deltas, not for the first layer) |
/// | shared, `b > 1` | `R + a` (pool inputs, block products) | `C + a` (pool deltas, block grads) `+ a` (input deltas, not for the first layer) |
///
/// Bias additions, activations and the broadcast of block outputs are not counted.
pub fn flop_counter(topology: &MotifTopology, mode: WeightMode, samples: usize) -> FlopCount {
    let mut per_sample = FlopCount::default();
    for (l, layer) in topology.layers().iter().enumerate() {
        let a = layer.mask.count_active() as u64;
        let b = layer.motif as u64;
        let propagate = l > 0;
        if mode == WeightMode::Shared && b > 1 {
            per_sample.forward += layer.in_neurons() as u64 + a;
            per_sample.backward += layer.out_neurons() as u64 + a + if propagate { a } else { 0 };
        } else {
            let macs = a * b * b;
            per_sample.forward += macs;
            per_sample.backward += macs + if propagate { macs } else { 0 };
        }
    }
    FlopCount {
        forward: per_sample.forward * samples as u64,
        backward: per_sample.backward * samples as u64,
    }
}

/// Distinct trainable weights per layer (biases excluded).
pub fn trainable_weight_counts(topology: &MotifTopology, mode: WeightMode) -> Vec<usize> {
    topology
        .layers()
        .iter()
        .map(|l| {
            let a = l.mask.count_active();
            match mode {
                WeightMode::Shared => a,
                WeightMode::Independent => a * l.motif * l.motif,
            }
        })
        .collect()
}

/// Trainable weights of every layer except the final (output) layer.
pub fn hidden_weight_count(topology: &MotifTopology, mode: WeightMode) -> usize {
    let counts = trainable_weight_counts(topology, mode);
    counts[..counts.len() - 1].iter().sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub epoch_time_s: f64,
    pub flops: u64,
}

pub const METRICS_CSV_HEADER: &str = "epoch,train_loss,test_accuracy,epoch_time_s,flops";

impl EpochRecord {
    /// Floats use the shortest representation that parses back to the same value.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.epoch, self.train_loss, self.test_accuracy, self.epoch_time_s, self.flops
        )
    }
}

/// Measurements of one training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMeasurement {
    pub epochs: Vec<EpochRecord>,
    pub total_time_s: f64,
    pub final_accuracy: f64,
    pub flop_count: u64,
}

impl RunMeasurement {
    pub fn record_epoch(&mut self, epoch_time_s: f64, loss: f64, accuracy: f64, flops: u64) -> &EpochRecord {
        self.epochs.push(EpochRecord {
            epoch: self.epochs.len(),
            train_loss: loss,
            test_accuracy: accuracy,
            epoch_time_s,
            flops,
        });
        self.final_accuracy = accuracy;
        self.flop_count += flops;
        self.total_time_s = self.total_time_s.max(self.epoch_time_sum());
        self.epochs.last().unwrap()
    }

    pub fn per_epoch_time_s(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.epoch_time_s).collect()
    }

    pub fn epoch_time_sum(&self) -> f64 {
        self.epochs.iter().map(|e| e.epoch_time_s).sum()
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(METRICS_CSV_HEADER);
        out.push('\n');
        for e in &self.epochs {
            let _ = writeln!(out, "{}", e.csv_row());
        }
        out
    }
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpochRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(METRICS_CSV_HEADER) {
        return Err(Error::MissingField("metrics csv header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::NonNumeric {
                line: i + 2,
                column: 0,
                value: line.to_string(),
            };
            if f.len() != 5 {
                return Err(Error::RaggedRow {
                    line: i + 2,
                    expected: 5,
                    found: f.len(),
                });
            }
            Ok(EpochRecord {
                epoch: f[0].parse().map_err(|_| bad())?,
                train_loss: f[1].parse().map_err(|_| bad())?,
                test_accuracy: f[2].parse().map_err(|_| bad())?,
                epoch_time_s: f[3].parse().map_err(|_| bad())?,
                flops: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
