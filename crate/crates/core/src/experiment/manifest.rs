//! Run manifests: the resolved config followed by `[run]` results and an
//! `[environment]` description. A manifest is itself a valid config file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::RunMeasurement;

use super::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Platform description strings recorded with every run.
pub fn environment_table() -> toml::Table {
    let mut env = toml::Table::new();
    env.insert("os".into(), std::env::consts::OS.into());
    env.insert("arch".into(), std::env::consts::ARCH.into());
    env.insert("family".into(), std::env::consts::FAMILY.into());
    env.insert("crate_version".into(), env!("CARGO_PKG_VERSION").into());
    if let Ok(n) = std::thread::available_parallelism() {
        env.insert("logical_cpus".into(), (n.get() as i64).into());
    }
    if let Some(cpu) = cpu_model() {
        env.insert("cpu".into(), cpu.into());
    }
    env
}

fn cpu_model() -> Option<String> {
    let info = std::fs::read_to_string("/proc/cpuinfo").ok()?;
    info.lines()
        .find(|l| l.starts_with("model name"))
        .and_then(|l| l.split_once(':'))
        .map(|(_, v)| v.trim().to_string())
}

pub fn run_table(run: &RunMeasurement, active_blocks: &[usize]) -> toml::Table {
    let floats = |f: fn(&crate::metrics::EpochRecord) -> f64| {
        toml::Value::Array(run.epochs.iter().map(|e| f(e).into()).collect())
    };
    let mut t = toml::Table::new();
    t.insert("total_time_s".into(), run.total_time_s.into());
    t.insert("final_accuracy".into(), run.final_accuracy.into());
    t.insert("total_flops".into(), (run.flop_count as i64).into());
    t.insert("epochs_completed".into(), (run.epochs.len() as i64).into());
    t.insert("epoch_time_s".into(), floats(|e| e.epoch_time_s));
    t.insert("test_accuracy".into(), floats(|e| e.test_accuracy));
    t.insert("train_loss".into(), floats(|e| e.train_loss));
    t.insert(
        "active_blocks".into(),
        toml::Value::Array(active_blocks.iter().map(|&a| (a as i64).into()).collect()),
    );
    t
}

pub fn manifest_text(config: &ExperimentConfig, run: &RunMeasurement, active_blocks: &[usize]) -> String {
    let mut table = config.to_table();
    table.insert("run".into(), run_table(run, active_blocks).into());
    table.insert("environment".into(), environment_table().into());
    format!(
        "# motifset run manifest\n{}",
        toml::to_string(&table).expect("manifest serializes")
    )
}

/// The fields of a manifest that scoring needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub final_accuracy: f64,
    pub total_time_s: f64,
    pub total_flops: Option<u64>,
}

impl RunSummary {
    /// Wall-clock seconds, or the multiply-accumulate count with `use_flops`.
    pub fn time_channel(&self, use_flops: bool) -> Result<f64> {
        if use_flops {
            self.total_flops
                .map(|f| f as f64)
                .ok_or_else(|| Error::MissingField("run.total_flops".into()))
        } else {
            Ok(self.total_time_s)
        }
    }

    pub fn to_manifest_text(&self) -> String {
        let mut run = toml::Table::new();
        run.insert("total_time_s".into(), self.total_time_s.into());
        run.insert("final_accuracy".into(), self.final_accuracy.into());
        if let Some(f) = self.total_flops {
            run.insert("total_flops".into(), (f as i64).into());
        }
        let mut t = toml::Table::new();
        t.insert("run".into(), run.into());
        toml::to_string(&t).expect("manifest serializes")
    }
}

/// `path` may be the manifest file or the run directory containing it.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn read_run_summary(path: impl AsRef<Path>) -> Result<RunSummary> {
    let path = manifest_path(path.as_ref());
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_run_summary(&text).map_err(|e| e.context(path.display().to_string()))
}

pub fn parse_run_summary(text: &str) -> Result<RunSummary> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let run = table
        .get("run")
        .and_then(|v| v.as_table())
        .ok_or_else(|| Error::MissingField("run".into()))?;
    let number = |key: &str| -> Result<f64> {
        match run.get(key) {
            Some(toml::Value::Float(f)) => Ok(*f),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            _ => Err(Error::MissingField(format!("run.{key}"))),
        }
    };
    Ok(RunSummary {
        final_accuracy: number("final_accuracy")?,
        total_time_s: number("total_time_s")?,
        total_flops: run
            .get("total_flops")
            .and_then(|v| v.as_integer())
            .map(|i| i as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_round_trip() {
        let s = RunSummary {
            final_accuracy: 0.761,
            total_time_s: 25236.2,
            total_flops: Some(12),
        };
        assert_eq!(parse_run_summary(&s.to_manifest_text()).unwrap(), s);
    }

    #[test]
    fn missing_fields() {
        assert!(matches!(parse_run_summary(""), Err(Error::MissingField(f)) if f == "run"));
        let r = parse_run_summary("[run]\ntotal_time_s = 3.0\n");
        assert!(matches!(r, Err(Error::MissingField(f)) if f == "run.final_accuracy"));
        let s = parse_run_summary("[run]\ntotal_time_s = 3\nfinal_accuracy = 0.5\n").unwrap();
        assert_eq!(s.total_time_s, 3.0);
        assert!(matches!(s.time_channel(true), Err(Error::MissingField(_))));
    }
}
