//! Experiment configuration: a sectioned `key = value` file (TOML syntax).
//!
//! ```toml
//! [dataset]
//! kind = "fmnist"            # fmnist | labeled_csv | cache
//! path = "../data/fashion-mnist"
//! train_limit = 10000
//!
//! [model]
//! hidden = [256, 256]
//! motif_size = 2
//! density_mode = "erdos_renyi_set"
//! density_value = 10.0
//!
//! [training]
//! epochs = 30
//! learning_rate = 0.05
//!
//! [seeds]
//! base = 42
//! ```
//!
//! Omitted keys take their defaults. Unset per-purpose seeds default to
//! `seeds.base`; the resolved config lists all of them. Relative paths are
//! resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionMode, EvolutionPolicy};
use crate::network::{Activation, InitScheme, NetworkConfig, WeightMode};
use crate::topology::{BlockDensitySpec, DensityMode, OutputGranularity};

/// Top-level tables of a run manifest that are not part of the config.
pub(crate) const MANIFEST_ONLY_SECTIONS: [&str; 2] = ["run", "environment"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Directory holding the four MNIST-style IDX files (optionally gzipped).
    Fmnist,
    /// One CSV file, split into train and test by `test_fraction`.
    LabeledCsv,
    /// Container written by `prepare`.
    Cache,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub path: PathBuf,
    /// Use only the first `n` training samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_limit: Option<usize>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Label column of a CSV; the last column when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
    /// Z-score features with train-split statistics.
    #[serde(default)]
    pub standardize: bool,
}

fn default_test_fraction() -> f64 {
    1.0 / 3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub motif_size: usize,
    pub weight_mode: WeightMode,
    pub activation: Activation,
    pub init: InitScheme,
    pub output_granularity: OutputGranularity,
    pub density_mode: DensityMode,
    /// Epsilon for `erdos_renyi_set`, block density for `fixed_density`.
    pub density_value: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: vec![1000, 1000],
            motif_size: 1,
            weight_mode: WeightMode::Shared,
            activation: Activation::Relu,
            init: InitScheme::HeUniform,
            output_granularity: OutputGranularity::Neuron,
            density_mode: DensityMode::ErdosRenyiSet,
            density_value: 20.0,
        }
    }
}

impl ModelConfig {
    pub fn density(&self) -> BlockDensitySpec {
        BlockDensitySpec {
            mode: self.density_mode,
            value: self.density_value,
        }
    }

    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            activation: self.activation,
            init: self.init,
            weight_mode: self.weight_mode,
        }
    }

    /// `[inputs, hidden..., classes]`.
    pub fn layer_sizes(&self, inputs: usize, classes: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(inputs);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(classes);
        sizes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Reductions always run in a fixed order, so runs are reproducible
    /// either way; the flag is recorded for the manifest.
    pub deterministic: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 300,
            learning_rate: 0.05,
            batch_size: 64,
            deterministic: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub mode: EvolutionMode,
    pub zeta: f64,
    pub epsilon_prune: f64,
    pub noise_scale: f64,
    pub period: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        let p = EvolutionPolicy::default();
        EvolutionConfig {
            mode: p.mode,
            zeta: p.zeta,
            epsilon_prune: p.epsilon_prune,
            noise_scale: p.noise_scale,
            period: p.period,
        }
    }
}

impl EvolutionConfig {
    pub fn policy(&self, rng_seed: u64) -> EvolutionPolicy {
        EvolutionPolicy {
            mode: self.mode,
            zeta: self.zeta,
            epsilon_prune: self.epsilon_prune,
            noise_scale: self.noise_scale,
            period: self.period,
            rng_seed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    pub base: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shuffle: Option<u64>,
}

/// Seeds after defaults are filled in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeds {
    pub topology: u64,
    pub init: u64,
    pub evolution: u64,
    pub split: u64,
    pub shuffle: u64,
}

impl SeedConfig {
    /// Sets every seed, dropping per-purpose overrides.
    pub fn reset(&mut self, base: u64) {
        *self = SeedConfig {
            base,
            ..SeedConfig::default()
        };
    }

    fn fill(&mut self) {
        for s in [
            &mut self.topology,
            &mut self.init,
            &mut self.evolution,
            &mut self.split,
            &mut self.shuffle,
        ] {
            s.get_or_insert(self.base);
        }
    }

    pub fn resolved(&self) -> Seeds {
        let or_base = |s: Option<u64>| s.unwrap_or(self.base);
        Seeds {
            topology: or_base(self.topology),
            init: or_base(self.init),
            evolution: or_base(self.evolution),
            split: or_base(self.split),
            shuffle: or_base(self.shuffle),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub w_eff: f64,
    pub w_acc: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            w_eff: crate::metrics::DEFAULT_W_EFF,
            w_acc: crate::metrics::DEFAULT_W_ACC,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Reads a config (or a run manifest) and applies `section.key=value` overrides.
    pub fn from_file(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let base = std::path::absolute(base).map_err(|e| Error::io(base, e))?;
        Self::parse(&text, &base, overrides).map_err(|e| e.context(path.display().to_string()))
    }

    /// Parses config text; relative paths are taken relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for section in MANIFEST_ONLY_SECTIONS {
            table.remove(section);
        }
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let mut cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.resolve(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base_dir: &Path) {
        let absolutize = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        absolutize(&mut self.dataset.path);
        if let Some(dir) = self.output.dir.as_mut() {
            absolutize(dir);
        }
        self.seeds.fill();
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let t = &self.training;
        if t.epochs < 1 {
            return fail("training.epochs must be at least 1".into());
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return fail(format!("training.learning_rate must be > 0, got {}", t.learning_rate));
        }
        if t.batch_size < 1 {
            return fail("training.batch_size must be at least 1".into());
        }
        if self.model.motif_size < 1 {
            return fail("model.motif_size must be at least 1".into());
        }
        let tf = self.dataset.test_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return fail(format!("dataset.test_fraction must lie in (0, 1), got {tf}"));
        }
        self.model.density().validate()?;
        self.evolution.policy(0).validate()?;
        crate::metrics::comprehensive_score(1.0, 1.0, 1.0, 1.0, self.score.w_eff, self.score.w_acc)?;
        Ok(())
    }

    pub fn seeds(&self) -> Seeds {
        self.seeds.resolved()
    }

    pub fn evolution_policy(&self) -> EvolutionPolicy {
        self.evolution.policy(self.seeds().evolution)
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes to a table")
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Applies `section.key=value`; the value is read as a TOML value, falling
/// back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed above"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for s in sections {
        cur = cur
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{s}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[dataset]\nkind = \"labeled_csv\"\npath = \"toy.csv\"\n";

    #[test]
    fn defaults_and_seed_echo() {
        let cfg = ExperimentConfig::parse(MINIMAL, Path::new("/cfg"), &[]).unwrap();
        assert_eq!(cfg.dataset.path, PathBuf::from("/cfg/toy.csv"));
        assert_eq!(cfg.training.epochs, 300);
        assert_eq!(cfg.training.learning_rate, 0.05);
        let text = cfg.to_toml_string();
        for key in ["topology", "init", "evolution", "split", "shuffle"] {
            assert!(text.contains(&format!("{key} = 0")), "{text}");
        }
        let again = ExperimentConfig::parse(&text, Path::new("/elsewhere"), &[]).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn overrides() {
        let ov = [
            "training.epochs=3".to_string(),
            "model.hidden=[8, 4]".into(),
            "seeds.init = 7".into(),
            "evolution.mode=listing4".into(),
        ];
        let cfg = ExperimentConfig::parse(MINIMAL, Path::new("/"), &ov).unwrap();
        assert_eq!(cfg.training.epochs, 3);
        assert_eq!(cfg.model.hidden, vec![8, 4]);
        assert_eq!(cfg.seeds().init, 7);
        assert_eq!(cfg.seeds().topology, 0);
        assert_eq!(cfg.evolution.mode, EvolutionMode::Listing4);
    }

    #[test]
    fn rejects_bad_values() {
        for ov in [
            "training.epochs=0",
            "training.learning_rate=0",
            "training.learning_rate=-0.1",
            "model.typo=1",
            "evolution.zeta=1.0",
            "score.w_eff=0.5",
            "dataset=3",
        ] {
            let r = ExperimentConfig::parse(MINIMAL, Path::new("/"), &[ov.to_string()]);
            assert!(matches!(r, Err(Error::Config(_) | Error::InvalidPolicy(_) | Error::WeightSum { .. })), "{ov}: {r:?}");
        }
        assert!(ExperimentConfig::parse("[model]\n", Path::new("/"), &[]).is_err());
    }
}
