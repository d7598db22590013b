//! Experiment runner: configuration files, the training loop, and the
//! scoring commands behind the `motifset` binary.
//!
//! Every run writes its artifacts into one output directory:
//!
//! | file | contents |
//! |------|----------|
//! | `metrics.csv` | one row per epoch, appended and flushed as the run goes |
//! | `evolution.csv` | one row per layer per evolution event |
//! | `checkpoint.bin` | final network |
//! | `manifest.txt` | resolved config, run results, environment |
//! | `score.csv` | written by `score` / `sweep` |
//! | `dataset.bin` | written by `prepare` |
//! | `topology.txt` | written by `export-topology` |

mod config;
mod manifest;
mod runner;

pub use self::config::{
    apply_override, DatasetConfig, DatasetKind, EvolutionConfig, ExperimentConfig, ModelConfig,
    OutputConfig, ScoreConfig, SeedConfig, Seeds, TrainingConfig,
};
pub use self::manifest::{
    environment_table, manifest_path, manifest_text, parse_run_summary, read_run_summary, RunSummary,
    MANIFEST_FILE,
};
pub use self::runner::{
    build_network, export_topology, load_dataset, run_prepare, run_score, run_sweep, run_train,
    TrainOutcome, CHECKPOINT_FILE, DATASET_FILE, EVOLUTION_FILE, METRICS_FILE, SCORE_FILE,
    TOPOLOGY_FILE,
};
