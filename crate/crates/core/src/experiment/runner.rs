use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use ndarray::Axis;
use rand::seq::SliceRandom;

use crate::data::{self, Dataset, LabelColumn};
use crate::error::{Error, Result};
use crate::evolution::{evolution_schedule, evolve};
use crate::metrics::{self, RunMeasurement, ScoreReport, Sweep};
use crate::network::{self, save_checkpoint, Network};
use crate::rng;
use crate::topology::MotifTopology;

use super::config::{DatasetConfig, DatasetKind, ExperimentConfig};
use super::manifest::{manifest_text, read_run_summary, MANIFEST_FILE};

pub const METRICS_FILE: &str = "metrics.csv";
pub const EVOLUTION_FILE: &str = "evolution.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const SCORE_FILE: &str = "score.csv";
pub const DATASET_FILE: &str = "dataset.bin";
pub const TOPOLOGY_FILE: &str = "topology.txt";

const EVOLUTION_CSV_HEADER: &str = "epoch,layer,pruned,regrown,active_blocks";
const FMNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

fn find_idx(dir: &Path, stem: &str) -> Result<PathBuf> {
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        return Ok(gz);
    }
    let plain = dir.join(stem);
    if plain.exists() {
        return Ok(plain);
    }
    Err(Error::io(
        gz,
        std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file not found (with or without .gz)"),
    ))
}

fn truncate<T: Clone>(x: ndarray::Array2<T>, labels: Vec<usize>, limit: Option<usize>) -> (ndarray::Array2<T>, Vec<usize>) {
    match limit {
        Some(n) if n < labels.len() => (x.slice_move(ndarray::s![..n, ..]), labels[..n].to_vec()),
        _ => (x, labels),
    }
}

/// Loads and preprocesses the configured dataset.
pub fn load_dataset(cfg: &DatasetConfig, split_seed: u64) -> Result<Dataset> {
    let mut ds = match cfg.kind {
        DatasetKind::Fmnist => {
            let paths = FMNIST_FILES
                .iter()
                .map(|stem| find_idx(&cfg.path, stem))
                .collect::<Result<Vec<_>>>()?;
            let train = data::load_idx(&paths[0], &paths[1])?;
            let test = data::load_idx(&paths[2], &paths[3])?;
            let widen = |l: &[u8]| l.iter().map(|&v| v as usize).collect::<Vec<_>>();
            let n_classes = 1 + train.labels.iter().chain(&test.labels).copied().max().unwrap_or(0) as usize;
            let (xtr, ytr) = truncate(train.pixels, widen(&train.labels), cfg.train_limit);
            let (xte, yte) = truncate(test.pixels, widen(&test.labels), cfg.test_limit);
            let mut ds = Dataset::from_parts(
                data::normalize_01(&xtr),
                &ytr,
                data::normalize_01(&xte),
                &yte,
                n_classes,
            )?;
            ds.preprocessing.push(data::PreprocessStep::Normalize01);
            ds
        }
        DatasetKind::LabeledCsv => {
            let col = cfg.label_column.map_or(LabelColumn::Last, LabelColumn::Index);
            let m = data::load_labeled_csv(&cfg.path, col)?;
            let ds = data::split(m.x.view(), &m.labels, m.classes.len(), cfg.test_fraction, split_seed)?;
            let (xtr, ytr) = truncate(ds.x_train, labels_vec(&ds.y_train), cfg.train_limit);
            let (xte, yte) = truncate(ds.x_test, labels_vec(&ds.y_test), cfg.test_limit);
            Dataset::from_parts(xtr, &ytr, xte, &yte, ds.n_classes)?
        }
        DatasetKind::Cache => return data::load_cache(&cfg.path),
    };
    if cfg.standardize {
        ds.standardize();
    }
    Ok(ds)
}

fn labels_vec(y: &ndarray::Array2<f64>) -> Vec<usize> {
    data::labels_of(y.view())
}

/// Topology and initial weights for a dataset with the given dimensions.
pub fn build_network(cfg: &ExperimentConfig, inputs: usize, classes: usize) -> Result<Network> {
    let seeds = cfg.seeds();
    let topology = MotifTopology::build_with_output(
        &cfg.model.layer_sizes(inputs, classes),
        cfg.model.motif_size,
        cfg.model.density(),
        cfg.model.output_granularity,
        seeds.topology,
    )?;
    Ok(Network::init(topology, cfg.model.network_config(), seeds.init))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Line-oriented CSV writer that flushes after every row.
struct CsvLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvLog {
    fn create(path: PathBuf, header: &str) -> Result<Self> {
        let file = OpenOptions::new()
            .write(true)
            .create(true)
            .truncate(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut log = CsvLog {
            out: BufWriter::new(file),
            path,
        };
        log.row(header)?;
        Ok(log)
    }

    fn row(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: Network,
    pub measurement: RunMeasurement,
    pub out_dir: PathBuf,
}

/// Full training run: data, topology, epochs of SGD with evaluation and
/// scheduled evolution, then checkpoint and manifest.
pub fn run_train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<TrainOutcome> {
    let started = Instant::now();
    cfg.validate()?;
    create_dir(out_dir)?;
    let seeds = cfg.seeds();
    let ds = load_dataset(&cfg.dataset, seeds.split).map_err(|e| e.context("loading dataset"))?;
    let mut net = build_network(cfg, ds.n_features, ds.n_classes).map_err(|e| e.context("building network"))?;
    let policy = cfg.evolution_policy();
    let mode = net.weight_mode();
    let epochs = cfg.training.epochs;
    let n_train = ds.x_train.nrows();
    let batch = cfg.training.batch_size;
    info!(
        "training {:?} on {} samples ({} test), {} epochs, motif {}",
        net.topology().layer_sizes(),
        n_train,
        ds.x_test.nrows(),
        epochs,
        cfg.model.motif_size
    );

    let mut metrics_log = CsvLog::create(out_dir.join(METRICS_FILE), metrics::METRICS_CSV_HEADER)?;
    let mut evolution_log = CsvLog::create(out_dir.join(EVOLUTION_FILE), EVOLUTION_CSV_HEADER)?;
    let mut run = RunMeasurement::default();
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut event = 0u64;

    for epoch in 0..epochs {
        let t0 = Instant::now();
        let flops = metrics::flop_counter(net.topology(), mode, n_train).total();
        order.shuffle(&mut rng::stream(seeds.shuffle, &[rng::DOMAIN_SHUFFLE, epoch as u64]));
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(batch).enumerate() {
            let x = ds.x_train.select(Axis(0), idx);
            let y = ds.y_train.select(Axis(0), idx);
            let cache = net.forward(x.view())?;
            let loss = network::loss(&cache, y.view())?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("loss {loss} at epoch {epoch}, batch {b}")));
            }
            loss_sum += loss * idx.len() as f64;
            let grads = net.backward(&cache, y.view())?;
            net.sgd_step(&grads, cfg.training.learning_rate)?;
        }
        if !net.is_finite() {
            return Err(Error::Numerical(format!("non-finite parameters after epoch {epoch}")));
        }
        let accuracy = net.accuracy(ds.x_test.view(), ds.y_test.view())?;
        if evolution_schedule(epoch, epochs, policy.period) {
            let stats = evolve(&mut net, &policy, event)?;
            event += 1;
            for row in stats.csv_rows(epoch) {
                evolution_log.row(&row)?;
            }
        }
        let train_loss = loss_sum / n_train.max(1) as f64;
        let rec = *run.record_epoch(t0.elapsed().as_secs_f64(), train_loss, accuracy, flops);
        metrics_log.row(&rec.csv_row())?;
        info!(
            "epoch {:>3}/{epochs}: loss {:.4}, test accuracy {:.4}, {:.2}s",
            epoch + 1,
            train_loss,
            accuracy,
            rec.epoch_time_s
        );
    }

    save_checkpoint(&net, out_dir.join(CHECKPOINT_FILE))?;
    run.total_time_s = started.elapsed().as_secs_f64();
    let manifest = manifest_text(cfg, &run, &net.topology().active_block_count());
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(TrainOutcome {
        network: net,
        measurement: run,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Loads and preprocesses the dataset once and stores it as `dataset.bin`.
pub fn run_prepare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(Dataset, PathBuf)> {
    create_dir(out_dir)?;
    let ds = load_dataset(&cfg.dataset, cfg.seeds().split)?;
    let path = out_dir.join(DATASET_FILE);
    data::save_cache(&ds, &path)?;
    Ok((ds, path))
}

fn write_score(out_dir: Option<&Path>, reports: &[ScoreReport]) -> Result<()> {
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        let path = dir.join(SCORE_FILE);
        std::fs::write(&path, metrics::score_csv(reports)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn channels(baseline: &Path, variant: &Path, use_flops: bool) -> Result<(f64, f64, f64, f64)> {
    let b = read_run_summary(baseline)?;
    let v = read_run_summary(variant)?;
    Ok((
        b.time_channel(use_flops)?,
        v.time_channel(use_flops)?,
        b.final_accuracy,
        v.final_accuracy,
    ))
}

/// Scores a variant run against a baseline run from their manifests.
pub fn run_score(
    baseline: &Path,
    variant: &Path,
    w_eff: f64,
    w_acc: f64,
    use_flops: bool,
    out_dir: Option<&Path>,
) -> Result<ScoreReport> {
    let (tb, t, ab, a) = channels(baseline, variant, use_flops)?;
    let report = metrics::comprehensive_score(tb, t, ab, a, w_eff, w_acc)?;
    write_score(out_dir, &[report])?;
    Ok(report)
}

/// Scores a variant against a baseline over a grid of efficiency weights.
pub fn run_sweep(
    baseline: &Path,
    variant: &Path,
    grid: &[f64],
    use_flops: bool,
    out_dir: Option<&Path>,
) -> Result<Sweep> {
    let (tb, t, ab, a) = channels(baseline, variant, use_flops)?;
    let sweep = metrics::tradeoff_sweep(tb, t, ab, a, grid)?;
    write_score(out_dir, &sweep.reports)?;
    Ok(sweep)
}

/// Writes `topology.txt` into `out_dir`.
pub fn export_topology(topology: &MotifTopology, out_dir: &Path) -> Result<PathBuf> {
    create_dir(out_dir)?;
    let path = out_dir.join(TOPOLOGY_FILE);
    std::fs::write(&path, topology.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
