//! Experiment runner: trains one model on one dataset, writes metrics,
//! curve files and a replayable manifest, and summarises finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hqnn::circuit::parse_circuit;
use hqnn::data::{generate_synthetic, load_csv, prepare, DatasetId, SCALE_MAX};
use hqnn::model::{HybridModel, ModelKind};
use hqnn::trainer::{best_metrics, train_with, MetricsRecord, TrainConfig};

pub const VERSION: &str = concat!("hqnn-bench ", env!("CARGO_PKG_VERSION"));

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const LOSS_CURVE_FILE: &str = "val_loss.dat";
pub const ACCURACY_CURVE_FILE: &str = "val_accuracy.dat";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] hqnn::Error),
}

impl RunError {
    /// 2 for a diverged run, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(hqnn::Error::Divergence { .. }) => 2,
            _ => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub dataset: DatasetId,
    pub csv: Option<PathBuf>,
    pub features: Vec<String>,
    pub target: String,
    pub model: ModelKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub circuit_file: Option<PathBuf>,
    pub out: PathBuf,
}

impl RunSpec {
    pub fn new(dataset: DatasetId, model: ModelKind, out: impl Into<PathBuf>) -> Self {
        let defaults = TrainConfig::default();
        Self {
            dataset,
            csv: None,
            features: dataset.default_features().iter().map(|s| s.to_string()).collect(),
            target: dataset.target_column().to_string(),
            model,
            epochs: defaults.epochs,
            batch_size: defaults.batch_size,
            lr: defaults.lr,
            seed: defaults.seed,
            train_fraction: 0.8,
            circuit_file: None,
            out: out.into(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            seed: self.seed,
            dataset: self.dataset,
            model: self.model,
        }
    }
}

/// Flat `key=value` manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub spec: RunSpec,
    pub version: String,
    pub param_counts: (usize, usize),
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        kv("version", self.version.clone());
        kv("dataset", s.dataset.to_string());
        kv("csv", opt_path(&s.csv));
        kv("features", s.features.join(","));
        kv("target", s.target.clone());
        kv("model", s.model.to_string());
        kv("epochs", s.epochs.to_string());
        kv("batch_size", s.batch_size.to_string());
        kv("lr", format!("{:?}", s.lr));
        kv("seed", s.seed.to_string());
        kv("train_fraction", format!("{:?}", s.train_fraction));
        kv("scale_min", format!("{:?}", 0.0f64));
        kv("scale_max", format!("{SCALE_MAX:?}"));
        kv("circuit_file", opt_path(&s.circuit_file));
        kv("n_classical_params", self.param_counts.0.to_string());
        kv("n_quantum_params", self.param_counts.1.to_string());
        kv("out", s.out.display().to_string());
        kv("metrics", METRICS_FILE.into());
        kv("loss_curve", LOSS_CURVE_FILE.into());
        kv("accuracy_curve", ACCURACY_CURVE_FILE.into());
        out
    }

    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| RunError::Config(format!("manifest line {}: expected key=value", i + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .cloned()
                .ok_or_else(|| RunError::Config(format!("manifest is missing '{k}'")))
        };
        fn num<T: std::str::FromStr>(k: &str, v: String) -> Result<T, RunError> {
            v.parse()
                .map_err(|_| RunError::Config(format!("manifest key '{k}' has invalid value '{v}'")))
        }
        let path = |v: String| (!v.is_empty()).then(|| PathBuf::from(v));
        let features = get("features")?;
        let spec = RunSpec {
            dataset: get("dataset")?.parse()?,
            csv: path(get("csv")?),
            features: if features.is_empty() {
                Vec::new()
            } else {
                features.split(',').map(str::to_string).collect()
            },
            target: get("target")?,
            model: get("model")?.parse()?,
            epochs: num("epochs", get("epochs")?)?,
            batch_size: num("batch_size", get("batch_size")?)?,
            lr: num("lr", get("lr")?)?,
            seed: num("seed", get("seed")?)?,
            train_fraction: num("train_fraction", get("train_fraction")?)?,
            circuit_file: path(get("circuit_file")?),
            out: PathBuf::from(get("out")?),
        };
        Ok(Self {
            spec,
            version: get("version")?,
            param_counts: (
                num("n_classical_params", get("n_classical_params")?)?,
                num("n_quantum_params", get("n_quantum_params")?)?,
            ),
        })
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
        Self::parse(&text)
    }
}

pub fn metrics_csv(history: &[MetricsRecord]) -> String {
    let mut s = String::from("epoch,val_loss,val_accuracy\n");
    for r in history {
        writeln!(s, "{},{:?},{:?}", r.epoch, r.val_loss, r.val_accuracy).unwrap();
    }
    s
}

fn curve(history: &[MetricsRecord], value: impl Fn(&MetricsRecord) -> f64) -> String {
    let mut s = String::new();
    for r in history {
        writeln!(s, "{} {:?}", r.epoch, value(r)).unwrap();
    }
    s
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRecord>, RunError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("epoch,val_loss,val_accuracy") {
        return Err(RunError::Config("metrics file has an unexpected header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let bad = || RunError::Config(format!("metrics row {} is malformed", i + 1));
            let mut it = l.split(',');
            let epoch = it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
            let val_loss = it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
            let val_accuracy = it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
            Ok(MetricsRecord {
                epoch,
                val_loss,
                val_accuracy,
            })
        })
        .collect()
}

pub fn build_model(spec: &RunSpec, n_inputs: usize) -> Result<HybridModel, RunError> {
    match &spec.circuit_file {
        None => Ok(HybridModel::new(spec.model, n_inputs)?),
        Some(path) => {
            if !spec.model.is_quantum() {
                return Err(RunError::Config(format!("--circuit-file does not apply to {}", spec.model)));
            }
            let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
            let circuit = parse_circuit(&text)?;
            if circuit.n_features != n_inputs {
                return Err(RunError::Config(format!(
                    "circuit uses {} features but the dataset has {n_inputs}",
                    circuit.n_features
                )));
            }
            Ok(HybridModel::with_circuit(spec.model, circuit)?)
        }
    }
}

fn load_dataset(spec: &RunSpec) -> Result<hqnn::data::Dataset, RunError> {
    match spec.dataset {
        DatasetId::Synthetic => {
            if spec.csv.is_some() {
                return Err(RunError::Config("the synthetic dataset does not read --csv".into()));
            }
            Ok(generate_synthetic(spec.seed))
        }
        DatasetId::Diabetes | DatasetId::Banknote => {
            let path = spec
                .csv
                .as_ref()
                .ok_or_else(|| RunError::Config(format!("--csv is required for the {} dataset", spec.dataset)))?;
            let cols: Vec<&str> = spec.features.iter().map(String::as_str).collect();
            Ok(load_csv(path, &cols, &spec.target)?)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub history: Vec<MetricsRecord>,
    pub param_counts: (usize, usize),
    pub best: (f64, f64),
    pub out: PathBuf,
}

/// Trains per `spec` and writes the manifest (before training), the
/// metrics CSV and one two-column curve file per metric.
pub fn run_experiment<F>(spec: &RunSpec, on_epoch: F) -> Result<RunReport, RunError>
where
    F: FnMut(&MetricsRecord),
{
    let spec = spec.clone();
    let data = load_dataset(&spec)?;
    let prepared = prepare(&data, spec.train_fraction, spec.seed)?;
    let model = build_model(&spec, data.n_features())?;

    fs::create_dir_all(&spec.out).map_err(io_err(format!("creating {}", spec.out.display())))?;
    let manifest = Manifest {
        spec: spec.clone(),
        version: VERSION.to_string(),
        param_counts: model.param_counts(),
    };
    let write = |name: &str, content: String| {
        let path = spec.out.join(name);
        fs::write(&path, content).map_err(io_err(format!("writing {}", path.display())))
    };
    write(MANIFEST_FILE, manifest.to_text())?;

    let outcome = train_with(&model, &prepared.train, &prepared.validation, &spec.train_config(), on_epoch)?;
    write(METRICS_FILE, metrics_csv(&outcome.history))?;
    write(LOSS_CURVE_FILE, curve(&outcome.history, |r| r.val_loss))?;
    write(ACCURACY_CURVE_FILE, curve(&outcome.history, |r| r.val_accuracy))?;
    Ok(RunReport {
        best: best_metrics(&outcome.history)?,
        history: outcome.history,
        param_counts: model.param_counts(),
        out: spec.out,
    })
}

/// Reruns the experiment recorded in a manifest, optionally into a
/// different output directory.
pub fn replay(manifest_path: &Path, out: Option<PathBuf>) -> Result<RunReport, RunError> {
    let mut spec = Manifest::load(manifest_path)?.spec;
    if let Some(out) = out {
        spec.out = out;
    }
    run_experiment(&spec, |_| {})
}

#[derive(Debug, Clone, PartialEq)]
pub enum SummaryRow {
    Done {
        dir: PathBuf,
        dataset: DatasetId,
        model: ModelKind,
        param_counts: (usize, usize),
        min_loss: f64,
        max_accuracy: f64,
    },
    Failed {
        dir: PathBuf,
        reason: String,
    },
}

fn summarize_one(dir: &Path) -> Result<SummaryRow, RunError> {
    let manifest = Manifest::load(&dir.join(MANIFEST_FILE))?;
    let metrics_path = dir.join(METRICS_FILE);
    let text = fs::read_to_string(&metrics_path).map_err(io_err(format!("reading {}", metrics_path.display())))?;
    let (min_loss, max_accuracy) = best_metrics(&parse_metrics_csv(&text)?)?;
    Ok(SummaryRow::Done {
        dir: dir.to_path_buf(),
        dataset: manifest.spec.dataset,
        model: manifest.spec.model,
        param_counts: manifest.param_counts,
        min_loss,
        max_accuracy,
    })
}

/// One row per run directory; unreadable directories become failed rows.
pub fn summarize(dirs: &[PathBuf]) -> Result<Vec<SummaryRow>, RunError> {
    if dirs.is_empty() {
        return Err(RunError::Config("no run directories given".into()));
    }
    Ok(dirs
        .iter()
        .map(|d| {
            summarize_one(d).unwrap_or_else(|e| SummaryRow::Failed {
                dir: d.clone(),
                reason: e.to_string(),
            })
        })
        .collect())
}

fn row_cells(row: &SummaryRow) -> [String; 5] {
    match row {
        SummaryRow::Done {
            dataset,
            model,
            param_counts,
            min_loss,
            max_accuracy,
            ..
        } => [
            dataset.to_string(),
            model.to_string(),
            format!("{} / {}", param_counts.0, param_counts.1),
            format!("{min_loss:.3}"),
            format!("{:.1}%", 100.0 * max_accuracy),
        ],
        SummaryRow::Failed { dir, reason } => [
            dir.display().to_string(),
            "FAILED".into(),
            "-".into(),
            "-".into(),
            reason.clone(),
        ],
    }
}

const SUMMARY_HEADER: [&str; 5] = ["dataset", "model name", "# of classical / quantum parameters", "min loss", "max accuracy"];

pub fn render_table(rows: &[SummaryRow]) -> String {
    let cells: Vec<[String; 5]> = rows.iter().map(row_cells).collect();
    let mut widths = SUMMARY_HEADER.map(str::len);
    for r in &cells {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cols: &[&str]| {
        let padded: Vec<String> = cols.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", padded.join(" | ").trim_end()).unwrap();
    };
    line(&SUMMARY_HEADER);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &cells {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn render_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("dir,dataset,model,n_classical,n_quantum,min_loss,max_accuracy,status\n");
    for r in rows {
        match r {
            SummaryRow::Done {
                dir,
                dataset,
                model,
                param_counts,
                min_loss,
                max_accuracy,
            } => writeln!(
                s,
                "{},{dataset},{model},{},{},{min_loss:?},{max_accuracy:?},ok",
                dir.display(),
                param_counts.0,
                param_counts.1
            )
            .unwrap(),
            SummaryRow::Failed { dir, reason } => {
                writeln!(s, "{},,,,,,,\"failed: {}\"", dir.display(), reason.replace('"', "'")).unwrap()
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut spec = RunSpec::new(DatasetId::Banknote, ModelKind::FeatureVar, "out/x");
        spec.csv = Some("data/banknote.csv".into());
        spec.lr = 0.012345678901234567;
        let m = Manifest {
            spec,
            version: VERSION.into(),
            param_counts: (0, 4),
        };
        assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn manifest_missing_key() {
        assert!(matches!(Manifest::parse("dataset=synthetic\n"), Err(RunError::Config(_))));
        assert!(Manifest::parse("garbage\n").is_err());
    }

    #[test]
    fn metrics_csv_round_trips() {
        let h = vec![
            MetricsRecord {
                epoch: 1,
                val_loss: std::f64::consts::LN_2,
                val_accuracy: 0.5,
            },
            MetricsRecord {
                epoch: 2,
                val_loss: 0.41,
                val_accuracy: 64.0 / 70.0,
            },
        ];
        let text = metrics_csv(&h);
        assert!(text.starts_with("epoch,val_loss,val_accuracy\n1,"));
        assert_eq!(parse_metrics_csv(&text).unwrap(), h);
        assert!(parse_metrics_csv("a,b\n").is_err());
    }

    #[test]
    fn exit_codes() {
        let div = RunError::Core(hqnn::Error::Divergence {
            epoch: 1,
            msg: "nan".into(),
        });
        assert_eq!(div.exit_code(), 2);
        assert_eq!(RunError::Config("x".into()).exit_code(), 1);
    }

    #[test]
    fn empty_summary_is_an_error() {
        assert!(summarize(&[]).is_err());
    }
}
