use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hqnn::data::DatasetId;
use hqnn::model::ModelKind;
use hqnn_bench::{render_csv, render_table, replay, run_experiment, summarize, RunError, RunSpec, SummaryRow};

#[derive(Parser)]
#[command(name = "hqnn-bench", version, about = "Train and compare hybrid quantum-classical classifiers")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Same as `run` when no subcommand is given.
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on one dataset.
    Run(RunArgs),
    /// Tabulate finished run directories.
    Summarize {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Replay the run recorded in this manifest; other flags except --out are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_dataset, default_value = "synthetic")]
    dataset: DatasetId,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_parser = parse_model, default_value = "combined_qnn_cnn")]
    model: ModelKind,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated feature columns (CSV datasets only).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Target column (CSV datasets only).
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Replace the preset circuit of a quantum model.
    #[arg(long)]
    circuit_file: Option<PathBuf>,
    /// Output directory; defaults to runs/<dataset>_<model>_s<seed>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print metrics after every epoch.
    #[arg(long, short)]
    verbose: bool,
}

fn parse_dataset(s: &str) -> Result<DatasetId, String> {
    s.parse().map_err(|e: hqnn::Error| e.to_string())
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: hqnn::Error| e.to_string())
}

fn spec_from_args(a: &RunArgs) -> RunSpec {
    let out = a.out.clone().unwrap_or_else(|| {
        PathBuf::from("runs").join(format!("{}_{}_s{}", a.dataset, a.model, a.seed))
    });
    let mut spec = RunSpec::new(a.dataset, a.model, out);
    spec.csv = a.csv.clone();
    if let Some(f) = &a.features {
        spec.features = f.clone();
    }
    if let Some(t) = &a.target {
        spec.target = t.clone();
    }
    spec.epochs = a.epochs;
    spec.batch_size = a.batch_size;
    spec.lr = a.lr;
    spec.seed = a.seed;
    spec.train_fraction = a.train_fraction;
    spec.circuit_file = a.circuit_file.clone();
    spec
}

fn run(a: RunArgs) -> Result<(), RunError> {
    let report = match &a.manifest {
        Some(m) => replay(m, a.out.clone())?,
        None => {
            let verbose = a.verbose;
            run_experiment(&spec_from_args(&a), |r| {
                if verbose {
                    eprintln!("epoch {:>4}  val_loss {:.4}  val_acc {:.3}", r.epoch, r.val_loss, r.val_accuracy);
                }
            })?
        }
    };
    println!(
        "{} params {}/{}: min loss {:.3}, max accuracy {:.1}%",
        report.out.display(),
        report.param_counts.0,
        report.param_counts.1,
        report.best.0,
        100.0 * report.best.1
    );
    Ok(())
}

fn summarize_cmd(dirs: &[PathBuf], csv_out: Option<PathBuf>) -> Result<(), RunError> {
    let rows = summarize(dirs)?;
    print!("{}", render_table(&rows));
    let csv = render_csv(&rows);
    match csv_out {
        Some(path) => fs::write(&path, csv).map_err(|source| RunError::Io {
            context: format!("writing {}", path.display()),
            source,
        })?,
        None => print!("\n{csv}"),
    }
    let failed = rows.iter().filter(|r| matches!(r, SummaryRow::Failed { .. })).count();
    if failed > 0 {
        eprintln!("{failed} run(s) could not be read");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors; exit 2 is reserved for divergence
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        None => run(cli.run),
        Some(Command::Run(a)) => run(a),
        Some(Command::Summarize { dirs, csv_out }) => summarize_cmd(&dirs, csv_out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
