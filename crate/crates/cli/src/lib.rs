//! Front end for the `sharpssl` binary: argument parsing, config merging,
//! JSON reports and the simulation driver.

pub mod args;
pub mod config;
pub mod report;
pub mod simulate;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use sharp_ssl::dataset::{read_csv_path, CsvData, CsvOptions};
use sharp_ssl::eval::misclustering_rate_k;
use sharp_ssl::projections::domain;
use sharp_ssl::selection::assign_labels;
use sharp_ssl::{recovery, select_variables, ErrorKind, SeededRng, UNLABELED};

use crate::args::{Cli, ClusterArgs, Command, DataArgs, EnsembleArgs, SelectArgs};
use crate::config::{resolve_final, ConfigFile, DataSettings, EnsembleSettings};
use crate::report::{DataSummary, Metrics, ReportConfig, RunReport, Timings, SCHEMA_VERSION};

/// Failure of a command, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sharp_ssl::Error> for CliError {
    fn from(e: sharp_ssl::Error) -> Self {
        match e.kind() {
            ErrorKind::Config => CliError::Config(e.to_string()),
            ErrorKind::Data => CliError::Data(e.to_string()),
            ErrorKind::Numerical => CliError::Numerical(e.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists (repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match cli.command {
        Command::Select(args) => cmd_select(&args),
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Simulate(args) => simulate::cmd_simulate(&args),
    }
}

pub fn cmd_select(args: &SelectArgs) -> Result<(), CliError> {
    let report = build_report(&args.data, &args.ensemble, None)?;
    write_json(&report, args.ensemble.output.as_deref())
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(args.ensemble.config.as_deref())?;
    let method = resolve_final(args.final_method, &file.final_);
    let report = build_report(&args.data, &args.ensemble, Some(method))?;
    write_json(&report, args.ensemble.output.as_deref())
}

/// Loads the data, runs the pipeline and assembles the report. With a final
/// method every row gets a label; otherwise only selection runs.
pub fn build_report(
    data_args: &DataArgs,
    ens_args: &EnsembleArgs,
    final_method: Option<args::FinalArg>,
) -> Result<RunReport, CliError> {
    let file = ConfigFile::load(ens_args.config.as_deref())?;
    let data = DataSettings::resolve(data_args, &file.data);
    let ensemble = EnsembleSettings::resolve(ens_args, &file, None)?;

    let clock = Instant::now();
    let csv = load(&data)?;
    let load_time = clock.elapsed().as_secs_f64();
    let ds = &csv.dataset;
    log::info!(
        "loaded {} rows x {} columns, {} labeled, K = {}",
        ds.n(),
        ds.p(),
        ds.n_labeled(),
        ds.k()
    );
    if let Some(support) = &data.support {
        if let Some(&bad) = support.iter().find(|&&j| j >= ds.p()) {
            return Err(CliError::Config(format!(
                "--support index {bad} is out of range for {} feature columns",
                ds.p()
            )));
        }
    }

    let config = ensemble.to_config();
    config
        .validate(ds.n(), ds.p(), ds.k())
        .map_err(|e| match e {
            sharp_ssl::Error::InvalidConfig(m) => CliError::Config(format!("{m} (--d / --l)")),
            other => other.into(),
        })?;
    let clock = Instant::now();
    let mut result = select_variables(ds, &config)?;
    let select_time = clock.elapsed().as_secs_f64();
    let mut assign_time = None;
    if let Some(m) = final_method {
        // Same stream as `fit_predict`, so both entry points agree.
        let clock = Instant::now();
        let reduced = ds.select_columns(&result.selected)?;
        let rng = SeededRng::new(config.seed).child(domain::FINAL, 0, 0);
        result.final_labels = Some(assign_labels(&reduced, &ensemble.final_method(m), &rng)?);
        assign_time = Some(clock.elapsed().as_secs_f64());
    }
    log::info!(
        "selected {:?} ({} failed projections)",
        result.selected,
        result.projection_failures()
    );

    let mut metrics = Metrics::default();
    if let (Some(truth), Some(pred)) = (&csv.truth, &result.final_labels) {
        metrics.misclustering = Some(misclustering_rate_k(truth, pred, ds.k())?);
        let rows: Vec<usize> = (0..ds.n())
            .filter(|&i| ds.labels()[i] == UNLABELED)
            .collect();
        if !rows.is_empty() {
            let t: Vec<usize> = rows.iter().map(|&i| truth[i]).collect();
            let p: Vec<usize> = rows.iter().map(|&i| pred[i]).collect();
            metrics.misclustering_unlabeled = Some(misclustering_rate_k(&t, &p, ds.k())?);
        }
    }
    if let Some(support) = &data.support {
        metrics.recovery = Some(recovery(&result.selected, support));
    }

    let timings = ens_args.timings.then(|| Timings {
        load: load_time,
        select: select_time,
        assign: assign_time,
    });
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        command: if final_method.is_some() {
            "cluster"
        } else {
            "select"
        },
        seed: ensemble.seed,
        data: DataSummary {
            n: ds.n(),
            p: ds.p(),
            k: ds.k(),
            n_labeled: ds.n_labeled(),
            feature_names: csv.feature_names.clone(),
        },
        selected_names: result
            .selected
            .iter()
            .map(|&j| csv.feature_names[j].clone())
            .collect(),
        selected: result.selected.clone(),
        importance: result.importance.weights.clone(),
        projection_failures: result.projection_failures(),
        final_labels: result.final_labels,
        metrics,
        timings,
        config: ReportConfig {
            data,
            ensemble,
            final_method,
        },
    })
}

fn load(data: &DataSettings) -> Result<CsvData, CliError> {
    let options = CsvOptions {
        label_column: data.label_column.clone(),
        unlabeled_token: data.unlabeled_token.clone(),
        truth_column: data.truth.clone(),
        k: data.k,
    };
    read_csv_path(&data.input, &options).map_err(|e| match e {
        sharp_ssl::Error::Io(m) => CliError::Data(format!("cannot read input: {m}")),
        other => other.into(),
    })
}

pub fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialise report: {e}")))?;
    text.push('\n');
    write_output(text.as_bytes(), path)
}

pub fn write_output(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    let result = match path {
        Some(p) => std::fs::write(p, bytes),
        None => std::io::stdout().lock().write_all(bytes),
    };
    result.map_err(|e| CliError::Data(format!("cannot write output: {e}")))
}
