//! Seeded replications of the synthetic benchmarks.
//!
//! Each `(setting, rep)` pair draws everything from its own substream keyed
//! by its grid position, so the table does not depend on the thread count.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sharp_ssl::eval::{mean_interval, misclustering_rate_k};
use sharp_ssl::projections::domain;
use sharp_ssl::{
    bayes_risk, build_figure2_spec, build_two_class_spec, fit_predict, recovery, sample,
    CovarianceKind, MixtureSpec, SeededRng, UNLABELED,
};

use crate::args::{FigureArg, SimulateArgs};
use crate::config::{resolve_final, ConfigFile, EnsembleSettings, SimulateSettings};
use crate::{write_output, CliError};

/// One cell of the `snr × n × γ` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub index: usize,
    /// `None` for a spec file.
    pub snr: Option<f64>,
    /// Position of `snr` in its grid; settings sharing it share a spec.
    pub snr_index: usize,
    pub n: usize,
    pub gamma: f64,
}

/// One line of the output table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    /// `rep` or `mean`.
    pub kind: &'static str,
    pub setting: usize,
    pub rep: Option<usize>,
    pub snr: Option<f64>,
    pub n: usize,
    pub gamma: f64,
    /// Over rows whose label was not revealed.
    pub misclustering: f64,
    pub bayes_risk: f64,
    /// 1 when every signal coordinate was selected (averaged on `mean` rows).
    pub recovery: f64,
    pub misclustering_lo: Option<f64>,
    pub misclustering_hi: Option<f64>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(args.ensemble.config.as_deref())?;
    let settings = SimulateSettings::resolve(args, &file.simulate)?;
    let bench = Benchmark::new(&settings)?;
    let ensemble = EnsembleSettings::resolve(&args.ensemble, &file, Some(bench.s0()))?;
    let final_method = ensemble.final_method(resolve_final(args.final_method, &file.final_));
    let grid = bench.grid(&settings);

    let mut rows = Vec::new();
    for setting in &grid {
        let clock = Instant::now();
        let reps = run_setting(&bench, setting, &settings, &ensemble, &final_method)?;
        if args.ensemble.timings {
            eprintln!(
                "setting {}: {} reps in {:.2}s",
                setting.index,
                reps.len(),
                clock.elapsed().as_secs_f64()
            );
        }
        log::info!("setting {} done", setting.index);
        let summary = aggregate(setting, &reps);
        rows.extend(reps);
        rows.extend(summary);
    }
    write_output(&to_csv(&rows)?, args.ensemble.output.as_deref())
}

/// Where the mixture spec of a rep comes from.
#[derive(Debug, Clone)]
pub enum Benchmark {
    Figure { kind: FigureArg, p: usize, s: usize },
    File(MixtureSpec),
}

impl Benchmark {
    pub fn new(settings: &SimulateSettings) -> Result<Self, CliError> {
        match (&settings.figure, &settings.spec) {
            (Some(kind), _) => {
                let b = Benchmark::Figure {
                    kind: *kind,
                    p: settings.p,
                    s: settings.s,
                };
                // Surface dimension errors before any work starts.
                b.spec(
                    settings.snr.first().copied().unwrap_or(1.0),
                    &SeededRng::new(0),
                )?;
                Ok(b)
            }
            (None, Some(path)) => Ok(Benchmark::File(load_spec(path)?)),
            (None, None) => Err(CliError::Config(
                "one of --figure or --spec is required".into(),
            )),
        }
    }

    pub fn s0(&self) -> usize {
        match self {
            Benchmark::Figure {
                kind: FigureArg::Three,
                s,
                ..
            } => *s,
            Benchmark::Figure { .. } => 3,
            Benchmark::File(spec) => spec.s0,
        }
    }

    /// Whether the mixture is random (and so drawn afresh every rep).
    fn random(&self) -> bool {
        matches!(
            self,
            Benchmark::Figure {
                kind: FigureArg::TwoAniso,
                ..
            }
        )
    }

    fn spec(&self, snr: f64, master: &SeededRng) -> Result<MixtureSpec, CliError> {
        let spec = match self {
            Benchmark::Figure { kind, p, s } => match kind {
                FigureArg::TwoIso | FigureArg::TwoAniso => {
                    let cov = if *kind == FigureArg::TwoIso {
                        CovarianceKind::Isotropic
                    } else {
                        CovarianceKind::Anisotropic
                    };
                    build_figure2_spec(*p, snr, cov, &mut master.stream(domain::SPEC, 0, 0))
                }
                FigureArg::Three => build_two_class_spec(*p, *s, snr),
            },
            Benchmark::File(spec) => Ok(spec.clone()),
        };
        spec.map_err(|e| CliError::Config(format!("benchmark (--p / --s / --snr): {e}")))
    }

    pub fn grid(&self, settings: &SimulateSettings) -> Vec<Setting> {
        let snrs: Vec<Option<f64>> = match self {
            Benchmark::Figure { .. } => settings.snr.iter().map(|&v| Some(v)).collect(),
            Benchmark::File(_) => vec![None],
        };
        let gammas = match self {
            Benchmark::File(spec) if settings.gamma.is_empty() => vec![spec.gamma],
            _ => settings.gamma.clone(),
        };
        let mut grid = Vec::new();
        for (snr_index, &snr) in snrs.iter().enumerate() {
            for &n in &settings.n {
                for &gamma in &gammas {
                    grid.push(Setting {
                        index: grid.len(),
                        snr,
                        snr_index,
                        n,
                        gamma,
                    });
                }
            }
        }
        grid
    }
}

fn load_spec(path: &Path) -> Result<MixtureSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("--spec {}: {e}", path.display())))?;
    let parsed: Result<MixtureSpec, String> = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    let spec = parsed.map_err(|e| CliError::Config(format!("--spec {}: {e}", path.display())))?;
    spec.validate()
        .map_err(|e| CliError::Config(format!("--spec {}: {e}", path.display())))?;
    Ok(spec)
}

/// Runs every rep of one setting, in parallel.
pub fn run_setting(
    bench: &Benchmark,
    setting: &Setting,
    settings: &SimulateSettings,
    ensemble: &EnsembleSettings,
    final_method: &sharp_ssl::FinalMethod,
) -> Result<Vec<Row>, CliError> {
    let root = SeededRng::new(ensemble.seed);
    let snr = setting.snr.unwrap_or(0.0);
    let shared = if bench.random() {
        None
    } else {
        let spec = bench.spec(snr, &root)?;
        let bayes = bayes_risk(
            &spec,
            settings.bayes_draws,
            &mut root.stream(domain::BAYES, setting.snr_index as u64, 0),
        )?;
        Some((spec, bayes.estimate))
    };
    let probe = ensemble.to_config();
    probe
        .validate(
            setting.n,
            bench_p(bench, shared.as_ref().map(|s| &s.0)),
            bench_k(bench),
        )
        .map_err(|e| CliError::Config(format!("setting {}: {e} (--d / --l)", setting.index)))?;

    (0..settings.reps)
        .into_par_iter()
        .map(|rep| {
            let master = root.child(domain::SIMULATION, setting.index as u64, rep as u64);
            let (spec, bayes) = match &shared {
                Some((spec, bayes)) => (spec.clone(), *bayes),
                None => {
                    let spec = bench.spec(snr, &master)?;
                    let b = bayes_risk(
                        &spec,
                        settings.bayes_draws,
                        &mut master.stream(domain::BAYES, 0, 0),
                    )?;
                    (spec, b.estimate)
                }
            };
            let spec = spec.with_gamma(setting.gamma);
            let (ds, truth) = sample(
                &spec,
                setting.n,
                &mut master.stream(domain::SIMULATION, 0, 0),
            )?;
            let config = ensemble
                .with_seed(master.child(domain::SIMULATION, 1, 0).seed)
                .to_config();
            let fit = fit_predict(&ds, &config, final_method).map_err(|e| {
                let e = CliError::from(e);
                let ctx = format!("setting {} rep {rep}: ", setting.index);
                match e {
                    CliError::Config(m) => CliError::Config(ctx + &m),
                    CliError::Data(m) => CliError::Data(ctx + &m),
                    CliError::Numerical(m) => CliError::Numerical(ctx + &m),
                }
            })?;
            let pred = fit
                .final_labels
                .as_ref()
                .expect("fit_predict assigns labels");
            let mut rows: Vec<usize> = (0..ds.n())
                .filter(|&i| ds.labels()[i] == UNLABELED)
                .collect();
            if rows.is_empty() {
                rows = (0..ds.n()).collect();
            }
            let t: Vec<usize> = rows.iter().map(|&i| truth[i]).collect();
            let p: Vec<usize> = rows.iter().map(|&i| pred[i]).collect();
            let contains = recovery(&fit.selected, &spec.mean_support()).contains;
            Ok(Row {
                kind: "rep",
                setting: setting.index,
                rep: Some(rep),
                snr: setting.snr,
                n: setting.n,
                gamma: setting.gamma,
                misclustering: misclustering_rate_k(&t, &p, spec.k)?,
                bayes_risk: bayes,
                recovery: if contains { 1.0 } else { 0.0 },
                misclustering_lo: None,
                misclustering_hi: None,
            })
        })
        .collect()
}

fn bench_p(bench: &Benchmark, spec: Option<&MixtureSpec>) -> usize {
    match (bench, spec) {
        (_, Some(s)) => s.p,
        (Benchmark::Figure { p, .. }, None) => *p,
        (Benchmark::File(s), None) => s.p,
    }
}

fn bench_k(bench: &Benchmark) -> usize {
    match bench {
        Benchmark::Figure {
            kind: FigureArg::Three,
            ..
        } => 2,
        Benchmark::Figure { .. } => 3,
        Benchmark::File(s) => s.k,
    }
}

/// The `mean` row of a setting; nothing for a single rep.
pub fn aggregate(setting: &Setting, reps: &[Row]) -> Option<Row> {
    if reps.len() < 2 {
        return None;
    }
    let mean = |f: fn(&Row) -> f64| reps.iter().map(f).sum::<f64>() / reps.len() as f64;
    let errors: Vec<f64> = reps.iter().map(|r| r.misclustering).collect();
    let interval = mean_interval(&errors)?;
    let (lo, hi) = interval.interval?;
    Some(Row {
        kind: "mean",
        setting: setting.index,
        rep: None,
        snr: setting.snr,
        n: setting.n,
        gamma: setting.gamma,
        misclustering: interval.mean,
        bayes_risk: mean(|r| r.bayes_risk),
        recovery: mean(|r| r.recovery),
        misclustering_lo: Some(lo),
        misclustering_hi: Some(hi),
    })
}

pub fn to_csv(rows: &[Row]) -> Result<Vec<u8>, CliError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row)
            .map_err(|e| CliError::Data(format!("cannot write table: {e}")))?;
    }
    wtr.into_inner()
        .map_err(|e| CliError::Data(format!("cannot write table: {e}")))
}
