//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Every demo is a plain function returning a JSON string, wrapped by a
//! `#[wasm_bindgen]` export that turns errors into JS exceptions.

use rand::Rng;
use serde::Serialize;
use sharp_ssl::base_em::median;
use sharp_ssl::projections::domain;
use sharp_ssl::{
    build_figure2_spec, build_two_class_spec, fit_predict, misclustering_rate, recovery,
    run_em_multistart, sample, select_variables, sign_loss, BaseKind, CovarianceKind, EmConfig,
    EmInit, EmVariant, FinalMethod, LabeledDataset, SeededRng, SharpConfig, UNLABELED,
};
use wasm_bindgen::prelude::*;

type DemoResult = Result<String, String>;

fn to_json<T: Serialize>(value: &T) -> DemoResult {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[derive(Debug, Serialize)]
pub struct SelectionDemo {
    pub importance: Vec<f64>,
    pub selected: Vec<usize>,
    pub support: Vec<usize>,
    pub contains: bool,
    pub failures: usize,
}

/// Importance vector on a two-class problem with signal on the first `s`
/// of `p` coordinates. `base` is `"lda"` or `"em"`.
#[allow(clippy::too_many_arguments)]
pub fn selection_json(
    p: usize,
    s: usize,
    snr: f64,
    n: usize,
    gamma: f64,
    groups: usize,
    per_group: usize,
    base: &str,
    seed: u64,
) -> DemoResult {
    let spec = build_two_class_spec(p, s, snr)
        .map_err(err)?
        .with_gamma(gamma);
    let master = SeededRng::new(seed);
    let (ds, _) = sample(&spec, n, &mut master.stream(domain::SIMULATION, 0, 0)).map_err(err)?;
    let base = match base {
        "lda" => BaseKind::Lda {
            zero_if_singular: true,
        },
        "em" => BaseKind::Em(EmConfig::default()),
        other => return Err(format!("unknown base learner {other:?}")),
    };
    let config = SharpConfig {
        groups,
        per_group,
        ..SharpConfig::new(s.min(n.saturating_sub(2)).max(1), s, base, seed)
    };
    let fit = select_variables(&ds, &config).map_err(err)?;
    let support = spec.mean_support();
    to_json(&SelectionDemo {
        contains: recovery(&fit.selected, &support).contains,
        failures: fit.projection_failures(),
        importance: fit.importance.weights,
        selected: fit.selected,
        support,
    })
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub gamma: f64,
    /// Median sign loss of the semi-supervised EM estimate.
    pub em: f64,
    /// Median loss of the labeled-only estimate (zero without both classes).
    pub labeled_only: f64,
}

/// Median loss of the mean estimate in a `d`-dimensional symmetric two-class
/// mixture as the label fraction varies. Label sets are nested across γ.
pub fn em_gamma_curve_json(
    d: usize,
    snr: f64,
    n: usize,
    reps: usize,
    gammas: &[f64],
    seed: u64,
) -> DemoResult {
    let spec = build_two_class_spec(d, d, snr).map_err(err)?;
    let mu_star = spec.means[1].clone();
    let config = EmConfig {
        variant: EmVariant::SymmetricTwoComponent,
        init: EmInit::Hierarchical,
        ..EmConfig::default()
    };
    let mut em = vec![Vec::with_capacity(reps); gammas.len()];
    let mut lab = vec![Vec::with_capacity(reps); gammas.len()];
    for rep in 0..reps {
        let master = SeededRng::new(seed).child(domain::SIMULATION, rep as u64, 0);
        let (ds, truth) =
            sample(&spec, n, &mut master.stream(domain::SIMULATION, 0, 0)).map_err(err)?;
        let mut r = master.stream(domain::SIMULATION, 1, 0);
        let u: Vec<f64> = (0..n).map(|_| r.random()).collect();
        for (g, &gamma) in gammas.iter().enumerate() {
            let labels: Vec<usize> = truth
                .iter()
                .zip(&u)
                .map(|(&t, &ui)| if ui < gamma { t } else { UNLABELED })
                .collect();
            let masked = LabeledDataset::new(ds.x().clone(), labels, 2).map_err(err)?;
            let fit = run_em_multistart(&masked, &config, &master).map_err(err)?;
            em[g].push(sign_loss(&fit.params.means[1], &mu_star).map_err(err)?);
            lab[g].push(sign_loss(&labeled_only_mean(&masked), &mu_star).map_err(err)?);
        }
    }
    let points: Vec<CurvePoint> = gammas
        .iter()
        .enumerate()
        .map(|(g, &gamma)| CurvePoint {
            gamma,
            em: median(&em[g]),
            labeled_only: median(&lab[g]),
        })
        .collect();
    to_json(&points)
}

/// Half the difference of the labeled class means, or zero if a class has
/// no labeled rows.
fn labeled_only_mean(ds: &LabeledDataset) -> Vec<f64> {
    let d = ds.p();
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    for (i, &y) in ds.labels().iter().enumerate() {
        if y == UNLABELED {
            continue;
        }
        counts[y - 1] += 1;
        for (s, &v) in sums[y - 1].iter_mut().zip(ds.row(i)) {
            *s += v;
        }
    }
    if counts.contains(&0) {
        return vec![0.0; d];
    }
    (0..d)
        .map(|j| 0.5 * (sums[1][j] / counts[1] as f64 - sums[0][j] / counts[0] as f64))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ScatterDemo {
    /// First two selected coordinates.
    pub axes: [usize; 2],
    /// `[x, y, truth, predicted, labeled]` per row.
    pub points: Vec<(f64, f64, usize, usize, bool)>,
    pub selected: Vec<usize>,
    pub support: Vec<usize>,
    pub misclustering: f64,
}

/// Three-class isotropic problem: select three coordinates, cluster, and
/// return the rows projected on the first two selected coordinates.
pub fn cluster_scatter_json(
    p: usize,
    snr: f64,
    n: usize,
    gamma: f64,
    groups: usize,
    per_group: usize,
    seed: u64,
) -> DemoResult {
    let master = SeededRng::new(seed);
    let spec = build_figure2_spec(
        p,
        snr,
        CovarianceKind::Isotropic,
        &mut master.stream(domain::SPEC, 0, 0),
    )
    .map_err(err)?
    .with_gamma(gamma);
    let (ds, truth) =
        sample(&spec, n, &mut master.stream(domain::SIMULATION, 0, 0)).map_err(err)?;
    let config = SharpConfig {
        groups,
        per_group,
        ..SharpConfig::new(3, 3, BaseKind::Em(EmConfig::default()), seed)
    };
    let fit = fit_predict(&ds, &config, &FinalMethod::Em(EmConfig::default())).map_err(err)?;
    let pred = fit.final_labels.clone().unwrap_or_default();
    let mut axes = [fit.selected[0], fit.selected[1]];
    axes.sort_unstable();
    let points = (0..ds.n())
        .map(|i| {
            let row = ds.row(i);
            (
                row[axes[0]],
                row[axes[1]],
                truth[i],
                pred[i],
                ds.labels()[i] != UNLABELED,
            )
        })
        .collect();
    to_json(&ScatterDemo {
        axes,
        points,
        misclustering: misclustering_rate(&truth, &pred).map_err(err)?,
        selected: fit.selected,
        support: spec.mean_support(),
    })
}

fn js(r: DemoResult) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = selectionDemo)]
#[allow(clippy::too_many_arguments)]
pub fn selection_demo(
    p: usize,
    s: usize,
    snr: f64,
    n: usize,
    gamma: f64,
    groups: usize,
    per_group: usize,
    base: &str,
    seed: u32,
) -> Result<String, JsError> {
    js(selection_json(
        p,
        s,
        snr,
        n,
        gamma,
        groups,
        per_group,
        base,
        seed as u64,
    ))
}

#[wasm_bindgen(js_name = emGammaCurve)]
pub fn em_gamma_curve(
    d: usize,
    snr: f64,
    n: usize,
    reps: usize,
    gammas: Vec<f64>,
    seed: u32,
) -> Result<String, JsError> {
    js(em_gamma_curve_json(d, snr, n, reps, &gammas, seed as u64))
}

#[wasm_bindgen(js_name = clusterScatter)]
pub fn cluster_scatter(
    p: usize,
    snr: f64,
    n: usize,
    gamma: f64,
    groups: usize,
    per_group: usize,
    seed: u32,
) -> Result<String, JsError> {
    js(cluster_scatter_json(
        p,
        snr,
        n,
        gamma,
        groups,
        per_group,
        seed as u64,
    ))
}
