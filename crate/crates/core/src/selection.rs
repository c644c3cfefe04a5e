//! Projection-ensemble variable selection and final label assignment.
//!
//! `A` groups of `B` random axis-aligned projections are scored by the trace
//! of the base learner's `Q̂`. Each group's winner is back-projected, the
//! diagonals are averaged into an importance vector `ŵ`, and the `ℓ` largest
//! entries of `ŵ` are selected.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::base_em::{run_em_multistart, EmConfig};
use crate::base_lda::{lda_base, LdaClassifier, WhitenedBetween};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::projections::{
    accumulate_back_projection, domain, project, Projection, ProjectionSampler, SeededRng,
    UniformSampler,
};

pub const DEFAULT_GROUPS: usize = 150;
pub const DEFAULT_PER_GROUP: usize = 75;

/// Base learner run on every projected dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    /// Labeled-data estimate. With `zero_if_singular`, a singular within-class
    /// covariance (or no labeled rows) yields `Q̂ = 0` instead of a failed cell.
    Lda {
        zero_if_singular: bool,
    },
    Em(EmConfig),
}

/// How ties among the `ℓ` largest importance entries are broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    SmallestIndex,
    /// Seeded random order among equal entries.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpConfig {
    /// `A`.
    pub groups: usize,
    /// `B`.
    pub per_group: usize,
    /// Projection dimension `d`.
    pub dim: usize,
    /// Number of selected coordinates `ℓ`.
    pub select: usize,
    pub base: BaseKind,
    pub seed: u64,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl SharpConfig {
    /// Defaults `A = 150`, `B = 75`.
    pub fn new(dim: usize, select: usize, base: BaseKind, seed: u64) -> Self {
        SharpConfig {
            groups: DEFAULT_GROUPS,
            per_group: DEFAULT_PER_GROUP,
            dim,
            select,
            base,
            seed,
            tie_break: TieBreak::SmallestIndex,
        }
    }

    pub fn validate(&self, n: usize, p: usize, k: usize) -> Result<()> {
        if self.groups == 0 || self.per_group == 0 {
            return Err(Error::InvalidConfig(
                "need at least one group (A >= 1) and one projection per group (B >= 1)".into(),
            ));
        }
        let max_d = p.min(n.saturating_sub(k));
        if self.dim == 0 || self.dim > max_d {
            return Err(Error::InvalidConfig(format!(
                "projection dimension d = {} must satisfy 1 <= d <= min(p, n - K) = {max_d}",
                self.dim
            )));
        }
        if self.select == 0 || self.select > p {
            return Err(Error::InvalidConfig(format!(
                "number of selected coordinates l = {} must lie in 1..={p}",
                self.select
            )));
        }
        if let BaseKind::Em(em) = &self.base {
            em.validate(k)?;
        }
        Ok(())
    }
}

/// A map from a projected dataset to an estimate of its whitened
/// between-class covariance.
pub trait BaseLearner: Sync {
    fn estimate(
        &self,
        projected: &LabeledDataset,
        projection: &Projection,
        rng: &SeededRng,
    ) -> Result<WhitenedBetween>;
}

impl BaseLearner for BaseKind {
    fn estimate(
        &self,
        projected: &LabeledDataset,
        _projection: &Projection,
        rng: &SeededRng,
    ) -> Result<WhitenedBetween> {
        match self {
            BaseKind::Lda { zero_if_singular } => match lda_base(projected) {
                Err(Error::SingularWithinCovariance { .. } | Error::NoLabeledData)
                    if *zero_if_singular =>
                {
                    Ok(WhitenedBetween::zeros(projected.p()))
                }
                other => other,
            },
            BaseKind::Em(cfg) => Ok(run_em_multistart(projected, cfg, rng)?.q),
        }
    }
}

/// Ignores the data and returns the population quantity
/// `(PΣ_wPᵀ)⁻¹ PΣ_bPᵀ` for the projection.
#[derive(Debug, Clone)]
pub struct PopulationOracle {
    pub sigma_w: Matrix,
    pub sigma_b: Matrix,
}

impl PopulationOracle {
    pub fn q(&self, projection: &Projection) -> Result<WhitenedBetween> {
        let idx = projection.indices();
        let sub = |m: &Matrix| {
            let d = idx.len();
            let mut out = Matrix::zeros(d, d);
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    out[(a, b)] = m[(i, j)];
                }
            }
            out
        };
        WhitenedBetween::from_covariances(&sub(&self.sigma_w), &sub(&self.sigma_b))
    }
}

impl BaseLearner for PopulationOracle {
    fn estimate(
        &self,
        _projected: &LabeledDataset,
        projection: &Projection,
        _rng: &SeededRng,
    ) -> Result<WhitenedBetween> {
        self.q(projection)
    }
}

/// Winning projection of one group.
#[derive(Debug, Clone)]
pub struct GroupWinner {
    pub group: usize,
    /// Index of the winning cell within the group.
    pub cell: usize,
    pub projection: Projection,
    pub q: WhitenedBetween,
    /// Cells of this group whose base learner failed.
    pub failures: usize,
}

/// Runs the base learner on the `B` projections of group `a` and keeps the
/// one with the largest trace (smallest cell index on ties). Failed cells
/// are skipped; the group fails only if every cell does.
pub fn score_group<L: BaseLearner + ?Sized, S: ProjectionSampler + ?Sized>(
    ds: &LabeledDataset,
    config: &SharpConfig,
    learner: &L,
    sampler: &S,
    a: usize,
) -> Result<GroupWinner> {
    let master = SeededRng::new(config.seed);
    let mut best: Option<(Projection, WhitenedBetween, usize)> = None;
    let mut failures = 0;
    let mut last_err = None;
    for b in 0..config.per_group {
        let pr = sampler.sample(a, b)?;
        let projected = project(ds, &pr)?;
        let rng = master.child(domain::BASE_LEARNER, a as u64, b as u64);
        match learner.estimate(&projected, &pr, &rng) {
            Ok(q) => {
                if best.as_ref().is_none_or(|(_, w, _)| q.trace() > w.trace()) {
                    best = Some((pr, q, b));
                }
            }
            Err(e) => {
                log::debug!("group {a} cell {b} failed: {e}");
                failures += 1;
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((projection, q, cell)) => Ok(GroupWinner {
            group: a,
            cell,
            projection,
            q,
            failures,
        }),
        None => Err(Error::GroupFailed {
            group: a,
            last: Box::new(last_err.expect("a group has at least one cell")),
        }),
    }
}

/// Averaged back-projected diagonals of the group winners.
#[derive(Debug, Clone)]
pub struct ImportanceVector {
    pub weights: Vec<f64>,
    pub winners: Vec<GroupWinner>,
}

impl ImportanceVector {
    pub fn failures(&self) -> usize {
        self.winners.iter().map(|w| w.failures).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// `Ŝ`, sorted, 0-based.
    pub selected: Vec<usize>,
    pub importance: ImportanceVector,
    /// Labels in `1..=K` after the final low-dimensional fit.
    pub final_labels: Option<Vec<usize>>,
}

impl SelectionResult {
    pub fn projection_failures(&self) -> usize {
        self.importance.failures()
    }
}

/// Indices of the `l` largest weights, returned in increasing order.
pub fn top_l(weights: &[f64], l: usize, tie_break: TieBreak, rng: &SeededRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    if tie_break == TieBreak::Random {
        order.shuffle(&mut rng.stream(domain::TIE_BREAK, 0, 0));
    }
    // Stable, so equal weights keep the (index or shuffled) order.
    order.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]));
    let mut chosen: Vec<usize> = order.into_iter().take(l).collect();
    chosen.sort_unstable();
    chosen
}

fn score_all<L: BaseLearner + ?Sized, S: ProjectionSampler + ?Sized>(
    ds: &LabeledDataset,
    config: &SharpConfig,
    learner: &L,
    sampler: &S,
) -> Result<Vec<GroupWinner>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..config.groups)
            .into_par_iter()
            .map(|a| score_group(ds, config, learner, sampler, a))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..config.groups)
            .map(|a| score_group(ds, config, learner, sampler, a))
            .collect()
    }
}

/// Variable selection with the configured base learner and uniform
/// projections.
pub fn select_variables(ds: &LabeledDataset, config: &SharpConfig) -> Result<SelectionResult> {
    let sampler = UniformSampler {
        rng: SeededRng::new(config.seed),
        p: ds.p(),
        d: config.dim,
    };
    select_variables_with(ds, config, &config.base, &sampler)
}

/// Variable selection with an explicit base learner and projection source.
pub fn select_variables_with<L: BaseLearner + ?Sized, S: ProjectionSampler + ?Sized>(
    ds: &LabeledDataset,
    config: &SharpConfig,
    learner: &L,
    sampler: &S,
) -> Result<SelectionResult> {
    config.validate(ds.n(), ds.p(), ds.k())?;
    let winners = score_all(ds, config, learner, sampler)?;
    let mut weights = vec![0.0; ds.p()];
    for w in &winners {
        accumulate_back_projection(w.q.matrix(), &w.projection, &mut weights)?;
    }
    for v in &mut weights {
        *v /= config.groups as f64;
    }
    let selected = top_l(
        &weights,
        config.select,
        config.tie_break,
        &SeededRng::new(config.seed),
    );
    Ok(SelectionResult {
        selected,
        importance: ImportanceVector { weights, winners },
        final_labels: None,
    })
}

/// Low-dimensional method run on the selected coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalMethod {
    Em(EmConfig),
    Lda,
}

/// Labels for every row from a low-dimensional fit on `ds` (already
/// restricted to the chosen coordinates). Observed labels are kept.
pub fn assign_labels(
    ds: &LabeledDataset,
    method: &FinalMethod,
    rng: &SeededRng,
) -> Result<Vec<usize>> {
    match method {
        FinalMethod::Em(cfg) => {
            let fit = run_em_multistart(ds, cfg, rng)?;
            Ok(fit.labels.argmax_labels())
        }
        FinalMethod::Lda => Ok(LdaClassifier::fit(ds)?.predict(ds)),
    }
}

/// Selection followed by label assignment on `Ŝ`.
pub fn fit_predict(
    ds: &LabeledDataset,
    config: &SharpConfig,
    method: &FinalMethod,
) -> Result<SelectionResult> {
    let mut result = select_variables(ds, config)?;
    let reduced = ds.select_columns(&result.selected)?;
    let rng = SeededRng::new(config.seed).child(domain::FINAL, 0, 0);
    result.final_labels = Some(assign_labels(&reduced, method, &rng)?);
    Ok(result)
}
