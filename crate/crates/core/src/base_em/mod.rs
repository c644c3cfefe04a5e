//! Semi-supervised Gaussian EM base learner.
//!
//! Labeled rows enter the E-step as exact indicators; unlabeled rows get
//! equal-weight Gaussian responsibilities under a shared covariance. Several
//! chains may be started, and the one whose estimate agrees best (median
//! operator-norm distance) with the others is returned.
//!
//! The `SymmetricTwoComponent` variant restricts the parameters to
//! `(-μ, μ, I)`, for which each iteration has the closed form
//! `μ ← n⁻¹ {Σ_labeled (-1)^y z + Σ_unlabeled z tanh⟨z, μ⟩}`.

pub mod ward;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::base_lda::{add_outer, WhitenedBetween};
use crate::dataset::{LabeledDataset, UNLABELED};
use crate::error::{Error, Result};
use crate::eval::best_assignment;
use crate::linalg::{op_norm, sym_eigen, Cholesky, Matrix};
use crate::projections::{domain, SeededRng};

/// Default relative eigenvalue floor for the within-class covariance.
pub const DEFAULT_COVARIANCE_FLOOR: f64 = 1e-8;

/// Cluster means and shared within-class covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmParams {
    pub means: Vec<Vec<f64>>,
    pub cov: Matrix,
}

impl EmParams {
    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn d(&self) -> usize {
        self.cov.rows()
    }

    /// `(-μ, μ, I)`.
    pub fn symmetric(mu: Vec<f64>) -> Self {
        let d = mu.len();
        EmParams {
            means: vec![mu.iter().map(|v| -v).collect(), mu],
            cov: Matrix::identity(d),
        }
    }

    fn validate(&self, d: usize, k: usize) -> Result<()> {
        if self.means.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: self.means.len(),
            });
        }
        if let Some(m) = self.means.iter().find(|m| m.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.len(),
            });
        }
        if self.cov.rows() != d || self.cov.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.cov.rows(),
            });
        }
        Ok(())
    }
}

/// `n × K` responsibility matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabels {
    l: Matrix,
}

impl SoftLabels {
    pub fn matrix(&self) -> &Matrix {
        &self.l
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.l.row(i)
    }

    pub fn n(&self) -> usize {
        self.l.rows()
    }

    pub fn k(&self) -> usize {
        self.l.cols()
    }

    /// Wraps a responsibility matrix after checking rows are distributions.
    pub fn new(l: Matrix) -> Result<Self> {
        for i in 0..l.rows() {
            let row = l.row(i);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 || row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidConfig(format!(
                    "responsibility row {i} is not a probability vector"
                )));
            }
        }
        Ok(SoftLabels { l })
    }

    /// Hard assignments `1..=K` (smallest index on ties).
    pub fn argmax_labels(&self) -> Vec<usize> {
        (0..self.n())
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best + 1
            })
            .collect()
    }

    /// Column sums `Σ_i L_{i,k}`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.k()];
        for i in 0..self.n() {
            for (wk, &v) in w.iter_mut().zip(self.row(i)) {
                *wk += v;
            }
        }
        w
    }
}

/// Parameter constraint applied in the M-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmVariant {
    /// Unrestricted means and shared covariance.
    General,
    /// `K = 2`, means `(-μ, μ)`, covariance fixed at the identity.
    SymmetricTwoComponent,
}

/// How each EM chain is started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmInit {
    /// `μ` uniform on the sphere of the given radius (symmetric variant), or
    /// `K` means drawn independently on it (general variant); identity
    /// covariance.
    UniformSphere { radius: f64 },
    /// Ward clustering cut at `K` clusters.
    Hierarchical,
    #[serde(skip)]
    UserSupplied(EmParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Number of chains `M`.
    pub starts: usize,
    /// Iterations `T` per chain.
    pub iterations: usize,
    pub variant: EmVariant,
    pub init: EmInit,
    /// Stop once every mean moves less than this between iterations.
    pub early_stop_tol: Option<f64>,
    /// Relative eigenvalue floor for the covariance (general variant).
    pub covariance_floor: Option<f64>,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            starts: 1,
            iterations: 100,
            variant: EmVariant::General,
            init: EmInit::Hierarchical,
            early_stop_tol: None,
            covariance_floor: Some(DEFAULT_COVARIANCE_FLOOR),
        }
    }
}

impl EmConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidConfig(
                "EM needs at least one start (M >= 1)".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig(
                "EM needs at least one iteration (T >= 1)".into(),
            ));
        }
        if self.variant == EmVariant::SymmetricTwoComponent && k != 2 {
            return Err(Error::InvalidConfig(format!(
                "the symmetric two-component variant needs K = 2, got {k}"
            )));
        }
        if let EmInit::UniformSphere { radius } = self.init {
            if !(radius > 0.0) {
                return Err(Error::InvalidConfig(
                    "sphere radius must be positive".into(),
                ));
            }
        }
        if let Some(tol) = self.early_stop_tol {
            if !(tol >= 0.0) {
                return Err(Error::InvalidConfig(
                    "early-stop tolerance must be >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Output of one EM chain.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: EmParams,
    pub labels: SoftLabels,
    pub q: WhitenedBetween,
    pub iterations_run: usize,
}

/// Whitened means `L⁻¹ μ_k` under the covariance factor.
fn whiten_means(params: &EmParams, chol: &Cholesky) -> Vec<f64> {
    let d = params.d();
    let mut out = Vec::with_capacity(params.k() * d);
    for m in &params.means {
        let start = out.len();
        out.extend_from_slice(m);
        chol.forward_solve(&mut out[start..start + d]);
    }
    out
}

fn e_step_into(ds: &LabeledDataset, params: &EmParams, chol: &Cholesky, l: &mut [f64]) {
    let d = ds.p();
    let k = params.k();
    // −½‖L⁻¹(z − m_c)‖² = a_cᵀz + b_c − ½‖L⁻¹z‖²; the last term is shared by
    // every component and cancels in the normalisation.
    let wm = whiten_means(params, chol);
    let mut a = wm.clone();
    let mut b = vec![0.0; k];
    for c in 0..k {
        let w = &wm[c * d..(c + 1) * d];
        b[c] = -0.5 * w.iter().map(|v| v * v).sum::<f64>();
        chol.backward_solve(&mut a[c * d..(c + 1) * d]);
    }
    let mut scores = vec![0.0; k];
    for i in 0..ds.n() {
        let row = &mut l[i * k..(i + 1) * k];
        let label = ds.labels()[i];
        if label != UNLABELED {
            row.fill(0.0);
            row[label - 1] = 1.0;
            continue;
        }
        let z = ds.row(i);
        let mut top = f64::NEG_INFINITY;
        let mut arg = 0;
        for (c, s) in scores.iter_mut().enumerate() {
            let ac = &a[c * d..(c + 1) * d];
            *s = b[c] + ac.iter().zip(z).map(|(x, y)| x * y).sum::<f64>();
            if *s > top {
                top = *s;
                arg = c;
            }
        }
        let mut total = 0.0;
        for (c, (r, s)) in row.iter_mut().zip(&scores).enumerate() {
            *r = if c == arg { 1.0 } else { (s - top).exp() };
            total += *r;
        }
        for r in row.iter_mut() {
            *r /= total;
        }
    }
}

/// E-step: responsibilities proportional to `exp(-½ Mahalanobis²)` for
/// unlabeled rows (computed in log space), indicators for labeled rows.
pub fn e_step(ds: &LabeledDataset, params: &EmParams) -> Result<SoftLabels> {
    params.validate(ds.p(), ds.k())?;
    let chol = Cholesky::new(&params.cov)?;
    let mut l = vec![0.0; ds.n() * ds.k()];
    e_step_into(ds, params, &chol, &mut l);
    Ok(SoftLabels {
        l: Matrix::new(ds.n(), ds.k(), l)?,
    })
}

/// Clips the eigenvalues of `cov` from below at `floor · max(trace/d, ·)`.
/// A matrix with zero trace is replaced by `floor · I`.
fn apply_covariance_floor(cov: Matrix, floor: f64) -> Result<Matrix> {
    let d = cov.rows();
    let mean_eig = cov.trace() / d as f64;
    if !(mean_eig > 0.0) {
        log::warn!("within-class covariance vanished; replacing it with {floor:e}·I");
        return Ok(Matrix::identity(d).scale(floor));
    }
    let threshold = floor * mean_eig;
    // cov − threshold·I positive definite ⇒ no eigenvalue needs clipping.
    let mut shifted = cov.clone();
    for i in 0..d {
        shifted[(i, i)] -= threshold;
    }
    if Cholesky::new(&shifted).is_ok() {
        return Ok(cov);
    }
    let eig = sym_eigen(&cov)?;
    if eig.eigenvalues[d - 1] >= threshold {
        return Ok(cov);
    }
    log::warn!(
        "clipping within-class covariance eigenvalue {:e} to {threshold:e}",
        eig.eigenvalues[d - 1]
    );
    let clipped = crate::linalg::SymEigen {
        eigenvalues: eig.eigenvalues.iter().map(|&v| v.max(threshold)).collect(),
        eigenvectors: eig.eigenvectors,
    };
    Ok(clipped.reconstruct())
}

/// Grand mean and centred scatter `Σ_i (z_i − z̄)(z_i − z̄)ᵀ` (upper
/// triangle), fixed over a chain.
struct Scatter {
    mean: Vec<f64>,
    upper: Vec<f64>,
}

impl Scatter {
    fn new(ds: &LabeledDataset) -> Self {
        let (n, d) = (ds.n(), ds.p());
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, &z) in mean.iter_mut().zip(ds.row(i)) {
                *m += z;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut upper = vec![0.0; d * (d + 1) / 2];
        let mut diff = vec![0.0; d];
        for i in 0..n {
            for ((df, &z), &m) in diff.iter_mut().zip(ds.row(i)).zip(&mean) {
                *df = z - m;
            }
            add_upper(&mut upper, &diff, 1.0);
        }
        Scatter { mean, upper }
    }
}

fn add_upper(upper: &mut [f64], v: &[f64], w: f64) {
    let d = v.len();
    let mut pos = 0;
    for r in 0..d {
        let wr = w * v[r];
        for (u, &vc) in upper[pos..pos + d - r].iter_mut().zip(&v[r..]) {
            *u += wr * vc;
        }
        pos += d - r;
    }
}

fn m_step_impl(
    ds: &LabeledDataset,
    scatter: &Scatter,
    l: &[f64],
    variant: EmVariant,
    previous: Option<&EmParams>,
    floor: Option<f64>,
) -> Result<EmParams> {
    let n = ds.n();
    let d = ds.p();
    let k = ds.k();
    match variant {
        EmVariant::SymmetricTwoComponent => {
            let mut mu = vec![0.0; d];
            for i in 0..n {
                let w = l[i * 2 + 1] - l[i * 2];
                for (m, &z) in mu.iter_mut().zip(ds.row(i)) {
                    *m += w * z;
                }
            }
            for m in &mut mu {
                *m /= n as f64;
            }
            Ok(EmParams::symmetric(mu))
        }
        EmVariant::General => {
            let mut weights = vec![0.0; k];
            let mut sums = vec![0.0; k * d];
            for i in 0..n {
                let z = ds.row(i);
                for c in 0..k {
                    let w = l[i * k + c];
                    if w == 0.0 {
                        continue;
                    }
                    weights[c] += w;
                    for (s, &zj) in sums[c * d..(c + 1) * d].iter_mut().zip(z) {
                        *s += w * zj;
                    }
                }
            }
            let mut means = Vec::with_capacity(k);
            for c in 0..k {
                if weights[c] > 0.0 {
                    means.push(
                        sums[c * d..(c + 1) * d]
                            .iter()
                            .map(|s| s / weights[c])
                            .collect(),
                    );
                } else {
                    // Empty component: keep the previous mean.
                    means.push(match previous {
                        Some(p) => p.means[c].clone(),
                        None => vec![0.0; d],
                    });
                }
            }
            // Σ_c Σ_i L_ic (z_i − m_c)(z_i − m_c)ᵀ
            //   = Σ_i (z_i − z̄)(z_i − z̄)ᵀ − Σ_c W_c (m_c − z̄)(m_c − z̄)ᵀ.
            let mut upper = scatter.upper.clone();
            let mut diff = vec![0.0; d];
            for (mean, &w) in means.iter().zip(&weights) {
                if w == 0.0 {
                    continue;
                }
                for ((df, &m), &g) in diff.iter_mut().zip(mean).zip(&scatter.mean) {
                    *df = m - g;
                }
                add_upper(&mut upper, &diff, -w);
            }
            let mut cov = Matrix::zeros(d, d);
            let mut pos = 0;
            for r in 0..d {
                for c in r..d {
                    let v = upper[pos] / n as f64;
                    cov[(r, c)] = v;
                    cov[(c, r)] = v;
                    pos += 1;
                }
            }
            if let Some(floor) = floor {
                cov = apply_covariance_floor(cov, floor)?;
            }
            Ok(EmParams { means, cov })
        }
    }
}

/// M-step minimising the expected complete-data objective over the
/// variant's parameter set. Components with zero total responsibility keep
/// their `previous` mean (zero if none is given).
pub fn m_step(
    ds: &LabeledDataset,
    labels: &SoftLabels,
    variant: EmVariant,
    previous: Option<&EmParams>,
    covariance_floor: Option<f64>,
) -> Result<EmParams> {
    if labels.n() != ds.n() || labels.k() != ds.k() {
        return Err(Error::DimensionMismatch {
            expected: ds.n() * ds.k(),
            found: labels.n() * labels.k(),
        });
    }
    let params = m_step_impl(
        ds,
        &Scatter::new(ds),
        labels.l.as_slice(),
        variant,
        previous,
        covariance_floor,
    )?;
    if variant == EmVariant::General {
        Cholesky::new(&params.cov)?;
    }
    Ok(params)
}

/// Between-class covariance weighted by responsibilities, and the
/// responsibility-weighted grand mean.
pub fn soft_between(labels: &SoftLabels, params: &EmParams) -> (Matrix, Vec<f64>) {
    let n = labels.n() as f64;
    let d = params.d();
    let weights = labels.weights();
    let mut total = vec![0.0; d];
    for (w, m) in weights.iter().zip(&params.means) {
        for (t, &v) in total.iter_mut().zip(m) {
            *t += w * v / n;
        }
    }
    let mut between = Matrix::zeros(d, d);
    let mut diff = vec![0.0; d];
    for (w, m) in weights.iter().zip(&params.means) {
        for ((df, &v), &t) in diff.iter_mut().zip(m).zip(&total) {
            *df = v - t;
        }
        add_outer(&mut between, &diff, w / n);
    }
    (between, total)
}

/// Runs `T` EM iterations from `init` and returns the final parameters,
/// responsibilities and `Q̂ = Σ̂_w⁻¹ Σ̂_b`.
pub fn run_em_single(ds: &LabeledDataset, init: &EmParams, config: &EmConfig) -> Result<EmFit> {
    config.validate(ds.k())?;
    init.validate(ds.p(), ds.k())?;
    let n = ds.n();
    let k = ds.k();
    let mut params = init.clone();
    let scatter = Scatter::new(ds);
    let mut l = vec![0.0; n * k];
    let mut iterations_run = 0;
    for _ in 0..config.iterations {
        let chol = Cholesky::new(&params.cov)?;
        e_step_into(ds, &params, &chol, &mut l);
        let next = m_step_impl(
            ds,
            &scatter,
            &l,
            config.variant,
            Some(&params),
            config.covariance_floor,
        )?;
        iterations_run += 1;
        let shift = next
            .means
            .iter()
            .zip(&params.means)
            .map(|(a, b)| crate::linalg::norm(&sub(a, b)))
            .fold(0.0, f64::max);
        params = next;
        if config.early_stop_tol.is_some_and(|tol| shift < tol) {
            break;
        }
    }
    let chol = Cholesky::new(&params.cov)?;
    e_step_into(ds, &params, &chol, &mut l);
    let labels = SoftLabels {
        l: Matrix::new(n, k, l)?,
    };
    let (between, _) = soft_between(&labels, &params);
    let q = WhitenedBetween::new(chol.solve(&between)?)?;
    Ok(EmFit {
        params,
        labels,
        q,
        iterations_run,
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Median of a non-empty slice; the mean of the two central values when the
/// length is even.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Index minimising the median distance to all other entries (smallest
/// index on ties). `dist` must be a square matrix of pairwise distances.
pub fn median_agreement_index(dist: &[Vec<f64>]) -> usize {
    let m = dist.len();
    if m <= 1 {
        return 0;
    }
    let mut best = (f64::INFINITY, 0);
    for i in 0..m {
        let others: Vec<f64> = (0..m).filter(|&j| j != i).map(|j| dist[i][j]).collect();
        let med = median(&others);
        if med < best.0 {
            best = (med, i);
        }
    }
    best.1
}

/// Draws the starting point for chain `m`.
fn draw_init(
    ds: &LabeledDataset,
    config: &EmConfig,
    rng: &SeededRng,
    m: usize,
) -> Result<EmParams> {
    match &config.init {
        EmInit::UserSupplied(p) => Ok(p.clone()),
        EmInit::Hierarchical => {
            let params = init_hierarchical(ds, ds.k(), config.covariance_floor)?;
            Ok(match config.variant {
                EmVariant::General => params,
                EmVariant::SymmetricTwoComponent => EmParams::symmetric(
                    params.means[1]
                        .iter()
                        .zip(&params.means[0])
                        .map(|(a, b)| 0.5 * (a - b))
                        .collect(),
                ),
            })
        }
        EmInit::UniformSphere { radius } => {
            let mut r = rng.stream(domain::EM_CHAIN, m as u64, 0);
            match config.variant {
                EmVariant::SymmetricTwoComponent => init_uniform_sphere(&mut r, ds.p(), *radius),
                EmVariant::General => Ok(EmParams {
                    means: (0..ds.k())
                        .map(|_| sphere_point(&mut r, ds.p(), *radius))
                        .collect(),
                    cov: Matrix::identity(ds.p()),
                }),
            }
        }
    }
}

/// Runs `M` chains and returns the one whose `Q̂` has the smallest median
/// operator-norm distance to the others. Chains that fail are dropped.
pub fn run_em_multistart(ds: &LabeledDataset, config: &EmConfig, rng: &SeededRng) -> Result<EmFit> {
    config.validate(ds.k())?;
    let mut fits = Vec::with_capacity(config.starts);
    let mut last_err = None;
    for m in 0..config.starts {
        match draw_init(ds, config, rng, m).and_then(|init| run_em_single(ds, &init, config)) {
            Ok(fit) => fits.push(fit),
            Err(e) => last_err = Some(e),
        }
    }
    if fits.is_empty() {
        return Err(Error::AllRunsFailed {
            starts: config.starts,
            last: Box::new(last_err.expect("at least one start ran")),
        });
    }
    let m = fits.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let diff = fits[i].q.matrix().sub(fits[j].q.matrix())?;
            let v = op_norm(&diff)?;
            dist[i][j] = v;
            dist[j][i] = v;
        }
    }
    let best = median_agreement_index(&dist);
    Ok(fits.swap_remove(best))
}

/// Ward clustering cut at `k` clusters; means are cluster means and the
/// covariance is the pooled within-cluster covariance (eigenvalue-floored).
///
/// When some rows are labeled, cluster ids are matched to classes so that
/// agreement with the observed labels is maximal.
pub fn init_hierarchical(ds: &LabeledDataset, k: usize, floor: Option<f64>) -> Result<EmParams> {
    let n = ds.n();
    let d = ds.p();
    if n < k {
        return Err(Error::InvalidDimension(format!(
            "hierarchical initialisation needs n >= K ({n} < {k})"
        )));
    }
    let clusters = ward::ward_clusters(ds.x(), k);

    let mut agreement = vec![vec![0i64; k]; k];
    for (&c, &y) in clusters.iter().zip(ds.labels()) {
        if y != UNLABELED {
            agreement[c][y - 1] += 1;
        }
    }
    let class_of = best_assignment(&agreement);

    let mut counts = vec![0usize; k];
    let mut means = vec![vec![0.0; d]; k];
    for (i, &c) in clusters.iter().enumerate() {
        let class = class_of[c];
        counts[class] += 1;
        for (m, &z) in means[class].iter_mut().zip(ds.row(i)) {
            *m += z;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        for v in m.iter_mut() {
            *v /= c as f64;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    let mut diff = vec![0.0; d];
    for (i, &c) in clusters.iter().enumerate() {
        for ((df, &z), &m) in diff.iter_mut().zip(ds.row(i)).zip(&means[class_of[c]]) {
            *df = z - m;
        }
        add_outer(&mut cov, &diff, 1.0);
    }
    let cov = apply_covariance_floor(
        cov.scale(1.0 / n as f64),
        floor.unwrap_or(DEFAULT_COVARIANCE_FLOOR),
    )?;
    Ok(EmParams { means, cov })
}

fn sphere_point<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = crate::linalg::norm(&g);
        if norm > 0.0 {
            return g.into_iter().map(|v| v * radius / norm).collect();
        }
    }
}

/// `(-μ, μ, I)` with `μ` uniform on the sphere of the given radius.
pub fn init_uniform_sphere<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    radius: f64,
) -> Result<EmParams> {
    if !(radius > 0.0) || d == 0 {
        return Err(Error::InvalidConfig(
            "sphere initialisation needs d >= 1 and a positive radius".into(),
        ));
    }
    Ok(EmParams::symmetric(sphere_point(rng, d, radius)))
}

/// Observed-data log-likelihood of the equal-weight mixture, with labeled
/// rows evaluated under their own component.
pub fn observed_log_likelihood(ds: &LabeledDataset, params: &EmParams) -> Result<f64> {
    params.validate(ds.p(), ds.k())?;
    let chol = Cholesky::new(&params.cov)?;
    let d = ds.p() as f64;
    let k = ds.k();
    let log_norm = -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + chol.log_det());
    let wm = whiten_means(params, &chol);
    let dd = ds.p();
    let mut wz = vec![0.0; dd];
    let mut total = 0.0;
    let mut scores = vec![0.0; k];
    for i in 0..ds.n() {
        wz.copy_from_slice(ds.row(i));
        chol.forward_solve(&mut wz);
        for (c, s) in scores.iter_mut().enumerate() {
            let m = &wm[c * dd..(c + 1) * dd];
            *s = -0.5
                * wz.iter()
                    .zip(m)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
        }
        total += log_norm
            + match ds.labels()[i] {
                UNLABELED => {
                    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    top + (scores.iter().map(|s| (s - top).exp()).sum::<f64>() / k as f64).ln()
                }
                y => scores[y - 1],
            };
    }
    Ok(total)
}

/// Direct closed-form update for the symmetric two-component model.
pub fn symmetric_update(ds: &LabeledDataset, mu: &[f64]) -> Vec<f64> {
    let n = ds.n() as f64;
    let mut out = vec![0.0; mu.len()];
    for i in 0..ds.n() {
        let z = ds.row(i);
        let w = match ds.labels()[i] {
            UNLABELED => crate::linalg::dot(z, mu).tanh(),
            1 => -1.0,
            _ => 1.0,
        };
        for (o, &zj) in out.iter_mut().zip(z) {
            *o += w * zj;
        }
    }
    out.iter().map(|v| v / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[Vec<f64>], labels: Vec<usize>, k: usize) -> LabeledDataset {
        LabeledDataset::new(Matrix::from_rows(rows).unwrap(), labels, k).unwrap()
    }

    #[test]
    fn labeled_rows_are_indicators() {
        let data = ds(&[vec![0.3], vec![5.0]], vec![2, 0], 3);
        let params = EmParams {
            means: vec![vec![0.0], vec![1.0], vec![2.0]],
            cov: Matrix::identity(1),
        };
        let l = e_step(&data, &params).unwrap();
        assert_eq!(l.row(0), &[0.0, 1.0, 0.0]);
        assert!((l.row(1).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equidistant_point_splits_evenly() {
        let data = ds(&[vec![0.0, 3.0]], vec![0], 2);
        let params = EmParams::symmetric(vec![1.0, 0.0]);
        let l = e_step(&data, &params).unwrap();
        assert!(l.row(0).iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn responsibility_difference_is_tanh() {
        let mu = vec![0.7, -0.4];
        let params = EmParams::symmetric(mu.clone());
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 - 10.0) * 0.37, (i as f64 * 1.3).sin() * 2.0])
            .collect();
        let data = ds(&rows, vec![0; 20], 2);
        let l = e_step(&data, &params).unwrap();
        for (i, z) in rows.iter().enumerate() {
            let expect = crate::linalg::dot(z, &mu).tanh();
            assert!((l.row(i)[1] - l.row(i)[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_labels_give_class_means_and_pooled_covariance() {
        let rows = vec![vec![0.0], vec![2.0], vec![10.0], vec![14.0]];
        let data = ds(&rows, vec![0; 4], 2);
        let l = SoftLabels::new(
            Matrix::from_rows(&[
                vec![1.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 1.0],
            ])
            .unwrap(),
        )
        .unwrap();
        let p = m_step(&data, &l, EmVariant::General, None, None).unwrap();
        assert_eq!(p.means, vec![vec![1.0], vec![12.0]]);
        // Squared deviations 1 + 1 + 4 + 4 over n = 4.
        assert_eq!(p.cov[(0, 0)], 2.5);
    }

    #[test]
    fn uniform_soft_labels_cancel_in_symmetric_variant() {
        let rows = vec![vec![1.0, 2.0], vec![-1.0, -2.0], vec![3.0, 0.5]];
        let data = ds(&rows, vec![0; 3], 2);
        let l = SoftLabels::new(Matrix::new(3, 2, vec![0.5; 6]).unwrap()).unwrap();
        let p = m_step(&data, &l, EmVariant::SymmetricTwoComponent, None, None).unwrap();
        assert!(p.means[1].iter().all(|v| v.abs() < 1e-15));
        assert_eq!(p.cov, Matrix::identity(2));
    }

    #[test]
    fn empty_component_keeps_previous_mean() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let data = ds(&rows, vec![0; 3], 2);
        let l = SoftLabels::new(Matrix::new(3, 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap())
            .unwrap();
        let prev = EmParams {
            means: vec![vec![0.0], vec![42.0]],
            cov: Matrix::identity(1),
        };
        let p = m_step(&data, &l, EmVariant::General, Some(&prev), None).unwrap();
        assert_eq!(p.means[1], vec![42.0]);
        assert_eq!(p.means[0], vec![1.0]);
    }

    #[test]
    fn singular_covariance_without_floor_is_reported() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let data = ds(&rows, vec![1, 1, 2], 2);
        let l = e_step(
            &data,
            &EmParams {
                means: vec![vec![0.5, 0.5], vec![2.0, 2.0]],
                cov: Matrix::identity(2),
            },
        )
        .unwrap();
        assert!(matches!(
            m_step(&data, &l, EmVariant::General, None, None),
            Err(Error::SingularWithinCovariance { .. })
        ));
        let floored = m_step(&data, &l, EmVariant::General, None, Some(1e-8)).unwrap();
        assert!(Cholesky::new(&floored.cov).is_ok());
    }

    #[test]
    fn median_table_from_hand_computation() {
        // Distances 1↔2 = 0.1, 1↔3 = 5, 2↔3 = 5: medians 2.55, 2.55, 5.
        let dist = vec![
            vec![0.0, 0.1, 5.0],
            vec![0.1, 0.0, 5.0],
            vec![5.0, 5.0, 0.0],
        ];
        assert_eq!(median_agreement_index(&dist), 0);
        assert_eq!(median(&[0.1, 5.0]), 2.55);
        assert_eq!(median_agreement_index(&vec![vec![0.0; 4]; 4]), 0);
        assert_eq!(median_agreement_index(&[vec![0.0]]), 0);
    }

    #[test]
    fn config_validation() {
        let mut c = EmConfig::default();
        assert!(c.validate(3).is_ok());
        c.iterations = 0;
        assert!(c.validate(3).is_err());
        let c = EmConfig {
            variant: EmVariant::SymmetricTwoComponent,
            ..EmConfig::default()
        };
        assert!(c.validate(3).is_err());
        assert!(c.validate(2).is_ok());
    }

    #[test]
    fn hierarchical_on_k_points() {
        let rows = vec![vec![0.0, 0.0], vec![5.0, 1.0]];
        let data = ds(&rows, vec![0, 0], 2);
        let p = init_hierarchical(&data, 2, Some(1e-8)).unwrap();
        assert_eq!(p.means, vec![vec![0.0, 0.0], vec![5.0, 1.0]]);
        assert_eq!(p.cov, Matrix::identity(2).scale(1e-8));
    }

    #[test]
    fn hierarchical_clusters_follow_labels() {
        let rows = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        // The first cluster found holds rows 0 and 1, but those carry label 2.
        let data = ds(&rows, vec![2, 0, 1, 0], 2);
        let p = init_hierarchical(&data, 2, None).unwrap();
        assert!((p.means[0][0] - 10.05).abs() < 1e-12);
        assert!((p.means[1][0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn sphere_init_has_requested_radius() {
        let mut rng = SeededRng::new(3).stream(domain::EM_CHAIN, 0, 0);
        let p = init_uniform_sphere(&mut rng, 4, 2.5).unwrap();
        assert!((crate::linalg::norm(&p.means[1]) - 2.5).abs() < 1e-12);
        assert_eq!(
            p.means[0],
            p.means[1].iter().map(|v| -v).collect::<Vec<_>>()
        );
        assert!(init_uniform_sphere(&mut rng, 4, 0.0).is_err());
    }
}
