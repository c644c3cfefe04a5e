//! Evaluation metrics and population-level signal diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};
use crate::synth::MixtureSpec;

/// Largest `K` for which the misclustering rate enumerates all permutations.
pub const MAX_ENUMERATION_K: usize = 8;

/// Threshold on `|(Σ_w⁻¹Σ_b)_jj|` defining the signal coordinates.
pub const SIGNAL_THRESHOLD: f64 = 1e-12;

/// `counts[c][t]`: number of rows with predicted label `c + 1` and true
/// label `t + 1`.
fn confusion(truth: &[usize], pred: &[usize], k: usize) -> Result<Vec<Vec<i64>>> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    let mut counts = vec![vec![0i64; k]; k];
    for (row, (&t, &c)) in truth.iter().zip(pred).enumerate() {
        for label in [t, c] {
            if label == 0 || label > k {
                return Err(Error::LabelOutOfRange {
                    row: row + 1,
                    label,
                    k,
                });
            }
        }
        counts[c - 1][t - 1] += 1;
    }
    Ok(counts)
}

fn infer_k(truth: &[usize], pred: &[usize]) -> usize {
    truth.iter().chain(pred).copied().max().unwrap_or(1).max(1)
}

fn rate(agreement: i64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (n as i64 - agreement) as f64 / n as f64
    }
}

/// Fraction of rows whose predicted label disagrees with the truth,
/// minimised over relabelings of the predictions. `K` is the largest label
/// seen; all permutations are enumerated when `K ≤ 8`, otherwise the
/// assignment problem is solved with the Hungarian method.
pub fn misclustering_rate(truth: &[usize], pred: &[usize]) -> Result<f64> {
    misclustering_rate_k(truth, pred, infer_k(truth, pred))
}

/// As [`misclustering_rate`] with labels checked against `1..=k`.
pub fn misclustering_rate_k(truth: &[usize], pred: &[usize], k: usize) -> Result<f64> {
    if k <= MAX_ENUMERATION_K {
        misclustering_rate_enumerate(truth, pred, k)
    } else {
        misclustering_rate_hungarian(truth, pred, k)
    }
}

/// Misclustering rate by enumerating all `K!` relabelings.
pub fn misclustering_rate_enumerate(truth: &[usize], pred: &[usize], k: usize) -> Result<f64> {
    let counts = confusion(truth, pred, k)?;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = i64::MIN;
    permute(&mut perm, 0, &mut |p| {
        let total: i64 = p.iter().enumerate().map(|(c, &t)| counts[c][t]).sum();
        best = best.max(total);
    });
    Ok(rate(best, truth.len()))
}

fn permute(perm: &mut [usize], start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start + 1 >= perm.len() {
        visit(perm);
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        permute(perm, start + 1, visit);
        perm.swap(start, i);
    }
}

/// Misclustering rate through the Hungarian method on the disagreement
/// counts.
pub fn misclustering_rate_hungarian(truth: &[usize], pred: &[usize], k: usize) -> Result<f64> {
    let counts = confusion(truth, pred, k)?;
    let assign = best_assignment(&counts);
    let total: i64 = assign.iter().enumerate().map(|(c, &t)| counts[c][t]).sum();
    Ok(rate(total, truth.len()))
}

/// Row-to-column assignment maximising `Σ_r agreement[r][σ(r)]` on a square
/// matrix. An all-zero matrix gives the identity.
pub fn best_assignment(agreement: &[Vec<i64>]) -> Vec<usize> {
    let k = agreement.len();
    if agreement.iter().all(|row| row.iter().all(|&v| v == 0)) {
        return (0..k).collect();
    }
    let top = agreement.iter().flatten().copied().max().unwrap_or(0);
    let cost: Vec<Vec<i64>> = agreement
        .iter()
        .map(|row| row.iter().map(|&v| top - v).collect())
        .collect();
    hungarian(&cost)
}

/// Minimum-cost perfect matching on a square integer cost matrix
/// (shortest augmenting paths with potentials, `O(K³)`). Returns the column
/// assigned to each row.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based internally; index 0 is the virtual source column.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[matched_row[j] - 1] = j - 1;
    }
    out
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: a.len(),
        });
    }
    Ok(())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `min(‖μ − μ*‖, ‖μ + μ*‖)`.
pub fn sign_loss(mu: &[f64], mu_star: &[f64]) -> Result<f64> {
    check_dims(mu, mu_star)?;
    let neg: Vec<f64> = mu_star.iter().map(|v| -v).collect();
    Ok(distance(mu, mu_star).min(distance(mu, &neg)))
}

/// Frobenius distance between two pairs of means, minimised over swapping
/// the estimated pair.
pub fn pair_frobenius_loss(est: (&[f64], &[f64]), truth: (&[f64], &[f64])) -> Result<f64> {
    for v in [est.0, est.1, truth.1] {
        check_dims(v, truth.0)?;
    }
    let straight = (distance(est.0, truth.0).powi(2) + distance(est.1, truth.1).powi(2)).sqrt();
    let swapped = (distance(est.1, truth.0).powi(2) + distance(est.0, truth.1).powi(2)).sqrt();
    Ok(straight.min(swapped))
}

/// How a selected index set relates to the true signal set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub contains: bool,
    pub intersection: usize,
    /// `|Ŝ ∩ S₀| / |Ŝ|` (1 when `Ŝ` is empty).
    pub precision: f64,
    /// `|Ŝ ∩ S₀| / |S₀|` (1 when `S₀` is empty).
    pub recall: f64,
}

pub fn recovery(selected: &[usize], truth: &[usize]) -> Recovery {
    let mut sel = selected.to_vec();
    sel.sort_unstable();
    sel.dedup();
    let mut tru = truth.to_vec();
    tru.sort_unstable();
    tru.dedup();
    let intersection = tru.iter().filter(|j| sel.binary_search(j).is_ok()).count();
    let frac = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Recovery {
        contains: intersection == tru.len(),
        intersection,
        precision: frac(intersection, sel.len()),
        recall: frac(intersection, tru.len()),
    }
}

/// Population quantities governing how hard variable selection is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDiagnostics {
    /// Diagonal of `Σ_w⁻¹Σ_b`.
    pub diag: Vec<f64>,
    /// `S₀`, 0-based.
    pub support: Vec<usize>,
    pub s0: usize,
    /// Smallest diagonal entry over `S₀` (0 if `S₀` is empty).
    pub gamma_min: f64,
    pub gamma_max: f64,
}

/// `Σ_b = Σ_k π_k (ν_k − ν)(ν_k − ν)ᵀ` with `ν = Σ_k π_k ν_k`.
pub fn population_between(spec: &MixtureSpec) -> Matrix {
    let p = spec.p;
    let mut nu = vec![0.0; p];
    for (pi, m) in spec.priors.iter().zip(&spec.means) {
        for (n, &v) in nu.iter_mut().zip(m) {
            *n += pi * v;
        }
    }
    let mut between = Matrix::zeros(p, p);
    let mut diff = vec![0.0; p];
    for (pi, m) in spec.priors.iter().zip(&spec.means) {
        for ((d, &v), &n) in diff.iter_mut().zip(m).zip(&nu) {
            *d = v - n;
        }
        crate::base_lda::add_outer(&mut between, &diff, *pi);
    }
    between
}

/// `Σ_w⁻¹Σ_b` for the mixture.
pub fn population_whitened_between(spec: &MixtureSpec) -> Result<Matrix> {
    solve_spd(&spec.sigma_w, &population_between(spec))
}

pub fn population_diagnostics(spec: &MixtureSpec) -> Result<SignalDiagnostics> {
    let q = population_whitened_between(spec)?;
    let diag = q.diagonal();
    let support: Vec<usize> = (0..spec.p)
        .filter(|&j| diag[j].abs() > SIGNAL_THRESHOLD)
        .collect();
    let on_support = || support.iter().map(|&j| diag[j]);
    let (gamma_min, gamma_max) = if support.is_empty() {
        (0.0, 0.0)
    } else {
        (
            on_support().fold(f64::INFINITY, f64::min),
            on_support().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    Ok(SignalDiagnostics {
        s0: support.len(),
        diag,
        support,
        gamma_min,
        gamma_max,
    })
}

/// Sample mean with a 95% normal-approximation interval
/// (`mean ± 1.96·sd/√n`); no interval for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanInterval {
    pub mean: f64,
    pub n: usize,
    pub interval: Option<(f64, f64)>,
}

pub fn mean_interval(values: &[f64]) -> Option<MeanInterval> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let interval = (n > 1).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let half = 1.96 * var.sqrt() / (n as f64).sqrt();
        (mean - half, mean + half)
    });
    Some(MeanInterval { mean, n, interval })
}
