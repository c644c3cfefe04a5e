//! Synthetic Gaussian-mixture benchmarks and Monte Carlo Bayes risk.

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, UNLABELED};
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, Cholesky, Matrix};

/// Ground-truth parameters of a `K`-component Gaussian mixture with shared
/// covariance and a label-observation probability `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub k: usize,
    pub p: usize,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub sigma_w: Matrix,
    pub gamma: f64,
    /// Number of coordinates on which the means are non-zero.
    pub s0: usize,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig("a mixture needs K >= 2".into()));
        }
        if self.priors.len() != self.k || self.means.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: self.priors.len().min(self.means.len()),
            });
        }
        if self.priors.iter().any(|&p| !(p >= 0.0))
            || (self.priors.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidConfig(
                "class priors must be non-negative and sum to 1".into(),
            ));
        }
        if let Some(m) = self.means.iter().find(|m| m.len() != self.p) {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: m.len(),
            });
        }
        if self.sigma_w.rows() != self.p || self.sigma_w.cols() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: self.sigma_w.rows(),
            });
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(
                "label fraction must lie in [0, 1]".into(),
            ));
        }
        Cholesky::new(&self.sigma_w)?;
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Coordinates where at least one class mean is non-zero.
    pub fn mean_support(&self) -> Vec<usize> {
        (0..self.p)
            .filter(|&j| self.means.iter().any(|m| m[j] != 0.0))
            .collect()
    }

    /// Smallest pairwise distance between class means divided by
    /// `sqrt(tr(Σ_w) / p)`.
    pub fn snr(&self) -> f64 {
        let mut min = f64::INFINITY;
        for a in 0..self.k {
            for b in (a + 1)..self.k {
                let d: f64 = self.means[a]
                    .iter()
                    .zip(&self.means[b])
                    .map(|(x, y)| (x - y).powi(2))
                    .sum();
                min = min.min(d.sqrt());
            }
        }
        min / (self.sigma_w.trace() / self.p as f64).sqrt()
    }
}

/// Within-class covariance used by the three-class benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// `Σ_w = I_p`.
    Isotropic,
    /// `Σ_w = V Λ Vᵀ`, `V` Haar-distributed, `Λ` i.i.d. `Unif[0, 2]`.
    Anisotropic,
}

/// Haar-distributed orthogonal matrix: Gram–Schmidt on a Gaussian matrix,
/// which fixes the signs so that the triangular factor has a positive
/// diagonal.
pub fn haar_orthogonal<R: Rng + ?Sized>(rng: &mut R, p: usize) -> Matrix {
    loop {
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let q = orthonormalize(&cols, 1e-10);
        if q.len() == p {
            return Matrix::from_columns(&q).expect("finite orthonormal columns");
        }
    }
}

/// Three classes with means `a(1,1,0,0…)`, `a(-1,0,1,0…)`, `a(0,-1,-1,0…)`
/// scaled so every pairwise distance equals `snr` (the expected value of
/// `tr(Σ_w)/p` is one in both covariance settings).
pub fn build_figure2_spec<R: Rng + ?Sized>(
    p: usize,
    snr: f64,
    variant: CovarianceKind,
    rng: &mut R,
) -> Result<MixtureSpec> {
    if p < 3 {
        return Err(Error::InvalidDimension(format!("need p >= 3, got {p}")));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidConfig("SNR must be positive".into()));
    }
    // ‖μ_a − μ_b‖ = a√6 for every pair.
    let a = snr / 6f64.sqrt();
    let pattern = [[1.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, -1.0]];
    let means = pattern
        .iter()
        .map(|row| {
            let mut m = vec![0.0; p];
            for (j, &v) in row.iter().enumerate() {
                m[j] = a * v;
            }
            m
        })
        .collect();
    let sigma_w = match variant {
        CovarianceKind::Isotropic => Matrix::identity(p),
        CovarianceKind::Anisotropic => {
            let v = haar_orthogonal(rng, p);
            let unif = Uniform::new(0.0, 2.0).expect("valid range");
            let lambda: Vec<f64> = (0..p).map(|_| rng.sample(unif)).collect();
            let mut scaled = v.clone();
            for i in 0..p {
                for (x, l) in scaled.row_mut(i).iter_mut().zip(&lambda) {
                    *x *= l;
                }
            }
            let mut s = scaled.matmul(&v.transpose())?;
            for i in 0..p {
                for j in (i + 1)..p {
                    let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                    s[(i, j)] = avg;
                    s[(j, i)] = avg;
                }
            }
            s
        }
    };
    let spec = MixtureSpec {
        k: 3,
        p,
        priors: vec![1.0 / 3.0; 3],
        means,
        sigma_w,
        gamma: 0.0,
        s0: 3,
    };
    spec.validate()?;
    Ok(spec)
}

/// Two classes with `μ₁ = -μ₂ = a(1_s, 0_{p-s})`, `Σ_w = I_p` and
/// `‖μ₁ − μ₂‖ = snr`, i.e. `a = snr / (2√s)`.
pub fn build_two_class_spec(p: usize, s: usize, snr: f64) -> Result<MixtureSpec> {
    if s == 0 || s > p {
        return Err(Error::InvalidDimension(format!(
            "need 1 <= s <= p, got s = {s}, p = {p}"
        )));
    }
    if !(snr >= 0.0) {
        return Err(Error::InvalidConfig("SNR must be non-negative".into()));
    }
    let a = snr / (2.0 * (s as f64).sqrt());
    let mut mu1 = vec![0.0; p];
    for v in mu1.iter_mut().take(s) {
        *v = a;
    }
    let mu2 = mu1.iter().map(|v| -v).collect();
    Ok(MixtureSpec {
        k: 2,
        p,
        priors: vec![0.5, 0.5],
        means: vec![mu1, mu2],
        sigma_w: Matrix::identity(p),
        gamma: 0.0,
        s0: if snr > 0.0 { s } else { 0 },
    })
}

/// Draws observations from a fixed spec; the covariance factor is computed
/// once.
#[derive(Debug, Clone)]
pub struct MixtureSampler<'a> {
    spec: &'a MixtureSpec,
    factor: Cholesky,
    identity: bool,
}

impl<'a> MixtureSampler<'a> {
    pub fn new(spec: &'a MixtureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(MixtureSampler {
            spec,
            factor: Cholesky::new(&spec.sigma_w)?,
            identity: spec.sigma_w == Matrix::identity(spec.p),
        })
    }

    fn draw_class<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, &p) in self.spec.priors.iter().enumerate() {
            acc += p;
            if u < acc {
                return k + 1;
            }
        }
        self.spec.k
    }

    /// `n` observations with true labels; each label is revealed with
    /// probability `gamma`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<(LabeledDataset, Vec<usize>)> {
        let p = self.spec.p;
        let mut data = Vec::with_capacity(n * p);
        let mut truth = Vec::with_capacity(n);
        let mut observed = Vec::with_capacity(n);
        let mut xi = vec![0.0; p];
        for _ in 0..n {
            let y = self.draw_class(rng);
            for v in xi.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let mean = &self.spec.means[y - 1];
            if self.identity {
                data.extend(mean.iter().zip(&xi).map(|(m, e)| m + e));
            } else {
                let l = self.factor.factor();
                for i in 0..p {
                    let row = &l.row(i)[..=i];
                    data.push(mean[i] + crate::linalg::dot(row, &xi[..=i]));
                }
            }
            truth.push(y);
            let reveal = rng.random::<f64>() < self.spec.gamma;
            observed.push(if reveal { y } else { UNLABELED });
        }
        let x = Matrix::new(n, p, data)?;
        Ok((LabeledDataset::new(x, observed, self.spec.k)?, truth))
    }
}

/// `n` draws from `spec`: features, observed labels and true labels.
pub fn sample<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    n: usize,
    rng: &mut R,
) -> Result<(LabeledDataset, Vec<usize>)> {
    if n == 0 {
        return Err(Error::InvalidDimension("need n >= 1".into()));
    }
    MixtureSampler::new(spec)?.sample(n, rng)
}

/// Monte Carlo estimate of the Bayes classifier's error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesRisk {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: usize,
}

/// Error probability of `x ↦ argmax_k {log π_k − ½(x−ν_k)ᵀΣ_w⁻¹(x−ν_k)}`.
///
/// The rule only depends on the whitened data through its projection onto
/// the span of the whitened mean differences, so draws are made in that
/// (at most `K − 1`-dimensional) subspace.
pub fn bayes_risk<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    n_mc: usize,
    rng: &mut R,
) -> Result<BayesRisk> {
    spec.validate()?;
    if n_mc == 0 {
        return Err(Error::InvalidConfig(
            "need at least one Monte Carlo draw".into(),
        ));
    }
    let chol = Cholesky::new(&spec.sigma_w)?;
    let whitened: Vec<Vec<f64>> = spec
        .means
        .iter()
        .map(|m| {
            let mut w = m.clone();
            chol.forward_solve(&mut w);
            w
        })
        .collect();
    let diffs: Vec<Vec<f64>> = whitened[1..]
        .iter()
        .map(|w| w.iter().zip(&whitened[0]).map(|(a, b)| a - b).collect())
        .collect();
    let basis = orthonormalize(&diffs, 1e-12);
    let r = basis.len();
    let coords: Vec<Vec<f64>> = whitened
        .iter()
        .map(|w| {
            let rel: Vec<f64> = w.iter().zip(&whitened[0]).map(|(a, b)| a - b).collect();
            basis.iter().map(|q| crate::linalg::dot(q, &rel)).collect()
        })
        .collect();
    let log_priors: Vec<f64> = spec.priors.iter().map(|p| p.ln()).collect();

    let sampler = MixtureSampler::new(spec)?;
    let mut errors = 0usize;
    let mut x = vec![0.0; r];
    for _ in 0..n_mc {
        let y = sampler.draw_class(rng);
        for (xi, c) in x.iter_mut().zip(&coords[y - 1]) {
            *xi = c + rng.sample::<f64, _>(StandardNormal);
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, c) in coords.iter().enumerate() {
            let sq: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            let score = log_priors[k] - 0.5 * sq;
            if score > best.0 {
                best = (score, k + 1);
            }
        }
        if best.1 != y {
            errors += 1;
        }
    }
    let estimate = errors as f64 / n_mc as f64;
    Ok(BayesRisk {
        estimate,
        std_error: (estimate * (1.0 - estimate) / n_mc as f64).sqrt(),
        draws: n_mc,
    })
}
