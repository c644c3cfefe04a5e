//! Labeled-data base learner: `Q̂ = Σ̂_w⁻¹ Σ̂_b` from class moments.

use crate::dataset::{LabeledDataset, UNLABELED};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Cholesky, Matrix};

/// Estimate of the whitened between-class covariance of a projected dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedBetween {
    q: Matrix,
    trace: f64,
}

impl WhitenedBetween {
    pub fn new(q: Matrix) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::DimensionMismatch {
                expected: q.rows(),
                found: q.cols(),
            });
        }
        if !q.is_finite() {
            return Err(Error::NotFinite {
                context: "whitened between-class covariance",
            });
        }
        let trace = q.trace();
        Ok(WhitenedBetween { q, trace })
    }

    /// `Σ_w⁻¹ Σ_b` for a within-class covariance and between-class covariance.
    pub fn from_covariances(within: &Matrix, between: &Matrix) -> Result<Self> {
        WhitenedBetween::new(solve_spd(within, between)?)
    }

    pub fn zeros(d: usize) -> Self {
        WhitenedBetween {
            q: Matrix::zeros(d, d),
            trace: 0.0,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn d(&self) -> usize {
        self.q.rows()
    }
}

/// Per-class summary statistics of a (projected) dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMoments {
    /// `counts[k - 1]` is the number of observations labeled `k`.
    pub counts: Vec<usize>,
    /// Class means; zero for classes with no labeled observations.
    pub class_means: Vec<Vec<f64>>,
    pub grand_mean: Vec<f64>,
    pub within: Matrix,
    pub between: Matrix,
}

impl ClassMoments {
    pub fn n_labeled(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Class counts, class means, grand mean and the within/between covariance
/// matrices (both normalised by the labeled count).
///
/// With `include_unlabeled_in_grand_mean` the grand mean averages every
/// observation, labeled or not; otherwise only labeled ones.
pub fn class_moments(
    ds: &LabeledDataset,
    include_unlabeled_in_grand_mean: bool,
) -> Result<ClassMoments> {
    let d = ds.p();
    let k = ds.k();
    let mut counts = vec![0usize; k];
    let mut sums = vec![vec![0.0; d]; k];
    let mut grand = vec![0.0; d];
    let mut grand_count = 0usize;
    for (i, &label) in ds.labels().iter().enumerate() {
        let z = ds.row(i);
        if label != UNLABELED {
            counts[label - 1] += 1;
            for (s, &v) in sums[label - 1].iter_mut().zip(z) {
                *s += v;
            }
        }
        if include_unlabeled_in_grand_mean || label != UNLABELED {
            grand_count += 1;
            for (g, &v) in grand.iter_mut().zip(z) {
                *g += v;
            }
        }
    }
    let n_labeled: usize = counts.iter().sum();
    if n_labeled == 0 {
        return Err(Error::NoLabeledData);
    }
    for g in &mut grand {
        *g /= grand_count as f64;
    }
    let class_means: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| {
            if c == 0 {
                vec![0.0; d]
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect();

    let mut within = Matrix::zeros(d, d);
    let mut diff = vec![0.0; d];
    for (i, &label) in ds.labels().iter().enumerate() {
        if label == UNLABELED {
            continue;
        }
        for ((df, &z), &m) in diff.iter_mut().zip(ds.row(i)).zip(&class_means[label - 1]) {
            *df = z - m;
        }
        add_outer(&mut within, &diff, 1.0);
    }
    let mut between = Matrix::zeros(d, d);
    for (mean, &c) in class_means.iter().zip(&counts) {
        if c == 0 {
            continue;
        }
        for ((df, &m), &g) in diff.iter_mut().zip(mean).zip(&grand) {
            *df = m - g;
        }
        add_outer(&mut between, &diff, c as f64);
    }
    let scale = 1.0 / n_labeled as f64;
    Ok(ClassMoments {
        counts,
        class_means,
        grand_mean: grand,
        within: within.scale(scale),
        between: between.scale(scale),
    })
}

/// `m += w · v vᵀ`, filling both triangles identically.
pub(crate) fn add_outer(m: &mut Matrix, v: &[f64], w: f64) {
    let d = v.len();
    for i in 0..d {
        let wi = w * v[i];
        for j in i..d {
            let add = wi * v[j];
            m[(i, j)] += add;
            if j != i {
                m[(j, i)] += add;
            }
        }
    }
}

/// Labeled-data base learner, with the grand mean taken over all
/// observations.
pub fn lda_base(ds: &LabeledDataset) -> Result<WhitenedBetween> {
    let moments = class_moments(ds, true)?;
    WhitenedBetween::from_covariances(&moments.within, &moments.between)
}

/// Linear discriminant classifier fitted on the labeled observations.
#[derive(Debug, Clone)]
pub struct LdaClassifier {
    class_means: Vec<Vec<f64>>,
    log_priors: Vec<f64>,
    within: Cholesky,
}

impl LdaClassifier {
    pub fn fit(ds: &LabeledDataset) -> Result<Self> {
        let moments = class_moments(ds, false)?;
        let within = Cholesky::new(&moments.within)?;
        let n_labeled = moments.n_labeled() as f64;
        let log_priors = moments
            .counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    f64::NEG_INFINITY
                } else {
                    (c as f64 / n_labeled).ln()
                }
            })
            .collect();
        Ok(LdaClassifier {
            class_means: moments.class_means,
            log_priors,
            within,
        })
    }

    /// Class in `1..=K` maximising the discriminant score (smallest on ties).
    pub fn predict_row(&self, z: &[f64]) -> usize {
        let d = z.len();
        let mut diff = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        let mut best = (f64::NEG_INFINITY, 1);
        for (k, mean) in self.class_means.iter().enumerate() {
            if self.log_priors[k] == f64::NEG_INFINITY {
                continue;
            }
            for ((df, &zi), &m) in diff.iter_mut().zip(z).zip(mean) {
                *df = zi - m;
            }
            let score = self.log_priors[k] - 0.5 * self.within.mahalanobis_sq(&diff, &mut scratch);
            if score > best.0 {
                best = (score, k + 1);
            }
        }
        best.1
    }

    /// Predicted labels; observed labels are kept as they are.
    pub fn predict(&self, ds: &LabeledDataset) -> Vec<usize> {
        (0..ds.n())
            .map(|i| match ds.labels()[i] {
                UNLABELED => self.predict_row(ds.row(i)),
                y => y,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_moments() {
        let x = Matrix::new(2, 1, vec![-1.0, 1.0]).unwrap();
        let ds = LabeledDataset::new(x, vec![1, 2], 2).unwrap();
        let m = class_moments(&ds, true).unwrap();
        assert_eq!(m.grand_mean, vec![0.0]);
        assert_eq!(m.within[(0, 0)], 0.0);
        assert_eq!(m.between[(0, 0)], 1.0);
        assert!(matches!(
            lda_base(&ds),
            Err(Error::SingularWithinCovariance { .. })
        ));
    }

    #[test]
    fn unobserved_class_has_zero_mean_and_no_weight() {
        let x = Matrix::new(4, 1, vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        let ds = LabeledDataset::new(x, vec![1, 1, 2, 2], 3).unwrap();
        let m = class_moments(&ds, true).unwrap();
        assert_eq!(m.counts, vec![2, 2, 0]);
        assert_eq!(m.class_means[2], vec![0.0]);
        // grand mean 3, class means 1 and 5: between = (4 + 4) / 2.
        assert_eq!(m.between[(0, 0)], 4.0);
    }

    #[test]
    fn no_labels_is_an_error() {
        let ds = LabeledDataset::unlabeled(Matrix::identity(3), 2).unwrap();
        assert_eq!(lda_base(&ds).unwrap_err(), Error::NoLabeledData);
    }

    #[test]
    fn grand_mean_uses_unlabeled_points() {
        let x = Matrix::new(3, 1, vec![-1.0, 1.0, 4.0]).unwrap();
        let ds = LabeledDataset::new(x, vec![1, 2, 0], 2).unwrap();
        assert_eq!(
            class_moments(&ds, true).unwrap().grand_mean,
            vec![4.0 / 3.0]
        );
        assert_eq!(class_moments(&ds, false).unwrap().grand_mean, vec![0.0]);
    }

    #[test]
    fn identity_whitening_returns_between() {
        // Four points at distance √2 around (∓2, 0): pooled within-class
        // covariance is exactly I, between-class covariance is diag(4, 0).
        let s = 2f64.sqrt();
        let rows = vec![
            vec![-2.0 - s, 0.0],
            vec![-2.0 + s, 0.0],
            vec![-2.0, s],
            vec![-2.0, -s],
            vec![2.0 - s, 0.0],
            vec![2.0 + s, 0.0],
            vec![2.0, s],
            vec![2.0, -s],
        ];
        let ds = LabeledDataset::new(
            Matrix::from_rows(&rows).unwrap(),
            vec![1, 1, 1, 1, 2, 2, 2, 2],
            2,
        )
        .unwrap();
        let m = class_moments(&ds, true).unwrap();
        assert!(m.within.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-14);
        let q = lda_base(&ds).unwrap();
        assert!(q.matrix().sub(&m.between).unwrap().max_abs() < 1e-14);
        assert!((q.trace() - 4.0).abs() < 1e-14);
    }
}
