#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sharp_ssl::{LabeledDataset, Matrix, SeededRng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    SeededRng::new(seed).stream(1000, 0, 0)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// `GᵀG / rows + ridge·I`: symmetric positive definite.
pub fn random_spd(rng: &mut impl Rng, d: usize, ridge: f64) -> Matrix {
    let g = gaussian_matrix(rng, d + 3, d);
    let mut s = g
        .transpose()
        .matmul(&g)
        .unwrap()
        .scale(1.0 / (d + 3) as f64);
    for i in 0..d {
        s[(i, i)] += ridge;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let v = s[(i, j)];
            s[(j, i)] = v;
        }
    }
    s
}

pub fn to_na(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Gaussian features with class-dependent shifts; each label is observed
/// with probability `gamma`. Every class gets at least one labeled row
/// when `gamma > 0`.
pub fn random_dataset(
    rng: &mut impl Rng,
    n: usize,
    d: usize,
    k: usize,
    gamma: f64,
) -> LabeledDataset {
    let mut x = gaussian_matrix(rng, n, d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % k + 1;
        for j in 0..d {
            x[(i, j)] += 1.5 * ((class * (j + 1)) % 3) as f64;
        }
        let observed = i < k && gamma > 0.0 || rng.random::<f64>() < gamma;
        y.push(if observed { class } else { 0 });
    }
    LabeledDataset::new(x, y, k).unwrap()
}

/// Random permutation of `0..n`.
pub fn permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Dataset whose column `j` is moved to position `perm[j]`.
pub fn permute_columns(ds: &LabeledDataset, perm: &[usize]) -> LabeledDataset {
    let (n, p) = (ds.n(), ds.p());
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, perm[j])] = ds.x()[(i, j)];
        }
    }
    LabeledDataset::new(x, ds.labels().to_vec(), ds.k()).unwrap()
}
