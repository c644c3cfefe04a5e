//! Axis-aligned random projections.
//!
//! A projection keeps `d` of the `p` original coordinates. Base learners are
//! permutation equivariant, so only the set of kept coordinates matters and
//! projections are stored as sorted index sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base_lda::WhitenedBetween;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Stream domains, so that different consumers of one master seed never
/// share random numbers.
pub mod domain {
    pub const PROJECTION: u64 = 1;
    pub const BASE_LEARNER: u64 = 2;
    pub const EM_CHAIN: u64 = 3;
    pub const FINAL: u64 = 4;
    pub const TIE_BREAK: u64 = 5;
    pub const SIMULATION: u64 = 6;
    pub const BAYES: u64 = 7;
    pub const SPEC: u64 = 8;
}

/// Master seed from which independent keyed substreams are derived.
///
/// The substream for a key depends only on `(seed, key)`, never on the order
/// in which substreams are requested, so parallel sweeps reproduce serial
/// ones bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    pub seed: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed }
    }

    /// Generator for the substream `(domain, a, b)`.
    pub fn stream(&self, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
        let mut state = self.seed;
        let mut mix = splitmix64(&mut state);
        for word in [domain, a, b] {
            state ^= word.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ mix;
            mix = splitmix64(&mut state);
        }
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }

    /// Child master seed for nested procedures (e.g. EM chains inside a cell).
    pub fn child(&self, domain: u64, a: u64, b: u64) -> SeededRng {
        SeededRng::new(self.stream(domain, a, b).random())
    }
}

/// A sorted set of `d` distinct coordinates out of `p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Projection {
    indices: Vec<usize>,
    p: usize,
}

impl Projection {
    /// Sorts and validates the given coordinates.
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() || indices.len() > p {
            return Err(Error::InvalidDimension(format!(
                "projection dimension {} must lie in 1..={p}",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDimension("repeated projection index".into()));
        }
        if indices[indices.len() - 1] >= p {
            return Err(Error::InvalidDimension(format!(
                "projection index {} out of range for p = {p}",
                indices[indices.len() - 1]
            )));
        }
        Ok(Projection { indices, p })
    }

    pub fn full(p: usize) -> Result<Self> {
        Projection::new((0..p).collect(), p)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn d(&self) -> usize {
        self.indices.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

/// Uniform random `d`-subset of `0..p` by a partial Fisher–Yates shuffle.
pub fn sample_projection<R: Rng + ?Sized>(rng: &mut R, p: usize, d: usize) -> Result<Projection> {
    if d == 0 || d > p {
        return Err(Error::InvalidDimension(format!(
            "projection dimension d = {d} must lie in 1..={p}"
        )));
    }
    let mut pool: Vec<usize> = (0..p).collect();
    for i in 0..d {
        let j = rng.random_range(i..p);
        pool.swap(i, j);
    }
    pool.truncate(d);
    Projection::new(pool, p)
}

/// Source of the projection for cell `(a, b)` of the sweep.
pub trait ProjectionSampler: Sync {
    fn sample(&self, a: usize, b: usize) -> Result<Projection>;
}

/// Independent uniform projections keyed by `(a, b)`.
#[derive(Debug, Clone, Copy)]
pub struct UniformSampler {
    pub rng: SeededRng,
    pub p: usize,
    pub d: usize,
}

impl ProjectionSampler for UniformSampler {
    fn sample(&self, a: usize, b: usize) -> Result<Projection> {
        let mut rng = self.rng.stream(domain::PROJECTION, a as u64, b as u64);
        sample_projection(&mut rng, self.p, self.d)
    }
}

/// Maps another sampler's draws through a coordinate permutation
/// (`j -> perm[j]`). Used to compare runs on column-permuted data.
#[derive(Debug, Clone)]
pub struct PermutedSampler<S> {
    pub inner: S,
    pub perm: Vec<usize>,
}

impl<S: ProjectionSampler> ProjectionSampler for PermutedSampler<S> {
    fn sample(&self, a: usize, b: usize) -> Result<Projection> {
        let base = self.inner.sample(a, b)?;
        Projection::new(
            base.indices().iter().map(|&j| self.perm[j]).collect(),
            base.p(),
        )
    }
}

/// Restricts a dataset to the projection's coordinates, labels untouched.
pub fn project(ds: &LabeledDataset, pr: &Projection) -> Result<LabeledDataset> {
    if pr.p() != ds.p() {
        return Err(Error::DimensionMismatch {
            expected: ds.p(),
            found: pr.p(),
        });
    }
    ds.select_columns(pr.indices())
}

/// Diagonal of `Pᵀ Q P`: the `k`-th diagonal entry of `q` placed at
/// coordinate `pr.indices()[k]`, zeros elsewhere.
pub fn back_project_diag(q: &WhitenedBetween, pr: &Projection, p: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; p];
    accumulate_back_projection(q.matrix(), pr, &mut out)?;
    Ok(out)
}

pub(crate) fn accumulate_back_projection(
    q: &Matrix,
    pr: &Projection,
    acc: &mut [f64],
) -> Result<()> {
    if q.rows() != pr.d() || q.cols() != pr.d() {
        return Err(Error::DimensionMismatch {
            expected: pr.d(),
            found: q.rows(),
        });
    }
    if acc.len() != pr.p() {
        return Err(Error::DimensionMismatch {
            expected: pr.p(),
            found: acc.len(),
        });
    }
    for (k, &j) in pr.indices().iter().enumerate() {
        acc[j] += q[(k, k)];
    }
    Ok(())
}
