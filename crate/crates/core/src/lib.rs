//! Variable selection and label assignment for high-dimensional Gaussian
//! mixtures with few (or no) labels, via ensembles of axis-aligned random
//! projections.
//!
//! ```
//! use sharp_ssl::{
//!     build_two_class_spec, fit_predict, misclustering_rate, sample, BaseKind, EmConfig,
//!     FinalMethod, SeededRng, SharpConfig,
//! };
//!
//! let spec = build_two_class_spec(20, 2, 6.0).unwrap().with_gamma(0.2);
//! let mut rng = SeededRng::new(7).stream(0, 0, 0);
//! let (ds, truth) = sample(&spec, 200, &mut rng).unwrap();
//!
//! let config = SharpConfig {
//!     groups: 20,
//!     per_group: 10,
//!     ..SharpConfig::new(2, 2, BaseKind::Lda { zero_if_singular: true }, 1)
//! };
//! let fit = fit_predict(&ds, &config, &FinalMethod::Em(EmConfig::default())).unwrap();
//! assert_eq!(fit.selected, vec![0, 1]);
//! let err = misclustering_rate(&truth, fit.final_labels.as_ref().unwrap()).unwrap();
//! assert!(err < 0.05);
//! ```

pub mod base_em;
pub mod base_lda;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod projections;
pub mod selection;
pub mod synth;

pub use base_em::{run_em_multistart, run_em_single, EmConfig, EmFit, EmInit, EmParams, EmVariant};
pub use base_lda::{lda_base, LdaClassifier, WhitenedBetween};
pub use dataset::{LabeledDataset, UNLABELED};
pub use error::{Error, ErrorKind, Result};
pub use eval::{misclustering_rate, population_diagnostics, recovery, sign_loss, Recovery};
pub use linalg::Matrix;
pub use projections::{Projection, SeededRng};
pub use selection::{
    fit_predict, select_variables, BaseKind, FinalMethod, SelectionResult, SharpConfig, TieBreak,
};
pub use synth::{
    bayes_risk, build_figure2_spec, build_two_class_spec, sample, CovarianceKind, MixtureSpec,
};
