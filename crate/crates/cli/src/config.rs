//! TOML config file and its merge with command-line flags.
//!
//! Every key mirrors a flag (`per_group` ↔ `--per-group`); a flag given on
//! the command line wins over the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sharp_ssl::base_em::DEFAULT_COVARIANCE_FLOOR;
use sharp_ssl::{BaseKind, EmConfig, EmInit, EmVariant, FinalMethod, SharpConfig, TieBreak};

use crate::args::{
    BaseArg, DataArgs, EnsembleArgs, FigureArg, FinalArg, InitArg, SimulateArgs, SingularArg,
    TieBreakArg, VariantArg,
};
use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub em: EmSection,
    #[serde(default, rename = "final")]
    pub final_: FinalSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub k: Option<usize>,
    pub label_column: Option<String>,
    pub unlabeled_token: Option<String>,
    pub truth: Option<String>,
    pub support: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub d: Option<usize>,
    pub l: Option<usize>,
    pub groups: Option<usize>,
    pub per_group: Option<usize>,
    pub base: Option<BaseArg>,
    pub seed: Option<u64>,
    pub tie_break: Option<TieBreakArg>,
    pub lda_singular: Option<SingularArg>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSection {
    pub iters: Option<usize>,
    pub starts: Option<usize>,
    pub init: Option<InitArg>,
    pub radius: Option<f64>,
    pub variant: Option<VariantArg>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalSection {
    pub method: Option<FinalArg>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub figure: Option<FigureArg>,
    pub spec: Option<PathBuf>,
    pub reps: Option<usize>,
    pub snr: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub gamma: Option<Vec<f64>>,
    pub p: Option<usize>,
    pub s: Option<usize>,
    pub bayes_draws: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("--config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("--config {}: {e}", path.display())))
    }
}

/// Fully resolved ensemble settings, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSettings {
    pub d: usize,
    pub l: usize,
    pub groups: usize,
    pub per_group: usize,
    pub base: BaseArg,
    pub seed: u64,
    pub tie_break: TieBreakArg,
    pub lda_singular: SingularArg,
    pub em: EmSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmSettings {
    pub iters: usize,
    pub starts: usize,
    pub init: InitArg,
    pub radius: f64,
    pub variant: VariantArg,
    pub tol: Option<f64>,
}

impl EmSettings {
    fn resolve(flags: &EnsembleArgs, file: &EmSection) -> Result<Self, CliError> {
        let s = EmSettings {
            iters: flags.em_iters.or(file.iters).unwrap_or(100),
            starts: flags.em_starts.or(file.starts).unwrap_or(1),
            init: flags.em_init.or(file.init).unwrap_or(InitArg::Hier),
            radius: flags.em_radius.or(file.radius).unwrap_or(1.0),
            variant: flags
                .em_variant
                .or(file.variant)
                .unwrap_or(VariantArg::General),
            tol: flags.em_tol.or(file.tol),
        };
        if s.iters == 0 {
            return Err(CliError::Config("--em-iters must be at least 1".into()));
        }
        if s.starts == 0 {
            return Err(CliError::Config("--em-starts must be at least 1".into()));
        }
        if !(s.radius.is_finite() && s.radius > 0.0) {
            return Err(CliError::Config(format!(
                "--em-radius must be positive, got {}",
                s.radius
            )));
        }
        if let Some(tol) = s.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Config(format!(
                    "--em-tol must be positive, got {tol}"
                )));
            }
        }
        Ok(s)
    }

    pub fn to_config(&self) -> EmConfig {
        EmConfig {
            starts: self.starts,
            iterations: self.iters,
            variant: match self.variant {
                VariantArg::General => EmVariant::General,
                VariantArg::Symmetric => EmVariant::SymmetricTwoComponent,
            },
            init: match self.init {
                InitArg::Hier => EmInit::Hierarchical,
                InitArg::Sphere => EmInit::UniformSphere {
                    radius: self.radius,
                },
            },
            early_stop_tol: self.tol,
            covariance_floor: Some(DEFAULT_COVARIANCE_FLOOR),
        }
    }
}

impl EnsembleSettings {
    /// `d` and `l` fall back to `default_dim` when neither flag nor file sets
    /// them; `None` there makes them mandatory.
    pub fn resolve(
        flags: &EnsembleArgs,
        file: &ConfigFile,
        default_dim: Option<usize>,
    ) -> Result<Self, CliError> {
        let sel = &file.selection;
        let missing = |flag: &str| {
            CliError::Config(format!(
                "{flag} is required (flag or [selection] in --config)"
            ))
        };
        let d = flags
            .d
            .or(sel.d)
            .or(default_dim)
            .ok_or_else(|| missing("--d"))?;
        let l = flags
            .l
            .or(sel.l)
            .or(default_dim)
            .ok_or_else(|| missing("--l"))?;
        let groups = flags
            .groups
            .or(sel.groups)
            .unwrap_or(sharp_ssl::selection::DEFAULT_GROUPS);
        let per_group = flags
            .per_group
            .or(sel.per_group)
            .unwrap_or(sharp_ssl::selection::DEFAULT_PER_GROUP);
        if groups == 0 {
            return Err(CliError::Config("--groups must be at least 1".into()));
        }
        if per_group == 0 {
            return Err(CliError::Config("--per-group must be at least 1".into()));
        }
        Ok(EnsembleSettings {
            d,
            l,
            groups,
            per_group,
            base: flags.base.or(sel.base).unwrap_or(BaseArg::Em),
            seed: flags.seed.or(sel.seed).unwrap_or(0),
            tie_break: flags
                .tie_break
                .or(sel.tie_break)
                .unwrap_or(TieBreakArg::Smallest),
            lda_singular: flags
                .lda_singular
                .or(sel.lda_singular)
                .unwrap_or(SingularArg::Zero),
            em: EmSettings::resolve(flags, &file.em)?,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnsembleSettings {
            seed,
            ..self.clone()
        }
    }

    pub fn to_config(&self) -> SharpConfig {
        let base = match self.base {
            BaseArg::Lda => BaseKind::Lda {
                zero_if_singular: self.lda_singular == SingularArg::Zero,
            },
            BaseArg::Em => BaseKind::Em(self.em.to_config()),
        };
        SharpConfig {
            groups: self.groups,
            per_group: self.per_group,
            dim: self.d,
            select: self.l,
            base,
            seed: self.seed,
            tie_break: match self.tie_break {
                TieBreakArg::Smallest => TieBreak::SmallestIndex,
                TieBreakArg::Random => TieBreak::Random,
            },
        }
    }

    /// Final-stage method; EM reuses the base learner's EM settings.
    pub fn final_method(&self, method: FinalArg) -> FinalMethod {
        match method {
            FinalArg::Em => FinalMethod::Em(self.em.to_config()),
            FinalArg::Lda => FinalMethod::Lda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSettings {
    pub input: PathBuf,
    pub k: Option<usize>,
    pub label_column: Option<String>,
    pub unlabeled_token: String,
    pub truth: Option<String>,
    pub support: Option<Vec<usize>>,
}

impl DataSettings {
    pub fn resolve(flags: &DataArgs, file: &DataSection) -> Self {
        let label = flags
            .label_column
            .clone()
            .or_else(|| file.label_column.clone())
            .unwrap_or_else(|| "label".into());
        DataSettings {
            input: flags.input.clone(),
            k: flags.k.or(file.k),
            label_column: (label != "none").then_some(label),
            unlabeled_token: flags
                .unlabeled_token
                .clone()
                .or_else(|| file.unlabeled_token.clone())
                .unwrap_or_else(|| "0".into()),
            truth: flags.truth.clone().or_else(|| file.truth.clone()),
            support: flags.support.clone().or_else(|| file.support.clone()),
        }
    }
}

pub fn resolve_final(flag: Option<FinalArg>, file: &FinalSection) -> FinalArg {
    flag.or(file.method).unwrap_or(FinalArg::Em)
}

/// Simulation grid after merging flags, file and per-benchmark defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSettings {
    pub figure: Option<FigureArg>,
    pub spec: Option<PathBuf>,
    pub reps: usize,
    pub snr: Vec<f64>,
    pub n: Vec<usize>,
    /// Empty means "use the γ of the --spec file".
    pub gamma: Vec<f64>,
    pub p: usize,
    pub s: usize,
    pub bayes_draws: usize,
}

impl SimulateSettings {
    pub fn resolve(flags: &SimulateArgs, file: &SimulateSection) -> Result<Self, CliError> {
        let figure = flags.figure.or(if flags.spec.is_some() {
            None
        } else {
            file.figure
        });
        let spec = flags.spec.clone().or(if flags.figure.is_some() {
            None
        } else {
            file.spec.clone()
        });
        match (&figure, &spec) {
            (None, None) => {
                return Err(CliError::Config(
                    "one of --figure or --spec is required".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "--figure and --spec are mutually exclusive".into(),
                ))
            }
            _ => {}
        }
        let snr_given = flags.snr.clone().or_else(|| file.snr.clone());
        if spec.is_some() && snr_given.is_some() {
            return Err(CliError::Config(
                "--snr only applies to --figure benchmarks; a spec file fixes its means".into(),
            ));
        }
        let s = SimulateSettings {
            reps: flags.reps.or(file.reps).unwrap_or(20),
            snr: if spec.is_some() {
                Vec::new()
            } else {
                snr_given.unwrap_or_else(|| vec![4.0])
            },
            n: flags
                .n
                .clone()
                .or_else(|| file.n.clone())
                .unwrap_or_else(|| vec![250]),
            gamma: flags
                .gamma
                .clone()
                .or_else(|| file.gamma.clone())
                .unwrap_or_else(|| {
                    if spec.is_some() {
                        Vec::new()
                    } else {
                        vec![0.05]
                    }
                }),
            p: flags.p.or(file.p).unwrap_or(200),
            s: flags.s.or(file.s).unwrap_or(3),
            bayes_draws: flags.bayes_draws.or(file.bayes_draws).unwrap_or(100_000),
            figure,
            spec,
        };
        if s.reps == 0 {
            return Err(CliError::Config("--reps must be at least 1".into()));
        }
        if s.bayes_draws == 0 {
            return Err(CliError::Config("--bayes-draws must be at least 1".into()));
        }
        if let Some(&bad) = s.snr.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(CliError::Config(format!(
                "--snr values must be non-negative, got {bad}"
            )));
        }
        if let Some(&bad) = s.gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(CliError::Config(format!(
                "--gamma values must lie in [0, 1], got {bad}"
            )));
        }
        if s.n.is_empty() || s.n.contains(&0) {
            return Err(CliError::Config("--n values must be positive".into()));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: ConfigFile = toml::from_str(
            "[selection]\nd = 4\nl = 6\ngroups = 10\nbase = \"lda\"\n[em]\niters = 7\n",
        )
        .unwrap();
        let flags = EnsembleArgs {
            l: Some(2),
            em_iters: Some(3),
            ..EnsembleArgs::default()
        };
        let s = EnsembleSettings::resolve(&flags, &file, None).unwrap();
        assert_eq!((s.d, s.l, s.groups, s.per_group), (4, 2, 10, 75));
        assert_eq!(s.base, BaseArg::Lda);
        assert_eq!(s.em.iters, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ConfigFile>("[selection]\nbogus = 1\n").is_err());
        assert!(toml::from_str::<ConfigFile>("[nope]\n").is_err());
    }

    #[test]
    fn missing_dimension_is_a_config_error() {
        let err = EnsembleSettings::resolve(&EnsembleArgs::default(), &ConfigFile::default(), None)
            .unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("--d")));
    }
}
