//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sharp_ssl::base_em::{e_step, init_uniform_sphere, m_step, run_em_single, symmetric_update};
use sharp_ssl::eval::{
    misclustering_rate_enumerate, misclustering_rate_hungarian, population_between,
    population_whitened_between,
};
use sharp_ssl::linalg::{max_principal_angle_sine, op_norm, orthonormalize};
use sharp_ssl::projections::{domain, ProjectionSampler, UniformSampler};
use sharp_ssl::selection::{select_variables_with, PopulationOracle};
use sharp_ssl::{
    bayes_risk, build_figure2_spec, build_two_class_spec, fit_predict, lda_base,
    misclustering_rate, recovery, run_em_multistart, sample, sign_loss, BaseKind, CovarianceKind,
    EmConfig, EmInit, EmVariant, FinalMethod, LabeledDataset, MixtureSpec, SeededRng, SharpConfig,
    UNLABELED,
};

// Criterion 1 and 2.
const FIG2_P: usize = 200;
const FIG2_N: usize = 250;
const FIG2_GAMMA: f64 = 0.05;
const FIG2_SNR: f64 = 4.0;
const FIG2_REPS: u64 = 20;
const BAYES_SLACK: f64 = 0.05;
const BAYES_DRAWS: usize = 1_000_000;
const MIN_RECOVERIES: usize = 18;
// Criterion 3.
const ORACLE_P: usize = 20;
const ORACLE_SEEDS: u64 = 200;
const MIN_ORACLE_RECOVERIES: usize = 199;
// Criterion 4.
const TANH_DATASETS: u64 = 50;
const TANH_STEPS: usize = 20;
const TANH_TOL: f64 = 1e-12;
// Criterion 5.
const EQUIVARIANCE_INSTANCES: u64 = 20;
const EQUIVARIANCE_TOL: f64 = 1e-10;
// Criterion 6.
const RATE_REPS: u64 = 50;
const RATE_RATIO: (f64, f64) = (1.4, 2.9);
// Criterion 7.
const INTERP_REPS: u64 = 50;
const INTERP_N: usize = 4000;
const INTERP_SLACK: f64 = 0.02;
// Criterion 8.
const METRIC_INSTANCES: u64 = 1000;
// Criterion 9.
const ANGLE_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, start: Instant, outcome: &Outcome) {
    println!(
        "AC{id} {name}: {} ({}; {:.1}s)",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        start.elapsed().as_secs_f64()
    );
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Misclustering over the rows whose label was not observed.
fn unlabeled_misclustering(ds: &LabeledDataset, truth: &[usize], pred: &[usize]) -> f64 {
    let rows: Vec<usize> = (0..ds.n())
        .filter(|&i| ds.labels()[i] == UNLABELED)
        .collect();
    let t: Vec<usize> = rows.iter().map(|&i| truth[i]).collect();
    let p: Vec<usize> = rows.iter().map(|&i| pred[i]).collect();
    misclustering_rate(&t, &p).unwrap()
}

fn criteria_1_and_2() -> (Outcome, Outcome) {
    let em = EmConfig {
        starts: 1,
        iterations: 100,
        variant: EmVariant::General,
        init: EmInit::Hierarchical,
        ..EmConfig::default()
    };
    let spec = build_figure2_spec(
        FIG2_P,
        FIG2_SNR,
        CovarianceKind::Isotropic,
        &mut common::rng(0),
    )
    .unwrap()
    .with_gamma(FIG2_GAMMA);
    let truth_set = spec.mean_support();
    let bayes = bayes_risk(
        &spec,
        BAYES_DRAWS,
        &mut SeededRng::new(1).stream(domain::BAYES, 0, 0),
    )
    .unwrap();
    let mut errors = Vec::new();
    let mut recovered = 0;
    for rep in 0..FIG2_REPS {
        let master = SeededRng::new(rep);
        let (ds, truth) =
            sample(&spec, FIG2_N, &mut master.stream(domain::SIMULATION, 0, 0)).unwrap();
        let config = SharpConfig::new(3, 3, BaseKind::Em(em.clone()), rep);
        let fit = fit_predict(&ds, &config, &FinalMethod::Em(em.clone())).unwrap();
        errors.push(unlabeled_misclustering(
            &ds,
            &truth,
            fit.final_labels.as_ref().unwrap(),
        ));
        if recovery(&fit.selected, &truth_set).contains {
            recovered += 1;
        }
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    (
        Outcome {
            pass: mean <= bayes.estimate + BAYES_SLACK,
            detail: format!(
                "mean misclustering {mean:.4} vs Bayes risk {:.4} ± {:.4} + {BAYES_SLACK}",
                bayes.estimate, bayes.std_error
            ),
        },
        Outcome {
            pass: recovered >= MIN_RECOVERIES,
            detail: format!("S0 recovered in {recovered}/{FIG2_REPS} reps, need {MIN_RECOVERIES}"),
        },
    )
}

/// Isotropic three-class spec with the signal moved to the last three
/// coordinates (so index tie-breaking cannot favour it).
fn oracle_spec() -> MixtureSpec {
    let mut spec = build_figure2_spec(
        ORACLE_P,
        2.0,
        CovarianceKind::Isotropic,
        &mut common::rng(3),
    )
    .unwrap();
    for m in &mut spec.means {
        m.rotate_left(3);
    }
    spec
}

fn criterion_3() -> Outcome {
    let spec = oracle_spec();
    let s0 = spec.mean_support();
    assert_eq!(s0, vec![ORACLE_P - 3, ORACLE_P - 2, ORACLE_P - 1]);
    let learner = PopulationOracle {
        sigma_w: spec.sigma_w.clone(),
        sigma_b: population_between(&spec),
    };
    let ds = common::random_dataset(&mut common::rng(4), 30, ORACLE_P, 3, 1.0);
    let mut recovered = 0;
    let mut groups_with_s0 = 0;
    let mut violations = 0;
    for seed in 0..ORACLE_SEEDS {
        let config = SharpConfig {
            groups: 200,
            per_group: 20,
            ..SharpConfig::new(
                3,
                3,
                BaseKind::Lda {
                    zero_if_singular: false,
                },
                seed,
            )
        };
        let sampler = UniformSampler {
            rng: SeededRng::new(seed),
            p: ORACLE_P,
            d: 3,
        };
        let res = select_variables_with(&ds, &config, &learner, &sampler).unwrap();
        if recovery(&res.selected, &s0).contains {
            recovered += 1;
        }
        for w in &res.importance.winners {
            let has_s0_cell = (0..config.per_group)
                .any(|b| sampler.sample(w.group, b).unwrap().indices() == s0.as_slice());
            if has_s0_cell {
                groups_with_s0 += 1;
                if w.projection.indices() != s0.as_slice() {
                    violations += 1;
                }
            }
        }
    }
    Outcome {
        pass: recovered >= MIN_ORACLE_RECOVERIES && violations == 0 && groups_with_s0 > 0,
        detail: format!(
            "S0 ⊆ Ŝ in {recovered}/{ORACLE_SEEDS} seeds (need {MIN_ORACLE_RECOVERIES}); \
             {violations} of {groups_with_s0} groups holding an S0 cell picked another cell"
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..TANH_DATASETS {
        let mut r = common::rng(400 + i);
        let d = r.random_range(1..=5);
        let n = r.random_range(20..=200);
        let gamma: f64 = r.random();
        let snr = r.random_range(0.5..4.0);
        let spec = build_two_class_spec(d, d, snr).unwrap().with_gamma(gamma);
        let (ds, _) = sample(&spec, n, &mut r).unwrap();
        let start = init_uniform_sphere(&mut r, d, 1.0).unwrap();
        let mut generic = start.clone();
        let mut direct = start.means[1].clone();
        for t in 1..=TANH_STEPS {
            let l = e_step(&ds, &generic).unwrap();
            generic = m_step(
                &ds,
                &l,
                EmVariant::SymmetricTwoComponent,
                Some(&generic),
                None,
            )
            .unwrap();
            direct = symmetric_update(&ds, &direct);
            for (a, b) in generic.means[1].iter().zip(&direct) {
                worst = worst.max((a - b).abs());
            }
            if t == TANH_STEPS {
                let config = EmConfig {
                    iterations: TANH_STEPS,
                    variant: EmVariant::SymmetricTwoComponent,
                    ..EmConfig::default()
                };
                let fit = run_em_single(&ds, &start, &config).unwrap();
                for (a, b) in fit.params.means[1].iter().zip(&direct) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    Outcome {
        pass: worst <= TANH_TOL,
        detail: format!("max |generic − tanh recursion| = {worst:.2e} over {TANH_DATASETS} datasets, tol {TANH_TOL:.0e}"),
    }
}

fn criterion_5() -> Outcome {
    let mut worst_lda: f64 = 0.0;
    let mut worst_em: f64 = 0.0;
    let em = EmConfig {
        starts: 3,
        iterations: 50,
        ..EmConfig::default()
    };
    for i in 0..EQUIVARIANCE_INSTANCES {
        let mut r = common::rng(500 + i);
        let d = r.random_range(2..=6);
        let k = r.random_range(2..=3);
        let ds = common::random_dataset(&mut r, 80, d, k, 0.3);
        let perm = common::permutation(&mut r, d);
        let moved = common::permute_columns(&ds, &perm);
        let a = lda_base(&ds).unwrap();
        let b = lda_base(&moved).unwrap();
        worst_lda = worst_lda.max(
            b.matrix()
                .sub(&a.matrix().permute_symmetric(&perm))
                .unwrap()
                .max_abs(),
        );
        let seed = SeededRng::new(i);
        let a = run_em_multistart(&ds, &em, &seed).unwrap().q;
        let b = run_em_multistart(&moved, &em, &seed).unwrap().q;
        worst_em = worst_em.max(
            b.matrix()
                .sub(&a.matrix().permute_symmetric(&perm))
                .unwrap()
                .max_abs(),
        );
    }
    Outcome {
        pass: worst_lda <= EQUIVARIANCE_TOL && worst_em <= EQUIVARIANCE_TOL,
        detail: format!(
            "max deviation LDA {worst_lda:.2e}, EM {worst_em:.2e} over {EQUIVARIANCE_INSTANCES} instances, tol {EQUIVARIANCE_TOL:.0e}"
        ),
    }
}

fn criterion_6() -> Outcome {
    let spec = build_two_class_spec(3, 2, 2.0).unwrap().with_gamma(1.0);
    let q = population_whitened_between(&spec).unwrap();
    let median_error = |n: usize| {
        let mut errs: Vec<f64> = (0..RATE_REPS)
            .map(|rep| {
                let (ds, _) = sample(&spec, n, &mut common::rng(600 + rep * 7 + n as u64)).unwrap();
                op_norm(&lda_base(&ds).unwrap().matrix().sub(&q).unwrap()).unwrap()
            })
            .collect();
        median(&mut errs)
    };
    let (small, large) = (median_error(2000), median_error(8000));
    let ratio = small / large;
    Outcome {
        pass: (RATE_RATIO.0..=RATE_RATIO.1).contains(&ratio),
        detail: format!(
            "median ‖Q̂−Q‖_op {small:.4} (n=2000) / {large:.4} (n=8000) = {ratio:.3}, need [{}, {}]",
            RATE_RATIO.0, RATE_RATIO.1
        ),
    }
}

fn criterion_7() -> Outcome {
    let spec = build_two_class_spec(3, 3, 1.5).unwrap();
    let mu_star = spec.means[1].clone();
    let gammas = [0.0, 0.05, 0.3];
    let config = EmConfig {
        starts: 1,
        iterations: 100,
        variant: EmVariant::SymmetricTwoComponent,
        // Hierarchical start, as in the two-class benchmark. A sphere start on the
        // wrong side of the origin can settle near -μ* once a few labels are
        // present, which is a different question.
        init: EmInit::Hierarchical,
        ..EmConfig::default()
    };
    let mut losses = vec![Vec::new(); gammas.len()];
    for rep in 0..INTERP_REPS {
        let master = SeededRng::new(700 + rep);
        let (unlabeled, truth) = sample(
            &spec,
            INTERP_N,
            &mut master.stream(domain::SIMULATION, 0, 0),
        )
        .unwrap();
        // Nested label sets: row i is revealed at level γ when u_i < γ.
        let mut r = master.stream(domain::SIMULATION, 1, 0);
        let u: Vec<f64> = (0..INTERP_N).map(|_| r.random()).collect();
        for (g, &gamma) in gammas.iter().enumerate() {
            let labels = truth
                .iter()
                .zip(&u)
                .map(|(&t, &ui)| if ui < gamma { t } else { UNLABELED })
                .collect();
            let ds = LabeledDataset::new(unlabeled.x().clone(), labels, 2).unwrap();
            let fit = run_em_multistart(&ds, &config, &master).unwrap();
            losses[g].push(sign_loss(&fit.params.means[1], &mu_star).unwrap());
        }
    }
    let med: Vec<f64> = losses.iter_mut().map(|l| median(l)).collect();
    let gap_a = med[0] - med[1];
    let gap_b = med[1] - med[2];
    Outcome {
        pass: gap_a >= -INTERP_SLACK && gap_b >= -INTERP_SLACK,
        detail: format!(
            "median sign loss γ=0: {:.4}, γ=0.05: {:.4}, γ=0.3: {:.4}; slack {INTERP_SLACK}",
            med[0], med[1], med[2]
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut mismatches = 0;
    for i in 0..METRIC_INSTANCES {
        let mut r = common::rng(800 + i);
        let k = r.random_range(1..=6);
        let n = r.random_range(1..=30);
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(1..=k)).collect();
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(1..=k)).collect();
        let h = misclustering_rate_hungarian(&truth, &pred, k).unwrap();
        let b = misclustering_rate_enumerate(&truth, &pred, k).unwrap();
        if h != b {
            mismatches += 1;
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches in {METRIC_INSTANCES} instances"),
    }
}

fn criterion_9() -> Outcome {
    let mut r = common::rng(900);
    let p = 10;
    let sigma_w = common::random_spd(&mut r, p, 0.1);
    let means: Vec<Vec<f64>> = (0..3)
        .map(|_| common::gaussian_matrix(&mut r, 1, p).into_vec())
        .collect();
    let spec = MixtureSpec {
        k: 3,
        p,
        priors: vec![1.0 / 3.0; 3],
        means,
        sigma_w,
        gamma: 0.0,
        s0: p,
    };
    // Independent eigenvectors: Q = L⁻ᵀ (L⁻¹ Σ_b L⁻ᵀ) Lᵀ, so Q's eigenvectors
    // are L⁻ᵀ u for the symmetric eigenvectors u.
    let sw = common::to_na(&spec.sigma_w);
    let sb = common::to_na(&population_between(&spec));
    let l = sw.clone().cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let s = &linv * &sb * linv.transpose();
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top: Vec<Vec<f64>> = order[..2]
        .iter()
        .map(|&j| {
            let v: DVector<f64> = linv.transpose() * eig.eigenvectors.column(j);
            v.iter().copied().collect()
        })
        .collect();
    let nu: DVector<f64> = spec.means.iter().fold(DVector::zeros(p), |acc, m| {
        acc + DVector::from_row_slice(m) / 3.0
    });
    let sw_inv: DMatrix<f64> = sw.try_inverse().unwrap();
    let directions: Vec<Vec<f64>> = spec
        .means
        .iter()
        .map(|m| {
            (&sw_inv * (DVector::from_row_slice(m) - &nu))
                .iter()
                .copied()
                .collect()
        })
        .collect();
    let span_eig = orthonormalize(&top, 1e-12);
    let span_dir = orthonormalize(&directions, 1e-8);
    // Column space of the library's Q must coincide as well.
    let q = population_whitened_between(&spec).unwrap();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| q.column(j)).collect();
    let span_q = orthonormalize(&cols, 1e-8);
    let angle = max_principal_angle_sine(&span_eig, &span_dir);
    let angle_q = if span_q.len() == 2 {
        max_principal_angle_sine(&span_dir, &span_q)
    } else {
        f64::INFINITY
    };
    let third = eig.eigenvalues[order[2]].abs() / eig.eigenvalues[order[0]];
    Outcome {
        pass: span_dir.len() == 2 && angle < ANGLE_TOL && angle_q < ANGLE_TOL,
        detail: format!(
            "sin θ_max = {angle:.2e} (eigenspace vs directions), {angle_q:.2e} (Q columns); \
             third eigenvalue ratio {third:.1e}; tol {ANGLE_TOL:.0e}"
        ),
    }
}

/// `cargo test --test acceptance -- 3 8` runs only the listed criteria.
fn main() {
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |id: u32| only.is_empty() || only.contains(&id);
    let mut all = true;
    if wanted(1) || wanted(2) {
        let start = Instant::now();
        let (o1, o2) = criteria_1_and_2();
        report(1, "near-Bayes clustering", start, &o1);
        report(2, "signal recovery", start, &o2);
        all &= o1.pass && o2.pass;
    }
    let rest: [(u32, &str, fn() -> Outcome); 7] = [
        (3, "oracle-base selection", criterion_3),
        (4, "EM closed-form equivalence", criterion_4),
        (5, "permutation equivariance", criterion_5),
        (6, "LDA parametric rate", criterion_6),
        (7, "semi-supervised interpolation", criterion_7),
        (8, "metric oracles", criterion_8),
        (9, "discriminant eigenspace", criterion_9),
    ];
    for (id, name, f) in rest {
        if wanted(id) {
            let start = Instant::now();
            let o = f();
            report(id, name, start, &o);
            all &= o.pass;
        }
    }
    if !all {
        std::process::exit(1);
    }
}
