mod common;

use common::{permutation, permute_columns, random_dataset, rng};
use sharp_ssl::projections::{back_project_diag, PermutedSampler, Projection, UniformSampler};
use sharp_ssl::selection::{select_variables_with, PopulationOracle};
use sharp_ssl::{
    bayes_risk, build_two_class_spec, fit_predict, lda_base, misclustering_rate, sample,
    select_variables, BaseKind, EmConfig, Error, FinalMethod, Matrix, SeededRng, SharpConfig,
};

fn lda() -> BaseKind {
    BaseKind::Lda {
        zero_if_singular: false,
    }
}

fn small(
    dim: usize,
    select: usize,
    base: BaseKind,
    seed: u64,
    groups: usize,
    per_group: usize,
) -> SharpConfig {
    SharpConfig {
        groups,
        per_group,
        ..SharpConfig::new(dim, select, base, seed)
    }
}

fn oracle(diag: &[f64]) -> PopulationOracle {
    PopulationOracle {
        sigma_w: Matrix::identity(diag.len()),
        sigma_b: Matrix::from_diag(diag),
    }
}

fn dummy(p: usize) -> sharp_ssl::LabeledDataset {
    random_dataset(&mut rng(0), 2 * p + 10, p, 2, 1.0)
}

#[test]
fn full_projection_collapses_to_single_estimate() {
    let ds = random_dataset(&mut rng(1), 60, 4, 2, 0.5);
    let result = select_variables(&ds, &small(4, 2, lda(), 3, 5, 4)).unwrap();
    let diag = lda_base(&ds).unwrap().matrix().diagonal();
    for (w, d) in result.importance.weights.iter().zip(&diag) {
        assert!((w - d).abs() < 1e-12 * d.abs().max(1.0));
    }
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));
    let mut top: Vec<usize> = order[..2].to_vec();
    top.sort();
    assert_eq!(result.selected, top);
}

#[test]
fn single_group_is_its_winner() {
    let ds = random_dataset(&mut rng(2), 60, 8, 3, 0.5);
    let result = select_variables(&ds, &small(3, 3, lda(), 4, 1, 6)).unwrap();
    let w = &result.importance.winners[0];
    assert_eq!(
        result.importance.weights,
        back_project_diag(&w.q, &w.projection, 8).unwrap()
    );
}

#[test]
fn oracle_selects_the_two_signal_coordinates() {
    let p = 10;
    // Signal on the last coordinates so index tie-breaking cannot help.
    let mut diag = vec![0.0; p];
    diag[8] = 2.0;
    diag[9] = 1.0;
    let ds = dummy(p);
    let hits = (0..100)
        .filter(|&seed| {
            let config = small(2, 2, lda(), seed, 200, 10);
            let sampler = UniformSampler {
                rng: SeededRng::new(seed),
                p,
                d: 2,
            };
            select_variables_with(&ds, &config, &oracle(&diag), &sampler)
                .unwrap()
                .selected
                == vec![8, 9]
        })
        .count();
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn weights_live_on_winning_coordinates() {
    let ds = random_dataset(&mut rng(3), 80, 30, 2, 0.3);
    let result = select_variables(&ds, &small(3, 3, lda(), 5, 7, 5)).unwrap();
    let mut used = [false; 30];
    for w in &result.importance.winners {
        for &j in w.projection.indices() {
            used[j] = true;
        }
    }
    for (j, &w) in result.importance.weights.iter().enumerate() {
        assert!(w == 0.0 || used[j], "coordinate {j}");
    }
}

#[test]
fn oracle_weights_are_diagonal_times_inclusion_frequency() {
    let p = 12;
    let diag: Vec<f64> = (0..p)
        .map(|j| if j < 2 { 1.0 + j as f64 } else { 0.0 })
        .collect();
    let ds = dummy(p);
    let mut checked = 0;
    for seed in 0..30 {
        let config = small(4, 2, lda(), seed, 40, 30);
        let sampler = UniformSampler {
            rng: SeededRng::new(seed),
            p,
            d: 4,
        };
        let res = select_variables_with(&ds, &config, &oracle(&diag), &sampler).unwrap();
        let winners = &res.importance.winners;
        if !winners
            .iter()
            .all(|w| w.projection.indices().starts_with(&[0, 1]))
        {
            continue;
        }
        checked += 1;
        for j in 0..p {
            let count = winners
                .iter()
                .filter(|w| w.projection.indices().contains(&j))
                .count();
            let expected = diag[j] * count as f64 / 40.0;
            assert!((res.importance.weights[j] - expected).abs() < 1e-14);
        }
    }
    assert!(checked > 0);
}

fn equivariance_check(base: BaseKind, seed: u64) {
    let mut r = rng(100 + seed);
    let p = 9;
    let ds = random_dataset(&mut r, 60, p, 2, 0.2);
    let perm = permutation(&mut r, p);
    let config = small(3, 3, base, seed, 6, 5);
    let plain = UniformSampler {
        rng: SeededRng::new(seed),
        p,
        d: 3,
    };
    let permuted = PermutedSampler {
        inner: plain,
        perm: perm.clone(),
    };
    let a = select_variables_with(&ds, &config, &config.base, &plain).unwrap();
    let b = select_variables_with(
        &permute_columns(&ds, &perm),
        &config,
        &config.base,
        &permuted,
    )
    .unwrap();
    for j in 0..p {
        assert!((a.importance.weights[j] - b.importance.weights[perm[j]]).abs() < 1e-10);
    }
    let mut mapped: Vec<usize> = a.selected.iter().map(|&j| perm[j]).collect();
    mapped.sort();
    assert_eq!(mapped, b.selected);
}

#[test]
fn pipeline_is_permutation_equivariant() {
    for seed in 0..5 {
        equivariance_check(lda(), seed);
        equivariance_check(
            BaseKind::Em(EmConfig {
                iterations: 20,
                ..EmConfig::default()
            }),
            seed,
        );
    }
}

#[test]
fn identical_seed_identical_output() {
    let ds = random_dataset(&mut rng(4), 80, 12, 2, 0.1);
    let config = small(
        2,
        2,
        BaseKind::Em(EmConfig {
            iterations: 15,
            ..EmConfig::default()
        }),
        9,
        8,
        4,
    );
    let method = FinalMethod::Em(EmConfig::default());
    let a = fit_predict(&ds, &config, &method).unwrap();
    let b = fit_predict(&ds, &config, &method).unwrap();
    assert_eq!(a.importance.weights, b.importance.weights);
    assert_eq!(a.final_labels, b.final_labels);
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let c = pool.install(|| fit_predict(&ds, &config, &method).unwrap());
        assert_eq!(a.importance.weights, c.importance.weights);
        assert_eq!(a.final_labels, c.final_labels);
    }
}

#[test]
fn more_groups_recover_more_often() {
    let p = 20;
    let diag: Vec<f64> = (0..p).map(|j| if j >= p - 3 { 1.0 } else { 0.0 }).collect();
    let ds = dummy(p);
    let rate = |groups: usize| {
        (0..200u64)
            .filter(|&seed| {
                let config = small(3, 3, lda(), seed, groups, 1);
                let sampler = UniformSampler {
                    rng: SeededRng::new(seed),
                    p,
                    d: 3,
                };
                let res = select_variables_with(&ds, &config, &oracle(&diag), &sampler).unwrap();
                res.selected == vec![17, 18, 19]
            })
            .count()
    };
    // With one cell per group a signal coordinate is missed only if no
    // winner happens to contain it.
    let (few, many) = (rate(10), rate(150));
    assert!(many > few, "A=10: {few}/200, A=150: {many}/200");
}

#[test]
fn fully_labeled_lda_keeps_labels() {
    let spec = build_two_class_spec(10, 2, 3.0).unwrap().with_gamma(1.0);
    let (ds, truth) = sample(&spec, 100, &mut rng(5)).unwrap();
    let res = fit_predict(&ds, &small(2, 2, lda(), 1, 10, 5), &FinalMethod::Lda).unwrap();
    assert_eq!(res.final_labels.unwrap(), truth);
}

#[test]
fn separated_clusters_near_bayes() {
    let spec = build_two_class_spec(20, 2, 4.0).unwrap().with_gamma(0.1);
    let (ds, truth) = sample(&spec, 300, &mut rng(6)).unwrap();
    let config = small(2, 2, BaseKind::Em(EmConfig::default()), 2, 30, 20);
    let res = fit_predict(&ds, &config, &FinalMethod::Em(EmConfig::default())).unwrap();
    assert_eq!(res.selected, vec![0, 1]);
    let err = misclustering_rate(&truth, res.final_labels.as_ref().unwrap()).unwrap();
    let bayes = bayes_risk(&spec, 100_000, &mut rng(7)).unwrap();
    assert!(err <= bayes.estimate + 0.05, "{err} vs {}", bayes.estimate);
}

#[test]
fn unlabeled_lda_fails_every_group() {
    let ds = random_dataset(&mut rng(8), 30, 5, 2, 0.0);
    assert!(matches!(
        select_variables(&ds, &small(2, 2, lda(), 0, 3, 2)),
        Err(Error::GroupFailed { group: 0, .. })
    ));
    let zeros = select_variables(
        &ds,
        &small(
            2,
            2,
            BaseKind::Lda {
                zero_if_singular: true,
            },
            0,
            3,
            2,
        ),
    )
    .unwrap();
    assert!(zeros.importance.weights.iter().all(|&w| w == 0.0));
    assert_eq!(zeros.selected, vec![0, 1]);
}

#[test]
fn dimension_bound_is_enforced() {
    let ds = random_dataset(&mut rng(9), 6, 10, 3, 0.5);
    // n − K = 3.
    assert!(matches!(
        select_variables(&ds, &small(4, 2, lda(), 0, 2, 2)),
        Err(Error::InvalidConfig(_))
    ));
    assert!(Projection::new(vec![0, 1, 2], 10).is_ok());
}
