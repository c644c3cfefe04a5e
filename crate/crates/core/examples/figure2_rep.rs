//! One replication of the isotropic three-class benchmark.
//!
//! `cargo run --release --example figure2_rep -- [seed] [snr]`

use std::time::Instant;

use sharp_ssl::projections::domain;
use sharp_ssl::{
    bayes_risk, build_figure2_spec, fit_predict, misclustering_rate, recovery, sample, BaseKind,
    CovarianceKind, EmConfig, FinalMethod, SeededRng, SharpConfig,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let snr: f64 = args.next().map_or(4.0, |s| s.parse().expect("snr"));
    let master = SeededRng::new(seed);
    let spec = build_figure2_spec(
        200,
        snr,
        CovarianceKind::Isotropic,
        &mut master.stream(domain::SPEC, 0, 0),
    )
    .unwrap()
    .with_gamma(0.05);
    let (ds, truth) = sample(&spec, 250, &mut master.stream(domain::SIMULATION, 0, 0)).unwrap();
    let config = SharpConfig::new(3, 3, BaseKind::Em(EmConfig::default()), seed);
    let start = Instant::now();
    let fit = fit_predict(&ds, &config, &FinalMethod::Em(EmConfig::default())).unwrap();
    let elapsed = start.elapsed();
    let err = misclustering_rate(&truth, fit.final_labels.as_ref().unwrap()).unwrap();
    let bayes = bayes_risk(&spec, 100_000, &mut master.stream(domain::BAYES, 0, 0)).unwrap();
    println!(
        "selected {:?} contains={} misclustering={err:.4} bayes={:.4} failures={} time={elapsed:.2?}",
        fit.selected,
        recovery(&fit.selected, &spec.mean_support()).contains,
        bayes.estimate,
        fit.projection_failures(),
    );
}
