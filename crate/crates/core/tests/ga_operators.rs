use envelope_core::data::DomainBounds;
use envelope_core::ga::{mutate, tournament, GaConfig};
use envelope_core::seed::rng_from;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn equal_fitness_selection_is_uniform() {
    let k = 10;
    let draws = 10_000;
    let fit = vec![1.0; k];
    let mut rng = rng_from(99);
    let mut counts = vec![0u32; k];
    for _ in 0..draws {
        counts[tournament(&fit, &mut rng)] += 1;
    }
    let expected = draws as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = 1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(stat);
    assert!(
        p_value > 0.01,
        "chi-square {stat}, p = {p_value}, counts {counts:?}"
    );
}

#[test]
fn mutation_displacement_matches_half_normal_mean() {
    // centre of a wide domain, so clamping at 5 SDs is negligible
    let width = 4.0;
    let bounds = DomainBounds::new(vec![-width / 2.0], vec![width / 2.0]).unwrap();
    let cfg = GaConfig {
        mutation_prob: 1.0,
        mutation_scale: 0.1,
        ..Default::default()
    };
    let mut rng = rng_from(17);
    let trials = 50_000;
    let mut total = 0.0;
    for _ in 0..trials {
        let mut v = [0.0, 0.0];
        mutate(&mut v, &bounds, &cfg, &mut rng);
        total += v[0].abs() + v[1].abs();
    }
    let mean = total / (2 * trials) as f64;
    let sigma = cfg.mutation_scale * width;
    let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
    assert!((expected / width - 0.0798).abs() < 1e-4);
    // standard error of the mean of |N(0, sigma)| is about 0.6 sigma / sqrt(n)
    let se = 0.61 * sigma / ((2 * trials) as f64).sqrt();
    assert!(
        (mean - expected).abs() < 5.0 * se,
        "mean {mean}, expected {expected}"
    );
}
