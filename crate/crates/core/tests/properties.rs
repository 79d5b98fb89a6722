use envelope_core::data::{Dataset, DomainBounds};
use envelope_core::estimation::{coverage, BootstrapConfig};
use envelope_core::ga::{self, GaConfig};
use envelope_core::objective::{penalized_fitness, ObjectiveConfig};
use envelope_core::par;
use envelope_core::region::{decode, encode, pair_disjoint, Decoded, HyperRectangle, RegionUnion};
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (-10.0..10.0f64, 0.01..5.0f64).prop_map(|(a, w)| (a, a + w))
}

fn rect(p: usize) -> impl Strategy<Value = HyperRectangle> {
    proptest::collection::vec(interval(), p).prop_map(|iv| {
        let (lower, upper) = iv.into_iter().unzip();
        HyperRectangle::new(lower, upper).unwrap()
    })
}

fn dataset(p: usize) -> impl Strategy<Value = Dataset> {
    (5usize..60).prop_flat_map(move |n| {
        (
            proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, p), n),
            proptest::collection::vec(-5.0..5.0f64, n),
        )
            .prop_map(move |(rows, y)| {
                let names = (0..p).map(|j| format!("x{j}")).collect();
                Dataset::new(y, rows, names).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn decode_inverts_encode(b in rect(3)) {
        let r = RegionUnion::single(b);
        prop_assert_eq!(decode(&encode(&r), 1, 3).unwrap(), Decoded::Valid(r));
    }

    #[test]
    fn decode_of_swapped_pairs_is_order_free(v in proptest::collection::vec(-10.0..10.0f64, 4)) {
        let swapped = vec![v[1], v[0], v[3], v[2]];
        prop_assert_eq!(decode(&v, 1, 2).unwrap(), decode(&swapped, 1, 2).unwrap());
    }

    #[test]
    fn disjointness_is_symmetric(a in rect(2), b in rect(2)) {
        prop_assert_eq!(pair_disjoint(&a, &b).unwrap(), pair_disjoint(&b, &a).unwrap());
    }

    #[test]
    fn disjoint_boxes_share_no_point(a in rect(2), b in rect(2), t in proptest::collection::vec(0.0..=1.0f64, 2)) {
        if pair_disjoint(&a, &b).unwrap() {
            let point: Vec<f64> = (0..2).map(|j| a.lower[j] + t[j] * (a.upper[j] - a.lower[j])).collect();
            prop_assert!(a.contains(&point).unwrap());
            prop_assert!(!b.contains(&point).unwrap());
        }
    }

    #[test]
    fn coverage_grows_when_a_box_widens(d in dataset(2), b in rect(2), grow in 0.0..3.0f64) {
        let wide = HyperRectangle::new(
            b.lower.iter().map(|v| v - grow).collect(),
            b.upper.iter().map(|v| v + grow).collect(),
        ).unwrap();
        let narrow = coverage(&d, &RegionUnion::single(b)).unwrap();
        let widened = coverage(&d, &RegionUnion::single(wide)).unwrap();
        prop_assert!(widened >= narrow);
    }

    #[test]
    fn coverage_counts_whole_samples(d in dataset(2), b in rect(2)) {
        let cn = coverage(&d, &RegionUnion::single(b)).unwrap() * d.n() as f64;
        prop_assert!((cn - cn.round()).abs() < 1e-9);
    }

    #[test]
    fn fitness_never_rises_with_the_penalty_weight(
        d in dataset(1),
        (a, b) in interval(),
        c1 in 0.0..100.0f64,
        extra in 0.0..100.0f64,
        beta in 0.0..1.0f64,
    ) {
        let cfg = |c: f64| ObjectiveConfig::for_dataset(&d, beta, c, 0.0, BootstrapConfig::default());
        let lo = penalized_fitness(&d, &[a, b], &cfg(c1), 1, 1).unwrap().fitness;
        let hi = penalized_fitness(&d, &[a, b], &cfg(c1 + extra), 1, 1).unwrap().fitness;
        prop_assert!(hi <= lo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ga_history_never_decreases(seed in any::<u64>()) {
        let bounds = DomainBounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let cfg = GaConfig { population_size: 20, max_generations: 30, seed, ..Default::default() };
        let run = ga::run(|v| -(v[0] - 0.3).powi(2) - (v[3] - 0.6).powi(2), &bounds, 1, 2, &cfg).unwrap();
        prop_assert!(run.history.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(run.history.len(), run.generations_used + 1);
    }

    #[test]
    fn ga_result_does_not_depend_on_worker_count(seed in any::<u64>(), workers in 2usize..6) {
        let bounds = DomainBounds::new(vec![-1.0], vec![1.0]).unwrap();
        let cfg = GaConfig { population_size: 24, max_generations: 25, seed, ..Default::default() };
        let f = |v: &[f64]| (3.0 * v[0]).sin() - v[1].abs();
        let one = par::install(Some(1), || ga::run(f, &bounds, 1, 1, &cfg).unwrap());
        let many = par::install(Some(workers), || ga::run(f, &bounds, 1, 1, &cfg).unwrap());
        prop_assert_eq!(one, many);
    }
}
