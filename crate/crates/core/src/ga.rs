//! Real-coded genetic algorithm over box parameter vectors.
//!
//! Size-2 tournament selection, uniform coordinate exchange, Gaussian
//! mutation clamped to the search domain, and elitism. All random draws
//! happen on the driver thread; only fitness evaluation is spread across
//! workers, so a run is reproducible for any worker count.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::DomainBounds;
use crate::error::{Error, Result};
use crate::par;
use crate::seed::{derive_seed, rng_from, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Mutation SD as a fraction of the per-dimension domain width.
    pub mutation_scale: f64,
    pub elitism_count: usize,
    pub stall_generations: usize,
    pub stall_tolerance: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            max_generations: 200,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            mutation_scale: 0.1,
            elitism_count: 2,
            stall_generations: 30,
            stall_tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.population_size < 4 {
            return bad(format!("population size {} < 4", self.population_size));
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism count must be below the population size".into());
        }
        for (name, v) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if !(self.mutation_scale >= 0.0) || !self.mutation_scale.is_finite() {
            return bad(format!(
                "mutation scale {} must be >= 0",
                self.mutation_scale
            ));
        }
        if self.stall_generations == 0 {
            return bad("stall generations must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaRun {
    pub best_vector: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness found so far, after initialization and each generation.
    pub history: Vec<f64>,
    pub generations_used: usize,
}

fn dim_of(coord: usize, p: usize) -> usize {
    (coord / 2) % p
}

fn check_bounds(bounds: &DomainBounds, p: usize) -> Result<()> {
    if bounds.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: bounds.dim(),
        });
    }
    Ok(())
}

fn random_individual(bounds: &DomainBounds, l: usize, p: usize, rng: &mut Rng) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * l * p);
    for _ in 0..l {
        for j in 0..p {
            let a = rng.random_range(bounds.lower[j]..=bounds.upper[j]);
            let b = rng.random_range(bounds.lower[j]..=bounds.upper[j]);
            v.push(a.min(b));
            v.push(a.max(b));
        }
    }
    v
}

/// `W` random vectors with every `(low, high)` pair drawn uniformly inside
/// the bounds and put in order.
pub fn initialize(
    bounds: &DomainBounds,
    l: usize,
    p: usize,
    cfg: &GaConfig,
) -> Result<Vec<Vec<f64>>> {
    check_bounds(bounds, p)?;
    let mut rng = rng_from(derive_seed(cfg.seed, "ga/init", 0));
    Ok((0..cfg.population_size)
        .map(|_| random_individual(bounds, l, p, &mut rng))
        .collect())
}

/// Size-2 tournament: draws two contestants with replacement, the fitter
/// one wins and ties go to the first draw.
pub fn tournament(fitnesses: &[f64], rng: &mut Rng) -> usize {
    let a = rng.random_range(0..fitnesses.len());
    let b = rng.random_range(0..fitnesses.len());
    if fitnesses[b] > fitnesses[a] {
        b
    } else {
        a
    }
}

/// `pairs` parent pairs chosen by independent tournaments.
pub fn select(fitnesses: &[f64], pairs: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    (0..pairs)
        .map(|_| (tournament(fitnesses, rng), tournament(fitnesses, rng)))
        .collect()
}

/// Uniform coordinate exchange, applied with probability `crossover_prob`.
pub fn crossover(a: &[f64], b: &[f64], cfg: &GaConfig, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let mut ca = a.to_vec();
    let mut cb = b.to_vec();
    if rng.random_bool(cfg.crossover_prob) {
        for k in 0..ca.len() {
            if rng.random_bool(0.5) {
                std::mem::swap(&mut ca[k], &mut cb[k]);
            }
        }
    }
    (ca, cb)
}

/// Adds `N(0, (mutation_scale * width_j)^2)` to each coordinate with
/// probability `mutation_prob`, then clamps to the bounds.
pub fn mutate(individual: &mut [f64], bounds: &DomainBounds, cfg: &GaConfig, rng: &mut Rng) {
    let p = bounds.dim();
    for (k, x) in individual.iter_mut().enumerate() {
        if !rng.random_bool(cfg.mutation_prob) {
            continue;
        }
        let j = dim_of(k, p);
        let sd = cfg.mutation_scale * bounds.width(j);
        let noise = Normal::new(0.0, sd).map_or(0.0, |n| n.sample(rng));
        *x = (*x + noise).clamp(bounds.lower[j], bounds.upper[j]);
    }
}

fn evaluate<F>(fitness: &F, population: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    par::map(population, |v| {
        let f = fitness(v);
        if f.is_nan() {
            f64::NEG_INFINITY
        } else {
            f
        }
    })
}

fn ranked(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]).then(a.cmp(&b)));
    order
}

/// Maximizes `fitness` over `2 * l * p` box coordinates inside `bounds`.
///
/// Stops after `max_generations`, or once the best fitness has improved by
/// less than `stall_tolerance` over the last `stall_generations`
/// generations.
pub fn run<F>(
    fitness: F,
    bounds: &DomainBounds,
    l: usize,
    p: usize,
    cfg: &GaConfig,
) -> Result<GaRun>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if l == 0 {
        return Err(Error::InvalidArgument("need at least one box".into()));
    }
    let w = cfg.population_size;
    let mut population = initialize(bounds, l, p, cfg)?;
    let mut scores = evaluate(&fitness, &population);
    let mut rng = rng_from(derive_seed(cfg.seed, "ga/evolve", 0));

    let first = ranked(&scores)[0];
    let mut best_vector = population[first].clone();
    let mut best_fitness = scores[first];
    let mut history = vec![best_fitness];

    for generation in 1..=cfg.max_generations {
        let order = ranked(&scores);
        let mut next: Vec<Vec<f64>> = order[..cfg.elitism_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let elite_scores: Vec<f64> = order[..cfg.elitism_count]
            .iter()
            .map(|&i| scores[i])
            .collect();

        let mut children = Vec::with_capacity(w - cfg.elitism_count);
        while children.len() < w - cfg.elitism_count {
            let (a, b) = (tournament(&scores, &mut rng), tournament(&scores, &mut rng));
            let (mut ca, mut cb) = crossover(&population[a], &population[b], cfg, &mut rng);
            mutate(&mut ca, bounds, cfg, &mut rng);
            mutate(&mut cb, bounds, cfg, &mut rng);
            children.push(ca);
            if children.len() < w - cfg.elitism_count {
                children.push(cb);
            }
        }
        let child_scores = evaluate(&fitness, &children);
        next.extend(children);
        scores = elite_scores.into_iter().chain(child_scores).collect();
        population = next;

        let top = ranked(&scores)[0];
        if scores[top] > best_fitness {
            best_fitness = scores[top];
            best_vector = population[top].clone();
        }
        history.push(best_fitness);

        if generation >= cfg.stall_generations
            && history[generation] - history[generation - cfg.stall_generations]
                < cfg.stall_tolerance
        {
            break;
        }
    }

    Ok(GaRun {
        best_vector,
        best_fitness,
        generations_used: history.len() - 1,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds2() -> DomainBounds {
        DomainBounds::new(vec![0.0, -1.0], vec![1.0, 3.0]).unwrap()
    }

    #[test]
    fn initialization_respects_bounds_and_seed() {
        let cfg = GaConfig {
            population_size: 10,
            ..Default::default()
        };
        let b = bounds2();
        let pop = initialize(&b, 1, 2, &cfg).unwrap();
        assert_eq!(pop.len(), 10);
        for v in &pop {
            assert_eq!(v.len(), 4);
            for (k, x) in v.iter().enumerate() {
                let j = dim_of(k, 2);
                assert!(b.lower[j] <= *x && *x <= b.upper[j]);
            }
            assert!(v[0] <= v[1] && v[2] <= v[3]);
        }
        assert_eq!(pop, initialize(&b, 1, 2, &cfg).unwrap());

        let six_pi = 6.0 * std::f64::consts::PI;
        let line = DomainBounds::new(vec![0.0], vec![six_pi]).unwrap();
        for v in initialize(&line, 1, 1, &cfg).unwrap() {
            assert!(v.iter().all(|x| (0.0..=six_pi).contains(x)));
        }
        assert!(initialize(&line, 1, 2, &cfg).is_err());
    }

    #[test]
    fn dominant_individual_wins_its_tournaments() {
        let fit = [0.0, 1e300, -5.0, 2.0];
        // whenever index 1 is drawn it must win
        let mut rng = rng_from(2);
        for _ in 0..1000 {
            let mut probe = rng.clone();
            let a = probe.random_range(0..4);
            let b = probe.random_range(0..4);
            let w = tournament(&fit, &mut rng);
            if a == 1 || b == 1 {
                assert_eq!(w, 1);
            }
        }
    }

    #[test]
    fn two_individuals_higher_wins_distinct_pairings() {
        let fit = [1.0, 0.0];
        let mut rng = rng_from(5);
        for _ in 0..500 {
            let mut probe = rng.clone();
            let a = probe.random_range(0..2);
            let b = probe.random_range(0..2);
            let w = tournament(&fit, &mut rng);
            if a != b {
                assert_eq!(w, 0);
            }
        }
    }

    #[test]
    fn crossover_cases() {
        let mut rng = rng_from(3);
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b = vec![5.0, 6.0, 7.0, 8.0];
        let none = GaConfig {
            crossover_prob: 0.0,
            ..Default::default()
        };
        assert_eq!(crossover(&a, &b, &none, &mut rng), (a.clone(), b.clone()));
        let always = GaConfig {
            crossover_prob: 1.0,
            ..Default::default()
        };
        assert_eq!(crossover(&a, &a, &always, &mut rng), (a.clone(), a.clone()));
        for _ in 0..50 {
            let (ca, cb) = crossover(&a, &b, &always, &mut rng);
            for k in 0..4 {
                let mut got = [ca[k], cb[k]];
                got.sort_by(f64::total_cmp);
                assert_eq!(got, [a[k], b[k]]);
            }
        }
    }

    #[test]
    fn mutation_cases() {
        let b = bounds2();
        let mut rng = rng_from(4);
        let orig = vec![0.2, 0.8, 0.0, 2.0];
        let mut v = orig.clone();
        let off = GaConfig {
            mutation_prob: 0.0,
            ..Default::default()
        };
        mutate(&mut v, &b, &off, &mut rng);
        assert_eq!(v, orig);
        let wild = GaConfig {
            mutation_prob: 1.0,
            mutation_scale: 5.0,
            ..Default::default()
        };
        for _ in 0..200 {
            let mut v = orig.clone();
            mutate(&mut v, &b, &wild, &mut rng);
            for (k, x) in v.iter().enumerate() {
                let j = dim_of(k, 2);
                assert!(b.lower[j] <= *x && *x <= b.upper[j]);
            }
        }
    }

    #[test]
    fn concave_optimum_is_found() {
        let b = bounds2();
        let target = [0.3, 0.7, 0.5, 2.0];
        let cfg = GaConfig {
            population_size: 50,
            max_generations: 200,
            seed: 17,
            ..Default::default()
        };
        let f = |v: &[f64]| {
            -v.iter()
                .zip(&target)
                .map(|(a, t)| (a - t).powi(2))
                .sum::<f64>()
        };
        let run = run(f, &b, 1, 2, &cfg).unwrap();
        for (k, (x, t)) in run.best_vector.iter().zip(&target).enumerate() {
            assert!(
                (x - t).abs() < 0.05 * b.width(dim_of(k, 2)),
                "{:?}",
                run.best_vector
            );
        }
        assert!(run.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn constant_fitness_stalls_out() {
        let cfg = GaConfig {
            population_size: 8,
            stall_generations: 5,
            ..Default::default()
        };
        let run = run(|_: &[f64]| 1.0, &bounds2(), 1, 2, &cfg).unwrap();
        assert_eq!(run.generations_used, 5);
        assert_eq!(run.best_fitness, 1.0);
    }

    #[test]
    fn config_validation() {
        let base = GaConfig::default();
        assert!(GaConfig {
            population_size: 3,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(GaConfig {
            elitism_count: 100,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(GaConfig {
            mutation_prob: 1.5,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(base.validate().is_ok());
    }
}
