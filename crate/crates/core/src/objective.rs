//! Scalar fitness of a candidate parameter vector.
//!
//! Structurally unusable candidates (overlapping or zero-width boxes, or a
//! region holding no sample) score the sentinel `eta`, which sits below every
//! observed response. Everything else scores
//! `mean - gamma * sd_bootstrap - c * max(beta - coverage, 0)`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{estimate_unchecked, BootstrapConfig, BootstrapPool, RegionEstimate};
use crate::region::{decode, Decoded, RegionUnion};

/// `min(y) - (max(y) - min(y)) - 1`, strictly below every response.
pub fn default_eta(d: &Dataset) -> f64 {
    let (lo, hi) = (d.y_min(), d.y_max());
    lo - (hi - lo) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub beta: f64,
    pub eta: f64,
    pub c: f64,
    pub gamma: f64,
    pub bootstrap: BootstrapConfig,
}

impl ObjectiveConfig {
    /// Config with `eta` from [`default_eta`].
    pub fn for_dataset(
        d: &Dataset,
        beta: f64,
        c: f64,
        gamma: f64,
        bootstrap: BootstrapConfig,
    ) -> Self {
        Self {
            beta,
            eta: default_eta(d),
            c,
            gamma,
            bootstrap,
        }
    }

    pub fn validate(&self, d: &Dataset) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!(
                "beta {} outside [0, 1)",
                self.beta
            )));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "penalty weight c = {} must be > 0",
                self.c
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma = {} must be >= 0",
                self.gamma
            )));
        }
        if !(self.eta < d.y_min()) {
            return Err(Error::InvalidArgument(format!(
                "eta = {} must be below min(y) = {}",
                self.eta,
                d.y_min()
            )));
        }
        self.bootstrap.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub raw_mean: Option<f64>,
    pub sd: f64,
    pub coverage: f64,
    pub penalty_term: f64,
    pub fitness: f64,
    /// True when the candidate scored `eta`.
    pub sentinel: bool,
}

impl FitnessBreakdown {
    fn sentinel(eta: f64, est: Option<RegionEstimate>) -> Self {
        Self {
            raw_mean: est.and_then(|e| e.mean),
            sd: 0.0,
            coverage: est.map_or(0.0, |e| e.coverage),
            penalty_term: 0.0,
            fitness: eta,
            sentinel: true,
        }
    }
}

/// Fitness evaluator bound to one dataset, one config and one box count.
///
/// Safe to call from many threads at once.
pub struct Objective<'a> {
    data: &'a Dataset,
    cfg: ObjectiveConfig,
    l: usize,
    pool: Option<&'a BootstrapPool<'a>>,
}

impl<'a> Objective<'a> {
    /// `pool` is required when `gamma > 0` and must be built on `data`.
    pub fn new(
        data: &'a Dataset,
        cfg: ObjectiveConfig,
        l: usize,
        pool: Option<&'a BootstrapPool<'a>>,
    ) -> Result<Self> {
        cfg.validate(data)?;
        if l == 0 {
            return Err(Error::InvalidArgument(
                "need at least one box (L >= 1)".into(),
            ));
        }
        if cfg.gamma > 0.0 && pool.is_none() {
            return Err(Error::InvalidArgument(
                "gamma > 0 needs a bootstrap pool".into(),
            ));
        }
        if let Some(p) = pool {
            if !std::ptr::eq(p.data(), data) && p.data() != data {
                return Err(Error::InvalidArgument(
                    "bootstrap pool was built on a different dataset".into(),
                ));
            }
        }
        Ok(Self { data, cfg, l, pool })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    pub fn boxes(&self) -> usize {
        self.l
    }

    pub fn param_len(&self) -> usize {
        2 * self.l * self.data.p()
    }

    /// Unpenalized sentinel objective: the region mean, or `eta`.
    pub fn sentinel_value(&self, v: &[f64]) -> Result<(f64, Option<RegionEstimate>)> {
        match decode(v, self.l, self.data.p())? {
            Decoded::Invalid(_) => Ok((self.cfg.eta, None)),
            Decoded::Valid(r) => {
                let est = estimate_unchecked(self.data, &r);
                Ok((est.mean.unwrap_or(self.cfg.eta), Some(est)))
            }
        }
    }

    pub fn evaluate(&self, v: &[f64]) -> Result<FitnessBreakdown> {
        let region = match decode(v, self.l, self.data.p())? {
            Decoded::Invalid(_) => return Ok(FitnessBreakdown::sentinel(self.cfg.eta, None)),
            Decoded::Valid(r) => r,
        };
        Ok(self.evaluate_region(&region))
    }

    pub fn evaluate_region(&self, region: &RegionUnion) -> FitnessBreakdown {
        let est = estimate_unchecked(self.data, region);
        let Some(mean) = est.mean else {
            return FitnessBreakdown::sentinel(self.cfg.eta, Some(est));
        };
        let sd = if self.cfg.gamma > 0.0 {
            let pool = self.pool.expect("checked in Objective::new");
            match pool.sd(region) {
                Ok(sd) => sd,
                Err(e) => {
                    log::debug!("bootstrap failed ({e}); scoring candidate as sentinel");
                    return FitnessBreakdown::sentinel(self.cfg.eta, Some(est));
                }
            }
        } else {
            0.0
        };
        let penalty_term = self.cfg.c * (self.cfg.beta - est.coverage).max(0.0);
        FitnessBreakdown {
            raw_mean: Some(mean),
            sd,
            coverage: est.coverage,
            penalty_term,
            fitness: mean - self.cfg.gamma * sd - penalty_term,
            sentinel: false,
        }
    }

    /// Fitness for the optimizer; malformed vectors score `eta`.
    pub fn fitness(&self, v: &[f64]) -> f64 {
        self.evaluate(v).map_or(self.cfg.eta, |b| b.fitness)
    }
}

fn check_p(d: &Dataset, p: usize) -> Result<()> {
    if d.p() != p {
        return Err(Error::DimensionMismatch {
            expected: d.p(),
            found: p,
        });
    }
    Ok(())
}

/// Region mean when `v` decodes to a valid, non-empty union; `eta` otherwise.
pub fn sentinel_objective(
    d: &Dataset,
    v: &[f64],
    cfg: &ObjectiveConfig,
    l: usize,
    p: usize,
) -> Result<(f64, FitnessBreakdown)> {
    check_p(d, p)?;
    let obj = Objective::new(d, ObjectiveConfig { gamma: 0.0, ..*cfg }, l, None)?;
    let (value, est) = obj.sentinel_value(v)?;
    let breakdown = match est {
        Some(e) if e.mean.is_some() => FitnessBreakdown {
            raw_mean: e.mean,
            sd: 0.0,
            coverage: e.coverage,
            penalty_term: 0.0,
            fitness: value,
            sentinel: false,
        },
        _ => FitnessBreakdown::sentinel(cfg.eta, est),
    };
    Ok((value, breakdown))
}

/// One-off penalized, regularized fitness. Builds a bootstrap pool when
/// `gamma > 0`; use [`Objective`] to evaluate many candidates.
pub fn penalized_fitness(
    d: &Dataset,
    v: &[f64],
    cfg: &ObjectiveConfig,
    l: usize,
    p: usize,
) -> Result<FitnessBreakdown> {
    check_p(d, p)?;
    let pool = if cfg.gamma > 0.0 {
        Some(BootstrapPool::new(d, cfg.bootstrap)?)
    } else {
        None
    };
    let obj = Objective::new(d, *cfg, l, pool.as_ref())?;
    obj.evaluate(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::bootstrap_sd;
    use crate::region::HyperRectangle;

    fn line(y: &[f64]) -> Dataset {
        Dataset::from_1d(y.to_vec(), (0..y.len()).map(|i| i as f64).collect()).unwrap()
    }

    fn cfg(d: &Dataset, beta: f64, c: f64, gamma: f64) -> ObjectiveConfig {
        ObjectiveConfig::for_dataset(
            d,
            beta,
            c,
            gamma,
            BootstrapConfig {
                replicates: 50,
                seed: 1,
            },
        )
    }

    #[test]
    fn default_eta_examples() {
        let d = line(&(0..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(default_eta(&d), -11.0);
        assert_eq!(default_eta(&line(&[5.0])), 4.0);
        assert_eq!(default_eta(&line(&[-3.0, -1.0])), -6.0);
    }

    #[test]
    fn sentinel_branches() {
        let d = line(&[1.0, 2.0, 3.0]);
        let c = cfg(&d, 0.0, 1.0, 0.0);
        let (v, b) = sentinel_objective(&d, &[0.0, 2.0, 1.0, 3.0], &c, 2, 1).unwrap();
        assert_eq!(v, c.eta);
        assert!(b.sentinel);
        let (v, _) = sentinel_objective(&d, &[-1.0, 5.0], &c, 1, 1).unwrap();
        assert_eq!(v, 2.0);
        let (v, b) = sentinel_objective(&d, &[10.0, 11.0], &c, 1, 1).unwrap();
        assert_eq!(v, c.eta);
        assert!(b.sentinel);
        assert!(sentinel_objective(&d, &[0.0, 1.0], &c, 1, 2).is_err());
    }

    #[test]
    fn hinge_and_regularizer_arithmetic() {
        // four samples, two inside with mean 3.0: coverage 0.5
        let d = line(&[3.0, 3.0, 0.0, 0.0]);
        let b = penalized_fitness(&d, &[-0.5, 1.5], &cfg(&d, 0.2, 10.0, 0.0), 1, 1).unwrap();
        assert_eq!((b.fitness, b.penalty_term), (3.0, 0.0));

        // ten samples, three inside with mean 3.0: coverage 0.3 under beta 0.5
        let d = line(&[3.0, 3.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = penalized_fitness(&d, &[-0.5, 2.5], &cfg(&d, 0.5, 10.0, 0.0), 1, 1).unwrap();
        assert!((b.penalty_term - 2.0).abs() < 1e-12);
        assert!((b.fitness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regularizer_subtracts_gamma_times_sd() {
        let d = line(&[3.0, 2.0, 4.0, 3.5, 0.0, 1.0]);
        let c = cfg(&d, 0.2, 10.0, 2.0);
        let b = penalized_fitness(&d, &[-0.5, 3.5], &c, 1, 1).unwrap();
        let r = RegionUnion::single(HyperRectangle::interval(-0.5, 3.5).unwrap());
        let sd = bootstrap_sd(&d, &r, &c.bootstrap).unwrap();
        assert!((b.sd - sd).abs() < 1e-12);
        assert!((b.fitness - (3.125 - 2.0 * sd)).abs() < 1e-12);
    }

    #[test]
    fn coverage_at_beta_is_not_penalized() {
        let d = line(&[1.0, 1.0, 0.0, 0.0]);
        let b = penalized_fitness(&d, &[-0.5, 1.5], &cfg(&d, 0.5, 100.0, 0.0), 1, 1).unwrap();
        assert_eq!(b.penalty_term, 0.0);
    }

    #[test]
    fn invalid_configs() {
        let d = line(&[1.0, 2.0]);
        let mut c = cfg(&d, 1.0, 1.0, 0.0);
        assert!(c.validate(&d).is_err());
        c.beta = 0.1;
        c.eta = 1.0;
        assert!(c.validate(&d).is_err());
        c.eta = 0.0;
        c.c = 0.0;
        assert!(c.validate(&d).is_err());
        let c = cfg(&d, 0.1, 1.0, 1.0);
        assert!(Objective::new(&d, c, 1, None).is_err());
    }
}
