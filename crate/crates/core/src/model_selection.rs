//! Penalty schedule, regularization grid, k-fold bias/variance estimation and
//! final envelope selection.

use serde::{Deserialize, Serialize};

use crate::data::{kfold, split, Dataset, DomainBounds};
use crate::error::{Error, Result};
use crate::estimation::{estimate, sample_variance, BootstrapConfig, BootstrapPool};
use crate::ga::{self, GaConfig};
use crate::objective::{default_eta, Objective, ObjectiveConfig};
use crate::par;
use crate::region::{decode, RegionUnion};
use crate::seed::derive_seed;

/// Strictly increasing positive penalty weights, tried in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PenaltySchedule {
    candidates: Vec<f64>,
}

impl PenaltySchedule {
    pub fn new(candidates: Vec<f64>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("penalty schedule is empty".into()));
        }
        if candidates.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "penalty weights must be positive".into(),
            ));
        }
        if candidates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "penalty schedule must be strictly increasing".into(),
            ));
        }
        Ok(Self { candidates })
    }

    /// `{1, 10, 100, 1000}` times the response range.
    pub fn default_for(d: &Dataset) -> Self {
        let range = d.y_max() - d.y_min();
        let scale = if range > 0.0 { range } else { 1.0 };
        Self {
            candidates: [1.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|m| m * scale)
                .collect(),
        }
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }
}

impl TryFrom<Vec<f64>> for PenaltySchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PenaltySchedule> for Vec<f64> {
    fn from(s: PenaltySchedule) -> Self {
        s.candidates
    }
}

/// Candidate regularization weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GammaGrid {
    candidates: Vec<f64>,
}

impl GammaGrid {
    pub fn new(candidates: Vec<f64>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("gamma grid is empty".into()));
        }
        if candidates.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument("gamma values must be >= 0".into()));
        }
        Ok(Self { candidates })
    }

    /// `start, start + step, ...` up to and including `end`.
    pub fn linspace(start: f64, step: f64, end: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument("grid step must be positive".into()));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|i| start + step * i as f64).collect())
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }
}

impl TryFrom<Vec<f64>> for GammaGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GammaGrid> for Vec<f64> {
    fn from(g: GammaGrid) -> Self {
        g.candidates
    }
}

/// Everything one envelope fit needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    #[serde(rename = "L")]
    pub l: usize,
    pub beta: f64,
    pub gamma: f64,
    /// `None` uses [`PenaltySchedule::default_for`] on the training data.
    pub schedule: Option<PenaltySchedule>,
    pub ga: GaConfig,
    pub bootstrap: BootstrapConfig,
    /// `None` uses [`default_eta`].
    pub eta: Option<f64>,
    /// Independent GA runs per penalty weight; the best is kept.
    pub restarts: usize,
    /// Search-box padding as a fraction of each observed range.
    pub bounds_padding: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            l: 1,
            beta: 0.2,
            gamma: 0.0,
            schedule: None,
            ga: GaConfig::default(),
            bootstrap: BootstrapConfig::default(),
            eta: None,
            restarts: 1,
            bounds_padding: 0.01,
        }
    }
}

/// Outcome of the GA at one penalty weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyAttempt {
    pub c: f64,
    pub region: Option<RegionUnion>,
    pub penalized_fitness: f64,
    pub mean: Option<f64>,
    pub coverage: f64,
    pub sd: f64,
    /// `mean - gamma * sd`.
    pub objective: Option<f64>,
    pub feasible: bool,
    pub generations_used: usize,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaSummary {
    pub best_fitness: f64,
    pub generations_used: usize,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub region: RegionUnion,
    pub train_mean: f64,
    pub train_coverage: f64,
    pub train_sd: f64,
    /// `train_mean - gamma * train_sd`.
    pub objective: f64,
    pub gamma: f64,
    pub chosen_c: f64,
    /// False when no penalty weight produced a region with coverage >= beta.
    pub feasible: bool,
    pub ga_run: GaSummary,
    pub attempts: Vec<PenaltyAttempt>,
}

fn run_attempt(
    d: &Dataset,
    pool: &BootstrapPool<'_>,
    cfg: &FitConfig,
    bounds: &DomainBounds,
    eta: f64,
    c: f64,
    job: u64,
) -> Result<PenaltyAttempt> {
    let obj_cfg = ObjectiveConfig {
        beta: cfg.beta,
        eta,
        c,
        gamma: cfg.gamma,
        bootstrap: *pool.config(),
    };
    let objective = Objective::new(d, obj_cfg, cfg.l, Some(pool))?;
    let mut best: Option<ga::GaRun> = None;
    for restart in 0..cfg.restarts.max(1) {
        let ga_cfg = GaConfig {
            seed: derive_seed(cfg.ga.seed, "fit/ga", job * 1000 + restart as u64),
            ..cfg.ga.clone()
        };
        let run = ga::run(|v| objective.fitness(v), bounds, cfg.l, d.p(), &ga_cfg)?;
        if best
            .as_ref()
            .is_none_or(|b| run.best_fitness > b.best_fitness)
        {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    let region = decode(&run.best_vector, cfg.l, d.p())?.valid();
    let (mean, coverage, sd) = match &region {
        Some(r) => {
            let est = estimate(d, r)?;
            let sd = if est.inside_count > 0 {
                pool.sd(r).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            (est.mean, est.coverage, sd)
        }
        None => (None, 0.0, f64::NAN),
    };
    let objective = mean.map(|m| m - cfg.gamma * sd).filter(|o| o.is_finite());
    Ok(PenaltyAttempt {
        c,
        feasible: objective.is_some() && coverage >= cfg.beta,
        region,
        penalized_fitness: run.best_fitness,
        mean,
        coverage,
        sd,
        objective,
        generations_used: run.generations_used,
        history: run.history,
    })
}

/// Fits one envelope: a GA run per penalty weight, then the feasible attempt
/// with the best `mean - gamma * sd` (ties go to the smaller weight).
pub fn fit(d: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    if d.n() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two samples to fit".into(),
        ));
    }
    let pool = BootstrapPool::new(d, cfg.bootstrap)?;
    fit_with_pool(d, &pool, cfg)
}

/// As [`fit`], reusing a bootstrap pool built on `d`.
pub fn fit_with_pool(d: &Dataset, pool: &BootstrapPool<'_>, cfg: &FitConfig) -> Result<FitResult> {
    if d.n() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two samples to fit".into(),
        ));
    }
    if !(0.0..1.0).contains(&cfg.beta) {
        return Err(Error::InvalidArgument(format!(
            "beta {} outside [0, 1)",
            cfg.beta
        )));
    }
    let schedule = match &cfg.schedule {
        Some(s) => s.clone(),
        None => PenaltySchedule::default_for(d),
    };
    let eta = cfg.eta.unwrap_or_else(|| default_eta(d));
    let bounds = DomainBounds::from_data(d, cfg.bounds_padding);

    let attempts = schedule
        .candidates()
        .iter()
        .enumerate()
        .map(|(t, &c)| run_attempt(d, pool, cfg, &bounds, eta, c, t as u64))
        .collect::<Result<Vec<_>>>()?;

    let mut chosen: Option<usize> = None;
    for (t, a) in attempts.iter().enumerate() {
        if !a.feasible {
            continue;
        }
        let better = match chosen {
            None => true,
            Some(b) => a.objective > attempts[b].objective,
        };
        if better {
            chosen = Some(t);
        }
    }
    let feasible = chosen.is_some();
    let pick = match chosen {
        Some(t) => t,
        None => attempts
            .iter()
            .enumerate()
            .filter(|(_, a)| a.objective.is_some())
            .max_by(|(_, a), (_, b)| {
                a.coverage.total_cmp(&b.coverage).then(
                    a.objective
                        .partial_cmp(&b.objective)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
            })
            .map(|(t, _)| t)
            .ok_or(Error::NoValidRegion)?,
    };
    if !feasible {
        log::warn!(
            "no penalty weight reached coverage >= {}; reporting best attempt",
            cfg.beta
        );
    }
    let a = &attempts[pick];
    Ok(FitResult {
        region: a.region.clone().expect("objective implies a region"),
        train_mean: a.mean.expect("objective implies a mean"),
        train_coverage: a.coverage,
        train_sd: a.sd,
        objective: a.objective.expect("checked"),
        gamma: cfg.gamma,
        chosen_c: a.c,
        feasible,
        ga_run: GaSummary {
            best_fitness: a.penalized_fitness,
            generations_used: a.generations_used,
            history: a.history.clone(),
        },
        attempts,
    })
}

/// Held-out mean and coverage of a fitted region.
pub fn evaluate(d_test: &Dataset, r: &RegionUnion) -> Result<(Option<f64>, f64)> {
    let est = estimate(d_test, r)?;
    Ok((est.mean, est.coverage))
}

/// Held-out statistics for one regularization weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub gamma: f64,
    /// `None` where the held-out fold had no sample in the fitted region.
    pub fold_test_means: Vec<Option<f64>>,
    pub fold_regions: Vec<Option<RegionUnion>>,
    pub fold_feasible: Vec<bool>,
    pub empty_folds: usize,
    /// `1 / mean(test means)`; undefined unless that mean is positive.
    pub bias: Option<f64>,
    /// Sample variance of the test means; needs two non-empty folds.
    pub variance: Option<f64>,
    pub error: Option<String>,
}

impl CvReport {
    fn from_folds(gamma: f64, folds: Vec<(Option<f64>, Option<RegionUnion>, bool)>) -> Self {
        let means: Vec<f64> = folds.iter().filter_map(|f| f.0).collect();
        let empty_folds = folds.len() - means.len();
        if empty_folds > 0 {
            log::warn!("gamma = {gamma}: {empty_folds} held-out fold(s) empty, excluded");
        }
        let avg = (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);
        let error = means
            .is_empty()
            .then(|| Error::AllFoldsEmpty { gamma }.to_string());
        let (fold_test_means, rest): (Vec<_>, Vec<_>) =
            folds.into_iter().map(|(m, r, f)| (m, (r, f))).unzip();
        let (fold_regions, fold_feasible) = rest.into_iter().unzip();
        Self {
            gamma,
            fold_test_means,
            fold_regions,
            fold_feasible,
            empty_folds,
            bias: avg.filter(|a| *a > 0.0).map(|a| 1.0 / a),
            variance: (means.len() >= 2).then(|| sample_variance(&means)),
            error,
        }
    }
}

/// k-fold estimate of bias and variance for every gamma in the grid.
///
/// Fold `f` uses the same GA and bootstrap seeds for every gamma, so curves
/// across the grid differ only through gamma. Jobs run in parallel; the
/// output does not depend on scheduling.
pub fn cross_validate(
    d: &Dataset,
    cfg: &FitConfig,
    grid: &GammaGrid,
    k: usize,
    seed: u64,
) -> Result<Vec<CvReport>> {
    let folds = kfold(d, k, derive_seed(seed, "cv/folds", 0))?;
    let parts: Vec<(Dataset, Dataset)> = (0..k)
        .map(|f| {
            (
                d.subset(&folds.train_indices(f)),
                d.subset(&folds.test_indices(f)),
            )
        })
        .collect();
    let pools = parts
        .iter()
        .enumerate()
        .map(|(f, (train, _))| {
            let boot = BootstrapConfig {
                seed: derive_seed(seed, "cv/bootstrap", f as u64),
                ..cfg.bootstrap
            };
            BootstrapPool::new(train, boot)
        })
        .collect::<Result<Vec<_>>>()?;

    let gammas = grid.candidates();
    let jobs: Vec<(usize, usize)> = (0..gammas.len())
        .flat_map(|g| (0..k).map(move |f| (g, f)))
        .collect();
    let outcomes = par::map(&jobs, |&(g, f)| {
        let job_cfg = FitConfig {
            gamma: gammas[g],
            ga: GaConfig {
                seed: derive_seed(seed, "cv/ga", f as u64),
                ..cfg.ga.clone()
            },
            bootstrap: *pools[f].config(),
            ..cfg.clone()
        };
        let (train, test) = &parts[f];
        match fit_with_pool(train, &pools[f], &job_cfg) {
            Ok(fit) => {
                let (mean, _) = evaluate(test, &fit.region)?;
                Ok((mean, Some(fit.region), fit.feasible))
            }
            Err(Error::NoValidRegion) => Ok((None, None, false)),
            Err(e) => Err(e),
        }
    });
    let mut outcomes = outcomes.into_iter();
    let mut reports = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let folds = (0..k)
            .map(|_| outcomes.next().expect("one outcome per job"))
            .collect::<Result<Vec<_>>>()?;
        reports.push(CvReport::from_folds(gamma, folds));
    }
    Ok(reports)
}

/// How to pick the regularization weight from CV reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "value")]
pub enum SelectionPolicy {
    /// Smallest gamma whose variance is within `tolerance` of the minimum.
    SmallestAtMinVariance {
        tolerance: f64,
    },
    /// The gamma with the lowest variance.
    MinVariance,
    /// The gamma ending the largest variance drop per unit gamma.
    Knee,
    Manual(f64),
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self::SmallestAtMinVariance { tolerance: 1e-12 }
    }
}

pub fn select_gamma(reports: &[CvReport], policy: SelectionPolicy) -> Result<f64> {
    if let SelectionPolicy::Manual(g) = policy {
        return Ok(g);
    }
    let mut usable: Vec<(f64, f64)> = reports
        .iter()
        .filter_map(|r| r.variance.map(|v| (r.gamma, v)))
        .collect();
    usable.sort_by(|a, b| a.0.total_cmp(&b.0));
    if usable.is_empty() {
        return Err(Error::InvalidArgument(
            "no gamma has a defined cross-validated variance".into(),
        ));
    }
    let min_var = usable.iter().map(|u| u.1).fold(f64::INFINITY, f64::min);
    let gamma = match policy {
        SelectionPolicy::SmallestAtMinVariance { tolerance } => {
            usable
                .iter()
                .find(|u| u.1 <= min_var + tolerance)
                .expect("minimum exists")
                .0
        }
        SelectionPolicy::MinVariance => {
            usable
                .iter()
                .find(|u| u.1 == min_var)
                .expect("minimum exists")
                .0
        }
        SelectionPolicy::Knee => {
            if usable.len() == 1 {
                usable[0].0
            } else {
                let mut best = (f64::NEG_INFINITY, usable[0].0);
                for w in usable.windows(2) {
                    let rate = (w[0].1 - w[1].1) / (w[1].0 - w[0].0);
                    if rate > best.0 {
                        best = (rate, w[1].0);
                    }
                }
                best.1
            }
        }
        SelectionPolicy::Manual(_) => unreachable!(),
    };
    Ok(gamma)
}

/// Settings for the full split / cross-validate / refit / test procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub fit: FitConfig,
    pub gamma_grid: GammaGrid,
    pub folds: usize,
    /// `None` trains and cross-validates on all data with no test set.
    pub train_fraction: Option<f64>,
    pub policy: SelectionPolicy,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            gamma_grid: GammaGrid {
                candidates: vec![0.0],
            },
            folds: 4,
            train_fraction: None,
            policy: SelectionPolicy::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub cv_reports: Vec<CvReport>,
    pub gamma_star: f64,
    /// CV report at `gamma_star`, whose fold regions are the envelopes
    /// stored during cross-validation.
    pub selected: CvReport,
    /// Refit on the full training set at `gamma_star`.
    pub final_fit: FitResult,
    pub train_n: usize,
    pub test_n: usize,
    pub baseline_mean: f64,
    pub test_mean: Option<f64>,
    pub test_coverage: Option<f64>,
}

/// Split, cross-validate over the gamma grid, select gamma, refit on the
/// training part and evaluate on the test part.
pub fn regularized_search(d: &Dataset, cfg: &SearchConfig) -> Result<SearchReport> {
    let (train, test) = match cfg.train_fraction {
        Some(frac) => {
            let (a, b) = split(d, frac, derive_seed(cfg.seed, "split", 0))?;
            (a, Some(b))
        }
        None => (d.clone(), None),
    };
    let cv_reports = cross_validate(&train, &cfg.fit, &cfg.gamma_grid, cfg.folds, cfg.seed)?;
    let gamma_star = select_gamma(&cv_reports, cfg.policy)?;
    let selected = cv_reports
        .iter()
        .find(|r| r.gamma == gamma_star)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("gamma {gamma_star} is not in the grid")))?;
    let final_fit = fit(
        &train,
        &FitConfig {
            gamma: gamma_star,
            ..cfg.fit.clone()
        },
    )?;
    let (test_mean, test_coverage) = match &test {
        Some(t) => {
            let (m, c) = evaluate(t, &final_fit.region)?;
            (m, Some(c))
        }
        None => (None, None),
    };
    Ok(SearchReport {
        cv_reports,
        gamma_star,
        selected,
        final_fit,
        train_n: train.n(),
        test_n: test.as_ref().map_or(0, Dataset::n),
        baseline_mean: d.y_mean(),
        test_mean,
        test_coverage,
    })
}
