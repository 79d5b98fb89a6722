//! Synthetic scenarios, Monte Carlo repetition studies and the exhaustive
//! one-dimensional oracle.
//!
//! One-dimensional scenarios live on `[0, 6pi]` with three subregions cut at
//! `2pi` and `4pi`; the two-dimensional scenario lives on `[0, 4pi]^2` with
//! quadrants cut at `2pi`.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{estimate, BootstrapConfig, BootstrapPool};
use crate::model_selection::{fit, FitConfig};
use crate::par;
use crate::region::{grid_cell, HyperRectangle, RegionUnion};
use crate::seed::{derive_seed, rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "I-a")]
    IA,
    #[serde(rename = "I-b")]
    IB,
    #[serde(rename = "I-c")]
    IC,
    #[serde(rename = "I-d")]
    ID,
    #[serde(rename = "II")]
    II,
}

impl Scenario {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "i-a" | "ia" | "1a" => Ok(Self::IA),
            "i-b" | "ib" | "1b" => Ok(Self::IB),
            "i-c" | "ic" | "1c" => Ok(Self::IC),
            "i-d" | "id" | "1d" => Ok(Self::ID),
            "ii" | "2" => Ok(Self::II),
            _ => Err(Error::InvalidArgument(format!("unknown scenario `{name}`"))),
        }
    }

    pub fn dim(self) -> usize {
        if self == Self::II {
            2
        } else {
            1
        }
    }

    /// Noise SDs per subregion (one value means constant noise).
    pub fn default_sigma(self) -> Vec<f64> {
        match self {
            Self::IA | Self::IB => vec![0.25],
            Self::IC | Self::ID => vec![0.75, 0.5, 0.05],
            Self::II => vec![0.11, 0.15, 0.05, 0.5],
        }
    }

    /// Cut points defining the subregions used for noise and classification.
    pub fn subregion_cuts(self) -> Vec<Vec<f64>> {
        match self {
            Self::II => vec![vec![2.0 * PI], vec![2.0 * PI]],
            _ => vec![vec![2.0 * PI, 4.0 * PI]],
        }
    }

    pub fn domain(self) -> (f64, f64) {
        match self {
            Self::II => (0.0, 4.0 * PI),
            _ => (0.0, 6.0 * PI),
        }
    }
}

/// Whether the `2.5` in the mixture components is a standard deviation or a
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureSpread {
    #[default]
    StandardDeviation,
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSpec {
    pub scenario: Scenario,
    pub n: usize,
    /// Shift of the outer mixture means toward the centre (scenario I-a).
    pub delta: f64,
    /// `None` uses [`Scenario::default_sigma`].
    pub sigma_eps: Option<Vec<f64>>,
    pub spread: MixtureSpread,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::IA,
            n: 1000,
            delta: 0.0,
            sigma_eps: None,
            spread: MixtureSpread::default(),
            seed: 0,
        }
    }
}

impl SimulationSpec {
    pub fn new(scenario: Scenario, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            n,
            seed,
            ..Default::default()
        }
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.sigma_eps
            .clone()
            .unwrap_or_else(|| self.scenario.default_sigma())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("simulation needs n >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidArgument(format!(
                "delta {} outside [0, 1]",
                self.delta
            )));
        }
        let sig = self.sigmas();
        let cells = match self.scenario {
            Scenario::II => 4,
            _ => 3,
        };
        if sig.len() != 1 && sig.len() != cells {
            return Err(Error::InvalidArgument(format!(
                "sigma_eps needs 1 or {cells} values, got {}",
                sig.len()
            )));
        }
        if sig.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("noise SDs must be positive".into()));
        }
        Ok(())
    }

    /// Component means of the mixture density.
    pub fn component_means(&self) -> Vec<Vec<f64>> {
        match self.scenario {
            Scenario::IA => vec![
                vec![(1.0 + self.delta) * PI],
                vec![3.0 * PI],
                vec![(5.0 - self.delta) * PI],
            ],
            Scenario::II => vec![
                vec![PI, PI],
                vec![PI, 3.0 * PI],
                vec![3.0 * PI, PI],
                vec![3.0 * PI, 3.0 * PI],
            ],
            _ => vec![vec![PI], vec![3.0 * PI], vec![5.0 * PI]],
        }
    }
}

/// `-a (cos x - 4.5)`.
fn bump(a: f64, x: f64) -> f64 {
    -a * (x.cos() - 4.5)
}

/// `f0` of the two-dimensional scenario.
pub fn f0(z: f64) -> f64 {
    if z <= 2.0 * PI {
        bump(2.25, z)
    } else {
        bump(2.0, z)
    }
}

/// Noise-free response of a scenario.
pub fn response(scenario: Scenario, x: &[f64]) -> f64 {
    let piecewise = |a: [f64; 3], v: f64| {
        let k = if v < 2.0 * PI {
            0
        } else if v < 4.0 * PI {
            1
        } else {
            2
        };
        bump(a[k], v)
    };
    match scenario {
        Scenario::IA | Scenario::IC => bump(2.0, x[0]),
        Scenario::IB => piecewise([1.95, 2.0, 1.9], x[0]),
        Scenario::ID => piecewise([2.5, 2.25, 2.0], x[0]),
        Scenario::II => (f0(x[0]) * f0(x[1])).sqrt(),
    }
}

/// Noise SD at `x`: subregion cells for the 1D scenarios; for scenario II
/// `S1 = (low, high)`, `S2 = (high, high)`, `S3 = (low, low)`,
/// `S4 = (high, low)` in `(x1, x2)`, split at `2pi`.
pub fn noise_sd(scenario: Scenario, sigmas: &[f64], x: &[f64]) -> f64 {
    if sigmas.len() == 1 {
        return sigmas[0];
    }
    let cell = grid_cell(x, &scenario.subregion_cuts());
    match scenario {
        // grid cells: 0 = (low, low), 1 = (low, high), 2 = (high, low), 3 = (high, high)
        Scenario::II => sigmas[[2, 0, 3, 1][cell]],
        _ => sigmas[cell],
    }
}

fn draw_x(spec: &SimulationSpec, rng: &mut Rng) -> Vec<f64> {
    let means = spec.component_means();
    let (lo, hi) = spec.scenario.domain();
    let comp = &means[rng.random_range(0..means.len())];
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let x: Vec<f64> = match spec.scenario {
            Scenario::II => {
                // Cholesky factor of [[1.2, 1], [1, 1.2]]
                let a = 1.2f64.sqrt();
                let b = 1.0 / a;
                let c = (1.2 - b * b).sqrt();
                let (z1, z2) = (std.sample(rng), std.sample(rng));
                vec![comp[0] + a * z1, comp[1] + b * z1 + c * z2]
            }
            _ => {
                let sd = match spec.spread {
                    MixtureSpread::StandardDeviation => 2.5,
                    MixtureSpread::Variance => 2.5f64.sqrt(),
                };
                vec![comp[0] + sd * std.sample(rng)]
            }
        };
        if x.iter().all(|v| (lo..=hi).contains(v)) {
            return x;
        }
    }
}

/// Draws `n` samples: pick a mixture component uniformly, draw from it
/// (redrawing until inside the scenario domain), then add Gaussian noise.
pub fn generate(spec: &SimulationSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng_from(derive_seed(spec.seed, "sim/generate", 0));
    let sigmas = spec.sigmas();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut y = Vec::with_capacity(spec.n);
    let mut rows = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = draw_x(spec, &mut rng);
        let eps = noise_sd(spec.scenario, &sigmas, &x) * std.sample(&mut rng);
        y.push(response(spec.scenario, &x) + eps);
        rows.push(x);
    }
    let names = (1..=spec.scenario.dim()).map(|j| format!("x{j}")).collect();
    Dataset::new(y, rows, names)
}

/// One repetition of a Monte Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub data_seed: u64,
    pub region: Option<RegionUnion>,
    pub center: Option<Vec<f64>>,
    pub subregion: Option<usize>,
    pub train_mean: Option<f64>,
    pub train_coverage: Option<f64>,
    pub train_sd: Option<f64>,
    pub feasible: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub repetitions: usize,
    pub cuts: Vec<Vec<f64>>,
    /// Detections per subregion cell (row-major, axis 0 most significant).
    pub subregion_counts: Vec<usize>,
    /// Repetitions whose fit failed outright.
    pub failures: usize,
    pub per_rep_results: Vec<RepetitionResult>,
}

impl MonteCarloReport {
    pub fn fraction(&self, cell: usize) -> f64 {
        self.subregion_counts[cell] as f64 / self.repetitions as f64
    }

    /// Bar-chart data: `cell,count,fraction`.
    pub fn counts_csv(&self) -> String {
        let mut s = String::from("cell,count,fraction\n");
        for (cell, count) in self.subregion_counts.iter().enumerate() {
            s.push_str(&format!("{cell},{count},{}\n", self.fraction(cell)));
        }
        s
    }
}

/// Repeats generate-then-fit with fresh seeds and tallies which subregion
/// holds the centre of mass of each fitted envelope. Failed fits are counted
/// separately, so `counts + failures = repetitions`.
pub fn monte_carlo(
    spec: &SimulationSpec,
    fit_cfg: &FitConfig,
    repetitions: usize,
    cuts: &[Vec<f64>],
) -> Result<MonteCarloReport> {
    spec.validate()?;
    if cuts.len() != spec.scenario.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.scenario.dim(),
            found: cuts.len(),
        });
    }
    let cells: usize = cuts.iter().map(|c| c.len() + 1).product();
    let results = par::map_range(repetitions, |rep| {
        let data_seed = derive_seed(spec.seed, "mc/data", rep as u64);
        let cfg = FitConfig {
            ga: crate::ga::GaConfig {
                seed: derive_seed(fit_cfg.ga.seed, "mc/ga", rep as u64),
                ..fit_cfg.ga.clone()
            },
            bootstrap: BootstrapConfig {
                seed: derive_seed(fit_cfg.bootstrap.seed, "mc/bootstrap", rep as u64),
                ..fit_cfg.bootstrap
            },
            ..fit_cfg.clone()
        };
        let outcome = generate(&SimulationSpec {
            seed: data_seed,
            ..spec.clone()
        })
        .and_then(|d| fit(&d, &cfg));
        match outcome {
            Ok(f) => {
                let center = f.region.center_of_mass();
                RepetitionResult {
                    repetition: rep,
                    data_seed,
                    subregion: Some(grid_cell(&center, cuts)),
                    center: Some(center),
                    region: Some(f.region),
                    train_mean: Some(f.train_mean),
                    train_coverage: Some(f.train_coverage),
                    train_sd: Some(f.train_sd),
                    feasible: f.feasible,
                    error: None,
                }
            }
            Err(e) => RepetitionResult {
                repetition: rep,
                data_seed,
                region: None,
                center: None,
                subregion: None,
                train_mean: None,
                train_coverage: None,
                train_sd: None,
                feasible: false,
                error: Some(e.to_string()),
            },
        }
    });
    let mut subregion_counts = vec![0; cells];
    let mut failures = 0;
    for r in &results {
        match r.subregion {
            Some(c) => subregion_counts[c] += 1,
            None => failures += 1,
        }
    }
    Ok(MonteCarloReport {
        repetitions,
        cuts: cuts.to_vec(),
        subregion_counts,
        failures,
        per_rep_results: results,
    })
}

/// Best interval found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub interval: HyperRectangle,
    pub objective: f64,
    pub mean: f64,
    pub sd: f64,
    pub coverage: f64,
}

/// Exhaustive search over intervals `[x_(i), x_(j)]` with endpoints at
/// distinct sample values and coverage `>= beta`, maximizing
/// `mean - gamma * sd`. Ties go to the narrower, then the leftmost, interval.
///
/// `sd` comes from a bootstrap pool with `bootstrap` settings, so it is the
/// same quantity the fitted objective uses. Costs `O(u^2)` intervals for `u`
/// distinct values, times `M` when `gamma > 0`.
pub fn oracle_1d(
    d: &Dataset,
    beta: f64,
    gamma: f64,
    bootstrap: &BootstrapConfig,
) -> Result<OracleResult> {
    if d.p() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: d.p(),
        });
    }
    if !(0.0..=1.0).contains(&beta) || !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(
            "oracle needs beta in [0, 1] and gamma >= 0".into(),
        ));
    }
    let n = d.n();
    let mut pts: Vec<(f64, f64)> = d.rows().zip(d.y()).map(|(r, &y)| (r[0], y)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // distinct values with cumulative counts and response sums
    let mut values: Vec<f64> = Vec::new();
    let mut cum_count = vec![0usize];
    let mut cum_sum = vec![0.0];
    for (x, y) in &pts {
        if values.last() != Some(x) {
            values.push(*x);
            cum_count.push(*cum_count.last().unwrap());
            cum_sum.push(*cum_sum.last().unwrap());
        }
        *cum_count.last_mut().unwrap() += 1;
        *cum_sum.last_mut().unwrap() += y;
    }
    let u = values.len();
    if u < 2 {
        return Err(Error::InvalidArgument(
            "oracle needs two distinct x values".into(),
        ));
    }
    let pool = if gamma > 0.0 {
        Some(BootstrapPool::new(d, *bootstrap)?)
    } else {
        None
    };
    let min_count = (beta * n as f64).ceil() as usize;

    let candidates: Vec<Option<(f64, usize, usize)>> = par::map_range(u - 1, |i| {
        let mut best: Option<(f64, usize, usize)> = None;
        for j in i + 1..u {
            let count = cum_count[j + 1] - cum_count[i];
            if count < min_count || (count as f64) / (n as f64) < beta {
                continue;
            }
            let mean = (cum_sum[j + 1] - cum_sum[i]) / count as f64;
            let obj = match &pool {
                Some(pool) => {
                    let r = RegionUnion::single(HyperRectangle {
                        lower: vec![values[i]],
                        upper: vec![values[j]],
                    });
                    match pool.sd(&r) {
                        Ok(sd) => mean - gamma * sd,
                        Err(_) => continue,
                    }
                }
                None => mean,
            };
            // for fixed i, increasing j only widens: keep the first maximum
            if best.is_none_or(|b| obj > b.0) {
                best = Some((obj, i, j));
            }
        }
        best
    });
    let mut best: Option<(f64, usize, usize)> = None;
    for (obj, i, j) in candidates.into_iter().flatten() {
        let replace = match best {
            None => true,
            Some((bo, bi, bj)) => {
                let (w, bw) = (values[j] - values[i], values[bj] - values[bi]);
                obj > bo || (obj == bo && (w < bw || (w == bw && values[i] < values[bi])))
            }
        };
        if replace {
            best = Some((obj, i, j));
        }
    }
    let (_, i, j) =
        best.ok_or_else(|| Error::InvalidArgument(format!("no interval reaches coverage {beta}")))?;
    let interval = HyperRectangle::interval(values[i], values[j])?;
    let region = RegionUnion::single(interval.clone());
    let est = estimate(d, &region)?;
    let sd = match &pool {
        Some(p) => p.sd(&region)?,
        None => BootstrapPool::new(d, *bootstrap)?.sd(&region)?,
    };
    let mean = est.mean.expect("non-empty by construction");
    Ok(OracleResult {
        interval,
        objective: mean - gamma * sd,
        mean,
        sd,
        coverage: est.coverage,
    })
}

/// Cartesian product of per-axis oracle intervals, each fitted on the
/// marginal data at coverage `per_axis_beta`.
pub fn separate_axes_baseline(
    d: &Dataset,
    per_axis_beta: f64,
    bootstrap: &BootstrapConfig,
) -> Result<RegionUnion> {
    let mut lower = Vec::with_capacity(d.p());
    let mut upper = Vec::with_capacity(d.p());
    for j in 0..d.p() {
        let marginal = d.select_features(&[j])?;
        let o = oracle_1d(&marginal, per_axis_beta, 0.0, bootstrap)?;
        lower.push(o.interval.lower[0]);
        upper.push(o.interval.upper[0]);
    }
    Ok(RegionUnion::single(HyperRectangle::new(lower, upper)?))
}
