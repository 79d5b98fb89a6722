//! Command-line front end.
//!
//! Settings come from an optional JSON config file, then flags (flags win).
//! Every random component is seeded from the single global `seed`:
//! GA, bootstrap and simulation seeds are derived from it, so a report is
//! fully reproduced by its embedded config.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, split, Dataset};
use crate::error::{Error, Result};
use crate::estimation::estimate;
use crate::model_selection::{
    evaluate, fit, regularized_search, FitConfig, FitResult, GammaGrid, SearchConfig, SearchReport,
    SelectionPolicy,
};
use crate::par;
use crate::region::RegionUnion;
use crate::seed::derive_seed;
use crate::sim_bench::{
    generate, monte_carlo, oracle_1d, MonteCarloReport, OracleResult, Scenario, SimulationSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "envelope",
    version,
    about = "Coverage-constrained operating envelopes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one envelope at a fixed gamma (or run the full search when a gamma grid is given)
    Fit(Flags),
    /// Cross-validate a gamma grid, select gamma, refit and evaluate on held-out data
    Cv(Flags),
    /// Write a simulated dataset as CSV
    Simulate(Flags),
    /// Monte Carlo repetition study on a simulated scenario
    Mc(Flags),
    /// Exhaustive interval search for one-dimensional data
    Oracle(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV input with a header row
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Response column of the CSV input
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated feature columns (default: every other column)
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Simulation scenario: I-a, I-b, I-c, I-d or II
    #[arg(long)]
    pub scenario: Option<String>,
    /// Simulated sample count
    #[arg(long)]
    pub n: Option<usize>,
    /// Mixture shift for scenario I-a
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of disjoint boxes
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, conflicts_with = "gamma_grid")]
    pub gamma: Option<f64>,
    /// Comma-separated gamma candidates
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo repetitions
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// GA restarts per penalty weight
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    /// Bootstrap replicates M
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Fit report to compare against (oracle)
    #[arg(long)]
    pub fit_report: Option<PathBuf>,
}

/// Fully resolved settings; embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub response: String,
    pub features: Vec<String>,
    pub simulation: Option<SimulationSpec>,
    pub fit: FitConfig,
    pub gamma_grid: Option<GammaGrid>,
    pub folds: usize,
    pub train_fraction: Option<f64>,
    pub policy: SelectionPolicy,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub repetitions: usize,
    pub fit_report: Option<PathBuf>,
    /// Execution detail only; results do not depend on it.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            response: "y".into(),
            features: Vec::new(),
            simulation: None,
            fit: FitConfig::default(),
            gamma_grid: None,
            folds: 4,
            train_fraction: None,
            policy: SelectionPolicy::default(),
            seed: None,
            out: PathBuf::from("out"),
            repetitions: 20,
            fit_report: None,
            workers: None,
        }
    }
}

impl RunConfig {
    /// Config file (if any) overlaid with flags, with component seeds
    /// derived from the global seed.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        let f = flags.clone();
        if let Some(v) = f.input {
            cfg.input = Some(v);
        }
        if let Some(v) = f.response {
            cfg.response = v;
        }
        if let Some(v) = f.features {
            cfg.features = v;
        }
        if f.scenario.is_some() || f.n.is_some() || f.delta.is_some() {
            let mut sim = cfg.simulation.take().unwrap_or_default();
            if let Some(s) = &f.scenario {
                sim.scenario = Scenario::parse(s)?;
            }
            if let Some(n) = f.n {
                sim.n = n;
            }
            if let Some(d) = f.delta {
                sim.delta = d;
            }
            cfg.simulation = Some(sim);
        }
        if let Some(v) = f.l {
            cfg.fit.l = v;
        }
        if let Some(v) = f.beta {
            cfg.fit.beta = v;
        }
        if let Some(v) = f.gamma {
            cfg.fit.gamma = v;
            cfg.gamma_grid = None;
        }
        if let Some(v) = f.gamma_grid {
            cfg.gamma_grid = Some(GammaGrid::new(v)?);
        }
        if let Some(v) = f.folds {
            cfg.folds = v;
        }
        if let Some(v) = f.train_fraction {
            cfg.train_fraction = Some(v);
        }
        if let Some(v) = f.seed {
            cfg.seed = Some(v);
        }
        if let Some(v) = f.out {
            cfg.out = v;
        }
        if let Some(v) = f.repetitions {
            cfg.repetitions = v;
        }
        if let Some(v) = f.restarts {
            cfg.fit.restarts = v;
        }
        if let Some(v) = f.population {
            cfg.fit.ga.population_size = v;
        }
        if let Some(v) = f.generations {
            cfg.fit.ga.max_generations = v;
        }
        if let Some(v) = f.replicates {
            cfg.fit.bootstrap.replicates = v;
        }
        if let Some(v) = f.fit_report {
            cfg.fit_report = Some(v);
        }
        cfg.workers = f.workers;

        let seed = cfg.seed.ok_or_else(|| {
            Error::InvalidArgument("a --seed (or `seed` in the config) is required".into())
        })?;
        cfg.fit.ga.seed = derive_seed(seed, "run/ga", 0);
        cfg.fit.bootstrap.seed = derive_seed(seed, "run/bootstrap", 0);
        if let Some(sim) = cfg.simulation.as_mut() {
            sim.seed = derive_seed(seed, "run/simulate", 0);
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved configs carry a seed")
    }

    fn search_config(&self, grid: GammaGrid) -> SearchConfig {
        SearchConfig {
            fit: self.fit.clone(),
            gamma_grid: grid,
            folds: self.folds,
            train_fraction: self.train_fraction,
            policy: self.policy,
            seed: derive_seed(self.seed(), "run/search", 0),
        }
    }
}

/// Where the data came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub source: String,
    pub n: usize,
    pub p: usize,
    pub feature_names: Vec<String>,
    pub baseline_mean: f64,
}

/// Per-feature bounds of one box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedBound {
    pub feature: String,
    pub lower: f64,
    pub upper: f64,
}

pub fn named_envelope(region: &RegionUnion, names: &[String]) -> Vec<Vec<NamedBound>> {
    region
        .boxes()
        .iter()
        .map(|b| {
            names
                .iter()
                .enumerate()
                .map(|(j, name)| NamedBound {
                    feature: name.clone(),
                    lower: b.lower[j],
                    upper: b.upper[j],
                })
                .collect()
        })
        .collect()
}

/// Envelope summary in the layout of a results table: bounds per feature,
/// train and test means, and cross-validated bias and variance when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    #[serde(rename = "L")]
    pub l: usize,
    pub gamma: f64,
    pub envelope: Vec<Vec<NamedBound>>,
    pub train_mean: f64,
    pub train_coverage: f64,
    pub test_mean: Option<f64>,
    pub test_coverage: Option<f64>,
    pub bias: Option<f64>,
    pub variance: Option<f64>,
    pub baseline_mean: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: RunConfig,
    pub data: DataSummary,
    pub summary: EnvelopeSummary,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRunReport {
    pub config: RunConfig,
    pub data: DataSummary,
    pub summary: EnvelopeSummary,
    pub search: SearchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRunReport {
    pub config: RunConfig,
    pub report: MonteCarloReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub config: RunConfig,
    pub data: DataSummary,
    pub oracle: OracleResult,
    pub fit_objective: Option<f64>,
    pub gap: Option<f64>,
}

fn load_data(cfg: &RunConfig) -> Result<(Dataset, String)> {
    match (&cfg.input, &cfg.simulation) {
        (Some(path), _) => {
            let features = if cfg.features.is_empty() {
                let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
                    csv::ErrorKind::Io(source) => Error::Io {
                        path: path.clone(),
                        source,
                    },
                    kind => Error::InvalidArgument(format!("{kind:?}")),
                })?;
                reader
                    .headers()?
                    .iter()
                    .map(str::trim)
                    .filter(|h| *h != cfg.response)
                    .map(String::from)
                    .collect()
            } else {
                cfg.features.clone()
            };
            Ok((
                load_csv(path, &cfg.response, &features)?,
                path.display().to_string(),
            ))
        }
        (None, Some(sim)) => Ok((generate(sim)?, format!("simulation {:?}", sim.scenario))),
        (None, None) => Err(Error::InvalidArgument(
            "need --input or --scenario (or `input` / `simulation` in the config)".into(),
        )),
    }
}

fn summarize(d: &Dataset, source: String) -> DataSummary {
    DataSummary {
        source,
        n: d.n(),
        p: d.p(),
        feature_names: d.feature_names().to_vec(),
        baseline_mean: d.y_mean(),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// `c,generation,best_fitness` for every penalty weight tried.
pub fn history_csv(fit: &FitResult) -> String {
    let mut s = String::from("c,generation,best_fitness\n");
    for a in &fit.attempts {
        for (g, f) in a.history.iter().enumerate() {
            s.push_str(&format!("{},{g},{f}\n", a.c));
        }
    }
    s
}

fn fit_exit(feasible: bool) -> i32 {
    if feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    }
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<i32> {
    if let Some(grid) = &cfg.gamma_grid {
        return cmd_cv_with(cfg, grid.clone());
    }
    let (d, source) = load_data(cfg)?;
    let (train, test) = match cfg.train_fraction {
        Some(frac) => {
            // same split as the search path uses
            let search_seed = derive_seed(cfg.seed(), "run/search", 0);
            let (a, b) = split(&d, frac, derive_seed(search_seed, "split", 0))?;
            (a, Some(b))
        }
        None => (d.clone(), None),
    };
    let result = fit(&train, &cfg.fit)?;
    let (test_mean, test_coverage) = match &test {
        Some(t) => {
            let (m, c) = evaluate(t, &result.region)?;
            (m, Some(c))
        }
        None => (None, None),
    };
    let summary = EnvelopeSummary {
        l: cfg.fit.l,
        gamma: cfg.fit.gamma,
        envelope: named_envelope(&result.region, d.feature_names()),
        train_mean: result.train_mean,
        train_coverage: result.train_coverage,
        test_mean,
        test_coverage,
        bias: None,
        variance: None,
        baseline_mean: d.y_mean(),
        feasible: result.feasible,
    };
    ensure_dir(&cfg.out)?;
    write_text(&cfg.out, "fitness_history.csv", &history_csv(&result))?;
    let feasible = result.feasible;
    let report = FitReport {
        config: cfg.clone(),
        data: summarize(&d, source),
        summary,
        fit: result,
    };
    let path = write_json(&cfg.out, "report.json", &report)?;
    log::info!("wrote {}", path.display());
    Ok(fit_exit(feasible))
}

pub fn cmd_cv(cfg: &RunConfig) -> Result<i32> {
    let grid = match &cfg.gamma_grid {
        Some(g) => g.clone(),
        None => GammaGrid::new(vec![cfg.fit.gamma])?,
    };
    cmd_cv_with(cfg, grid)
}

fn cmd_cv_with(cfg: &RunConfig, grid: GammaGrid) -> Result<i32> {
    let (d, source) = load_data(cfg)?;
    let search = regularized_search(&d, &cfg.search_config(grid))?;
    let f = &search.final_fit;
    let summary = EnvelopeSummary {
        l: cfg.fit.l,
        gamma: search.gamma_star,
        envelope: named_envelope(&f.region, d.feature_names()),
        train_mean: f.train_mean,
        train_coverage: f.train_coverage,
        test_mean: search.test_mean,
        test_coverage: search.test_coverage,
        bias: search.selected.bias,
        variance: search.selected.variance,
        baseline_mean: search.baseline_mean,
        feasible: f.feasible,
    };
    ensure_dir(&cfg.out)?;
    write_text(&cfg.out, "fitness_history.csv", &history_csv(f))?;
    write_text(&cfg.out, "bias_variance.csv", &bias_variance_csv(&search))?;
    let feasible = f.feasible;
    let data = summarize(&d, source);
    write_json(
        &cfg.out,
        "report.json",
        &FitReport {
            config: cfg.clone(),
            data: data.clone(),
            summary: summary.clone(),
            fit: search.final_fit.clone(),
        },
    )?;
    write_json(
        &cfg.out,
        "cv_report.json",
        &CvRunReport {
            config: cfg.clone(),
            data,
            summary,
            search,
        },
    )?;
    Ok(fit_exit(feasible))
}

/// `gamma,bias,variance,empty_folds` per grid point.
pub fn bias_variance_csv(search: &SearchReport) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut s = String::from("gamma,bias,variance,empty_folds\n");
    for r in &search.cv_reports {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.gamma,
            opt(r.bias),
            opt(r.variance),
            r.empty_folds
        ));
    }
    s
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<i32> {
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("simulate needs --scenario".into()))?;
    let d = generate(sim)?;
    ensure_dir(&cfg.out)?;
    d.write_csv(&cfg.out.join("dataset.csv"), &cfg.response)?;
    Ok(EXIT_OK)
}

pub fn cmd_mc(cfg: &RunConfig) -> Result<i32> {
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("mc needs --scenario".into()))?;
    let report = monte_carlo(
        sim,
        &cfg.fit,
        cfg.repetitions,
        &sim.scenario.subregion_cuts(),
    )?;
    ensure_dir(&cfg.out)?;
    write_text(&cfg.out, "mc_counts.csv", &report.counts_csv())?;
    write_json(
        &cfg.out,
        "mc_report.json",
        &McRunReport {
            config: cfg.clone(),
            report,
        },
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<i32> {
    let (d, source) = load_data(cfg)?;
    let oracle = oracle_1d(&d, cfg.fit.beta, cfg.fit.gamma, &cfg.fit.bootstrap)?;
    let fit_objective = match &cfg.fit_report {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let report: FitReport = serde_json::from_str(&text)?;
            // score the reported region on this data with this config
            let est = estimate(&d, &report.fit.region)?;
            let sd = crate::estimation::BootstrapPool::new(&d, cfg.fit.bootstrap)?
                .sd(&report.fit.region)?;
            est.mean.map(|m| m - cfg.fit.gamma * sd)
        }
        None => None,
    };
    let gap = fit_objective.map(|f| oracle.objective - f);
    if let Some(g) = gap {
        println!("objective gap (oracle - fit): {g:e}");
    }
    println!(
        "oracle interval [{}, {}] objective {}",
        oracle.interval.lower[0], oracle.interval.upper[0], oracle.objective
    );
    ensure_dir(&cfg.out)?;
    write_json(
        &cfg.out,
        "oracle_report.json",
        &OracleReport {
            config: cfg.clone(),
            data: summarize(&d, source),
            oracle,
            fit_objective,
            gap,
        },
    )?;
    Ok(EXIT_OK)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (flags, cmd): (&Flags, fn(&RunConfig) -> Result<i32>) = match &cli.command {
        Command::Fit(f) => (f, cmd_fit),
        Command::Cv(f) => (f, cmd_cv),
        Command::Simulate(f) => (f, cmd_simulate),
        Command::Mc(f) => (f, cmd_mc),
        Command::Oracle(f) => (f, cmd_oracle),
    };
    let outcome = RunConfig::resolve(flags).and_then(|cfg| {
        let workers = cfg.workers.or(Some(par::default_workers()));
        par::install(workers, || cmd(&cfg))
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_and_seed_is_required() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(
            &path,
            r#"{"fit": {"beta": 0.3, "L": 2}, "seed": 5, "folds": 3}"#,
        )
        .unwrap();
        let flags = Flags {
            config: Some(path.clone()),
            beta: Some(0.4),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!(cfg.fit.beta, 0.4);
        assert_eq!(cfg.fit.l, 2);
        assert_eq!(cfg.folds, 3);
        assert_eq!(cfg.fit.ga.seed, derive_seed(5, "run/ga", 0));

        assert!(RunConfig::resolve(&Flags::default()).is_err());
    }

    #[test]
    fn gamma_flag_clears_grid() {
        let flags = Flags {
            gamma_grid: Some(vec![0.0, 1.0]),
            seed: Some(1),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&flags).unwrap().gamma_grid.is_some());
        let flags = Flags {
            gamma: Some(2.0),
            seed: Some(1),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert!(cfg.gamma_grid.is_none());
        assert_eq!(cfg.fit.gamma, 2.0);
    }

    #[test]
    fn workers_do_not_enter_the_echoed_config() {
        let flags = Flags {
            seed: Some(1),
            workers: Some(3),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(!json.contains("workers"));
    }
}
