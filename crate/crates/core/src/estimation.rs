//! Model-free estimators of the region-conditional mean, the coverage, and
//! the bootstrap standard deviation of the mean estimate.
//!
//! One evaluation of [`estimate`] scans every sample once and tests each box
//! with short-circuiting, so it costs `O(n * L * p)`.

use serde::{Deserialize, Serialize};

use crate::data::{resample_indices, Dataset};
use crate::error::{Error, Result};
use crate::region::RegionUnion;

/// Sample-average mean and sample-proportion coverage of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEstimate {
    /// `None` when no sample lies in the region.
    pub mean: Option<f64>,
    pub coverage: f64,
    pub inside_count: usize,
}

fn check_dim(d: &Dataset, r: &RegionUnion) -> Result<()> {
    if d.p() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.p(),
            found: r.dim(),
        });
    }
    Ok(())
}

/// Mean response and coverage in a single pass.
pub fn estimate(d: &Dataset, r: &RegionUnion) -> Result<RegionEstimate> {
    check_dim(d, r)?;
    Ok(estimate_unchecked(d, r))
}

pub(crate) fn estimate_unchecked(d: &Dataset, r: &RegionUnion) -> RegionEstimate {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (row, y) in d.rows().zip(d.y()) {
        if r.contains_unchecked(row) {
            sum += y;
            count += 1;
        }
    }
    RegionEstimate {
        mean: (count > 0).then(|| sum / count as f64),
        coverage: count as f64 / d.n() as f64,
        inside_count: count,
    }
}

pub fn saa_mean(d: &Dataset, r: &RegionUnion) -> Result<Option<f64>> {
    Ok(estimate(d, r)?.mean)
}

pub fn coverage(d: &Dataset, r: &RegionUnion) -> Result<f64> {
    Ok(estimate(d, r)?.coverage)
}

/// Number of bootstrap replicates and the seed of replicate 0; replicate
/// `m` is drawn with seed `seed + m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    #[serde(rename = "M")]
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidArgument(format!(
                "bootstrap needs M >= 2, got {}",
                self.replicates
            )));
        }
        Ok(())
    }

    /// Replicates with an empty region are redrawn, up to this many draws.
    pub fn max_attempts(&self) -> usize {
        10 * self.replicates
    }

    fn replicate_seed(&self, attempt: usize) -> u64 {
        self.seed.wrapping_add(attempt as u64)
    }
}

/// In-region mean of one resample, or `None` if the resample misses the
/// region entirely.
fn replicate_mean(d: &Dataset, r: &RegionUnion, seed: u64) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in resample_indices(d.n(), seed) {
        if r.contains_unchecked(d.row(i)) {
            sum += d.y()[i];
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Unbiased sample standard deviation (`1 / (m - 1)`).
pub fn sample_sd(values: &[f64]) -> f64 {
    sample_variance(values).sqrt()
}

pub fn sample_variance(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
}

fn top_up(
    d: &Dataset,
    r: &RegionUnion,
    cfg: &BootstrapConfig,
    means: &mut Vec<f64>,
    mut attempt: usize,
) -> Result<f64> {
    while means.len() < cfg.replicates && attempt < cfg.max_attempts() {
        if let Some(m) = replicate_mean(d, r, cfg.replicate_seed(attempt)) {
            means.push(m);
        }
        attempt += 1;
    }
    if means.len() < cfg.replicates {
        return Err(Error::BootstrapExhausted { attempts: attempt });
    }
    Ok(sample_sd(means))
}

/// Bootstrap standard deviation of the region mean, resampling directly.
///
/// Each replicate draws `n` rows with replacement and recomputes the mean;
/// replicates that land no sample in the region are replaced by the next
/// seed in sequence.
pub fn bootstrap_sd(d: &Dataset, r: &RegionUnion, cfg: &BootstrapConfig) -> Result<f64> {
    check_dim(d, r)?;
    cfg.validate()?;
    if estimate_unchecked(d, r).inside_count == 0 {
        return Err(Error::EmptyRegion);
    }
    top_up(d, r, cfg, &mut Vec::with_capacity(cfg.replicates), 0)
}

enum PoolLayout {
    /// `p = 1`: samples sorted by `x`, with per-replicate prefix sums of
    /// multiplicity and multiplicity-weighted response. Row `k` of each
    /// prefix table holds sums over the first `k` sorted samples.
    Sorted {
        xs: Vec<f64>,
        wy_prefix: Vec<f64>,
        w_prefix: Vec<u32>,
    },
    /// General `p`: multiplicity of each sample in each replicate,
    /// laid out `[row][replicate]`.
    Weights { w: Vec<u32> },
}

/// The first `M` bootstrap replicates of a dataset, stored as per-sample
/// multiplicities so the standard deviation of any region can be computed
/// without redrawing.
///
/// Every region sees the same resamples, so [`BootstrapPool::sd`] agrees with
/// [`bootstrap_sd`] for the same config and evaluating a candidate twice
/// gives the same value.
pub struct BootstrapPool<'a> {
    data: &'a Dataset,
    cfg: BootstrapConfig,
    layout: PoolLayout,
}

impl<'a> BootstrapPool<'a> {
    pub fn new(data: &'a Dataset, cfg: BootstrapConfig) -> Result<Self> {
        cfg.validate()?;
        let n = data.n();
        let m_count = cfg.replicates;
        let layout = if data.p() == 1 {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| data.row(a)[0].total_cmp(&data.row(b)[0]).then(a.cmp(&b)));
            let mut rank = vec![0; n];
            for (pos, &i) in order.iter().enumerate() {
                rank[i] = pos;
            }
            let mut w = vec![0u32; n * m_count];
            for m in 0..m_count {
                for i in resample_indices(n, cfg.replicate_seed(m)) {
                    w[rank[i] * m_count + m] += 1;
                }
            }
            let mut wy_prefix = vec![0.0; (n + 1) * m_count];
            let mut w_prefix = vec![0u32; (n + 1) * m_count];
            for (pos, &i) in order.iter().enumerate() {
                let y = data.y()[i];
                let (head, tail) = wy_prefix.split_at_mut((pos + 1) * m_count);
                let prev = &head[pos * m_count..];
                let (whead, wtail) = w_prefix.split_at_mut((pos + 1) * m_count);
                let wprev = &whead[pos * m_count..];
                let wrow = &w[pos * m_count..(pos + 1) * m_count];
                for m in 0..m_count {
                    tail[m] = prev[m] + f64::from(wrow[m]) * y;
                    wtail[m] = wprev[m] + wrow[m];
                }
            }
            let xs = order.iter().map(|&i| data.row(i)[0]).collect();
            PoolLayout::Sorted {
                xs,
                wy_prefix,
                w_prefix,
            }
        } else {
            let mut w = vec![0u32; n * m_count];
            for m in 0..m_count {
                for i in resample_indices(n, cfg.replicate_seed(m)) {
                    w[i * m_count + m] += 1;
                }
            }
            PoolLayout::Weights { w }
        };
        Ok(Self { data, cfg, layout })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.cfg
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    /// Bootstrap standard deviation of the mean over `r`.
    pub fn sd(&self, r: &RegionUnion) -> Result<f64> {
        check_dim(self.data, r)?;
        let m_count = self.cfg.replicates;
        let mut sums = vec![0.0; m_count];
        let mut counts = vec![0u32; m_count];
        let any_inside = match &self.layout {
            PoolLayout::Sorted {
                xs,
                wy_prefix,
                w_prefix,
            } => {
                let mut any = false;
                for b in r.boxes() {
                    let lo = xs.partition_point(|&v| v < b.lower[0]);
                    let hi = xs.partition_point(|&v| v <= b.upper[0]);
                    if hi <= lo {
                        continue;
                    }
                    any = true;
                    let (top, bottom) = (hi * m_count, lo * m_count);
                    for m in 0..m_count {
                        sums[m] += wy_prefix[top + m] - wy_prefix[bottom + m];
                        counts[m] += w_prefix[top + m] - w_prefix[bottom + m];
                    }
                }
                any
            }
            PoolLayout::Weights { w } => {
                let mut any = false;
                for (i, (row, &y)) in self.data.rows().zip(self.data.y()).enumerate() {
                    if !r.contains_unchecked(row) {
                        continue;
                    }
                    any = true;
                    let wrow = &w[i * m_count..(i + 1) * m_count];
                    for m in 0..m_count {
                        sums[m] += f64::from(wrow[m]) * y;
                        counts[m] += wrow[m];
                    }
                }
                any
            }
        };
        if !any_inside {
            return Err(Error::EmptyRegion);
        }
        let mut means: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / f64::from(c))
            .collect();
        top_up(self.data, r, &self.cfg, &mut means, m_count)
    }
}
