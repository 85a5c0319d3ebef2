//! Cross-replication estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, ReplicationRecord};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal distribution function, `0.5 * erfc(-z / sqrt 2)`.
pub fn normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Mean and unbiased variance of already-sorted values.
fn mean_var(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let ss: f64 = sorted.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Supremum distance between the empirical distribution of `samples` and the
/// standard normal. With `standardize`, samples are first centred and scaled
/// by their sample mean and sample standard deviation.
pub fn kolmogorov_distance(samples: &[f64], standardize: bool) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Insufficient {
            what: "samples",
            needed: 2,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let mut xs = sorted(samples);
    if standardize {
        let (mean, var) = mean_var(&xs);
        if !(var > 0.0) {
            return Err(Error::ZeroVariance);
        }
        let sd = var.sqrt();
        for x in &mut xs {
            *x = (*x - mean) / sd;
        }
    }
    let r = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let phi = normal_cdf(x);
        let above = (i + 1) as f64 / r - phi;
        let below = phi - i as f64 / r;
        d = d.max(above.abs()).max(below.abs());
    }
    Ok(d.min(1.0))
}

/// Exact integer moments: permutation-invariant to the last bit.
#[derive(Debug, Clone, Copy)]
struct IntMoments {
    count: usize,
    mean: f64,
    var: f64,
    /// Plug-in standard error of the unbiased variance.
    se_var: f64,
}

impl IntMoments {
    fn of(values: &[u64]) -> Self {
        let count = values.len();
        let r = count as u128;
        let sum: u128 = values.iter().map(|&v| u128::from(v)).sum();
        let sum_sq: u128 = values.iter().map(|&v| u128::from(v) * u128::from(v)).sum();
        let mean = sum as f64 / count as f64;
        let var = if count > 1 {
            (r * sum_sq - sum * sum) as f64 / (r * (r - 1)) as f64
        } else {
            0.0
        };
        let mut sorted: Vec<u64> = values.to_vec();
        sorted.sort_unstable();
        let m4 = sorted
            .iter()
            .map(|&v| (v as f64 - mean).powi(4))
            .sum::<f64>()
            / count as f64;
        let se_var = ((m4 - var * var).max(0.0) / count as f64).sqrt();
        IntMoments {
            count,
            mean,
            var,
            se_var,
        }
    }

    fn se_mean(&self) -> f64 {
        (self.var / self.count as f64).sqrt()
    }
}

/// Estimators across the replications of one configuration.
///
/// `dk_*` is `None` when the statistic was not collected or has zero
/// variance; the matching `*_zero_variance` flag tells the two apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySet {
    pub m: usize,
    pub n: f64,
    pub lambda: f64,
    pub r: f64,
    pub theta: f64,
    pub reps: usize,
    pub mean_point_count: f64,
    pub mean_n: f64,
    pub se_mean_n: f64,
    /// Unbiased sample variance of the largest-cluster size.
    pub var_n: f64,
    pub se_var_n: f64,
    /// `var_n / n^m`.
    pub sigma2_hat: f64,
    pub se_sigma2_hat: f64,
    /// `mean_n / n^m`, the largest-cluster density.
    pub rho_hat: f64,
    pub se_rho_hat: f64,
    pub dk_global: Option<f64>,
    pub dk_global_zero_variance: bool,
    pub second_mean: f64,
    pub se_second_mean: f64,
    /// `second_mean / mean_n`.
    pub second_over_largest: f64,
    /// Fraction of replications whose largest cluster was tied.
    pub global_tie_frac: f64,
    pub dk_local: Option<f64>,
    pub dk_local_zero_variance: bool,
    pub mean_n_prime: Option<f64>,
    pub var_n_prime: Option<f64>,
    /// Fraction of replications with `N' != N`.
    pub mismatch_frac: Option<f64>,
    pub se_mismatch_frac: Option<f64>,
    /// Mean of `|N' - N|`.
    pub mean_abs_gap: Option<f64>,
    pub se_mean_abs_gap: Option<f64>,
    /// `|Var N' - Var N|`.
    pub var_gap: Option<f64>,
    /// Fraction of replications with at least one tied window.
    pub e0_frac: Option<f64>,
}

fn dk_or_flag(values: &[u64]) -> Result<(Option<f64>, bool)> {
    let xs: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    match kolmogorov_distance(&xs, true) {
        Ok(d) => Ok((Some(d), false)),
        Err(Error::ZeroVariance) => Ok((None, true)),
        Err(e) => Err(e),
    }
}

fn frac(hits: usize, total: usize) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

pub fn summarize(records: &[ReplicationRecord], config: &ExperimentConfig) -> Result<SummarySet> {
    if records.len() < 2 {
        return Err(Error::Insufficient {
            what: "replication records",
            needed: 2,
            got: records.len(),
        });
    }
    let reps = records.len();
    let volume = config.n.powi(config.m as i32);

    let largest: Vec<u64> = records.iter().map(|r| r.largest).collect();
    let second: Vec<u64> = records.iter().map(|r| r.second_size).collect();
    let counts: Vec<u64> = records.iter().map(|r| r.point_count).collect();
    let big = IntMoments::of(&largest);
    let sec = IntMoments::of(&second);
    let (dk_global, dk_global_zero_variance) = dk_or_flag(&largest)?;

    let locals: Option<Vec<u64>> = records.iter().map(|r| r.n_prime).collect();
    let mut s = SummarySet {
        m: config.m,
        n: config.n,
        lambda: config.lambda,
        r: config.r,
        theta: config.theta,
        reps,
        mean_point_count: IntMoments::of(&counts).mean,
        mean_n: big.mean,
        se_mean_n: big.se_mean(),
        var_n: big.var,
        se_var_n: big.se_var,
        sigma2_hat: big.var / volume,
        se_sigma2_hat: big.se_var / volume,
        rho_hat: big.mean / volume,
        se_rho_hat: big.se_mean() / volume,
        dk_global,
        dk_global_zero_variance,
        second_mean: sec.mean,
        se_second_mean: sec.se_mean(),
        second_over_largest: if big.mean > 0.0 {
            sec.mean / big.mean
        } else {
            0.0
        },
        global_tie_frac: frac(records.iter().filter(|r| !r.global_unique).count(), reps).0,
        dk_local: None,
        dk_local_zero_variance: false,
        mean_n_prime: None,
        var_n_prime: None,
        mismatch_frac: None,
        se_mismatch_frac: None,
        mean_abs_gap: None,
        se_mean_abs_gap: None,
        var_gap: None,
        e0_frac: None,
    };

    if let Some(locals) = locals {
        let loc = IntMoments::of(&locals);
        let (dk, zero) = dk_or_flag(&locals)?;
        let gaps: Vec<u64> = largest
            .iter()
            .zip(&locals)
            .map(|(a, b)| a.abs_diff(*b))
            .collect();
        let gap = IntMoments::of(&gaps);
        let (mm, se_mm) = frac(gaps.iter().filter(|&&g| g != 0).count(), reps);
        s.dk_local = dk;
        s.dk_local_zero_variance = zero;
        s.mean_n_prime = Some(loc.mean);
        s.var_n_prime = Some(loc.var);
        s.mismatch_frac = Some(mm);
        s.se_mismatch_frac = Some(se_mm);
        s.mean_abs_gap = Some(gap.mean);
        s.se_mean_abs_gap = Some(gap.se_mean());
        s.var_gap = Some((loc.var - big.var).abs());
        s.e0_frac = Some(
            frac(
                records
                    .iter()
                    .filter(|r| r.e0_count.unwrap_or(0) > 0)
                    .count(),
                reps,
            )
            .0,
        );
    }
    Ok(s)
}

/// Least-squares line through `(ln n, ln dk)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Insufficient {
            what: "ladder points",
            needed: 3,
            got: points.len(),
        });
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::Insufficient {
            what: "distinct n values",
            needed: 3,
            got: ns.len(),
        });
    }
    for &(n, dk) in points {
        if !(n > 0.0 && n.is_finite()) || !(dk > 0.0 && dk.is_finite()) {
            return Err(Error::invalid(format!(
                "rate fit needs positive n and dk, got ({n}, {dk})"
            )));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, dk)| (n.ln(), dk.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: logs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// `(n, mean second size / (ln n)^(m/(m-1)))`.
    pub rows: Vec<(f64, f64)>,
    /// max/min of the normalized values is at most [`SCALING_BAND`].
    pub bounded: bool,
}

pub const SCALING_BAND: f64 = 4.0;

/// Second-largest cluster sizes normalized by `(ln n)^(m/(m-1))`.
pub fn second_largest_scaling(
    m: usize,
    groups: &[(f64, &[ReplicationRecord])],
) -> Result<ScalingReport> {
    let means: Vec<(f64, f64)> = groups
        .iter()
        .map(|(n, recs)| {
            let s: Vec<u64> = recs.iter().map(|r| r.second_size).collect();
            (
                *n,
                if s.is_empty() {
                    0.0
                } else {
                    IntMoments::of(&s).mean
                },
            )
        })
        .collect();
    normalized_second_sizes(m, &means)
}

/// As [`second_largest_scaling`], from per-n mean second sizes.
pub fn normalized_second_sizes(m: usize, means: &[(f64, f64)]) -> Result<ScalingReport> {
    if m < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {m}")));
    }
    if means.len() < 2 {
        return Err(Error::Insufficient {
            what: "ladder values of n",
            needed: 2,
            got: means.len(),
        });
    }
    let expo = m as f64 / (m as f64 - 1.0);
    let mut rows = Vec::with_capacity(means.len());
    for &(n, mean) in means {
        if !(n > 1.0) {
            return Err(Error::invalid(format!("n must exceed 1, got {n}")));
        }
        rows.push((n, mean / n.ln().powf(expo)));
    }
    let max = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(ScalingReport {
        rows,
        bounded: min > 0.0 && max / min <= SCALING_BAND,
    })
}

/// Number of strict increases in a sequence meant to be non-increasing.
pub fn count_inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}
