//! Experiment orchestration: replications, ladders over `n`, theta sweeps.
//!
//! Replication `i` always draws from stream `i` of the master seed, and
//! results are collected in replication order, so output depends only on the
//! configuration (timings aside), never on the thread count.

mod config;
mod io;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    parse_seed, ExperimentConfig, Parallelism, CONFIG_KEYS, DEFAULT_MAX_EXPECTED_POINTS,
};
pub use io::{
    fmt17, read_records_csv, records_to_csv, to_json17, write_json17, write_records_csv,
    ReplicationRecord, CSV_HEADER,
};

use crate::clusters::{find_clusters, top_clusters};
use crate::error::{Error, Result};
use crate::localscore::{CouplingReport, LocalScorer};
use crate::pointproc::{derive_stream, sample_poisson, Aabb, PointSet};
use crate::stats::{
    count_inversions, normalized_second_sizes, rate_fit, summarize, RateFit, ScalingReport,
    SummarySet,
};

/// Environment variable naming the default output directory of the CLI.
pub const OUTPUT_DIR_ENV: &str = "PERCLAB_OUTPUT_DIR";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs `f` on a pool with the configured number of threads.
pub fn with_pool<T: Send>(parallelism: Parallelism, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.threads())
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Samples the configuration of replication `rep_id`.
pub fn sample_replication(config: &ExperimentConfig, rep_id: u64) -> Result<PointSet> {
    let bbox = Aabb::centered_cube(config.m, config.n)?;
    sample_poisson(
        &bbox,
        config.lambda,
        &mut derive_stream(config.master_seed, rep_id),
    )
}

pub fn run_replication(config: &ExperimentConfig, rep_id: u64) -> Result<ReplicationRecord> {
    let points = sample_replication(config, rep_id)?;
    let started = Instant::now();
    let labeling = find_clusters(&points, config.r)?;
    let top = top_clusters(&labeling);
    let coupling = if config.compute_local {
        Some(LocalScorer::with_labeling(&points, labeling, config.theta, config.r)?.total())
    } else {
        None
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let record = ReplicationRecord {
        rep_id,
        stream_index: rep_id,
        point_count: points.len() as u64,
        largest: top.largest_size as u64,
        second_size: top.second_size as u64,
        global_unique: top.largest_unique,
        n_prime: coupling.map(|c| c.n_local),
        mismatch_count: coupling.map(|c| c.mismatch_count),
        e0_count: coupling.map(|c| c.e0_count),
        e1_count: coupling.map(|c| c.e1_count),
        e2_count: coupling.map(|c| c.e2_count),
        e3_count: coupling.filter(|_| config.compute_e3).map(|c| c.e3_count),
        wall_ms,
    };
    if config.oracle_check {
        oracle_check_record(config, &points, &record)?;
    }
    Ok(record)
}

/// Recomputes a record's cluster sizes and `N'` with the quadratic oracles.
#[cfg(feature = "oracle")]
fn oracle_check_record(
    config: &ExperimentConfig,
    points: &PointSet,
    record: &ReplicationRecord,
) -> Result<()> {
    use crate::oracle::{naive_clusters, naive_localized_total};

    let mismatch = |detail: String| Error::OracleMismatch {
        rep_id: record.rep_id,
        detail,
    };
    if points.len() as u64 != record.point_count {
        return Err(mismatch(format!(
            "resampled {} points, record has {}",
            points.len(),
            record.point_count
        )));
    }
    let part = naive_clusters(points, config.r)?;
    if (part.largest() as u64, part.second() as u64) != (record.largest, record.second_size) {
        return Err(mismatch(format!(
            "largest/second: oracle ({}, {}), record ({}, {})",
            part.largest(),
            part.second(),
            record.largest,
            record.second_size
        )));
    }
    if let Some(n_prime) = record.n_prime {
        let naive = naive_localized_total(points, config.theta, config.r)?;
        if naive != n_prime {
            return Err(mismatch(format!("N': oracle {naive}, record {n_prime}")));
        }
    }
    Ok(())
}

#[cfg(not(feature = "oracle"))]
fn oracle_check_record(_: &ExperimentConfig, _: &PointSet, _: &ReplicationRecord) -> Result<()> {
    Err(Error::OracleUnavailable)
}

/// Re-derives every record from its stream and checks it against the oracles.
pub fn oracle_check_records(
    config: &ExperimentConfig,
    records: &[ReplicationRecord],
) -> Result<()> {
    with_pool(config.parallelism, || {
        records.par_iter().try_for_each(|rec| {
            let points = sample_replication(config, rec.stream_index)?;
            oracle_check_record(config, &points, rec)
        })
    })?
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReplicationRecord>> {
    config.validate()?;
    let records = with_pool(config.parallelism, || {
        (0..config.reps)
            .into_par_iter()
            .map(|i| run_replication(config, i))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(records)
}

/// Runs and summarizes one configuration, warning on subcritical symptoms.
pub fn simulate(config: &ExperimentConfig) -> Result<(Vec<ReplicationRecord>, SummarySet)> {
    let records = run_experiment(config)?;
    let summary = summarize(&records, config)?;
    warn_if_subcritical(&summary);
    Ok((records, summary))
}

/// Below this largest-cluster density relative to `lambda` the run looks
/// subcritical.
pub const SUBCRITICAL_WARN_FRACTION: f64 = 0.05;

pub fn looks_subcritical(s: &SummarySet) -> bool {
    s.rho_hat < SUBCRITICAL_WARN_FRACTION * s.lambda
}

fn warn_if_subcritical(s: &SummarySet) {
    if looks_subcritical(s) {
        log::warn!(
            "largest-cluster density {:.4} is tiny next to lambda = {} at n = {}; \
             the intensity may be below the percolation threshold",
            s.rho_hat,
            s.lambda,
            s.n
        );
    }
}

/// How theta varies along a ladder of box sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ThetaRule {
    /// The base configuration's theta at every `n`.
    Fixed,
    /// `theta(n) = theta * (ln n)^exponent`.
    ProportionalToLnNPower { exponent: f64 },
}

impl ThetaRule {
    pub fn theta_at(&self, base: f64, n: f64) -> f64 {
        match *self {
            ThetaRule::Fixed => base,
            ThetaRule::ProportionalToLnNPower { exponent } => base * n.ln().powf(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub theta_rule: ThetaRule,
    pub summaries: Vec<SummarySet>,
    pub rate_fit_global: Option<RateFit>,
    pub rate_fit_local: Option<RateFit>,
    pub second_largest_scaling: ScalingReport,
    /// Strict increases of `dk_global` along the ladder.
    pub dk_global_inversions: usize,
    pub dk_local_inversions: Option<usize>,
}

fn fit_dk(summaries: &[SummarySet], pick: impl Fn(&SummarySet) -> Option<f64>) -> Option<RateFit> {
    let pts: Option<Vec<(f64, f64)>> = summaries
        .iter()
        .map(|s| pick(s).map(|d| (s.n, d)))
        .collect();
    pts.and_then(|p| rate_fit(&p).ok())
}

/// Rate fits and second-largest scaling over per-`n` summaries (sorted by `n`).
pub fn assemble_ladder(
    theta_rule: ThetaRule,
    mut summaries: Vec<SummarySet>,
) -> Result<LadderReport> {
    if summaries.len() < 3 {
        return Err(Error::Insufficient {
            what: "ladder values of n",
            needed: 3,
            got: summaries.len(),
        });
    }
    summaries.sort_by(|a, b| a.n.total_cmp(&b.n));
    let m = summaries[0].m;
    let means: Vec<(f64, f64)> = summaries.iter().map(|s| (s.n, s.second_mean)).collect();
    let second_largest_scaling = normalized_second_sizes(m, &means)?;
    let dk_g: Option<Vec<f64>> = summaries.iter().map(|s| s.dk_global).collect();
    let dk_l: Option<Vec<f64>> = summaries.iter().map(|s| s.dk_local).collect();
    Ok(LadderReport {
        theta_rule,
        rate_fit_global: fit_dk(&summaries, |s| s.dk_global),
        rate_fit_local: fit_dk(&summaries, |s| s.dk_local),
        second_largest_scaling,
        dk_global_inversions: dk_g.map_or(0, |d| count_inversions(&d)),
        dk_local_inversions: dk_l.map(|d| count_inversions(&d)),
        summaries,
    })
}

/// Configuration used at ladder rung `n`.
pub fn ladder_config(base: &ExperimentConfig, n: f64, rule: ThetaRule) -> ExperimentConfig {
    ExperimentConfig {
        n,
        theta: rule.theta_at(base.theta, n),
        ..base.clone()
    }
}

/// Runs `base` at every box side in `n_values`, then fits the decay of the
/// Kolmogorov distances across the ladder.
pub fn run_ladder(
    base: &ExperimentConfig,
    n_values: &[f64],
    theta_rule: ThetaRule,
) -> Result<(LadderReport, Vec<Vec<ReplicationRecord>>)> {
    if n_values.len() < 3 {
        return Err(Error::Insufficient {
            what: "ladder values of n",
            needed: 3,
            got: n_values.len(),
        });
    }
    // rungs run in increasing n so records line up with the sorted summaries
    let mut sorted = n_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut summaries = Vec::with_capacity(sorted.len());
    let mut all = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        let cfg = ladder_config(base, n, theta_rule);
        let (records, summary) = simulate(&cfg)?;
        log::info!(
            "ladder n = {n}: mean N = {:.2}, dk = {:?}",
            summary.mean_n,
            summary.dk_global
        );
        summaries.push(summary);
        all.push(records);
    }
    Ok((assemble_ladder(theta_rule, summaries)?, all))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub theta: f64,
    pub half_edge: f64,
    /// Fraction of replications with `N' != N`.
    pub mismatch_frac: f64,
    /// Fraction of replications with a tied window somewhere.
    pub e0_frac: f64,
    pub mean_wall_ms: f64,
    pub mean_mismatch_count: f64,
    /// E1/E2 points whose window-largest cluster is connected to the global
    /// largest, summed over replications.
    pub e12_outside_e3: u64,
    /// E1/E2 points summed over replications.
    pub e12_points: u64,
}

/// Per-replication coupling results for every theta, on one shared sample.
#[derive(Debug, Clone)]
pub struct PairedCoupling {
    pub rep_id: u64,
    pub coord_hash: u64,
    pub largest: u64,
    pub per_theta: Vec<(CouplingReport, f64)>,
}

/// Scores every replication under each theta. Each replication is sampled
/// and clustered once, so the thetas are compared on identical inputs.
pub fn paired_couplings(config: &ExperimentConfig, thetas: &[f64]) -> Result<Vec<PairedCoupling>> {
    config.validate()?;
    if thetas.len() < 2 {
        return Err(Error::Insufficient {
            what: "theta values",
            needed: 2,
            got: thetas.len(),
        });
    }
    for &t in thetas {
        crate::localscore::half_edge(t, config.n, config.m)?;
    }
    with_pool(config.parallelism, || {
        (0..config.reps)
            .into_par_iter()
            .map(|rep_id| {
                let points = sample_replication(config, rep_id)?;
                let labeling = find_clusters(&points, config.r)?;
                let largest = top_clusters(&labeling).largest_size as u64;
                let per_theta = thetas
                    .iter()
                    .map(|&theta| {
                        let started = Instant::now();
                        let rep =
                            LocalScorer::with_labeling(&points, labeling.clone(), theta, config.r)?
                                .total();
                        Ok((rep, started.elapsed().as_secs_f64() * 1e3))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PairedCoupling {
                    rep_id,
                    coord_hash: points.coord_hash(),
                    largest,
                    per_theta,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn calibration_rows(
    config: &ExperimentConfig,
    thetas: &[f64],
    paired: &[PairedCoupling],
) -> Result<Vec<CalibrationRow>> {
    let reps = paired.len() as f64;
    thetas
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let col = || paired.iter().map(move |p| p.per_theta[k]);
            let mismatched = paired
                .iter()
                .filter(|p| p.per_theta[k].0.n_local != p.largest)
                .count();
            Ok(CalibrationRow {
                theta,
                half_edge: crate::localscore::half_edge(theta, config.n, config.m)?,
                mismatch_frac: mismatched as f64 / reps,
                e0_frac: col().filter(|(c, _)| c.e0_count > 0).count() as f64 / reps,
                mean_wall_ms: col().map(|(_, ms)| ms).sum::<f64>() / reps,
                mean_mismatch_count: col().map(|(c, _)| c.mismatch_count as f64).sum::<f64>()
                    / reps,
                e12_outside_e3: col().map(|(c, _)| c.e12_outside_e3).sum(),
                e12_points: col().map(|(c, _)| c.e1_count + c.e2_count).sum(),
            })
        })
        .collect()
}

/// Coupling statistics for each theta over the same replications.
pub fn calibrate_theta(config: &ExperimentConfig, thetas: &[f64]) -> Result<Vec<CalibrationRow>> {
    let paired = paired_couplings(config, thetas)?;
    calibration_rows(config, thetas, &paired)
}

pub fn write_calibration_csv<W: std::io::Write>(out: W, rows: &[CalibrationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "theta",
        "half_edge",
        "mismatch_frac",
        "e0_frac",
        "mean_wall_ms",
        "mean_mismatch_count",
        "e12_outside_e3",
        "e12_points",
    ])?;
    for r in rows {
        w.write_record([
            fmt17(r.theta),
            fmt17(r.half_edge),
            fmt17(r.mismatch_frac),
            fmt17(r.e0_frac),
            fmt17(r.mean_wall_ms),
            fmt17(r.mean_mismatch_count),
            r.e12_outside_e3.to_string(),
            r.e12_points.to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| Error::io("flushing calibration csv", e))?;
    Ok(())
}

/// JSON written by `simulate` and `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub version: String,
    pub config: ExperimentConfig,
    pub summary: SummarySet,
}

impl SummaryDocument {
    pub fn new(config: &ExperimentConfig, summary: SummarySet) -> Self {
        SummaryDocument {
            version: VERSION.to_string(),
            config: config.clone(),
            summary,
        }
    }
}

/// JSON written by `ladder`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderDocument {
    pub version: String,
    pub config: ExperimentConfig,
    pub n_values: Vec<f64>,
    pub report: LadderReport,
}

pub fn emit_summary_json<W: std::io::Write>(
    out: W,
    config: &ExperimentConfig,
    summary: &SummarySet,
) -> Result<()> {
    write_json17(out, &SummaryDocument::new(config, summary.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 12.0,
            reps: 6,
            theta: 1.0,
            master_seed: 99,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn rejects_zero_reps() {
        let c = ExperimentConfig { reps: 0, ..small() };
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn records_are_in_rep_order() {
        let recs = run_experiment(&small()).unwrap();
        assert_eq!(recs.len(), 6);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!((r.rep_id, r.stream_index), (i as u64, i as u64));
            assert!(r.largest >= r.second_size);
            assert!(r.n_prime.unwrap() <= r.point_count);
            assert!(r.e3_count.is_some());
        }
    }

    #[test]
    fn optional_fields_follow_toggles() {
        let c = ExperimentConfig {
            compute_local: false,
            ..small()
        };
        let r = &run_experiment(&c).unwrap()[0];
        assert!(r.n_prime.is_none() && r.e0_count.is_none() && r.e3_count.is_none());
        let c = ExperimentConfig {
            compute_e3: false,
            ..small()
        };
        let r = &run_experiment(&c).unwrap()[0];
        assert!(r.n_prime.is_some() && r.e3_count.is_none());
    }

    #[test]
    fn theta_rules() {
        assert_eq!(ThetaRule::Fixed.theta_at(2.0, 50.0), 2.0);
        let r = ThetaRule::ProportionalToLnNPower { exponent: 1.0 };
        assert!((r.theta_at(2.0, 50.0) - 2.0 * 50f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ladder_needs_three_rungs() {
        assert!(run_ladder(&small(), &[10.0], ThetaRule::Fixed).is_err());
        assert!(run_ladder(&small(), &[10.0, 20.0], ThetaRule::Fixed).is_err());
    }

    #[test]
    fn calibrate_needs_two_thetas() {
        assert!(calibrate_theta(&small(), &[1.0]).is_err());
    }

    #[test]
    fn paired_samples_are_identical_across_thetas() {
        let c = small();
        let paired = paired_couplings(&c, &[0.5, 1.0, 2.0]).unwrap();
        for p in &paired {
            assert_eq!(
                p.coord_hash,
                sample_replication(&c, p.rep_id).unwrap().coord_hash()
            );
            assert_eq!(p.per_theta.len(), 3);
        }
    }
}
