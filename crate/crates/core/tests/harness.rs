use perclab_core::harness::*;
use perclab_core::oracle::naive_clusters;
use perclab_core::stats::{summarize, SummarySet};
use perclab_core::*;

fn base() -> ExperimentConfig {
    ExperimentConfig {
        n: 20.0,
        reps: 24,
        theta: 1.0,
        master_seed: 0x5eed,
        ..ExperimentConfig::default()
    }
}

fn csv_without_wall(records: &[ReplicationRecord]) -> String {
    let text = records_to_csv(records).unwrap();
    text.lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn thread_count_does_not_change_records() {
    let one = run_experiment(&ExperimentConfig {
        parallelism: Parallelism::Threads(1),
        ..base()
    })
    .unwrap();
    for threads in [
        Parallelism::Threads(3),
        Parallelism::Threads(8),
        Parallelism::Auto,
    ] {
        let many = run_experiment(&ExperimentConfig {
            parallelism: threads,
            ..base()
        })
        .unwrap();
        assert_eq!(csv_without_wall(&one), csv_without_wall(&many));
    }
}

#[test]
fn oracle_check_reproduces_every_record() {
    let cfg = ExperimentConfig {
        n: 40.0,
        theta: 2.0,
        reps: 100,
        master_seed: 31,
        oracle_check: true,
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&cfg).unwrap();
    assert_eq!(records.len(), 100);
    // the same check run on stored records catches tampering
    let mut bad = records[..3].to_vec();
    bad[1].n_prime = bad[1].n_prime.map(|v| v + 1);
    assert!(matches!(
        oracle_check_records(&cfg, &bad),
        Err(Error::OracleMismatch { rep_id: 1, .. })
    ));
}

#[test]
fn rho_hat_matches_oracle_clusterer() {
    let cfg = ExperimentConfig {
        n: 60.0,
        reps: 400,
        master_seed: 606,
        compute_local: false,
        ..ExperimentConfig::default()
    };
    let (records, summary) = simulate(&cfg).unwrap();
    let slow: Vec<ReplicationRecord> = records
        .iter()
        .map(|r| {
            let ps = sample_replication(&cfg, r.stream_index).unwrap();
            let part = naive_clusters(&ps, cfg.r).unwrap();
            ReplicationRecord {
                largest: part.largest() as u64,
                second_size: part.second() as u64,
                ..r.clone()
            }
        })
        .collect();
    let again = summarize(&slow, &cfg).unwrap();
    assert_eq!(
        format!("{:.3}", summary.rho_hat),
        format!("{:.3}", again.rho_hat)
    );
    assert!(summary.rho_hat > 1.5 && summary.rho_hat < 2.0);
}

#[test]
fn csv_and_json_round_trip_exactly() {
    let cfg = ExperimentConfig {
        n: 10.0,
        reps: 500,
        master_seed: 1,
        ..ExperimentConfig::default()
    };
    let (records, summary) = simulate(&cfg).unwrap();
    let text = records_to_csv(&records).unwrap();
    let back = read_records_csv(text.as_bytes()).unwrap();
    assert_eq!(back.len(), 500);
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.wall_ms.to_bits(), b.wall_ms.to_bits());
    }
    assert_eq!(back, records);
    let again = summarize(&back, &cfg).unwrap();
    assert_eq!(again, summary);

    let mut json = Vec::new();
    emit_summary_json(&mut json, &cfg, &summary).unwrap();
    let doc: SummaryDocument = serde_json::from_slice(&json).unwrap();
    assert_eq!(doc.summary, summary);
    assert_eq!(doc.config, cfg);
}

#[test]
fn summary_ignores_record_order() {
    let (mut records, summary) = simulate(&base()).unwrap();
    records.reverse();
    records.rotate_left(5);
    assert_eq!(summarize(&records, &base()).unwrap(), summary);
}

fn planted(n: f64, dk: f64, second: f64) -> SummarySet {
    let (_, mut s) = simulate(&ExperimentConfig {
        n: 8.0,
        reps: 4,
        ..base()
    })
    .unwrap();
    s.n = n;
    s.dk_global = Some(dk);
    s.dk_local = Some(dk * 1.1);
    s.second_mean = second;
    s
}

#[test]
fn ladder_fits_planted_decay() {
    let rungs: Vec<SummarySet> = [80.0, 20.0, 40.0]
        .iter()
        .map(|&n: &f64| planted(n, 3.0 * n.powf(-1.0), n.ln().powi(2) * 2.0))
        .collect();
    let rep = assemble_ladder(ThetaRule::Fixed, rungs).unwrap();
    let ns: Vec<f64> = rep.summaries.iter().map(|s| s.n).collect();
    assert_eq!(ns, vec![20.0, 40.0, 80.0]);
    let fit = rep.rate_fit_global.unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12 && fit.r2 > 1.0 - 1e-12);
    assert!((rep.rate_fit_local.unwrap().slope + 1.0).abs() < 1e-12);
    assert_eq!(
        (rep.dk_global_inversions, rep.dk_local_inversions),
        (0, Some(0))
    );
    assert!(rep.second_largest_scaling.bounded);
}

#[test]
fn ladder_runs_each_rung() {
    let (rep, records) = run_ladder(
        &ExperimentConfig { reps: 12, ..base() },
        &[12.0, 8.0, 16.0],
        ThetaRule::ProportionalToLnNPower { exponent: 1.0 },
    )
    .unwrap();
    assert_eq!(records.len(), 3);
    for ((s, recs), n) in rep.summaries.iter().zip(&records).zip([8.0f64, 12.0, 16.0]) {
        assert_eq!(s.n, n);
        let cfg = ladder_config(&ExperimentConfig { reps: 12, ..base() }, n, rep.theta_rule);
        assert_eq!(
            recs[0].point_count as usize,
            sample_replication(&cfg, 0).unwrap().len()
        );
        assert!((s.theta - n.ln()).abs() < 1e-12);
        assert_eq!(s.reps, 12);
    }
    assert!(run_ladder(&base(), &[8.0, 12.0], ThetaRule::Fixed).is_err());
}

#[test]
fn calibration_reaches_zero_at_covering_theta() {
    let cfg = ExperimentConfig {
        n: 16.0,
        reps: 20,
        master_seed: 2,
        ..ExperimentConfig::default()
    };
    let cover = localscore::covering_theta(16.0, 2) * 1.01;
    let rows = calibrate_theta(&cfg, &[0.5, 2.0, cover]).unwrap();
    let last = rows.last().unwrap();
    assert_eq!((last.mismatch_frac, last.mean_mismatch_count), (0.0, 0.0));
    assert!(rows[0].mismatch_frac >= last.mismatch_frac);
    let mut out = Vec::new();
    write_calibration_csv(&mut out, &rows).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 4);
}

#[test]
fn oversized_runs_are_refused_before_sampling() {
    let cfg = ExperimentConfig { n: 1e6, ..base() };
    assert!(matches!(
        run_experiment(&cfg),
        Err(Error::ResourceLimit { .. })
    ));
}
