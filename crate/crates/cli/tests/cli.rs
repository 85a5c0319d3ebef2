use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn perclab(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_perclab"));
    cmd.args(args).env_remove("PERCLAB_OUTPUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("PERCLAB_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL: [&str; 6] = ["--n", "12", "--reps", "8", "--theta", "1"];

#[test]
fn simulate_then_analyze_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(
        &cfg,
        "# small run\nm = 2\nn = 30\nlambda = 2\nreps = 3\nmaster_seed = 5\n",
    )
    .unwrap();
    let run_dir = dir.path().join("run");
    let out = perclab(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--n",
            "12",
            "--reps",
            "8",
            "--seed",
            "0xBEEF",
            "--out-dir",
            run_dir.to_str().unwrap(),
        ],
        None,
    );
    ok(&out);
    let echoed = fs::read_to_string(run_dir.join("config.txt")).unwrap();
    assert!(echoed.contains("n = 12"), "{echoed}");
    assert!(echoed.contains("reps = 8"));
    assert!(echoed.contains(&format!("master_seed = {}", 0xBEEF)));
    let csv = fs::read_to_string(run_dir.join("records.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "rep_id,stream_index,point_count,N,second_size,global_unique,N_prime,mismatch_count,e0_count,e1_count,e2_count,e3_count,wall_ms"
    );
    assert_eq!(csv.lines().count(), 9);

    let records = run_dir.join("records.csv");
    let again = dir.path().join("again");
    ok(&perclab(
        &[
            "analyze",
            "--config",
            run_dir.join("config.txt").to_str().unwrap(),
            "--out-dir",
            again.to_str().unwrap(),
            records.to_str().unwrap(),
        ],
        None,
    ));
    assert_eq!(
        fs::read(run_dir.join("summary.json")).unwrap(),
        fs::read(again.join("summary.json")).unwrap()
    );

    let cfg_echo = run_dir.join("config.txt");
    let check = ["oracle-check", "--config", cfg_echo.to_str().unwrap()];
    ok(&perclab(
        &[&check[..], &[records.to_str().unwrap()]].concat(),
        None,
    ));

    // tamper with one N and the check must fail
    let mut lines: Vec<String> = csv.lines().map(str::to_owned).collect();
    let mut fields: Vec<String> = lines[2].split(',').map(str::to_owned).collect();
    fields[3] = (fields[3].parse::<u64>().unwrap() + 1).to_string();
    lines[2] = fields.join(",");
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let out = perclab(&[&check[..], &[bad.to_str().unwrap()]].concat(), None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle"));
}

#[test]
fn output_dir_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    ok(&perclab(
        &[&["simulate"][..], &SMALL].concat(),
        Some(dir.path()),
    ));
    assert!(dir.path().join("records.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn calibrate_and_ladder_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&perclab(
        &[
            &["calibrate-theta", "--thetas", "0.5,1,2", "--out-dir", d][..],
            &SMALL,
        ]
        .concat(),
        None,
    ));
    let cal = fs::read_to_string(dir.path().join("calibration.csv")).unwrap();
    assert_eq!(cal.lines().count(), 4);
    assert!(cal.starts_with("theta,half_edge,mismatch_frac,e0_frac,mean_wall_ms"));

    ok(&perclab(
        &[
            &[
                "ladder",
                "--n-values",
                "8,10,12",
                "--theta-rule",
                "ln-power",
                "--out-dir",
                d,
            ][..],
            &SMALL[2..],
        ]
        .concat(),
        None,
    ));
    for n in ["8", "10", "12"] {
        assert!(dir.path().join(format!("records_n{n}.csv")).exists());
        assert!(dir.path().join(format!("summary_n{n}.json")).exists());
    }
    let ladder = fs::read_to_string(dir.path().join("ladder.json")).unwrap();
    assert!(
        ladder.contains("\"rule\": \"proportional-to-ln-n-power\""),
        "{ladder}"
    );
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = perclab(&["simulate", "--seed", "0xZZ", "--out-dir", d], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--master-seed"));
    let out = perclab(&["simulate", "--reps", "0", "--out-dir", d], None);
    assert!(!out.status.success());
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "n = 10\nbogus = 1\n").unwrap();
    let out = perclab(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            d,
        ],
        None,
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = perclab(&["ladder", "--n-values", "10,20", "--out-dir", d], None);
    assert!(!out.status.success());
}
