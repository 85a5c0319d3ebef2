use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use perclab_core::harness::{
    self, calibrate_theta, emit_summary_json, oracle_check_records, read_records_csv, run_ladder,
    simulate, write_calibration_csv, write_json17, write_records_csv, ExperimentConfig,
    LadderDocument, ThetaRule, OUTPUT_DIR_ENV, VERSION,
};
use perclab_core::stats::summarize;

/// Monte Carlo experiments on the largest cluster of continuum percolation.
#[derive(Parser)]
#[command(name = "perclab", version)]
struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration; writes records.csv, summary.json and config.txt.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the configuration at several box sides and fit the normality rate.
    Ladder {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Box sides, comma separated (at least three).
        #[arg(long, value_delimiter = ',', required = true)]
        n_values: Vec<f64>,
        #[arg(long, value_enum, default_value_t = RuleArg::Fixed)]
        theta_rule: RuleArg,
        /// Exponent for `--theta-rule ln-power`: theta(n) = theta * (ln n)^exponent.
        #[arg(long, default_value_t = 1.0)]
        theta_exponent: f64,
    },
    /// Compare theta values on the same replications; writes calibration.csv.
    CalibrateTheta {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Theta values, comma separated (at least two).
        #[arg(long, value_delimiter = ',', required = true)]
        thetas: Vec<f64>,
    },
    /// Re-summarize a records CSV produced with the given configuration.
    Analyze {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
        records: PathBuf,
    },
    /// Recompute a records CSV from its seeds with the all-pairs oracles.
    OracleCheck {
        #[command(flatten)]
        config: ConfigArgs,
        records: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Fixed,
    LnPower,
}

/// Configuration file plus per-field overrides. Flags win over the file.
#[derive(Args)]
struct ConfigArgs {
    /// key = value file using the configuration field names.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Master seed, decimal or 0x-prefixed hex.
    #[arg(long, visible_alias = "seed")]
    master_seed: Option<String>,
    #[arg(long)]
    compute_local: Option<String>,
    #[arg(long)]
    compute_e3: Option<String>,
    #[arg(long)]
    oracle_check: Option<String>,
    /// Worker threads, or `auto`.
    #[arg(long)]
    parallelism: Option<String>,
    #[arg(long)]
    max_expected_points: Option<String>,
    /// Cross-check every replication against the all-pairs oracles.
    #[arg(long)]
    oracle: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_key_values(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        let flags = [
            ("m", &self.m),
            ("n", &self.n),
            ("lambda", &self.lambda),
            ("r", &self.r),
            ("theta", &self.theta),
            ("reps", &self.reps),
            ("master_seed", &self.master_seed),
            ("compute_local", &self.compute_local),
            ("compute_e3", &self.compute_e3),
            ("oracle_check", &self.oracle_check),
            ("parallelism", &self.parallelism),
            ("max_expected_points", &self.max_expected_points),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)
                    .map_err(|e| anyhow::anyhow!("--{}: {e}", key.replace('_', "-")))?;
            }
        }
        if self.oracle {
            cfg.oracle_check = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory; defaults to $PERCLAB_OUTPUT_DIR, then the current directory.
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
}

impl OutArgs {
    fn dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(&self.out_dir)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn read_records(path: &Path) -> Result<Vec<harness::ReplicationRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_records_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, cfg.to_key_values()).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = config.resolve()?;
            let dir = out.dir()?;
            let (records, summary) = simulate(&cfg)?;
            write_config(dir, "config.txt", &cfg)?;
            write_records_csv(create(&dir.join("records.csv"))?, &records)?;
            emit_summary_json(create(&dir.join("summary.json"))?, &cfg, &summary)?;
            println!(
                "{} replications: mean N = {:.3}, rho_hat = {:.5}, dK = {:?}, N' mismatch fraction = {:?}",
                records.len(),
                summary.mean_n,
                summary.rho_hat,
                summary.dk_global,
                summary.mismatch_frac
            );
        }
        Command::Ladder {
            config,
            out,
            n_values,
            theta_rule,
            theta_exponent,
        } => {
            let cfg = config.resolve()?;
            let dir = out.dir()?;
            let rule = match theta_rule {
                RuleArg::Fixed => ThetaRule::Fixed,
                RuleArg::LnPower => ThetaRule::ProportionalToLnNPower {
                    exponent: theta_exponent,
                },
            };
            let (report, records) = run_ladder(&cfg, &n_values, rule)?;
            write_config(dir, "config.txt", &cfg)?;
            for (summary, recs) in report.summaries.iter().zip(&records) {
                let rung = harness::ladder_config(&cfg, summary.n, rule);
                let tag = format!("n{}", summary.n);
                write_records_csv(create(&dir.join(format!("records_{tag}.csv")))?, recs)?;
                emit_summary_json(
                    create(&dir.join(format!("summary_{tag}.json")))?,
                    &rung,
                    summary,
                )?;
            }
            let doc = LadderDocument {
                version: VERSION.to_string(),
                config: cfg,
                n_values,
                report,
            };
            write_json17(create(&dir.join("ladder.json"))?, &doc)?;
            for s in &doc.report.summaries {
                println!(
                    "n = {}: mean N = {:.3}, dK = {:?}, dK' = {:?}",
                    s.n, s.mean_n, s.dk_global, s.dk_local
                );
            }
            if let Some(fit) = &doc.report.rate_fit_global {
                println!("dK rate-fit slope {:.4} (r2 {:.3})", fit.slope, fit.r2);
            }
        }
        Command::CalibrateTheta {
            config,
            out,
            thetas,
        } => {
            let cfg = config.resolve()?;
            let dir = out.dir()?;
            let rows = calibrate_theta(&cfg, &thetas)?;
            write_config(dir, "config.txt", &cfg)?;
            write_calibration_csv(create(&dir.join("calibration.csv"))?, &rows)?;
            for r in &rows {
                println!(
                    "theta = {}: mismatch fraction {:.4}, tied-window fraction {:.4}, {:.1} ms",
                    r.theta, r.mismatch_frac, r.e0_frac, r.mean_wall_ms
                );
            }
        }
        Command::Analyze {
            config,
            out,
            records,
        } => {
            let cfg = config.resolve()?;
            let recs = read_records(&records)?;
            let summary = summarize(&recs, &cfg)?;
            emit_summary_json(create(&out.dir()?.join("summary.json"))?, &cfg, &summary)?;
            println!(
                "{} records: mean N = {:.3}, dK = {:?}",
                recs.len(),
                summary.mean_n,
                summary.dk_global
            );
        }
        Command::OracleCheck { config, records } => {
            let cfg = config.resolve()?;
            let recs = read_records(&records)?;
            if recs.is_empty() {
                bail!("{} holds no records", records.display());
            }
            oracle_check_records(&cfg, &recs)?;
            println!("{} records agree with the oracles", recs.len());
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
