//! `isac-chansim` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use isac_chansim::analytics::{rms_spread, sweep_k, KpmConfig, MpcSample};
use isac_chansim::config::{load_config, Output};
use isac_chansim::export::{self, read_mpc_csv, CsvSink};
use isac_chansim::pipeline::run_simulation_with_threads;
use isac_chansim::rng::seeded;
use isac_chansim::validation::validate_preset;
use isac_chansim::{Error, Result};

/// Exit code for a validation run whose checks did not all pass.
const VALIDATION_FAILED: u8 = 6;

#[derive(Parser)]
#[command(
    name = "isac-chansim",
    version,
    about = "Stochastic ISAC channel simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate all drops of a configuration and write CSV outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of clusters,cir,stats,cdf.
        #[arg(long, value_delimiter = ',')]
        emit: Option<Vec<String>>,
        /// Overrides `run.drops`.
        #[arg(long)]
        drops: Option<u32>,
        /// Worker threads; results do not depend on this.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
    },
    /// Cluster an MPC table and pick K with the combined indicator.
    Analyze {
        #[arg(long)]
        mpc: PathBuf,
        /// Inclusive range `lo:hi`.
        #[arg(long, default_value = "2:20")]
        k_range: String,
        #[arg(long)]
        out: PathBuf,
        /// Only rows whose `link_id` matches.
        #[arg(long)]
        link: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the statistics suite on a configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `validation.drops`.
        #[arg(long)]
        drops: Option<u32>,
    },
}

fn parse_k_range(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("--k-range must look like 2:20, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo < 2 || hi < lo {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn threads(parallel: usize) -> usize {
    if parallel > 0 {
        parallel
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    emit: Option<Vec<String>>,
    drops: Option<u32>,
    parallel: usize,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(d) = drops {
        cfg.run.drops = d;
    }
    if let Some(list) = emit {
        cfg.run.emit = list
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Output>>>()?;
    }
    let result = run_simulation_with_threads(&cfg, threads(parallel))?;
    let written = export::export(&result, &cfg.run.emit, out)?;
    println!(
        "{} link realizations, config hash {}",
        result.realizations.len(),
        result.config_hash
    );
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_analyze(mpc: &Path, k_range: &str, out: &Path, link: Option<&str>, seed: u64) -> Result<()> {
    let (lo, hi) = parse_k_range(k_range)?;
    let rows: Vec<_> = read_mpc_csv(mpc)?
        .into_iter()
        .filter(|r| link.is_none_or(|l| r.link_id == l))
        .filter(|r| r.sample.power > 0.0)
        .collect();
    let samples: Vec<MpcSample> = rows.iter().map(|r| r.sample).collect();
    if samples.is_empty() {
        return Err(Error::EmptyInput("MPC rows after filtering"));
    }
    let mut rng = seeded(seed);
    let sweep = sweep_k(&samples, lo..=hi, &KpmConfig::default(), &mut rng)?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;

    let mut idx = CsvSink::create(&out.join("indices.csv"), None, &["k", "ch", "db", "ci"])?;
    for (p, s) in sweep.points.iter().zip(&sweep.scores) {
        idx.row([
            p.k.to_string(),
            p.ch.to_string(),
            p.db.to_string(),
            s.to_string(),
        ])?;
    }
    idx.finish()?;

    let mut labels = CsvSink::create(&out.join("labels.csv"), None, &["row", "link_id", "label"])?;
    for (i, (r, l)) in rows.iter().zip(&sweep.best.labels).enumerate() {
        labels.row([i.to_string(), r.link_id.clone(), l.to_string()])?;
    }
    labels.finish()?;

    // intra-cluster spreads of the selected partition
    let mut per_cluster = Vec::new();
    for k in 0..sweep.best_k {
        let members: Vec<&MpcSample> = samples
            .iter()
            .zip(&sweep.best.labels)
            .filter(|(_, &l)| l == k)
            .map(|(s, _)| s)
            .collect();
        let p: Vec<f64> = members.iter().map(|s| s.power).collect();
        if p.iter().sum::<f64>() > 0.0 {
            let tau: Vec<f64> = members.iter().map(|s| s.delay).collect();
            let az: Vec<f64> = members.iter().map(|s| s.azimuth).collect();
            let zen: Vec<f64> = members.iter().map(|s| s.zenith).collect();
            per_cluster.push(isac_chansim::validation::LinkStats {
                rms_ds: rms_spread(&tau, &p, false)?,
                rms_asa: rms_spread(&az, &p, true)?,
                rms_zsa: rms_spread(&zen, &p, false)?,
            });
        }
    }
    export::write_cdf(&per_cluster, None, &out.join("cdf.csv"))?;
    println!("best K = {} over {} MPCs", sweep.best_k, samples.len());
    Ok(())
}

fn cmd_validate(config: &Path, out: &Path, drops: Option<u32>) -> Result<bool> {
    let cfg = load_config(config)?;
    let drops = drops.unwrap_or(cfg.validation.drops);
    let report = validate_preset(&cfg, drops)?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let prov = export::Provenance {
        config_hash: cfg.hash()?,
        seed: cfg.run.seed,
    };
    let mut sink = CsvSink::create(
        &out.join("report.csv"),
        Some(&prov),
        &["check", "passed", "detail"],
    )?;
    for c in &report.checks {
        sink.row([c.name.clone(), c.passed.to_string(), c.detail.clone()])?;
        println!(
            "[{}] {} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    sink.finish()?;
    if !report.stats.is_empty() {
        export::write_cdf(&report.stats, Some(&prov), &out.join("cdf.csv"))?;
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            emit,
            drops,
            parallel,
        } => cmd_run(&config, seed, &out, emit, drops, parallel).map(|_| true),
        Command::Analyze {
            mpc,
            k_range,
            out,
            link,
            seed,
        } => cmd_analyze(&mpc, &k_range, &out, link.as_deref(), seed).map(|_| true),
        Command::Validate { config, out, drops } => cmd_validate(&config, &out, drops),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(VALIDATION_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
