use clap::{Args, Parser, Subcommand};
use qclub::config::{self, ConfigFile};
use qclub::error::{Error, Result};
use qclub::harness;
use qclub::limits::{self, LimitCase};
use qclub::measure::{Bound, Measure};
use qclub::process::{run_chain_with, ChainSpec};
use qclub::rng::Stream;
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "qclub",
    version,
    long_version = harness::version_string(),
    about = "Quantile-gated admission process simulator and analyzer"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a single chain; write its trace and report the settled threshold.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Override the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trace output path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate the drift function at given thresholds.
    Drift {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Thresholds to probe.
        #[arg(long = "at", required = true, num_args = 1..)]
        at: Vec<f64>,
    },
    /// Locate candidate limit points and their laws.
    Classify {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Sign-analysis grid resolution.
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Evaluate a conditioned limit law at probe points.
    Limit {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Conditioning threshold.
        #[arg(long)]
        m: f64,
        /// Include the boundary sum in the conditioning event.
        #[arg(long, default_value = "closed")]
        bound: String,
        /// Points at which to report tail and CDF.
        #[arg(long, required = true, num_args = 1..)]
        probe: Vec<f64>,
    },
    /// Run replicated chains and summarize settled thresholds.
    Ensemble {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Attach per-replica KS distances against the classified limit law
        /// (only when classification is deterministic).
        #[arg(long)]
        predict: bool,
    },
    /// Run the acceptance criteria (all, or one by number).
    Verify {
        /// Criterion number (1-12); all when omitted.
        #[arg(long)]
        criterion: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn load_measure(path: &Path) -> Result<(ConfigFile, Measure)> {
    let (cfg, base) = config::load(path)?;
    let measure = config::build_measure(&cfg.measure, &base)?;
    Ok((cfg, measure))
}

fn parse_bound(name: &str) -> Result<Bound> {
    match name {
        "closed" => Ok(Bound::Closed),
        "open" => Ok(Bound::Open),
        other => Err(Error::Config(format!("bound must be \"closed\" or \"open\", got \"{other}\""))),
    }
}

fn run(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Simulate { cfg, seed, trace } => {
            let (file, measure) = load_measure(&cfg.config)?;
            let p = &file.process;
            let seed = seed.unwrap_or(p.seed);
            let mut spec = ChainSpec::new(&measure, p.r, p.n_admit, p.engine);
            if let Some(stall) = p.max_stall {
                spec = spec.with_max_stall(stall);
            }
            let trace_path = trace.or(file.output.trace);
            let thin = file.output.thin.unwrap_or(1).max(1);
            let mut stream = Stream::new(seed, 0);
            let mut m_series = Vec::with_capacity(p.n_admit as usize);
            let mut records = Vec::new();
            let mut rounds_total: Option<u64> = None;
            run_chain_with(&spec, &mut stream, |rec| {
                m_series.push(rec.m);
                rounds_total = rec.rounds.or(rounds_total);
                if trace_path.is_some() && rec.k % thin as u64 == 0 {
                    records.push(*rec);
                }
            })?;
            if let Some(path) = &trace_path {
                harness::write_trace_csv(path, &records, 1)?;
            }
            let (m_hat, m_stderr) =
                harness::estimate_limit_quantile(&m_series, file.ensemble.window_fraction)?;
            let out = json!({
                "version": harness::version_string(),
                "seed": seed,
                "engine": p.engine,
                "n_admit": p.n_admit,
                "m_hat": m_hat,
                "m_stderr": m_stderr,
                "final_m": m_series.last(),
                "rounds_total": rounds_total,
                "trace": trace_path.as_ref().map(|p| p.display().to_string()),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(0)
        }
        Cmd::Drift { cfg, at } => {
            let (file, measure) = load_measure(&cfg.config)?;
            let drift = qclub::drift::Drift::new(&measure, file.process.r)?;
            let mut probes = Vec::new();
            for m in at {
                probes.push(json!({
                    "m": m,
                    "rho": drift.rho(m)?,
                    "rho_plus": drift.rho_plus(m)?,
                    "right_limit": drift.rho_right_limit(m)?,
                }));
            }
            println!("{}", serde_json::to_string_pretty(&json!({ "r": file.process.r, "probes": probes })).unwrap());
            Ok(0)
        }
        Cmd::Classify { cfg, grid } => {
            let (file, measure) = load_measure(&cfg.config)?;
            let c = limits::classify(&measure, file.process.r, grid)?;
            let specs: Vec<_> = c
                .specs
                .iter()
                .map(|s| {
                    json!({
                        "m": s.m,
                        "case": match s.case {
                            LimitCase::ConditionedClosed => "conditioned-closed",
                            LimitCase::ConditionedOpen => "conditioned-open",
                            LimitCase::PointMass => "point-mass",
                        },
                        "normalizer": s.normalizer,
                        "coincident": s.coincident,
                    })
                })
                .collect();
            let out = json!({
                "r": file.process.r,
                "deterministic": c.deterministic,
                "specs": specs,
                "zero_intervals": c.zero_intervals,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(0)
        }
        Cmd::Limit { cfg, m, bound, probe } => {
            let (_file, measure) = load_measure(&cfg.config)?;
            let bound = parse_bound(&bound)?;
            let spec = limits::LimitSpec::conditioned(&measure, m, bound)?;
            let mut rows = Vec::new();
            for s in probe {
                let exponent = if s > m { limits::tail_exponent(&spec, s).ok() } else { None };
                rows.push(json!({
                    "s": s,
                    "tail": spec.tail(s)?,
                    "cdf": spec.cdf(s)?,
                    "tail_exponent": exponent,
                }));
            }
            let out = json!({ "m": m, "normalizer": spec.normalizer, "probes": rows });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(0)
        }
        Cmd::Ensemble { cfg, predict } => {
            let (file, measure) = load_measure(&cfg.config)?;
            let p = &file.process;
            let mut ecfg = harness::EnsembleConfig::new(
                &measure,
                p.r,
                p.n_admit,
                p.engine,
                file.ensemble.replicas,
                p.seed,
            );
            ecfg.window_fraction = file.ensemble.window_fraction;
            ecfg.cluster_gap = file.ensemble.cluster_gap;
            if let Some(stall) = p.max_stall {
                ecfg.max_stall = stall;
            }
            let classification;
            if predict {
                classification = limits::classify(&measure, p.r, 256)?;
                if classification.deterministic {
                    ecfg.predicted = Some(&classification.specs[0]);
                }
            }
            let summary = harness::run_ensemble(&ecfg)?;
            let text = harness::summary_json(&summary)?;
            match &file.output.summary {
                Some(path) => {
                    std::fs::write(path, &text)?;
                    eprintln!("summary written to {}", path.display());
                }
                None => println!("{text}"),
            }
            Ok(0)
        }
        Cmd::Verify { criterion } => {
            let reports = match criterion {
                Some(id) => {
                    if !(1..=12).contains(&id) {
                        return Err(Error::Config(format!("criterion must be 1-12, got {id}")));
                    }
                    let report = qclub::verify::run_criterion(id);
                    println!(
                        "criterion {:02} {} {}: {}",
                        report.id,
                        if report.passed { "PASS" } else { "FAIL" },
                        report.name,
                        report.detail
                    );
                    vec![report]
                }
                None => qclub::verify::run_all(),
            };
            let failed = reports.iter().filter(|r| !r.passed).count();
            Ok(if failed == 0 { 0 } else { 4 })
        }
    }
}
