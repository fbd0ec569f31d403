//! Experiment harness: ensemble runs across seed streams, threshold
//! estimation by batch means, nonuniqueness detection by gap clustering,
//! goodness-of-fit against predicted limit laws, and trace/summary output.

use crate::error::{Error, Result};
use crate::limits::LimitSpec;
use crate::measure::Measure;
use crate::process::{run_chain_with, ChainSpec, Engine, TraceRecord};
use crate::rng::Stream;
use serde::Serialize;
use std::io::Write as _;
use std::path::Path;

/// Kolmogorov–Smirnov distance between a sample (sorted in place) and a CDF.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!sample.is_empty(), "KS distance of an empty sample");
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Fraction of the sample strictly below the threshold.
pub fn mass_below(sample: &[f64], threshold: f64) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    sample.iter().filter(|&&x| x < threshold).count() as f64 / sample.len() as f64
}

/// Estimate the settled threshold from the tail of an m-series: mean of the
/// final window with a batch-means standard error (8 batches).
pub fn estimate_limit_quantile(series: &[f64], window_fraction: f64) -> Result<(f64, f64)> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "window fraction must lie in (0,1], got {window_fraction}"
        )));
    }
    let w = ((series.len() as f64 * window_fraction).floor() as usize).min(series.len());
    if w < 8 {
        return Err(Error::Config(format!("estimation window too short: {w} values")));
    }
    let window = &series[series.len() - w..];
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("estimation window reaches unsettled prefix".into()));
    }
    let b = w / 8;
    let mut means = [0.0f64; 8];
    for (i, m) in means.iter_mut().enumerate() {
        let chunk = &window[i * b..(i + 1) * b];
        *m = chunk.iter().sum::<f64>() / b as f64;
    }
    let grand = means.iter().sum::<f64>() / 8.0;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / 7.0;
    Ok((grand, (var / 8.0).sqrt()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cluster {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    /// At least two clusters are populated by more than one replica.
    pub multiple: bool,
}

/// Conservative default linkage gap: 5% of the observed spread, floored away
/// from zero, capped at 0.05.
pub fn default_gap(m_hats: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in m_hats {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        return 1e-6;
    }
    (0.05 * (hi - lo).min(1.0)).max(1e-9)
}

/// Single-linkage clustering of replica threshold estimates: split wherever
/// adjacent sorted values are more than `gap` apart.
pub fn detect_nonuniqueness(m_hats: &[f64], gap: f64) -> Clustering {
    let mut sorted = m_hats.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > gap {
            let slice = &sorted[start..i];
            clusters.push(Cluster {
                center: slice.iter().sum::<f64>() / slice.len() as f64,
                lo: slice[0],
                hi: slice[slice.len() - 1],
                count: slice.len(),
            });
            start = i;
        }
    }
    let populated = clusters.iter().filter(|c| c.count >= 2).count();
    Clustering { multiple: populated >= 2, clusters }
}

/// Monte-Carlo mean one-step walk increment at a pinned threshold, with its
/// standard error. Agrees with the drift function in expectation.
pub fn one_step_drift_mc(
    measure: &Measure,
    r: f64,
    m: f64,
    n: u64,
    stream: &mut Stream,
) -> Result<(f64, f64)> {
    use crate::measure::{Bound, ConditionalSampler, PairStrategy};
    let sampler = ConditionalSampler::new(measure, m, Bound::Closed, PairStrategy::Exact)?;
    let mut hits = 0u64;
    for _ in 0..n {
        let (x, y) = sampler.draw(stream)?;
        if x.min(y) <= m {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok((r - p, se))
}

/// Monte-Carlo estimate of P(X + Y ≥ 2m) with standard error.
pub fn pair_sum_mc(measure: &Measure, m: f64, n: u64, stream: &mut Stream) -> (f64, f64) {
    let mut hits = 0u64;
    for _ in 0..n {
        let x = measure.sample(stream);
        let y = measure.sample(stream);
        if x + y >= 2.0 * m {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (p, se)
}

pub struct EnsembleConfig<'a> {
    pub measure: &'a Measure,
    pub r: f64,
    pub n_admit: u64,
    pub engine: Engine,
    pub replicas: u64,
    pub master_seed: u64,
    pub window_fraction: f64,
    pub cluster_gap: Option<f64>,
    /// When given, each replica reports a KS distance of its windowed
    /// admitted values against this law.
    pub predicted: Option<&'a LimitSpec<'a>>,
    pub max_stall: u64,
}

impl<'a> EnsembleConfig<'a> {
    pub fn new(
        measure: &'a Measure,
        r: f64,
        n_admit: u64,
        engine: Engine,
        replicas: u64,
        master_seed: u64,
    ) -> EnsembleConfig<'a> {
        EnsembleConfig {
            measure,
            r,
            n_admit,
            engine,
            replicas,
            master_seed,
            window_fraction: 0.5,
            cluster_gap: None,
            predicted: None,
            max_stall: crate::process::DEFAULT_MAX_STALL,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReplicaStat {
    pub replica: u64,
    pub m_hat: f64,
    pub m_stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_admitted: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EnsembleSummary {
    pub version: String,
    pub master_seed: u64,
    pub measure: String,
    pub r: f64,
    pub n_admit: u64,
    pub engine: Engine,
    pub replicas: u64,
    pub window_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_m: Option<f64>,
    pub replica_stats: Vec<ReplicaStat>,
    pub clusters: Vec<Cluster>,
    pub multiple: bool,
}

pub fn version_string() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("QCLUB_GIT_DESCRIBE"))
}

fn thread_count() -> usize {
    std::env::var("QC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Run independent replicas on separate seed streams and summarize. Output
/// is deterministic for a fixed config: replica i always uses stream i of
/// the master seed, and results are collected in replica order.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleSummary> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let stats: Vec<ReplicaStat> = pool.install(|| {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|replica| -> Result<ReplicaStat> {
                let mut stream = Stream::new(cfg.master_seed, replica);
                let spec = ChainSpec {
                    measure: cfg.measure,
                    r: cfg.r,
                    n_admit: cfg.n_admit,
                    engine: cfg.engine,
                    max_stall: cfg.max_stall,
                };
                let window =
                    ((cfg.n_admit as f64 * cfg.window_fraction).floor() as usize).max(1);
                let mut m_series = Vec::with_capacity(cfg.n_admit as usize);
                let mut admitted: Vec<f64> = Vec::with_capacity(window.min(1 << 22));
                let mut fill = 0usize;
                run_chain_with(&spec, &mut stream, |rec: &TraceRecord| {
                    m_series.push(rec.m);
                    if admitted.len() < window {
                        admitted.push(rec.x);
                    } else {
                        admitted[fill % window] = rec.x;
                        fill += 1;
                    }
                })?;
                let (m_hat, m_stderr) =
                    estimate_limit_quantile(&m_series, cfg.window_fraction)?;
                let ks_admitted = match cfg.predicted {
                    Some(law) => {
                        Some(ks_distance(&mut admitted, |x| law.cdf(x).unwrap_or(f64::NAN)))
                    }
                    None => None,
                };
                Ok(ReplicaStat { replica, m_hat, m_stderr, ks_admitted })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let m_hats: Vec<f64> = stats.iter().map(|s| s.m_hat).collect();
    let gap = cfg.cluster_gap.unwrap_or_else(|| default_gap(&m_hats));
    let clustering = detect_nonuniqueness(&m_hats, gap);

    Ok(EnsembleSummary {
        version: version_string(),
        master_seed: cfg.master_seed,
        measure: format!("{:?}", cfg.measure.family()),
        r: cfg.r,
        n_admit: cfg.n_admit,
        engine: cfg.engine,
        replicas: cfg.replicas,
        window_fraction: cfg.window_fraction,
        predicted_m: cfg.predicted.map(|p| p.m),
        replica_stats: stats,
        clusters: clustering.clusters,
        multiple: clustering.multiple,
    })
}

/// Write a trace as CSV, keeping every `thin`-th record. The k = 0 threshold
/// is written as "-inf"; the rounds column is empty for engines that do not
/// count rejection rounds.
pub fn write_trace_csv(path: &Path, records: &[TraceRecord], thin: usize) -> Result<()> {
    let thin = thin.max(1);
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "k,x,m,y,y_plus,rounds")?;
    for rec in records.iter().step_by(thin) {
        let m = if rec.m == f64::NEG_INFINITY { "-inf".to_string() } else { format!("{}", rec.m) };
        let rounds = rec.rounds.map(|r| r.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{}", rec.k, rec.x, m, rec.y, rec.y_plus, rounds)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_json(path: &Path, summary: &EnsembleSummary) -> Result<()> {
    let text = summary_json(summary)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn summary_json(summary: &EnsembleSummary) -> Result<String> {
    serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Numeric(format!("summary serialization: {e}")))
}
