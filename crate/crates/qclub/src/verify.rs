//! End-to-end acceptance criteria: twelve checks tying together the closed
//! forms, the drift analysis, the limit classification, and the simulator.
//! Each produces one pass/fail line; tolerances are fixed here and seeds are
//! pinned so every run is reproducible.

use crate::drift::{convexity_criterion, is_monotone_rho1, Convexity, Drift, Monotonicity};
use crate::error::Result;
use crate::harness::{
    estimate_limit_quantile, ks_distance, mass_below, one_step_drift_mc, pair_sum_mc,
    EnsembleConfig, run_ensemble,
};
use crate::limits::{classify, closed_form, tail_exponent, LimitCase, LimitSpec};
use crate::measure::{Bound, Measure};
use crate::process::{
    psi_diagnostics, run_chain, run_chain_with, trace_from_opinions, ChainSpec, ClubTree, Engine,
    quantile_reference,
};
use crate::rng::Stream;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const CRITERION_NAMES: [&str; 12] = [
    "uniform-baseline",
    "uniform-supercritical-escape",
    "exponential-fixed-point",
    "normal-catalog-entry",
    "atomic-nonuniqueness",
    "critical-uniform-spread",
    "limit-tail-thickening",
    "one-step-drift-agreement",
    "engine-agreement",
    "walk-identities",
    "shape-criterion-chain",
    "quantile-and-sum-oracles",
];

struct ChainStats {
    m_hat: f64,
    m_stderr: f64,
    m_window: Vec<f64>,
    admitted_window: Vec<f64>,
    seconds: f64,
}

fn chain_stats(
    measure: &Measure,
    r: f64,
    n: u64,
    engine: Engine,
    seed: u64,
    window_fraction: f64,
) -> Result<ChainStats> {
    let spec = ChainSpec::new(measure, r, n, engine);
    let mut stream = Stream::new(seed, 0);
    let window = ((n as f64 * window_fraction).floor() as usize).max(1);
    let mut m_series = Vec::with_capacity(n as usize);
    let mut admitted = Vec::with_capacity(window);
    let mut fill = 0usize;
    let t0 = Instant::now();
    run_chain_with(&spec, &mut stream, |rec| {
        m_series.push(rec.m);
        if admitted.len() < window {
            admitted.push(rec.x);
        } else {
            admitted[fill % window] = rec.x;
            fill += 1;
        }
    })?;
    let seconds = t0.elapsed().as_secs_f64();
    let (m_hat, m_stderr) = estimate_limit_quantile(&m_series, window_fraction)?;
    let m_window = m_series.split_off(m_series.len() - window);
    Ok(ChainStats { m_hat, m_stderr, m_window, admitted_window: admitted, seconds })
}

/// Uniform baseline: the algebraic stable point for r = 1/4 and a long chain
/// landing on it, inside a fixed time budget.
fn criterion_1() -> Result<(bool, String)> {
    let measure = Measure::uniform(0.0, 1.0)?;
    let target = 0.1550510257216822;
    let cf = closed_form(&measure, 0.25)?;
    let algebra_ok = (cf - target).abs() <= 1e-10;
    let stats = chain_stats(&measure, 0.25, 1_000_000, Engine::Threshold, 101, 0.5)?;
    let chain_ok = (stats.m_hat - target).abs() <= 0.01;
    let time_ok = stats.seconds <= 60.0;
    Ok((
        algebra_ok && chain_ok && time_ok,
        format!(
            "closed form {cf:.13} (target {target:.13}), chain m_hat {:.5} +/- {:.5}, {:.1}s",
            stats.m_hat, stats.m_stderr, stats.seconds
        ),
    ))
}

/// Supercritical uniform: with r = 3/4 the threshold escapes toward the
/// upper endpoint; the settled window must sit essentially at 1.
fn criterion_2() -> Result<(bool, String)> {
    let measure = Measure::uniform(0.0, 1.0)?;
    let stats = chain_stats(&measure, 0.75, 1_000_000, Engine::Conditional, 102, 0.5)?;
    let below = mass_below(&stats.m_window, 0.99);
    let ok = stats.m_hat >= 0.9 && below <= 0.2;
    Ok((ok, format!("m_hat {:.6}, window mass below 0.99 = {below:.4}", stats.m_hat)))
}

/// Exponential fixed point: chain lands on r/(2 lambda (1-r)) and the
/// admitted values in the settled window match the conditioned limit law.
fn criterion_3() -> Result<(bool, String)> {
    let measure = Measure::exponential(1.0)?;
    let target = closed_form(&measure, 0.5)?;
    let mut stats = chain_stats(&measure, 0.5, 1_000_000, Engine::Threshold, 103, 0.5)?;
    let point_ok = (stats.m_hat - target).abs() <= 0.01;
    let law = LimitSpec::conditioned(&measure, target, Bound::Closed)?;
    let ks = ks_distance(&mut stats.admitted_window, |x| law.cdf(x).unwrap());
    let ks_ok = ks <= 0.01;
    Ok((
        point_ok && ks_ok,
        format!("m_hat {:.5} (target {target:.5}), admitted-window KS {ks:.5}", stats.m_hat),
    ))
}

/// Normal catalog entry: the tabled stable point is the r-quantile of the
/// base law; the classifier and a long chain must agree with it.
fn criterion_4() -> Result<(bool, String)> {
    let measure = Measure::normal(0.0, 1.0)?;
    let mut ok = true;
    let mut detail = String::new();
    // the chain criterion fixes the tolerance (0.02) but not the length;
    // at r = 0.5 the threshold reaches the root like k^-0.28, so clearing
    // 0.02 needs a few million admissions
    for (r, n, seed) in [(0.5, 4_000_000u64, 104u64), (0.75, 1_000_000, 105)] {
        let catalog = closed_form(&measure, r)?;
        let classification = classify(&measure, r, 256)?;
        let classified = classification
            .specs
            .first()
            .map(|s| s.m)
            .ok_or_else(|| crate::error::Error::Numeric("no classified point".into()))?;
        let classify_ok = (classified - catalog).abs() <= 1e-6;
        let stats = chain_stats(&measure, r, n, Engine::Threshold, seed, 0.5)?;
        let chain_ok = (stats.m_hat - catalog).abs() <= 0.02;
        ok &= classify_ok && chain_ok;
        let _ = write!(
            detail,
            "r={r}: catalog {catalog:.5}, classified {classified:.5}, chain m_hat {:.4} [{}]; ",
            stats.m_hat,
            if classify_ok && chain_ok { "ok" } else { "off" }
        );
    }
    Ok((ok, detail.trim_end_matches([' ', ';']).to_string()))
}

/// Atomic nonuniqueness: across an ensemble the settled thresholds split
/// into several clusters, each pinned to an atom of the base law.
fn criterion_5() -> Result<(bool, String)> {
    let measure = Measure::geometric_atomic(0.5)?;
    let mut cfg = EnsembleConfig::new(&measure, 0.6, 100_000, Engine::Conditional, 200, 106);
    cfg.cluster_gap = Some(0.01);
    let summary = run_ensemble(&cfg)?;
    let atoms: Vec<f64> = (0..14).map(|l| 1.0 - (0.5f64).powi(l)).collect();
    let pinned = summary
        .clusters
        .iter()
        .filter(|c| c.count >= 4 && atoms.iter().any(|a| (c.center - a).abs() <= 0.01))
        .count();
    let ok = summary.multiple && pinned >= 3;
    let mut detail = format!("{} clusters ({pinned} atom-pinned, multiple = {}): ", summary.clusters.len(), summary.multiple);
    for c in summary.clusters.iter().filter(|c| c.count >= 4) {
        let _ = write!(detail, "{:.4}(n={}) ", c.center, c.count);
    }
    Ok((ok, detail.trim_end().to_string()))
}

/// Critical uniform: at r = 1/2 the drift vanishes on an interval and the
/// settled threshold is replica-dependent, spreading over [1/2, 1].
fn criterion_6() -> Result<(bool, String)> {
    let measure = Measure::uniform(0.0, 1.0)?;
    let cfg = EnsembleConfig::new(&measure, 0.5, 1_000_000, Engine::Conditional, 100, 107);
    let summary = run_ensemble(&cfg)?;
    let mut fifths = [0usize; 5];
    for stat in &summary.replica_stats {
        let m = stat.m_hat;
        if (0.5..=1.0).contains(&m) {
            let idx = (((m - 0.5) / 0.1).floor() as usize).min(4);
            fifths[idx] += 1;
        }
    }
    let hit = fifths.iter().filter(|&&c| c > 0).count();
    Ok((hit >= 3, format!("fifths of [0.5,1.0] hit: {fifths:?} ({hit} of 5)")))
}

/// Far-tail thickening: the limit law's tail exponent sits between the base
/// decay and its square, approaching 2 from below as the probe recedes.
fn criterion_7() -> Result<(bool, String)> {
    let measure = Measure::exponential(1.0)?;
    let m = closed_form(&measure, 0.5)?;
    let spec = LimitSpec::conditioned(&measure, m, Bound::Closed)?;
    let e20 = tail_exponent(&spec, 20.0)?;
    let e100 = tail_exponent(&spec, 100.0)?;
    let ok = (1.8..=2.0).contains(&e20) && (1.8..=2.0).contains(&e100) && e100 > e20;
    Ok((ok, format!("exponent(20) = {e20:.6}, exponent(100) = {e100:.6}")))
}

/// One-step drift: the Monte-Carlo mean walk increment at pinned thresholds
/// agrees with the drift function within three standard errors.
fn criterion_8() -> Result<(bool, String)> {
    let geometric_probes =
        [0.0, 0.25, 0.5, 0.625, 0.75, 0.8125, 0.875, 0.9375];
    let cases: [(Measure, f64); 4] = [
        (Measure::uniform(0.0, 1.0)?, 0.3),
        (Measure::exponential(1.0)?, 0.5),
        (Measure::normal(0.0, 1.0)?, 0.6),
        (Measure::geometric_atomic(0.5)?, 0.6),
    ];
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for (idx, (measure, r)) in cases.iter().enumerate() {
        let drift = Drift::new(measure, *r)?;
        let mut stream = Stream::new(108, idx as u64);
        let probes: Vec<f64> = if measure.has_atoms() {
            geometric_probes.to_vec()
        } else {
            (1..=8).map(|i| measure.quantile(i as f64 / 10.0)).collect::<Result<_>>()?
        };
        for &m in &probes {
            let (mc, se) = one_step_drift_mc(measure, *r, m, 100_000, &mut stream)?;
            let exact = drift.rho(m)?;
            let z = if se > 0.0 { (mc - exact).abs() / se } else if mc == exact { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            if z > 3.0 {
                ok = false;
                let _ = write!(detail, "family {idx} m={m:.4}: mc {mc:.5} vs {exact:.5} (z={z:.2}); ");
            }
        }
    }
    if detail.is_empty() {
        detail = format!("32 probes within 3 SE (worst z = {worst:.2})");
    }
    Ok((ok, detail.trim_end().to_string()))
}

/// Engine agreement: counting supporters and comparing against the running
/// quantile produce bit-identical traces on shared candidate streams.
fn criterion_9() -> Result<(bool, String)> {
    let cases: [(Measure, f64); 4] = [
        (Measure::uniform(0.0, 1.0)?, 0.4),
        (Measure::exponential(1.0)?, 0.5),
        (Measure::normal(0.0, 1.0)?, 0.6),
        (Measure::geometric_atomic(0.5)?, 0.5),
    ];
    let mut compared = 0u64;
    for (idx, (measure, r)) in cases.iter().enumerate() {
        for seed in 0..8u64 {
            let s = 9_000 + 100 * idx as u64 + seed;
            let trace_v =
                run_chain(&ChainSpec::new(measure, *r, 10_000, Engine::Voting), &mut Stream::new(s, 0))?;
            let trace_t = run_chain(
                &ChainSpec::new(measure, *r, 10_000, Engine::Threshold),
                &mut Stream::new(s, 0),
            )?;
            if trace_v != trace_t {
                let k = trace_v
                    .iter()
                    .zip(&trace_t)
                    .position(|(a, b)| a != b)
                    .unwrap_or(trace_v.len());
                return Ok((false, format!("family {idx} seed {s}: traces diverge at k = {k}")));
            }
            compared += trace_v.len() as u64;
        }
    }
    Ok((true, format!("{compared} admissions bit-identical across 32 paired chains")))
}

/// Walk identities: recomputing thresholds and walk heights from raw traces
/// reproduces them exactly, and the level-set correspondences never fail.
fn criterion_10() -> Result<(bool, String)> {
    let cases: [(Measure, f64); 4] = [
        (Measure::uniform(0.0, 1.0)?, 0.25),
        (Measure::exponential(0.8)?, 0.5),
        (Measure::normal(0.0, 1.0)?, 0.6),
        (Measure::geometric_atomic(0.5)?, 0.75),
    ];
    let mut checked = 0u64;
    let mut violations = 0u64;
    for (idx, (measure, r)) in cases.iter().enumerate() {
        let trace = run_chain(
            &ChainSpec::new(measure, *r, 1_000, Engine::Threshold),
            &mut Stream::new(110 + idx as u64, 0),
        )?;
        let mut probes = Vec::with_capacity(16);
        for j in 0..16 {
            probes.push(measure.quantile(0.03 + 0.06 * j as f64)?);
        }
        let report = psi_diagnostics(&trace, *r, &probes)?;
        checked += report.checked;
        violations += report.violations;
    }
    // the fixed worked example, as a spot check with exact heights
    let (recs, walks) = trace_from_opinions(&[0.0, 5.0, 2.0, 3.0, 2.0, 1.0], 1.0 / 3.0)?;
    let replay_ok = recs[4].m == 2.0 && (walks.y() - 0.0).abs() < 1e-12 && (walks.y_plus() - 1.0).abs() < 1e-12;
    Ok((
        violations == 0 && replay_ok,
        format!("{checked} identity checks, {violations} violations; six-step replay ok = {replay_ok}"),
    ))
}

/// Shape chain: families passing the curvature test have monotone drift and
/// a single conditioned limit at every sampled admission ratio.
fn criterion_11() -> Result<(bool, String)> {
    let mut ok = true;
    let mut detail = String::new();
    for alpha in [1.0, 1.5, 2.0] {
        let measure = Measure::compressed_exp(alpha)?;
        let convex = matches!(convexity_criterion(&measure, 128)?, Convexity::Satisfied);
        let monotone =
            matches!(is_monotone_rho1(&measure, 128)?, Monotonicity::StrictlyDecreasing);
        let mut singletons = true;
        for r in [0.15, 0.3, 0.5, 0.7, 0.85] {
            let c = classify(&measure, r, 256)?;
            singletons &= c.deterministic
                && c.specs.len() == 1
                && c.specs[0].case == LimitCase::ConditionedClosed;
        }
        ok &= convex && monotone && singletons;
        let _ = write!(
            detail,
            "alpha={alpha}: convex {convex}, monotone {monotone}, singletons {singletons}; "
        );
    }
    Ok((ok, detail.trim_end_matches([' ', ';']).to_string()))
}

/// Order-statistic and pair-sum oracles: the tree quantile equals the sorted
/// reference on random multisets, and quadrature tail masses match direct
/// Monte Carlo.
fn criterion_12() -> Result<(bool, String)> {
    let mut stream = Stream::new(112, 0);
    let mut mismatches = 0u64;
    for _ in 0..1_000 {
        let size = 1 + (stream.next_u64() % 200) as usize;
        let mut tree = ClubTree::new();
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            let v = if stream.next_u64() % 3 == 0 {
                (stream.next_u64() % 12) as f64
            } else {
                stream.open01() * 12.0
            };
            tree.insert(v);
            values.push(v);
        }
        let r = 0.05 + 0.9 * stream.open01();
        if tree.quantile(r) != quantile_reference(&values, r) {
            mismatches += 1;
        }
    }

    let mut mc_fails = 0u64;
    let mut mc_detail = String::new();
    let families: [(Measure, [f64; 3]); 3] = [
        (Measure::uniform(0.0, 1.0)?, [0.25, 0.5, 0.75]),
        (Measure::exponential(1.0)?, [0.25, 0.5, 1.0]),
        (Measure::normal(0.0, 1.0)?, [-0.5, 0.0, 0.7]),
    ];
    for (measure, probes) in &families {
        for &m in probes {
            let (p, se) = pair_sum_mc(measure, m, 100_000, &mut stream);
            let exact = measure.sum_tail(m)?.closed;
            if (p - exact).abs() > 3.0 * se {
                mc_fails += 1;
                let _ = write!(mc_detail, "m={m}: {p:.5} vs {exact:.5}; ");
            }
        }
    }
    let ok = mismatches == 0 && mc_fails == 0;
    Ok((
        ok,
        format!(
            "1000 multiset quantiles: {mismatches} mismatches; 9 sum-tail MC probes: {mc_fails} out of band {}",
            mc_detail.trim_end()
        ),
    ))
}

fn dispatch(id: usize) -> Result<(bool, String)> {
    match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        12 => criterion_12(),
        _ => Err(crate::error::Error::Config(format!("no criterion {id}"))),
    }
}

pub fn run_criterion(id: usize) -> CriterionReport {
    let name = CRITERION_NAMES.get(id - 1).copied().unwrap_or("unknown");
    let outcome = std::panic::catch_unwind(|| dispatch(id));
    let (passed, detail) = match outcome {
        Ok(Ok(pair)) => pair,
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "opaque panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    CriterionReport { id, name, passed, detail }
}

/// Run every criterion in order, printing one line each.
pub fn run_all() -> Vec<CriterionReport> {
    (1..=12)
        .map(|id| {
            let report = run_criterion(id);
            println!(
                "criterion {:02} {} {}: {}",
                report.id,
                if report.passed { "PASS" } else { "FAIL" },
                report.name,
                report.detail
            );
            report
        })
        .collect()
}
