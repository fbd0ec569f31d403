//! The admission process itself: each round draws an i.i.d. candidate pair,
//! and the pair is admitted (its minimum joins the club) exactly when the
//! members at or below the pair midpoint make up at least a fraction r of the
//! club. Three engines realize the same law: `Voting` counts supporters
//! directly, `Threshold` compares the midpoint against the club's lower
//! r-quantile, and `Conditional` skips rejection entirely by sampling the
//! pair conditioned on acceptance.

pub mod club;

pub use club::{quantile_rank, quantile_reference, ClubTree};

use crate::error::{Error, Result};
use crate::measure::{Bound, Measure, PairStrategy};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Voting,
    Threshold,
    Conditional,
}

/// One admission: the value that joined, the pre-admission threshold, the
/// walk heights before this step, and (for rejection engines) the cumulative
/// number of candidate rounds consumed so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: u64,
    pub x: f64,
    pub m: f64,
    pub y: f64,
    pub y_plus: f64,
    pub rounds: Option<u64>,
}

/// Height bookkeeping for the companion walks
///   y_k  = r k − #{j < k : x_j ≤ m_j}
///   y⁺_k = r k − #{j < k : x_j < m_j}
/// kept as integer counters so recomputation from a trace is bit-exact.
#[derive(Debug, Clone, Copy)]
pub struct WalkState {
    r: f64,
    k: u64,
    below_or_eq: u64,
    strictly_below: u64,
}

impl WalkState {
    pub fn new(r: f64) -> WalkState {
        WalkState { r, k: 0, below_or_eq: 0, strictly_below: 0 }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn y(&self) -> f64 {
        self.r * self.k as f64 - self.below_or_eq as f64
    }

    pub fn y_plus(&self) -> f64 {
        self.r * self.k as f64 - self.strictly_below as f64
    }

    /// Fold in admission k with its threshold m_k (call after recording the
    /// pre-step heights).
    pub fn update(&mut self, x: f64, m: f64) {
        if x <= m {
            self.below_or_eq += 1;
        }
        if x < m {
            self.strictly_below += 1;
        }
        self.k += 1;
    }
}

#[derive(Debug, Clone)]
pub struct ChainSpec<'a> {
    pub measure: &'a Measure,
    pub r: f64,
    pub n_admit: u64,
    pub engine: Engine,
    /// Abort an admission after this many consecutive rejected rounds.
    pub max_stall: u64,
}

pub const DEFAULT_MAX_STALL: u64 = 1_000_000_000;

impl<'a> ChainSpec<'a> {
    pub fn new(measure: &'a Measure, r: f64, n_admit: u64, engine: Engine) -> ChainSpec<'a> {
        ChainSpec { measure, r, n_admit, engine, max_stall: DEFAULT_MAX_STALL }
    }

    pub fn with_max_stall(mut self, max_stall: u64) -> ChainSpec<'a> {
        self.max_stall = max_stall;
        self
    }
}

/// Run the chain, handing each admission record to `sink` as it happens.
pub fn run_chain_with(
    spec: &ChainSpec,
    stream: &mut Stream,
    mut sink: impl FnMut(&TraceRecord),
) -> Result<()> {
    if !(spec.r > 0.0 && spec.r < 1.0) {
        return Err(Error::Config(format!("admission ratio must lie in (0,1), got {}", spec.r)));
    }
    let mut tree = ClubTree::with_capacity(spec.n_admit.min(1 << 24) as usize);
    let mut walks = WalkState::new(spec.r);
    let mut rounds: u64 = 0;

    let mut cond = match spec.engine {
        Engine::Conditional => Some(crate::measure::ConditionalSampler::new(
            spec.measure,
            f64::NEG_INFINITY,
            Bound::Closed,
            PairStrategy::Exact,
        )?),
        _ => None,
    };

    for k in 0..spec.n_admit {
        let m_k = if k == 0 { f64::NEG_INFINITY } else { tree.quantile(spec.r).unwrap() };
        let admitted = match spec.engine {
            Engine::Voting => {
                let mut stalled: u64 = 0;
                loop {
                    rounds += 1;
                    let x = spec.measure.sample(stream);
                    let y = spec.measure.sample(stream);
                    let mid = 0.5 * (x + y);
                    let supporters = tree.count_le(mid);
                    if supporters as f64 >= spec.r * (k as f64) {
                        break x.min(y);
                    }
                    stalled += 1;
                    if stalled >= spec.max_stall {
                        return Err(Error::ChainStall { k, m: m_k, rounds: stalled });
                    }
                }
            }
            Engine::Threshold => {
                let mut stalled: u64 = 0;
                loop {
                    rounds += 1;
                    let x = spec.measure.sample(stream);
                    let y = spec.measure.sample(stream);
                    let mid = 0.5 * (x + y);
                    if mid >= m_k {
                        break x.min(y);
                    }
                    stalled += 1;
                    if stalled >= spec.max_stall {
                        return Err(Error::ChainStall { k, m: m_k, rounds: stalled });
                    }
                }
            }
            Engine::Conditional => {
                let sampler = cond.as_mut().unwrap();
                sampler.refresh(m_k)?;
                let (x, y) = sampler.draw(stream)?;
                x.min(y)
            }
        };

        let record = TraceRecord {
            k,
            x: admitted,
            m: m_k,
            y: walks.y(),
            y_plus: walks.y_plus(),
            rounds: match spec.engine {
                Engine::Conditional => None,
                _ => Some(rounds),
            },
        };
        sink(&record);
        walks.update(admitted, m_k);
        tree.insert(admitted);
    }
    Ok(())
}

pub fn run_chain(spec: &ChainSpec, stream: &mut Stream) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::with_capacity(spec.n_admit.min(1 << 24) as usize);
    run_chain_with(spec, stream, |rec| out.push(*rec))?;
    Ok(out)
}

/// Replay a fixed opinion sequence through the admission bookkeeping (no
/// sampling): thresholds, walk heights, and the final walk state.
pub fn trace_from_opinions(opinions: &[f64], r: f64) -> Result<(Vec<TraceRecord>, WalkState)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Config(format!("admission ratio must lie in (0,1), got {r}")));
    }
    let mut tree = ClubTree::with_capacity(opinions.len());
    let mut walks = WalkState::new(r);
    let mut records = Vec::with_capacity(opinions.len());
    for (k, &x) in opinions.iter().enumerate() {
        let k = k as u64;
        let m_k = if k == 0 { f64::NEG_INFINITY } else { tree.quantile(r).unwrap() };
        records.push(TraceRecord { k, x, m: m_k, y: walks.y(), y_plus: walks.y_plus(), rounds: None });
        walks.update(x, m_k);
        tree.insert(x);
    }
    Ok((records, walks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsiReport {
    pub checked: u64,
    pub violations: u64,
}

/// Recompute every threshold and walk height of a trace from scratch and
/// check the level-set identities
///   (m_k ≤ t)  ⟺  y_k ≤ ψ⁺_k(t)      with ψ⁺_k(t) = #{j<k: x_j ≤ t} − #{j<k: x_j ≤ m_j}
///   (m_k ≥ t)  ⟺  y⁺_k > ψ_k(t)      with ψ_k(t)  = #{j<k: x_j < t} − #{j<k: x_j < m_j}
/// at each probe t. Errors if the trace's own thresholds or heights fail to
/// reproduce; identity failures are only counted.
pub fn psi_diagnostics(records: &[TraceRecord], r: f64, probes: &[f64]) -> Result<PsiReport> {
    let mut sorted: Vec<f64> = Vec::with_capacity(records.len());
    let mut walks = WalkState::new(r);
    let mut checked = 0u64;
    let mut violations = 0u64;

    for rec in records {
        let k = rec.k;
        if k != sorted.len() as u64 {
            return Err(Error::Numeric(format!("trace records out of order at k = {k}")));
        }
        let m_k = if k == 0 {
            f64::NEG_INFINITY
        } else {
            let rank = quantile_rank(r, k) as usize;
            sorted[rank - 1]
        };
        if !(m_k == rec.m || (m_k.is_nan() && rec.m.is_nan())) {
            return Err(Error::Numeric(format!(
                "threshold mismatch at k = {k}: recomputed {m_k}, trace {}",
                rec.m
            )));
        }
        let y_k = walks.y();
        let y_plus_k = walks.y_plus();
        if y_k != rec.y || y_plus_k != rec.y_plus {
            return Err(Error::Numeric(format!(
                "walk height mismatch at k = {k}: recomputed ({y_k}, {y_plus_k}), trace ({}, {})",
                rec.y, rec.y_plus
            )));
        }

        let c_le = walks.below_or_eq;
        let c_lt = walks.strictly_below;
        for &t in probes {
            let count_le = sorted.partition_point(|&v| v <= t) as u64;
            let count_lt = sorted.partition_point(|&v| v < t) as u64;
            let psi_plus = count_le as f64 - c_le as f64;
            let psi = count_lt as f64 - c_lt as f64;

            let lhs1 = m_k <= t;
            let rhs1 = y_k <= psi_plus;
            let lhs2 = m_k >= t;
            let rhs2 = y_plus_k > psi;
            checked += 2;
            if lhs1 != rhs1 {
                violations += 1;
            }
            if lhs2 != rhs2 {
                violations += 1;
            }
        }

        walks.update(rec.x, m_k);
        let pos = sorted.partition_point(|&v| v <= rec.x);
        sorted.insert(pos, rec.x);
    }
    Ok(PsiReport { checked, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn six_opinion_replay() {
        // worked example: opinions 0,5,2,3,2,1 at r = 1/3
        let r = 1.0 / 3.0;
        let (recs, walks) = trace_from_opinions(&[0.0, 5.0, 2.0, 3.0, 2.0, 1.0], r).unwrap();
        let m_expected = [f64::NEG_INFINITY, 0.0, 0.0, 0.0, 2.0, 2.0];
        let y_expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 4.0 / 3.0, 2.0 / 3.0];
        let y_plus_expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 4.0 / 3.0, 5.0 / 3.0];
        for (k, rec) in recs.iter().enumerate() {
            assert_eq!(rec.m, m_expected[k], "m at k = {k}");
            assert!(close(rec.y, y_expected[k], 1e-12), "y at k = {k}: {}", rec.y);
            assert!(close(rec.y_plus, y_plus_expected[k], 1e-12), "y+ at k = {k}");
        }
        // after all six: y_6 = 2 − 2 = 0, y⁺_6 = 2 − 1 = 1
        assert!(close(walks.y(), 0.0, 1e-12));
        assert!(close(walks.y_plus(), 1.0, 1e-12));
    }

    #[test]
    fn voting_and_threshold_traces_are_identical() {
        let measures = [
            Measure::uniform(0.0, 1.0).unwrap(),
            Measure::exponential(1.0).unwrap(),
            Measure::geometric_atomic(0.5).unwrap(),
        ];
        for measure in &measures {
            for seed in 0..4u64 {
                let spec_v = ChainSpec::new(measure, 0.4, 2_000, Engine::Voting);
                let spec_t = ChainSpec::new(measure, 0.4, 2_000, Engine::Threshold);
                let mut s1 = Stream::new(1_000 + seed, 0);
                let mut s2 = Stream::new(1_000 + seed, 0);
                let trace_v = run_chain(&spec_v, &mut s1).unwrap();
                let trace_t = run_chain(&spec_t, &mut s2).unwrap();
                assert_eq!(trace_v.len(), trace_t.len());
                for (a, b) in trace_v.iter().zip(&trace_t) {
                    assert_eq!(a, b, "divergence at k = {}", a.k);
                }
            }
        }
    }

    #[test]
    fn conditional_engine_respects_threshold() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let spec = ChainSpec::new(&measure, 0.5, 3_000, Engine::Conditional);
        let mut stream = Stream::new(42, 0);
        let trace = run_chain(&spec, &mut stream).unwrap();
        // replay the admitted values: same thresholds must emerge, and each
        // admitted pair's midpoint must have cleared the bar. The trace only
        // keeps min(x,y), but min ≥ 2m − max ⟹ checking x ≥ 2m_k − hi is
        // not possible here; instead verify m-monotone bookkeeping and the
        // defining inequality via psi_diagnostics below.
        let probes = [0.1, 0.3, 0.5, 0.7, 0.9];
        let report = psi_diagnostics(&trace, 0.5, &probes).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.checked, 2 * probes.len() as u64 * trace.len() as u64);
    }

    #[test]
    fn psi_identities_hold_on_sampled_chains() {
        let measures = [
            Measure::uniform(0.0, 1.0).unwrap(),
            Measure::exponential(0.8).unwrap(),
            Measure::normal(0.0, 1.0).unwrap(),
            Measure::geometric_atomic(0.5).unwrap(),
        ];
        for (i, measure) in measures.iter().enumerate() {
            let r = [0.25, 0.5, 0.6, 0.75][i];
            let spec = ChainSpec::new(measure, r, 1_000, Engine::Threshold);
            let mut stream = Stream::new(500 + i as u64, 0);
            let trace = run_chain(&spec, &mut stream).unwrap();
            let mut probes = Vec::new();
            for j in 0..16 {
                probes.push(measure.quantile(0.03 + 0.06 * j as f64).unwrap());
            }
            let report = psi_diagnostics(&trace, r, &probes).unwrap();
            assert_eq!(report.violations, 0, "family {i}");
        }
    }

    #[test]
    fn tampered_trace_is_rejected() {
        let (mut recs, _) = trace_from_opinions(&[0.0, 5.0, 2.0, 3.0], 0.5).unwrap();
        recs[2].m = 1.0;
        assert!(psi_diagnostics(&recs, 0.5, &[1.0]).is_err());
    }

    #[test]
    fn stall_guard_fires() {
        // r close to 1 with a bounded family: after a high quantile forms,
        // midpoints rarely clear it; a tiny stall cap must trip.
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let spec = ChainSpec::new(&measure, 0.9, 10_000, Engine::Threshold).with_max_stall(50);
        let mut stream = Stream::new(3, 0);
        match run_chain(&spec, &mut stream) {
            Err(Error::ChainStall { rounds, .. }) => assert_eq!(rounds, 50),
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn rounds_are_cumulative_and_start_at_one() {
        let measure = Measure::exponential(1.0).unwrap();
        let spec = ChainSpec::new(&measure, 0.5, 100, Engine::Threshold);
        let mut stream = Stream::new(11, 0);
        let trace = run_chain(&spec, &mut stream).unwrap();
        assert_eq!(trace[0].rounds, Some(1));
        let mut prev = 0;
        for rec in &trace {
            let rounds = rec.rounds.unwrap();
            assert!(rounds > prev);
            prev = rounds;
        }
    }

    #[test]
    fn conditional_matches_rejection_distribution() {
        // same chain law: compare final thresholds across an ensemble
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let (mut cond_final, mut rej_final) = (Vec::new(), Vec::new());
        for seed in 0..40u64 {
            let spec_c = ChainSpec::new(&measure, 0.25, 400, Engine::Conditional);
            let spec_r = ChainSpec::new(&measure, 0.25, 400, Engine::Threshold);
            let mut s1 = Stream::new(9_000 + seed, 0);
            let mut s2 = Stream::new(77_000 + seed, 0);
            cond_final.push(run_chain(&spec_c, &mut s1).unwrap().last().unwrap().m);
            rej_final.push(run_chain(&spec_r, &mut s2).unwrap().last().unwrap().m);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        // both should be near the known stable point ≈ 0.155 at this depth
        assert!(close(mean(&cond_final), mean(&rej_final), 0.02));
    }
}
