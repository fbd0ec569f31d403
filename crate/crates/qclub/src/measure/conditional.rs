//! Sampling an i.i.d. pair (X, Y) conditioned on `X + Y ≥ 2m` (or `> 2m`).
//!
//! Two strategies: plain rejection against the unconditioned product law,
//! and exact decompositions - piecewise inversion for the uniform, a
//! two-branch split for the exponential (stable at arbitrarily deep
//! thresholds since the event mass cancels), suffix-weighted enumeration for
//! purely atomic measures, and a tabulated marginal for everything else.

use super::{pair_sum, Atom, Bound, Measure};
use crate::error::{Error, Result};
use crate::rng::Stream;

const DEFAULT_ATTEMPT_CAP: u64 = 20_000_000;
/// Event (or marginal-table) mass below this is treated as zero.
const MASS_FLOOR: f64 = 1e-300;
const TABLE_CELLS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStrategy {
    Rejection,
    Exact,
}

/// One-shot draw; build a [`ConditionalSampler`] when drawing repeatedly at
/// the same threshold.
pub fn conditional_pair(
    measure: &Measure,
    m: f64,
    bound: Bound,
    strategy: PairStrategy,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    ConditionalSampler::new(measure, m, bound, strategy)?.draw(rng)
}

pub struct ConditionalSampler<'a> {
    measure: &'a Measure,
    m: f64,
    bound: Bound,
    strategy: PairStrategy,
    attempt_cap: u64,
    kernel: Kernel,
}

enum Kernel {
    /// Conditioning event has full mass.
    Plain,
    /// Uniform(a, b) in standardized coordinates, threshold s = (m-a)/(b-a).
    UniformStd { a: f64, span: f64, s: f64 },
    /// Exponential(rate): branch A has X < 2m (Y then completes the sum by
    /// memorylessness), branch B has X ≥ 2m with Y unconstrained.
    ExpBranch { rate: f64, prob_a: f64 },
    /// Purely atomic measure: atoms sorted by position with prefix sums;
    /// `marginal[i]` is the cumulative X-weight `mass_i · S(2m - x_i)`.
    Atoms { atoms: Vec<Atom>, prefix: Vec<f64>, marginal: Vec<f64>, total: f64 },
    /// Generic: piecewise-linear CDF table for the X marginal; Y drawn by
    /// quantile inversion of the truncated measure.
    Table { cells: Vec<TableCell>, total: f64 },
    Reject,
}

struct TableCell {
    x0: f64,
    x1: f64,
    cum: f64, // cumulative weight through this cell
    kind: CellKind,
}

enum CellKind {
    /// Density treated as constant across the cell.
    Flat,
    /// Mass of the part above `x0`, drawn by the part's own quantile
    /// (the partner tail is exactly 1 here). `tail0` is the part tail at x0.
    PartTail { part: usize, tail0: f64 },
    /// A point mass.
    Atom,
}

impl<'a> ConditionalSampler<'a> {
    pub fn new(
        measure: &'a Measure,
        m: f64,
        bound: Bound,
        strategy: PairStrategy,
    ) -> Result<ConditionalSampler<'a>> {
        let mut s = ConditionalSampler {
            measure,
            m,
            bound,
            strategy,
            attempt_cap: DEFAULT_ATTEMPT_CAP,
            kernel: Kernel::Plain,
        };
        s.rebuild()?;
        Ok(s)
    }

    /// Lower the rejection attempt budget (diagnostics surface sooner).
    pub fn with_attempt_cap(mut self, cap: u64) -> ConditionalSampler<'a> {
        self.attempt_cap = cap.max(1);
        self
    }

    pub fn threshold(&self) -> f64 {
        self.m
    }

    /// Re-point the sampler at a new threshold, reusing buffers where the
    /// kernel shape allows (the atomic kernel refreshes without allocating).
    pub fn refresh(&mut self, m: f64) -> Result<()> {
        if m == self.m {
            return Ok(());
        }
        self.m = m;
        if let Kernel::Atoms { atoms, prefix, marginal, total } = &mut self.kernel {
            if !event_is_full(self.measure, m, self.bound) {
                let t = refresh_atom_marginal(atoms, prefix, marginal, m, self.bound);
                *total = t;
                if *total < MASS_FLOOR {
                    return Err(Error::ZeroMass { m });
                }
                return Ok(());
            }
        }
        self.rebuild()
    }

    fn rebuild(&mut self) -> Result<()> {
        let (measure, m, bound) = (self.measure, self.m, self.bound);
        if matches!(self.strategy, PairStrategy::Rejection) {
            self.kernel = Kernel::Reject;
            return Ok(());
        }
        if event_is_full(measure, m, bound) {
            self.kernel = Kernel::Plain;
            return Ok(());
        }
        if measure.mu_max().is_finite() && m > measure.mu_max() {
            return Err(Error::ZeroMass { m });
        }
        use super::Family::*;
        self.kernel = match measure.family() {
            Uniform { a, b } => {
                let s = (m - a) / (b - a);
                if s >= 1.0 {
                    return Err(Error::ZeroMass { m });
                }
                Kernel::UniformStd { a: *a, span: b - a, s }
            }
            Exponential { rate } => {
                // P(branch A)/P(event) = 2λm / (1 + 2λm); the e^{-2λm} factor
                // cancels, so this stays exact for any threshold depth
                let t = 2.0 * rate * m;
                Kernel::ExpBranch { rate: *rate, prob_a: t / (1.0 + t) }
            }
            _ => {
                let parts = measure.parts();
                if parts.cont.is_empty() {
                    let mut atoms = parts.atoms;
                    atoms.sort_by(|p, q| p.x.partial_cmp(&q.x).unwrap());
                    let mut prefix = Vec::with_capacity(atoms.len());
                    let mut acc = 0.0;
                    for a in &atoms {
                        acc += a.mass;
                        prefix.push(acc);
                    }
                    let mut marginal = vec![0.0; atoms.len()];
                    let total = refresh_atom_marginal(&atoms, &prefix, &mut marginal, m, bound);
                    if total < MASS_FLOOR {
                        return Err(Error::ZeroMass { m });
                    }
                    Kernel::Atoms { atoms, prefix, marginal, total }
                } else {
                    let (cells, total) = build_table(measure, m, bound)?;
                    if total < MASS_FLOOR {
                        return Err(Error::ZeroMass { m });
                    }
                    Kernel::Table { cells, total }
                }
            }
        };
        Ok(())
    }

    pub fn draw(&self, rng: &mut Stream) -> Result<(f64, f64)> {
        let (measure, m, bound) = (self.measure, self.m, self.bound);
        match &self.kernel {
            Kernel::Plain => Ok((measure.sample(rng), measure.sample(rng))),
            Kernel::UniformStd { a, span, s } => {
                let (u, v) = uniform_pair_std(*s, rng);
                Ok((a + span * u, a + span * v))
            }
            Kernel::ExpBranch { rate, prob_a } => {
                let exp = |r: &mut Stream| -(-r.open01()).ln_1p() / rate;
                if rng.open01() < *prob_a {
                    // X uniform on (0, 2m), Y completes the sum and overshoots
                    // by a fresh exponential
                    let x = 2.0 * m * rng.open01();
                    let y = (2.0 * m - x) + exp(rng);
                    Ok((x, y))
                } else {
                    Ok((2.0 * m + exp(rng), exp(rng)))
                }
            }
            Kernel::Atoms { atoms, prefix, marginal, total } => {
                let target = rng.open01() * total;
                let i = marginal.partition_point(|&c| c < target).min(atoms.len() - 1);
                let x = atoms[i].x;
                // Y from atoms with x_j in the partner suffix, weights mass_j
                let cut = partner_cut(atoms, 2.0 * m - x, bound);
                let base = if cut == 0 { 0.0 } else { prefix[cut - 1] };
                let top = prefix[atoms.len() - 1];
                let t2 = base + rng.open01() * (top - base);
                let j = prefix.partition_point(|&c| c < t2).min(atoms.len() - 1);
                let j = j.max(cut);
                Ok((x, atoms[j].x))
            }
            Kernel::Table { cells, total } => {
                let target = rng.open01() * total;
                let i = cells
                    .partition_point(|c| c.cum < target)
                    .min(cells.len() - 1);
                let cell = &cells[i];
                let prev = if i == 0 { 0.0 } else { cells[i - 1].cum };
                let frac = ((target - prev) / (cell.cum - prev)).clamp(0.0, 1.0);
                let x = match &cell.kind {
                    CellKind::Flat => cell.x0 + frac * (cell.x1 - cell.x0),
                    CellKind::Atom => cell.x0,
                    CellKind::PartTail { part, tail0 } => {
                        let parts = measure.parts();
                        let (_, p) = parts.cont[*part];
                        // tail level tail0·(1-frac) below the zone start
                        let u = 1.0 - tail0 * (1.0 - frac);
                        p.quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16))
                    }
                };
                let y = partner_draw(measure, 2.0 * m - x, bound, rng)?;
                Ok((x, y))
            }
            Kernel::Reject => {
                let mut attempts = 0u64;
                loop {
                    let x = measure.sample(rng);
                    let y = measure.sample(rng);
                    let ok = match bound {
                        Bound::Closed => x + y >= 2.0 * m,
                        Bound::Open => x + y > 2.0 * m,
                    };
                    if ok {
                        return Ok((x, y));
                    }
                    attempts += 1;
                    if attempts >= self.attempt_cap {
                        return Err(Error::RejectionStall {
                            m,
                            attempts,
                            acceptance: 1.0 / attempts as f64,
                        });
                    }
                }
            }
        }
    }
}

fn event_is_full(measure: &Measure, m: f64, bound: Bound) -> bool {
    let lo = measure.mu_min();
    if m < lo {
        return true;
    }
    if m == lo && lo.is_finite() {
        return match bound {
            Bound::Closed => true,
            Bound::Open => measure.atom_mass(lo) == 0.0,
        };
    }
    false
}

/// First index whose atom satisfies the partner constraint against `c`.
fn partner_cut(atoms: &[Atom], c: f64, bound: Bound) -> usize {
    match bound {
        Bound::Closed => atoms.partition_point(|a| a.x < c),
        Bound::Open => atoms.partition_point(|a| a.x <= c),
    }
}

fn refresh_atom_marginal(
    atoms: &[Atom],
    prefix: &[f64],
    marginal: &mut [f64],
    m: f64,
    bound: Bound,
) -> f64 {
    let top = prefix[atoms.len() - 1];
    let mut acc = 0.0;
    for (i, a) in atoms.iter().enumerate() {
        let cut = partner_cut(atoms, 2.0 * m - a.x, bound);
        let suffix = if cut == 0 { top } else { top - prefix[cut - 1] };
        acc += a.mass * suffix;
        marginal[i] = acc;
    }
    acc
}

/// Standardized uniform pair on (0,1)² given u + v ≥ 2s, by inverting the
/// piecewise-quadratic marginal of u and then drawing v uniformly on the
/// admissible interval.
fn uniform_pair_std(s: f64, rng: &mut Stream) -> (f64, f64) {
    let t = rng.open01();
    let u = if s <= 0.5 {
        let event = 1.0 - 2.0 * s * s;
        let w = t * event;
        let knee = 2.0 * s * (1.0 - s); // marginal mass of u < 2s
        if w <= knee {
            // CDF w = (1-2s)u + u²/2 on [0, 2s)
            let b = 1.0 - 2.0 * s;
            (b * b + 2.0 * w).sqrt() - b
        } else {
            2.0 * s + (w - knee)
        }
    } else {
        // triangular marginal on [2s-1, 1]
        let event = 2.0 * (1.0 - s) * (1.0 - s);
        (2.0 * s - 1.0) + (2.0 * t * event).sqrt()
    };
    let lo = (2.0 * s - u).max(0.0);
    let v = lo + rng.open01() * (1.0 - lo);
    (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0))
}

/// Draw Y from the measure conditioned on `Y ≥ c` (or `> c`) by quantile
/// inversion above the tail level.
fn partner_draw(measure: &Measure, c: f64, bound: Bound, rng: &mut Stream) -> Result<f64> {
    let t = measure.tail(c, bound);
    if t <= 0.0 {
        return Err(Error::ZeroMass { m: c });
    }
    if t >= 1.0 {
        return Ok(measure.sample(rng));
    }
    for _ in 0..64 {
        let u = 1.0 - t * (1.0 - rng.open01());
        let y = measure.quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16))?;
        let ok = match bound {
            Bound::Closed => y >= c,
            Bound::Open => y > c,
        };
        if ok {
            return Ok(y);
        }
        // rounding in 1 - t(1-u) nudged the level below the cut; retry
    }
    Err(Error::Numeric(format!("partner draw pinned below cut {c}")))
}

/// Piecewise-linear CDF table for the X marginal of the conditioned pair:
/// atoms, per-part quadrature cells over the window where the partner tail
/// varies, and one exact cell per part for the zone where it equals 1.
fn build_table(measure: &Measure, m: f64, bound: Bound) -> Result<(Vec<TableCell>, f64)> {
    let parts = measure.parts();
    let mut cells: Vec<TableCell> = Vec::new();
    let mut acc = 0.0;
    for a in &parts.atoms {
        let w = a.mass * measure.tail(2.0 * m - a.x, bound);
        if w > 0.0 {
            acc += w;
            cells.push(TableCell { x0: a.x, x1: a.x, cum: acc, kind: CellKind::Atom });
        }
    }
    for (idx, (w, part)) in parts.cont.iter().enumerate() {
        let (quad_lo, quad_hi, exact_from) = pair_sum::cont_window(measure, part, m);
        if quad_lo < quad_hi {
            let mut knots: Vec<f64> = part
                .breakpoints()
                .into_iter()
                .filter(|&x| x > quad_lo && x < quad_hi)
                .collect();
            knots.push(quad_lo);
            knots.push(quad_hi);
            knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            knots.dedup();
            let span = quad_hi - quad_lo;
            let g = |x: f64| part.density(x) * measure.tail(2.0 * m - x, Bound::Closed);
            for seg in knots.windows(2) {
                let n = ((seg[1] - seg[0]) / span * TABLE_CELLS as f64).ceil().max(1.0) as usize;
                let h = (seg[1] - seg[0]) / n as f64;
                for i in 0..n {
                    let x0 = seg[0] + i as f64 * h;
                    let x1 = x0 + h;
                    let mass =
                        w * h / 6.0 * (g(x0) + 4.0 * g(0.5 * (x0 + x1)) + g(x1));
                    if mass > 0.0 {
                        acc += mass;
                        cells.push(TableCell { x0, x1, cum: acc, kind: CellKind::Flat });
                    }
                }
            }
        }
        if let Some(s) = exact_from {
            let tail0 = part.tail(s);
            let mass = w * tail0;
            if mass > 0.0 {
                acc += mass;
                cells.push(TableCell {
                    x0: s,
                    x1: f64::INFINITY,
                    cum: acc,
                    kind: CellKind::PartTail { part: idx, tail0 },
                });
            }
        }
    }
    Ok((cells, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ks_distance;
    use crate::measure::Measure;

    fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j) = (0usize, 0usize);
        let mut d = 0.0f64;
        while i < n && j < m {
            // consume whole tied blocks before comparing: evaluating inside a
            // block inflates the sup for atomic laws
            let t = a[i].min(b[j]);
            while i < n && a[i] == t {
                i += 1;
            }
            while j < m && b[j] == t {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
        }
        d
    }

    fn min_samples(
        measure: &Measure,
        m: f64,
        bound: Bound,
        strategy: PairStrategy,
        n: usize,
        seed: u64,
    ) -> Vec<f64> {
        let sampler = ConditionalSampler::new(measure, m, bound, strategy).unwrap();
        let mut rng = crate::rng::Stream::new(seed, 0);
        (0..n)
            .map(|_| {
                let (x, y) = sampler.draw(&mut rng).unwrap();
                x.min(y)
            })
            .collect()
    }

    #[test]
    fn uniform_exact_matches_rejection() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        for m in [0.3, 0.7] {
            let mut a = min_samples(&u, m, Bound::Closed, PairStrategy::Exact, 20_000, 11);
            let mut b = min_samples(&u, m, Bound::Closed, PairStrategy::Rejection, 20_000, 12);
            let ks = two_sample_ks(&mut a, &mut b);
            assert!(ks < 0.02, "m = {m}: ks = {ks}");
        }
    }

    #[test]
    fn uniform_conditional_min_mass_above_threshold() {
        // P(min > m | X+Y ≥ 2m) at m = 0.4 is 0.36/0.68 = 9/17
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let xs = min_samples(&u, 0.4, Bound::Closed, PairStrategy::Exact, 40_000, 5);
        let p = xs.iter().filter(|&&v| v > 0.4).count() as f64 / xs.len() as f64;
        let expect = 9.0 / 17.0;
        assert!((p - expect).abs() < 0.01, "got {p}, expected {expect}");
    }

    #[test]
    fn exponential_exact_matches_rejection() {
        let e = Measure::exponential(0.7).unwrap();
        let mut a = min_samples(&e, 1.0, Bound::Closed, PairStrategy::Exact, 20_000, 21);
        let mut b = min_samples(&e, 1.0, Bound::Closed, PairStrategy::Rejection, 20_000, 22);
        let ks = two_sample_ks(&mut a, &mut b);
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn exponential_exact_reaches_deep_thresholds() {
        // event probability here is ~ 3e-84: rejection is hopeless, the
        // branch decomposition is unaffected
        let e = Measure::exponential(1.0).unwrap();
        let sampler =
            ConditionalSampler::new(&e, 96.0, Bound::Closed, PairStrategy::Exact).unwrap();
        let mut rng = crate::rng::Stream::new(9, 0);
        for _ in 0..1000 {
            let (x, y) = sampler.draw(&mut rng).unwrap();
            assert!(x + y >= 192.0);
        }
    }

    #[test]
    fn geometric_exact_matches_rejection() {
        let g = Measure::geometric_atomic(0.5).unwrap();
        let mut a = min_samples(&g, 0.6, Bound::Closed, PairStrategy::Exact, 20_000, 31);
        let mut b = min_samples(&g, 0.6, Bound::Closed, PairStrategy::Rejection, 20_000, 32);
        let ks = two_sample_ks(&mut a, &mut b);
        // both are step laws on the atoms; exact agreement of atom masses
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn pair_event_always_holds() {
        let cases: Vec<(Measure, f64)> = vec![
            (Measure::uniform(0.0, 1.0).unwrap(), 0.8),
            (Measure::exponential(1.0).unwrap(), 2.5),
            (Measure::geometric_atomic(0.5).unwrap(), 0.7),
            (Measure::normal(0.0, 1.0).unwrap(), 1.5),
        ];
        for (meas, m) in &cases {
            for bound in [Bound::Closed, Bound::Open] {
                let sampler =
                    ConditionalSampler::new(meas, *m, bound, PairStrategy::Exact).unwrap();
                let mut rng = crate::rng::Stream::new(77, 3);
                for _ in 0..2000 {
                    let (x, y) = sampler.draw(&mut rng).unwrap();
                    match bound {
                        Bound::Closed => assert!(x + y >= 2.0 * m, "{x} + {y} < 2·{m}"),
                        Bound::Open => assert!(x + y > 2.0 * m, "{x} + {y} <= 2·{m}"),
                    }
                }
            }
        }
    }

    #[test]
    fn table_kernel_matches_rejection_for_normal() {
        let n = Measure::normal(0.0, 1.0).unwrap();
        let mut a = min_samples(&n, 0.8, Bound::Closed, PairStrategy::Exact, 20_000, 41);
        let mut b = min_samples(&n, 0.8, Bound::Closed, PairStrategy::Rejection, 20_000, 42);
        let ks = two_sample_ks(&mut a, &mut b);
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn table_kernel_matches_rejection_for_mixture() {
        let mix = Measure::mixture(vec![
            (0.5, Measure::uniform(0.0, 1.0).unwrap()),
            (0.5, Measure::exponential(1.0).unwrap()),
        ])
        .unwrap();
        let mut a = min_samples(&mix, 0.6, Bound::Closed, PairStrategy::Exact, 20_000, 51);
        let mut b = min_samples(&mix, 0.6, Bound::Closed, PairStrategy::Rejection, 20_000, 52);
        let ks = two_sample_ks(&mut a, &mut b);
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn zero_mass_event_is_an_error() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        assert!(matches!(
            ConditionalSampler::new(&u, 1.0, Bound::Closed, PairStrategy::Exact),
            Err(Error::ZeroMass { .. })
        ));
        assert!(matches!(
            ConditionalSampler::new(&u, 1.5, Bound::Closed, PairStrategy::Exact),
            Err(Error::ZeroMass { .. })
        ));
    }

    #[test]
    fn rejection_stall_reports_diagnostics() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        // event probability 2·(1e-5)² = 2e-10; cap of 1e5 attempts stalls
        let sampler = ConditionalSampler::new(&u, 0.99999, Bound::Closed, PairStrategy::Rejection)
            .unwrap()
            .with_attempt_cap(100_000);
        let mut rng = crate::rng::Stream::new(1, 0);
        match sampler.draw(&mut rng) {
            Err(Error::RejectionStall { attempts, .. }) => assert_eq!(attempts, 100_000),
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn full_event_draws_unconditioned() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let sampler =
            ConditionalSampler::new(&u, -1.0, Bound::Closed, PairStrategy::Exact).unwrap();
        let mut rng = crate::rng::Stream::new(8, 0);
        let mut xs: Vec<f64> = Vec::new();
        for _ in 0..10_000 {
            let (x, y) = sampler.draw(&mut rng).unwrap();
            xs.push(x);
            xs.push(y);
        }
        let ks = ks_distance(&mut xs, |x| u.cdf(x));
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn refresh_tracks_threshold() {
        let g = Measure::geometric_atomic(0.5).unwrap();
        let mut sampler =
            ConditionalSampler::new(&g, 0.25, Bound::Closed, PairStrategy::Exact).unwrap();
        let mut rng = crate::rng::Stream::new(4, 0);
        for &m in &[0.25, 0.5, 0.6, 0.75, 0.9] {
            sampler.refresh(m).unwrap();
            for _ in 0..500 {
                let (x, y) = sampler.draw(&mut rng).unwrap();
                assert!(x + y >= 2.0 * m, "m = {m}: {x} + {y}");
            }
        }
    }
}

