//! Limiting behavior of the chain: where the threshold sequence can settle,
//! and the law of admitted values once it has.
//!
//! Three limit shapes arise. At a stable point m the admitted pair is the
//! original pair conditioned on its sum reaching 2m, with the boundary either
//! included (threshold hit from below / at an atom) or excluded (approached
//! from above); with finite support the threshold may instead escape to the
//! upper endpoint, collapsing the admitted law to a point mass there.

use crate::drift::{Drift, DriftProfile, ROOT_WIDTH, ZERO_TOL};
use crate::error::{Error, Result};
use crate::measure::{Bound, ConditionalSampler, Measure, PairStrategy};
use crate::numeric::simpson_segments;
use crate::process::quantile_rank;
use crate::rng::Stream;

const QUAD_TOL: f64 = 1e-10;
const ATOM_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitCase {
    /// Pair conditioned on X + Y ≥ 2m.
    ConditionedClosed,
    /// Pair conditioned on X + Y > 2m.
    ConditionedOpen,
    /// Degenerate point mass at the upper support endpoint.
    PointMass,
}

#[derive(Debug, Clone, Copy)]
pub struct LimitSpec<'a> {
    pub measure: &'a Measure,
    pub case: LimitCase,
    pub m: f64,
    /// Mass of the conditioning event (1 for a point mass).
    pub normalizer: f64,
    /// True when the closed and open conditionings agree at this m.
    pub coincident: bool,
}

impl<'a> LimitSpec<'a> {
    pub fn conditioned(measure: &'a Measure, m: f64, bound: Bound) -> Result<LimitSpec<'a>> {
        let st = measure.sum_tail(m)?;
        let normalizer = match bound {
            Bound::Closed => st.closed,
            Bound::Open => st.open,
        };
        if !(normalizer > 1e-300) {
            return Err(Error::ZeroMass { m });
        }
        let case = match bound {
            Bound::Closed => LimitCase::ConditionedClosed,
            Bound::Open => LimitCase::ConditionedOpen,
        };
        Ok(LimitSpec { measure, case, m, normalizer, coincident: st.closed == st.open })
    }

    pub fn point_mass(measure: &'a Measure) -> Result<LimitSpec<'a>> {
        let b = measure.mu_max();
        if !b.is_finite() {
            return Err(Error::Domain("point-mass limit requires bounded support".into()));
        }
        Ok(LimitSpec { measure, case: LimitCase::PointMass, m: b, normalizer: 1.0, coincident: false })
    }

    fn bound(&self) -> Bound {
        match self.case {
            LimitCase::ConditionedOpen => Bound::Open,
            _ => Bound::Closed,
        }
    }

    /// P(admitted value > s) under the limit law.
    pub fn tail(&self, s: f64) -> Result<f64> {
        match self.case {
            LimitCase::PointMass => Ok(if s < self.m { 1.0 } else { 0.0 }),
            _ => limit_tail(self.measure, self.m, self.bound(), s),
        }
    }

    pub fn cdf(&self, s: f64) -> Result<f64> {
        Ok(1.0 - self.tail(s)?)
    }

    /// Density of the limit law at x (continuous base measures only):
    /// f(x) · tail(max(x, 2m−x)) / (normalizer / 2).
    pub fn density(&self, x: f64) -> Result<f64> {
        if self.case == LimitCase::PointMass {
            return Err(Error::Domain("point-mass limit has no density".into()));
        }
        let f = self.measure.density(x)?;
        let partner = (2.0 * self.m - x).max(x);
        Ok(f * self.measure.tail(partner, self.bound()) / (0.5 * self.normalizer))
    }

    /// ∫ density − 1, as a quadrature sanity check (continuous measures only).
    pub fn verify_normalization(&self) -> Result<f64> {
        if self.case == LimitCase::PointMass {
            return Ok(0.0);
        }
        let lo = if self.measure.mu_min().is_finite() {
            self.measure.mu_min()
        } else {
            self.measure.quantile(1e-12)?
        };
        let hi = if self.measure.mu_max().is_finite() {
            self.measure.mu_max()
        } else {
            self.measure.quantile(1.0 - 1e-14)?.max(2.0 * self.m - lo + 1.0)
        };
        let mut breaks = vec![self.m, 2.0 * self.m - lo, 2.0 * self.m - hi];
        breaks.retain(|b| b.is_finite());
        let spec = *self;
        let total = simpson_segments(&|x| spec.density(x).unwrap_or(0.0), lo, hi, &breaks, QUAD_TOL)?;
        Ok(total - 1.0)
    }

    pub fn sampler(&self) -> Result<LimitSampler<'a>> {
        match self.case {
            LimitCase::PointMass => Ok(LimitSampler::Point(self.m)),
            _ => Ok(LimitSampler::Conditioned(ConditionalSampler::new(
                self.measure,
                self.m,
                self.bound(),
                PairStrategy::Exact,
            )?)),
        }
    }
}

pub enum LimitSampler<'a> {
    Conditioned(ConditionalSampler<'a>),
    Point(f64),
}

impl LimitSampler<'_> {
    pub fn draw(&self, stream: &mut Stream) -> Result<f64> {
        match self {
            LimitSampler::Conditioned(sampler) => {
                let (x, y) = sampler.draw(stream)?;
                Ok(x.min(y))
            }
            LimitSampler::Point(b) => Ok(*b),
        }
    }
}

/// Tail of min(X,Y) conditioned on X + Y ≥ 2m (Closed) or > 2m (Open).
///
/// For s ≥ m both coordinates exceeding s already implies the sum condition,
/// so the tail is tail(s)² over the event mass. For s < m split the partner
/// constraint: when the partner bound 2m − x exceeds s it binds, otherwise
/// only min > s does.
pub fn limit_tail(measure: &Measure, m: f64, bound: Bound, s: f64) -> Result<f64> {
    if s.is_nan() || m.is_nan() {
        return Err(Error::Domain("limit tail of NaN".into()));
    }
    let st = measure.sum_tail(m)?;
    let norm = match bound {
        Bound::Closed => st.closed,
        Bound::Open => st.open,
    };
    if !(norm > 1e-300) {
        return Err(Error::ZeroMass { m });
    }
    if s >= m {
        let t = measure.tail(s, Bound::Open);
        return Ok(((t * t) / norm).min(1.0));
    }

    // s < m: numerator = P(both > s, sum condition).
    // Exact wing: x > 2m − s forces no partner constraint beyond y > s.
    let split = 2.0 * m - s;
    let mut numer = measure.tail(split, Bound::Open) * measure.tail(s, Bound::Open);

    let parts = measure.parts();
    for atom in &parts.atoms {
        if atom.x > s && atom.x <= split {
            let t = 2.0 * m - atom.x;
            let factor = match bound {
                Bound::Closed => {
                    if t > s {
                        measure.tail(t, Bound::Closed)
                    } else {
                        measure.tail(s, Bound::Open)
                    }
                }
                Bound::Open => measure.tail(t.max(s), Bound::Open),
            };
            numer += atom.mass * factor;
        }
    }
    for (weight, part) in &parts.cont {
        let lo = part.lo().max(s);
        let hi = part.hi().min(split);
        if hi <= lo {
            continue;
        }
        let mut breaks: Vec<f64> = part.breakpoints();
        for b in part.breakpoints() {
            breaks.push(2.0 * m - b);
        }
        for atom in &parts.atoms {
            breaks.push(2.0 * m - atom.x);
        }
        breaks.push(m);
        let integrand = |x: f64| part.density(x) * measure.tail(2.0 * m - x, bound);
        numer += weight * simpson_segments(&integrand, lo, hi, &breaks, QUAD_TOL)?;
    }
    Ok((numer / norm).clamp(0.0, 1.0))
}

/// Asymptotic tail-thickness diagnostic: log of the limit tail over log of
/// the base tail at the same point, which tends to 2 when the conditioned
/// tail squares the base tail.
pub fn tail_exponent(spec: &LimitSpec, s: f64) -> Result<f64> {
    if spec.case == LimitCase::PointMass {
        return Err(Error::Domain("tail exponent undefined for a point mass".into()));
    }
    if s <= spec.m {
        return Err(Error::Domain(format!(
            "tail exponent probes the far tail: need s > m = {}, got {s}",
            spec.m
        )));
    }
    let log_base = spec.measure.log_tail(s, Bound::Open);
    if !(log_base < 0.0) || log_base.is_infinite() {
        return Err(Error::Numeric(format!("degenerate base tail at s = {s}")));
    }
    Ok((2.0 * log_base - spec.normalizer.ln()) / log_base)
}

#[derive(Debug)]
pub struct Classification<'a> {
    pub specs: Vec<LimitSpec<'a>>,
    pub zero_intervals: Vec<(f64, f64)>,
    /// Single candidate and no flat drift stretches.
    pub deterministic: bool,
    pub profile: DriftProfile,
}

/// Locate every admissible limit of the threshold sequence at the given
/// drift-profile resolution and attach its limit law.
pub fn classify<'a>(measure: &'a Measure, r: f64, grid: usize) -> Result<Classification<'a>> {
    let drift = Drift::new(measure, r)?;
    let profile = drift.sign_analysis(grid)?;

    let mut specs: Vec<LimitSpec<'a>> = Vec::new();
    let push_unique = |spec: LimitSpec<'a>, specs: &mut Vec<LimitSpec<'a>>| {
        let dup = specs
            .iter()
            .any(|s| (s.m - spec.m).abs() <= ROOT_WIDTH.max(1e-12) && s.case == spec.case);
        if !dup {
            specs.push(spec);
        }
    };

    for root in &profile.roots {
        let case_one = root.rho <= ZERO_TOL && root.rho_plus >= -ZERO_TOL;
        let case_two = root.rho <= ZERO_TOL && root.right_limit.abs() <= ZERO_TOL;
        if case_one {
            let spec = LimitSpec::conditioned(measure, root.m, Bound::Closed)?;
            if spec.coincident || !case_two {
                push_unique(spec, &mut specs);
            } else {
                push_unique(spec, &mut specs);
                push_unique(LimitSpec::conditioned(measure, root.m, Bound::Open)?, &mut specs);
            }
        } else if case_two {
            push_unique(LimitSpec::conditioned(measure, root.m, Bound::Open)?, &mut specs);
        }
    }

    // Atoms can carry a stable bracket too fine for the probe march.
    let parts = measure.parts();
    for atom in &parts.atoms {
        if atom.mass < ATOM_FLOOR {
            continue;
        }
        let rho = match drift.rho(atom.x) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let rho_plus = match drift.rho_plus(atom.x) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if rho <= ZERO_TOL && rho_plus >= -ZERO_TOL {
            if let Ok(spec) = LimitSpec::conditioned(measure, atom.x, Bound::Closed) {
                push_unique(spec, &mut specs);
            }
        }
    }

    // Flat stretches of zero drift: every interior point is admissible; keep
    // the endpoints as representatives.
    for &(lo, hi) in &profile.zero_intervals {
        for m in [lo, hi] {
            if let Ok(spec) = LimitSpec::conditioned(measure, m, Bound::Closed) {
                push_unique(spec, &mut specs);
            }
        }
    }

    // Escape to a finite upper endpoint: drift must stay nonnegative
    // arbitrarily close to it.
    let b = measure.mu_max();
    if b.is_finite() {
        let lo_ref = if measure.mu_min().is_finite() {
            measure.mu_min()
        } else {
            measure.quantile(0.5)?
        };
        let w = (b - lo_ref).max(1e-6);
        let mut escape = true;
        let mut saw_probe = false;
        for j in 10..=40 {
            let m = b - w * (0.5f64).powi(j);
            if m <= lo_ref {
                continue;
            }
            if let Ok(v) = drift.rho(m) {
                saw_probe = true;
                if v < -ZERO_TOL {
                    escape = false;
                    break;
                }
            }
        }
        if escape {
            for atom in &parts.atoms {
                if atom.x > b - w * (0.5f64).powi(10) && atom.x < b {
                    if let Ok(v) = drift.rho(atom.x) {
                        saw_probe = true;
                        if v < -ZERO_TOL {
                            escape = false;
                            break;
                        }
                    }
                }
            }
        }
        if escape && saw_probe {
            let near_existing = specs.iter().any(|s| (s.m - b).abs() <= ROOT_WIDTH);
            if !near_existing {
                specs.push(LimitSpec::point_mass(measure)?);
            }
        }
    }

    specs.sort_by(|a, b| a.m.partial_cmp(&b.m).unwrap());
    let deterministic = specs.len() == 1 && profile.zero_intervals.is_empty();
    Ok(Classification { specs, zero_intervals: profile.zero_intervals.clone(), deterministic, profile })
}

/// Closed-form stable points for the families that admit one.
pub fn closed_form(measure: &Measure, r: f64) -> Result<f64> {
    use crate::measure::Family;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Config(format!("admission ratio must lie in (0,1), got {r}")));
    }
    match measure.family() {
        Family::Uniform { a, b } => {
            if r < 0.5 {
                let std = (1.0 - (1.0 - 3.0 * r + 2.0 * r * r).sqrt()) / (3.0 - 2.0 * r);
                Ok(a + (b - a) * std)
            } else if r > 0.5 {
                Ok(*b)
            } else {
                Err(Error::NonDeterministic)
            }
        }
        Family::Exponential { rate } => Ok(r / (2.0 * rate * (1.0 - r))),
        Family::Normal { .. } => measure.quantile(r),
        Family::CompressedExp { .. } => {
            let drift = Drift::new(measure, r)?;
            // unique root: drift is strictly decreasing for this family
            let mut hi = 1.0;
            let mut doublings = 0;
            while drift.rho(hi)? >= 0.0 {
                hi *= 2.0;
                doublings += 1;
                if doublings > 60 {
                    return Err(Error::Numeric("no sign change while bracketing".into()));
                }
            }
            let (lo, hi) = crate::numeric::bisect(
                &|m: f64| drift.rho(m).map(|v| v < 0.0).unwrap_or(false),
                0.0,
                hi,
                ROOT_WIDTH,
            )?;
            Ok(0.5 * (lo + hi))
        }
        _ => Err(Error::Domain("no closed-form stable point for this family".into())),
    }
}

/// Where the long-run threshold should sit for a sorted sample of admitted
/// values: the lower r-quantile of the empirical law.
pub fn empirical_threshold(sorted: &[f64], r: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = quantile_rank(r, sorted.len() as u64);
    Some(sorted[(rank - 1) as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exponential_limit_tail_far_side() {
        let measure = Measure::exponential(1.0).unwrap();
        // tail(2)² / F(0.5) = e^{-4} / (2 e^{-1}) = e^{-3}/2
        let t = limit_tail(&measure, 0.5, Bound::Closed, 2.0).unwrap();
        assert!(close(t, 0.024893534183931972, 1e-14), "{t}");
    }

    #[test]
    fn exponential_limit_tail_near_side() {
        let measure = Measure::exponential(1.0).unwrap();
        // limit density is flat at height 1 on [0, m] for λ = 1, m = 1/2
        let t = limit_tail(&measure, 0.5, Bound::Closed, 0.2).unwrap();
        assert!(close(t, 0.8, 1e-9), "{t}");
    }

    #[test]
    fn exponential_limit_density_shape() {
        let measure = Measure::exponential(1.0).unwrap();
        let spec = LimitSpec::conditioned(&measure, 0.5, Bound::Closed).unwrap();
        // flat at 1/(m + 1/2) = 1 below m, then e^{-2(x-m)}
        assert!(close(spec.density(0.1).unwrap(), 1.0, 1e-12));
        assert!(close(spec.density(0.49).unwrap(), 1.0, 1e-12));
        assert!(close(spec.density(1.0).unwrap(), (-1.0f64).exp(), 1e-12));
        assert!(close(spec.verify_normalization().unwrap(), 0.0, 1e-7));
    }

    #[test]
    fn uniform_limit_density_shape() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let m = 0.1550510257216822;
        let spec = LimitSpec::conditioned(&measure, m, Bound::Closed).unwrap();
        // above m the weight is 1 − x
        let ratio = spec.density(0.5).unwrap() / spec.density(0.3).unwrap();
        assert!(close(ratio, 0.5 / 0.7, 1e-12), "{ratio}");
        // below m it is x − (2m − 1)
        let ratio = spec.density(0.05).unwrap() / spec.density(0.10).unwrap();
        let expect = (0.05 - (2.0 * m - 1.0)) / (0.10 - (2.0 * m - 1.0));
        assert!(close(ratio, expect, 1e-12), "{ratio}");
        assert!(close(spec.verify_normalization().unwrap(), 0.0, 1e-7));
    }

    #[test]
    fn limit_tail_is_one_below_support() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let t = limit_tail(&measure, 0.3, Bound::Closed, -1.0).unwrap();
        assert!(close(t, 1.0, 1e-12));
    }

    #[test]
    fn classify_uniform_low_ratio() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let c = classify(&measure, 0.25, 256).unwrap();
        assert!(c.deterministic);
        assert_eq!(c.specs.len(), 1);
        let spec = &c.specs[0];
        assert_eq!(spec.case, LimitCase::ConditionedClosed);
        assert!(spec.coincident);
        assert!(close(spec.m, 0.1550510257216822, 1e-8), "{}", spec.m);
    }

    #[test]
    fn classify_uniform_high_ratio_escapes() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let c = classify(&measure, 0.75, 256).unwrap();
        assert!(c.deterministic);
        assert_eq!(c.specs.len(), 1);
        assert_eq!(c.specs[0].case, LimitCase::PointMass);
        assert_eq!(c.specs[0].m, 1.0);
    }

    #[test]
    fn classify_uniform_critical_is_nondeterministic() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let c = classify(&measure, 0.5, 256).unwrap();
        assert!(!c.deterministic);
        assert!(!c.zero_intervals.is_empty());
        let (lo, hi) = c.zero_intervals[0];
        assert!(close(lo, 0.5, 1e-6), "{lo}");
        assert!(hi > 0.9, "{hi}");
    }

    #[test]
    fn classify_exponential() {
        let measure = Measure::exponential(1.0).unwrap();
        let c = classify(&measure, 0.5, 256).unwrap();
        assert!(c.deterministic);
        assert!(close(c.specs[0].m, 0.5, 1e-8), "{}", c.specs[0].m);
        assert!(c.specs[0].coincident);
    }

    #[test]
    fn classify_normal_finds_drift_root_not_quantile() {
        let measure = Measure::normal(0.0, 1.0).unwrap();
        let c = classify(&measure, 0.75, 256).unwrap();
        assert!(c.deterministic);
        // the genuine balance point sits far above the 0.75 quantile 0.6745
        assert!(close(c.specs[0].m, 1.6435561387370075, 1e-6), "{}", c.specs[0].m);
    }

    #[test]
    fn classify_geometric_lists_every_sticky_atom() {
        let measure = Measure::geometric_atomic(0.5).unwrap();
        let c = classify(&measure, 0.6, 256).unwrap();
        assert!(!c.deterministic);
        assert!(c.specs.len() >= 3, "{} specs", c.specs.len());
        for l in 0..3u32 {
            let a = 1.0 - (0.5f64).powi(l as i32);
            assert!(
                c.specs.iter().any(|s| close(s.m, a, 1e-9)),
                "missing atom {a}"
            );
        }
        // every conditioned spec sits at an atom: closed ≠ open there
        for spec in &c.specs {
            if spec.case == LimitCase::ConditionedClosed {
                assert!(!spec.coincident, "atom spec at {} marked coincident", spec.m);
            }
        }
    }

    #[test]
    fn closed_form_catalog() {
        let uniform = Measure::uniform(0.0, 1.0).unwrap();
        assert!(close(closed_form(&uniform, 0.25).unwrap(), 0.1550510257216822, 1e-12));
        assert_eq!(closed_form(&uniform, 0.75).unwrap(), 1.0);
        assert!(matches!(closed_form(&uniform, 0.5), Err(Error::NonDeterministic)));

        let exp = Measure::exponential(2.0).unwrap();
        assert!(close(closed_form(&exp, 0.5).unwrap(), 0.25, 1e-12));
        assert!(close(closed_form(&exp, 0.25).unwrap(), 1.0 / 12.0, 1e-12));

        let normal = Measure::normal(0.0, 1.0).unwrap();
        assert!(close(closed_form(&normal, 0.75).unwrap(), 0.67448975019608174, 1e-10));
        assert!(close(closed_form(&normal, 0.5).unwrap(), 0.0, 1e-12));

        let ce = Measure::compressed_exp(1.0).unwrap();
        assert!(close(closed_form(&ce, 0.25).unwrap(), 1.0 / 6.0, 1e-8));
        assert!(close(closed_form(&ce, 0.5).unwrap(), 0.5, 1e-8));
        let ce15 = Measure::compressed_exp(1.5).unwrap();
        assert!(close(closed_form(&ce15, 0.5).unwrap(), 0.66994178971308937, 1e-8));
        let ce2 = Measure::compressed_exp(2.0).unwrap();
        assert!(close(closed_form(&ce2, 0.75).unwrap(), 1.5955777032145884, 1e-8));

        let geo = Measure::geometric_atomic(0.5).unwrap();
        assert!(closed_form(&geo, 0.5).is_err());
    }

    #[test]
    fn affine_uniform_closed_form() {
        let measure = Measure::uniform(2.0, 6.0).unwrap();
        let got = closed_form(&measure, 0.25).unwrap();
        assert!(close(got, 2.0 + 4.0 * 0.1550510257216822, 1e-12));
    }

    #[test]
    fn tail_exponent_exponential() {
        let measure = Measure::exponential(1.0).unwrap();
        let spec = LimitSpec::conditioned(&measure, 0.5, Bound::Closed).unwrap();
        let e20 = tail_exponent(&spec, 20.0).unwrap();
        let e100 = tail_exponent(&spec, 100.0).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!(close(e20, 2.0 - (1.0 - ln2) / 20.0, 1e-12), "{e20}");
        assert!(close(e100, 2.0 - (1.0 - ln2) / 100.0, 1e-12), "{e100}");
        assert!(e100 > e20);
    }

    #[test]
    fn tail_exponent_normal() {
        let measure = Measure::normal(0.0, 1.0).unwrap();
        let spec = LimitSpec::conditioned(&measure, 0.0, Bound::Closed).unwrap();
        let e6 = tail_exponent(&spec, 6.0).unwrap();
        assert!(close(e6, 1.96657, 2e-5), "{e6}");
    }

    #[test]
    fn tail_exponent_rejects_point_mass_and_near_side() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let pm = LimitSpec::point_mass(&measure).unwrap();
        assert!(tail_exponent(&pm, 0.9).is_err());
        let exp = Measure::exponential(1.0).unwrap();
        let spec = LimitSpec::conditioned(&exp, 0.5, Bound::Closed).unwrap();
        assert!(tail_exponent(&spec, 0.3).is_err());
    }

    #[test]
    fn point_mass_behavior() {
        let measure = Measure::uniform(0.0, 1.0).unwrap();
        let spec = LimitSpec::point_mass(&measure).unwrap();
        assert_eq!(spec.tail(0.5).unwrap(), 1.0);
        assert_eq!(spec.tail(1.0).unwrap(), 0.0);
        assert!(spec.density(0.5).is_err());
        let sampler = spec.sampler().unwrap();
        let mut stream = Stream::new(1, 0);
        for _ in 0..10 {
            assert_eq!(sampler.draw(&mut stream).unwrap(), 1.0);
        }
        let unbounded = Measure::exponential(1.0).unwrap();
        assert!(LimitSpec::point_mass(&unbounded).is_err());
    }

    #[test]
    fn limit_sampler_matches_limit_cdf() {
        let measure = Measure::exponential(1.0).unwrap();
        let spec = LimitSpec::conditioned(&measure, 0.5, Bound::Closed).unwrap();
        let sampler = spec.sampler().unwrap();
        let mut stream = Stream::new(321, 0);
        let mut sample: Vec<f64> = (0..20_000).map(|_| sampler.draw(&mut stream).unwrap()).collect();
        let d = crate::harness::ks_distance(&mut sample, |x| spec.cdf(x).unwrap());
        assert!(d < 0.015, "KS = {d}");
    }

    #[test]
    fn geometric_conditioned_tail_uses_exact_masses() {
        // m at the second atom a_2 = 3/4, p = 1/2: event mass closed is
        // p^4 = 1/16; conditioned tail at s = a_2 is open²/closed = p²·p⁴/p⁴
        let measure = Measure::geometric_atomic(0.5).unwrap();
        let t = limit_tail(&measure, 0.75, Bound::Closed, 0.75).unwrap();
        assert!(close(t, 0.25, 1e-12), "{t}");
    }

    #[test]
    fn empirical_threshold_examples() {
        assert_eq!(empirical_threshold(&[0.0, 2.0, 3.0, 5.0], 1.0 / 3.0), Some(2.0));
        assert_eq!(empirical_threshold(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.0));
        assert_eq!(empirical_threshold(&[], 0.5), None);
    }
}
