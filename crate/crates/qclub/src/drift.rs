//! Drift of the admission-threshold process: for a measure μ and ratio r,
//!
//! ```text
//! rho(m)  = tail(m, Open)² / P(X+Y ≥ 2m) - (1 - r)
//! rho⁺(m) = tail(m, Closed)² / P(X+Y ≥ 2m) - (1 - r)
//! ```
//!
//! `rho` is lower semicontinuous with left limit `rho⁺`; its sign structure
//! (roots, jumps, intervals of constant sign) decides where the threshold
//! can stabilize. Everything here certifies signs numerically at a stated
//! probe resolution - it is an instrument, not a proof.

use crate::error::{Error, Result};
use crate::measure::{Bound, Measure};
use crate::numeric;

/// |rho| at or below this counts as an exact zero in sign classification.
pub const ZERO_TOL: f64 = 1e-8;
/// Width to which roots and zero-interval endpoints are bisected.
pub const ROOT_WIDTH: f64 = 1e-10;
/// Atoms lighter than this are not separately probed.
const ATOM_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    /// rho is continuous at the root and passes through zero.
    Crossing,
    /// rho touches zero without changing sign.
    Touch,
    /// rho changes sign across a discontinuity (atom of μ or of μ*μ).
    Jump,
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub m: f64,
    pub kind: RootKind,
    pub rho: f64,
    pub rho_plus: f64,
    pub right_limit: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SignInterval {
    pub lo: f64,
    pub hi: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone)]
pub struct DriftProfile {
    pub r: f64,
    /// Range that was probed; beyond `bracket.1` the drift stayed below
    /// -(1-r)/2 at three consecutive doublings (unbounded supports).
    pub bracket: (f64, f64),
    pub intervals: Vec<SignInterval>,
    pub roots: Vec<Root>,
    /// Maximal probed intervals where |rho| ≤ ZERO_TOL throughout.
    pub zero_intervals: Vec<(f64, f64)>,
}

impl DriftProfile {
    pub fn sign_at(&self, m: f64) -> Option<Sign> {
        self.intervals
            .iter()
            .find(|iv| iv.lo <= m && m <= iv.hi)
            .map(|iv| iv.sign)
    }

    pub fn final_sign(&self) -> Option<Sign> {
        self.intervals.last().map(|iv| iv.sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Monotonicity {
    StrictlyDecreasing,
    /// Adjacent probes where the r = 1 drift ratio failed to decrease.
    NotMonotone { witness: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Convexity {
    Satisfied,
    /// First probe violating `g'' ≥ 0` or `g''' ≤ 0` for g = -log tail.
    Violated { at: f64, second: f64, third: f64 },
    /// The measure has atoms or a tail that is not twice differentiable.
    Inapplicable { reason: String },
}

#[derive(Debug, Clone, Copy)]
pub struct FfProbe {
    pub m: f64,
    /// tail(m, Open)² / P(X+Y ≥ 2m)
    pub ratio: f64,
    pub log_ratio: f64,
    /// True when the ratio had to be assembled in log space because the
    /// tail or the pair-sum tail underflowed.
    pub log_flagged: bool,
}

pub struct Drift<'a> {
    measure: &'a Measure,
    r: f64,
}

impl<'a> Drift<'a> {
    pub fn new(measure: &'a Measure, r: f64) -> Result<Drift<'a>> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Config(format!("admission ratio must lie in (0, 1), got {r}")));
        }
        Ok(Drift { measure, r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn measure(&self) -> &Measure {
        self.measure
    }

    pub fn rho(&self, m: f64) -> Result<f64> {
        let st = self.measure.sum_tail(m)?;
        if st.closed <= 0.0 {
            return Err(Error::Domain(format!(
                "drift undefined at m = {m}: pair event has zero mass"
            )));
        }
        let t = self.measure.tail(m, Bound::Open);
        Ok(t * t / st.closed - (1.0 - self.r))
    }

    pub fn rho_plus(&self, m: f64) -> Result<f64> {
        let st = self.measure.sum_tail(m)?;
        if st.closed <= 0.0 {
            return Err(Error::Domain(format!(
                "left limit undefined at m = {m}: pair event has zero mass"
            )));
        }
        let t = self.measure.tail(m, Bound::Closed);
        Ok(t * t / st.closed - (1.0 - self.r))
    }

    /// Right limit `lim rho(m + ε)`: the open tail squared over the open
    /// pair-sum tail, both available in closed form for every family.
    pub fn rho_right_limit(&self, m: f64) -> Result<f64> {
        let st = self.measure.sum_tail(m)?;
        if st.open <= 0.0 {
            return Err(Error::Domain(format!(
                "right limit undefined at m = {m}: pair event has zero mass just above"
            )));
        }
        let t = self.measure.tail(m, Bound::Open);
        Ok(t * t / st.open - (1.0 - self.r))
    }

    /// Right limit estimated by a decreasing offset sweep (`m + w·2^-j`,
    /// j = 10..=40, accepted when three consecutive iterates agree within
    /// 1e-8). Cross-checks [`Drift::rho_right_limit`]; errors with the last
    /// two iterates when the sequence does not settle.
    pub fn rho_right_limit_swept(&self, m: f64) -> Result<f64> {
        let width = self.measure.mu_max() - self.measure.mu_min();
        let scale = if width.is_finite() { width } else { 1.0 };
        numeric::right_limit_sweep(|x| self.rho(x), m, scale)
    }

    fn rho_checked(&self, m: f64) -> Option<f64> {
        self.rho(m).ok()
    }

    fn sign_of(&self, v: f64) -> Sign {
        if v.abs() <= ZERO_TOL {
            Sign::Zero
        } else if v > 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    /// Right end of the probe bracket on an unbounded support: the first
    /// point where rho sits below -(1-r)/2 at three consecutive levels of a
    /// geometric march in g = -ln tail. Marching in tail space keeps every
    /// probe where tail² and the pair event are still representable; a march
    /// in m overshoots into underflow within a few doublings.
    fn supercritical_bracket(&self, lo: f64) -> Result<f64> {
        const G_MAX: f64 = 250.0;
        let floor = -(1.0 - self.r) / 2.0;
        let start = self.measure.quantile(0.99)?.max(lo + 1.0);
        let mut g = (-self.measure.log_tail(start, Bound::Open)).max(1.0);
        let (mut hits, mut first_hit) = (0u32, f64::NAN);
        while g <= G_MAX {
            let m = self.tail_level(start, g)?;
            if self.rho_checked(m).map(|v| v < floor).unwrap_or(false) {
                if hits == 0 {
                    first_hit = m;
                }
                hits += 1;
                if hits >= 3 {
                    return Ok(first_hit);
                }
            } else {
                hits = 0;
            }
            g *= 1.5;
        }
        Err(Error::Numeric(format!(
            "supercritical bracket: drift above {floor:.4} at every reachable tail level"
        )))
    }

    /// `m` with `-ln tail(m, Open) = g`, by doubling then bisecting the
    /// monotone log tail; log space stays finite far past tail underflow.
    fn tail_level(&self, start: f64, g: f64) -> Result<f64> {
        let deep = |x: f64| self.measure.log_tail(x, Bound::Open) <= -g;
        if deep(start) {
            return Ok(start);
        }
        let mut step = start.abs().max(1.0);
        let mut far = start + step;
        let mut guard = 0u32;
        while !deep(far) {
            step *= 2.0;
            far = start + step;
            guard += 1;
            if guard > 200 {
                return Err(Error::Numeric(format!("tail level e^-{g:.1} unreachable")));
            }
        }
        let (_, b) = numeric::bisect(|x| !deep(x), start, far, 1e-9 * far.abs().max(1.0))?;
        Ok(b)
    }

    /// Sharpen one endpoint of a zero run toward its exact boundary by
    /// walking the zero tolerance down: when rho leaves the interval
    /// smoothly the |rho| <= t shoulder is √t wide, so the ZERO_TOL edge
    /// overshoots by ~5e-5. `anchor` is a probe in the run interior; stops
    /// at the rung where the interior no longer resolves below t.
    fn sharpen_zero_edge(&self, edge: f64, anchor: f64) -> f64 {
        let mut edge = edge;
        for t in [1e-9_f64, 1e-10, 1e-11, 1e-12, 1e-13] {
            let above = |x: f64| self.rho_checked(x).map(|v| v.abs() > t).unwrap_or(true);
            if above(anchor) {
                break;
            }
            if !above(edge) {
                continue;
            }
            let hit = if edge < anchor {
                numeric::bisect(&above, edge, anchor, ROOT_WIDTH).map(|(_, b)| b)
            } else {
                numeric::bisect(&above, anchor, edge, ROOT_WIDTH).map(|(a, _)| a)
            };
            if let Ok(z) = hit {
                edge = z;
            }
        }
        edge
    }

    /// Certify the sign structure of rho on the support at a probe
    /// resolution of `grid` cells (≥ 64). Atoms are probed explicitly along
    /// with their gap midpoints; sign changes are bisected to `ROOT_WIDTH`
    /// and classified as crossings, touches, or jumps.
    pub fn sign_analysis(&self, grid: usize) -> Result<DriftProfile> {
        if grid < 64 {
            return Err(Error::Config(format!("sign analysis needs grid >= 64, got {grid}")));
        }
        let lo = if self.measure.mu_min().is_finite() {
            self.measure.mu_min()
        } else {
            self.measure.quantile(1e-9)?
        };
        let hi = if self.measure.mu_max().is_finite() {
            self.measure.mu_max()
        } else {
            self.supercritical_bracket(lo)?
        };

        let atoms: Vec<f64> = {
            let parts = self.measure.parts();
            let mut xs: Vec<f64> = parts
                .atoms
                .iter()
                .filter(|a| a.mass >= ATOM_FLOOR && a.x >= lo && a.x <= hi)
                .map(|a| a.x)
                .collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            xs
        };
        if atoms.len() > grid {
            return Err(Error::Resolution { atoms: atoms.len(), grid });
        }

        let mut probes: Vec<f64> = (0..=grid)
            .map(|i| lo + (hi - lo) * i as f64 / grid as f64)
            .collect();
        probes.extend_from_slice(&atoms);
        for w in atoms.windows(2) {
            probes.push(0.5 * (w[0] + w[1]));
        }
        probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        probes.dedup();

        // evaluate; probes where the pair event is already exhausted
        // (at a continuous mu_max) are dropped
        let evals: Vec<(f64, f64, Sign)> = probes
            .iter()
            .filter_map(|&m| self.rho_checked(m).map(|v| (m, v, self.sign_of(v))))
            .collect();
        if evals.len() < 2 {
            return Err(Error::Numeric("sign analysis: fewer than two usable probes".into()));
        }

        let mut roots: Vec<Root> = Vec::new();
        let mut intervals: Vec<SignInterval> = Vec::new();
        let mut zero_intervals: Vec<(f64, f64)> = Vec::new();

        // coalesce probe runs of equal sign
        let mut run_start = 0usize;
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for i in 1..evals.len() {
            if evals[i].2 != evals[run_start].2 {
                runs.push((run_start, i - 1));
                run_start = i;
            }
        }
        runs.push((run_start, evals.len() - 1));

        for (ri, &(s, e)) in runs.iter().enumerate() {
            let sign = evals[s].2;
            let (mut ilo, mut ihi) = (evals[s].0, evals[e].0);
            if sign == Sign::Zero {
                // refine endpoints against the neighboring nonzero runs
                if s > 0 {
                    if let Ok((_, z)) = numeric::bisect(
                        |x| self.rho_checked(x).map(|v| v.abs() > ZERO_TOL).unwrap_or(true),
                        evals[s - 1].0,
                        evals[s].0,
                        ROOT_WIDTH,
                    ) {
                        ilo = z;
                    }
                }
                if e + 1 < evals.len() {
                    if let Ok((z, _)) = numeric::bisect(
                        |x| self.rho_checked(x).map(|v| v.abs() <= ZERO_TOL).unwrap_or(false),
                        evals[e].0,
                        evals[e + 1].0,
                        ROOT_WIDTH,
                    ) {
                        ihi = z;
                    }
                }
                if s == e {
                    // an isolated zero probe: a touch if the neighbors agree
                    // in sign, a crossing otherwise
                    let before = if ri > 0 { Some(evals[runs[ri - 1].1].2) } else { None };
                    let after =
                        if ri + 1 < runs.len() { Some(evals[runs[ri + 1].0].2) } else { None };
                    let kind = match (before, after) {
                        (Some(b), Some(a)) if b == a => RootKind::Touch,
                        _ => RootKind::Crossing,
                    };
                    roots.push(self.describe_root(evals[s].0, kind)?);
                } else {
                    let anchor = evals[(s + e) / 2].0;
                    ilo = self.sharpen_zero_edge(ilo, anchor);
                    ihi = self.sharpen_zero_edge(ihi, anchor);
                    zero_intervals.push((ilo, ihi));
                }
            }
            intervals.push(SignInterval { lo: ilo, hi: ihi, sign });
            // bisect the transition into the next run unless either side is zero
            if ri + 1 < runs.len() {
                let next_s = runs[ri + 1].0;
                let (a, b) = (evals[runs[ri].1], evals[next_s]);
                if a.2 != Sign::Zero && b.2 != Sign::Zero {
                    let pos_first = a.2 == Sign::Pos;
                    if let Ok((blo, bhi)) = numeric::bisect(
                        |x| {
                            self.rho_checked(x).map(|v| (v > 0.0) == pos_first).unwrap_or(false)
                        },
                        a.0,
                        b.0,
                        ROOT_WIDTH,
                    ) {
                        let snapped = atoms
                            .iter()
                            .find(|&&x| x >= blo - ROOT_WIDTH && x <= bhi + ROOT_WIDTH)
                            .copied();
                        let m = snapped.unwrap_or(0.5 * (blo + bhi));
                        let val = self.rho_checked(m).unwrap_or(f64::NAN);
                        let kind = if snapped.is_some() || val.abs() > 1e-6 {
                            RootKind::Jump
                        } else {
                            RootKind::Crossing
                        };
                        roots.push(self.describe_root(m, kind)?);
                    }
                }
            }
        }

        // atoms where the value brackets zero against the left limit are
        // roots even when the probe march stepped over them
        for &a in &atoms {
            let (v, vp) = (self.rho(a)?, self.rho_plus(a)?);
            if v < -ZERO_TOL && vp > ZERO_TOL {
                let dup = roots.iter().any(|r| (r.m - a).abs() <= ROOT_WIDTH);
                if !dup {
                    roots.push(self.describe_root(a, RootKind::Jump)?);
                }
            }
        }
        roots.sort_by(|p, q| p.m.partial_cmp(&q.m).unwrap());

        Ok(DriftProfile { r: self.r, bracket: (lo, hi), intervals, roots, zero_intervals })
    }

    fn describe_root(&self, m: f64, kind: RootKind) -> Result<Root> {
        Ok(Root {
            m,
            kind,
            rho: self.rho(m)?,
            rho_plus: self.rho_plus(m)?,
            right_limit: self.rho_right_limit(m).unwrap_or(f64::NAN),
        })
    }
}

/// Is the r = 1 drift ratio `h(m) = tail(m,Open)²/P(X+Y ≥ 2m)` strictly
/// decreasing? Probed on the quantile window (continuous parts) and on the
/// atoms with their gap midpoints; a failure to decrease between adjacent
/// probes is returned as a witness pair.
pub fn is_monotone_rho1(measure: &Measure, grid: usize) -> Result<Monotonicity> {
    let grid = grid.max(64);
    let mut probes: Vec<f64> = Vec::new();
    let parts = measure.parts();
    if !parts.cont.is_empty() {
        for i in 0..=grid {
            let u = 1e-6 + (1.0 - 2e-6) * i as f64 / grid as f64;
            probes.push(measure.quantile(u)?);
        }
    }
    let mut atom_xs: Vec<f64> = parts
        .atoms
        .iter()
        .filter(|a| a.mass >= ATOM_FLOOR)
        .map(|a| a.x)
        .collect();
    atom_xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probes.extend_from_slice(&atom_xs);
    for w in atom_xs.windows(2) {
        probes.push(0.5 * (w[0] + w[1]));
    }
    probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probes.dedup();

    let h = |m: f64| -> Result<f64> {
        let st = measure.sum_tail(m)?;
        if st.closed <= 0.0 {
            return Err(Error::Domain(format!("ratio undefined at m = {m}")));
        }
        let t = measure.tail(m, Bound::Open);
        Ok(t * t / st.closed)
    };

    let mut prev: Option<(f64, f64)> = None;
    for &m in &probes {
        let Ok(v) = h(m) else { continue };
        if let Some((pm, pv)) = prev {
            if v >= pv - 1e-13 * pv.abs().max(1.0) {
                return Ok(Monotonicity::NotMonotone { witness: (pm, m) });
            }
        }
        prev = Some((m, v));
    }
    Ok(Monotonicity::StrictlyDecreasing)
}

/// Shape criterion on `g = -log tail`: convex with concave derivative
/// (`g'' ≥ 0` and `g''' ≤ 0` on the support interior). Closed-form
/// derivatives for the analytic families; finite differences for smooth
/// mixtures; atoms and kinked tails make it inapplicable.
pub fn convexity_criterion(measure: &Measure, grid: usize) -> Result<Convexity> {
    use crate::measure::Family::*;
    const TOL: f64 = 1e-8;
    let grid = grid.max(64);
    if measure.has_atoms() {
        return Ok(Convexity::Inapplicable {
            reason: "measure has atoms; -log tail is not differentiable".into(),
        });
    }
    let closed_form: Option<Box<dyn Fn(f64) -> (f64, f64)>> = match measure.family() {
        Uniform { b, .. } => {
            let b = *b;
            Some(Box::new(move |x: f64| {
                let d = b - x;
                (1.0 / (d * d), 2.0 / (d * d * d))
            }))
        }
        Exponential { .. } => Some(Box::new(|_| (0.0, 0.0))),
        CompressedExp { alpha } => {
            let a = *alpha;
            Some(Box::new(move |x: f64| {
                (
                    a * (a - 1.0) * x.powf(a - 2.0),
                    a * (a - 1.0) * (a - 2.0) * x.powf(a - 3.0),
                )
            }))
        }
        Normal { mean, stddev } => {
            let (mu, sd) = (*mean, *stddev);
            Some(Box::new(move |x: f64| {
                let z = (x - mu) / sd;
                let lam = normal_hazard(z);
                let g2 = lam * (lam - z);
                let g3 = lam * ((lam - z) * (2.0 * lam - z) - 1.0);
                (g2 / (sd * sd), g3 / (sd * sd * sd))
            }))
        }
        Tabulated(_) => {
            return Ok(Convexity::Inapplicable {
                reason: "tabulated tail is piecewise log-linear; -log tail has kinks".into(),
            })
        }
        Mixture(_) => None, // finite differences below
        GeometricAtomic { .. } | AtomList(_) => unreachable!("handled by has_atoms"),
    };

    let (wlo, whi) = measure.quantile_window(1e-4)?;
    if let Some(derivs) = closed_form {
        for i in 0..=grid {
            let x = wlo + (whi - wlo) * i as f64 / grid as f64;
            let (g2, g3) = derivs(x);
            if g2 < -TOL || g3 > TOL {
                return Ok(Convexity::Violated { at: x, second: g2, third: g3 });
            }
        }
        return Ok(Convexity::Satisfied);
    }

    // smooth mixture: central stencils on g = -log tail, skipping stencils
    // that straddle a component boundary
    let parts = measure.parts();
    let mut kinks: Vec<f64> = Vec::new();
    for (_, p) in &parts.cont {
        if p.lo().is_finite() {
            kinks.push(p.lo());
        }
        if p.hi().is_finite() {
            kinks.push(p.hi());
        }
        kinks.extend(p.breakpoints());
    }
    let h = (whi - wlo) / grid as f64;
    let g = |x: f64| -measure.log_tail(x, Bound::Open);
    for i in 2..grid.saturating_sub(1) {
        let x = wlo + h * i as f64;
        if kinks.iter().any(|&k| (k - x).abs() <= 2.5 * h) {
            continue;
        }
        let (gm2, gm1, g0, gp1, gp2) =
            (g(x - 2.0 * h), g(x - h), g(x), g(x + h), g(x + 2.0 * h));
        let g2 = (-gm2 + 16.0 * gm1 - 30.0 * g0 + 16.0 * gp1 - gp2) / (12.0 * h * h);
        let g3 = (-gm2 + 2.0 * gm1 - 2.0 * gp1 + gp2) / (2.0 * h * h * h);
        let fd_tol = 1e-5 * (g0.abs().max(1.0)); // stencil noise floor
        if g2 < -fd_tol || g3 > fd_tol {
            return Ok(Convexity::Violated { at: x, second: g2, third: g3 });
        }
    }
    Ok(Convexity::Satisfied)
}

/// Hazard rate φ(z)/Φ̄(z) of the standard normal.
fn normal_hazard(z: f64) -> f64 {
    let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let tail = crate::measure::normal_upper(z);
    if tail > 0.0 {
        phi / tail
    } else {
        // asymptotic λ(z) ≈ z + 1/z for deep z
        z + 1.0 / z
    }
}

/// Probe `tail(m, Open)²/P(X+Y ≥ 2m)` at the given thresholds on an
/// unbounded support, switching to log space when either ingredient
/// underflows (exponential and normal carry closed log forms).
pub fn ff_ratio_probe(measure: &Measure, points: &[f64]) -> Result<Vec<FfProbe>> {
    if measure.mu_max().is_finite() {
        return Err(Error::Domain(
            "ratio probe expects an unbounded upper support".into(),
        ));
    }
    let mut out = Vec::with_capacity(points.len());
    for &m in points {
        let t = measure.tail(m, Bound::Open);
        let f = measure.sum_tail(m)?.closed;
        if f >= 1e-280 && t >= 1e-140 {
            let ratio = t * t / f;
            out.push(FfProbe { m, ratio, log_ratio: ratio.ln(), log_flagged: false });
        } else {
            let lt = measure.log_tail(m, Bound::Open);
            let lf = log_sum_tail(measure, m).ok_or_else(|| {
                Error::Numeric(format!(
                    "pair-sum tail underflows at m = {m} and no log form is available"
                ))
            })?;
            let log_ratio = 2.0 * lt - lf;
            out.push(FfProbe { m, ratio: log_ratio.exp(), log_ratio, log_flagged: true });
        }
    }
    Ok(out)
}

/// `ln P(X+Y ≥ 2m)` for families with a closed log form.
fn log_sum_tail(measure: &Measure, m: f64) -> Option<f64> {
    use crate::measure::Family::*;
    match measure.family() {
        Exponential { rate } => {
            let t = rate * m;
            Some((1.0 + 2.0 * t).ln() - 2.0 * t)
        }
        Normal { mean, stddev } => Some(crate::measure::normal_log_upper(
            std::f64::consts::SQRT_2 * (m - mean) / stddev,
        )),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;

    #[test]
    fn uniform_drift_values() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let d = Drift::new(&u, 0.25).unwrap();
        // 0.7²/0.82 - 0.75
        let expect = 0.49 / 0.82 - 0.75;
        assert!((d.rho(0.3).unwrap() - expect).abs() < 1e-15);
        assert!((d.rho_plus(0.5).unwrap() - (-0.25)).abs() < 1e-15);
        // at the left edge the drift equals r
        assert!((d.rho(0.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_half_ratio_drift_vanishes_on_upper_half() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let d = Drift::new(&u, 0.5).unwrap();
        for m in [0.5, 0.6, 0.8, 0.99] {
            assert!(d.rho(m).unwrap().abs() < 1e-15, "m = {m}");
        }
        // strictly positive below one half
        for m in [0.1, 0.3, 0.45] {
            assert!(d.rho(m).unwrap() > 0.0, "m = {m}");
        }
    }

    #[test]
    fn exponential_root_matches_closed_form() {
        let e = Measure::exponential(1.0).unwrap();
        let d = Drift::new(&e, 0.5).unwrap();
        // rho(m) = 1/(1+2m) - (1-r): root at r/(2(1-r))
        assert!(d.rho(0.49).unwrap() > 0.0);
        assert!(d.rho(0.51).unwrap() < 0.0);
        assert!(d.rho(0.5).unwrap().abs() < 1e-15);
        let profile = d.sign_analysis(128).unwrap();
        assert_eq!(profile.roots.len(), 1);
        let root = &profile.roots[0];
        assert!((root.m - 0.5).abs() < 1e-8, "root at {}", root.m);
        assert_eq!(root.kind, RootKind::Crossing);
    }

    #[test]
    fn uniform_quarter_root_value() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let d = Drift::new(&u, 0.25).unwrap();
        let profile = d.sign_analysis(128).unwrap();
        assert_eq!(profile.roots.len(), 1);
        // (1 - sqrt(1 - 3r + 2r²)) / (3 - 2r) at r = 1/4
        assert!(
            (profile.roots[0].m - 0.1550510257216822).abs() < 1e-8,
            "root at {}",
            profile.roots[0].m
        );
        assert_eq!(profile.roots[0].kind, RootKind::Crossing);
        assert_eq!(profile.final_sign(), Some(Sign::Neg));
    }

    #[test]
    fn uniform_above_half_is_all_positive() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let d = Drift::new(&u, 0.75).unwrap();
        let profile = d.sign_analysis(128).unwrap();
        assert!(profile.roots.is_empty(), "roots: {:?}", profile.roots);
        assert!(profile.zero_intervals.is_empty());
        assert!(profile.intervals.iter().all(|iv| iv.sign == Sign::Pos));
    }

    #[test]
    fn uniform_at_half_has_zero_interval() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let d = Drift::new(&u, 0.5).unwrap();
        let profile = d.sign_analysis(128).unwrap();
        assert_eq!(profile.zero_intervals.len(), 1);
        let (zlo, zhi) = profile.zero_intervals[0];
        assert!((zlo - 0.5).abs() < 1e-6, "zero interval starts at {zlo}");
        assert!(zhi > 0.99, "zero interval ends at {zhi}");
    }

    #[test]
    fn geometric_drift_at_atoms() {
        let g = Measure::geometric_atomic(0.5).unwrap();
        let d = Drift::new(&g, 0.6).unwrap();
        for l in [1u32, 2, 3, 5] {
            let a = 1.0 - (2.0f64).powi(-(l as i32));
            // value p² - (1-r), left limit r, right limit p/(2-p) - (1-r)
            assert!((d.rho(a).unwrap() - (-0.15)).abs() < 1e-10, "l = {l}");
            assert!((d.rho_plus(a).unwrap() - 0.6).abs() < 1e-10, "l = {l}");
            assert!(
                (d.rho_right_limit(a).unwrap() - (-1.0 / 15.0)).abs() < 1e-10,
                "l = {l}"
            );
        }
    }

    #[test]
    fn swept_right_limit_agrees_with_exact() {
        let g = Measure::geometric_atomic(0.5).unwrap();
        let d = Drift::new(&g, 0.6).unwrap();
        for &m in &[0.5, 0.75, 0.3] {
            let exact = d.rho_right_limit(m).unwrap();
            let swept = d.rho_right_limit_swept(m).unwrap();
            assert!((exact - swept).abs() <= 1e-8, "m = {m}: {exact} vs {swept}");
        }
        let e = Measure::exponential(1.0).unwrap();
        let d = Drift::new(&e, 0.5).unwrap();
        let exact = d.rho_right_limit(1.0).unwrap();
        let swept = d.rho_right_limit_swept(1.0).unwrap();
        assert!((exact - swept).abs() <= 1e-8);
    }

    #[test]
    fn geometric_atoms_are_jump_roots() {
        let g = Measure::geometric_atomic(0.5).unwrap();
        let d = Drift::new(&g, 0.6).unwrap();
        let profile = d.sign_analysis(128).unwrap();
        for l in [0u32, 1, 2, 3, 4] {
            let a = 1.0 - (2.0f64).powi(-(l as i32));
            let found = profile
                .roots
                .iter()
                .find(|r| (r.m - a).abs() <= 1e-9)
                .unwrap_or_else(|| panic!("atom {a} (l = {l}) missing from roots"));
            assert_eq!(found.kind, RootKind::Jump, "l = {l}");
        }
    }

    #[test]
    fn drift_tends_to_r_far_left() {
        let n = Measure::normal(0.0, 1.0).unwrap();
        let d = Drift::new(&n, 0.3).unwrap();
        assert!((d.rho(-8.0).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn normal_sign_analysis_finds_single_crossing() {
        let n = Measure::normal(0.0, 1.0).unwrap();
        let d = Drift::new(&n, 0.5).unwrap();
        let profile = d.sign_analysis(256).unwrap();
        let crossings: Vec<_> =
            profile.roots.iter().filter(|r| r.kind == RootKind::Crossing).collect();
        assert_eq!(crossings.len(), 1, "roots: {:?}", profile.roots);
        assert!(crossings[0].m.abs() < 1e-6, "root at {}", crossings[0].m);
    }

    #[test]
    fn monotone_ratio_verdicts() {
        assert_eq!(
            is_monotone_rho1(&Measure::exponential(1.0).unwrap(), 128).unwrap(),
            Monotonicity::StrictlyDecreasing
        );
        assert_eq!(
            is_monotone_rho1(&Measure::normal(0.0, 1.0).unwrap(), 128).unwrap(),
            Monotonicity::StrictlyDecreasing
        );
        match is_monotone_rho1(&Measure::uniform(0.0, 1.0).unwrap(), 128).unwrap() {
            Monotonicity::NotMonotone { witness: (a, b) } => {
                assert!(a >= 0.5 && b <= 1.0, "witness ({a}, {b}) outside the plateau");
            }
            other => panic!("expected plateau violation, got {other:?}"),
        }
        assert!(matches!(
            is_monotone_rho1(&Measure::geometric_atomic(0.5).unwrap(), 128).unwrap(),
            Monotonicity::NotMonotone { .. }
        ));
    }

    #[test]
    fn monotone_verdict_is_affine_invariant() {
        let a = is_monotone_rho1(&Measure::uniform(0.0, 1.0).unwrap(), 128).unwrap();
        let b = is_monotone_rho1(&Measure::uniform(5.0, 7.0).unwrap(), 128).unwrap();
        assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b));
        let c = is_monotone_rho1(&Measure::normal(0.0, 1.0).unwrap(), 128).unwrap();
        let d = is_monotone_rho1(&Measure::normal(10.0, 3.0).unwrap(), 128).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn convexity_verdicts() {
        assert_eq!(
            convexity_criterion(&Measure::exponential(1.0).unwrap(), 128).unwrap(),
            Convexity::Satisfied
        );
        for alpha in [1.0, 1.5, 2.0] {
            assert_eq!(
                convexity_criterion(&Measure::compressed_exp(alpha).unwrap(), 128).unwrap(),
                Convexity::Satisfied,
                "alpha = {alpha}"
            );
        }
        assert!(matches!(
            convexity_criterion(&Measure::compressed_exp(2.5).unwrap(), 128).unwrap(),
            Convexity::Violated { .. }
        ));
        assert!(matches!(
            convexity_criterion(&Measure::uniform(0.0, 1.0).unwrap(), 128).unwrap(),
            Convexity::Violated { .. }
        ));
        // the normal fails the third-derivative half of the criterion
        match convexity_criterion(&Measure::normal(0.0, 1.0).unwrap(), 128).unwrap() {
            Convexity::Violated { second, third, .. } => {
                assert!(second >= 0.0, "g'' should stay nonnegative, got {second}");
                assert!(third > 0.0, "violation should be in g''', got {third}");
            }
            other => panic!("expected violation, got {other:?}"),
        }
        assert!(matches!(
            convexity_criterion(&Measure::geometric_atomic(0.5).unwrap(), 128).unwrap(),
            Convexity::Inapplicable { .. }
        ));
    }

    #[test]
    fn ff_probe_exponential_values() {
        let e = Measure::exponential(1.0).unwrap();
        let probes = ff_ratio_probe(&e, &[5.0]).unwrap();
        assert!((probes[0].ratio - 1.0 / 11.0).abs() < 1e-12);
        assert!(!probes[0].log_flagged);
        // deep probe: tail² = e^{-1000} underflows, log path takes over
        let probes = ff_ratio_probe(&e, &[500.0]).unwrap();
        assert!(probes[0].log_flagged);
        assert!((probes[0].ratio - 1.0 / 1001.0).abs() < 1e-9);
    }

    #[test]
    fn ff_probe_rejects_bounded_support() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        assert!(ff_ratio_probe(&u, &[0.5]).is_err());
    }

    #[test]
    fn drift_requires_valid_ratio() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        assert!(Drift::new(&u, 0.0).is_err());
        assert!(Drift::new(&u, 1.0).is_err());
        assert!(Drift::new(&u, 0.5).is_ok());
    }

    #[test]
    fn drift_errors_where_pair_event_is_empty() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let d = Drift::new(&u, 0.5).unwrap();
        assert!(d.rho(1.0).is_err());
        assert!(d.rho(1.5).is_err());
    }
}
