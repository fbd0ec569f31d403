//! Tail of the sum of two independent draws, `P(X + Y ≥ 2m)` and
//! `P(X + Y > 2m)`. Closed forms where the family admits one; otherwise the
//! measure is split into atoms and continuous parts and the cross terms are
//! integrated, with the region where the partner tail equals 1 handled
//! exactly rather than by quadrature.

use super::{Bound, ContPart, Measure};
use crate::error::{Error, Result};
use crate::numeric::simpson_segments;

const QUAD_TOL: f64 = 1e-10;
/// Mass beyond the quantile clip used for unbounded quadrature windows.
const CLIP_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    ClosedForm,
    Quadrature,
    AtomEnumeration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumTail {
    /// P(X + Y ≥ 2m)
    pub closed: f64,
    /// P(X + Y > 2m)
    pub open: f64,
    pub method: SumMethod,
}

impl SumTail {
    fn closed_form(v: f64) -> SumTail {
        SumTail { closed: v, open: v, method: SumMethod::ClosedForm }
    }
}

pub(crate) fn sum_tail(measure: &Measure, m: f64) -> Result<SumTail> {
    if m.is_nan() {
        return Err(Error::Domain("sum tail at NaN threshold".into()));
    }
    let lo = measure.mu_min();
    let hi = measure.mu_max();
    if m < lo {
        return Ok(SumTail::closed_form(1.0));
    }
    if m == lo && lo.is_finite() {
        let a = measure.atom_mass(lo);
        return Ok(SumTail { closed: 1.0, open: 1.0 - a * a, method: SumMethod::ClosedForm });
    }
    if hi.is_finite() {
        if m > hi {
            return Ok(SumTail { closed: 0.0, open: 0.0, method: SumMethod::ClosedForm });
        }
        if m == hi {
            let a = measure.atom_mass(hi);
            return Ok(SumTail { closed: a * a, open: 0.0, method: SumMethod::ClosedForm });
        }
    }

    use super::Family::*;
    match measure.family() {
        Uniform { a, b } => {
            let s = (m - a) / (b - a);
            let v = if s <= 0.5 { 1.0 - 2.0 * s * s } else { 2.0 * (1.0 - s) * (1.0 - s) };
            Ok(SumTail::closed_form(v))
        }
        Exponential { rate } => {
            let t = rate * m;
            let v = if t <= 0.0 { 1.0 } else { (1.0 + 2.0 * t) * (-2.0 * t).exp() };
            Ok(SumTail::closed_form(v))
        }
        Normal { mean, stddev } => {
            // X + Y ~ N(2 mean, 2 stddev²): P(X+Y ≥ 2m) = Φ̄(√2 (m-mean)/stddev)
            let v = 0.5 * statrs::function::erf::erfc((m - mean) / stddev);
            Ok(SumTail::closed_form(v))
        }
        CompressedExp { alpha } => {
            if m <= 0.0 {
                return Ok(SumTail::closed_form(1.0));
            }
            // P(X ≥ 2m) plus the convolution over x ∈ (0, 2m)
            let a = *alpha;
            let edge = (-(2.0 * m).powf(a)).exp();
            let f = |x: f64| {
                a * x.powf(a - 1.0) * (-(x.powf(a) + (2.0 * m - x).powf(a))).exp()
            };
            let inner = simpson_segments(&f, 0.0, 2.0 * m, &[m], QUAD_TOL)?;
            let v = edge + inner;
            Ok(SumTail { closed: v, open: v, method: SumMethod::Quadrature })
        }
        _ => generic_sum_tail(measure, m),
    }
}

fn generic_sum_tail(measure: &Measure, m: f64) -> Result<SumTail> {
    let parts = measure.parts();
    let mut closed = 0.0;
    let mut open = 0.0;
    for atom in &parts.atoms {
        let partner = 2.0 * m - atom.x;
        closed += atom.mass * measure.tail(partner, Bound::Closed);
        open += atom.mass * measure.tail(partner, Bound::Open);
    }
    if !parts.cont.is_empty() {
        let breaks = partner_breakpoints(measure, m);
        for (w, part) in &parts.cont {
            let term = cont_term(measure, part, m, &breaks)?;
            closed += w * term;
            open += w * term; // continuous parts see no sum atoms
        }
    }
    let method = if parts.cont.is_empty() {
        SumMethod::AtomEnumeration
    } else {
        SumMethod::Quadrature
    };
    Ok(SumTail { closed: closed.min(1.0), open: open.min(1.0), method })
}

/// ∫ tail(2m - x, Closed) dP(x) over one weight-1 continuous part.
fn cont_term(measure: &Measure, part: &ContPart, m: f64, breaks: &[f64]) -> Result<f64> {
    let (quad_lo, quad_hi, exact_from) = cont_window(measure, part, m);
    let mut term = match exact_from {
        Some(s) => part.tail(s),
        None => 0.0,
    };
    if quad_lo < quad_hi {
        let f = |x: f64| part.density(x) * measure.tail(2.0 * m - x, Bound::Closed);
        let mut cuts = part.breakpoints();
        cuts.extend_from_slice(breaks);
        cuts.push(m);
        term += simpson_segments(&f, quad_lo, quad_hi, &cuts, QUAD_TOL)?;
    }
    Ok(term)
}

/// Quadrature window for the cross term of one continuous part: below it the
/// partner tail is 0, above it the partner tail is 1 (that zone's mass is
/// returned exactly via `exact_from`). Unbounded edges are clipped at the
/// part's 1e-15 quantiles, which contributes below every tolerance in use.
pub(crate) fn cont_window(
    measure: &Measure,
    part: &ContPart,
    m: f64,
) -> (f64, f64, Option<f64>) {
    // x ≥ s1 ⇒ 2m - x ≤ mu_min ⇒ partner tail = 1
    let s1 = if measure.mu_min().is_finite() {
        2.0 * m - measure.mu_min()
    } else {
        f64::INFINITY
    };
    if s1 <= part.lo() {
        return (0.0, 0.0, Some(part.lo())); // tail factor 1 on the whole part
    }
    let (quad_hi, exact_from) = if s1 < part.hi() {
        (s1, Some(s1))
    } else {
        let hi = part.hi();
        (if hi.is_finite() { hi } else { part.quantile(1.0 - CLIP_EPS) }, None)
    };
    let mut quad_lo = part.lo();
    if measure.mu_max().is_finite() {
        // below 2m - mu_max the partner tail is identically 0
        quad_lo = quad_lo.max(2.0 * m - measure.mu_max());
    }
    if !quad_lo.is_finite() {
        quad_lo = part.quantile(CLIP_EPS);
    }
    (quad_lo, quad_hi.min(f64::INFINITY), exact_from)
}

/// Points where the partner tail `x ↦ tail(2m - x, ·)` has kinks or jumps.
fn partner_breakpoints(measure: &Measure, m: f64) -> Vec<f64> {
    let parts = measure.parts();
    let mut bs: Vec<f64> = Vec::new();
    for atom in &parts.atoms {
        bs.push(2.0 * m - atom.x);
    }
    for (_, part) in &parts.cont {
        for b in part.breakpoints() {
            bs.push(2.0 * m - b);
        }
        if part.lo().is_finite() {
            bs.push(2.0 * m - part.lo());
        }
        if part.hi().is_finite() {
            bs.push(2.0 * m - part.hi());
        }
    }
    bs
}
