//! Shared numerical kernels: adaptive quadrature, bisection, bracket growth,
//! and one-sided limit estimation by offset sweep.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature with Richardson correction.
///
/// `tol` is an absolute error target for the whole interval. Fails with the
/// achieved bound when the refinement budget runs out before reaching it.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Numeric(format!("bad quadrature interval [{a}, {b}]")));
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    let mut achieved = 0.0;
    let value = recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut achieved);
    if achieved > tol {
        Err(Error::Quadrature { requested: tol, achieved })
    } else {
        Ok(value)
    }
}

/// Integrate over `[a, b]` split at interior breakpoints (kinks, atoms of the
/// integrand's ingredients). Breakpoints outside the interval are ignored.
pub fn simpson_segments<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if a >= b {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let per = tol / (cuts.len() - 1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(f, w[0], w[1], per)?;
    }
    Ok(total)
}

#[inline]
fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    achieved: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (fl, fr) = (f(lm), f(rm));
    let left = simpson(fa, fl, fm, m - a);
    let right = simpson(fm, fr, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth == 0 || m <= a || b <= m {
        if delta.abs() > 15.0 * tol {
            *achieved += delta.abs();
        } else {
            *achieved += delta.abs() / 15.0;
        }
        return left + right + delta / 15.0;
    }
    let half = tol / 2.0;
    recurse(f, a, m, fa, fl, fm, left, half, depth - 1, achieved)
        + recurse(f, m, b, fm, fr, fb, right, half, depth - 1, achieved)
}

/// Bisection on a boolean predicate. Requires `pred(lo) != pred(hi)`; shrinks
/// the bracket until `hi - lo <= width` and returns it with the `pred(lo)`
/// side first. Works across jump discontinuities since only the predicate's
/// value is consulted.
pub fn bisect<P: Fn(f64) -> bool>(pred: P, lo: f64, hi: f64, width: f64) -> Result<(f64, f64)> {
    let side = pred(lo);
    if pred(hi) == side {
        return Err(Error::Numeric(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a change"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at f64 resolution
        }
        if pred(mid) == side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Grow `hi` geometrically away from `anchor` until `stop(hi)` holds at
/// `persist` consecutive probes; returns the first of those probes.
pub fn expand_until<P: Fn(f64) -> bool>(
    anchor: f64,
    start: f64,
    stop: P,
    persist: u32,
    max_doublings: u32,
) -> Result<f64> {
    let mut step = (start - anchor).abs().max(1e-6);
    let mut hits = 0u32;
    let mut first_hit = f64::NAN;
    for _ in 0..max_doublings {
        let probe = anchor + step;
        if stop(probe) {
            if hits == 0 {
                first_hit = probe;
            }
            hits += 1;
            if hits >= persist {
                return Ok(first_hit);
            }
        } else {
            hits = 0;
        }
        step *= 2.0;
    }
    Err(Error::Numeric(format!(
        "bracket expansion from {start} exhausted {max_doublings} doublings"
    )))
}

/// One-sided limit from the right by a decreasing offset sweep:
/// evaluates `f(x + scale·2^-j)` for j = 10..=40 and accepts once three
/// consecutive iterates agree within `1e-8`. Errors with the last two
/// iterates when the sequence never stabilizes.
pub fn right_limit_sweep<F: Fn(f64) -> Result<f64>>(f: F, x: f64, scale: f64) -> Result<f64> {
    let scale = scale.abs().max(f64::MIN_POSITIVE);
    let mut window: Vec<f64> = Vec::with_capacity(3);
    let mut last_two = (f64::NAN, f64::NAN);
    for j in 10..=40u32 {
        let offset = scale * (2.0f64).powi(-(j as i32));
        let probe = x + offset;
        if probe <= x {
            break; // offset below ulp(x)
        }
        let v = f(probe)?;
        last_two = (last_two.1, v);
        window.push(v);
        if window.len() > 3 {
            window.remove(0);
        }
        if window.len() == 3 {
            let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= 1e-8 {
                return Ok(window[2]);
            }
        }
    }
    Err(Error::NonStabilizing { prev: last_two.0, last: last_two.1 })
}
