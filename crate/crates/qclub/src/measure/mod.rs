//! Opinion distributions: tails, quantiles, atoms, sampling, and the
//! pair-sum tail `P(X + Y ≥ 2m)` needed by the drift analysis.
//!
//! A [`Measure`] is a Borel probability measure on ℝ with finite essential
//! infimum. Tail conventions: `tail(x, Closed) = P(X ≥ x)` and
//! `tail(x, Open) = P(X > x)`; the two differ exactly by `atom_mass(x)`.

mod conditional;
mod pair_sum;
mod tabulated;

pub use conditional::{conditional_pair, ConditionalSampler, PairStrategy};
pub use pair_sum::{SumMethod, SumTail};
pub use tabulated::TabulatedTail;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Whether a tail or conditioning event includes its boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Closed,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub measure: Measure,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Normal { mean: f64, stddev: f64 },
    CompressedExp { alpha: f64 },
    GeometricAtomic { p: f64 },
    Tabulated(TabulatedTail),
    AtomList(Vec<Atom>),
    Mixture(Vec<Component>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    family: Family,
    mu_min: f64,
    mu_max: f64,
    // AtomList: prefix[i] = mass of atoms 0..=i, suffix[i] = mass of atoms i..,
    // both by direct accumulation so adjacent differences are exact.
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

/// Truncate the geometric atom chain once the remaining mass drops below this;
/// the remainder is folded into one final atom so totals stay exactly 1.
const GEOMETRIC_RESIDUAL: f64 = 1e-13;

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Measure(msg()))
    }
}

impl Measure {
    pub fn uniform(a: f64, b: f64) -> Result<Measure> {
        require(a.is_finite() && b.is_finite() && a < b, || {
            format!("uniform needs finite a < b, got [{a}, {b}]")
        })?;
        Ok(Measure::plain(Family::Uniform { a, b }, a, b))
    }

    pub fn exponential(rate: f64) -> Result<Measure> {
        require(rate.is_finite() && rate > 0.0, || {
            format!("exponential needs rate > 0, got {rate}")
        })?;
        Ok(Measure::plain(Family::Exponential { rate }, 0.0, f64::INFINITY))
    }

    pub fn normal(mean: f64, stddev: f64) -> Result<Measure> {
        require(mean.is_finite() && stddev.is_finite() && stddev > 0.0, || {
            format!("normal needs finite mean and stddev > 0, got ({mean}, {stddev})")
        })?;
        Ok(Measure::plain(
            Family::Normal { mean, stddev },
            f64::NEG_INFINITY,
            f64::INFINITY,
        ))
    }

    pub fn compressed_exp(alpha: f64) -> Result<Measure> {
        require(alpha.is_finite() && alpha >= 1.0, || {
            format!("compressed exponential needs alpha >= 1, got {alpha}")
        })?;
        Ok(Measure::plain(Family::CompressedExp { alpha }, 0.0, f64::INFINITY))
    }

    /// Atoms at `1 - 2^-l` with mass `(1-p) p^l`, `l = 0, 1, 2, …`.
    ///
    /// For p beyond ~0.6 the atoms past index 52 collapse onto adjacent
    /// representable values near 1, so tails within ~p^53 of the support top
    /// carry that much rounding; all closed-form identities below are exact
    /// in the atom index.
    pub fn geometric_atomic(p: f64) -> Result<Measure> {
        require(p > 0.0 && p < 1.0, || format!("geometric needs p in (0,1), got {p}"))?;
        Ok(Measure::plain(Family::GeometricAtomic { p }, 0.0, 1.0))
    }

    /// Tabulated tail: pairs `(x, P(X ≥ x))` with strictly increasing x,
    /// tail starting at 1 and strictly decreasing to exactly 0. Interpolation
    /// is log-linear in the tail except on the final segment (linear, since
    /// log 0 is unavailable).
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Measure> {
        let t = TabulatedTail::new(points)?;
        let (lo, hi) = (t.x_min(), t.x_max());
        Ok(Measure::plain(Family::Tabulated(t), lo, hi))
    }

    pub fn tabulated_from_csv(path: &std::path::Path) -> Result<Measure> {
        let t = TabulatedTail::from_csv(path)?;
        let (lo, hi) = (t.x_min(), t.x_max());
        Ok(Measure::plain(Family::Tabulated(t), lo, hi))
    }

    pub fn atom_list(atoms: Vec<(f64, f64)>) -> Result<Measure> {
        require(!atoms.is_empty(), || "atom list is empty".into())?;
        for w in atoms.windows(2) {
            require(w[0].0 < w[1].0, || {
                format!("atom positions must be strictly increasing, got {} then {}", w[0].0, w[1].0)
            })?;
        }
        let mut total = 0.0;
        for &(x, m) in &atoms {
            require(x.is_finite() && m > 0.0 && m.is_finite(), || {
                format!("bad atom ({x}, {m})")
            })?;
            total += m;
        }
        require((total - 1.0).abs() <= 1e-12, || {
            format!("atom masses sum to {total}, expected 1 within 1e-12")
        })?;
        let atoms: Vec<Atom> =
            atoms.into_iter().map(|(x, m)| Atom { x, mass: m / total }).collect();
        let mut prefix = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.mass;
            prefix.push(acc);
        }
        let mut suffix = vec![0.0; atoms.len()];
        let mut acc = 0.0;
        for (i, a) in atoms.iter().enumerate().rev() {
            acc += a.mass;
            suffix[i] = acc;
        }
        let (lo, hi) = (atoms[0].x, atoms[atoms.len() - 1].x);
        Ok(Measure {
            family: Family::AtomList(atoms),
            mu_min: lo,
            mu_max: hi,
            prefix,
            suffix,
        })
    }

    pub fn mixture(components: Vec<(f64, Measure)>) -> Result<Measure> {
        require(!components.is_empty(), || "mixture has no components".into())?;
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        for (w, _) in &components {
            require(*w > 0.0 && w.is_finite(), || format!("bad mixture weight {w}"))?;
        }
        require((total - 1.0).abs() <= 1e-12, || {
            format!("mixture weights sum to {total}, expected 1 within 1e-12")
        })?;
        let comps: Vec<Component> = components
            .into_iter()
            .map(|(w, m)| Component { weight: w / total, measure: m })
            .collect();
        let lo = comps.iter().map(|c| c.measure.mu_min).fold(f64::INFINITY, f64::min);
        let hi = comps.iter().map(|c| c.measure.mu_max).fold(f64::NEG_INFINITY, f64::max);
        Ok(Measure::plain(Family::Mixture(comps), lo, hi))
    }

    fn plain(family: Family, mu_min: f64, mu_max: f64) -> Measure {
        Measure { family, mu_min, mu_max, prefix: Vec::new(), suffix: Vec::new() }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Essential infimum of the support. Finite for every family here except
    /// the normal, whose essinf is -∞.
    pub fn mu_min(&self) -> f64 {
        self.mu_min
    }

    /// Essential supremum; `f64::INFINITY` for unbounded families.
    pub fn mu_max(&self) -> f64 {
        self.mu_max
    }

    pub fn has_atoms(&self) -> bool {
        match &self.family {
            Family::GeometricAtomic { .. } | Family::AtomList(_) => true,
            Family::Mixture(cs) => cs.iter().any(|c| c.measure.has_atoms()),
            _ => false,
        }
    }

    pub fn tail(&self, x: f64, bound: Bound) -> f64 {
        match &self.family {
            Family::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Family::Normal { mean, stddev } => normal_upper((x - mean) / stddev),
            Family::CompressedExp { alpha } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x.powf(*alpha)).exp()
                }
            }
            Family::GeometricAtomic { p } => match geometric_tail_index(x, bound) {
                None => 1.0,
                Some(u32::MAX) => 0.0, // at or beyond the accumulation point
                Some(l) => pow_u32(*p, l),
            },
            Family::Tabulated(t) => t.tail(x),
            Family::AtomList(atoms) => {
                let idx = match bound {
                    Bound::Closed => atoms.partition_point(|a| a.x < x),
                    Bound::Open => atoms.partition_point(|a| a.x <= x),
                };
                if idx == atoms.len() {
                    0.0
                } else {
                    self.suffix[idx]
                }
            }
            Family::Mixture(cs) => {
                cs.iter().map(|c| c.weight * c.measure.tail(x, bound)).sum()
            }
        }
    }

    /// `ln tail(x, bound)`, computed in log space where the tail underflows
    /// (deep normal and stretched-tail probes). Returns -∞ for zero tails.
    pub fn log_tail(&self, x: f64, bound: Bound) -> f64 {
        match &self.family {
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -rate * x
                }
            }
            Family::Normal { mean, stddev } => normal_log_upper((x - mean) / stddev),
            Family::CompressedExp { alpha } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -x.powf(*alpha)
                }
            }
            Family::GeometricAtomic { p } => match geometric_tail_index(x, bound) {
                None => 0.0,
                Some(u32::MAX) => f64::NEG_INFINITY,
                Some(l) => l as f64 * p.ln(),
            },
            Family::Tabulated(t) => t.log_tail(x),
            _ => self.tail(x, bound).ln(),
        }
    }

    /// P(X ≤ x).
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.family {
            Family::AtomList(atoms) => {
                let idx = atoms.partition_point(|a| a.x <= x);
                if idx == 0 {
                    0.0
                } else {
                    self.prefix[idx - 1]
                }
            }
            _ => 1.0 - self.tail(x, Bound::Open),
        }
    }

    pub fn atom_mass(&self, x: f64) -> f64 {
        match &self.family {
            Family::GeometricAtomic { p } => match geometric_atom_index(x) {
                Some(l) => (1.0 - p) * pow_u32(*p, l),
                None => 0.0,
            },
            Family::AtomList(atoms) => atoms
                .binary_search_by(|a| a.x.partial_cmp(&x).unwrap())
                .map(|i| atoms[i].mass)
                .unwrap_or(0.0),
            Family::Mixture(cs) => {
                cs.iter().map(|c| c.weight * c.measure.atom_mass(x)).sum()
            }
            _ => 0.0,
        }
    }

    /// Lower quantile `inf { x : P(X ≤ x) ≥ u }` for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        Ok(match &self.family {
            Family::Uniform { a, b } => a + u * (b - a),
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
            Family::Normal { mean, stddev } => mean + stddev * standard_normal_quantile(u),
            Family::CompressedExp { alpha } => (-(-u).ln_1p()).powf(1.0 / alpha),
            Family::GeometricAtomic { p } => {
                // smallest l with 1 - p^(l+1) >= u, adjusted to exact powers
                let mut l = ((-u).ln_1p() / p.ln() - 1.0).ceil().max(0.0) as u32;
                while l > 0 && 1.0 - pow_u32(*p, l) >= u {
                    l -= 1;
                }
                while 1.0 - pow_u32(*p, l + 1) < u {
                    l += 1;
                }
                geometric_atom(l)
            }
            Family::Tabulated(t) => t.quantile(u),
            Family::AtomList(atoms) => {
                let idx = self.prefix.partition_point(|&c| c < u);
                atoms[idx.min(atoms.len() - 1)].x
            }
            Family::Mixture(_) => self.quantile_by_bisection(u)?,
        })
    }

    fn quantile_by_bisection(&self, u: f64) -> Result<f64> {
        let mut lo = self.mu_min;
        let mut hi = self.mu_max;
        if !lo.is_finite() {
            lo = -1.0;
            while self.cdf(lo) >= u {
                lo *= 2.0;
                if lo < -1e300 {
                    return Err(Error::Numeric(format!("quantile({u}) bracket ran away low")));
                }
            }
        }
        if !hi.is_finite() {
            hi = 1.0;
            while self.cdf(hi) < u {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::Numeric(format!("quantile({u}) bracket ran away high")));
                }
            }
        }
        let width = 1e-13 * (hi - lo).abs().max(1.0);
        let (_, b) = crate::numeric::bisect(|x| self.cdf(x) < u, lo, hi, width)?;
        Ok(b)
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match &self.family {
            Family::Mixture(cs) => {
                let mut u = rng.open01();
                for c in cs {
                    if u < c.weight {
                        return c.measure.sample(rng);
                    }
                    u -= c.weight;
                }
                cs[cs.len() - 1].measure.sample(rng)
            }
            _ => self
                .quantile(rng.open01())
                .expect("open01 draw lies strictly inside (0, 1)"),
        }
    }

    /// Lebesgue density at `x`. Only defined for atom-free measures.
    pub fn density(&self, x: f64) -> Result<f64> {
        match &self.family {
            Family::Uniform { a, b } => {
                Ok(if x >= *a && x <= *b { 1.0 / (b - a) } else { 0.0 })
            }
            Family::Exponential { rate } => {
                Ok(if x >= 0.0 { rate * (-rate * x).exp() } else { 0.0 })
            }
            Family::Normal { mean, stddev } => {
                let z = (x - mean) / stddev;
                Ok((-0.5 * z * z).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt()))
            }
            Family::CompressedExp { alpha } => Ok(if x > 0.0 {
                alpha * x.powf(alpha - 1.0) * (-x.powf(*alpha)).exp()
            } else {
                0.0
            }),
            Family::Tabulated(t) => Ok(t.density(x)),
            Family::Mixture(cs) => {
                let mut d = 0.0;
                for c in cs {
                    d += c.weight * c.measure.density(x)?;
                }
                Ok(d)
            }
            Family::GeometricAtomic { .. } | Family::AtomList(_) => Err(Error::Domain(
                "density undefined for a measure with atoms".into(),
            )),
        }
    }

    /// `P(X + Y ≥ 2m)` (closed) and `P(X + Y > 2m)` (open) for independent
    /// draws X, Y from this measure.
    pub fn sum_tail(&self, m: f64) -> Result<SumTail> {
        pair_sum::sum_tail(self, m)
    }

    /// Decomposition into weighted atoms and continuous parts, recursing
    /// through mixtures. Geometric atom chains are truncated with the
    /// residual mass folded into a final atom (total stays exactly 1).
    pub(crate) fn parts(&self) -> Parts<'_> {
        let mut parts = Parts { atoms: Vec::new(), cont: Vec::new() };
        self.collect_parts(1.0, &mut parts);
        parts
    }

    fn collect_parts<'a>(&'a self, weight: f64, out: &mut Parts<'a>) {
        match &self.family {
            Family::Uniform { a, b } => out.cont.push((weight, ContPart::Uniform { a: *a, b: *b })),
            Family::Exponential { rate } => {
                out.cont.push((weight, ContPart::Exponential { rate: *rate }))
            }
            Family::Normal { mean, stddev } => {
                out.cont.push((weight, ContPart::Normal { mean: *mean, stddev: *stddev }))
            }
            Family::CompressedExp { alpha } => {
                out.cont.push((weight, ContPart::CompressedExp { alpha: *alpha }))
            }
            Family::GeometricAtomic { p } => {
                let cut = (GEOMETRIC_RESIDUAL.ln() / p.ln()).ceil() as u32;
                // atoms past l = 53 round onto 1.0 in f64, which flips their
                // partner tails to the wrong side of the inner atoms; stop
                // while positions are still exact and lump the rest at a_53,
                // the largest representable point below the accumulation point
                let cut = cut.clamp(1, 53);
                for l in 0..cut {
                    out.atoms.push(Atom {
                        x: geometric_atom(l),
                        mass: weight * (1.0 - p) * pow_u32(*p, l),
                    });
                }
                out.atoms.push(Atom { x: geometric_atom(cut), mass: weight * pow_u32(*p, cut) });
            }
            Family::Tabulated(t) => out.cont.push((weight, ContPart::Tabulated(t))),
            Family::AtomList(atoms) => {
                out.atoms.extend(atoms.iter().map(|a| Atom { x: a.x, mass: weight * a.mass }))
            }
            Family::Mixture(cs) => {
                for c in cs {
                    c.measure.collect_parts(weight * c.weight, out);
                }
            }
        }
    }

    /// `(quantile(eps), quantile(1 - eps))`: the window where tails are
    /// resolvable in f64, used to place probe grids on unbounded supports.
    pub fn quantile_window(&self, eps: f64) -> Result<(f64, f64)> {
        Ok((self.quantile(eps)?, self.quantile(1.0 - eps)?))
    }
}

pub(crate) struct Parts<'a> {
    pub atoms: Vec<Atom>,
    pub cont: Vec<(f64, ContPart<'a>)>,
}

/// A weight-1 continuous ingredient of a measure.
#[derive(Debug, Clone, Copy)]
pub(crate) enum ContPart<'a> {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Normal { mean: f64, stddev: f64 },
    CompressedExp { alpha: f64 },
    Tabulated(&'a TabulatedTail),
}

impl ContPart<'_> {
    pub fn lo(&self) -> f64 {
        match self {
            ContPart::Uniform { a, .. } => *a,
            ContPart::Exponential { .. } | ContPart::CompressedExp { .. } => 0.0,
            ContPart::Normal { .. } => f64::NEG_INFINITY,
            ContPart::Tabulated(t) => t.x_min(),
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            ContPart::Uniform { b, .. } => *b,
            ContPart::Exponential { .. } | ContPart::CompressedExp { .. } | ContPart::Normal { .. } => {
                f64::INFINITY
            }
            ContPart::Tabulated(t) => t.x_max(),
        }
    }

    pub fn tail(&self, x: f64) -> f64 {
        match self {
            ContPart::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            ContPart::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            ContPart::Normal { mean, stddev } => normal_upper((x - mean) / stddev),
            ContPart::CompressedExp { alpha } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x.powf(*alpha)).exp()
                }
            }
            ContPart::Tabulated(t) => t.tail(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            ContPart::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            ContPart::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            ContPart::Normal { mean, stddev } => {
                let z = (x - mean) / stddev;
                (-0.5 * z * z).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt())
            }
            ContPart::CompressedExp { alpha } => {
                if x > 0.0 {
                    alpha * x.powf(alpha - 1.0) * (-x.powf(*alpha)).exp()
                } else {
                    0.0
                }
            }
            ContPart::Tabulated(t) => t.density(x),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            ContPart::Uniform { a, b } => a + u * (b - a),
            ContPart::Exponential { rate } => -(-u).ln_1p() / rate,
            ContPart::Normal { mean, stddev } => mean + stddev * standard_normal_quantile(u),
            ContPart::CompressedExp { alpha } => (-(-u).ln_1p()).powf(1.0 / alpha),
            ContPart::Tabulated(t) => t.quantile(u),
        }
    }

    /// Interior kinks of the density (quadrature must split here).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ContPart::Tabulated(t) => t.grid().to_vec(),
            _ => Vec::new(),
        }
    }
}

/// `p^l` by repeated squaring on the exact integer exponent.
#[inline]
pub(crate) fn pow_u32(p: f64, l: u32) -> f64 {
    p.powi(l as i32)
}

/// The l-th geometric atom `1 - 2^-l` (exact in f64 for l ≤ 53).
#[inline]
pub(crate) fn geometric_atom(l: u32) -> f64 {
    1.0 - (2.0f64).powi(-(l as i32))
}

/// Index of the first atom at-or-above `x` (Closed) / strictly above (Open);
/// `None` when every atom qualifies (tail 1).
fn geometric_tail_index(x: f64, bound: Bound) -> Option<u32> {
    if x <= 0.0 {
        return match bound {
            Bound::Closed => None,
            Bound::Open => {
                if x == 0.0 {
                    Some(1)
                } else {
                    None
                }
            }
        };
    }
    if x >= 1.0 {
        return Some(u32::MAX); // beyond every atom; p^MAX underflows to 0
    }
    let mut l = (-(1.0 - x).log2()).ceil().max(0.0) as u32;
    while l > 0 && geometric_atom(l - 1) >= x {
        l -= 1;
    }
    while geometric_atom(l) < x {
        l += 1;
    }
    match bound {
        Bound::Closed => Some(l),
        Bound::Open => {
            if geometric_atom(l) == x {
                Some(l + 1)
            } else {
                Some(l)
            }
        }
    }
}

fn geometric_atom_index(x: f64) -> Option<u32> {
    if !(0.0..1.0).contains(&x) {
        return None;
    }
    let l = (-(1.0 - x).log2()).round().max(0.0) as u32;
    for cand in l.saturating_sub(1)..=l + 1 {
        if geometric_atom(cand) == x {
            return Some(cand);
        }
    }
    None
}

/// Upper tail of the standard normal, `P(Z ≥ z)`.
pub(crate) fn normal_upper(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

/// `ln P(Z ≥ z)` with an asymptotic branch where erfc underflows.
pub(crate) fn normal_log_upper(z: f64) -> f64 {
    if z > 30.0 {
        // ln(φ(z)/z) + ln(1 - 1/z² + 3/z⁴), relative error < 1e-8 for z ≥ 30
        let z2 = z * z;
        -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    } else if z < -30.0 {
        let small = normal_log_upper(-z).exp();
        (-small).ln_1p()
    } else {
        normal_upper(z).ln()
    }
}

/// Standard normal quantile via the complementary error function, mirrored
/// for u > 1/2 to keep full precision in both tails.
pub(crate) fn standard_normal_quantile(u: f64) -> f64 {
    if u > 0.5 {
        -standard_normal_quantile(1.0 - u)
    } else {
        -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn uniform_tail_values() {
        let m = Measure::uniform(0.0, 1.0).unwrap();
        assert_eq!(m.tail(0.3, Bound::Closed), 0.7);
        assert_eq!(m.tail(0.3, Bound::Open), 0.7);
        assert_eq!(m.tail(-1.0, Bound::Closed), 1.0);
        assert_eq!(m.tail(2.0, Bound::Closed), 0.0);
        assert_eq!(m.cdf(0.25), 0.25);
    }

    #[test]
    fn exponential_quantile_is_log_two_at_half() {
        let m = Measure::exponential(1.0).unwrap();
        let q = m.quantile(0.5).unwrap();
        assert!((q - std::f64::consts::LN_2).abs() < 1e-15, "got {q}");
    }

    #[test]
    fn geometric_tails_at_an_atom() {
        let m = Measure::geometric_atomic(0.5).unwrap();
        // 0.75 is the atom at index 2
        assert_eq!(m.tail(0.75, Bound::Closed), 0.25);
        assert_eq!(m.tail(0.75, Bound::Open), 0.125);
        assert_eq!(m.atom_mass(0.75), 0.125);
        // between atoms the two tails agree
        assert_eq!(m.tail(0.6, Bound::Closed), m.tail(0.6, Bound::Open));
        assert_eq!(m.tail(0.6, Bound::Closed), 0.25);
    }

    #[test]
    fn geometric_quantile_steps() {
        let m = Measure::geometric_atomic(0.5).unwrap();
        assert_eq!(m.quantile(0.6).unwrap(), 0.5);
        assert_eq!(m.quantile(0.5).unwrap(), 0.0);
        assert_eq!(m.quantile(0.51).unwrap(), 0.5);
        assert_eq!(m.quantile(0.75).unwrap(), 0.5);
        assert_eq!(m.quantile(0.76).unwrap(), 0.75);
    }

    #[test]
    fn geometric_closed_minus_open_is_atom_mass() {
        let m = Measure::geometric_atomic(0.7).unwrap();
        for l in 0..40u32 {
            let a = geometric_atom(l);
            let diff = m.tail(a, Bound::Closed) - m.tail(a, Bound::Open);
            let mass = m.atom_mass(a);
            assert!(
                (diff - mass).abs() <= 1e-15 * mass.max(1e-300),
                "l = {l}: diff {diff} vs mass {mass}"
            );
        }
    }

    #[test]
    fn normal_tail_matches_reference() {
        let m = Measure::normal(0.0, 1.0).unwrap();
        // Φ̄(1.959963984540054) = 0.025; the erfc behind this is good to
        // about 1e-12 absolute, not full f64 precision
        assert!((m.tail(1.959963984540054, Bound::Closed) - 0.025).abs() < 5e-12);
        assert!((m.quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-9);
        // z-quantile of 0.75
        assert!((m.quantile(0.75).unwrap() - 0.67448975019608174).abs() < 1e-9);
    }

    #[test]
    fn normal_log_tail_deep() {
        let m = Measure::normal(0.0, 1.0).unwrap();
        // moderate: log path agrees with direct
        let d = (m.log_tail(3.0, Bound::Open) - m.tail(3.0, Bound::Open).ln()).abs();
        assert!(d < 1e-12);
        // deep: Φ̄(40): ln = -0.5·1600 - ln(40) - 0.5 ln(2π) + ln(1 - 1/1600 + ...)
        let lt = m.log_tail(40.0, Bound::Open);
        let expect = -800.0 - (40.0f64).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            + (1.0f64 - 1.0 / 1600.0 + 3.0 / 1600.0f64.powi(2)).ln();
        assert!((lt - expect).abs() < 1e-9, "lt = {lt}, expect = {expect}");
        // far left: essentially ln(1) from below
        assert!(m.log_tail(-40.0, Bound::Open).abs() < 1e-300);
    }

    #[test]
    fn compressed_exp_matches_exponential_at_alpha_one() {
        let c = Measure::compressed_exp(1.0).unwrap();
        let e = Measure::exponential(1.0).unwrap();
        for x in [0.1, 0.5, 1.0, 3.0, 10.0] {
            assert!((c.tail(x, Bound::Closed) - e.tail(x, Bound::Closed)).abs() < 1e-15);
        }
        let q = c.quantile(0.5).unwrap();
        assert!((q - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn atom_list_tails_and_quantile() {
        let m = Measure::atom_list(vec![(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)]).unwrap();
        assert_eq!(m.tail(1.0, Bound::Closed), 0.75);
        assert_eq!(m.tail(1.0, Bound::Open), 0.25);
        assert_eq!(m.atom_mass(1.0), 0.5);
        assert_eq!(m.cdf(1.0), 0.75);
        assert_eq!(m.quantile(0.25).unwrap(), 0.0);
        assert_eq!(m.quantile(0.26).unwrap(), 1.0);
        assert_eq!(m.quantile(0.75).unwrap(), 1.0);
        assert_eq!(m.quantile(0.76).unwrap(), 2.0);
    }

    #[test]
    fn mixture_tail_is_weighted_sum() {
        let m = Measure::mixture(vec![
            (0.5, Measure::uniform(0.0, 1.0).unwrap()),
            (0.5, Measure::exponential(1.0).unwrap()),
        ])
        .unwrap();
        let x = 0.4;
        let expect = 0.5 * 0.6 + 0.5 * (-0.4f64).exp();
        assert!((m.tail(x, Bound::Closed) - expect).abs() < 1e-15);
        assert_eq!(m.mu_min(), 0.0);
        assert_eq!(m.mu_max(), f64::INFINITY);
    }

    #[test]
    fn mixture_quantile_inverts_cdf() {
        let m = Measure::mixture(vec![
            (0.5, Measure::uniform(0.0, 1.0).unwrap()),
            (0.5, Measure::exponential(2.0).unwrap()),
        ])
        .unwrap();
        for u in [0.1, 0.3, 0.5, 0.9, 0.99] {
            let q = m.quantile(u).unwrap();
            assert!((m.cdf(q) - u).abs() < 1e-9, "u = {u}");
        }
    }

    #[test]
    fn quantile_rejects_boundary_levels() {
        let m = Measure::uniform(0.0, 1.0).unwrap();
        assert!(m.quantile(0.0).is_err());
        assert!(m.quantile(1.0).is_err());
        assert!(m.quantile(-0.5).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(Measure::uniform(1.0, 1.0).is_err());
        assert!(Measure::exponential(0.0).is_err());
        assert!(Measure::normal(0.0, -1.0).is_err());
        assert!(Measure::compressed_exp(0.5).is_err());
        assert!(Measure::geometric_atomic(1.0).is_err());
        assert!(Measure::atom_list(vec![(0.0, 0.5), (1.0, 0.6)]).is_err());
        assert!(Measure::atom_list(vec![(1.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(Measure::mixture(vec![(0.7, Measure::uniform(0.0, 1.0).unwrap())]).is_err());
    }

    #[test]
    fn parts_masses_total_one() {
        for m in [
            Measure::geometric_atomic(0.5).unwrap(),
            Measure::geometric_atomic(0.9).unwrap(),
            Measure::mixture(vec![
                (0.25, Measure::geometric_atomic(0.5).unwrap()),
                (0.75, Measure::uniform(0.0, 1.0).unwrap()),
            ])
            .unwrap(),
        ] {
            let parts = m.parts();
            let atom_mass: f64 = parts.atoms.iter().map(|a| a.mass).sum();
            let cont_mass: f64 = parts.cont.iter().map(|(w, _)| w).sum();
            assert!(
                (atom_mass + cont_mass - 1.0).abs() < 1e-12,
                "total = {}",
                atom_mass + cont_mass
            );
        }
    }

    #[test]
    fn sampling_matches_cdf_by_ks() {
        let families = [
            Measure::uniform(-1.0, 3.0).unwrap(),
            Measure::exponential(0.7).unwrap(),
            Measure::normal(1.0, 2.0).unwrap(),
            Measure::compressed_exp(1.5).unwrap(),
            Measure::tabulated(vec![(0.0, 1.0), (1.0, 0.3), (2.0, 0.05), (3.0, 0.0)]).unwrap(),
            Measure::mixture(vec![
                (0.5, Measure::uniform(0.0, 1.0).unwrap()),
                (0.5, Measure::exponential(1.0).unwrap()),
            ])
            .unwrap(),
        ];
        for (i, m) in families.iter().enumerate() {
            let mut rng = Stream::new(1000 + i as u64, 0);
            let mut xs: Vec<f64> = (0..20_000).map(|_| m.sample(&mut rng)).collect();
            let ks = crate::harness::ks_distance(&mut xs, |x| m.cdf(x));
            assert!(ks <= 0.012, "family {i}: ks = {ks}");
        }
    }

    #[test]
    fn geometric_sampling_matches_atom_masses() {
        let m = Measure::geometric_atomic(0.5).unwrap();
        let mut rng = Stream::new(77, 0);
        let n = 100_000usize;
        let mut counts = [0u64; 6];
        for _ in 0..n {
            let x = m.sample(&mut rng);
            for (l, c) in counts.iter_mut().enumerate() {
                if x == geometric_atom(l as u32) {
                    *c += 1;
                }
            }
        }
        for (l, &c) in counts.iter().enumerate() {
            let expect = 0.5f64.powi(l as i32 + 1);
            let freq = c as f64 / n as f64;
            let se = (expect * (1.0 - expect) / n as f64).sqrt();
            assert!(
                (freq - expect).abs() <= 4.0 * se + 1e-9,
                "atom {l}: freq {freq} vs {expect}"
            );
        }
    }
}
