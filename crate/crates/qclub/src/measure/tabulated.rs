use std::path::Path;

use crate::error::{Error, Result};

/// Piecewise tail table: nodes `(x_i, P(X ≥ x_i))` with the tail interpolated
/// log-linearly between nodes. The grid must start at tail 1, decrease
/// strictly, and end at exactly 0; the final segment is interpolated linearly
/// since its right endpoint has no logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTail {
    xs: Vec<f64>,
    ts: Vec<f64>,
    // per-segment decay rate ln(t[i+1]/t[i]) / (x[i+1]-x[i]); last entry unused
    lambdas: Vec<f64>,
}

impl TabulatedTail {
    pub fn new(points: Vec<(f64, f64)>) -> Result<TabulatedTail> {
        if points.len() < 2 {
            return Err(Error::Measure(format!(
                "tabulated tail needs at least 2 points, got {}",
                points.len()
            )));
        }
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Measure(format!(
                    "tabulated grid must increase strictly, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
            if !(w[0].1 > w[1].1) {
                return Err(Error::Measure(format!(
                    "tabulated tail must decrease strictly, got {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        let first = points[0].1;
        let last = points[points.len() - 1].1;
        if first != 1.0 {
            return Err(Error::Measure(format!("tabulated tail must start at 1, got {first}")));
        }
        if last != 0.0 {
            return Err(Error::Measure(format!(
                "tabulated tail must end at exactly 0, got {last}"
            )));
        }
        for &(x, t) in &points {
            if !x.is_finite() || !t.is_finite() || t < 0.0 || t > 1.0 {
                return Err(Error::Measure(format!("bad tabulated point ({x}, {t})")));
            }
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ts: Vec<f64> = points.iter().map(|p| p.1).collect();
        let mut lambdas = Vec::with_capacity(xs.len() - 1);
        for i in 0..xs.len() - 1 {
            if ts[i + 1] > 0.0 {
                lambdas.push((ts[i + 1] / ts[i]).ln() / (xs[i + 1] - xs[i]));
            } else {
                lambdas.push(f64::NAN); // final segment: linear, rate unused
            }
        }
        Ok(TabulatedTail { xs, ts, lambdas })
    }

    /// Two-column CSV `x,tail`; `#` comments and a non-numeric header row are
    /// skipped.
    pub fn from_csv(path: &Path) -> Result<TabulatedTail> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',');
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Config(format!(
                    "{}:{}: expected two comma-separated columns",
                    path.display(),
                    lineno + 1
                )));
            };
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(x), Ok(t)) => points.push((x, t)),
                _ if points.is_empty() => continue, // header row
                _ => {
                    return Err(Error::Config(format!(
                        "{}:{}: could not parse '{line}'",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        TabulatedTail::new(points)
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn grid(&self) -> &[f64] {
        &self.xs
    }

    fn segment(&self, x: f64) -> usize {
        // index i with xs[i] <= x < xs[i+1]
        self.xs.partition_point(|&g| g <= x).saturating_sub(1).min(self.xs.len() - 2)
    }

    pub fn tail(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 1.0;
        }
        if x >= self.x_max() {
            return 0.0;
        }
        let i = self.segment(x);
        let (x0, t0) = (self.xs[i], self.ts[i]);
        if self.ts[i + 1] > 0.0 {
            t0 * (self.lambdas[i] * (x - x0)).exp()
        } else {
            t0 * (self.xs[i + 1] - x) / (self.xs[i + 1] - x0)
        }
    }

    pub fn log_tail(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.x_max() {
            return f64::NEG_INFINITY;
        }
        let i = self.segment(x);
        let (x0, t0) = (self.xs[i], self.ts[i]);
        if self.ts[i + 1] > 0.0 {
            t0.ln() + self.lambdas[i] * (x - x0)
        } else {
            (t0 * (self.xs[i + 1] - x) / (self.xs[i + 1] - x0)).ln()
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.xs[0] || x > self.x_max() {
            return 0.0;
        }
        let i = self.segment(x);
        if self.ts[i + 1] > 0.0 {
            -self.lambdas[i] * self.tail(x)
        } else {
            self.ts[i] / (self.xs[i + 1] - self.xs[i])
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let target = 1.0 - u; // tail level to hit
        // first node with tail <= target ends the segment containing it
        let j = self.ts.partition_point(|&t| t > target);
        if j == 0 {
            return self.xs[0];
        }
        let i = j - 1;
        let (x0, t0) = (self.xs[i], self.ts[i]);
        if self.ts[i + 1] > 0.0 {
            x0 + (target / t0).ln() / self.lambdas[i]
        } else {
            self.xs[i + 1] - target * (self.xs[i + 1] - x0) / t0
        }
    }
}
