//! Inverse-CDF sampling from a tabulated density.
//!
//! The density is linear between nodes, so the CDF is piecewise quadratic and
//! is inverted exactly inside each bin.

use rand::Rng;

use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
pub struct TabulatedPdf {
    xs: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedPdf {
    /// `xs` strictly increasing, `pdf` non-negative, same length (≥ 2).
    pub fn new(xs: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != pdf.len() {
            return Err(invalid("tabulated pdf needs matching node and value lists of length >= 2"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("pdf nodes must be strictly increasing"));
        }
        if pdf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("pdf values must be finite and non-negative"));
        }
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for j in 0..xs.len() - 1 {
            let mass = 0.5 * (pdf[j] + pdf[j + 1]) * (xs[j + 1] - xs[j]);
            cdf.push(cdf[j] + mass);
        }
        Ok(Self { xs, pdf, cdf })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.pdf
    }

    /// Trapezoid mass of the whole table.
    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    /// Tabulated mass between the first node and `x` (clamped to the table).
    pub fn mass_below(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return self.cdf[last];
        }
        let j = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[j + 1] - self.xs[j];
        let t = x - self.xs[j];
        let slope = (self.pdf[j + 1] - self.pdf[j]) / h;
        self.cdf[j] + self.pdf[j] * t + 0.5 * slope * t * t
    }

    /// Quantile for `u ∈ [0, 1)`, relative to the tabulated mass.
    pub fn quantile(&self, u: f64) -> f64 {
        let total = self.total_mass();
        let target = u.clamp(0.0, 1.0) * total;
        let nb = self.xs.len() - 1;
        // first bin whose upper cumulative value exceeds the target
        let mut j = self.cdf.partition_point(|&c| c <= target);
        j = j.saturating_sub(1).min(nb - 1);
        while j < nb - 1 && self.cdf[j + 1] - self.cdf[j] <= 0.0 {
            j += 1;
        }
        let h = self.xs[j + 1] - self.xs[j];
        let m = (target - self.cdf[j]).max(0.0);
        let p0 = self.pdf[j];
        let slope = (self.pdf[j + 1] - p0) / h;
        let disc = (p0 * p0 + 2.0 * slope * m).max(0.0);
        let denom = p0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * m / denom } else { 0.0 };
        self.xs[j] + t.clamp(0.0, h)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}
