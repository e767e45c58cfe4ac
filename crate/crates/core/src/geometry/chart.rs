use serde::{Deserialize, Serialize};

use crate::quadrature::GaussRule;

/// Height of the top boundary over the chart interval, as a polynomial in
/// the horizontal coordinate: `Φ(x) = Σ c_i x^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChartFn {
    coeffs: Vec<f64>,
}

impl ChartFn {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Self { coeffs }
    }

    pub fn flat(height: f64) -> Self {
        Self::polynomial(vec![height])
    }

    pub fn affine(height: f64, slope: f64) -> Self {
        Self::polynomial(vec![height, slope])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, c)| acc * x + i as f64 * c)
    }

    pub fn is_affine(&self) -> bool {
        self.coeffs.iter().skip(2).all(|c| *c == 0.0)
    }

    /// Largest `|Φ′|` over `[0, 1]`, sampled.
    pub fn max_abs_slope(&self) -> f64 {
        (0..=256).map(|i| self.derivative(i as f64 / 256.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        (0..=256).map(|i| self.value(i as f64 / 256.0)).fold(f64::INFINITY, f64::min)
    }

    /// Arclength of the graph over `[0, 1]`.
    pub fn graph_length(&self) -> f64 {
        let rule = GaussRule::new(16);
        rule.composite(0.0, 1.0, 32, |x| {
            let d = self.derivative(x);
            (1.0 + d * d).sqrt()
        })
    }
}
