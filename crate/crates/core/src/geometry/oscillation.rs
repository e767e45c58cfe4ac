//! Periodic boundary profiles and their cell statistics.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::quadrature::GaussRule;
use crate::{Error, Result};

/// A 1-periodic profile on the unit cell.
///
/// The Fourier form is written as `Σ c_j (cos 2πjy − 1) + s_j sin 2πjy` so
/// that `f(0) = 0` holds for every coefficient choice. With that convention
/// the oscillating boundary always meets the fixed sides at the unperturbed
/// heights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    SinSquared,
    Fourier { cos: Vec<f64>, sin: Vec<f64> },
}

impl Profile {
    pub fn value(&self, y: f64) -> f64 {
        let t = y.rem_euclid(1.0);
        match self {
            Profile::Zero => 0.0,
            Profile::SinSquared => {
                let s = (PI * t).sin();
                s * s
            }
            Profile::Fourier { cos, sin } => {
                let mut v = 0.0;
                for (j, c) in cos.iter().enumerate() {
                    let w = 2.0 * PI * (j + 1) as f64 * t;
                    v += c * (w.cos() - 1.0);
                }
                for (j, s) in sin.iter().enumerate() {
                    let w = 2.0 * PI * (j + 1) as f64 * t;
                    v += s * w.sin();
                }
                v
            }
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        let t = y.rem_euclid(1.0);
        match self {
            Profile::Zero => 0.0,
            Profile::SinSquared => PI * (2.0 * PI * t).sin(),
            Profile::Fourier { cos, sin } => {
                let mut v = 0.0;
                for (j, c) in cos.iter().enumerate() {
                    let k = 2.0 * PI * (j + 1) as f64;
                    v -= c * k * (k * t).sin();
                }
                for (j, s) in sin.iter().enumerate() {
                    let k = 2.0 * PI * (j + 1) as f64;
                    v += s * k * (k * t).cos();
                }
                v
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::SinSquared => false,
            Profile::Fourier { cos, sin } => cos.iter().chain(sin).all(|c| *c == 0.0),
        }
    }

    /// Short identifier used in file names and reports.
    pub fn id(&self) -> &'static str {
        match self {
            Profile::Zero => "zero",
            Profile::SinSquared => "sin2",
            Profile::Fourier { .. } => "fourier",
        }
    }
}

/// Profile, amplitude exponent and the derived cell statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationSpec {
    pub profile: Profile,
    pub a: f64,
    /// `∫₀¹ |f′|`.
    pub mean_grad: f64,
    pub sup_f: f64,
    pub sup_fprime: f64,
}

impl OscillationSpec {
    pub fn new(profile: Profile, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::config("a", format!("amplitude exponent must be positive, got {a}")));
        }
        if let Profile::Fourier { cos, sin } = &profile {
            if cos.iter().chain(sin).any(|c| !c.is_finite()) {
                return Err(Error::config("profile", "Fourier coefficients must be finite"));
            }
        }
        let mean_grad = mean_abs_derivative(&profile);
        let (sup_f, sup_fprime) = sampled_sups(&profile);
        Ok(Self { profile, a, mean_grad, sup_f, sup_fprime })
    }

    pub fn sin_squared(a: f64) -> Result<Self> {
        Self::new(Profile::SinSquared, a)
    }

    pub fn zero(a: f64) -> Result<Self> {
        Self::new(Profile::Zero, a)
    }

    pub fn f(&self, y: f64) -> f64 {
        self.profile.value(y)
    }

    pub fn fprime(&self, y: f64) -> f64 {
        self.profile.derivative(y)
    }

    /// Amplitude `ε^a` of the oscillation at period `ε`.
    pub fn amplitude(&self, eps: f64) -> f64 {
        eps.powf(self.a)
    }
}

const SCAN: usize = 2048;

/// `∫₀¹ |f′(y)| dy`, integrating exactly between the sign changes of `f′`.
fn mean_abs_derivative(profile: &Profile) -> f64 {
    if profile.is_constant() {
        return 0.0;
    }
    let df = |y: f64| profile.derivative(y);
    let mut breaks = vec![0.0];
    let mut prev_y = 0.0;
    let mut prev = df(0.0);
    for i in 1..SCAN {
        let y = i as f64 / SCAN as f64;
        let cur = df(y);
        if cur == 0.0 {
            breaks.push(y);
        } else if prev * cur < 0.0 {
            breaks.push(bisect(&df, prev_y, y));
        }
        prev_y = y;
        prev = cur;
    }
    breaks.push(1.0);
    breaks.dedup();
    let rule = GaussRule::new(16);
    breaks.windows(2).map(|w| rule.composite(w[0], w[1], 4, &df).abs()).sum()
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sampled_sups(profile: &Profile) -> (f64, f64) {
    let n = 8 * SCAN;
    (0..n).fold((0.0f64, 0.0f64), |(sf, sd), i| {
        let y = i as f64 / n as f64;
        (sf.max(profile.value(y).abs()), sd.max(profile.derivative(y).abs()))
    })
}
