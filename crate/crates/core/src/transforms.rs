//! The map flattening an oscillating chart, its Jacobians, and the
//! homogenized boundary weight.

use serde::Serialize;
use std::io::Write;

use crate::geometry::{cells_for_eps, ChartFn, ChartedDomain, OscillationSpec};
use crate::quadrature::{integrate_converged, GaussRule};
use crate::{Error, Result};

/// Cubic smoothstep `3t² − 2t³` on `[0, 1]`, clamped outside.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_slope(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        6.0 * t * (1.0 - t)
    }
}

/// `T(x, y) = (x, y − ε^a f(x/ε) φ(x, y))` on the square with an oscillating top.
///
/// The cutoff is `φ = S(1 − d/√ε)` with `d` the vertical depth below the
/// oscillation layer `Φ(x) − ε^a·max(0, −min f)`. It equals 1 on both the
/// base chart and the oscillating one, so the map sends the oscillating top
/// onto the graph of `Φ` and fixes the sides (where `f(0) = 0`) and the
/// bottom.
#[derive(Clone, Debug)]
pub struct PerturbationMap {
    pub osc: OscillationSpec,
    pub eps: f64,
    pub cells: usize,
    pub phi: ChartFn,
    pub cutoff_width: f64,
    amp: f64,
    layer_drop: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JacobianBundle {
    /// Row-major `[[∂T₁/∂x, ∂T₁/∂y], [∂T₂/∂x, ∂T₂/∂y]]`.
    pub dt: [[f64; 2]; 2],
    pub j: f64,
    pub jtau: Option<f64>,
}

impl PerturbationMap {
    pub fn new(phi: ChartFn, osc: OscillationSpec, eps: f64) -> Result<Self> {
        let cells = cells_for_eps(eps)?;
        let eps = 1.0 / cells as f64;
        let amp = osc.amplitude(eps);
        let min_f = (0..8192).map(|i| osc.f(i as f64 / 8192.0)).fold(0.0, f64::min);
        let layer_drop = amp * (-min_f).max(0.0);
        let map = Self { cutoff_width: eps.sqrt(), osc, eps, cells, phi, amp, layer_drop };
        let lower_j = 1.0 - 1.5 * amp * map.osc.sup_f / map.cutoff_width;
        if lower_j <= 0.0 {
            return Err(Error::Map(format!(
                "volume Jacobian can vanish: 1 - 1.5 eps^a sup|f| / sqrt(eps) = {lower_j:.4} at eps = {eps}"
            )));
        }
        if map.phi.min_value() - layer_drop <= map.cutoff_width {
            return Err(Error::Map("cutoff layer reaches the bottom side".into()));
        }
        Ok(map)
    }

    /// Map for an oscillating domain built by `build_perturbed_boundary`.
    pub fn for_domain(domain: &ChartedDomain) -> Result<Self> {
        let p = domain.perturbation.as_ref().ok_or_else(|| Error::Map("domain carries no oscillation".into()))?;
        Self::new(domain.phi.clone(), p.osc.clone(), p.eps)
    }

    pub fn amplitude(&self) -> f64 {
        self.amp
    }

    /// Constant `C` in `|∇φ| ≤ C/√ε`.
    pub fn cutoff_gradient_constant(&self) -> f64 {
        let s = self.phi.max_abs_slope();
        1.5 * (1.0 + s * s).sqrt()
    }

    fn cutoff_arg(&self, p: [f64; 2]) -> (f64, bool) {
        let depth = self.phi.value(p[0]) - self.layer_drop - p[1];
        if depth <= 0.0 {
            (1.0, false)
        } else {
            (1.0 - depth / self.cutoff_width, true)
        }
    }

    pub fn cutoff(&self, p: [f64; 2]) -> f64 {
        smoothstep(self.cutoff_arg(p).0)
    }

    /// `∇φ` at `p`.
    pub fn cutoff_gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, below) = self.cutoff_arg(p);
        if !below {
            return [0.0, 0.0];
        }
        let ds = smoothstep_slope(s) / self.cutoff_width;
        [-ds * self.phi.derivative(p[0]), ds]
    }

    /// Oscillation height `ε^a f(x/ε)` above `x`.
    pub fn lift(&self, x: f64) -> f64 {
        self.amp * self.osc.f(x * self.cells as f64)
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0], p[1] - self.lift(p[0]) * self.cutoff(p)]
    }

    /// Inverse by a safeguarded Newton iteration on the height coordinate.
    pub fn inverse(&self, q: [f64; 2]) -> Result<[f64; 2]> {
        let lift = self.lift(q[0]);
        if lift == 0.0 {
            return Ok(q);
        }
        let g = |y: f64| y - lift * self.cutoff([q[0], y]) - q[1];
        let pad = 1e-12 * (1.0 + q[1].abs());
        let (mut lo, mut hi) = (q[1] - lift.abs() - pad, q[1] + lift.abs() + pad);
        let (glo, ghi) = (g(lo), g(hi));
        if glo > 0.0 || ghi < 0.0 {
            return Err(Error::Map(format!("no preimage bracketed for ({}, {})", q[0], q[1])));
        }
        let mut y = q[1] + lift;
        for _ in 0..200 {
            let gy = g(y);
            if gy == 0.0 {
                return Ok([q[0], y]);
            }
            if gy < 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            let dg = 1.0 - lift * self.cutoff_gradient([q[0], y])[1];
            let mut next = y - gy / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-15 * (1.0 + y.abs()) {
                return Ok([q[0], next]);
            }
            y = next;
        }
        if hi - lo <= 1e-12 {
            Ok([q[0], 0.5 * (lo + hi)])
        } else {
            Err(Error::Map(format!("inverse map did not converge at ({}, {})", q[0], q[1])))
        }
    }

    pub fn jacobian_at(&self, p: [f64; 2]) -> JacobianBundle {
        let t = p[0] * self.cells as f64;
        let f = self.osc.f(t);
        let fp = self.osc.fprime(t) * self.cells as f64;
        let phi = self.cutoff(p);
        let g = self.cutoff_gradient(p);
        let dt = [[1.0, 0.0], [-self.amp * (fp * phi + f * g[0]), 1.0 - self.amp * f * g[1]]];
        let j = dt[0][0] * dt[1][1] - dt[0][1] * dt[1][0];
        JacobianBundle { dt, j, jtau: None }
    }

    /// Jacobians at a boundary point with outer unit normal `n`, including
    /// the tangential Jacobian `|DT^{-T} n| J`.
    pub fn jacobian_at_boundary(&self, p: [f64; 2], n: [f64; 2]) -> JacobianBundle {
        let mut b = self.jacobian_at(p);
        let d = b.dt;
        // DT^{-T} = (1/J) [[d11, -d10], [-d01, d00]]
        let v = [(d[1][1] * n[0] - d[1][0] * n[1]) / b.j, (-d[0][1] * n[0] + d[0][0] * n[1]) / b.j];
        b.jtau = Some(v[0].hypot(v[1]) * b.j);
        b
    }

    /// Point of the oscillating chart above `x`, with its outer unit normal.
    pub fn chart_point(&self, x: f64) -> ([f64; 2], [f64; 2]) {
        let y = self.phi.value(x) + self.lift(x);
        let slope = self.phi.derivative(x) + self.amp * self.cells as f64 * self.osc.fprime(x * self.cells as f64);
        let r = (1.0 + slope * slope).sqrt();
        ([x, y], [-slope / r, 1.0 / r])
    }

    /// `J_τT` at the oscillating chart point above `x`.
    pub fn chart_jtau(&self, x: f64) -> f64 {
        let (p, n) = self.chart_point(x);
        self.jacobian_at_boundary(p, n).jtau.expect("set by jacobian_at_boundary")
    }

    /// Pointwise invariants over a sample grid of the oscillating domain.
    pub fn check(&self, samples_per_axis: usize) -> Result<TransformCheck> {
        let n = samples_per_axis.max(4);
        let mut rep = TransformCheck { eps: self.eps, a: self.osc.a, ..TransformCheck::default() };
        rep.min_j = f64::INFINITY;
        rep.cutoff_constant = self.cutoff_gradient_constant();
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let top = self.phi.value(x) + self.lift(x);
            for jy in 1..=n {
                let p = [x, top * jy as f64 / n as f64];
                let jb = self.jacobian_at(p);
                rep.min_j = rep.min_j.min(jb.j);
                let dev = (jb.dt[0][0] - 1.0)
                    .abs()
                    .max(jb.dt[0][1].abs())
                    .max(jb.dt[1][0].abs())
                    .max((jb.dt[1][1] - 1.0).abs());
                rep.max_dt_dev = rep.max_dt_dev.max(dev);
                rep.max_j_dev = rep.max_j_dev.max((jb.j - 1.0).abs());
                let g = self.cutoff_gradient(p);
                rep.max_cutoff_grad = rep.max_cutoff_grad.max(g[0].hypot(g[1]) * self.cutoff_width);
                let back = self.inverse(self.apply(p))?;
                rep.max_roundtrip = rep.max_roundtrip.max((back[1] - p[1]).abs());
            }
            let jt = self.chart_jtau(x);
            rep.max_jtau_dev = rep.max_jtau_dev.max((jt - 1.0).abs());
            let (p, _) = self.chart_point(x);
            rep.max_boundary_gap = rep.max_boundary_gap.max((self.apply(p)[1] - self.phi.value(x)).abs());
        }
        if rep.min_j <= 0.0 {
            return Err(Error::Map(format!("volume Jacobian {} at a sample point", rep.min_j)));
        }
        Ok(rep)
    }
}

/// Summary of [`PerturbationMap::check`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct TransformCheck {
    pub eps: f64,
    pub a: f64,
    pub min_j: f64,
    pub max_dt_dev: f64,
    pub max_j_dev: f64,
    pub max_jtau_dev: f64,
    /// `max |∇φ| √ε`; bounded by `cutoff_constant`.
    pub max_cutoff_grad: f64,
    pub cutoff_constant: f64,
    /// Distance of the mapped oscillating chart from the graph of `Φ`.
    pub max_boundary_gap: f64,
    pub max_roundtrip: f64,
}

/// `m = ∫₀¹ √(1 + (Φ′ + f′(y))²) dy / √(1 + Φ′²)`, by composite Gauss with
/// panel doubling (at least 16 panels) until successive values agree to 1e-12.
pub fn homogenized_weight(phi_slope: f64, osc: &OscillationSpec, panels: usize) -> f64 {
    let (cell, _) = integrate_converged(0.0, 1.0, panels.max(16), 1e-12, |y| {
        let s = phi_slope + osc.fprime(y);
        (1.0 + s * s).sqrt()
    });
    cell / (1.0 + phi_slope * phi_slope).sqrt()
}

/// Homogenized weight sampled on a uniform chart grid.
#[derive(Clone, Debug, Serialize)]
pub struct WeightField {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    /// `μ*(∂Ω)`: weighted chart length plus the three straight sides.
    pub total_weighted_length: f64,
    #[serde(skip)]
    phi: ChartFn,
    #[serde(skip)]
    osc: OscillationSpec,
}

impl WeightField {
    pub fn new(phi: &ChartFn, osc: &OscillationSpec, intervals: usize) -> Self {
        let n = intervals.max(1);
        let x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let affine = phi.is_affine();
        let m0 = homogenized_weight(phi.derivative(0.0), osc, 16);
        let m: Vec<f64> =
            x.iter().map(|&xi| if affine { m0 } else { homogenized_weight(phi.derivative(xi), osc, 16) }).collect();
        let rule = GaussRule::new(16);
        let chart = rule.composite(0.0, 1.0, 16, |xi| {
            let d = phi.derivative(xi);
            let mi = if affine { m0 } else { homogenized_weight(d, osc, 16) };
            mi * (1.0 + d * d).sqrt()
        });
        let total_weighted_length = chart + 1.0 + phi.value(0.0) + phi.value(1.0);
        Self { x, m, total_weighted_length, phi: phi.clone(), osc: osc.clone() }
    }

    /// Linear interpolation of the grid values.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.x.len() - 1;
        let s = (x.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (s.floor() as usize).min(n.saturating_sub(1));
        if n == 0 {
            return self.m[0];
        }
        let t = s - i as f64;
        (1.0 - t) * self.m[i] + t * self.m[i + 1]
    }

    /// Weight evaluated directly rather than interpolated.
    pub fn exact(&self, x: f64) -> f64 {
        homogenized_weight(self.phi.derivative(x), &self.osc, 16)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,m")?;
        for (x, m) in self.x.iter().zip(&self.m) {
            writeln!(w, "{x:.12e},{m:.12e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakStarRow {
    pub k: usize,
    pub eps: f64,
    /// `∫ g J_τT_ε^{-1} dS` over the base chart.
    pub pulled: f64,
    /// `∫ g m dS` over the base chart.
    pub limit: f64,
    pub error: f64,
}

/// Compares `∫ g J_τT_ε^{-1} dS` with `∫ g m dS` on the chart for each `k`.
///
/// The left integral is evaluated through the tangential Jacobian of the
/// map at the preimage of each quadrature point; both use 16 Gauss panels of
/// order 8 per period.
pub fn weakstar_test(
    g: &dyn Fn(f64) -> f64,
    ks: &[usize],
    osc: &OscillationSpec,
    phi: &ChartFn,
) -> Result<Vec<WeakStarRow>> {
    let rule = GaussRule::new(8);
    let affine = phi.is_affine();
    let m0 = homogenized_weight(phi.derivative(0.0), osc, 16);
    ks.iter()
        .map(|&k| {
            let eps = 1.0 / k as f64;
            cells_for_eps(eps)?;
            let map = PerturbationMap::new(phi.clone(), osc.clone(), eps)?;
            let panels = 16 * k;
            let (mut pulled, mut limit) = (0.0, 0.0);
            for p in 0..panels {
                let lo = p as f64 / panels as f64;
                let hi = (p + 1) as f64 / panels as f64;
                for (x, w) in rule.mapped(lo, hi) {
                    let d = phi.derivative(x);
                    let ds = (1.0 + d * d).sqrt();
                    let gx = g(x);
                    pulled += w * gx * ds / map.chart_jtau(x);
                    let m = if affine { m0 } else { homogenized_weight(d, osc, 16) };
                    limit += w * gx * m * ds;
                }
            }
            Ok(WeakStarRow { k, eps, pulled, limit, error: (pulled - limit).abs() })
        })
        .collect()
}

pub fn write_weakstar_csv<W: Write>(rows: &[WeakStarRow], g_id: &str, mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,eps,g_id,error")?;
    for r in rows {
        writeln!(w, "{},{:.12e},{},{:.12e}", r.k, r.eps, g_id, r.error)?;
    }
    Ok(())
}
