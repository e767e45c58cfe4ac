use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::chart::ChartFn;
use super::oscillation::OscillationSpec;
use crate::quadrature::GaussRule;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `(0,1) × (0, Φ(x))`, the top side being the chart.
    SquareTopChart,
    UnitDisk,
}

/// Which part of the boundary a polyline segment or mesh edge lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPiece {
    Bottom,
    Right,
    Chart,
    Left,
    Circle,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Perturbation {
    pub osc: OscillationSpec,
    pub eps: f64,
    /// Number of periods across the chart, `1/ε`.
    pub cells: usize,
}

impl Perturbation {
    pub fn amplitude(&self) -> f64 {
        self.osc.amplitude(self.eps)
    }
}

/// A base domain, or an oscillating one, with its boundary polyline.
///
/// The polyline runs counterclockwise. For the square it starts at the
/// origin and visits bottom, right side, chart (from `x = 1` back to
/// `x = 0`) and left side. Every vertex carries a reference coordinate
/// `τ` that does not depend on the oscillation, so that boundary points of
/// `Ω_ε` and `Ω` with the same `τ` correspond under the perturbation map.
#[derive(Clone, Debug)]
pub struct ChartedDomain {
    pub kind: DomainKind,
    pub phi: ChartFn,
    pub perturbation: Option<Perturbation>,
    pub resolution: f64,
    pub polyline: Vec<[f64; 2]>,
    /// Piece of segment `i`, which runs from vertex `i` to vertex `i + 1` (cyclically).
    pub pieces: Vec<BoundaryPiece>,
    /// Reference coordinate of every vertex plus the closing value `ref_period`.
    pub ref_coords: Vec<f64>,
}

/// Validates `ε = 1/k` with integer `k ≥ 2` and returns `k`.
pub fn cells_for_eps(eps: f64) -> Result<usize> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::config("eps", format!("period must be positive, got {eps}")));
    }
    let k = (1.0 / eps).round();
    if k < 2.0 || (k * eps - 1.0).abs() > 1e-12 {
        return Err(Error::config("eps", format!("1/eps must be an integer >= 2, got eps = {eps}")));
    }
    Ok(k as usize)
}

pub fn build_base_domain(kind: DomainKind, phi: ChartFn, resolution: f64) -> Result<ChartedDomain> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::config("resolution", format!("must be positive, got {resolution}")));
    }
    if phi.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::config("phi", "chart coefficients must be finite"));
    }
    ChartedDomain::assemble(kind, phi, None, resolution)
}

/// Replaces the chart of `domain` by `Φ(x) + ε^a f(x/ε)`.
pub fn build_perturbed_boundary(domain: &ChartedDomain, osc: &OscillationSpec, eps: f64) -> Result<ChartedDomain> {
    if domain.kind != DomainKind::SquareTopChart {
        return Err(Error::config("domain", "only the square with a top chart can be perturbed"));
    }
    if domain.perturbation.is_some() {
        return Err(Error::config("domain", "domain is already perturbed"));
    }
    let cells = cells_for_eps(eps)?;
    let eps = 1.0 / cells as f64;
    let pert = Perturbation { osc: osc.clone(), eps, cells };
    ChartedDomain::assemble(domain.kind, domain.phi.clone(), Some(pert), domain.resolution)
}

/// Exact arclength of the oscillating chart with the pointwise check of the
/// residual `ρ = √(δ² + (δΦ′ + f′)²) − |f′|`, `δ = ε^{1−a}`.
#[derive(Clone, Copy, Debug)]
pub struct ChartLength {
    pub length: f64,
    pub rho_max: f64,
    /// Largest `|ρ| / (δ (1 + |Φ′|))` over the quadrature points; at most 1.
    pub rho_ratio_max: f64,
}

pub fn perturbed_chart_length(phi: &ChartFn, osc: &OscillationSpec, eps: f64) -> Result<ChartLength> {
    let k = cells_for_eps(eps)?;
    let eps = 1.0 / k as f64;
    let delta = eps.powf(1.0 - osc.a);
    let lift = eps.powf(osc.a - 1.0);
    let rule = GaussRule::new(8);
    let panels = 16;
    let mut length = 0.0;
    let mut rho_max: f64 = 0.0;
    let mut rho_ratio_max: f64 = 0.0;
    for c in 0..k {
        for p in 0..panels {
            let lo = p as f64 / panels as f64;
            let hi = (p + 1) as f64 / panels as f64;
            for (t, w) in rule.mapped(lo, hi) {
                let x = (c as f64 + t) / k as f64;
                let dphi = phi.derivative(x);
                let df = osc.fprime(t);
                let slope = dphi + lift * df;
                length += eps * w * (1.0 + slope * slope).sqrt();
                let inner = delta * dphi + df;
                let rho = ((delta * delta + inner * inner).sqrt() - df.abs()).abs();
                rho_max = rho_max.max(rho);
                rho_ratio_max = rho_ratio_max.max(rho / (delta * (1.0 + dphi.abs())));
            }
        }
    }
    Ok(ChartLength { length, rho_max, rho_ratio_max })
}

impl ChartedDomain {
    fn assemble(kind: DomainKind, phi: ChartFn, pert: Option<Perturbation>, resolution: f64) -> Result<Self> {
        let (polyline, pieces, ref_coords) = match kind {
            DomainKind::UnitDisk => disk_polyline(resolution),
            DomainKind::SquareTopChart => square_polyline(&phi, pert.as_ref(), resolution)?,
        };
        let dom = Self { kind, phi, perturbation: pert, resolution, polyline, pieces, ref_coords };
        dom.check_simple()?;
        if dom.polygon_area() <= 0.0 {
            return Err(Error::Geometry("boundary polyline is not positively oriented".into()));
        }
        Ok(dom)
    }

    /// Same domain sampled at a different resolution.
    pub fn resampled(&self, resolution: f64) -> Result<Self> {
        Self::assemble(self.kind, self.phi.clone(), self.perturbation.clone(), resolution)
    }

    /// The unperturbed domain this one was built from.
    pub fn base(&self) -> Result<Self> {
        Self::assemble(self.kind, self.phi.clone(), None, self.resolution)
    }

    pub fn eps(&self) -> Option<f64> {
        self.perturbation.as_ref().map(|p| p.eps)
    }

    pub fn height_left(&self) -> f64 {
        self.phi.value(0.0)
    }

    pub fn height_right(&self) -> f64 {
        self.phi.value(1.0)
    }

    /// Height of the (possibly oscillating) top boundary above `x`.
    pub fn top_height(&self, x: f64) -> f64 {
        let base = self.phi.value(x);
        match &self.perturbation {
            Some(p) => base + p.amplitude() * p.osc.f(x * p.cells as f64),
            None => base,
        }
    }

    pub fn top_slope(&self, x: f64) -> f64 {
        let base = self.phi.derivative(x);
        match &self.perturbation {
            Some(p) => base + p.amplitude() * p.cells as f64 * p.osc.fprime(x * p.cells as f64),
            None => base,
        }
    }

    /// Length of the reference-coordinate circle, `|∂Ω|` measured in `τ`.
    pub fn ref_period(&self) -> f64 {
        *self.ref_coords.last().expect("polyline is never empty")
    }

    pub fn num_segments(&self) -> usize {
        self.polyline.len()
    }

    pub fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        let n = self.polyline.len();
        (self.polyline[i], self.polyline[(i + 1) % n])
    }

    pub fn segment_length(&self, i: usize) -> f64 {
        let (a, b) = self.segment(i);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn polyline_length(&self) -> f64 {
        (0..self.num_segments()).map(|i| self.segment_length(i)).sum()
    }

    pub fn chart_polyline_length(&self) -> f64 {
        (0..self.num_segments())
            .filter(|&i| self.pieces[i] == BoundaryPiece::Chart)
            .map(|i| self.segment_length(i))
            .sum()
    }

    /// Reference coordinate range `[τ₀, τ₁]` covered by the chart.
    pub fn chart_ref_range(&self) -> Option<(f64, f64)> {
        match self.kind {
            DomainKind::UnitDisk => None,
            DomainKind::SquareTopChart => {
                let h1 = self.height_right();
                Some((1.0 + h1, 2.0 + h1))
            }
        }
    }

    /// Horizontal chart coordinate of a reference coordinate on the chart.
    pub fn chart_x_of_ref(&self, tau: f64) -> f64 {
        1.0 - (tau - 1.0 - self.height_right())
    }

    /// Boundary point with reference coordinate `tau`, on this domain's boundary.
    pub fn point_at_ref(&self, tau: f64) -> ([f64; 2], BoundaryPiece) {
        let tau = tau.rem_euclid(self.ref_period());
        match self.kind {
            DomainKind::UnitDisk => ([tau.cos(), tau.sin()], BoundaryPiece::Circle),
            DomainKind::SquareTopChart => {
                let h0 = self.height_left();
                let h1 = self.height_right();
                if tau < 1.0 {
                    ([tau, 0.0], BoundaryPiece::Bottom)
                } else if tau < 1.0 + h1 {
                    ([1.0, tau - 1.0], BoundaryPiece::Right)
                } else if tau < 2.0 + h1 {
                    let x = self.chart_x_of_ref(tau);
                    ([x, self.top_height(x)], BoundaryPiece::Chart)
                } else {
                    ([0.0, h0 - (tau - 2.0 - h1)], BoundaryPiece::Left)
                }
            }
        }
    }

    /// Reference coordinate of a point known to lie on `piece`.
    pub fn ref_of_point(&self, p: [f64; 2], piece: BoundaryPiece) -> f64 {
        let h0 = self.height_left();
        let h1 = self.height_right();
        match piece {
            BoundaryPiece::Bottom => p[0],
            BoundaryPiece::Right => 1.0 + p[1],
            BoundaryPiece::Chart => 1.0 + h1 + (1.0 - p[0]),
            BoundaryPiece::Left => 2.0 + h1 + (h0 - p[1]),
            BoundaryPiece::Circle => p[1].atan2(p[0]).rem_euclid(2.0 * PI),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self.kind {
            DomainKind::UnitDisk => p[0] * p[0] + p[1] * p[1] < 1.0,
            DomainKind::SquareTopChart => p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < self.top_height(p[0]),
        }
    }

    /// Shoelace area of the polyline.
    pub fn polygon_area(&self) -> f64 {
        let n = self.polyline.len();
        0.5 * (0..n)
            .map(|i| {
                let a = self.polyline[i];
                let b = self.polyline[(i + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.polyline.len();
        if n < 3 {
            return Err(Error::Geometry("polyline needs at least three vertices".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.polyline {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::Geometry("non-finite polyline vertex".into()));
            }
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let mean = self.polyline_length() / n as f64;
        let cell = mean.max(1e-9) * 2.0;
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).clamp(1, 4096);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).clamp(1, 4096);
        let cw = (hi[0] - lo[0]).max(1e-12) / nx as f64;
        let ch = (hi[1] - lo[1]).max(1e-12) / ny as f64;
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
        let cell_of = |v: f64, o: f64, w: f64, m: usize| (((v - o) / w).floor().max(0.0) as usize).min(m - 1);
        for i in 0..n {
            let (a, b) = self.segment(i);
            let (x0, x1) = (cell_of(a[0].min(b[0]), lo[0], cw, nx), cell_of(a[0].max(b[0]), lo[0], cw, nx));
            let (y0, y1) = (cell_of(a[1].min(b[1]), lo[1], ch, ny), cell_of(a[1].max(b[1]), lo[1], ch, ny));
            for gx in x0..=x1 {
                for gy in y0..=y1 {
                    buckets[gy * nx + gx].push(i);
                }
            }
        }
        for bucket in &buckets {
            for (s, &i) in bucket.iter().enumerate() {
                for &j in &bucket[s + 1..] {
                    let adjacent = (i + 1) % n == j || (j + 1) % n == i;
                    let (a, b) = self.segment(i);
                    let (c, d) = self.segment(j);
                    let bad = if adjacent { collinear_overlap(a, b, c, d) } else { segments_touch(a, b, c, d) };
                    if bad {
                        return Err(Error::Geometry(format!(
                            "boundary polyline self-intersects at segments {i} and {j}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Two consecutive segments fold back onto each other.
fn collinear_overlap(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    // one shared endpoint; overlap iff the directions are opposite and collinear
    let u = [b[0] - a[0], b[1] - a[1]];
    let v = [d[0] - c[0], d[1] - c[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    let scale = (u[0].hypot(u[1]) * v[0].hypot(v[1])).max(f64::MIN_POSITIVE);
    cross.abs() <= 1e-14 * scale && dot < 0.0
}

type Polyline = (Vec<[f64; 2]>, Vec<BoundaryPiece>, Vec<f64>);

fn disk_polyline(resolution: f64) -> Polyline {
    let n = ((2.0 * PI / resolution).ceil() as usize).max(8);
    let mut pts = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n + 1);
    for i in 0..n {
        let t = 2.0 * PI * i as f64 / n as f64;
        pts.push([t.cos(), t.sin()]);
        tau.push(t);
    }
    tau.push(2.0 * PI);
    (pts, vec![BoundaryPiece::Circle; n], tau)
}

fn square_polyline(phi: &ChartFn, pert: Option<&Perturbation>, res: f64) -> Result<Polyline> {
    let h0 = phi.value(0.0);
    let h1 = phi.value(1.0);
    if !(h0 > 0.0 && h1 > 0.0) {
        return Err(Error::Geometry(format!("chart heights at the corners must be positive, got {h0} and {h1}")));
    }
    let mut pts = Vec::new();
    let mut pieces = Vec::new();
    let mut tau = Vec::new();
    let count = |len: f64| ((len / res).ceil() as usize).max(1);

    let nb = count(1.0);
    for i in 0..nb {
        let x = i as f64 / nb as f64;
        pts.push([x, 0.0]);
        pieces.push(BoundaryPiece::Bottom);
        tau.push(x);
    }
    let nr = count(h1);
    for j in 0..nr {
        let y = h1 * j as f64 / nr as f64;
        pts.push([1.0, y]);
        pieces.push(BoundaryPiece::Right);
        tau.push(1.0 + y);
    }
    for [x, y] in chart_points(phi, pert, res) {
        if !(y > 0.0) {
            return Err(Error::Geometry(format!("chart height {y} at x = {x} is not above the bottom side")));
        }
        pts.push([x, y]);
        pieces.push(BoundaryPiece::Chart);
        tau.push(1.0 + h1 + (1.0 - x));
    }
    let nl = count(h0);
    for j in 0..nl {
        let y = h0 * (nl - j) as f64 / nl as f64;
        pts.push([0.0, y]);
        pieces.push(BoundaryPiece::Left);
        tau.push(2.0 + h1 + (h0 - y));
    }
    tau.push(2.0 + h0 + h1);
    Ok((pts, pieces, tau))
}

/// Chart vertices from `x = 1` down to (excluding) `x = 0`.
///
/// Oscillating charts are sampled cell by cell in the local variable `t`,
/// so heights at cell boundaries are evaluated at `t = 0` exactly. A
/// constant profile leaves the base sampling untouched.
fn chart_points(phi: &ChartFn, pert: Option<&Perturbation>, res: f64) -> Vec<[f64; 2]> {
    match pert {
        Some(p) if !p.osc.profile.is_constant() => {
            let k = p.cells;
            let amp = p.amplitude();
            let lift = amp * k as f64;
            let mut out = Vec::new();
            let mut cached: Option<(f64, Vec<f64>)> = None;
            for c in (0..k).rev() {
                let slope = phi.derivative((c as f64 + 0.5) / k as f64);
                let params = match &cached {
                    Some((s, t)) if *s == slope => t.clone(),
                    _ => {
                        let t = cell_parameters(|t| slope + lift * p.osc.fprime(t), p.eps, res);
                        cached = Some((slope, t.clone()));
                        t
                    }
                };
                // cell end, i.e. t = 0 of the next cell
                let x = (c + 1) as f64 / k as f64;
                out.push([x, phi.value(x) + amp * p.osc.f(0.0)]);
                for &t in params.iter().skip(1).rev() {
                    let x = (c as f64 + t) / k as f64;
                    out.push([x, phi.value(x) + amp * p.osc.f(t)]);
                }
            }
            out
        }
        _ => {
            let n = ((phi.graph_length() / res).ceil() as usize).max(1);
            (0..n)
                .map(|i| {
                    let x = (n - i) as f64 / n as f64;
                    [x, phi.value(x)]
                })
                .collect()
        }
    }
}

/// Local parameters `0 = t₀ < … < t_{m−1} < 1` with arclength roughly
/// equidistributed; `m ≥ 16` and each piece at most about `res` long.
fn cell_parameters(slope: impl Fn(f64) -> f64, eps: f64, res: f64) -> Vec<f64> {
    let density = |t: f64| {
        let s = slope(t);
        eps * (1.0 + s * s).sqrt()
    };
    let fine = 4096;
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    let mut prev = density(0.0);
    for i in 1..=fine {
        let cur = density(i as f64 / fine as f64);
        let last = *cum.last().unwrap();
        cum.push(last + 0.5 * (prev + cur) / fine as f64);
        prev = cur;
    }
    let total = cum[fine];
    let m = ((total / res).ceil() as usize).max(16);
    let mut params = Vec::with_capacity(m);
    params.push(0.0);
    let mut idx = 0;
    for j in 1..m {
        let target = total * j as f64 / m as f64;
        while cum[idx + 1] < target {
            idx += 1;
        }
        let frac = (target - cum[idx]) / (cum[idx + 1] - cum[idx]);
        params.push((idx as f64 + frac) / fine as f64);
    }
    params
}
