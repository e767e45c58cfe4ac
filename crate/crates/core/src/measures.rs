//! Boundary measures on the base boundary and the window diagnostics that
//! compare optimal windows across oscillating domains.

use serde::Serialize;

use crate::fem::TraceEigenpair;
use crate::geometry::{EdgeTag, TriMesh};
use crate::quadrature::GaussRule;
use crate::transforms::{PerturbationMap, WeightField};
use crate::windows::Window;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureId {
    Surface,
    MuEps { eps: f64 },
    MuStar,
    NuEps { eps: f64 },
    NuStar,
}

impl MeasureId {
    pub fn label(&self) -> &'static str {
        match self {
            MeasureId::Surface => "surface",
            MeasureId::MuEps { .. } => "mu_eps",
            MeasureId::MuStar => "mu_star",
            MeasureId::NuEps { .. } => "nu_eps",
            MeasureId::NuStar => "nu_star",
        }
    }
}

/// Per-edge weights of a measure on a mesh boundary.
#[derive(Clone, Debug, Serialize)]
pub struct DiscreteBoundaryMeasure {
    pub id: MeasureId,
    pub weights: Vec<f64>,
}

impl DiscreteBoundaryMeasure {
    pub fn from_weights(id: MeasureId, weights: Vec<f64>) -> Self {
        Self { id, weights }
    }

    /// Arclength `dS`.
    pub fn surface(mesh: &TriMesh) -> Self {
        Self::from_weights(MeasureId::Surface, mesh.edge_lengths())
    }

    /// `dμ* = m dS` on the chart, `dS` elsewhere; Simpson in the weight.
    pub fn mu_star(mesh: &TriMesh, field: &WeightField) -> Self {
        let weights = mesh
            .boundary_edges
            .iter()
            .map(|e| {
                if e.tag != EdgeTag::Chart {
                    return e.length;
                }
                let (a, b) = (mesh.nodes[e.nodes[0]][0], mesh.nodes[e.nodes[1]][0]);
                let avg = (field.exact(a) + 4.0 * field.exact(0.5 * (a + b)) + field.exact(b)) / 6.0;
                e.length * avg
            })
            .collect();
        Self::from_weights(MeasureId::MuStar, weights)
    }

    /// `dμ_ε = J_τT_ε^{-1} dS` on a base mesh, integrating the oscillating
    /// arclength over the horizontal extent of each chart edge.
    pub fn mu_eps_exact(mesh: &TriMesh, map: &PerturbationMap) -> Self {
        let rule = GaussRule::new(8);
        let k = map.cells as f64;
        let weights = mesh
            .boundary_edges
            .iter()
            .map(|e| {
                if e.tag != EdgeTag::Chart {
                    return e.length;
                }
                let (a, b) = (mesh.nodes[e.nodes[0]][0], mesh.nodes[e.nodes[1]][0]);
                let (lo, hi) = (a.min(b), a.max(b));
                let panels = ((hi - lo) * k * 16.0).ceil().max(1.0) as usize;
                rule.composite(lo, hi, panels, |x| {
                    let s = map.phi.derivative(x) + map.amplitude() * k * map.osc.fprime(x * k);
                    (1.0 + s * s).sqrt()
                })
            })
            .collect();
        Self::from_weights(MeasureId::MuEps { eps: map.eps }, weights)
    }

    /// Discrete `μ_ε` on `base`: the boundary length of a mesh of `Ω_ε`
    /// transported through the reference coordinate, so that totals and
    /// window measures are preserved exactly.
    pub fn mu_eps_pushforward(base: &TriMesh, eps_mesh: &TriMesh, eps: f64) -> Result<Self> {
        check_same_period(base, eps_mesh)?;
        let mut weights = vec![0.0; base.boundary_edges.len()];
        for_each_overlap(base, eps_mesh, |b, e, overlap| {
            let src = &eps_mesh.boundary_edges[e];
            weights[b] += src.length * overlap / (src.ref_end - src.ref_start);
        });
        Ok(Self::from_weights(MeasureId::MuEps { eps }, weights))
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn measure_of(&self, window: &Window) -> Result<f64> {
        check_window(self, window)?;
        Ok(window.fractions.iter().zip(&self.weights).map(|(f, w)| f * w).sum())
    }

    /// `χ_Γ μ`: the window measure `ν_ε` or `ν*`.
    pub fn restricted(&self, window: &Window) -> Result<Self> {
        check_window(self, window)?;
        let id = match self.id {
            MeasureId::MuEps { eps } => MeasureId::NuEps { eps },
            MeasureId::MuStar => MeasureId::NuStar,
            other => other,
        };
        Ok(Self::from_weights(id, window.fractions.iter().zip(&self.weights).map(|(f, w)| f * w).collect()))
    }

    /// Same weights, multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self::from_weights(self.id, self.weights.iter().map(|w| c * w).collect())
    }
}

fn check_window(measure: &DiscreteBoundaryMeasure, window: &Window) -> Result<()> {
    if measure.weights.len() != window.fractions.len() {
        return Err(Error::Measure(format!(
            "window has {} edges, measure has {}",
            window.fractions.len(),
            measure.weights.len()
        )));
    }
    Ok(())
}

fn check_same_period(a: &TriMesh, b: &TriMesh) -> Result<()> {
    if (a.ref_period - b.ref_period).abs() > 1e-12 * a.ref_period {
        return Err(Error::Measure("meshes do not share a reference boundary".into()));
    }
    Ok(())
}

/// Calls `f(base_edge, other_edge, overlap)` for every pair of edges whose
/// reference intervals overlap. Both edge lists are sorted by reference
/// coordinate, so one merge pass suffices.
fn for_each_overlap(base: &TriMesh, other: &TriMesh, mut f: impl FnMut(usize, usize, f64)) {
    let (be, oe) = (&base.boundary_edges, &other.boundary_edges);
    let (mut i, mut j) = (0, 0);
    while i < be.len() && j < oe.len() {
        let lo = be[i].ref_start.max(oe[j].ref_start);
        let hi = be[i].ref_end.min(oe[j].ref_end);
        if hi > lo {
            f(i, j, hi - lo);
        }
        if be[i].ref_end <= oe[j].ref_end {
            i += 1;
        } else {
            j += 1;
        }
    }
}

/// Transports a window on a mesh of `Ω_ε` to the base boundary.
///
/// Each source edge contributes the initial portion of its reference
/// interval given by its fraction. Base fractions are relative to the
/// discrete `μ_ε` of [`DiscreteBoundaryMeasure::mu_eps_pushforward`], so the
/// pulled-back window has exactly the `μ_ε` measure of the original one.
pub fn pullback_window(
    window: &Window,
    eps_mesh: &TriMesh,
    base: &TriMesh,
    mu_eps: &DiscreteBoundaryMeasure,
) -> Result<Window> {
    if window.fractions.len() != eps_mesh.boundary_edges.len() {
        return Err(Error::Measure("window does not live on the oscillating mesh".into()));
    }
    if mu_eps.weights.len() != base.boundary_edges.len() {
        return Err(Error::Measure("measure does not live on the base mesh".into()));
    }
    check_same_period(base, eps_mesh)?;
    let mut covered = vec![0.0; base.boundary_edges.len()];
    for_each_overlap(base, eps_mesh, |b, e, _| {
        let frac = window.fractions[e];
        if frac <= 0.0 {
            return;
        }
        let src = &eps_mesh.boundary_edges[e];
        let span = src.ref_end - src.ref_start;
        let cov_hi = src.ref_start + frac * span;
        let lo = base.boundary_edges[b].ref_start.max(src.ref_start);
        let hi = base.boundary_edges[b].ref_end.min(cov_hi);
        if hi > lo {
            covered[b] += src.length * (hi - lo) / span;
        }
    });
    let fractions: Vec<f64> =
        covered.iter().zip(&mu_eps.weights).map(|(c, w)| if *w > 0.0 { (c / w).min(1.0) } else { 0.0 }).collect();
    Ok(Window::from_fractions(fractions, &mu_eps.weights, window.alpha))
}

/// `μ(A Δ B)` from edge fractions.
pub fn symmetric_difference_measure(a: &Window, b: &Window, measure: &DiscreteBoundaryMeasure) -> Result<f64> {
    if a.fractions.len() != b.fractions.len() || a.fractions.len() != measure.weights.len() {
        return Err(Error::Measure("windows live on different boundary discretizations".into()));
    }
    Ok(a.fractions.iter().zip(&b.fractions).zip(&measure.weights).map(|((fa, fb), w)| (fa - fb).abs() * w).sum())
}

/// Mirror image of a window under `x ↦ 1 − x`, re-projected onto the same
/// boundary edges by reference-coordinate overlap.
pub fn reflect_window(window: &Window, mesh: &TriMesh, measure: &DiscreteBoundaryMeasure) -> Result<Window> {
    if window.fractions.len() != mesh.boundary_edges.len() {
        return Err(Error::Measure("window does not live on this mesh".into()));
    }
    let period = mesh.ref_period;
    // covered intervals, mirrored: τ ↦ 1 − τ (mod period)
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (e, f) in mesh.boundary_edges.iter().zip(&window.fractions) {
        if *f <= 0.0 {
            continue;
        }
        let hi = e.ref_start + f * (e.ref_end - e.ref_start);
        let (a, b) = ((1.0 - hi).rem_euclid(period), (1.0 - e.ref_start).rem_euclid(period));
        if a <= b || b == 0.0 {
            intervals.push((a, if b == 0.0 { period } else { b }));
        } else {
            intervals.push((a, period));
            intervals.push((0.0, b));
        }
    }
    let fractions: Vec<f64> = mesh
        .boundary_edges
        .iter()
        .map(|e| {
            let span = e.ref_end - e.ref_start;
            let cov: f64 = intervals.iter().map(|&(a, b)| (b.min(e.ref_end) - a.max(e.ref_start)).max(0.0)).sum();
            (cov / span).min(1.0)
        })
        .collect();
    Ok(Window::from_fractions(fractions, &measure.weights, window.alpha))
}

/// `min(μ(A Δ B), μ(R(A) Δ B))` with `R` the mirror symmetry of the square.
pub fn best_reflection_difference(
    a: &Window,
    b: &Window,
    mesh: &TriMesh,
    measure: &DiscreteBoundaryMeasure,
) -> Result<f64> {
    let direct = symmetric_difference_measure(a, b, measure)?;
    let mirrored = symmetric_difference_measure(&reflect_window(a, mesh, measure)?, b, measure)?;
    Ok(direct.min(mirrored))
}

/// Measure of the boundary where `0 < (|u₀| + |u₁|)/2 ≤ 1/j` edgewise.
pub fn small_value_mass(u: &TraceEigenpair, j: u32, mesh: &TriMesh, measure: &DiscreteBoundaryMeasure) -> Result<f64> {
    if j == 0 {
        return Err(Error::config("j", "level index must be at least 1"));
    }
    if measure.weights.len() != mesh.boundary_edges.len() {
        return Err(Error::Shape { expected: mesh.boundary_edges.len(), got: measure.weights.len() });
    }
    let level = 1.0 / j as f64;
    Ok(mesh
        .boundary_edges
        .iter()
        .zip(&measure.weights)
        .filter(|(e, _)| {
            let avg = 0.5 * (u.u[e.nodes[0]].abs() + u.u[e.nodes[1]].abs());
            avg > 0.0 && avg <= level
        })
        .map(|(_, w)| w)
        .sum())
}

/// `∫ f dν_ε − ∫ f dν*` on the base boundary and its three-term split
/// `A = ∫ (f∘T⁻¹ − f) dν_ε`, `B = ∫ f (χ_ε − χ*) dμ_ε`, `C = ∫ f χ* (dμ_ε − dμ*)`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct WeakMeasureResult {
    pub value: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub struct WeakMeasureInputs<'a> {
    pub mesh: &'a TriMesh,
    pub map: Option<&'a PerturbationMap>,
    pub window_eps: &'a Window,
    pub mu_eps: &'a DiscreteBoundaryMeasure,
    pub window_star: &'a Window,
    pub mu_star: &'a DiscreteBoundaryMeasure,
}

pub fn weak_measure_test(f: &dyn Fn([f64; 2]) -> f64, inp: &WeakMeasureInputs<'_>) -> Result<WeakMeasureResult> {
    let n = inp.mesh.boundary_edges.len();
    for len in [
        inp.window_eps.fractions.len(),
        inp.mu_eps.weights.len(),
        inp.window_star.fractions.len(),
        inp.mu_star.weights.len(),
    ] {
        if len != n {
            return Err(Error::Measure("inputs live on different boundary discretizations".into()));
        }
    }
    let mut r = WeakMeasureResult::default();
    for (i, e) in inp.mesh.boundary_edges.iter().enumerate() {
        let (p, q) = (inp.mesh.nodes[e.nodes[0]], inp.mesh.nodes[e.nodes[1]]);
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let fy = f(mid);
        let fx = match (inp.map, e.tag) {
            (Some(map), EdgeTag::Chart) => f(map.inverse(mid)?),
            _ => fy,
        };
        let (ce, cs) = (inp.window_eps.fractions[i], inp.window_star.fractions[i]);
        let (me, ms) = (inp.mu_eps.weights[i], inp.mu_star.weights[i]);
        r.a += (fx - fy) * ce * me;
        r.b += fy * (ce - cs) * me;
        r.c += fy * cs * (me - ms);
    }
    r.value = (r.a + r.b + r.c).abs();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_base_domain, build_perturbed_boundary, generate_mesh, ChartFn, DomainKind, OscillationSpec,
    };
    use proptest::prelude::*;

    fn square(h: f64) -> TriMesh {
        let d = build_base_domain(DomainKind::SquareTopChart, ChartFn::flat(1.0), h).unwrap();
        generate_mesh(&d, h).unwrap()
    }

    fn perturbed(k: usize, h: f64) -> TriMesh {
        let d = build_base_domain(DomainKind::SquareTopChart, ChartFn::flat(1.0), h).unwrap();
        let p = build_perturbed_boundary(&d, &OscillationSpec::sin_squared(1.0).unwrap(), 1.0 / k as f64).unwrap();
        generate_mesh(&p, h).unwrap()
    }

    #[test]
    fn symmetric_difference_examples() {
        let m = square(0.1);
        let s = DiscreteBoundaryMeasure::surface(&m);
        let a = Window::contiguous_arc(&s.weights, 0.2, 0).unwrap();
        assert_eq!(symmetric_difference_measure(&a, &a, &s).unwrap(), 0.0);
        let n = s.weights.len();
        let b = Window::contiguous_arc(&s.weights, 0.2, n / 2).unwrap();
        let d = symmetric_difference_measure(&a, &b, &s).unwrap();
        assert!((d - 2.0 * 0.2 * 4.0).abs() < 1e-12);
        // whole-edge arc shifted by one edge
        let full: Vec<f64> = (0..n).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect();
        let shifted: Vec<f64> = (0..n).map(|i| if (1..6).contains(&i) { 1.0 } else { 0.0 }).collect();
        let wa = Window::from_fractions(full, &s.weights, 0.1);
        let wb = Window::from_fractions(shifted, &s.weights, 0.1);
        let d = symmetric_difference_measure(&wa, &wb, &s).unwrap();
        assert!((d - s.weights[0] - s.weights[5]).abs() < 1e-15);
        let other = DiscreteBoundaryMeasure::surface(&square(0.25));
        assert!(matches!(symmetric_difference_measure(&a, &a, &other), Err(Error::Measure(_))));
    }

    #[test]
    fn pushforward_preserves_totals_and_window_measures() {
        let base = square(1.0 / 32.0);
        let eps_mesh = perturbed(8, 1.0 / 64.0);
        let mu = DiscreteBoundaryMeasure::mu_eps_pushforward(&base, &eps_mesh, 0.125).unwrap();
        assert!((mu.total() - eps_mesh.total_boundary_length).abs() < 1e-10);
        let surf = DiscreteBoundaryMeasure::surface(&eps_mesh);
        let w = Window::contiguous_arc(&surf.weights, 0.3, 40).unwrap();
        let pulled = pullback_window(&w, &eps_mesh, &base, &mu).unwrap();
        assert!((mu.measure_of(&pulled).unwrap() - w.measure).abs() < 1e-8);
        let nu = mu.restricted(&pulled).unwrap();
        assert!((nu.total() - 0.3 * mu.total()).abs() < 1e-8);
    }

    #[test]
    fn pushforward_exact_measure_agrees() {
        let d = build_base_domain(DomainKind::SquareTopChart, ChartFn::flat(1.0), 1.0 / 64.0).unwrap();
        let base = generate_mesh(&d, 1.0 / 64.0).unwrap();
        let osc = OscillationSpec::sin_squared(1.0).unwrap();
        let map = PerturbationMap::new(ChartFn::flat(1.0), osc, 0.125).unwrap();
        let exact = DiscreteBoundaryMeasure::mu_eps_exact(&base, &map);
        // the oscillating mesh boundary is an inscribed polyline, so the gap is
        // second order in its spacing
        let gap = |h: f64| {
            let discrete = DiscreteBoundaryMeasure::mu_eps_pushforward(&base, &perturbed(8, h), 0.125).unwrap();
            (exact.total() - discrete.total()).abs() / exact.total()
        };
        let (coarse, fine) = (gap(1.0 / 128.0), gap(1.0 / 256.0));
        assert!(coarse < 2e-3, "{coarse}");
        assert!(fine < coarse / 3.0, "{fine} vs {coarse}");
    }

    #[test]
    fn pullback_of_whole_chart_and_off_chart_arcs() {
        let base = square(1.0 / 32.0);
        let eps_mesh = perturbed(8, 1.0 / 64.0);
        let mu = DiscreteBoundaryMeasure::mu_eps_pushforward(&base, &eps_mesh, 0.125).unwrap();
        let surf = DiscreteBoundaryMeasure::surface(&eps_mesh);
        let chart: Vec<f64> =
            eps_mesh.boundary_edges.iter().map(|e| if e.tag == EdgeTag::Chart { 1.0 } else { 0.0 }).collect();
        let w = Window::from_fractions(chart, &surf.weights, 0.5);
        let pulled = pullback_window(&w, &eps_mesh, &base, &mu).unwrap();
        for (e, f) in base.boundary_edges.iter().zip(&pulled.fractions) {
            let expect = if e.tag == EdgeTag::Chart { 1.0 } else { 0.0 };
            assert!((f - expect).abs() < 1e-9);
        }
        let chart_len: f64 = eps_mesh.boundary_edges.iter().filter(|e| e.tag == EdgeTag::Chart).map(|e| e.length).sum();
        assert!((pulled.measure - chart_len).abs() < 1e-9);
        // bottom arc: unchanged, surface weights
        let bottom: Vec<f64> =
            eps_mesh.boundary_edges.iter().map(|e| if e.ref_end <= 0.5 { 1.0 } else { 0.0 }).collect();
        let wb = Window::from_fractions(bottom, &surf.weights, 0.1);
        let pb = pullback_window(&wb, &eps_mesh, &base, &mu).unwrap();
        for (e, f) in base.boundary_edges.iter().zip(&pb.fractions) {
            let expect = if e.ref_end <= 0.5 + 1e-12 { 1.0 } else { 0.0 };
            assert!((f - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn pullback_without_oscillation_is_the_identity() {
        let base = square(1.0 / 16.0);
        let mu = DiscreteBoundaryMeasure::mu_eps_pushforward(&base, &base, 0.5).unwrap();
        let s = DiscreteBoundaryMeasure::surface(&base);
        let w = Window::contiguous_arc(&s.weights, 0.3, 7).unwrap();
        let p = pullback_window(&w, &base, &base, &mu).unwrap();
        for (a, b) in w.fractions.iter().zip(&p.fractions) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reflection_is_an_involution_on_symmetric_meshes() {
        let m = square(0.125);
        let s = DiscreteBoundaryMeasure::surface(&m);
        let w = Window::contiguous_arc(&s.weights, 0.3, 3).unwrap();
        let r = reflect_window(&w, &m, &s).unwrap();
        assert!((r.measure - w.measure).abs() < 1e-12);
        let rr = reflect_window(&r, &m, &s).unwrap();
        assert!(symmetric_difference_measure(&w, &rr, &s).unwrap() < 1e-12);
        assert!(best_reflection_difference(&r, &w, &m, &s).unwrap() < 1e-12);
    }

    #[test]
    fn small_value_mass_examples() {
        let m = square(0.25);
        let s = DiscreteBoundaryMeasure::surface(&m);
        let mk = |v: f64| TraceEigenpair::new_for_tests(vec![v; m.num_nodes()]);
        assert_eq!(small_value_mass(&mk(1.0), 2, &m, &s).unwrap(), 0.0);
        assert_eq!(small_value_mass(&mk(0.0), 2, &m, &s).unwrap(), 0.0);
        assert!((small_value_mass(&mk(0.4), 2, &m, &s).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weak_measure_trivial_cases() {
        let m = square(0.125);
        let s = DiscreteBoundaryMeasure::surface(&m);
        let w = Window::contiguous_arc(&s.weights, 0.3, 0).unwrap();
        let inp = WeakMeasureInputs { mesh: &m, map: None, window_eps: &w, mu_eps: &s, window_star: &w, mu_star: &s };
        assert_eq!(weak_measure_test(&|_| 0.0, &inp).unwrap().value, 0.0);
        assert_eq!(weak_measure_test(&|_| 1.0, &inp).unwrap().value, 0.0);
    }

    #[test]
    fn dyadic_chart_arcs_converge_in_measure() {
        let phi = ChartFn::polynomial(vec![1.0, 0.3, -0.3]);
        let d = build_base_domain(DomainKind::SquareTopChart, phi.clone(), 1.0 / 128.0).unwrap();
        let base = generate_mesh(&d, 1.0 / 128.0).unwrap();
        let osc = OscillationSpec::sin_squared(1.0).unwrap();
        let field = WeightField::new(&phi, &osc, 64);
        let star = DiscreteBoundaryMeasure::mu_star(&base, &field);
        let mut prev = f64::INFINITY;
        for k in [16usize, 32, 64, 128] {
            let map = PerturbationMap::new(phi.clone(), osc.clone(), 1.0 / k as f64).unwrap();
            let mu = DiscreteBoundaryMeasure::mu_eps_exact(&base, &map);
            let mut worst: f64 = 0.0;
            for j in 0..16 {
                let (lo, hi) = (j as f64 / 16.0, (j + 1) as f64 / 16.0);
                let sel = |w: &DiscreteBoundaryMeasure| -> f64 {
                    base.boundary_edges
                        .iter()
                        .zip(&w.weights)
                        .filter(|(e, _)| {
                            let x = 0.5 * (base.nodes[e.nodes[0]][0] + base.nodes[e.nodes[1]][0]);
                            e.tag == EdgeTag::Chart && x >= lo && x < hi
                        })
                        .map(|(_, w)| w)
                        .sum()
                };
                worst = worst.max((sel(&mu) - sel(&star)).abs());
            }
            assert!(worst <= prev + 1e-12, "k = {k}: {worst} vs {prev}");
            prev = worst;
        }
    }

    proptest! {
        #[test]
        fn symmetric_difference_triangle_inequality(
            fa in prop::collection::vec(0.0f64..1.0, 20),
            fb in prop::collection::vec(0.0f64..1.0, 20),
            fc in prop::collection::vec(0.0f64..1.0, 20),
            w in prop::collection::vec(0.0f64..2.0, 20),
        ) {
            let mu = DiscreteBoundaryMeasure::from_weights(MeasureId::Surface, w.clone());
            let (a, b, c) = (
                Window::from_fractions(fa, &w, 0.5),
                Window::from_fractions(fb, &w, 0.5),
                Window::from_fractions(fc, &w, 0.5),
            );
            let ab = symmetric_difference_measure(&a, &b, &mu).unwrap();
            let bc = symmetric_difference_measure(&b, &c, &mu).unwrap();
            let ac = symmetric_difference_measure(&a, &c, &mu).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
