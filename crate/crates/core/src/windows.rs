//! Dirichlet windows of prescribed measure and their optimisation.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::fem::{solve, solve_with, EnergyFunctional, SolverConfig, TraceEigenpair};
use crate::geometry::TriMesh;
use crate::measures::DiscreteBoundaryMeasure;
use crate::transforms::WeightField;
use crate::{Error, Result};

/// Boundary subset as per-edge fractions. A fractional edge is read as its
/// initial portion in the boundary orientation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Window {
    pub fractions: Vec<f64>,
    /// `Σ fraction · weight` under the measure the window was built with.
    pub measure: f64,
    pub target: f64,
    pub alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn weighted_sum(fractions: &[f64], weights: &[f64]) -> f64 {
    fractions.iter().zip(weights).map(|(f, w)| f * w).sum()
}

impl Window {
    pub fn empty(edges: usize) -> Self {
        Self { fractions: vec![0.0; edges], measure: 0.0, target: 0.0, alpha: 0.0 }
    }

    /// Window with the given fractions; the target is `alpha` times the total weight.
    pub fn from_fractions(fractions: Vec<f64>, weights: &[f64], alpha: f64) -> Self {
        let measure = weighted_sum(&fractions, weights);
        Self { fractions, measure, target: alpha * weights.iter().sum::<f64>(), alpha }
    }

    /// Fills edges in the order given until `alpha` of the total weight is
    /// reached, splitting the last one.
    fn fill(order: impl Iterator<Item = usize>, weights: &[f64], alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Measure("boundary weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        let target = alpha * total;
        let mut fractions = vec![0.0; weights.len()];
        let mut acc = 0.0;
        for e in order {
            let w = weights[e];
            if w == 0.0 {
                continue;
            }
            if acc + w < target {
                fractions[e] = 1.0;
                acc += w;
            } else {
                fractions[e] = ((target - acc) / w).clamp(0.0, 1.0);
                break;
            }
        }
        Ok(Self { measure: weighted_sum(&fractions, weights), fractions, target, alpha })
    }

    /// Contiguous arc of measure `alpha · total` beginning at edge `start`
    /// and running along the boundary orientation.
    pub fn contiguous_arc(weights: &[f64], alpha: f64, start: usize) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::Measure("no boundary edges".into()));
        }
        Self::fill((0..n).map(|i| (start + i) % n), weights, alpha)
    }

    /// Majority rule: both endpoints of every edge with fraction above one
    /// half are pinned.
    pub fn pinned_nodes(&self, mesh: &TriMesh) -> Vec<bool> {
        let mut pinned = vec![false; mesh.num_nodes()];
        for (e, f) in mesh.boundary_edges.iter().zip(&self.fractions) {
            if *f > 0.5 {
                pinned[e.nodes[0]] = true;
                pinned[e.nodes[1]] = true;
            }
        }
        pinned
    }

    pub fn changed_edges(&self, other: &Window) -> usize {
        self.fractions.iter().zip(&other.fractions).filter(|(a, b)| (*a - *b).abs() > 1e-12).count()
    }

    /// `edge,fraction,arc_start,arc_end`.
    pub fn write_csv<W: Write>(&self, mesh: &TriMesh, mut w: W) -> Result<()> {
        if self.fractions.len() != mesh.boundary_edges.len() {
            return Err(Error::Shape { expected: mesh.boundary_edges.len(), got: self.fractions.len() });
        }
        writeln!(w, "edge,fraction,arc_start,arc_end")?;
        for (i, (e, f)) in mesh.boundary_edges.iter().zip(&self.fractions).enumerate() {
            writeln!(w, "{i},{:.12e},{:.12e},{:.12e}", f, e.arc_start, e.arc_start + e.length)?;
        }
        Ok(())
    }
}

/// Sublevel set of the edge averages `(|u₀|^p + |u₁|^p)/2` with measure
/// `alpha` times the total; ties go to the lower edge index.
pub fn bathtub_update(
    u: &TraceEigenpair,
    alpha: f64,
    mesh: &TriMesh,
    measure: &DiscreteBoundaryMeasure,
) -> Result<Window> {
    check_alpha(alpha)?;
    if u.u.len() != mesh.num_nodes() {
        return Err(Error::Shape { expected: mesh.num_nodes(), got: u.u.len() });
    }
    if measure.weights.len() != mesh.boundary_edges.len() {
        return Err(Error::Shape { expected: mesh.boundary_edges.len(), got: measure.weights.len() });
    }
    let level: Vec<f64> = mesh
        .boundary_edges
        .iter()
        .map(|e| 0.5 * (u.u[e.nodes[0]].abs().powf(u.p) + u.u[e.nodes[1]].abs().powf(u.p)))
        .collect();
    let mut order: Vec<usize> = (0..level.len()).collect();
    order.sort_by(|&a, &b| level[a].total_cmp(&level[b]).then(a.cmp(&b)));
    Window::fill(order.into_iter(), &measure.weights, alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub solver: SolverConfig,
    /// Bathtub steps per start.
    pub max_iter: usize,
    /// Extra starts, each rotated by one more edge from the best arc.
    pub restarts: usize,
    /// Arc starts tried before the bathtub steps, equally spaced in edge index;
    /// every edge is tried when this exceeds the edge count.
    pub scan_starts: usize,
    /// Largest boundary penalty, relative to the current eigenvalue, that
    /// stands in for the window while computing a bathtub step.
    pub penalty: f64,
    /// Number of halvings of the penalty tried per step.
    pub penalty_levels: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            max_iter: 50,
            restarts: 3,
            scan_starts: 64,
            penalty: 16.0,
            penalty_levels: 10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be positive"));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::config("penalty", "must be positive"));
        }
        if self.penalty_levels == 0 {
            return Err(Error::config("penalty_levels", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Scan,
    Shift,
    Bathtub,
    Restart,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub kind: StepKind,
    pub lambda: f64,
    pub measure: f64,
    pub changed: usize,
    pub accepted: bool,
    /// Best eigenvalue seen so far, after this step.
    pub best_lambda: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OptimizationTrace {
    pub steps: Vec<TraceStep>,
    pub best_lambda: f64,
    pub restarts_used: usize,
}

#[derive(Clone, Debug)]
pub struct OptimizedWindow {
    pub window: Window,
    pub eigenpair: TraceEigenpair,
    pub trace: OptimizationTrace,
}

struct Search<'a, 'm> {
    energy: &'a EnergyFunctional<'m>,
    measure: &'a DiscreteBoundaryMeasure,
    cfg: &'a OptimizerConfig,
    alpha: f64,
    trace: OptimizationTrace,
    best: Option<(Window, TraceEigenpair)>,
}

impl Search<'_, '_> {
    fn best_lambda(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.1.lambda)
    }

    /// Solves with `window`, records the step and keeps the best pair.
    fn evaluate(&mut self, kind: StepKind, window: Window, changed: usize) -> Result<f64> {
        let pair = solve(self.energy, &window, self.measure, &self.cfg.solver)?;
        let lambda = pair.lambda;
        let accepted = lambda < self.best_lambda();
        if accepted {
            self.best = Some((window.clone(), pair));
        }
        self.trace.steps.push(TraceStep {
            kind,
            lambda,
            measure: window.measure,
            changed,
            accepted,
            best_lambda: self.best_lambda(),
        });
        Ok(lambda)
    }

    fn arc(&self, start: usize) -> Result<Window> {
        Window::contiguous_arc(&self.measure.weights, self.alpha, start)
    }

    /// Arc scan followed by a pattern search on the start edge.
    fn scan_arcs(&mut self) -> Result<usize> {
        let n = self.measure.weights.len();
        let count = self.cfg.scan_starts.clamp(1, n);
        let mut starts: Vec<usize> = (0..count).map(|j| j * n / count).collect();
        starts.dedup();
        let mut best = (f64::INFINITY, 0);
        for s in starts {
            let l = self.evaluate(StepKind::Scan, self.arc(s)?, 0)?;
            if l < best.0 {
                best = (l, s);
            }
        }
        let mut step = (n / count / 2).max(1);
        loop {
            let mut moved = false;
            for cand in [(best.1 + step) % n, (best.1 + n - step) % n] {
                let l = self.evaluate(StepKind::Shift, self.arc(cand)?, step)?;
                if l < best.0 {
                    best = (l, cand);
                    moved = true;
                }
            }
            if !moved {
                if step == 1 {
                    break;
                }
                step /= 2;
            }
        }
        Ok(best.1)
    }

    /// Alternating relaxed solves and bathtub steps from `window`. Each step
    /// tries a ladder of penalties and keeps the best proposal; a step that
    /// does not lower `λ` is rejected and ends the run.
    fn alternate(&mut self, mut window: Window, kind: StepKind) -> Result<()> {
        let mesh = self.energy.mesh;
        let tol = self.cfg.solver.tol_lambda;
        let mut lambda = self.evaluate(kind, window.clone(), 0)?;
        for _ in 0..self.cfg.max_iter {
            let mut proposal: Option<(f64, Window, TraceEigenpair, usize)> = None;
            for level in 0..self.cfg.penalty_levels {
                let c = self.cfg.penalty * 0.5f64.powi(level as i32) * lambda;
                let robin = self.measure.restricted(&window)?.scaled(c);
                let free = Window::empty(window.fractions.len());
                let relaxed = solve_with(self.energy, &free, self.measure, Some(&robin), &self.cfg.solver)?;
                let next = bathtub_update(&relaxed, self.alpha, mesh, self.measure)?;
                let changed = next.changed_edges(&window);
                if changed == 0 || proposal.as_ref().is_some_and(|p| p.1 == next) {
                    continue;
                }
                let pair = solve(self.energy, &next, self.measure, &self.cfg.solver)?;
                if proposal.as_ref().is_none_or(|p| pair.lambda < p.0) {
                    proposal = Some((pair.lambda, next, pair, changed));
                }
            }
            let Some((l, next, pair, changed)) = proposal else { break };
            let accepted = l < lambda * (1.0 - tol);
            if accepted && l < self.best_lambda() {
                self.best = Some((next.clone(), pair));
            }
            self.trace.steps.push(TraceStep {
                kind: StepKind::Bathtub,
                lambda: l,
                measure: next.measure,
                changed,
                accepted,
                best_lambda: self.best_lambda(),
            });
            if !accepted {
                break;
            }
            window = next;
            lambda = l;
        }
        Ok(())
    }
}

/// Alternating window search for `inf λ(Γ)` over windows of measure
/// `alpha` under `measure`.
///
/// Contiguous arcs with equally spaced starts are scanned first and the
/// best start is refined by a pattern search. The best arc then seeds the
/// alternating bathtub steps, and rejected runs restart from that arc
/// rotated by one more edge.
pub fn optimize_window(
    energy: &EnergyFunctional<'_>,
    alpha: f64,
    measure: &DiscreteBoundaryMeasure,
    cfg: &OptimizerConfig,
) -> Result<OptimizedWindow> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let mut search = Search { energy, measure, cfg, alpha, trace: OptimizationTrace::default(), best: None };
    let start = if cfg.scan_starts == 0 { 0 } else { search.scan_arcs()? };
    run_alternation(search, start, None)
}

/// Alternating bathtub steps only, from a caller-supplied window. Restarts
/// are arcs anchored at edges `1, 2, …`.
pub fn optimize_window_from(
    energy: &EnergyFunctional<'_>,
    first: Window,
    measure: &DiscreteBoundaryMeasure,
    cfg: &OptimizerConfig,
) -> Result<OptimizedWindow> {
    check_alpha(first.alpha)?;
    cfg.validate()?;
    if first.fractions.len() != measure.weights.len() {
        return Err(Error::Shape { expected: measure.weights.len(), got: first.fractions.len() });
    }
    let search = Search { energy, measure, cfg, alpha: first.alpha, trace: OptimizationTrace::default(), best: None };
    run_alternation(search, 0, Some(first))
}

fn run_alternation(mut search: Search<'_, '_>, start: usize, first: Option<Window>) -> Result<OptimizedWindow> {
    let n = search.measure.weights.len();
    let first = match first {
        Some(w) => w,
        None => search.arc(start)?,
    };
    search.alternate(first, StepKind::Bathtub)?;
    for r in 1..=search.cfg.restarts.min(n.saturating_sub(1)) {
        let w = search.arc((start + r) % n)?;
        search.alternate(w, StepKind::Restart)?;
        search.trace.restarts_used = r;
    }
    let (window, eigenpair) = search.best.expect("at least one window is evaluated");
    let mut trace = search.trace;
    trace.best_lambda = eigenpair.lambda;
    Ok(OptimizedWindow { window, eigenpair, trace })
}

/// The weighted limit problem: the same search with `dμ* = m dS` in both
/// the window constraint and the boundary norm.
pub fn solve_limit_problem(
    energy: &EnergyFunctional<'_>,
    field: &WeightField,
    alpha: f64,
    cfg: &OptimizerConfig,
) -> Result<OptimizedWindow> {
    let mu = DiscreteBoundaryMeasure::mu_star(energy.mesh, field);
    optimize_window(energy, alpha, &mu, cfg)
}

#[derive(Serialize)]
struct WindowSummary {
    alpha: f64,
    lambda: f64,
    measure: f64,
    iterations: usize,
    restarts: usize,
}

pub fn write_window_summary<W: Write>(opt: &OptimizedWindow, w: W) -> Result<()> {
    let s = WindowSummary {
        alpha: opt.window.alpha,
        lambda: opt.eigenpair.lambda,
        measure: opt.window.measure,
        iterations: opt.trace.steps.len(),
        restarts: opt.trace.restarts_used,
    };
    serde_json::to_writer_pretty(w, &s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_base_domain, generate_mesh, ChartFn, DomainKind, OscillationSpec};
    use crate::measures::symmetric_difference_measure;
    use proptest::prelude::*;

    fn square(h: f64) -> TriMesh {
        let d = build_base_domain(DomainKind::SquareTopChart, ChartFn::flat(1.0), h).unwrap();
        generate_mesh(&d, h).unwrap()
    }

    fn pair_from(mesh: &TriMesh, f: impl Fn([f64; 2]) -> f64) -> TraceEigenpair {
        TraceEigenpair::new_for_tests(mesh.nodes.iter().map(|p| f(*p)).collect())
    }

    #[test]
    fn arc_construction_hits_the_target() {
        let m = square(0.1);
        let s = DiscreteBoundaryMeasure::surface(&m);
        for start in [0, 7, 39] {
            let w = Window::contiguous_arc(&s.weights, 0.3, start).unwrap();
            assert!((w.measure - 1.2).abs() <= 1e-12);
            assert!(w.fractions.iter().filter(|f| **f > 0.0 && **f < 1.0).count() <= 1);
        }
        assert!(Window::contiguous_arc(&s.weights, 1.2, 0).unwrap_err().is_config());
        assert!(Window::contiguous_arc(&s.weights, 0.0, 0).unwrap_err().is_config());
    }

    #[test]
    fn bathtub_on_constant_fills_in_index_order() {
        let m = square(0.25);
        let s = DiscreteBoundaryMeasure::surface(&m);
        let w = bathtub_update(&pair_from(&m, |_| 1.0), 0.3, &m, &s).unwrap();
        assert_eq!(w, Window::contiguous_arc(&s.weights, 0.3, 0).unwrap());
    }

    #[test]
    fn bathtub_recovers_the_null_arc() {
        let m = square(0.125);
        let s = DiscreteBoundaryMeasure::surface(&m);
        // vanishes on the bottom side, which is a quarter of the boundary
        let w = bathtub_update(&pair_from(&m, |p| p[1]), 0.25, &m, &s).unwrap();
        for (e, f) in m.boundary_edges.iter().zip(&w.fractions) {
            let on_bottom = e.ref_end <= 1.0 + 1e-12;
            assert_eq!(*f, if on_bottom { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn bathtub_after_a_solve_has_the_right_measure() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let s = DiscreteBoundaryMeasure::surface(&m);
        let w0 = Window::contiguous_arc(&s.weights, 0.3, 5).unwrap();
        let u = solve(&e, &w0, &s, &SolverConfig::default()).unwrap();
        let w = bathtub_update(&u, 0.3, &m, &s).unwrap();
        assert!((w.measure - 0.3 * s.total()).abs() <= 1e-12);
    }

    #[test]
    fn optimizer_trace_and_constraints() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let s = DiscreteBoundaryMeasure::surface(&m);
        let opt = optimize_window(&e, 0.3, &s, &OptimizerConfig::default()).unwrap();
        assert!((opt.window.measure - 1.2).abs() <= 1e-12);
        for pair in opt.trace.steps.windows(2) {
            assert!(pair[1].best_lambda <= pair[0].best_lambda);
        }
        for step in &opt.trace.steps {
            assert!((step.measure - 1.2).abs() <= 1e-12);
        }
        assert_eq!(opt.trace.best_lambda, opt.eigenpair.lambda);
        let arc0 =
            solve(&e, &Window::contiguous_arc(&s.weights, 0.3, 0).unwrap(), &s, &SolverConfig::default()).unwrap();
        assert!(opt.eigenpair.lambda <= arc0.lambda);
    }

    #[test]
    fn tiny_windows_barely_move_lambda() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let s = DiscreteBoundaryMeasure::surface(&m);
        let free = solve(&e, &Window::empty(s.weights.len()), &s, &SolverConfig::default()).unwrap();
        let opt = optimize_window(&e, 0.01, &s, &OptimizerConfig::default()).unwrap();
        assert!(opt.eigenpair.lambda >= free.lambda * (1.0 - 1e-10));
        assert!(opt.eigenpair.lambda <= 1.05 * free.lambda);
    }

    #[test]
    fn lambda_grows_with_alpha() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let s = DiscreteBoundaryMeasure::surface(&m);
        let l: Vec<f64> = [0.1, 0.3, 0.5]
            .iter()
            .map(|a| optimize_window(&e, *a, &s, &OptimizerConfig::default()).unwrap().eigenpair.lambda)
            .collect();
        assert!(l[0] <= l[1] && l[1] <= l[2], "{l:?}");
    }

    #[test]
    fn limit_problem_without_oscillation_is_the_plain_problem() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let field = WeightField::new(&ChartFn::flat(1.0), &OscillationSpec::zero(1.0).unwrap(), 32);
        let lim = solve_limit_problem(&e, &field, 0.3, &OptimizerConfig::default()).unwrap();
        let plain =
            optimize_window(&e, 0.3, &DiscreteBoundaryMeasure::surface(&m), &OptimizerConfig::default()).unwrap();
        assert_eq!(lim.eigenpair.lambda, plain.eigenpair.lambda);
        assert_eq!(lim.window.fractions, plain.window.fractions);
    }

    #[test]
    fn weighted_limit_lies_below_the_plain_value() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let field = WeightField::new(&ChartFn::flat(1.0), &OscillationSpec::sin_squared(1.0).unwrap(), 32);
        let lim = solve_limit_problem(&e, &field, 0.3, &OptimizerConfig::default()).unwrap();
        let plain =
            optimize_window(&e, 0.3, &DiscreteBoundaryMeasure::surface(&m), &OptimizerConfig::default()).unwrap();
        assert!(lim.eigenpair.lambda < plain.eigenpair.lambda);
    }

    #[test]
    fn scaled_measure_scales_lambda() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let s = DiscreteBoundaryMeasure::surface(&m);
        let w = Window::contiguous_arc(&s.weights, 0.3, 0).unwrap();
        let a = solve(&e, &w, &s, &SolverConfig::default()).unwrap();
        let b = solve(&e, &w, &s.scaled(3.0), &SolverConfig::default()).unwrap();
        assert!((a.lambda - 3.0 * b.lambda).abs() <= 1e-8 * a.lambda);
    }

    #[test]
    fn symmetric_start_gives_a_symmetric_window() {
        let m = square(0.1);
        let e = EnergyFunctional::new(&m, 2.0).unwrap();
        let s = DiscreteBoundaryMeasure::surface(&m);
        // arc centred on the bottom midpoint: starts at x = 0.5 − 0.6 on the left side
        let n = s.weights.len();
        let start = (0..n).find(|&i| m.boundary_edges[i].ref_start >= s.total() - 0.1 - 1e-9).unwrap();
        let first = Window::contiguous_arc(&s.weights, 0.3, start).unwrap();
        let cfg = OptimizerConfig { restarts: 0, ..Default::default() };
        let opt = optimize_window_from(&e, first, &s, &cfg).unwrap();
        let mirrored = crate::measures::reflect_window(&opt.window, &m, &s).unwrap();
        let h = m.max_boundary_edge();
        assert!(symmetric_difference_measure(&opt.window, &mirrored, &s).unwrap() <= 2.0 * h + 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn arcs_have_exact_measure(alpha in 0.01f64..0.99, start in 0usize..200, w in prop::collection::vec(0.01f64..1.0, 5..60)) {
            let win = Window::contiguous_arc(&w, alpha, start).unwrap();
            let total: f64 = w.iter().sum();
            prop_assert!((win.measure - alpha * total).abs() <= 1e-12);
            prop_assert!(win.fractions.iter().filter(|f| **f > 0.0 && **f < 1.0).count() <= 1);
            prop_assert_eq!(win.measure, weighted_sum(&win.fractions, &w));
        }
    }
}
