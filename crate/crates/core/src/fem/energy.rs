use rayon::prelude::*;

use super::sparse::CsrMatrix;
use crate::geometry::TriMesh;
use crate::measures::DiscreteBoundaryMeasure;
use crate::{Error, Result};

/// Symmetric 2×2 coefficient `[m00, m01, m11]` with a quadrature weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffPoint {
    pub weight: f64,
    pub m: [f64; 3],
}

/// Gradient coefficient on one triangle.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementCoeff {
    /// `|∇u|^p` with the exact one-point rule.
    Identity,
    /// `Σ_q w_q (∇uᵀ M_q ∇u)^{p/2}`.
    Points(Vec<CoeffPoint>),
}

/// `Q(u) = ∫ (∇uᵀ M ∇u)^{p/2} + ρ |u|^p` for P1 functions, with vertex
/// quadrature for the mass term. With the default coefficients `M = I`,
/// `ρ = 1` this is `∫ |∇u|^p + |u|^p`.
#[derive(Clone, Debug)]
pub struct EnergyFunctional<'m> {
    pub mesh: &'m TriMesh,
    pub p: f64,
    grads: Vec<[[f64; 2]; 3]>,
    areas: Vec<f64>,
    coeffs: Option<Vec<ElementCoeff>>,
    mass: Vec<f64>,
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::config("p", format!("exponent must be at least 2, got {p}")));
    }
    Ok(())
}

impl<'m> EnergyFunctional<'m> {
    pub fn new(mesh: &'m TriMesh, p: f64) -> Result<Self> {
        check_exponent(p)?;
        let (grads, areas) = (0..mesh.triangles.len()).map(|t| mesh.hat_gradients(t)).unzip();
        Ok(Self { mesh, p, grads, areas, coeffs: None, mass: mesh.lumped_masses() })
    }

    /// Functional with per-element gradient coefficients and vertex mass weights.
    pub fn with_coefficients(mesh: &'m TriMesh, p: f64, coeffs: Vec<ElementCoeff>, mass: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.triangles.len() {
            return Err(Error::Shape { expected: mesh.triangles.len(), got: coeffs.len() });
        }
        if mass.len() != mesh.num_nodes() {
            return Err(Error::Shape { expected: mesh.num_nodes(), got: mass.len() });
        }
        let mut f = Self::new(mesh, p)?;
        f.coeffs = Some(coeffs);
        f.mass = mass;
        Ok(f)
    }

    /// Same coefficients, different exponent.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self { p, ..self.clone() })
    }

    pub fn mass_weights(&self) -> &[f64] {
        &self.mass
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.mesh.num_nodes() {
            return Err(Error::Shape { expected: self.mesh.num_nodes(), got: u.len() });
        }
        Ok(())
    }

    fn element_gradient(&self, t: usize, u: &[f64]) -> [f64; 2] {
        let tri = self.mesh.triangles[t];
        let g = &self.grads[t];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += u[tri[k]] * g[k][0];
            out[1] += u[tri[k]] * g[k][1];
        }
        out
    }

    fn element_energy(&self, t: usize, u: &[f64]) -> f64 {
        let g = self.element_gradient(t, u);
        let half = 0.5 * self.p;
        match self.coeffs.as_ref().map(|c| &c[t]) {
            None | Some(ElementCoeff::Identity) => self.areas[t] * (g[0] * g[0] + g[1] * g[1]).powf(half),
            Some(ElementCoeff::Points(pts)) => pts
                .iter()
                .map(|q| {
                    q.weight * (q.m[0] * g[0] * g[0] + 2.0 * q.m[1] * g[0] * g[1] + q.m[2] * g[1] * g[1]).powf(half)
                })
                .sum(),
        }
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let parts: Vec<f64> = (0..self.areas.len()).into_par_iter().map(|t| self.element_energy(t, u)).collect();
        let grad_term: f64 = parts.iter().sum();
        let mass_term: f64 = self.mass.iter().zip(u).map(|(m, v)| m * v.abs().powf(self.p)).sum();
        Ok(grad_term + mass_term)
    }

    /// `∂Q/∂u_i` for every node.
    pub fn energy_gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let p = self.p;
        let local: Vec<[f64; 3]> = (0..self.areas.len())
            .into_par_iter()
            .map(|t| {
                let g = self.element_gradient(t, u);
                let hat = &self.grads[t];
                // flux = Σ_q w_q p (gᵀMg)^{p/2-1} M g
                let flux = match self.coeffs.as_ref().map(|c| &c[t]) {
                    None | Some(ElementCoeff::Identity) => {
                        let s = p * self.areas[t] * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p - 1.0);
                        [s * g[0], s * g[1]]
                    }
                    Some(ElementCoeff::Points(pts)) => {
                        let mut f = [0.0; 2];
                        for q in pts {
                            let mg = [q.m[0] * g[0] + q.m[1] * g[1], q.m[1] * g[0] + q.m[2] * g[1]];
                            let s = p * q.weight * (g[0] * mg[0] + g[1] * mg[1]).powf(0.5 * p - 1.0);
                            f[0] += s * mg[0];
                            f[1] += s * mg[1];
                        }
                        f
                    }
                };
                [0, 1, 2].map(|k| flux[0] * hat[k][0] + flux[1] * hat[k][1])
            })
            .collect();
        let mut out: Vec<f64> = self.mass.iter().zip(u).map(|(m, v)| m * p * v.abs().powf(p - 2.0) * v).collect();
        for (t, l) in local.iter().enumerate() {
            for k in 0..3 {
                out[self.mesh.triangles[t][k]] += l[k];
            }
        }
        Ok(out)
    }

    /// Matrix of the quadratic form obtained at `p = 2`.
    pub fn quadratic_matrix(&self) -> CsrMatrix {
        let mut entries = Vec::with_capacity(9 * self.areas.len() + self.mass.len());
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let hat = &self.grads[t];
            let m = match self.coeffs.as_ref().map(|c| &c[t]) {
                None | Some(ElementCoeff::Identity) => [self.areas[t], 0.0, self.areas[t]],
                Some(ElementCoeff::Points(pts)) => pts.iter().fold([0.0; 3], |acc, q| {
                    [acc[0] + q.weight * q.m[0], acc[1] + q.weight * q.m[1], acc[2] + q.weight * q.m[2]]
                }),
            };
            for a in 0..3 {
                for b in 0..3 {
                    let (ga, gb) = (hat[a], hat[b]);
                    let v = m[0] * ga[0] * gb[0] + m[1] * (ga[0] * gb[1] + ga[1] * gb[0]) + m[2] * ga[1] * gb[1];
                    entries.push((tri[a], tri[b], v));
                }
            }
        }
        for (i, m) in self.mass.iter().enumerate() {
            entries.push((i, i, *m));
        }
        CsrMatrix::from_triplets(self.mesh.num_nodes(), entries)
    }
}

/// `Q(u)` with unit coefficients.
pub fn assemble_energy(mesh: &TriMesh, p: f64, u: &[f64]) -> Result<f64> {
    EnergyFunctional::new(mesh, p)?.energy(u)
}

fn check_measure(mesh: &TriMesh, measure: &DiscreteBoundaryMeasure) -> Result<()> {
    if measure.weights.len() != mesh.boundary_edges.len() {
        return Err(Error::Shape { expected: mesh.boundary_edges.len(), got: measure.weights.len() });
    }
    if measure.weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Measure("boundary weights must be non-negative".into()));
    }
    Ok(())
}

/// `∫ |u|^p dμ` with Simpson's rule on each edge.
pub fn boundary_integral(mesh: &TriMesh, p: f64, u: &[f64], measure: &DiscreteBoundaryMeasure) -> Result<f64> {
    check_measure(mesh, measure)?;
    if u.len() != mesh.num_nodes() {
        return Err(Error::Shape { expected: mesh.num_nodes(), got: u.len() });
    }
    Ok(mesh
        .boundary_edges
        .iter()
        .zip(&measure.weights)
        .map(|(e, w)| {
            let (a, b) = (u[e.nodes[0]], u[e.nodes[1]]);
            let m = 0.5 * (a + b);
            w / 6.0 * (a.abs().powf(p) + 4.0 * m.abs().powf(p) + b.abs().powf(p))
        })
        .sum())
}

pub fn boundary_lp_norm(mesh: &TriMesh, p: f64, u: &[f64], measure: &DiscreteBoundaryMeasure) -> Result<f64> {
    check_exponent(p)?;
    Ok(boundary_integral(mesh, p, u, measure)?.powf(1.0 / p))
}

pub fn boundary_integral_gradient(
    mesh: &TriMesh,
    p: f64,
    u: &[f64],
    measure: &DiscreteBoundaryMeasure,
) -> Result<Vec<f64>> {
    check_measure(mesh, measure)?;
    let dp = |v: f64| p * v.abs().powf(p - 2.0) * v;
    let mut g = vec![0.0; mesh.num_nodes()];
    for (e, w) in mesh.boundary_edges.iter().zip(&measure.weights) {
        let (a, b) = (u[e.nodes[0]], u[e.nodes[1]]);
        let mid = 2.0 * dp(0.5 * (a + b));
        g[e.nodes[0]] += w / 6.0 * (dp(a) + mid);
        g[e.nodes[1]] += w / 6.0 * (dp(b) + mid);
    }
    Ok(g)
}

/// Boundary mass matrix for `p = 2`; Simpson is exact there and gives the
/// consistent edge mass `w/6 [[2, 1], [1, 2]]`.
pub fn boundary_matrix(mesh: &TriMesh, measure: &DiscreteBoundaryMeasure) -> Result<CsrMatrix> {
    check_measure(mesh, measure)?;
    let mut entries = Vec::with_capacity(4 * mesh.boundary_edges.len());
    for (e, w) in mesh.boundary_edges.iter().zip(&measure.weights) {
        let [a, b] = e.nodes;
        entries.extend_from_slice(&[(a, a, w / 3.0), (b, b, w / 3.0), (a, b, w / 6.0), (b, a, w / 6.0)]);
    }
    Ok(CsrMatrix::from_triplets(mesh.num_nodes(), entries))
}
