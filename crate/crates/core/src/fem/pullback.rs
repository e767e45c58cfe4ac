//! The oscillating-domain energy transported to the fixed domain.

use rayon::prelude::*;

use super::energy::{CoeffPoint, ElementCoeff, EnergyFunctional};
use crate::geometry::{MeshOptions, RefinementBand, TriMesh};
use crate::transforms::PerturbationMap;
use crate::Result;

/// Interior three-point rule, exact for quadratics.
const BARY: [[f64; 3]; 3] =
    [[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]];

/// `Q̃(v) = ∫_Ω (∇vᵀ DT DTᵀ ∇v)^{p/2} / J + |v|^p / J`, with `DT` and `J`
/// evaluated at the preimage of each quadrature point. For `v = u ∘ T⁻¹` this
/// is the energy of `u` on the oscillating domain.
pub fn pullback_functional<'m>(mesh: &'m TriMesh, map: &PerturbationMap, p: f64) -> Result<EnergyFunctional<'m>> {
    let coeffs = mesh
        .triangles
        .par_iter()
        .enumerate()
        .map(|(t, tri)| -> Result<ElementCoeff> {
            let area = mesh.triangle_area(t);
            let mut pts = Vec::with_capacity(3);
            for b in BARY {
                let y = [0, 1].map(|c| {
                    b[0] * mesh.nodes[tri[0]][c] + b[1] * mesh.nodes[tri[1]][c] + b[2] * mesh.nodes[tri[2]][c]
                });
                let jb = map.jacobian_at(map.inverse(y)?);
                let d = jb.dt;
                // DT DTᵀ
                let m = [
                    d[0][0] * d[0][0] + d[0][1] * d[0][1],
                    d[0][0] * d[1][0] + d[0][1] * d[1][1],
                    d[1][0] * d[1][0] + d[1][1] * d[1][1],
                ];
                pts.push((d, CoeffPoint { weight: area / 3.0 / jb.j, m }));
            }
            let identity = pts.iter().all(|(d, _)| *d == [[1.0, 0.0], [0.0, 1.0]]);
            Ok(if identity {
                ElementCoeff::Identity
            } else {
                ElementCoeff::Points(pts.into_iter().map(|(_, c)| c).collect())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mass = mesh
        .nodes
        .par_iter()
        .zip(mesh.lumped_masses())
        .map(|(x, m)| Ok(m / map.jacobian_at(map.inverse(*x)?).j))
        .collect::<Result<Vec<_>>>()?;
    EnergyFunctional::with_coefficients(mesh, p, coeffs, mass)
}

/// Mesh options for the fixed domain: the pulled-back integrand oscillates
/// on the scale `ε` throughout the cutoff layer, so that layer is meshed at
/// the boundary resolution.
pub fn pullback_mesh_options(map: &PerturbationMap, h: f64) -> MeshOptions {
    MeshOptions::new(h).with_band(RefinementBand { depth: map.cutoff_width + map.amplitude() + h, h })
}

pub fn pullback_energy(mesh: &TriMesh, map: &PerturbationMap, p: f64, v: &[f64]) -> Result<f64> {
    pullback_functional(mesh, map, p)?.energy(v)
}
