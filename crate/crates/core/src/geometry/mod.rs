//! Base domains, oscillating boundaries and their triangulations.

mod chart;
mod domain;
mod mesh;
mod oscillation;

pub use chart::ChartFn;
pub use domain::{
    build_base_domain, build_perturbed_boundary, cells_for_eps, perturbed_chart_length, BoundaryPiece, ChartLength,
    ChartedDomain, DomainKind, Perturbation,
};
pub use mesh::{
    generate_mesh, generate_mesh_with, BoundaryEdge, EdgeTag, MeshOptions, PointLocator, RefinementBand, TriMesh,
};
pub use oscillation::{OscillationSpec, Profile};
