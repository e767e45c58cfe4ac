//! P1 finite elements for the trace eigenvalue problem.

mod eigen;
mod energy;
mod export;
mod pullback;
mod sparse;

pub use eigen::solve_with;
pub use eigen::{
    rayleigh_gradient, rayleigh_quotient, solve, solve_p2, solve_p_general, Robin, SolverConfig, TraceEigenpair,
};
pub use energy::{
    assemble_energy, boundary_integral, boundary_integral_gradient, boundary_lp_norm, boundary_matrix, CoeffPoint,
    ElementCoeff, EnergyFunctional,
};
pub use export::{write_eigenpair_csv, write_eigenpair_summary};
pub use pullback::{pullback_energy, pullback_functional, pullback_mesh_options};
pub use sparse::CsrMatrix;
