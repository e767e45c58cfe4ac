//! Numerical engine for optimal Sobolev trace constants with Dirichlet
//! boundary windows on domains whose boundary oscillates periodically.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds base domains, oscillating boundaries and meshes.
//! * [`transforms`] implements the change of variables between the
//!   oscillating domain and the fixed one, plus the homogenized weight.
//! * [`fem`] evaluates energies and solves the trace eigenvalue problem.
//! * [`windows`] optimises the Dirichlet window by alternating bathtub steps.
//! * [`measures`] compares windows and boundary measures across domains.
//! * [`experiments`] runs the asymptotic sweeps and writes reports.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod fem;
pub mod geometry;
pub mod measures;
pub mod quadrature;
pub mod transforms;
pub mod windows;

pub use error::{Error, Result};
