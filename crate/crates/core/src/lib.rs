//! Numerical workbench for contact Hamiltonian calculus on R^(2n+1) with the
//! standard form lambda = dz - p.dq, and for the associated boundary value
//! problems: Reeb chords between jet-graph Legendrians, least action paths,
//! and holomorphic strips with Legendrian boundary.

pub mod action;
pub mod calculus;
pub mod error;
pub mod field;
pub mod geometry;
pub mod instanton;

pub use error::{Error, Result};
pub use field::{HamGrad, HamHess, HamiltonianField, Poly, PolyField, ScalarField};
pub use geometry::{
    dlambda, lambda, lifted_j, reeb_vector, triad_metric, triad_norm, xi_project, GeneratingFn,
    LegendrianJetGraph, PhasePoint, TangentVector, TriadFrame,
};
