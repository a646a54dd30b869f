//! Closed-form boundary sector used as a manufactured solution for
//! verification runs.
//!
//! With the lower edge on the zero section and the upper edge on the
//! graph of S(q) = -(a/2) |q|^2, the planar wedge between the rays
//! arg = 0 and arg = -arctan(a) hosts the holomorphic profile
//! v(tau + i t) = r exp(-beta (tau + i t)), beta = arctan(a), and the
//! z-channel that keeps the rotated pullback form closed is the harmonic
//! extension of the edge values: a separated product with rate 2 beta.

use nalgebra::DVector;

use crate::geometry::{GeneratingFn, LegendrianJetGraph, PhasePoint};

use super::grid::StripGrid;
use super::map::{FarFieldMode, StripMap};

/// Exact values the sector map must reproduce.
pub struct SectorOracle {
    pub beta: f64,
    pub pi_energy: f64,
    /// T(s), constant in s on the truncated strip.
    pub truncated_action: f64,
}

impl SectorOracle {
    pub fn new(a: f64, r: f64, tau_min: f64, tau_max: f64) -> Self {
        let beta = a.atan();
        let rr = r * r;
        Self {
            beta,
            pi_energy: 0.5
                * beta
                * rr
                * ((-2.0 * beta * tau_min).exp() - (-2.0 * beta * tau_max).exp()),
            truncated_action: -0.5 * beta * rr * (-2.0 * beta * tau_max).exp(),
        }
    }
}

/// The sector profile at one strip point.
pub fn sector_point(a: f64, r: f64, tau: f64, t: f64) -> PhasePoint {
    let beta = a.atan();
    let rho = r * (-beta * tau).exp();
    let q = rho * (beta * t).cos();
    let p = -rho * (beta * t).sin();
    let cos_b = beta.cos();
    let z = -0.5 * a * r * r * cos_b * cos_b * (-2.0 * beta * tau).exp() * (2.0 * beta * t).sin()
        / (2.0 * beta).sin();
    PhasePoint::new(
        DVector::from_element(1, q),
        DVector::from_element(1, p),
        z,
    )
}

/// The Legendrian pair bounding the sector.
pub fn sector_graphs(a: f64) -> (LegendrianJetGraph, LegendrianJetGraph) {
    (
        LegendrianJetGraph::zero_section(1),
        LegendrianJetGraph::new(1, GeneratingFn::Quadratic { c: 0.0, a: -a }, 10.0),
    )
}

/// The sector solution sampled on a grid, frozen far-field columns.
pub fn sector_exact(grid: StripGrid, a: f64, r: f64) -> StripMap {
    let (lower, upper) = sector_graphs(a);
    StripMap::from_fn(grid, lower, upper, FarFieldMode::DirichletToChord, |tau, t| {
        sector_point(a, r, tau, t)
    })
    .unwrap()
}
