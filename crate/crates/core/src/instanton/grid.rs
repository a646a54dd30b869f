//! Uniform node grid on a finite strip [tau_min, tau_max] x [0, 1].
//!
//! Nodes are indexed (i, j) with i along tau (0..=n_tau) and j along t
//! (0..=n_t); cells are the n_tau * n_t rectangles between adjacent nodes.
//! The t-extent is fixed to [0, 1]; only the tau window is configurable.

use crate::error::{Error, Result};

/// Smallest admissible interval count per direction.
///
/// The edge stencils are one-sided three-point formulas, so anything below
/// four intervals leaves no genuinely interior node between them.
pub const MIN_INTERVALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid {
    tau_min: f64,
    tau_max: f64,
    n_tau: usize,
    n_t: usize,
}

impl StripGrid {
    pub fn new(tau_min: f64, tau_max: f64, n_tau: usize, n_t: usize) -> Result<Self> {
        if n_tau < MIN_INTERVALS || n_t < MIN_INTERVALS {
            return Err(Error::GridTooSmall {
                need: MIN_INTERVALS,
                got_tau: n_tau,
                got_t: n_t,
            });
        }
        if !(tau_max - tau_min).is_finite() || tau_max <= tau_min {
            return Err(Error::InconsistentBoundary(format!(
                "strip window [{tau_min}, {tau_max}] is empty or non-finite"
            )));
        }
        Ok(Self {
            tau_min,
            tau_max,
            n_tau,
            n_t,
        })
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    /// Interval counts, tau direction then t direction.
    pub fn intervals(&self) -> (usize, usize) {
        (self.n_tau, self.n_t)
    }

    pub fn n_tau(&self) -> usize {
        self.n_tau
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn h_tau(&self) -> f64 {
        (self.tau_max - self.tau_min) / self.n_tau as f64
    }

    pub fn h_t(&self) -> f64 {
        1.0 / self.n_t as f64
    }

    /// tau coordinate of node column i; hits the window ends exactly.
    pub fn tau(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_tau);
        self.tau_min + (self.tau_max - self.tau_min) * (i as f64 / self.n_tau as f64)
    }

    /// t coordinate of node row j; hits 0 and 1 exactly.
    pub fn t(&self, j: usize) -> f64 {
        debug_assert!(j <= self.n_t);
        j as f64 / self.n_t as f64
    }

    pub fn nodes_tau(&self) -> usize {
        self.n_tau + 1
    }

    pub fn nodes_t(&self) -> usize {
        self.n_t + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_tau() * self.nodes_t()
    }

    pub fn cell_count(&self) -> usize {
        self.n_tau * self.n_t
    }

    /// Area of one cell.
    pub fn cell_area(&self) -> f64 {
        self.h_tau() * self.h_t()
    }

    /// Row-major node index with j fastest.
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n_tau && j <= self.n_t);
        i * self.nodes_t() + j
    }

    /// Cell index with j fastest.
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_tau && j < self.n_t);
        i * self.n_t + j
    }

    /// Trapezoid weight of a node for quadrature over the strip.
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let wi = if i == 0 || i == self.n_tau { 0.5 } else { 1.0 };
        let wj = if j == 0 || j == self.n_t { 0.5 } else { 1.0 };
        wi * wj
    }

    /// Grid with both interval counts doubled, same window.
    pub fn refined(&self) -> Self {
        Self {
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            n_tau: 2 * self.n_tau,
            n_t: 2 * self.n_t,
        }
    }
}
