//! First-order system residuals of a strip map.
//!
//! Two fields measure how far a map is from solving the boundary value
//! problem: the antiholomorphic xi-part zeta at every node, and the
//! per-cell exterior derivative of the rotated pullback 1-form
//! (lambda(d_t w)) dtau - (lambda(d_tau w)) dt, which must close for the
//! Reeb component of the map to be correct. Both vanish identically on a
//! translated-chord strip, including at the discrete level.

use nalgebra::DVector;

use super::grid::StripGrid;
use super::map::StripMap;
use super::state::{self, Layout};

/// Per-node and per-cell residual data for one strip map.
///
/// Norm accessors recompute from the stored fields on every call; nothing
/// is cached, so the numbers can never go stale against the fields.
#[derive(Debug, Clone)]
pub struct ResidualField {
    grid: StripGrid,
    n: usize,
    /// xi-frame components of zeta per node, stride 2n (q block, p block).
    zeta: Vec<f64>,
    /// Curl density of the rotated pullback form per cell.
    curl: Vec<f64>,
}

impl ResidualField {
    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    /// zeta at node (i, j) as its 2n frame components.
    pub fn zeta_at(&self, i: usize, j: usize) -> DVector<f64> {
        let m = 2 * self.n;
        let b = self.grid.node_index(i, j) * m;
        DVector::from_column_slice(&self.zeta[b..b + m])
    }

    pub fn curl_at(&self, i: usize, j: usize) -> f64 {
        self.curl[self.grid.cell_index(i, j)]
    }

    /// L2 norm of zeta over the strip (trapezoid node weights).
    pub fn zeta_l2(&self) -> f64 {
        let m = 2 * self.n;
        let area = self.grid.cell_area();
        let mut sum = 0.0;
        for i in 0..self.grid.nodes_tau() {
            for j in 0..self.grid.nodes_t() {
                let b = self.grid.node_index(i, j) * m;
                let sq: f64 = self.zeta[b..b + m].iter().map(|v| v * v).sum();
                sum += sq * self.grid.node_weight(i, j) * area;
            }
        }
        sum.sqrt()
    }

    pub fn zeta_linf(&self) -> f64 {
        let m = 2 * self.n;
        self.zeta
            .chunks_exact(m)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn curl_l2(&self) -> f64 {
        let area = self.grid.cell_area();
        self.curl
            .iter()
            .map(|c| c * c * area)
            .sum::<f64>()
            .sqrt()
    }

    pub fn curl_linf(&self) -> f64 {
        self.curl.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norms(&self) -> ResidualNorms {
        ResidualNorms {
            zeta_l2: self.zeta_l2(),
            zeta_linf: self.zeta_linf(),
            curl_l2: self.curl_l2(),
            curl_linf: self.curl_linf(),
        }
    }
}

/// Snapshot of the four residual norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub zeta_l2: f64,
    pub zeta_linf: f64,
    pub curl_l2: f64,
    pub curl_linf: f64,
}

impl ResidualNorms {
    /// Largest of the four entries; convenient for pass/fail gates.
    pub fn max(&self) -> f64 {
        self.zeta_l2
            .max(self.zeta_linf)
            .max(self.curl_l2)
            .max(self.curl_linf)
    }
}

/// Node-level derivative data shared by the residual, the invariants and
/// the descent objective.
pub(super) struct NodeFields {
    /// d/dtau blocks per node, stride 2n+1.
    pub dtau: Vec<f64>,
    /// d/dt blocks per node, stride 2n+1.
    pub dt: Vec<f64>,
    /// zeta frame components per node, stride 2n.
    pub zeta: Vec<f64>,
    /// lambda(d_t w) per node.
    pub a: Vec<f64>,
    /// -lambda(d_tau w) per node.
    pub b: Vec<f64>,
}

impl NodeFields {
    pub(super) fn zeroed(lay: &Layout) -> Self {
        let st = lay.stride();
        let nodes = lay.node_count();
        Self {
            dtau: vec![0.0; nodes * st],
            dt: vec![0.0; nodes * st],
            zeta: vec![0.0; nodes * 2 * lay.n],
            a: vec![0.0; nodes],
            b: vec![0.0; nodes],
        }
    }
}

pub(super) fn node_fields(lay: &Layout, grid: &StripGrid, s: &[f64]) -> NodeFields {
    let mut fields = NodeFields::zeroed(lay);
    node_fields_into(lay, grid, s, &mut fields);
    fields
}

/// Fills a preallocated `NodeFields`; every slot is overwritten, so the
/// buffer can be reused across evaluations without clearing.
pub(super) fn node_fields_into(lay: &Layout, grid: &StripGrid, s: &[f64], out: &mut NodeFields) {
    let st = lay.stride();
    let h_tau = grid.h_tau();
    let h_t = grid.h_t();
    for i in 0..lay.nodes_tau() {
        for j in 0..lay.nodes_t() {
            let node = i * lay.nodes_t() + j;
            let base = node * st;
            state::d_tau(lay, s, h_tau, i, j, &mut out.dtau[base..base + st]);
            state::d_t(lay, s, h_t, i, j, &mut out.dt[base..base + st]);
            state::zeta_components(
                lay.n,
                &out.dtau[base..base + st],
                &out.dt[base..base + st],
                &mut out.zeta[node * 2 * lay.n..(node + 1) * 2 * lay.n],
            );
            out.a[node] = state::lambda_of(lay, s, base, &out.dt[base..base + st]);
            out.b[node] = -state::lambda_of(lay, s, base, &out.dtau[base..base + st]);
        }
    }
}

/// Curl density per cell of the 1-form a dtau + b dt given at nodes:
/// the circulation around the cell by the midpoint edge rule, divided by
/// the cell area.
pub(super) fn cell_curls(lay: &Layout, grid: &StripGrid, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut curl = vec![0.0; lay.n_tau * lay.n_t];
    cell_curls_into(lay, grid, a, b, &mut curl);
    curl
}

pub(super) fn cell_curls_into(lay: &Layout, grid: &StripGrid, a: &[f64], b: &[f64], curl: &mut [f64]) {
    let h_tau = grid.h_tau();
    let h_t = grid.h_t();
    let area = h_tau * h_t;
    let nt = lay.nodes_t();
    for i in 0..lay.n_tau {
        for j in 0..lay.n_t {
            let n00 = i * nt + j;
            let n10 = (i + 1) * nt + j;
            let n01 = i * nt + j + 1;
            let n11 = (i + 1) * nt + j + 1;
            let circ = 0.5 * h_tau * (a[n00] + a[n10]) + 0.5 * h_t * (b[n10] + b[n11])
                - 0.5 * h_tau * (a[n01] + a[n11])
                - 0.5 * h_t * (b[n00] + b[n01]);
            curl[i * lay.n_t + j] = circ / area;
        }
    }
}

/// Residual fields of a strip map.
pub fn residual(w: &StripMap) -> ResidualField {
    let lay = Layout::of(w);
    let s = state::flatten(w);
    let fields = node_fields(&lay, w.grid(), &s);
    let curl = cell_curls(&lay, w.grid(), &fields.a, &fields.b);
    ResidualField {
        grid: *w.grid(),
        n: lay.n,
        zeta: fields.zeta,
        curl,
    }
}

/// Per-cell contributions of the xi-harmonic energy, midpoint rule:
/// (|pi d_tau w|^2 + |pi d_t w|^2) / 2 * area at the cell center.
pub(super) fn cell_pi_integrals(lay: &Layout, grid: &StripGrid, s: &[f64]) -> Vec<f64> {
    let st = lay.stride();
    let area = grid.cell_area();
    let mut dtau = vec![0.0; st];
    let mut dt = vec![0.0; st];
    let mut out = vec![0.0; lay.n_tau * lay.n_t];
    for i in 0..lay.n_tau {
        for j in 0..lay.n_t {
            state::cell_center_d(lay, s, grid, i, j, &mut dtau, &mut dt);
            out[i * lay.n_t + j] = 0.5 * state::pi_square(lay.n, &dtau, &dt) * area;
        }
    }
    out
}

/// Total xi-harmonic energy of the map, midpoint quadrature.
pub fn pi_energy(w: &StripMap) -> f64 {
    let lay = Layout::of(w);
    let s = state::flatten(w);
    cell_pi_integrals(&lay, w.grid(), &s).iter().sum()
}

/// Objective minimized by the descent solver and its building blocks:
/// squared L2 norm of zeta plus squared L2 norm of the curl density.
pub(super) fn objective_of_fields(
    lay: &Layout,
    grid: &StripGrid,
    fields: &NodeFields,
    curl: &[f64],
) -> f64 {
    let area = grid.cell_area();
    let m = 2 * lay.n;
    let mut f = 0.0;
    for i in 0..lay.nodes_tau() {
        for j in 0..lay.nodes_t() {
            let node = i * lay.nodes_t() + j;
            let sq: f64 = fields.zeta[node * m..(node + 1) * m]
                .iter()
                .map(|v| v * v)
                .sum();
            f += sq * grid.node_weight(i, j) * area;
        }
    }
    for c in curl {
        f += c * c * area;
    }
    f
}
