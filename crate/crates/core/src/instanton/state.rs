//! Flat-array view of a strip map and the shared difference stencils.
//!
//! Solver loops run over plain f64 slices instead of node structs; the
//! layout is node-major with the coordinate block (q_1..q_n, p_1..p_n, z)
//! per node. Everything here is second-order accurate: central differences
//! at interior nodes, the three-point one-sided formula on the edges.

use super::grid::StripGrid;
use super::map::StripMap;

#[derive(Debug, Clone, Copy)]
pub(super) struct Layout {
    pub n: usize,
    pub n_tau: usize,
    pub n_t: usize,
}

impl Layout {
    pub fn of(w: &StripMap) -> Self {
        let (n_tau, n_t) = w.grid().intervals();
        Self {
            n: w.dim(),
            n_tau,
            n_t,
        }
    }

    pub fn stride(&self) -> usize {
        2 * self.n + 1
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

    pub fn len(&self) -> usize {
        self.node_count() * self.stride()
    }

    /// Offset of the coordinate block of node (i, j).
    pub fn base(&self, i: usize, j: usize) -> usize {
        (i * self.nodes_t() + j) * self.stride()
    }
}

/// Node values flattened in layout order.
pub(super) fn flatten(w: &StripMap) -> Vec<f64> {
    let lay = Layout::of(w);
    let mut s = vec![0.0; lay.len()];
    for i in 0..lay.nodes_tau() {
        for j in 0..lay.nodes_t() {
            let x = w.value(i, j);
            let b = lay.base(i, j);
            for k in 0..lay.n {
                s[b + k] = x.q[k];
                s[b + lay.n + k] = x.p[k];
            }
            s[b + 2 * lay.n] = x.z;
        }
    }
    s
}

/// Stencil over three columns or rows: (index, coefficient) pairs with the
/// 1/(2h) factor already applied.
#[inline]
fn stencil(i: usize, last: usize, h: f64) -> [(usize, f64); 3] {
    let r = 0.5 / h;
    if i == 0 {
        [(0, -3.0 * r), (1, 4.0 * r), (2, -r)]
    } else if i == last {
        [(last, 3.0 * r), (last - 1, -4.0 * r), (last - 2, r)]
    } else {
        [(i - 1, -r), (i + 1, r), (i, 0.0)]
    }
}

/// d/dtau of every coordinate at node (i, j), written into `out`.
pub(super) fn d_tau(lay: &Layout, s: &[f64], h_tau: f64, i: usize, j: usize, out: &mut [f64]) {
    let st = lay.stride();
    out[..st].fill(0.0);
    for (col, c) in stencil(i, lay.n_tau, h_tau) {
        if c == 0.0 {
            continue;
        }
        let b = lay.base(col, j);
        for k in 0..st {
            out[k] += c * s[b + k];
        }
    }
}

/// d/dt of every coordinate at node (i, j), written into `out`.
pub(super) fn d_t(lay: &Layout, s: &[f64], h_t: f64, i: usize, j: usize, out: &mut [f64]) {
    let st = lay.stride();
    out[..st].fill(0.0);
    for (row, c) in stencil(j, lay.n_t, h_t) {
        if c == 0.0 {
            continue;
        }
        let b = lay.base(i, row);
        for k in 0..st {
            out[k] += c * s[b + k];
        }
    }
}

/// Adjoint of `d_tau`: scatters a cotangent block back onto the stencil.
pub(super) fn d_tau_adjoint(
    lay: &Layout,
    h_tau: f64,
    i: usize,
    j: usize,
    bar: &[f64],
    acc: &mut [f64],
) {
    let st = lay.stride();
    for (col, c) in stencil(i, lay.n_tau, h_tau) {
        if c == 0.0 {
            continue;
        }
        let b = lay.base(col, j);
        for k in 0..st {
            acc[b + k] += c * bar[k];
        }
    }
}

/// Adjoint of `d_t`.
pub(super) fn d_t_adjoint(lay: &Layout, h_t: f64, i: usize, j: usize, bar: &[f64], acc: &mut [f64]) {
    let st = lay.stride();
    for (row, c) in stencil(j, lay.n_t, h_t) {
        if c == 0.0 {
            continue;
        }
        let b = lay.base(i, row);
        for k in 0..st {
            acc[b + k] += c * bar[k];
        }
    }
}

/// lambda at the node applied to a coordinate-derivative block:
/// d_z - p . d_q with p read from the state.
#[inline]
pub(super) fn lambda_of(lay: &Layout, s: &[f64], base: usize, d: &[f64]) -> f64 {
    let n = lay.n;
    let mut v = d[2 * n];
    for k in 0..n {
        v -= s[base + n + k] * d[k];
    }
    v
}

/// xi-frame components of the antiholomorphic part at a node:
/// zeta_q = (dtau_q - dt_p) / 2, zeta_p = (dtau_p + dt_q) / 2.
///
/// The frame {D/dq_i, d/dp_i} is orthonormal, so norms of zeta are plain
/// Euclidean norms of these 2n numbers; the base point drops out.
#[inline]
pub(super) fn zeta_components(n: usize, dtau: &[f64], dt: &[f64], out: &mut [f64]) {
    for k in 0..n {
        out[k] = 0.5 * (dtau[k] - dt[n + k]);
        out[n + k] = 0.5 * (dtau[n + k] + dt[k]);
    }
}

/// Derivatives at the center of cell (i, j) from its four corners.
pub(super) fn cell_center_d(
    lay: &Layout,
    s: &[f64],
    grid: &StripGrid,
    i: usize,
    j: usize,
    dtau: &mut [f64],
    dt: &mut [f64],
) {
    let st = lay.stride();
    let b00 = lay.base(i, j);
    let b10 = lay.base(i + 1, j);
    let b01 = lay.base(i, j + 1);
    let b11 = lay.base(i + 1, j + 1);
    let rtau = 0.5 / grid.h_tau();
    let rt = 0.5 / grid.h_t();
    for k in 0..st {
        dtau[k] = (s[b10 + k] + s[b11 + k] - s[b00 + k] - s[b01 + k]) * rtau;
        dt[k] = (s[b01 + k] + s[b11 + k] - s[b00 + k] - s[b10 + k]) * rt;
    }
}

/// Squared xi-part of the differential at a cell center: the q and p
/// derivative blocks in both directions, z excluded.
#[inline]
pub(super) fn pi_square(n: usize, dtau: &[f64], dt: &[f64]) -> f64 {
    let mut sum = 0.0;
    for k in 0..2 * n {
        sum += dtau[k] * dtau[k] + dt[k] * dt[k];
    }
    sum
}
