//! Slice invariants, pointwise identities and the decay-rate fit.
//!
//! For a solved strip the slice action T(s) is independent of the slice,
//! the slice charge Q(s) vanishes, the pullback of lambda differs from the
//! xi-harmonic energy density by an exact form, the t-derivative meets the
//! Legendrian edges orthogonally, and everything converges to the limit
//! chord at an exponential rate. Each of those statements has a discrete
//! shadow here with a second-order defect.

use crate::error::{Error, Result};
use crate::geometry::{triad_metric, TangentVector};

use super::map::{EdgeSide, StripMap};
use super::residual::{self, ResidualNorms};
use super::state::{self, Layout};

/// Invariants of one tau-slice.
#[derive(Debug, Clone, Copy)]
pub struct SliceInvariants {
    pub tau: f64,
    /// T(s): the t-integral of lambda(d_t w) plus the xi-energy of the
    /// strip part beyond s, which compensates the truncation.
    pub action: f64,
    /// Q(s) = - integral of lambda(d_tau w) dt.
    pub charge: f64,
    /// L2 norm over the slice of the xi-part of the differential.
    pub pi_norm: f64,
    /// L2 norm over the slice of lambda(d_tau w).
    pub reeb_tau_norm: f64,
    /// L2 norm over the slice of lambda(d_t w) minus the mean action.
    pub action_dev_norm: f64,
}

impl SliceInvariants {
    /// Combined decay indicator: the three channels that must die off
    /// towards a chord end, stacked into one norm.
    pub fn decay_norm(&self) -> f64 {
        (self.pi_norm * self.pi_norm
            + self.reeb_tau_norm * self.reeb_tau_norm
            + self.action_dev_norm * self.action_dev_norm)
            .sqrt()
    }
}

/// Per-slice series plus their interior means and spreads.
///
/// Means and spreads are taken over interior slices only; the two tau-edge
/// columns use one-sided stencils and, under a frozen far field, data that
/// need not match the discrete solution to round-off.
#[derive(Debug, Clone)]
pub struct AsymptoticInvariants {
    pub slices: Vec<SliceInvariants>,
    pub action_mean: f64,
    /// max - min of T(s) over interior slices.
    pub action_spread: f64,
    pub charge_mean: f64,
    /// max - min of Q(s) over interior slices.
    pub charge_spread: f64,
}

/// Slice action and charge series of a strip map.
pub fn asymptotic_invariants(w: &StripMap) -> AsymptoticInvariants {
    let lay = Layout::of(w);
    let grid = *w.grid();
    let s = state::flatten(w);
    let fields = residual::node_fields(&lay, &grid, &s);
    let h_t = grid.h_t();
    let nt = lay.nodes_t();

    // Tail xi-energies: column sums of the cell energies, accumulated
    // from the far end so tail[i] covers [tau_i, tau_max].
    let cell_e = residual::cell_pi_integrals(&lay, &grid, &s);
    let mut tail = vec![0.0; lay.nodes_tau()];
    for i in (0..lay.n_tau).rev() {
        let col: f64 = cell_e[i * lay.n_t..(i + 1) * lay.n_t].iter().sum();
        tail[i] = tail[i + 1] + col;
    }

    let wj = |j: usize| if j == 0 || j == lay.n_t { 0.5 } else { 1.0 };
    let mut slices = Vec::with_capacity(lay.nodes_tau());
    for i in 0..lay.nodes_tau() {
        let mut t_int = 0.0;
        let mut q_int = 0.0;
        let mut pi_sq = 0.0;
        let mut reeb_tau_sq = 0.0;
        for j in 0..nt {
            let node = i * nt + j;
            let weight = wj(j) * h_t;
            t_int += weight * fields.a[node];
            q_int += weight * fields.b[node];
            let db = node * lay.stride();
            let mut node_pi = 0.0;
            for k in 0..2 * lay.n {
                node_pi += fields.dtau[db + k] * fields.dtau[db + k]
                    + fields.dt[db + k] * fields.dt[db + k];
            }
            pi_sq += weight * node_pi;
            reeb_tau_sq += weight * fields.b[node] * fields.b[node];
        }
        slices.push(SliceInvariants {
            tau: grid.tau(i),
            action: t_int + tail[i],
            charge: q_int,
            pi_norm: pi_sq.sqrt(),
            reeb_tau_norm: reeb_tau_sq.sqrt(),
            action_dev_norm: 0.0,
        });
    }

    let interior = &slices[1..lay.n_tau];
    let mean = |f: &dyn Fn(&SliceInvariants) -> f64| {
        interior.iter().map(|s| f(s)).sum::<f64>() / interior.len() as f64
    };
    let spread = |f: &dyn Fn(&SliceInvariants) -> f64| {
        let lo = interior.iter().map(|s| f(s)).fold(f64::INFINITY, f64::min);
        let hi = interior
            .iter()
            .map(|s| f(s))
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let action_mean = mean(&|s: &SliceInvariants| s.action);
    let action_spread = spread(&|s: &SliceInvariants| s.action);
    let charge_mean = mean(&|s: &SliceInvariants| s.charge);
    let charge_spread = spread(&|s: &SliceInvariants| s.charge);

    // Second pass now that the reference action is known.
    for (i, slice) in slices.iter_mut().enumerate() {
        let mut dev_sq = 0.0;
        for j in 0..nt {
            let node = i * nt + j;
            let d = fields.a[node] - action_mean;
            dev_sq += wj(j) * h_t * d * d;
        }
        slice.action_dev_norm = dev_sq.sqrt();
    }

    AsymptoticInvariants {
        slices,
        action_mean,
        action_spread,
        charge_mean,
        charge_spread,
    }
}

/// Defects of the identities every solution satisfies.
#[derive(Debug, Clone)]
pub struct InstantonIdentityReport {
    /// Cell defect density of: circulation of the pullback of lambda
    /// equals the xi-energy of the cell. Sup and L2 over cells.
    pub energy_cell_linf: f64,
    pub energy_cell_l2: f64,
    /// Largest inner product of d_t w against a Legendrian tangent basis
    /// vector over all boundary nodes of both edges.
    pub neumann_max: f64,
    /// Defect of: dbar of alpha = (lambda(d_t w) - T) + i lambda(d_tau w)
    /// equals half the squared norm of the antiholomorphic generator,
    /// over interior nodes. Sup and weighted L2.
    pub alpha_dbar_linf: f64,
    pub alpha_dbar_l2: f64,
    /// Largest |Im alpha| over the two Legendrian edges.
    pub alpha_edge_im_max: f64,
    /// The T used to shift alpha: the interior mean slice action.
    pub action_reference: f64,
    /// Residual norms of the map itself, for context: the identity
    /// defects are only meaningful down to the solve quality.
    pub residual_norms: ResidualNorms,
}

/// Evaluates the solution identities on a strip map.
pub fn identity_checks(w: &StripMap) -> InstantonIdentityReport {
    let lay = Layout::of(w);
    let grid = *w.grid();
    let s = state::flatten(w);
    let fields = residual::node_fields(&lay, &grid, &s);
    let inv = asymptotic_invariants(w);
    let t_ref = inv.action_mean;
    let nt = lay.nodes_t();
    let st = lay.stride();
    let n = lay.n;
    let area = grid.cell_area();

    // Energy identity per cell: circulation of the pullback of lambda
    // against the cell xi-energy. The 1-form is sampled through the node
    // derivative fields (lambda(d_tau w), lambda(d_t w)) rather than
    // through chords of node values: a chord-based circulation telescopes
    // the z channel away around any closed loop and would be blind to
    // Reeb-direction corruption.
    let cell_e = residual::cell_pi_integrals(&lay, &grid, &s);
    let lam_tau: Vec<f64> = fields.b.iter().map(|b| -b).collect();
    let circ_density = residual::cell_curls(&lay, &grid, &lam_tau, &fields.a);
    let mut energy_linf = 0.0_f64;
    let mut energy_l2 = 0.0;
    for (c, density) in circ_density.iter().enumerate() {
        let defect = density - cell_e[c] / area;
        energy_linf = energy_linf.max(defect.abs());
        energy_l2 += defect * defect * area;
    }
    let energy_l2 = energy_l2.sqrt();

    // Orthogonality of d_t w against the Legendrian tangent space on both
    // edges, in the triad metric.
    let mut neumann_max = 0.0_f64;
    for (side, row) in [(EdgeSide::Lower, 0), (EdgeSide::Upper, lay.n_t)] {
        let graph = w.boundary(side);
        for i in 0..lay.nodes_tau() {
            let node = i * nt + row;
            let db = node * st;
            let dtw = TangentVector::from_slices(
                &fields.dt[db..db + n],
                &fields.dt[db + n..db + 2 * n],
                fields.dt[db + 2 * n],
            );
            let x = w.value(i, row);
            let basis = graph
                .tangent_basis(w.chart(side, i))
                .expect("edge charts were validated at construction");
            for tv in &basis {
                neumann_max = neumann_max.max(triad_metric(x, &dtw, tv).abs());
            }
        }
    }

    // alpha = (lambda(d_t w) - T) + i lambda(d_tau w) at nodes; its dbar
    // must reproduce half the squared xi-norm of d_tau w. Checked two
    // nodes in from every boundary so the central differences only touch
    // alpha values that were themselves centrally sampled; one node in,
    // the mix of one-sided and central stencil errors costs an order.
    let alpha_re: Vec<f64> = fields.a.iter().map(|a| a - t_ref).collect();
    let alpha_im: Vec<f64> = fields.b.iter().map(|b| -b).collect();
    let mut alpha_linf = 0.0_f64;
    let mut alpha_l2 = 0.0;
    let rtau = 0.5 / grid.h_tau();
    let rt = 0.5 / grid.h_t();
    for i in 2..lay.n_tau.saturating_sub(1) {
        for j in 2..lay.n_t.saturating_sub(1) {
            let node = i * nt + j;
            let d_tau_re = (alpha_re[node + nt] - alpha_re[node - nt]) * rtau;
            let d_tau_im = (alpha_im[node + nt] - alpha_im[node - nt]) * rtau;
            let d_t_re = (alpha_re[node + 1] - alpha_re[node - 1]) * rt;
            let d_t_im = (alpha_im[node + 1] - alpha_im[node - 1]) * rt;
            let db = node * st;
            let mut zeta_sq = 0.0;
            for k in 0..2 * n {
                zeta_sq += fields.dtau[db + k] * fields.dtau[db + k];
            }
            let re = 0.5 * (d_tau_re - d_t_im) - 0.5 * zeta_sq;
            let im = 0.5 * (d_tau_im + d_t_re);
            let mag = re.hypot(im);
            alpha_linf = alpha_linf.max(mag);
            alpha_l2 += mag * mag * grid.node_weight(i, j) * area;
        }
    }
    let alpha_l2 = alpha_l2.sqrt();

    let mut alpha_edge_im_max = 0.0_f64;
    for row in [0, lay.n_t] {
        for i in 0..lay.nodes_tau() {
            alpha_edge_im_max = alpha_edge_im_max.max(alpha_im[i * nt + row].abs());
        }
    }

    InstantonIdentityReport {
        energy_cell_linf: energy_linf,
        energy_cell_l2: energy_l2,
        neumann_max,
        alpha_dbar_linf: alpha_linf,
        alpha_dbar_l2: alpha_l2,
        alpha_edge_im_max,
        action_reference: t_ref,
        residual_norms: residual::residual(w).norms(),
    }
}

/// Options for the exponential decay fit.
#[derive(Debug, Clone, Copy)]
pub struct DecayOpts {
    /// Fraction of the tau-extent, anchored at tau_max, used as the
    /// far-field fit window.
    pub window_fraction: f64,
    /// Minimum number of usable slices; fewer is an error.
    pub min_slices: usize,
    /// Slice norms at or below this absolute level count as round-off.
    pub floor: f64,
    /// Fits with an rms log-residual above this are flagged as not
    /// exponential.
    pub max_fit_residual: f64,
}

impl Default for DecayOpts {
    fn default() -> Self {
        Self {
            window_fraction: 0.5,
            min_slices: 8,
            floor: 1e-12,
            max_fit_residual: 0.25,
        }
    }
}

/// Result of the log-linear decay fit over the far-field window.
#[derive(Debug, Clone)]
pub struct DecayFit {
    /// Fitted rate delta in norm ~ C exp(-delta tau). Positive infinity
    /// marks a map whose far field is already at round-off.
    pub rate: f64,
    pub prefactor: f64,
    /// Rms deviation of the log norms from the fitted line.
    pub fit_residual: f64,
    /// False when the window does not look exponential (large fit
    /// residual or a non-decaying slope); `rate` is then just the
    /// least-squares slope and carries no meaning.
    pub exponential: bool,
    /// The (tau, ln norm) pairs that entered the fit.
    pub window: Vec<(f64, f64)>,
}

/// Fits an exponential rate to the far-field slice norms.
pub fn decay_fit(w: &StripMap, opts: &DecayOpts) -> Result<DecayFit> {
    let inv = asymptotic_invariants(w);
    let grid = w.grid();
    let cutoff = grid.tau_max() - opts.window_fraction * (grid.tau_max() - grid.tau_min());
    let window: Vec<&SliceInvariants> = inv
        .slices
        .iter()
        .filter(|s| s.tau >= cutoff - 1e-12)
        .collect();
    if window.len() < opts.min_slices {
        return Err(Error::DecayWindow(format!(
            "window holds {} slices, need {}",
            window.len(),
            opts.min_slices
        )));
    }
    let usable: Vec<(f64, f64)> = window
        .iter()
        .filter(|s| s.decay_norm() > opts.floor)
        .map(|s| (s.tau, s.decay_norm().ln()))
        .collect();
    if usable.is_empty() {
        // Far field already exact: nothing decays because nothing is left.
        return Ok(DecayFit {
            rate: f64::INFINITY,
            prefactor: 0.0,
            fit_residual: 0.0,
            exponential: true,
            window: Vec::new(),
        });
    }
    if usable.len() < opts.min_slices {
        return Err(Error::DecayWindow(format!(
            "only {} of {} window slices sit above the round-off floor",
            usable.len(),
            window.len()
        )));
    }

    // Least-squares line ln(norm) = intercept - rate * tau.
    let m = usable.len() as f64;
    let sx: f64 = usable.iter().map(|(x, _)| x).sum();
    let sy: f64 = usable.iter().map(|(_, y)| y).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = usable.iter().map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    let rms = (usable
        .iter()
        .map(|(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum::<f64>()
        / m)
        .sqrt();
    let rate = -slope;
    Ok(DecayFit {
        rate,
        prefactor: intercept.exp(),
        fit_residual: rms,
        exponential: rms <= opts.max_fit_residual && rate > 0.0,
        window: usable,
    })
}
