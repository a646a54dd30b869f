//! Residual-driven relaxation of a strip map.
//!
//! Minimizes the squared L2 norms of the two residual fields (the
//! antiholomorphic frame part and the curl density of the rotated
//! pullback form) over the interior node values and the edge chart
//! coordinates, by gradient descent with Barzilai-Borwein steps and a
//! nonmonotone backtracking line search. Frozen far columns stay fixed;
//! free far columns join the unknowns. The gradient is computed by
//! hand-rolled reverse accumulation through the stencils, which keeps an
//! iteration at a small constant multiple of one residual evaluation.

use nalgebra::DVector;

use super::grid::StripGrid;
use super::map::{FarFieldMode, StripMap};
use super::residual::{self, NodeFields};
use super::state::{self, Layout};
use crate::error::Result;
use crate::geometry::{LegendrianJetGraph, PhasePoint};

/// Controls for the descent loop.
#[derive(Debug, Clone, Copy)]
pub struct RelaxOpts {
    /// Stop once the gradient norm falls to this value.
    pub grad_tol: f64,
    /// Cap on accepted descent steps.
    pub max_iters: usize,
    /// Sufficient-decrease factor of the line search.
    pub armijo: f64,
    /// Step shrink factor between backtracks.
    pub shrink: f64,
    /// Backtracks per iteration before giving up.
    pub max_backtracks: usize,
    /// Window of past objective values the nonmonotone test compares
    /// against (1 recovers the classic monotone Armijo rule).
    pub memory: usize,
    /// Declare stagnation when the best objective improves by less than
    /// `stagnation_eps` (relative) over this many accepted steps.
    pub stagnation_window: usize,
    pub stagnation_eps: f64,
}

impl Default for RelaxOpts {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iters: 20_000,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 40,
            memory: 40,
            stagnation_window: 30,
            stagnation_eps: 1e-14,
        }
    }
}

/// Result of a relaxation run. `objective` holds the accepted objective
/// values, starting with the objective of the initial map.
#[derive(Debug)]
pub struct RelaxOutcome {
    pub map: StripMap,
    pub objective: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stagnated: bool,
}

struct Unknowns {
    lay: Layout,
    grid: StripGrid,
    n: usize,
    lower: LegendrianJetGraph,
    upper: LegendrianJetGraph,
    mode: FarFieldMode,
    free_cols: Vec<usize>,
    /// Full state with the frozen columns filled in, zero elsewhere.
    state_fix: Vec<f64>,
    /// Chart values of the frozen columns, used when reassembling.
    chart_fix: Vec<(usize, DVector<f64>, DVector<f64>)>,
}

impl Unknowns {
    fn of(w: &StripMap) -> Self {
        let lay = Layout::of(w);
        let grid = *w.grid();
        let n = w.dim();
        let free_cols: Vec<usize> = match w.far_field() {
            FarFieldMode::DirichletToChord => (1..lay.n_tau).collect(),
            FarFieldMode::ZeroTauDerivative => (0..lay.nodes_tau()).collect(),
        };
        let mut state_fix = vec![0.0; lay.node_count() * lay.stride()];
        let mut chart_fix = Vec::new();
        if matches!(w.far_field(), FarFieldMode::DirichletToChord) {
            for i in [0, lay.n_tau] {
                for j in 0..lay.nodes_t() {
                    let x = w.value(i, j);
                    let b = lay.base(i, j);
                    state_fix[b..b + n].copy_from_slice(x.q.as_slice());
                    state_fix[b + n..b + 2 * n].copy_from_slice(x.p.as_slice());
                    state_fix[b + 2 * n] = x.z;
                }
                chart_fix.push((
                    i,
                    w.chart(super::map::EdgeSide::Lower, i).clone(),
                    w.chart(super::map::EdgeSide::Upper, i).clone(),
                ));
            }
        }
        Self {
            lay,
            grid,
            n,
            lower: w.lower_boundary().clone(),
            upper: w.upper_boundary().clone(),
            mode: w.far_field(),
            free_cols,
            state_fix,
            chart_fix,
        }
    }

    fn dof_len(&self) -> usize {
        let st = self.lay.stride();
        self.free_cols.len() * ((self.lay.n_t - 1) * st + 2 * self.n)
    }

    /// Packs the unknown part of a map into a flat vector: interior node
    /// values column by column, then lower charts, then upper charts.
    fn pack(&self, w: &StripMap) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.dof_len());
        for &i in &self.free_cols {
            for j in 1..self.lay.n_t {
                let x = w.value(i, j);
                u.extend_from_slice(x.q.as_slice());
                u.extend_from_slice(x.p.as_slice());
                u.push(x.z);
            }
        }
        for &i in &self.free_cols {
            u.extend_from_slice(w.chart(super::map::EdgeSide::Lower, i).as_slice());
        }
        for &i in &self.free_cols {
            u.extend_from_slice(w.chart(super::map::EdgeSide::Upper, i).as_slice());
        }
        u
    }

    /// Scratch space for one objective evaluation, sized once per run.
    fn work(&self) -> Work {
        let lay = &self.lay;
        Work {
            s: vec![0.0; lay.node_count() * lay.stride()],
            chart_low: vec![DVector::zeros(self.n); lay.nodes_tau()],
            chart_up: vec![DVector::zeros(self.n); lay.nodes_tau()],
            fields: NodeFields::zeroed(lay),
            curl: vec![0.0; lay.n_tau * lay.n_t],
            a_bar: vec![0.0; lay.node_count()],
            b_bar: vec![0.0; lay.node_count()],
            s_bar: vec![0.0; lay.node_count() * lay.stride()],
            g: vec![0.0; self.dof_len()],
            f: f64::INFINITY,
        }
    }

    /// Rebuilds the full state and the chart values behind the edge rows
    /// into the workspace. Returns false when a chart value leaves its
    /// box, which the line search treats as an infeasible trial point.
    fn build_state_into(&self, u: &[f64], w: &mut Work) -> bool {
        let n = self.n;
        let st = self.lay.stride();
        w.s.copy_from_slice(&self.state_fix);
        let mut k = 0;
        for &i in &self.free_cols {
            for j in 1..self.lay.n_t {
                let b = self.lay.base(i, j);
                w.s[b..b + st].copy_from_slice(&u[k..k + st]);
                k += st;
            }
        }
        for (i, cl, cu) in &self.chart_fix {
            w.chart_low[*i].copy_from(cl);
            w.chart_up[*i].copy_from(cu);
        }
        for &i in &self.free_cols {
            w.chart_low[i].as_mut_slice().copy_from_slice(&u[k..k + n]);
            k += n;
        }
        for &i in &self.free_cols {
            w.chart_up[i].as_mut_slice().copy_from_slice(&u[k..k + n]);
            k += n;
        }
        debug_assert_eq!(k, u.len());
        for &i in &self.free_cols {
            let Ok(low) = self.lower.point(&w.chart_low[i]) else {
                return false;
            };
            let b = self.lay.base(i, 0);
            w.s[b..b + n].copy_from_slice(low.q.as_slice());
            w.s[b + n..b + 2 * n].copy_from_slice(low.p.as_slice());
            w.s[b + 2 * n] = low.z;
            let Ok(up) = self.upper.point(&w.chart_up[i]) else {
                return false;
            };
            let b = self.lay.base(i, self.lay.n_t);
            w.s[b..b + n].copy_from_slice(up.q.as_slice());
            w.s[b + n..b + 2 * n].copy_from_slice(up.p.as_slice());
            w.s[b + 2 * n] = up.z;
        }
        true
    }

    /// Objective and gradient, allocating fresh buffers. Test helper and
    /// one-shot entry; the descent loop reuses workspaces instead.
    #[cfg(test)]
    fn fg(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut w = self.work();
        self.fg_into(u, &mut w).then(|| (w.f, w.g))
    }

    /// Objective and its gradient with respect to the unknown vector,
    /// written into the workspace. Returns false on an infeasible point.
    fn fg_into(&self, u: &[f64], w: &mut Work) -> bool {
        if !self.build_state_into(u, w) {
            return false;
        }
        let lay = &self.lay;
        let grid = &self.grid;
        let n = self.n;
        let st = lay.stride();
        let nt = lay.nodes_t();
        let area = grid.cell_area();

        let s = &w.s;
        residual::node_fields_into(lay, grid, s, &mut w.fields);
        let fields = &w.fields;
        residual::cell_curls_into(lay, grid, &fields.a, &fields.b, &mut w.curl);
        let curl = &w.curl;
        w.f = residual::objective_of_fields(lay, grid, fields, curl);

        // Reverse pass. First the per-cell curl terms feed cotangents of
        // the node fields a and b; circ = area * density, and the
        // objective contributes density^2 * area per cell, so
        // d objective / d circ = 2 * density.
        w.a_bar.fill(0.0);
        w.b_bar.fill(0.0);
        let a_bar = &mut w.a_bar;
        let b_bar = &mut w.b_bar;
        let h_tau = grid.h_tau();
        let h_t = grid.h_t();
        for i in 0..lay.n_tau {
            for j in 0..lay.n_t {
                let cb = 2.0 * curl[i * lay.n_t + j];
                let n00 = i * nt + j;
                let n10 = (i + 1) * nt + j;
                let n01 = i * nt + j + 1;
                let n11 = (i + 1) * nt + j + 1;
                let wa = 0.5 * h_tau * cb;
                let wb = 0.5 * h_t * cb;
                a_bar[n00] += wa;
                a_bar[n10] += wa;
                a_bar[n01] -= wa;
                a_bar[n11] -= wa;
                b_bar[n10] += wb;
                b_bar[n11] += wb;
                b_bar[n00] -= wb;
                b_bar[n01] -= wb;
            }
        }

        // Then per node: zeta, a and b cotangents flow into the two
        // derivative blocks and directly into the p slots.
        w.s_bar.fill(0.0);
        let s_bar = &mut w.s_bar;
        let mut dtau_bar = vec![0.0; st];
        let mut dt_bar = vec![0.0; st];
        for i in 0..lay.nodes_tau() {
            for j in 0..lay.nodes_t() {
                let node = i * nt + j;
                let base = node * st;
                dtau_bar.fill(0.0);
                dt_bar.fill(0.0);
                let wz = 2.0 * grid.node_weight(i, j) * area;
                for k in 0..n {
                    let zq = wz * fields.zeta[node * 2 * n + k];
                    let zp = wz * fields.zeta[node * 2 * n + n + k];
                    dtau_bar[k] += 0.5 * zq;
                    dt_bar[n + k] -= 0.5 * zq;
                    dtau_bar[n + k] += 0.5 * zp;
                    dt_bar[k] += 0.5 * zp;
                }
                let ab = a_bar[node];
                let bb = b_bar[node];
                if ab != 0.0 || bb != 0.0 {
                    let dt_blk = &fields.dt[base..base + st];
                    let dtau_blk = &fields.dtau[base..base + st];
                    dt_bar[2 * n] += ab;
                    dtau_bar[2 * n] -= bb;
                    for k in 0..n {
                        let p = s[base + n + k];
                        dt_bar[k] -= ab * p;
                        dtau_bar[k] += bb * p;
                        s_bar[base + n + k] += bb * dtau_blk[k] - ab * dt_blk[k];
                    }
                }
                state::d_tau_adjoint(lay, h_tau, i, j, &dtau_bar, s_bar);
                state::d_t_adjoint(lay, h_t, i, j, &dt_bar, s_bar);
            }
        }

        // Chain from the state cotangent to the unknowns.
        let g = &mut w.g;
        let mut k = 0;
        for &i in &self.free_cols {
            for j in 1..lay.n_t {
                let b = lay.base(i, j);
                g[k..k + st].copy_from_slice(&s_bar[b..b + st]);
                k += st;
            }
        }
        for (graph, charts, row) in [
            (&self.lower, &w.chart_low, 0usize),
            (&self.upper, &w.chart_up, lay.n_t),
        ] {
            for &i in &self.free_cols {
                let b = lay.base(i, row);
                let c = &charts[i];
                let hess = graph.s.hess(c);
                let grad_s = graph.s.grad(c);
                for r in 0..n {
                    let mut acc = s_bar[b + r] + grad_s[r] * s_bar[b + 2 * n];
                    for l in 0..n {
                        acc += hess[(l, r)] * s_bar[b + n + l];
                    }
                    g[k + r] = acc;
                }
                k += n;
            }
        }
        debug_assert_eq!(k, u.len());
        true
    }

    fn assemble(&self, u: &[f64]) -> Result<StripMap> {
        let mut w = self.work();
        assert!(
            self.build_state_into(u, &mut w),
            "accepted iterates stay inside the chart boxes"
        );
        let n = self.n;
        let mut values = Vec::with_capacity(self.lay.node_count());
        for i in 0..self.lay.nodes_tau() {
            for j in 0..self.lay.nodes_t() {
                let b = self.lay.base(i, j);
                values.push(PhasePoint::new(
                    DVector::from_column_slice(&w.s[b..b + n]),
                    DVector::from_column_slice(&w.s[b + n..b + 2 * n]),
                    w.s[b + 2 * n],
                ));
            }
        }
        StripMap::new(
            self.grid,
            self.lower.clone(),
            self.upper.clone(),
            self.mode,
            values,
            w.chart_low,
            w.chart_up,
        )
    }
}

/// Reusable buffers for one objective-and-gradient evaluation. The
/// descent loop keeps three of these and swaps them between iterate,
/// trial and expansion roles, so the hot path performs no allocation.
struct Work {
    s: Vec<f64>,
    chart_low: Vec<DVector<f64>>,
    chart_up: Vec<DVector<f64>>,
    fields: NodeFields,
    curl: Vec<f64>,
    a_bar: Vec<f64>,
    b_bar: Vec<f64>,
    s_bar: Vec<f64>,
    g: Vec<f64>,
    f: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relaxes a strip map toward a residual minimizer.
///
/// The returned map is the best iterate seen, which for a convergent run
/// is the final one.
pub fn relax(w0: &StripMap, opts: &RelaxOpts) -> Result<RelaxOutcome> {
    let prob = Unknowns::of(w0);
    let mut u = prob.pack(w0);
    let mut cur = prob.work();
    let mut trial = prob.work();
    let mut spare = prob.work();
    let mut u_trial = vec![0.0; u.len()];
    let mut u_spare = vec![0.0; u.len()];
    assert!(
        prob.fg_into(&u, &mut cur),
        "the starting map is inside its chart boxes"
    );
    let mut objective = vec![cur.f];
    let mut grad_norm = norm(&cur.g);

    let mut best_u = u.clone();
    let mut best_f = cur.f;
    let mut window_best = cur.f;

    let mut converged = grad_norm <= opts.grad_tol;
    let mut stagnated = false;
    let mut iterations = 0;
    let mut step = 1.0 / grad_norm.max(1.0);
    let mut short_steps: std::collections::VecDeque<f64> = std::collections::VecDeque::new();

    while !converged && iterations < opts.max_iters {
        let f_ref = objective
            .iter()
            .rev()
            .take(opts.memory.max(1))
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let gg = grad_norm * grad_norm;

        let mut accepted_t = None;
        let mut t = step;
        for bt in 0..opts.max_backtracks {
            for k in 0..u.len() {
                u_trial[k] = u[k] - t * cur.g[k];
            }
            if prob.fg_into(&u_trial, &mut trial)
                && trial.f.is_finite()
                && trial.f <= f_ref - opts.armijo * t * gg
            {
                accepted_t = Some(t);
                // The first trial passing outright means the step scale
                // may be far too timid for the softest modes, which the
                // quotient steps cannot discover on their own; expand
                // greedily while the objective improves.
                if bt == 0 {
                    let mut t_exp = t;
                    for _ in 0..opts.max_backtracks {
                        t_exp *= 4.0;
                        for k in 0..u.len() {
                            u_spare[k] = u[k] - t_exp * cur.g[k];
                        }
                        if !prob.fg_into(&u_spare, &mut spare)
                            || !spare.f.is_finite()
                            || spare.f > f_ref - opts.armijo * t_exp * gg
                            || spare.f >= trial.f
                        {
                            break;
                        }
                        std::mem::swap(&mut trial, &mut spare);
                        std::mem::swap(&mut u_trial, &mut u_spare);
                        accepted_t = Some(t_exp);
                    }
                }
                break;
            }
            t *= opts.shrink;
        }
        let Some(t_used) = accepted_t else {
            // No acceptable step along the gradient; the iterate is at
            // the method's resolution floor.
            stagnated = true;
            break;
        };

        // Barzilai-Borwein step for the next iteration, safeguarded.
        // When the two BB formulas disagree strongly the spectrum is
        // stiff there, and the smallest recent short step damps the hard
        // modes best; otherwise the long step makes real progress. This
        // adaptive choice matters on fine grids, where squaring the curl
        // residual leaves the objective very badly conditioned.
        let mut sy = 0.0;
        let mut ss = 0.0;
        let mut yy = 0.0;
        for k in 0..u.len() {
            let sk = u_trial[k] - u[k];
            let yk = trial.g[k] - cur.g[k];
            sy += sk * yk;
            ss += sk * sk;
            yy += yk * yk;
        }
        step = if sy > f64::MIN_POSITIVE && ss > 0.0 && yy > 0.0 {
            let long = ss / sy;
            let short = sy / yy;
            short_steps.push_back(short);
            if short_steps.len() > 5 {
                short_steps.pop_front();
            }
            let pick = if short < 0.15 * long {
                short_steps.iter().cloned().fold(f64::INFINITY, f64::min)
            } else {
                long
            };
            pick.clamp(1e-14, 1e14)
        } else {
            t_used
        };

        std::mem::swap(&mut u, &mut u_trial);
        std::mem::swap(&mut cur, &mut trial);
        grad_norm = norm(&cur.g);
        objective.push(cur.f);
        iterations += 1;
        if cur.f < best_f {
            best_f = cur.f;
            best_u.copy_from_slice(&u);
        }
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        if iterations % opts.stagnation_window == 0 {
            let rel = (window_best - best_f).abs() / window_best.abs().max(f64::MIN_POSITIVE);
            if rel < opts.stagnation_eps {
                stagnated = true;
                break;
            }
            window_best = best_f;
        }
    }

    let map = prob.assemble(&best_u)?;
    Ok(RelaxOutcome {
        map,
        objective,
        grad_norm,
        iterations,
        converged,
        stagnated,
    })
}
