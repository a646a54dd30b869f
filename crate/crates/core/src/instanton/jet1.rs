//! Direct two-stage solve of the strip boundary-value problem for
//! one-jet graph boundaries.
//!
//! For boundaries that are graphs j^1 S with S constant or quadratic the
//! problem splits into two linear solves:
//!
//! 1. the (q, p) channels satisfy a Cauchy-Riemann system in the frame
//!    coordinates, with the edge rows tied to the graphs through their
//!    chart values; this is a linear least-squares problem solved here by
//!    conjugate gradients on the normal equations, matrix free;
//! 2. given (q, p), closedness of the rotated pullback form is a Poisson
//!    equation for z with right-hand side div(p grad q), discretized with
//!    face fluxes so the five-point system stays symmetric positive
//!    definite; t-edge rows carry Dirichlet data z = S(chart) and the far
//!    columns are either frozen or left to the natural no-flux condition.

use nalgebra::{DMatrix, DVector};

use super::grid::StripGrid;
use super::map::{FarFieldMode, StripMap};
use super::state::{self, Layout};
use crate::error::{Error, Result};
use crate::geometry::{LegendrianJetGraph, PhasePoint};

/// Far-field closure of the linear strip solve.
#[derive(Debug, Clone)]
pub enum Jet1FarField {
    /// Freeze both far columns to prescribed profiles (row index runs
    /// over the t nodes, so each profile has n_t + 1 points).
    Dirichlet {
        left: Vec<PhasePoint>,
        right: Vec<PhasePoint>,
    },
    /// Leave the far columns free. Least squares then imposes the
    /// variational no-flux conditions on both stages.
    ZeroTauDerivative,
}

/// Iteration controls shared by the two conjugate-gradient stages.
#[derive(Debug, Clone, Copy)]
pub struct Jet1Opts {
    /// Relative tolerance on the normal-equation residual (stage one)
    /// and on the Poisson residual (stage two).
    pub cg_tol: f64,
    /// Iteration cap per stage; exhausted caps are reported as errors.
    pub cg_max_iters: usize,
}

impl Default for Jet1Opts {
    fn default() -> Self {
        Self {
            cg_tol: 1e-11,
            cg_max_iters: 50_000,
        }
    }
}

/// A solved strip plus the iteration counts that produced it.
#[derive(Debug)]
pub struct Jet1Solution {
    pub map: StripMap,
    pub cr_iterations: usize,
    /// Final absolute normal-equation residual of stage one.
    pub cr_normal_residual: f64,
    pub poisson_iterations: usize,
    /// Final Poisson residual of stage two, relative to the data norm.
    pub poisson_residual: f64,
}

/// Tolerance used when checking that prescribed far columns meet the
/// edge graphs at the corners.
const CORNER_TOL: f64 = 1e-8;

struct Problem {
    lay: Layout,
    grid: StripGrid,
    n: usize,
    lower: LegendrianJetGraph,
    upper: LegendrianJetGraph,
    hess_lower: DMatrix<f64>,
    hess_upper: DMatrix<f64>,
    /// Columns whose interior nodes and chart values are unknowns.
    free_cols: Vec<usize>,
    /// sqrt(node weight times cell area) per node, the quadrature weight
    /// applied to each residual block.
    wgt: Vec<f64>,
    /// Fixed part of the state: frozen far columns, zero elsewhere.
    state_fix: Vec<f64>,
    /// Chart values of frozen columns, taken from their corner rows.
    chart_fix: Vec<(usize, DVector<f64>, DVector<f64>)>,
}

impl Problem {
    fn dof_len(&self) -> usize {
        let interior = self.free_cols.len() * (self.lay.n_t - 1) * 2 * self.n;
        let charts = self.free_cols.len() * 2 * self.n;
        interior + charts
    }

    /// Scatters unknowns into a zeroed full state. Edge-row nodes get
    /// q from the chart and p from the (constant) Hessian, which is the
    /// exact graph map for the supported generating functions.
    fn embed(&self, u: &[f64], s: &mut [f64]) {
        s.fill(0.0);
        let n = self.n;
        let st = self.lay.stride();
        let mut k = 0;
        for &i in &self.free_cols {
            for j in 1..self.lay.n_t {
                let b = self.lay.base(i, j);
                s[b..b + 2 * n].copy_from_slice(&u[k..k + 2 * n]);
                k += 2 * n;
            }
        }
        for &i in &self.free_cols {
            let b = self.lay.base(i, 0);
            for r in 0..n {
                s[b + r] = u[k + r];
                for c in 0..n {
                    s[b + n + r] += self.hess_lower[(r, c)] * u[k + c];
                }
            }
            k += n;
        }
        for &i in &self.free_cols {
            let b = self.lay.base(i, self.lay.n_t);
            for r in 0..n {
                s[b + r] = u[k + r];
                for c in 0..n {
                    s[b + n + r] += self.hess_upper[(r, c)] * u[k + c];
                }
            }
            k += n;
        }
        debug_assert_eq!(k, u.len());
        debug_assert_eq!(s.len(), self.lay.node_count() * st);
    }

    /// Transpose of `embed`.
    fn embed_t(&self, s: &[f64], u: &mut [f64]) {
        let n = self.n;
        let mut k = 0;
        for &i in &self.free_cols {
            for j in 1..self.lay.n_t {
                let b = self.lay.base(i, j);
                u[k..k + 2 * n].copy_from_slice(&s[b..b + 2 * n]);
                k += 2 * n;
            }
        }
        for &i in &self.free_cols {
            let b = self.lay.base(i, 0);
            for r in 0..n {
                u[k + r] = s[b + r];
                for c in 0..n {
                    u[k + r] += self.hess_lower[(c, r)] * s[b + n + c];
                }
            }
            k += n;
        }
        for &i in &self.free_cols {
            let b = self.lay.base(i, self.lay.n_t);
            for r in 0..n {
                u[k + r] = s[b + r];
                for c in 0..n {
                    u[k + r] += self.hess_upper[(c, r)] * s[b + n + c];
                }
            }
            k += n;
        }
        debug_assert_eq!(k, u.len());
    }

    /// Weighted frame-coordinate residual of the linear system, one
    /// block of 2n values per node.
    fn residual_op(&self, s: &[f64], out: &mut [f64]) {
        let n = self.n;
        let st = self.lay.stride();
        let mut dtau = vec![0.0; st];
        let mut dt = vec![0.0; st];
        for i in 0..self.lay.nodes_tau() {
            for j in 0..self.lay.nodes_t() {
                state::d_tau(&self.lay, s, self.grid.h_tau(), i, j, &mut dtau);
                state::d_t(&self.lay, s, self.grid.h_t(), i, j, &mut dt);
                let node = i * self.lay.nodes_t() + j;
                let blk = &mut out[node * 2 * n..(node + 1) * 2 * n];
                state::zeta_components(n, &dtau, &dt, blk);
                let w = self.wgt[node];
                for v in blk {
                    *v *= w;
                }
            }
        }
    }

    /// Transpose of `residual_op`.
    fn residual_op_t(&self, r: &[f64], s: &mut [f64]) {
        s.fill(0.0);
        let n = self.n;
        let st = self.lay.stride();
        let mut dtau_bar = vec![0.0; st];
        let mut dt_bar = vec![0.0; st];
        for i in 0..self.lay.nodes_tau() {
            for j in 0..self.lay.nodes_t() {
                let node = i * self.lay.nodes_t() + j;
                let w = self.wgt[node];
                let blk = &r[node * 2 * n..(node + 1) * 2 * n];
                dtau_bar.fill(0.0);
                dt_bar.fill(0.0);
                for k in 0..n {
                    let zq = w * blk[k];
                    let zp = w * blk[n + k];
                    dtau_bar[k] += 0.5 * zq;
                    dt_bar[n + k] -= 0.5 * zq;
                    dtau_bar[n + k] += 0.5 * zp;
                    dt_bar[k] += 0.5 * zp;
                }
                state::d_tau_adjoint(&self.lay, self.grid.h_tau(), i, j, &dtau_bar, s);
                state::d_t_adjoint(&self.lay, self.grid.h_t(), i, j, &dt_bar, s);
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks one prescribed far column against the boundary graphs and the
/// grid, and returns its chart values at the two corners.
fn check_column(
    which: &str,
    col: &[PhasePoint],
    n: usize,
    grid: &StripGrid,
    lower: &LegendrianJetGraph,
    upper: &LegendrianJetGraph,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if col.len() != grid.nodes_t() {
        return Err(Error::DimensionMismatch {
            expected: grid.nodes_t(),
            got: col.len(),
        });
    }
    for x in col {
        if x.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.dim(),
            });
        }
        if !x.is_finite() {
            return Err(Error::InconsistentBoundary(format!(
                "{which} far column contains non-finite values"
            )));
        }
    }
    for (side, graph, x) in [
        ("lower", lower, &col[0]),
        ("upper", upper, &col[grid.n_t()]),
    ] {
        let defect = graph.defect(x).amax();
        let scale = 1.0 + x.p.amax() + x.z.abs();
        if defect > CORNER_TOL * scale {
            return Err(Error::InconsistentBoundary(format!(
                "{which} far column misses the {side} edge graph by {defect:.3e}"
            )));
        }
    }
    Ok((col[0].q.clone(), col[grid.n_t()].q.clone()))
}

/// Solves the strip boundary-value problem between two jet graphs.
pub fn solve_jet1(
    lower: &LegendrianJetGraph,
    upper: &LegendrianJetGraph,
    grid: StripGrid,
    far_field: &Jet1FarField,
    opts: &Jet1Opts,
) -> Result<Jet1Solution> {
    let n = lower.n;
    if upper.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: upper.n,
        });
    }
    let lay = Layout {
        n,
        n_tau: grid.intervals().0,
        n_t: grid.intervals().1,
    };

    let free_cols: Vec<usize> = match far_field {
        Jet1FarField::Dirichlet { .. } => (1..lay.n_tau).collect(),
        Jet1FarField::ZeroTauDerivative => (0..lay.nodes_tau()).collect(),
    };

    let area = grid.cell_area();
    let mut wgt = vec![0.0; lay.node_count()];
    for i in 0..lay.nodes_tau() {
        for j in 0..lay.nodes_t() {
            wgt[i * lay.nodes_t() + j] = (grid.node_weight(i, j) * area).sqrt();
        }
    }

    let zero_q = DVector::zeros(n);
    let mut prob = Problem {
        lay,
        grid,
        n,
        lower: lower.clone(),
        upper: upper.clone(),
        hess_lower: lower.s.hess(&zero_q),
        hess_upper: upper.s.hess(&zero_q),
        free_cols,
        wgt,
        state_fix: vec![0.0; lay.node_count() * lay.stride()],
        chart_fix: Vec::new(),
    };

    if let Jet1FarField::Dirichlet { left, right } = far_field {
        for (i, col) in [(0usize, left), (lay.n_tau, right)] {
            let which = if i == 0 { "left" } else { "right" };
            let (c_low, c_up) = check_column(which, col, n, &grid, lower, upper)?;
            for (j, x) in col.iter().enumerate() {
                let b = prob.lay.base(i, j);
                prob.state_fix[b..b + n].copy_from_slice(x.q.as_slice());
                prob.state_fix[b + n..b + 2 * n].copy_from_slice(x.p.as_slice());
                prob.state_fix[b + 2 * n] = x.z;
            }
            // Snap the corner rows onto the graphs so the edge rows of
            // the result are exactly Legendrian.
            for (j, graph, c) in [(0usize, lower, &c_low), (grid.n_t(), upper, &c_up)] {
                let x = graph.point(c)?;
                let b = prob.lay.base(i, j);
                prob.state_fix[b..b + n].copy_from_slice(x.q.as_slice());
                prob.state_fix[b + n..b + 2 * n].copy_from_slice(x.p.as_slice());
                prob.state_fix[b + 2 * n] = x.z;
            }
            prob.chart_fix.push((i, c_low, c_up));
        }
    }

    // Stage one: conjugate gradients on the normal equations of the
    // weighted frame-coordinate system, matrix free.
    let dof = prob.dof_len();
    let res_len = lay.node_count() * 2 * n;
    let mut x = vec![0.0; dof];
    let mut state = vec![0.0; lay.node_count() * lay.stride()];
    let mut resid = vec![0.0; res_len];

    prob.residual_op(&prob.state_fix, &mut resid);
    for v in resid.iter_mut() {
        *v = -*v;
    }
    let mut s_dir = vec![0.0; dof];
    prob.residual_op_t(&resid, &mut state);
    prob.embed_t(&state, &mut s_dir);
    let norm_b = dot(&s_dir, &s_dir).sqrt();
    let target = opts.cg_tol * norm_b;

    let mut gamma = dot(&s_dir, &s_dir);
    let mut p_dir = s_dir.clone();
    let mut q_res = vec![0.0; res_len];
    let mut cr_iterations = 0;
    let mut cr_normal_residual = gamma.sqrt();
    while cr_normal_residual > target && cr_normal_residual > f64::MIN_POSITIVE {
        if cr_iterations >= opts.cg_max_iters {
            return Err(Error::SingularSystem(format!(
                "frame-coordinate stage stalled at normal residual {cr_normal_residual:.3e} \
                 after {cr_iterations} iterations"
            )));
        }
        prob.embed(&p_dir, &mut state);
        prob.residual_op(&state, &mut q_res);
        let qq = dot(&q_res, &q_res);
        if qq <= f64::MIN_POSITIVE {
            break;
        }
        let alpha = gamma / qq;
        for (xv, pv) in x.iter_mut().zip(&p_dir) {
            *xv += alpha * pv;
        }
        for (rv, qv) in resid.iter_mut().zip(&q_res) {
            *rv -= alpha * qv;
        }
        prob.residual_op_t(&resid, &mut state);
        prob.embed_t(&state, &mut s_dir);
        let gamma_next = dot(&s_dir, &s_dir);
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        for (pv, sv) in p_dir.iter_mut().zip(&s_dir) {
            *pv = sv + beta * *pv;
        }
        cr_iterations += 1;
        cr_normal_residual = gamma.sqrt();
    }

    // Assemble the solved (q, p) state and the chart values.
    prob.embed(&x, &mut state);
    for (sv, fv) in state.iter_mut().zip(&prob.state_fix) {
        *sv += fv;
    }
    let mut chart_low: Vec<DVector<f64>> = vec![DVector::zeros(n); lay.nodes_tau()];
    let mut chart_up: Vec<DVector<f64>> = vec![DVector::zeros(n); lay.nodes_tau()];
    for i in 0..lay.nodes_tau() {
        let b0 = lay.base(i, 0);
        let b1 = lay.base(i, lay.n_t);
        chart_low[i] = DVector::from_column_slice(&state[b0..b0 + n]);
        chart_up[i] = DVector::from_column_slice(&state[b1..b1 + n]);
    }
    for (i, c_low, c_up) in &prob.chart_fix {
        chart_low[*i] = c_low.clone();
        chart_up[*i] = c_up.clone();
    }

    // Stage two: Poisson solve for z over the same grid.
    let (z, poisson_iterations, poisson_residual) =
        solve_z(&prob, &state, &chart_low, &chart_up, opts)?;

    let mut values = Vec::with_capacity(lay.node_count());
    for i in 0..lay.nodes_tau() {
        for j in 0..lay.nodes_t() {
            let b = lay.base(i, j);
            values.push(PhasePoint::new(
                DVector::from_column_slice(&state[b..b + n]),
                DVector::from_column_slice(&state[b + n..b + 2 * n]),
                z[i * lay.nodes_t() + j],
            ));
        }
    }
    let mode = match far_field {
        Jet1FarField::Dirichlet { .. } => FarFieldMode::DirichletToChord,
        Jet1FarField::ZeroTauDerivative => FarFieldMode::ZeroTauDerivative,
    };
    let map = StripMap::new(
        grid,
        lower.clone(),
        upper.clone(),
        mode,
        values,
        chart_low,
        chart_up,
    )?;

    Ok(Jet1Solution {
        map,
        cr_iterations,
        cr_normal_residual,
        poisson_iterations,
        poisson_residual,
    })
}

/// Face of the dual mesh used by the z stage: the z difference across it
/// must match the p grad q flux through it.
struct Face {
    a: usize,
    b: usize,
    /// Dual area over squared step, the stiffness weight.
    k: f64,
    /// Target difference z_b - z_a, namely p_mid . (q_b - q_a).
    g: f64,
}

fn solve_z(
    prob: &Problem,
    state: &[f64],
    chart_low: &[DVector<f64>],
    chart_up: &[DVector<f64>],
    opts: &Jet1Opts,
) -> Result<(Vec<f64>, usize, f64)> {
    let lay = &prob.lay;
    let grid = &prob.grid;
    let n = prob.n;
    let nt = lay.nodes_t();
    let node_count = lay.node_count();

    let neumann = prob.chart_fix.is_empty();
    let mut free = vec![false; node_count];
    for i in 0..lay.nodes_tau() {
        let col_free = neumann || (i != 0 && i != lay.n_tau);
        for j in 1..lay.n_t {
            free[i * nt + j] = col_free;
        }
    }

    // Fixed values: edge rows from the charts, frozen columns from the
    // prescribed data already present in the state.
    let mut z0 = vec![0.0; node_count];
    for i in 0..lay.nodes_tau() {
        z0[i * nt] = prob.lower.s.value(&chart_low[i]);
        z0[i * nt + lay.n_t] = prob.upper.s.value(&chart_up[i]);
    }
    if !neumann {
        for i in [0, lay.n_tau] {
            for j in 1..lay.n_t {
                z0[i * nt + j] = state[lay.base(i, j) + 2 * n];
            }
        }
    }
    // Warm start: interpolate the edge rows down each free column.
    for i in 0..lay.nodes_tau() {
        for j in 1..lay.n_t {
            if free[i * nt + j] {
                let f = j as f64 / lay.n_t as f64;
                z0[i * nt + j] = (1.0 - f) * z0[i * nt] + f * z0[i * nt + lay.n_t];
            }
        }
    }

    let flux = |a: usize, b: usize| -> f64 {
        let ba = a * lay.stride();
        let bb = b * lay.stride();
        let mut g = 0.0;
        for k in 0..n {
            let p_mid = 0.5 * (state[ba + n + k] + state[bb + n + k]);
            g += p_mid * (state[bb + k] - state[ba + k]);
        }
        g
    };

    let h_tau = grid.h_tau();
    let h_t = grid.h_t();
    let mut faces = Vec::with_capacity(2 * node_count);
    for i in 0..lay.n_tau {
        for j in 0..nt {
            let w = if j == 0 || j == lay.n_t { 0.5 } else { 1.0 };
            let a = i * nt + j;
            let b = (i + 1) * nt + j;
            faces.push(Face {
                a,
                b,
                k: w * h_t / h_tau,
                g: flux(a, b),
            });
        }
    }
    for i in 0..lay.nodes_tau() {
        for j in 0..lay.n_t {
            let w = if i == 0 || i == lay.n_tau { 0.5 } else { 1.0 };
            let a = i * nt + j;
            let b = i * nt + j + 1;
            faces.push(Face {
                a,
                b,
                k: w * h_tau / h_t,
                g: flux(a, b),
            });
        }
    }

    let apply = |x: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        for f in &faces {
            let e = f.k * (x[f.b] - x[f.a]);
            out[f.b] += e;
            out[f.a] -= e;
        }
        for (o, fr) in out.iter_mut().zip(&free) {
            if !fr {
                *o = 0.0;
            }
        }
    };

    // b = -grad E(z0) on the free nodes.
    let mut b = vec![0.0; node_count];
    for f in &faces {
        let e = f.k * (z0[f.b] - z0[f.a] - f.g);
        b[f.b] -= e;
        b[f.a] += e;
    }
    for (bv, fr) in b.iter_mut().zip(&free) {
        if !fr {
            *bv = 0.0;
        }
    }

    let norm_b = dot(&b, &b).sqrt();
    let mut x = vec![0.0; node_count];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; node_count];
    let mut rr = dot(&r, &r);
    let mut iters = 0;
    let target = opts.cg_tol * norm_b;
    while rr.sqrt() > target && rr.sqrt() > f64::MIN_POSITIVE {
        if iters >= opts.cg_max_iters {
            return Err(Error::SingularSystem(format!(
                "z stage stalled at residual {:.3e} after {iters} iterations",
                rr.sqrt()
            )));
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SingularSystem(
                "z stage lost positive definiteness".into(),
            ));
        }
        let alpha = rr / pap;
        for k in 0..node_count {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for k in 0..node_count {
            p[k] = r[k] + beta * p[k];
        }
        iters += 1;
    }
    for k in 0..node_count {
        z0[k] += x[k];
    }
    let rel = if norm_b > 0.0 { rr.sqrt() / norm_b } else { 0.0 };
    Ok((z0, iters, rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeneratingFn;
    use crate::instanton::residual;
    use crate::instanton::sector::{sector_exact, sector_graphs, sector_point};

    fn column(w: &StripMap, i: usize) -> Vec<PhasePoint> {
        (0..w.grid().nodes_t())
            .map(|j| w.value(i, j).clone())
            .collect()
    }

    #[test]
    fn trivial_chord_is_recovered_exactly() {
        let grid = StripGrid::new(-1.0, 1.0, 16, 8).unwrap();
        let lower = LegendrianJetGraph::zero_section(1);
        let upper = LegendrianJetGraph::new(1, GeneratingFn::Constant(0.7), 10.0);
        let q0 = DVector::from_element(1, 0.3);
        let chord =
            StripMap::reeb_chord_strip(grid, lower.clone(), upper.clone(), &q0).unwrap();
        let far = Jet1FarField::Dirichlet {
            left: column(&chord, 0),
            right: column(&chord, grid.n_tau()),
        };
        let sol = solve_jet1(&lower, &upper, grid, &far, &Jet1Opts::default()).unwrap();
        assert!(sol.map.max_node_distance(&chord) < 1e-9);
        assert!(residual::residual(&sol.map).norms().max() < 1e-9);
    }

    #[test]
    fn free_columns_recover_chord_without_data() {
        let grid = StripGrid::new(0.0, 2.0, 16, 8).unwrap();
        let lower = LegendrianJetGraph::zero_section(1);
        let upper = LegendrianJetGraph::new(1, GeneratingFn::Constant(0.7), 10.0);
        let chord = StripMap::reeb_chord_strip(
            grid,
            lower.clone(),
            upper.clone(),
            &DVector::zeros(1),
        )
        .unwrap();
        let sol = solve_jet1(
            &lower,
            &upper,
            grid,
            &Jet1FarField::ZeroTauDerivative,
            &Jet1Opts::default(),
        )
        .unwrap();
        assert_eq!(sol.cr_iterations, 0, "zero data should converge at once");
        assert!(sol.map.max_node_distance(&chord) < 1e-8);
        assert!(residual::residual(&sol.map).norms().max() < 1e-8);
    }

    #[test]
    fn sector_solution_converges_at_second_order() {
        let a = 1.0;
        let r = 1.0;
        let (lower, upper) = sector_graphs(a);
        let mut errs = Vec::new();
        let mut resids = Vec::new();
        for (ntau, nt) in [(32, 16), (64, 32)] {
            let grid = StripGrid::new(0.0, 2.0, ntau, nt).unwrap();
            let exact = sector_exact(grid, a, r);
            let far = Jet1FarField::Dirichlet {
                left: column(&exact, 0),
                right: column(&exact, ntau),
            };
            let sol = solve_jet1(&lower, &upper, grid, &far, &Jet1Opts::default()).unwrap();
            errs.push(sol.map.max_node_distance(&exact));
            resids.push(residual::residual(&sol.map).norms().zeta_l2);
        }
        let err_ratio = errs[0] / errs[1];
        assert!(
            (2.5..=8.0).contains(&err_ratio),
            "node error {:.3e} -> {:.3e}, ratio {err_ratio:.2}",
            errs[0],
            errs[1]
        );
        let res_ratio = resids[0] / resids[1];
        assert!(
            (2.5..=8.0).contains(&res_ratio),
            "zeta residual {:.3e} -> {:.3e}, ratio {res_ratio:.2}",
            resids[0],
            resids[1]
        );
    }

    #[test]
    fn solved_sector_keeps_edge_rows_on_the_graphs() {
        let a = 1.0;
        let (lower, upper) = sector_graphs(a);
        let grid = StripGrid::new(0.0, 2.0, 24, 12).unwrap();
        let exact = sector_exact(grid, a, 1.0);
        let far = Jet1FarField::Dirichlet {
            left: column(&exact, 0),
            right: column(&exact, 24),
        };
        let sol = solve_jet1(&lower, &upper, grid, &far, &Jet1Opts::default()).unwrap();
        for i in 0..grid.nodes_tau() {
            let low = sol.map.value(i, 0);
            let up = sol.map.value(i, grid.n_t());
            assert!(lower.defect(low).amax() < 1e-14);
            assert!(upper.defect(up).amax() < 1e-14);
        }
    }

    #[test]
    fn iteration_cap_is_reported_as_an_error() {
        let (lower, upper) = sector_graphs(1.0);
        let grid = StripGrid::new(0.0, 2.0, 16, 8).unwrap();
        let exact = sector_exact(grid, 1.0, 1.0);
        let far = Jet1FarField::Dirichlet {
            left: column(&exact, 0),
            right: column(&exact, 16),
        };
        let opts = Jet1Opts {
            cg_tol: 1e-14,
            cg_max_iters: 2,
        };
        match solve_jet1(&lower, &upper, grid, &far, &opts) {
            Err(Error::SingularSystem(_)) => {}
            other => panic!("expected an iteration-cap error, got {other:?}"),
        }
    }

    #[test]
    fn off_graph_corner_is_rejected() {
        let (lower, upper) = sector_graphs(1.0);
        let grid = StripGrid::new(0.0, 2.0, 16, 8).unwrap();
        let exact = sector_exact(grid, 1.0, 1.0);
        let mut left = column(&exact, 0);
        left[0].p[0] += 0.5;
        let far = Jet1FarField::Dirichlet {
            left,
            right: column(&exact, 16),
        };
        match solve_jet1(&lower, &upper, grid, &far, &Jet1Opts::default()) {
            Err(Error::InconsistentBoundary(msg)) => {
                assert!(msg.contains("lower edge"), "{msg}");
            }
            other => panic!("expected a boundary mismatch, got {other:?}"),
        }
    }

    #[test]
    fn short_column_is_rejected() {
        let (lower, upper) = sector_graphs(1.0);
        let grid = StripGrid::new(0.0, 2.0, 16, 8).unwrap();
        let exact = sector_exact(grid, 1.0, 1.0);
        let mut left = column(&exact, 0);
        left.pop();
        let far = Jet1FarField::Dirichlet {
            left,
            right: column(&exact, 16),
        };
        match solve_jet1(&lower, &upper, grid, &far, &Jet1Opts::default()) {
            Err(Error::DimensionMismatch { .. }) => {}
            other => panic!("expected a length mismatch, got {other:?}"),
        }
    }

    #[test]
    fn solved_sector_matches_closed_form_pointwise() {
        let a = 1.0;
        let (lower, upper) = sector_graphs(a);
        let grid = StripGrid::new(0.0, 2.0, 48, 24).unwrap();
        let exact = sector_exact(grid, a, 1.0);
        let far = Jet1FarField::Dirichlet {
            left: column(&exact, 0),
            right: column(&exact, 48),
        };
        let sol = solve_jet1(&lower, &upper, grid, &far, &Jet1Opts::default()).unwrap();
        let mid = sol.map.value(24, 12);
        let want = sector_point(a, 1.0, grid.tau(24), grid.t(12));
        let d = (&mid.q - &want.q).amax().max((&mid.p - &want.p).amax());
        assert!(d < 5e-4, "midpoint off by {d:.3e}");
        assert!((mid.z - want.z).abs() < 5e-4);
    }
}
