//! Path functionals over contact Hamiltonian dynamics: the action
//! A(gamma) = -int gamma*lambda - int H dt, its first variation in the
//! pi/Reeb-split form, residuals of Hamilton's equation, Reeb-translation
//! lifting of pi-critical paths, and a shooting chord finder between
//! jet-graph Legendrians.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::calculus::{hamiltonian_vector_field, integrate_span};
use crate::error::{Error, Result};
use crate::field::{HamGrad, HamHess, HamiltonianField};
use crate::geometry::{
    lambda, reeb_vector, triad_norm, xi_project, LegendrianJetGraph, PhasePoint, TangentVector,
};

/// Uniformly sampled path in R^(2n+1).
///
/// Uniform spacing is load-bearing: velocity stencils and the quadrature
/// below assume it.
#[derive(Debug, Clone)]
pub struct ContactPath {
    times: Vec<f64>,
    points: Vec<PhasePoint>,
}

impl ContactPath {
    pub fn new(times: Vec<f64>, points: Vec<PhasePoint>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::PathTooShort {
                need: 2,
                got: times.len(),
            });
        }
        assert_eq!(times.len(), points.len(), "times and points differ");
        let dt = times[1] - times[0];
        assert!(dt > 0.0, "path times must increase");
        for k in 1..times.len() {
            let step = times[k] - times[k - 1];
            assert!(
                (step - dt).abs() <= 1e-9 * dt.abs().max(1.0),
                "path sampling must be uniform"
            );
        }
        Ok(Self { times, points })
    }

    /// Samples t -> f(t) uniformly on [0, t_end].
    pub fn from_fn<F>(t_end: f64, samples: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> PhasePoint,
    {
        assert!(t_end > 0.0 && samples >= 2, "need t_end > 0 and >= 2 samples");
        let dt = t_end / (samples - 1) as f64;
        let times: Vec<f64> = (0..samples).map(|k| k as f64 * dt).collect();
        let points = times.iter().map(|&t| f(t)).collect();
        Self::new(times, points)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap() - self.times[0]
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn point(&self, k: usize) -> &PhasePoint {
        &self.points[k]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn end(&self) -> &PhasePoint {
        self.points.last().unwrap()
    }

    /// Samplewise velocities by finite differences on the uniform grid:
    /// 4th-order stencils given >= 5 samples, else 2nd-order, else the secant.
    pub fn velocities(&self) -> Vec<TangentVector> {
        let n = self.dim();
        let m = self.len();
        let h = self.dt();
        let flats: Vec<DVector<f64>> = self.points.iter().map(PhasePoint::to_flat).collect();
        let mut out = Vec::with_capacity(m);
        if m >= 5 {
            for k in 0..m {
                let d = if k >= 2 && k + 2 < m {
                    (&flats[k - 2] - &flats[k - 1] * 8.0 + &flats[k + 1] * 8.0 - &flats[k + 2])
                        / (12.0 * h)
                } else if k < 2 {
                    let (f0, f1, f2, f3, f4) =
                        (&flats[k], &flats[k + 1], &flats[k + 2], &flats[k + 3], &flats[k + 4]);
                    if k == 0 {
                        (f0 * -25.0 + f1 * 48.0 - f2 * 36.0 + f3 * 16.0 - f4 * 3.0) / (12.0 * h)
                    } else {
                        (&flats[k - 1] * -3.0 + f0 * -10.0 + f1 * 18.0 - f2 * 6.0 + f3 * 1.0)
                            / (12.0 * h)
                    }
                } else {
                    let (f0, f1, f2, f3, f4) =
                        (&flats[k], &flats[k - 1], &flats[k - 2], &flats[k - 3], &flats[k - 4]);
                    if k == m - 1 {
                        (f0 * 25.0 - f1 * 48.0 + f2 * 36.0 - f3 * 16.0 + f4 * 3.0) / (12.0 * h)
                    } else {
                        (&flats[k + 1] * 3.0 + f0 * 10.0 - f1 * 18.0 + f2 * 6.0 - f3 * 1.0)
                            / (12.0 * h)
                    }
                };
                out.push(TangentVector::from_flat(n, &d));
            }
        } else if m >= 3 {
            for k in 0..m {
                let d = if k == 0 {
                    (&flats[0] * -3.0 + &flats[1] * 4.0 - &flats[2]) / (2.0 * h)
                } else if k == m - 1 {
                    (&flats[m - 1] * 3.0 - &flats[m - 2] * 4.0 + &flats[m - 3]) / (2.0 * h)
                } else {
                    (&flats[k + 1] - &flats[k - 1]) / (2.0 * h)
                };
                out.push(TangentVector::from_flat(n, &d));
            }
        } else {
            let d = (&flats[1] - &flats[0]) / h;
            out.push(TangentVector::from_flat(n, &d));
            out.push(TangentVector::from_flat(n, &d));
        }
        out
    }

    /// Coordinate-shifted copy x_k + s eta_k, for action differencing.
    pub fn offset_by(&self, eta: &VariationField, s: f64) -> ContactPath {
        assert_eq!(eta.len(), self.len(), "variation length mismatch");
        let points = self
            .points
            .iter()
            .zip(eta.vectors())
            .map(|(x, v)| x.offset(v, s))
            .collect();
        ContactPath {
            times: self.times.clone(),
            points,
        }
    }
}

/// Samples the Hamiltonian flow of `h` from x0 on a uniform grid over
/// [0, t_end], integrating each gap with the fixed `substep`.
pub fn sample_flow(
    h: &dyn HamiltonianField,
    x0: &PhasePoint,
    t_end: f64,
    samples: usize,
    substep: f64,
) -> Result<ContactPath> {
    assert!(t_end > 0.0 && samples >= 2, "need t_end > 0 and >= 2 samples");
    let dt = t_end / (samples - 1) as f64;
    let mut times = Vec::with_capacity(samples);
    let mut points = Vec::with_capacity(samples);
    times.push(0.0);
    points.push(x0.clone());
    let mut x = x0.clone();
    for k in 0..samples - 1 {
        let t_a = k as f64 * dt;
        let t_b = (k + 1) as f64 * dt;
        let (xn, _) = integrate_span(h, &x, 0.0, t_a, t_b, substep)?;
        x = xn;
        times.push(t_b);
        points.push(x.clone());
    }
    ContactPath::new(times, points)
}

/// Vector field along a path, with its xi/Reeb decomposition channels.
#[derive(Debug, Clone)]
pub struct VariationField {
    vectors: Vec<TangentVector>,
}

impl VariationField {
    pub fn new(vectors: Vec<TangentVector>) -> Self {
        assert!(!vectors.is_empty(), "variation needs samples");
        Self { vectors }
    }

    pub fn zero(n: usize, len: usize) -> Self {
        Self::new(vec![TangentVector::zeros(n); len])
    }

    pub fn from_fn<F>(path: &ContactPath, f: F) -> Self
    where
        F: Fn(f64) -> TangentVector,
    {
        Self::new(path.times().iter().map(|&t| f(t)).collect())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, k: usize) -> &TangentVector {
        &self.vectors[k]
    }

    pub fn vectors(&self) -> &[TangentVector] {
        &self.vectors
    }

    /// Reeb channel a(t_k) = lambda(eta(t_k)) at the path's base points.
    pub fn a(&self, path: &ContactPath, k: usize) -> f64 {
        lambda(path.point(k), &self.vectors[k])
    }

    /// xi channel eta^pi(t_k).
    pub fn eta_pi(&self, path: &ContactPath, k: usize) -> TangentVector {
        xi_project(path.point(k), &self.vectors[k])
    }

    /// Max reconstruction defect of eta^pi + a R against eta; round-off scale.
    pub fn reconstruct_defect(&self, path: &ContactPath) -> f64 {
        let r = reeb_vector(path.dim());
        (0..self.len()).fold(0.0f64, |m, k| {
            let rebuilt = self.eta_pi(path, k).add(&r.scale(self.a(path, k)));
            m.max(rebuilt.sub(&self.vectors[k]).coord_norm())
        })
    }
}

fn trapezoid(dt: f64, values: &[f64]) -> f64 {
    let m = values.len();
    if m < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..m - 1].iter().sum();
    dt * (0.5 * (values[0] + values[m - 1]) + interior)
}

/// A(gamma) = -int (lambda(gamma') + H(t, gamma)) dt by trapezoid quadrature.
///
/// Velocities come from 4th-order stencils, so the quadrature's O(h^2) is the
/// only discretization error; on flow trajectories the integrand vanishes
/// identically and the result sits at the differencing floor.
pub fn action(h: &dyn HamiltonianField, path: &ContactPath) -> f64 {
    let vels = path.velocities();
    let vals: Vec<f64> = (0..path.len())
        .map(|k| {
            let x = path.point(k);
            -(lambda(x, &vels[k]) + h.value(path.time(k), x))
        })
        .collect();
    trapezoid(path.dt(), &vals)
}

/// First variation of the action at `path` in direction `eta`:
///
///   dA(eta) = int dlambda(gamma' - X_H, eta) dt - int R[H](gamma) a dt
///             - lambda(eta^pi(T)) + lambda(eta^pi(0)) - a(T) + a(0)
///
/// with a = lambda(eta). The lambda(eta^pi) boundary terms vanish identically
/// for every eta; they are evaluated anyway to keep the split form intact.
/// The binding check is agreement with central differences of `action`.
pub fn first_variation(
    h: &dyn HamiltonianField,
    path: &ContactPath,
    eta: &VariationField,
) -> f64 {
    assert_eq!(eta.len(), path.len(), "variation length mismatch");
    let m = path.len();
    let vels = path.velocities();
    let mut bulk = Vec::with_capacity(m);
    let mut reeb = Vec::with_capacity(m);
    for k in 0..m {
        let x = path.point(k);
        let t = path.time(k);
        let defect = vels[k].sub(&hamiltonian_vector_field(h, t, x));
        bulk.push(crate::geometry::dlambda(&defect, eta.vector(k)));
        reeb.push(h.grad(t, x).dz * eta.a(path, k));
    }
    let dt = path.dt();
    let last = m - 1;
    let pi_boundary = -lambda(path.point(last), &eta.eta_pi(path, last))
        + lambda(path.point(0), &eta.eta_pi(path, 0));
    trapezoid(dt, &bulk) - trapezoid(dt, &reeb) + pi_boundary - eta.a(path, last)
        + eta.a(path, 0)
}

/// Max-norm residuals of Hamilton's equation along the path, split into the
/// xi component |(gamma' - X_H)^pi| and the Reeb component |lambda(gamma') + H|.
pub fn hamilton_residual(h: &dyn HamiltonianField, path: &ContactPath) -> (f64, f64) {
    let vels = path.velocities();
    let mut pi_res = 0.0f64;
    let mut reeb_res = 0.0f64;
    for k in 0..path.len() {
        let x = path.point(k);
        let t = path.time(k);
        let defect = vels[k].sub(&hamiltonian_vector_field(h, t, x));
        pi_res = pi_res.max(triad_norm(x, &xi_project(x, &defect)));
        reeb_res = reeb_res.max((lambda(x, &vels[k]) + h.value(t, x)).abs());
    }
    (pi_res, reeb_res)
}

/// Hamiltonian composed with a time-varying Reeb translation: the flat-model
/// Reeb flow is a z-shift, so value and gradient are read at z + rho(t).
pub struct LiftedField {
    inner: Arc<dyn HamiltonianField>,
    times: Vec<f64>,
    rho: Vec<f64>,
}

impl std::fmt::Debug for LiftedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiftedField")
            .field("inner", &self.inner.label())
            .field("samples", &self.times.len())
            .finish()
    }
}

impl LiftedField {
    /// rho at arbitrary t by linear interpolation, clamped to the table.
    pub fn rho_at(&self, t: f64) -> f64 {
        let times = &self.times;
        if t <= times[0] {
            return self.rho[0];
        }
        if t >= *times.last().unwrap() {
            return *self.rho.last().unwrap();
        }
        let dt = times[1] - times[0];
        let k = (((t - times[0]) / dt).floor() as usize).min(times.len() - 2);
        let w = (t - times[k]) / dt;
        self.rho[k] * (1.0 - w) + self.rho[k + 1] * w
    }

    fn shifted(&self, t: f64, x: &PhasePoint) -> PhasePoint {
        PhasePoint::new(x.q.clone(), x.p.clone(), x.z + self.rho_at(t))
    }
}

impl HamiltonianField for LiftedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, t: f64, x: &PhasePoint) -> f64 {
        self.inner.value(t, &self.shifted(t, x))
    }

    fn grad(&self, t: f64, x: &PhasePoint) -> HamGrad {
        self.inner.grad(t, &self.shifted(t, x))
    }

    fn hess(&self, t: f64, x: &PhasePoint) -> Option<HamHess> {
        self.inner.hess(t, &self.shifted(t, x))
    }

    fn label(&self) -> String {
        format!("reeb-lift({})", self.inner.label())
    }
}

/// Converts a pi-critical path into a genuine trajectory of a translated
/// Hamiltonian: with rho(t) = int_0^t (lambda(gamma') + H) dt', the pair
///
///   new path  = old path with z shifted by -rho(t)
///   new field = H read at z + rho(t)
///
/// satisfies both components of Hamilton's equation to quadrature accuracy.
/// Rejects inputs whose xi residual exceeds `pi_tol`, since only the Reeb
/// channel can be repaired by translation.
pub fn reeb_translate_lift(
    h: Arc<dyn HamiltonianField>,
    path: &ContactPath,
    pi_tol: f64,
) -> Result<(LiftedField, ContactPath)> {
    let (pi_res, _) = hamilton_residual(&*h, path);
    if pi_res > pi_tol {
        return Err(Error::ResidualTooLarge {
            what: "pi_residual",
            value: pi_res,
            limit: pi_tol,
        });
    }
    let m = path.len();
    let dt = path.dt();
    let vels = path.velocities();
    let gains: Vec<f64> = (0..m)
        .map(|k| {
            let x = path.point(k);
            lambda(x, &vels[k]) + h.value(path.time(k), x)
        })
        .collect();
    let mut rho = Vec::with_capacity(m);
    rho.push(0.0);
    for k in 1..m {
        rho.push(rho[k - 1] + 0.5 * dt * (gains[k - 1] + gains[k]));
    }
    let shifted: Vec<PhasePoint> = (0..m)
        .map(|k| {
            let x = path.point(k);
            PhasePoint::new(x.q.clone(), x.p.clone(), x.z - rho[k])
        })
        .collect();
    let lifted_path = ContactPath::new(path.times().to_vec(), shifted)?;
    let field = LiftedField {
        inner: h,
        times: path.times().to_vec(),
        rho,
    };
    Ok((field, lifted_path))
}

/// Hamiltonian chord between two Legendrians, with solver diagnostics.
#[derive(Debug, Clone)]
pub struct Chord {
    pub start: PhasePoint,
    pub duration: f64,
    pub path: ContactPath,
    /// Endpoint defect against the target graph, (p - dS, z - S) stacked.
    pub defect: DVector<f64>,
    /// Defect norm after re-integrating at half the step, an independent check.
    pub defect_refined: f64,
    /// min over samples of |H(t, gamma(t))|; zero means tangent to xi somewhere.
    pub margin: f64,
    /// Condition number of the shooting Jacobian; infinite when rank-deficient.
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct ChordOpts {
    /// Integrator substep for shooting and the final path.
    pub step: f64,
    /// Newton convergence threshold on the defect norm.
    pub tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
    /// Finite-difference step for the shooting Jacobian.
    pub fd_delta: f64,
    /// Durations at or below this are treated as degenerate.
    pub min_duration: f64,
    /// Samples in the returned chord path.
    pub samples: usize,
}

impl Default for ChordOpts {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tol: 1e-9,
            max_iters: 50,
            max_backtracks: 8,
            fd_delta: 1e-6,
            min_duration: 1e-6,
            samples: 201,
        }
    }
}

/// Duration-rescaled Hamiltonian: flowing it over [0, 1] equals flowing the
/// inner field over [0, t1], which keeps the shooting map smooth in t1.
struct ScaledField<'a> {
    inner: &'a dyn HamiltonianField,
    t1: f64,
}

impl HamiltonianField for ScaledField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, s: f64, x: &PhasePoint) -> f64 {
        self.t1 * self.inner.value(self.t1 * s, x)
    }

    fn grad(&self, s: f64, x: &PhasePoint) -> HamGrad {
        let g = self.inner.grad(self.t1 * s, x);
        HamGrad {
            dq: g.dq * self.t1,
            dp: g.dp * self.t1,
            dz: g.dz * self.t1,
        }
    }

    fn hess(&self, s: f64, x: &PhasePoint) -> Option<HamHess> {
        self.inner.hess(self.t1 * s, x).map(|hs| HamHess {
            qq: hs.qq * self.t1,
            qp: hs.qp * self.t1,
            pp: hs.pp * self.t1,
            qz: hs.qz * self.t1,
            pz: hs.pz * self.t1,
            zz: hs.zz * self.t1,
        })
    }

    fn label(&self) -> String {
        format!("scaled({}, {})", self.inner.label(), self.t1)
    }
}

/// Damped Newton shooting for a Hamiltonian chord from `lam0` to `lam1`.
///
/// Unknowns are the chart seed q0 on lam0 and the duration t1; the residual
/// is lam1's defect at the flow endpoint. The Jacobian is finite-differenced
/// and solved by SVD least squares, so rank-deficient directions (families of
/// chords) do not break the iteration; they surface as an infinite condition
/// number instead. The substep count is frozen from the seed duration so the
/// shooting map stays smooth while t1 moves.
pub fn find_chord(
    h: &Arc<dyn HamiltonianField>,
    lam0: &LegendrianJetGraph,
    lam1: &LegendrianJetGraph,
    seed_q: &DVector<f64>,
    seed_t1: f64,
    opts: &ChordOpts,
) -> Result<Chord> {
    let n = lam0.n;
    assert_eq!(lam1.n, n, "legendrian dimensions differ");
    assert_eq!(seed_q.len(), n, "seed dimension mismatch");
    assert!(seed_t1 > opts.min_duration, "seed duration too small");
    let m = n + 1;
    let n_sub = ((seed_t1 / opts.step).ceil() as usize).max(10);
    let unit_step = 1.0 / n_sub as f64;

    // Smooth through t1 = 0 (the scaled field just flows backward), so the
    // iteration can land on a collapsing duration and be rejected cleanly at
    // the top of the loop instead of stalling against a hard wall.
    let shoot = |u: &DVector<f64>| -> Result<DVector<f64>> {
        let t1 = u[n];
        let q0 = u.rows(0, n).into_owned();
        let x0 = lam0.point(&q0)?;
        let scaled = ScaledField { inner: &**h, t1 };
        let (xe, _) = integrate_span(&scaled, &x0, 0.0, 0.0, 1.0, unit_step)?;
        Ok(lam1.defect(&xe))
    };

    let mut u = DVector::zeros(m);
    u.rows_mut(0, n).copy_from(seed_q);
    u[n] = seed_t1;
    let mut r = shoot(&u)?;
    let mut jac = DMatrix::zeros(m, m);
    let mut converged = false;
    for _ in 0..opts.max_iters {
        if u[n] <= opts.min_duration {
            return Err(Error::DegenerateDuration { t1: u[n] });
        }
        if r.norm() < opts.tol {
            converged = true;
            break;
        }
        for k in 0..m {
            let d = opts.fd_delta;
            let mut up = u.clone();
            up[k] += d;
            let mut um = u.clone();
            um[k] -= d;
            let col = match (shoot(&up), shoot(&um)) {
                (Ok(a), Ok(b)) => (a - b) / (2.0 * d),
                (Ok(a), Err(_)) => (a - &r) / d,
                (Err(_), Ok(b)) => (&r - b) / d,
                (Err(e), Err(_)) => return Err(e),
            };
            jac.set_column(k, &col);
        }
        let svd = jac.clone().svd(true, true);
        let sigma_max = svd.singular_values.max();
        let delta = svd
            .solve(&r, sigma_max * 1e-12)
            .map_err(|e| Error::SingularSystem(e.to_string()))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let trial = &u - &delta * alpha;
            match shoot(&trial) {
                Ok(rt) if rt.norm() < r.norm() => {
                    u = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::NewtonStalled {
                iters: opts.max_iters,
                residual: r.norm(),
            });
        }
    }
    if !converged && r.norm() >= opts.tol {
        return Err(Error::NewtonStalled {
            iters: opts.max_iters,
            residual: r.norm(),
        });
    }

    let t1 = u[n];
    let q0 = u.rows(0, n).into_owned();
    let x0 = lam0.point(&q0)?;
    let path = sample_flow(&**h, &x0, t1, opts.samples, opts.step)?;
    let defect = lam1.defect(path.end());
    let (x_half, _) = integrate_span(&**h, &x0, 0.0, 0.0, t1, opts.step / 2.0)?;
    let defect_refined = lam1.defect(&x_half).norm();
    let margin = (0..path.len()).fold(f64::INFINITY, |acc, k| {
        acc.min(h.value(path.time(k), path.point(k)).abs())
    });
    // Condition number of the shooting Jacobian at the solution.
    for k in 0..m {
        let d = opts.fd_delta;
        let mut up = u.clone();
        up[k] += d;
        let mut um = u.clone();
        um[k] -= d;
        let col = match (shoot(&up), shoot(&um)) {
            (Ok(a), Ok(b)) => (a - b) / (2.0 * d),
            (Ok(a), Err(_)) => (a - &r) / d,
            (Err(_), Ok(b)) => (&r - b) / d,
            (Err(e), Err(_)) => return Err(e),
        };
        jac.set_column(k, &col);
    }
    let svd = jac.svd(false, false);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if sigma_min > sigma_max * 1e-13 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };

    Ok(Chord {
        start: x0,
        duration: t1,
        path,
        defect,
        defect_refined,
        margin,
        condition,
    })
}

/// Pass thresholds for `chord_report`.
#[derive(Debug, Clone)]
pub struct ChordThresholds {
    pub max_action: f64,
    pub max_defect: f64,
    pub min_margin: f64,
    pub max_condition: f64,
}

impl Default for ChordThresholds {
    fn default() -> Self {
        Self {
            max_action: 1e-6,
            max_defect: 1e-9,
            min_margin: 1e-6,
            max_condition: 1e8,
        }
    }
}

/// Diagnostics of a found chord against configured thresholds.
#[derive(Debug, Clone)]
pub struct ChordAssessment {
    pub duration: f64,
    pub action: f64,
    pub defect_norm: f64,
    pub margin: f64,
    pub condition: f64,
    pub transversal: bool,
    pub nondegenerate: bool,
    pub pass: bool,
}

/// Action, transversality, and nondegeneracy summary of a chord. The action
/// should vanish on any genuine trajectory; the margin is min |H| along the
/// path, which equals min |lambda(gamma')| there.
pub fn chord_report(
    chord: &Chord,
    h: &dyn HamiltonianField,
    thresholds: &ChordThresholds,
) -> ChordAssessment {
    let a = action(h, &chord.path);
    let defect_norm = chord.defect.norm();
    let transversal = chord.margin >= thresholds.min_margin;
    let nondegenerate =
        chord.condition.is_finite() && chord.condition <= thresholds.max_condition;
    let pass = transversal
        && nondegenerate
        && defect_norm <= thresholds.max_defect
        && a.abs() <= thresholds.max_action;
    ChordAssessment {
        duration: chord.duration,
        action: a,
        defect_norm,
        margin: chord.margin,
        condition: chord.condition,
        transversal,
        nondegenerate,
        pass,
    }
}
