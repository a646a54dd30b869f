//! Contact Hamiltonian calculus: vector fields, flows with their conformal
//! exponent channel, developing maps, inverse and product Hamiltonians,
//! Jacobi brackets, and the law-checking suite.
//!
//! The generating convention is H = -lambda(X), so the Reeb field is the
//! vector field of the constant Hamiltonian -1 and
//!
//!   X_H = sum_i H_{p_i} d/dq_i - (H_{q_i} + p_i H_z) d/dp_i + (p.H_p - H) d/dz.
//!
//! Flows integrate the exponent alongside the point: dg/dt = -H_z along the
//! trajectory, so that psi_t^* lambda = e^{g_t} lambda.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{fd_grad2, HamGrad, HamiltonianField, Poly, PolyField, ScalarField, FD_STEP};
use crate::geometry::{
    dlambda, lambda, reeb_vector, PhasePoint, TangentVector, TriadFrame,
};

/// Largest conformal exponent magnitude treated as non-overflowing.
const EXPONENT_LIMIT: f64 = 200.0;

/// X_H at (t, x) in coordinate components.
pub fn hamiltonian_vector_field(h: &dyn HamiltonianField, t: f64, x: &PhasePoint) -> TangentVector {
    let g = h.grad(t, x);
    let val = h.value(t, x);
    let dq = g.dp.clone();
    let dp = -(g.dq + &x.p * g.dz);
    let dz = x.p.dot(&g.dp) - val;
    TangentVector::new(dq, dp, dz)
}

/// Jacobian of x -> X_H(t, x) in flat (q, p, z) coordinates.
///
/// Uses analytic second derivatives when the field provides them, otherwise
/// 4th-order central differences with step 1e-5.
pub fn vf_jacobian(h: &dyn HamiltonianField, t: f64, x: &PhasePoint) -> DMatrix<f64> {
    let n = x.dim();
    let m = 2 * n + 1;
    if let Some(hs) = h.hess(t, x) {
        let g = h.grad(t, x);
        let mut j = DMatrix::zeros(m, m);
        for i in 0..n {
            for k in 0..n {
                // d(X_q_i)/dq_k and /dp_k
                j[(i, k)] = hs.qp[(k, i)];
                j[(i, n + k)] = hs.pp[(i, k)];
                // d(X_p_i)/dq_k and /dp_k
                j[(n + i, k)] = -(hs.qq[(i, k)] + x.p[i] * hs.qz[k]);
                let kron = if i == k { g.dz } else { 0.0 };
                j[(n + i, n + k)] = -(hs.qp[(i, k)] + kron + x.p[i] * hs.pz[k]);
            }
            j[(i, 2 * n)] = hs.pz[i];
            j[(n + i, 2 * n)] = -(hs.qz[i] + x.p[i] * hs.zz);
            // d(X_z)/dq_i and /dp_i
            let mut zq = -g.dq[i];
            let mut zp = 0.0;
            for k in 0..n {
                zq += x.p[k] * hs.qp[(i, k)];
                zp += x.p[k] * hs.pp[(k, i)];
            }
            j[(2 * n, i)] = zq;
            j[(2 * n, n + i)] = zp;
        }
        j[(2 * n, 2 * n)] = x.p.dot(&hs.pz) - g.dz;
        j
    } else {
        let flat = x.to_flat();
        let mut j = DMatrix::zeros(m, m);
        let h_fd = FD_STEP;
        for k in 0..m {
            let col = |s: f64| {
                let mut y = flat.clone();
                y[k] += s;
                hamiltonian_vector_field(h, t, &PhasePoint::from_flat(n, &y)).to_flat()
            };
            let d = (8.0 * (col(h_fd) - col(-h_fd)) - (col(2.0 * h_fd) - col(-2.0 * h_fd)))
                / (12.0 * h_fd);
            j.set_column(k, &d);
        }
        j
    }
}

fn deriv(h: &dyn HamiltonianField, t: f64, state: &DVector<f64>, n: usize) -> DVector<f64> {
    let x = PhasePoint::from_flat(n, &state.rows(0, 2 * n + 1).into_owned());
    let g = h.grad(t, &x);
    let val = h.value(t, &x);
    let mut out = DVector::zeros(2 * n + 2);
    for i in 0..n {
        out[i] = g.dp[i];
        out[n + i] = -(g.dq[i] + x.p[i] * g.dz);
    }
    out[2 * n] = x.p.dot(&g.dp) - val;
    out[2 * n + 1] = -g.dz;
    out
}

/// Classical RK4 on the augmented state (x, g) from t0 to t1 with a fixed
/// substep of at most `step`; the final partial step lands exactly on t1.
pub fn integrate_span(
    h: &dyn HamiltonianField,
    x0: &PhasePoint,
    g0: f64,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<(PhasePoint, f64)> {
    assert!(step > 0.0, "integrator step must be positive");
    let n = x0.dim();
    if t0 == t1 {
        return Ok((x0.clone(), g0));
    }
    let total = t1 - t0;
    let n_steps = (total.abs() / step).ceil().max(1.0) as usize;
    let dt = total / n_steps as f64;
    let mut state = DVector::zeros(2 * n + 2);
    state.rows_mut(0, 2 * n + 1).copy_from(&x0.to_flat());
    state[2 * n + 1] = g0;
    let mut t = t0;
    for k in 0..n_steps {
        let k1 = deriv(h, t, &state, n);
        let k2 = deriv(h, t + 0.5 * dt, &(&state + &k1 * (0.5 * dt)), n);
        let k3 = deriv(h, t + 0.5 * dt, &(&state + &k2 * (0.5 * dt)), n);
        let k4 = deriv(h, t + dt, &(&state + &k3 * dt), n);
        state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        t = t0 + (k + 1) as f64 * dt;
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        if state[2 * n + 1].abs() > EXPONENT_LIMIT {
            return Err(Error::ExponentOverflow {
                exponent: state[2 * n + 1],
                t,
            });
        }
    }
    let x = PhasePoint::from_flat(n, &state.rows(0, 2 * n + 1).into_owned());
    Ok((x, state[2 * n + 1]))
}

/// Sampled flow with its exponent channel.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub exponents: Vec<f64>,
}

impl FlowTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end(&self) -> &PhasePoint {
        self.points.last().expect("trajectory has samples")
    }
}

/// Contact isotopy generated by a Hamiltonian, realized on demand by a
/// fixed-step integrator so flow maps are smooth functions of the seed.
pub struct ContactIsotopy {
    field: Arc<dyn HamiltonianField>,
    step: f64,
}

impl ContactIsotopy {
    pub fn new(field: Arc<dyn HamiltonianField>, step: f64) -> Self {
        assert!(step > 0.0 && step.is_finite(), "step must be positive");
        Self { field, step }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn field(&self) -> &Arc<dyn HamiltonianField> {
        &self.field
    }

    /// (psi_t(x), g_t(x)).
    pub fn at(&self, t: f64, x: &PhasePoint) -> Result<(PhasePoint, f64)> {
        integrate_span(&*self.field, x, 0.0, 0.0, t, self.step)
    }

    pub fn map(&self, t: f64, x: &PhasePoint) -> Result<PhasePoint> {
        Ok(self.at(t, x)?.0)
    }

    pub fn exponent(&self, t: f64, x: &PhasePoint) -> Result<f64> {
        Ok(self.at(t, x)?.1)
    }

    /// Uniformly sampled trajectory from x0 over [0, t_end].
    pub fn trajectory(&self, x0: &PhasePoint, t_end: f64) -> Result<FlowTrajectory> {
        let n_steps = (t_end.abs() / self.step).ceil().max(1.0) as usize;
        let dt = t_end / n_steps as f64;
        let mut times = Vec::with_capacity(n_steps + 1);
        let mut points = Vec::with_capacity(n_steps + 1);
        let mut exponents = Vec::with_capacity(n_steps + 1);
        times.push(0.0);
        points.push(x0.clone());
        exponents.push(0.0);
        let mut x = x0.clone();
        let mut g = 0.0;
        for k in 0..n_steps {
            let t_a = k as f64 * dt;
            let t_b = (k + 1) as f64 * dt;
            let (xn, gn) = integrate_span(&*self.field, &x, g, t_a, t_b, self.step)?;
            x = xn;
            g = gn;
            times.push(t_b);
            points.push(x.clone());
            exponents.push(g);
        }
        Ok(FlowTrajectory {
            times,
            points,
            exponents,
        })
    }

    /// psi_t^{-1}(x) by Newton on the forward flow map, seeded at the query
    /// point, with the flow differential from central differences.
    pub fn inverse_at(&self, t: f64, x: &PhasePoint) -> Result<PhasePoint> {
        let n = self.dim();
        let m = 2 * n + 1;
        let target = x.to_flat();
        let scale = 1.0 + target.norm();
        let mut y = x.clone();
        for _ in 0..25 {
            let fy = self.map(t, &y)?;
            let r = fy.to_flat() - &target;
            if r.norm() < 1e-12 * scale {
                return Ok(y);
            }
            let mut j = DMatrix::zeros(m, m);
            let yf = y.to_flat();
            let h = 1e-6;
            for k in 0..m {
                let mut ap = yf.clone();
                ap[k] += h;
                let mut am = yf.clone();
                am[k] -= h;
                let col = (self.map(t, &PhasePoint::from_flat(n, &ap))?.to_flat()
                    - self.map(t, &PhasePoint::from_flat(n, &am))?.to_flat())
                    / (2.0 * h);
                j.set_column(k, &col);
            }
            let delta = j
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::SingularSystem("flow map differential".to_string()))?;
            y = PhasePoint::from_flat(n, &(yf - delta));
        }
        let fy = self.map(t, &y)?;
        Err(Error::NewtonStalled {
            iters: 25,
            residual: (fy.to_flat() - target).norm(),
        })
    }
}

/// Developing map of an isotopy: recovers the generating Hamiltonian by
/// time-differencing trajectories through the queried point.
pub struct DevField {
    iso: Arc<ContactIsotopy>,
    eps: f64,
    t_lo: f64,
    t_hi: f64,
}

/// Builds the developing map over a time window; `eps` is the differencing
/// half-width (pick the integrator step for an O(h^2) round trip).
pub fn dev(iso: Arc<ContactIsotopy>, t_span: (f64, f64), eps: f64) -> DevField {
    assert!(eps > 0.0 && t_span.1 > t_span.0, "bad developing-map window");
    DevField {
        iso,
        eps,
        t_lo: t_span.0,
        t_hi: t_span.1,
    }
}

impl DevField {
    /// Value plus a flag marking one-sided (boundary) differencing.
    pub fn value_detailed(&self, t: f64, x: &PhasePoint) -> Result<(f64, bool)> {
        let field = &**self.iso.field();
        let step = self.iso.step();
        let e = self.eps;
        if t - e >= self.t_lo && t + e <= self.t_hi {
            let (xp, _) = integrate_span(field, x, 0.0, t, t + e, step)?;
            let (xm, _) = integrate_span(field, x, 0.0, t, t - e, step)?;
            let v = TangentVector::from_flat(
                x.dim(),
                &((xp.to_flat() - xm.to_flat()) / (2.0 * e)),
            );
            Ok((-lambda(x, &v), false))
        } else {
            // One-sided 2nd-order stencil pointing into the window.
            let dir = if t + 2.0 * e <= self.t_hi { 1.0 } else { -1.0 };
            let (x1, _) = integrate_span(field, x, 0.0, t, t + dir * e, step)?;
            let (x2, _) = integrate_span(field, x, 0.0, t, t + 2.0 * dir * e, step)?;
            let v = TangentVector::from_flat(
                x.dim(),
                &((x.to_flat() * -3.0 + x1.to_flat() * 4.0 - x2.to_flat()) * (dir / (2.0 * e))),
            );
            Ok((-lambda(x, &v), true))
        }
    }
}

impl HamiltonianField for DevField {
    fn dim(&self) -> usize {
        self.iso.dim()
    }

    /// Integration failures surface as NaN so downstream guards catch them.
    fn value(&self, t: f64, x: &PhasePoint) -> f64 {
        self.value_detailed(t, x).map(|(v, _)| v).unwrap_or(f64::NAN)
    }

    fn grad(&self, t: f64, x: &PhasePoint) -> HamGrad {
        fd_grad2(|y| self.value(t, y), x, FD_STEP)
    }

    fn label(&self) -> String {
        format!("dev({})", self.iso.field().label())
    }
}

/// Hamiltonian generating the inverse isotopy:
/// Hbar(t, x) = -e^{-g_t(psi_t(x))} H(t, psi_t(x)).
pub struct InverseField {
    iso: Arc<ContactIsotopy>,
}

pub fn inverse_hamiltonian(iso: Arc<ContactIsotopy>) -> InverseField {
    InverseField { iso }
}

impl HamiltonianField for InverseField {
    fn dim(&self) -> usize {
        self.iso.dim()
    }

    fn value(&self, t: f64, x: &PhasePoint) -> f64 {
        match self.iso.at(t, x) {
            Ok((y, g)) => -(-g).exp() * self.iso.field().value(t, &y),
            Err(_) => f64::NAN,
        }
    }

    fn grad(&self, t: f64, x: &PhasePoint) -> HamGrad {
        fd_grad2(|y| self.value(t, y), x, FD_STEP)
    }

    fn label(&self) -> String {
        format!("inverse({})", self.iso.field().label())
    }
}

/// Hamiltonian generating the timewise product t -> psi1_t o psi2_t:
/// H(t, x) = H1(t, x) + e^{g1(t, y)} H2(t, y) with y = psi1_t^{-1}(x).
pub struct ProductField {
    first: Arc<ContactIsotopy>,
    second: Arc<ContactIsotopy>,
}

pub fn product_hamiltonian(first: Arc<ContactIsotopy>, second: Arc<ContactIsotopy>) -> ProductField {
    assert_eq!(first.dim(), second.dim(), "isotopy dimensions differ");
    ProductField { first, second }
}

impl HamiltonianField for ProductField {
    fn dim(&self) -> usize {
        self.first.dim()
    }

    fn value(&self, t: f64, x: &PhasePoint) -> f64 {
        let inner = || -> Result<f64> {
            let y = self.first.inverse_at(t, x)?;
            let (_, g1) = self.first.at(t, &y)?;
            Ok(self.first.field().value(t, x) + g1.exp() * self.second.field().value(t, &y))
        };
        inner().unwrap_or(f64::NAN)
    }

    fn grad(&self, t: f64, x: &PhasePoint) -> HamGrad {
        fd_grad2(|y| self.value(t, y), x, FD_STEP)
    }

    fn label(&self) -> String {
        format!(
            "product({}, {})",
            self.first.field().label(),
            self.second.field().label()
        )
    }
}

/// Jacobi bracket {H, G} = -lambda([X_H, X_G]) evaluated pointwise.
pub fn jacobi_bracket(
    hf: &dyn HamiltonianField,
    gf: &dyn HamiltonianField,
    t: f64,
    x: &PhasePoint,
) -> f64 {
    let n = x.dim();
    let xh = hamiltonian_vector_field(hf, t, x).to_flat();
    let xg = hamiltonian_vector_field(gf, t, x).to_flat();
    let jh = vf_jacobian(hf, t, x);
    let jg = vf_jacobian(gf, t, x);
    let lie = &jg * &xh - &jh * &xg;
    -lambda(x, &TangentVector::from_flat(n, &lie))
}

/// X_H with polynomial components, flat (q, p, z) order.
pub fn poly_contact_vf(h: &Poly) -> Vec<Poly> {
    let n = h.dim();
    let hz = h.d_z();
    let mut out = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        out.push(h.d_p(i));
    }
    for i in 0..n {
        let pi = Poly::coord_p(n, i);
        out.push(h.d_q(i).add(&pi.mul(&hz)).scale(-1.0));
    }
    let mut xz = h.scale(-1.0);
    for k in 0..n {
        xz = xz.add(&Poly::coord_p(n, k).mul(&h.d_p(k)));
    }
    out.push(xz);
    out
}

fn poly_d_flat(p: &Poly, k: usize, n: usize) -> Poly {
    if k < n {
        p.d_q(k)
    } else if k < 2 * n {
        p.d_p(k - n)
    } else {
        p.d_z()
    }
}

/// Lie bracket of polynomial vector fields: [A, B] = DB.A - DA.B.
pub fn poly_lie_bracket(a: &[Poly], b: &[Poly], n: usize) -> Vec<Poly> {
    let m = 2 * n + 1;
    assert_eq!(a.len(), m);
    assert_eq!(b.len(), m);
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut comp = Poly::zero(n);
        for k in 0..m {
            comp = comp.add(&a[k].mul(&poly_d_flat(&b[i], k, n)));
            comp = comp.sub(&b[k].mul(&poly_d_flat(&a[i], k, n)));
        }
        out.push(comp);
    }
    out
}

/// Closed-form Jacobi bracket of polynomial Hamiltonians.
///
/// Exact coefficient arithmetic; the numeric `jacobi_bracket` must agree with
/// this on samples, and nested applications of this feed the Jacobi identity.
pub fn poly_jacobi_bracket(h: &Poly, g: &Poly) -> Poly {
    let n = h.dim();
    let lie = poly_lie_bracket(&poly_contact_vf(h), &poly_contact_vf(g), n);
    // -lambda(V) = -(V_z - sum p_i V_q_i)
    let mut out = lie[2 * n].scale(-1.0);
    for i in 0..n {
        out = out.add(&Poly::coord_p(n, i).mul(&lie[i]));
    }
    out
}

/// Reeb field of the rescaled form f lambda, namely X_{-1/f}.
pub fn reeb_of_rescaled(f: &dyn ScalarField, x: &PhasePoint) -> Result<TangentVector> {
    let fv = f.value(x);
    if !(fv > 0.0) {
        return Err(Error::BadFieldSpec(format!(
            "rescaling factor must be positive, got f = {fv}"
        )));
    }
    let df = f.grad(x);
    // G = -1/f has dG = df / f^2.
    let s = 1.0 / (fv * fv);
    let g_val = -1.0 / fv;
    let dq = &df.dp * s;
    let dp = -(&df.dq * s + &x.p * (df.dz * s));
    let dz = x.p.dot(&df.dp) * s - g_val;
    Ok(TangentVector::new(dq, dp, dz))
}

/// Defining-property defects of `reeb_of_rescaled`:
/// |(f lambda)(R) - 1| and max |d(f lambda)(R, v)| over the triad frame.
pub fn rescaled_reeb_defect(f: &dyn ScalarField, x: &PhasePoint) -> Result<(f64, f64)> {
    let r = reeb_of_rescaled(f, x)?;
    let fv = f.value(x);
    let df = f.grad(x);
    let df_on = |v: &TangentVector| df.dq.dot(&v.dq) + df.dp.dot(&v.dp) + df.dz * v.dz;
    let value_defect = (fv * lambda(x, &r) - 1.0).abs();
    let frame = TriadFrame::at(x.clone());
    let mut contraction = 0.0f64;
    for v in frame.vectors() {
        // d(f lambda)(r, v) = df(r) lambda(v) - df(v) lambda(r) + f dlambda(r, v)
        let d = df_on(&r) * lambda(x, &v) - df_on(&v) * lambda(x, &r) + fv * dlambda(&r, &v);
        contraction = contraction.max(d.abs());
    }
    Ok((value_defect, contraction))
}

/// Differential of a point map applied to v, by central differences.
pub fn fd_map_differential<M>(
    map: M,
    x: &PhasePoint,
    v: &TangentVector,
    delta: f64,
) -> Result<TangentVector>
where
    M: Fn(&PhasePoint) -> Result<PhasePoint>,
{
    let yp = map(&x.offset(v, delta))?;
    let ym = map(&x.offset(v, -delta))?;
    Ok(TangentVector::from_flat(
        x.dim(),
        &((yp.to_flat() - ym.to_flat()) / (2.0 * delta)),
    ))
}

/// Conformal exponent of a single contactomorphism from its definition:
/// g(x) = ln (phi^* lambda)(R)|_x, using a finite-difference differential.
pub fn map_conformal_exponent<M>(map: M, x: &PhasePoint, delta: f64) -> Result<f64>
where
    M: Fn(&PhasePoint) -> Result<PhasePoint>,
{
    let y = map(x)?;
    let r = reeb_vector(x.dim());
    let dr = fd_map_differential(&map, x, &r, delta)?;
    let pulled = lambda(&y, &dr);
    if !(pulled > 0.0) {
        return Err(Error::SingularSystem(format!(
            "pulled-back form not positive on the Reeb direction: {pulled}"
        )));
    }
    Ok(pulled.ln())
}

/// Defect of psi^* lambda = e^g lambda at x in direction v, normalized.
pub fn pullback_exponent_defect<M>(
    map: M,
    g_val: f64,
    x: &PhasePoint,
    v: &TangentVector,
    delta: f64,
) -> Result<f64>
where
    M: Fn(&PhasePoint) -> Result<PhasePoint>,
{
    let y = map(x)?;
    let dv = fd_map_differential(&map, x, v, delta)?;
    let lhs = lambda(&y, &dv);
    let rhs = g_val.exp() * lambda(x, v);
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs())))
}

/// One named law with its measured defect and theoretical tolerance.
#[derive(Debug, Clone)]
pub struct IdentityDefect {
    pub name: String,
    pub defect: f64,
    pub tolerance: f64,
}

impl IdentityDefect {
    pub fn pass(&self) -> bool {
        self.defect <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub entries: Vec<IdentityDefect>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(IdentityDefect::pass)
    }
}

/// Options for `identity_suite`; flow-based laws use the time-t1/t2 maps.
#[derive(Debug, Clone)]
pub struct IdentityOpts {
    pub t1: f64,
    pub t2: f64,
    pub step: f64,
    pub fd_delta: f64,
    pub tol_algebraic: f64,
    pub tol_flow: f64,
}

impl Default for IdentityOpts {
    fn default() -> Self {
        Self {
            t1: 0.4,
            t2: 0.3,
            step: 1e-2,
            fd_delta: 1e-5,
            tol_algebraic: 1e-8,
            tol_flow: 1e-6,
        }
    }
}

/// Checks the calculus laws for one Hamiltonian over sample points.
///
/// Algebraic identities hold pointwise for any field. The flow-based laws
/// (cocycle, inverse exponent, conjugation) compose time-t maps and therefore
/// read the field as autonomous; feed them time-independent Hamiltonians.
pub fn identity_suite(
    h: &Arc<dyn HamiltonianField>,
    samples: &[PhasePoint],
    opts: &IdentityOpts,
) -> Result<IdentityReport> {
    assert!(!samples.is_empty(), "need at least one sample point");
    let n = h.dim();
    let ones: Arc<dyn HamiltonianField> = Arc::new(PolyField::new(Poly::constant(n, 1.0), "one"));
    let t_eval = 0.0;

    let mut lam_defect = 0.0f64;
    let mut energy_defect = 0.0f64;
    let mut bracket_one_defect = 0.0f64;
    let mut antisym_defect = 0.0f64;
    for x in samples {
        let xh = hamiltonian_vector_field(&**h, t_eval, x);
        let val = h.value(t_eval, x);
        let grad = h.grad(t_eval, x);
        lam_defect = lam_defect.max((lambda(x, &xh) + val).abs());
        let dh_on_xh = grad.dq.dot(&xh.dq) + grad.dp.dot(&xh.dp) + grad.dz * xh.dz;
        energy_defect = energy_defect.max((dh_on_xh + val * grad.dz).abs());
        let br = jacobi_bracket(&*ones, &**h, t_eval, x);
        bracket_one_defect = bracket_one_defect.max((br + grad.dz).abs());
        antisym_defect = antisym_defect.max(jacobi_bracket(&**h, &**h, t_eval, x).abs());
    }

    let iso = ContactIsotopy::new(h.clone(), opts.step);
    let neg: Arc<dyn HamiltonianField> = Arc::new(NegatedField { inner: h.clone() });
    let iso_neg = ContactIsotopy::new(neg, opts.step);
    let mut pullback_defect = 0.0f64;
    let mut cocycle_defect = 0.0f64;
    let mut inverse_defect = 0.0f64;
    let mut conj_defect = 0.0f64;
    for x in samples {
        // psi_t^* lambda = e^{g_t} lambda across the triad frame.
        let (_, g1) = iso.at(opts.t1, x)?;
        let frame = TriadFrame::at(x.clone());
        for v in frame.vectors() {
            let d =
                pullback_exponent_defect(|y| iso.map(opts.t1, y), g1, x, &v, opts.fd_delta)?;
            pullback_defect = pullback_defect.max(d);
        }

        // Cocycle on the composition psi_{t1} o psi_{t2} of one flow.
        let (mid, g2) = iso.at(opts.t2, x)?;
        let (_, g1_at_mid) = iso.at(opts.t1, &mid)?;
        let (_, g12) = iso.at(opts.t1 + opts.t2, x)?;
        cocycle_defect = cocycle_defect.max((g12 - g1_at_mid - g2).abs());

        // Inverse exponent; the inverse isotopy is the flow of -H.
        let (y, g_inv) = iso_neg.at(opts.t1, x)?;
        let (_, g_fwd) = iso.at(opts.t1, &y)?;
        inverse_defect = inverse_defect.max((g_inv + g_fwd).abs());

        // Conjugation phi psi phi^{-1} with phi = psi_{t1}, psi = psi_{t2};
        // left side from the pullback definition, right side from exponents.
        let conj = |w: &PhasePoint| -> Result<PhasePoint> {
            let a = iso_neg.map(opts.t1, w)?;
            let b = iso.map(opts.t2, &a)?;
            iso.map(opts.t1, &b)
        };
        let lhs = map_conformal_exponent(conj, x, opts.fd_delta)?;
        let phi_inv_x = iso_neg.map(opts.t1, x)?;
        let psi_phi_inv_x = iso.map(opts.t2, &phi_inv_x)?;
        let (_, g_phi_at_psi) = iso.at(opts.t1, &psi_phi_inv_x)?;
        let (_, g_phi_at_inv) = iso.at(opts.t1, &phi_inv_x)?;
        let (_, g_psi_at_inv) = iso.at(opts.t2, &phi_inv_x)?;
        let rhs = g_phi_at_psi - g_phi_at_inv + g_psi_at_inv;
        conj_defect = conj_defect.max((lhs - rhs).abs());
    }

    let entries = vec![
        IdentityDefect {
            name: "lambda-of-field".into(),
            defect: lam_defect,
            tolerance: opts.tol_algebraic,
        },
        IdentityDefect {
            name: "energy-dissipation".into(),
            defect: energy_defect,
            tolerance: opts.tol_algebraic,
        },
        IdentityDefect {
            name: "bracket-with-one".into(),
            defect: bracket_one_defect,
            tolerance: opts.tol_algebraic,
        },
        IdentityDefect {
            name: "bracket-antisymmetry".into(),
            defect: antisym_defect,
            tolerance: opts.tol_algebraic,
        },
        IdentityDefect {
            name: "pullback-exponent".into(),
            defect: pullback_defect,
            tolerance: opts.tol_flow,
        },
        IdentityDefect {
            name: "cocycle".into(),
            defect: cocycle_defect,
            tolerance: opts.tol_flow,
        },
        IdentityDefect {
            name: "inverse-exponent".into(),
            defect: inverse_defect,
            tolerance: opts.tol_flow,
        },
        IdentityDefect {
            name: "conjugation".into(),
            defect: conj_defect,
            tolerance: opts.tol_flow,
        },
    ];
    Ok(IdentityReport { entries })
}

struct NegatedField {
    inner: Arc<dyn HamiltonianField>,
}

impl HamiltonianField for NegatedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, t: f64, x: &PhasePoint) -> f64 {
        -self.inner.value(t, x)
    }

    fn grad(&self, t: f64, x: &PhasePoint) -> HamGrad {
        let g = self.inner.grad(t, x);
        HamGrad {
            dq: -g.dq,
            dp: -g.dp,
            dz: -g.dz,
        }
    }

    fn hess(&self, t: f64, x: &PhasePoint) -> Option<crate::field::HamHess> {
        self.inner.hess(t, x).map(|h| crate::field::HamHess {
            qq: -h.qq,
            qp: -h.qp,
            pp: -h.pp,
            qz: -h.qz,
            pz: -h.pz,
            zz: -h.zz,
        })
    }

    fn label(&self) -> String {
        format!("neg({})", self.inner.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::parse_field;
    use approx::assert_relative_eq;

    fn arc(spec: &str, n: usize) -> Arc<dyn HamiltonianField> {
        parse_field(n, spec).unwrap()
    }

    #[test]
    fn vector_field_examples() {
        let x = PhasePoint::from_slices(&[0.7], &[-1.3], 0.4);
        let reeb = hamiltonian_vector_field(&*arc("reeb", 1), 0.0, &x);
        assert_eq!(reeb.dq[0], 0.0);
        assert_eq!(reeb.dp[0], 0.0);
        assert_eq!(reeb.dz, 1.0);

        let xp = hamiltonian_vector_field(&*arc("coord:p1", 1), 0.0, &x);
        assert_eq!(xp.dq[0], 1.0);
        assert_eq!(xp.dp[0], 0.0);
        assert_eq!(xp.dz, 0.0);

        let xz = hamiltonian_vector_field(&*arc("coord:z", 1), 0.0, &x);
        assert_eq!(xz.dq[0], 0.0);
        assert_relative_eq!(xz.dp[0], 1.3);
        assert_relative_eq!(xz.dz, -0.4);
    }

    #[test]
    fn flow_closed_forms() {
        // H = z: psi_t = (q, e^{-t} p, e^{-t} z), g = -t.
        let iso = ContactIsotopy::new(arc("coord:z", 1), 1e-3);
        let x = PhasePoint::from_slices(&[1.0], &[2.0], 3.0);
        let (y, g) = iso.at(1.0, &x).unwrap();
        assert_relative_eq!(y.q[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(y.p[0], 2.0 * (-1.0f64).exp(), epsilon = 1e-11);
        assert_relative_eq!(y.z, 3.0 * (-1.0f64).exp(), epsilon = 1e-11);
        assert_relative_eq!(g, -1.0, epsilon = 1e-12);

        // Reeb flow: pure z-translation, zero exponent.
        let iso_r = ContactIsotopy::new(arc("reeb", 1), 1e-2);
        let (y, g) = iso_r.at(0.7, &x).unwrap();
        assert_relative_eq!(y.z, 3.7, epsilon = 1e-13);
        assert_eq!(y.q[0], 1.0);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn flow_is_fourth_order() {
        let x = PhasePoint::from_slices(&[0.8, -0.4], &[0.3, 1.1], -0.2);
        let hf = arc("quadratic:1+coord:z", 2);
        let reference = ContactIsotopy::new(hf.clone(), 1e-5)
            .at(1.0, &x)
            .unwrap()
            .0
            .to_flat();
        let err_at = |h: f64| {
            (ContactIsotopy::new(hf.clone(), h).at(1.0, &x).unwrap().0.to_flat() - &reference)
                .norm()
        };
        let e1 = err_at(0.05);
        let e2 = err_at(0.025);
        let ratio = e1 / e2;
        assert!(
            (10.0..30.0).contains(&ratio),
            "expected ~16x per halving, got {ratio} ({e1} -> {e2})"
        );
    }

    #[test]
    fn time_dependent_flow() {
        // H = -t: X_z = t, so z(t) = z0 + t^2/2 (exactly integrated by RK4).
        let n = 1;
        let h = Poly::time(n).scale(-1.0);
        let iso = ContactIsotopy::new(
            Arc::new(PolyField::new(h, "minus-time")) as Arc<dyn HamiltonianField>,
            1e-2,
        );
        let x = PhasePoint::zeros(n);
        let (y, g) = iso.at(2.0, &x).unwrap();
        assert_relative_eq!(y.z, 2.0, epsilon = 1e-12);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn exponent_matches_pullback() {
        let iso = ContactIsotopy::new(arc("quadratic:1+coord:z", 1), 1e-3);
        let x = PhasePoint::from_slices(&[0.6], &[-0.2], 0.3);
        let (_, g) = iso.at(0.5, &x).unwrap();
        let frame = TriadFrame::at(x.clone());
        for v in frame.vectors() {
            let d = pullback_exponent_defect(|y| iso.map(0.5, y), g, &x, &v, 1e-5).unwrap();
            assert!(d < 1e-8, "pullback defect {d} too large");
        }
    }

    #[test]
    fn dev_recovers_generator() {
        let iso = Arc::new(ContactIsotopy::new(arc("coord:z", 1), 1e-3));
        let d = dev(iso, (0.0, 1.0), 1e-3);
        let x = PhasePoint::from_slices(&[0.3], &[-0.8], 1.7);
        let (v, one_sided) = d.value_detailed(0.5, &x).unwrap();
        assert!(!one_sided);
        assert_relative_eq!(v, 1.7, epsilon = 1e-6);
        // Boundary of the window: flagged, still 2nd order.
        let (v0, one_sided0) = d.value_detailed(0.0, &x).unwrap();
        assert!(one_sided0);
        assert_relative_eq!(v0, 1.7, epsilon = 1e-5);
    }

    #[test]
    fn dev_of_reeb_and_identity() {
        let iso = Arc::new(ContactIsotopy::new(arc("reeb", 1), 1e-2));
        let d = dev(iso, (0.0, 1.0), 1e-2);
        let x = PhasePoint::from_slices(&[0.0], &[0.5], -0.3);
        assert_relative_eq!(d.value(0.4, &x), -1.0, epsilon = 1e-12);

        let idle = Arc::new(ContactIsotopy::new(arc("const:0", 1), 1e-2));
        let d0 = dev(idle, (0.0, 1.0), 1e-2);
        assert_relative_eq!(d0.value(0.4, &x), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn inverse_hamiltonian_closed_form() {
        // H = z has Hbar = -z.
        let iso = Arc::new(ContactIsotopy::new(arc("coord:z", 1), 1e-2));
        let hbar = inverse_hamiltonian(iso.clone());
        for (t, q, p, z) in [(0.3, 0.5, -0.7, 1.2), (0.9, -0.2, 0.4, -0.6)] {
            let x = PhasePoint::from_slices(&[q], &[p], z);
            assert_relative_eq!(hbar.value(t, &x), -z, epsilon = 1e-8);
        }
        // Flowing Hbar undoes the flow pointwise.
        let iso_bar = ContactIsotopy::new(Arc::new(hbar) as Arc<dyn HamiltonianField>, 1e-2);
        let x = PhasePoint::from_slices(&[0.4], &[1.1], 0.8);
        let fwd = iso.map(1.0, &x).unwrap();
        let back = iso_bar.map(1.0, &fwd).unwrap();
        assert!((back.to_flat() - x.to_flat()).norm() < 1e-6);
    }

    #[test]
    fn inverse_of_reeb() {
        let iso = Arc::new(ContactIsotopy::new(arc("reeb", 1), 1e-2));
        let hbar = inverse_hamiltonian(iso);
        let x = PhasePoint::from_slices(&[0.0], &[0.0], 2.0);
        assert_relative_eq!(hbar.value(0.5, &x), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_closed_forms() {
        let n = 1;
        let iso_z = Arc::new(ContactIsotopy::new(arc("coord:z", n), 1e-2));
        let iso_r = Arc::new(ContactIsotopy::new(arc("reeb", n), 1e-2));
        let x = PhasePoint::from_slices(&[0.3], &[-0.5], 0.9);

        // Two Reeb flows stack to the constant -2, exactly.
        let rr = product_hamiltonian(iso_r.clone(), iso_r.clone());
        assert_eq!(rr.value(0.6, &x), -2.0);

        // flow(z) after the Reeb flow: H(t, x) = z - e^{-t}.
        let zr = product_hamiltonian(iso_z.clone(), iso_r.clone());
        for t in [0.0, 0.4, 1.0] {
            assert_relative_eq!(zr.value(t, &x), 0.9 - (-t).exp(), epsilon = 1e-8);
        }

        // Identity on either side returns the other Hamiltonian.
        let idle = Arc::new(ContactIsotopy::new(arc("const:0", n), 1e-2));
        let left = product_hamiltonian(idle.clone(), iso_z.clone());
        assert_relative_eq!(left.value(0.7, &x), 0.9, epsilon = 1e-9);
        let right = product_hamiltonian(iso_z, idle);
        assert_relative_eq!(right.value(0.7, &x), 0.9, epsilon = 1e-9);
    }

    #[test]
    fn product_flow_matches_composition() {
        let n = 1;
        let iso_a = Arc::new(ContactIsotopy::new(arc("coord:z", n), 1e-2));
        let iso_b = Arc::new(ContactIsotopy::new(arc("quadratic:1", n), 1e-2));
        let prod = product_hamiltonian(iso_a.clone(), iso_b.clone());
        let iso_p = ContactIsotopy::new(Arc::new(prod) as Arc<dyn HamiltonianField>, 2e-2);
        for seed in [[0.2, 0.1, 0.3], [-0.4, 0.5, -0.1]] {
            let x = PhasePoint::from_slices(&[seed[0]], &[seed[1]], seed[2]);
            let t = 0.5;
            let composed = iso_a.map(t, &iso_b.map(t, &x).unwrap()).unwrap();
            let direct = iso_p.map(t, &x).unwrap();
            assert!(
                (composed.to_flat() - direct.to_flat()).norm() < 1e-6,
                "product flow drifted from the composition"
            );
        }
    }

    #[test]
    fn bracket_examples() {
        let n = 1;
        let x = PhasePoint::from_slices(&[0.4], &[-1.1], 0.6);
        let p = arc("coord:p1", n);
        let q = arc("coord:q1", n);
        assert_relative_eq!(jacobi_bracket(&*p, &*q, 0.0, &x), 1.0, epsilon = 1e-12);
        let h = arc("quadratic:1+coord:z", n);
        assert_eq!(jacobi_bracket(&*h, &*h, 0.0, &x), 0.0);
        let ones = arc("const:1", n);
        assert_relative_eq!(jacobi_bracket(&*ones, &*h, 0.0, &x), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn symbolic_bracket_agrees_with_numeric() {
        let n = 2;
        let mut a = Poly::q_quadratic(n, 0.8);
        a.add_term(1.5, 0, 1, &[1, 0], &[0, 0]); // + 1.5 q1 z
        let mut b = Poly::coord_z(n);
        b.add_term(-0.7, 0, 0, &[0, 1], &[1, 0]); // - 0.7 q2 p1
        let sym = poly_jacobi_bracket(&a, &b);
        let fa = PolyField::new(a, "a");
        let fb = PolyField::new(b, "b");
        let x = PhasePoint::from_slices(&[0.3, -0.6], &[0.9, 0.2], -0.4);
        assert_relative_eq!(
            sym.eval(0.0, &x),
            jacobi_bracket(&fa, &fb, 0.0, &x),
            epsilon = 1e-10
        );
    }

    #[test]
    fn jacobi_identity_for_polynomials() {
        let n = 1;
        let h = Poly::q_quadratic(n, 1.0).add(&Poly::coord_z(n));
        let g = Poly::coord_p(n, 0).mul(&Poly::coord_q(n, 0));
        let k = Poly::coord_z(n).mul(&Poly::coord_q(n, 0)).scale(0.5);
        let j1 = poly_jacobi_bracket(&poly_jacobi_bracket(&h, &g), &k);
        let j2 = poly_jacobi_bracket(&poly_jacobi_bracket(&g, &k), &h);
        let j3 = poly_jacobi_bracket(&poly_jacobi_bracket(&k, &h), &g);
        let total = j1.add(&j2).add(&j3);
        assert!(
            total.max_coeff() < 1e-12,
            "Jacobi defect polynomial: {total}"
        );
    }

    #[test]
    fn rescaled_reeb_cases() {
        let n = 1;
        let x = PhasePoint::from_slices(&[0.4], &[-0.9], 0.25);
        let one = PolyField::new(Poly::constant(n, 1.0), "one");
        let r = reeb_of_rescaled(&one, &x).unwrap();
        assert!(r.sub(&reeb_vector(n)).coord_norm() < 1e-15);

        let two = PolyField::new(Poly::constant(n, 2.0), "two");
        let r2 = reeb_of_rescaled(&two, &x).unwrap();
        assert_relative_eq!(r2.dz, 0.5);

        let ez = crate::field::ExpZ { n };
        let (val_def, contr_def) = rescaled_reeb_defect(&ez, &x).unwrap();
        assert!(val_def < 1e-14);
        assert!(contr_def < 1e-14);
        let re = reeb_of_rescaled(&ez, &x).unwrap();
        assert_relative_eq!(re.dz, (-0.25f64).exp(), epsilon = 1e-13);
        assert_relative_eq!(re.dp[0], 0.9 * (-0.25f64).exp(), epsilon = 1e-13);

        let zero = PolyField::new(Poly::constant(n, 0.0), "zero");
        assert!(reeb_of_rescaled(&zero, &x).is_err());
    }

    #[test]
    fn inverse_at_undoes_flow() {
        let iso = ContactIsotopy::new(arc("quadratic:1+coord:z", 1), 1e-2);
        let x = PhasePoint::from_slices(&[0.5], &[0.2], -0.3);
        let y = iso.map(0.8, &x).unwrap();
        let back = iso.inverse_at(0.8, &y).unwrap();
        assert!((back.to_flat() - x.to_flat()).norm() < 1e-10);
    }

    #[test]
    fn identity_suite_passes_for_registry_fields() {
        let samples: Vec<PhasePoint> = vec![
            PhasePoint::from_slices(&[0.3], &[-0.4], 0.2),
            PhasePoint::from_slices(&[-0.7], &[0.6], -0.5),
        ];
        let opts = IdentityOpts::default();
        for spec in ["reeb", "coord:z", "coord:p1", "quadratic:1+coord:z"] {
            let rep = identity_suite(&arc(spec, 1), &samples, &opts).unwrap();
            for e in &rep.entries {
                assert!(
                    e.pass(),
                    "{spec}: {} defect {} over tolerance {}",
                    e.name,
                    e.defect,
                    e.tolerance
                );
            }
        }
    }

    #[test]
    fn blowup_is_reported() {
        // H = -p^2 z gives dp/dt = p^3, a pole at t = 1/(2 p0^2), and an
        // exponent channel dg/dt = p^2 that diverges with it.
        let n = 1;
        let mut h = Poly::zero(n);
        h.add_term(-1.0, 0, 1, &[0], &[2]);
        let iso = ContactIsotopy::new(
            Arc::new(PolyField::new(h, "blowup")) as Arc<dyn HamiltonianField>,
            1e-2,
        );
        let x = PhasePoint::from_slices(&[0.0], &[2.0], 1.0);
        match iso.at(10.0, &x) {
            Err(Error::NonFinite { .. }) | Err(Error::ExponentOverflow { .. }) => {}
            other => panic!("expected blow-up error, got {other:?}"),
        }
    }
}
