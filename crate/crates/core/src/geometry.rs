//! Contact geometry of R^(2n+1) with the standard form lambda = dz - p.dq.
//!
//! Conventions fixed here and used everywhere else:
//! coordinates are ordered (q_1..q_n, p_1..p_n, z), the Reeb field is d/dz,
//! dlambda = dq ^ dp, and the contact hyperplane xi = ker lambda is framed by
//! D/dq_i = d/dq_i + p_i d/dz together with d/dp_i.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Point of R^(2n+1) in jet-style coordinates (q, p, z).
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub z: f64,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>, z: f64) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have the same dimension");
        Self { q, p, z }
    }

    pub fn from_slices(q: &[f64], p: &[f64], z: f64) -> Self {
        Self::new(DVector::from_row_slice(q), DVector::from_row_slice(p), z)
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Flattens to (q, p, z) order, matching `from_flat`.
    pub fn to_flat(&self) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(2 * n + 1);
        out.rows_mut(0, n).copy_from(&self.q);
        out.rows_mut(n, n).copy_from(&self.p);
        out[2 * n] = self.z;
        out
    }

    pub fn from_flat(n: usize, flat: &DVector<f64>) -> Self {
        assert_eq!(flat.len(), 2 * n + 1, "flat state has wrong length");
        Self::new(
            flat.rows(0, n).into_owned(),
            flat.rows(n, n).into_owned(),
            flat[2 * n],
        )
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite())
            && self.p.iter().all(|v| v.is_finite())
            && self.z.is_finite()
    }

    /// Coordinate shift x + s v, used by finite-difference differentials.
    pub fn offset(&self, v: &TangentVector, s: f64) -> PhasePoint {
        PhasePoint::new(&self.q + &v.dq * s, &self.p + &v.dp * s, self.z + v.dz * s)
    }
}

/// Tangent vector at a `PhasePoint`, stored in coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub dq: DVector<f64>,
    pub dp: DVector<f64>,
    pub dz: f64,
}

impl TangentVector {
    pub fn new(dq: DVector<f64>, dp: DVector<f64>, dz: f64) -> Self {
        assert_eq!(dq.len(), dp.len(), "dq and dp must have the same dimension");
        Self { dq, dp, dz }
    }

    pub fn from_slices(dq: &[f64], dp: &[f64], dz: f64) -> Self {
        Self::new(DVector::from_row_slice(dq), DVector::from_row_slice(dp), dz)
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dq.len()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(&self.dq * s, &self.dp * s, self.dz * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.dq + &other.dq, &self.dp + &other.dp, self.dz + other.dz)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.dq - &other.dq, &self.dp - &other.dp, self.dz - other.dz)
    }

    /// Euclidean length in coordinates; use `triad_metric` for the geometric norm.
    pub fn coord_norm(&self) -> f64 {
        (self.dq.norm_squared() + self.dp.norm_squared() + self.dz * self.dz).sqrt()
    }

    /// Flattens to (dq, dp, dz) order, matching `from_flat`.
    pub fn to_flat(&self) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(2 * n + 1);
        out.rows_mut(0, n).copy_from(&self.dq);
        out.rows_mut(n, n).copy_from(&self.dp);
        out[2 * n] = self.dz;
        out
    }

    pub fn from_flat(n: usize, flat: &DVector<f64>) -> Self {
        assert_eq!(flat.len(), 2 * n + 1, "flat tangent has wrong length");
        Self::new(
            flat.rows(0, n).into_owned(),
            flat.rows(n, n).into_owned(),
            flat[2 * n],
        )
    }
}

/// lambda_x(v) = v_z - p . v_q.
pub fn lambda(x: &PhasePoint, v: &TangentVector) -> f64 {
    assert_eq!(x.dim(), v.dim(), "point and vector dimensions differ");
    v.dz - x.p.dot(&v.dq)
}

/// dlambda(v, w) = sum_i (v_qi w_pi - v_pi w_qi); base point free in this model.
pub fn dlambda(v: &TangentVector, w: &TangentVector) -> f64 {
    assert_eq!(v.dim(), w.dim(), "vector dimensions differ");
    v.dq.dot(&w.dp) - v.dp.dot(&w.dq)
}

/// Reeb field of lambda: d/dz, independent of the base point.
pub fn reeb_vector(n: usize) -> TangentVector {
    TangentVector::new(DVector::zeros(n), DVector::zeros(n), 1.0)
}

/// Projection onto xi along the Reeb direction: v - lambda(v) R.
pub fn xi_project(x: &PhasePoint, v: &TangentVector) -> TangentVector {
    let c = lambda(x, v);
    TangentVector::new(v.dq.clone(), v.dp.clone(), v.dz - c)
}

/// Lifted CR structure: J(D/dq_i) = d/dp_i, J(d/dp_i) = -D/dq_i, J(R) = 0.
///
/// Acts through the xi-frame components (a, b) = (v_q, v_p) of the projection,
/// so J v = J(v^pi) in coordinates.
pub fn lifted_j(x: &PhasePoint, v: &TangentVector) -> TangentVector {
    assert_eq!(x.dim(), v.dim(), "point and vector dimensions differ");
    // v^pi = sum a_i D/dq_i + b_i d/dp_i with a = v_q, b = v_p.
    let a = &v.dq;
    let b = &v.dp;
    TangentVector::new(-b.clone(), a.clone(), -x.p.dot(b))
}

/// Triad metric g(v, w) = dlambda(v^pi, J w^pi) + lambda(v) lambda(w).
///
/// The xi-frame {D/dq_i, d/dp_i} is orthonormal for it and R is a unit normal.
pub fn triad_metric(x: &PhasePoint, v: &TangentVector, w: &TangentVector) -> f64 {
    let vp = xi_project(x, v);
    let wp = xi_project(x, w);
    let jwp = lifted_j(x, &wp);
    dlambda(&vp, &jwp) + lambda(x, v) * lambda(x, w)
}

/// Norm induced by `triad_metric`.
pub fn triad_norm(x: &PhasePoint, v: &TangentVector) -> f64 {
    triad_metric(x, v, v).max(0.0).sqrt()
}

/// xi-frame at a point: the 2n vectors D/dq_i, d/dp_i followed by R.
#[derive(Debug, Clone)]
pub struct TriadFrame {
    pub base: PhasePoint,
}

impl TriadFrame {
    pub fn at(base: PhasePoint) -> Self {
        Self { base }
    }

    /// D/dq_i = d/dq_i + p_i d/dz.
    pub fn horizontal(&self, i: usize) -> TangentVector {
        let n = self.base.dim();
        assert!(i < n, "frame index out of range");
        let mut dq = DVector::zeros(n);
        dq[i] = 1.0;
        TangentVector::new(dq, DVector::zeros(n), self.base.p[i])
    }

    pub fn vertical(&self, i: usize) -> TangentVector {
        let n = self.base.dim();
        assert!(i < n, "frame index out of range");
        let mut dp = DVector::zeros(n);
        dp[i] = 1.0;
        TangentVector::new(DVector::zeros(n), dp, 0.0)
    }

    pub fn reeb(&self) -> TangentVector {
        reeb_vector(self.base.dim())
    }

    /// All 2n + 1 frame vectors in the order D/dq_1.., d/dp_1.., R.
    pub fn vectors(&self) -> Vec<TangentVector> {
        let n = self.base.dim();
        let mut out = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            out.push(self.horizontal(i));
        }
        for i in 0..n {
            out.push(self.vertical(i));
        }
        out.push(self.reeb());
        out
    }
}

/// Generating function of a jet-graph Legendrian; analytic derivatives.
#[derive(Debug, Clone)]
pub enum GeneratingFn {
    /// S(q) = c.
    Constant(f64),
    /// S(q) = c + (a/2) |q|^2.
    Quadratic { c: f64, a: f64 },
}

impl GeneratingFn {
    pub fn value(&self, q: &DVector<f64>) -> f64 {
        match self {
            GeneratingFn::Constant(c) => *c,
            GeneratingFn::Quadratic { c, a } => c + 0.5 * a * q.norm_squared(),
        }
    }

    pub fn grad(&self, q: &DVector<f64>) -> DVector<f64> {
        match self {
            GeneratingFn::Constant(_) => DVector::zeros(q.len()),
            GeneratingFn::Quadratic { a, .. } => q * *a,
        }
    }

    /// Hessian as a dense matrix; constant for the supported families.
    pub fn hess(&self, q: &DVector<f64>) -> nalgebra::DMatrix<f64> {
        let n = q.len();
        match self {
            GeneratingFn::Constant(_) => nalgebra::DMatrix::zeros(n, n),
            GeneratingFn::Quadratic { a, .. } => nalgebra::DMatrix::identity(n, n) * *a,
        }
    }

    pub fn label(&self) -> String {
        match self {
            GeneratingFn::Constant(c) => format!("const:{c}"),
            GeneratingFn::Quadratic { c, a } => format!("quad:{c}:{a}"),
        }
    }

    /// Inverse of `label`. Returns None when the string is not a label of
    /// a supported family.
    pub fn parse_label(label: &str) -> Option<Self> {
        let mut parts = label.split(':');
        let kind = parts.next()?;
        let out = match kind {
            "const" => GeneratingFn::Constant(parts.next()?.parse().ok()?),
            "quad" => GeneratingFn::Quadratic {
                c: parts.next()?.parse().ok()?,
                a: parts.next()?.parse().ok()?,
            },
            _ => return None,
        };
        parts.next().is_none().then_some(out)
    }
}

/// Legendrian j^1 S = {(q, dS(q), S(q))} over a chart box |q_i| <= half_width.
#[derive(Debug, Clone)]
pub struct LegendrianJetGraph {
    pub n: usize,
    pub s: GeneratingFn,
    pub half_width: f64,
}

impl LegendrianJetGraph {
    pub fn new(n: usize, s: GeneratingFn, half_width: f64) -> Self {
        assert!(half_width > 0.0, "chart box must have positive size");
        Self { n, s, half_width }
    }

    /// Zero section j^1 0 with a default chart box.
    pub fn zero_section(n: usize) -> Self {
        Self::new(n, GeneratingFn::Constant(0.0), 10.0)
    }

    fn check_chart(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: q.len(),
            });
        }
        for (i, qi) in q.iter().enumerate() {
            if qi.abs() > self.half_width {
                return Err(Error::OutsideChart {
                    index: i,
                    value: qi.abs(),
                    half_width: self.half_width,
                });
            }
        }
        Ok(())
    }

    /// Point of the Legendrian over chart coordinates q.
    pub fn point(&self, q: &DVector<f64>) -> Result<PhasePoint> {
        self.check_chart(q)?;
        Ok(PhasePoint::new(q.clone(), self.s.grad(q), self.s.value(q)))
    }

    /// Defect (p - dS(q), z - S(q)) of an ambient point against the graph.
    pub fn defect(&self, x: &PhasePoint) -> DVector<f64> {
        assert_eq!(x.dim(), self.n, "point dimension mismatch");
        let mut d = DVector::zeros(self.n + 1);
        let grad = self.s.grad(&x.q);
        for i in 0..self.n {
            d[i] = x.p[i] - grad[i];
        }
        d[self.n] = x.z - self.s.value(&x.q);
        d
    }

    /// Tangent basis at chart coordinates q: T_k = (e_k, Hess S e_k, dS . e_k).
    ///
    /// Every T_k annihilates lambda, which is the Legendrian condition.
    pub fn tangent_basis(&self, q: &DVector<f64>) -> Result<Vec<TangentVector>> {
        self.check_chart(q)?;
        let grad = self.s.grad(q);
        let hess = self.s.hess(q);
        let mut out = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let mut dq = DVector::zeros(self.n);
            dq[k] = 1.0;
            let dp = hess.column(k).into_owned();
            out.push(TangentVector::new(dq, dp, grad[k]));
        }
        Ok(out)
    }

    pub fn label(&self) -> String {
        self.s.label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_point() -> PhasePoint {
        PhasePoint::from_slices(&[0.3, -1.2], &[2.0, 0.0], 0.7)
    }

    #[test]
    fn lambda_on_coordinate_vectors() {
        let x = sample_point();
        let n = x.dim();
        assert_eq!(lambda(&x, &reeb_vector(n)), 1.0);
        // d/dq_1 pairs with -p_1 = -2.
        let dq1 = TangentVector::from_slices(&[1.0, 0.0], &[0.0, 0.0], 0.0);
        assert_eq!(lambda(&x, &dq1), -2.0);
        // The lifted frame vector D/dq_1 is lambda-flat.
        let frame = TriadFrame::at(x.clone());
        assert_eq!(lambda(&x, &frame.horizontal(0)), 0.0);
        assert_eq!(lambda(&x, &frame.vertical(1)), 0.0);
    }

    #[test]
    fn xi_projection_kills_reeb_and_fixes_xi() {
        let x = sample_point();
        let n = x.dim();
        let r = xi_project(&x, &reeb_vector(n));
        assert_eq!(r.coord_norm(), 0.0);
        let frame = TriadFrame::at(x.clone());
        let h = frame.horizontal(0);
        let hp = xi_project(&x, &h);
        assert_eq!(hp.sub(&h).coord_norm(), 0.0);
        // Idempotence on a generic vector.
        let v = TangentVector::from_slices(&[1.0, 2.0], &[-0.5, 0.3], 0.9);
        let once = xi_project(&x, &v);
        let twice = xi_project(&x, &once);
        assert!(once.sub(&twice).coord_norm() < 1e-15);
        assert!(lambda(&x, &once).abs() < 1e-15);
    }

    #[test]
    fn lifted_j_maps_frame_correctly() {
        let x = sample_point();
        let frame = TriadFrame::at(x.clone());
        for i in 0..x.dim() {
            let jh = lifted_j(&x, &frame.horizontal(i));
            assert!(jh.sub(&frame.vertical(i)).coord_norm() < 1e-15);
            let jv = lifted_j(&x, &frame.vertical(i));
            assert!(jv.add(&frame.horizontal(i)).coord_norm() < 1e-15);
        }
        let jr = lifted_j(&x, &reeb_vector(x.dim()));
        assert_eq!(jr.coord_norm(), 0.0);
    }

    #[test]
    fn j_squares_to_minus_one_on_xi() {
        let x = sample_point();
        let v = TangentVector::from_slices(&[0.4, -0.2], &[1.0, 0.8], 0.0);
        let vpi = xi_project(&x, &v);
        let jjv = lifted_j(&x, &lifted_j(&x, &vpi));
        assert!(jjv.add(&vpi).coord_norm() < 1e-15);
    }

    #[test]
    fn dlambda_tames_j_positively() {
        let x = sample_point();
        let v = TangentVector::from_slices(&[0.4, -0.2], &[1.0, 0.8], 0.3);
        let vpi = xi_project(&x, &v);
        let jv = lifted_j(&x, &vpi);
        assert!(dlambda(&vpi, &jv) > 0.0);
    }

    #[test]
    fn triad_metric_examples() {
        let x = sample_point();
        let n = x.dim();
        let r = reeb_vector(n);
        assert_relative_eq!(triad_metric(&x, &r, &r), 1.0);
        let frame = TriadFrame::at(x.clone());
        let v = frame.vertical(0);
        assert_relative_eq!(triad_metric(&x, &v, &v), 1.0);
        assert_relative_eq!(triad_metric(&x, &v, &r), 0.0);
        assert_relative_eq!(triad_metric(&x, &frame.horizontal(0), &v), 0.0);
        // Frame orthonormality makes the Gram matrix the identity.
        let vs = frame.vectors();
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(triad_metric(&x, a, b), want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn legendrian_point_and_defect() {
        let leg = LegendrianJetGraph::new(1, GeneratingFn::Quadratic { c: 0.0, a: 2.0 }, 5.0);
        let q = DVector::from_row_slice(&[0.5]);
        let x = leg.point(&q).unwrap();
        assert_relative_eq!(x.p[0], 1.0);
        assert_relative_eq!(x.z, 0.25);
        assert!(leg.defect(&x).norm() < 1e-15);
        let off = PhasePoint::from_slices(&[0.5], &[0.9], 0.3);
        let d = leg.defect(&off);
        assert_relative_eq!(d[0], -0.1, epsilon = 1e-15);
        assert_relative_eq!(d[1], 0.05, epsilon = 1e-15);
    }

    #[test]
    fn legendrian_chart_box_enforced() {
        let leg = LegendrianJetGraph::new(1, GeneratingFn::Constant(0.0), 1.0);
        let q = DVector::from_row_slice(&[1.5]);
        assert!(matches!(leg.point(&q), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn legendrian_tangents_annihilate_lambda() {
        let leg = LegendrianJetGraph::new(2, GeneratingFn::Quadratic { c: 0.3, a: -1.7 }, 5.0);
        let q = DVector::from_row_slice(&[0.4, -0.9]);
        let x = leg.point(&q).unwrap();
        for t in leg.tangent_basis(&q).unwrap() {
            assert!(lambda(&x, &t).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_roundtrip() {
        let x = sample_point();
        let y = PhasePoint::from_flat(2, &x.to_flat());
        assert_eq!(x, y);
    }
}
