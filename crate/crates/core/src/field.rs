//! Hamiltonian and scalar fields on R^(2n+1), with analytic derivatives where
//! the field family supports them and a 4th-order finite-difference fallback.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::PhasePoint;

/// Spatial gradient of a scalar function of (q, p, z).
#[derive(Debug, Clone)]
pub struct HamGrad {
    pub dq: DVector<f64>,
    pub dp: DVector<f64>,
    pub dz: f64,
}

impl HamGrad {
    pub fn zeros(n: usize) -> Self {
        Self {
            dq: DVector::zeros(n),
            dp: DVector::zeros(n),
            dz: 0.0,
        }
    }
}

/// Second derivatives in block form; `qp[(i, j)]` is d2H/dq_i dp_j.
#[derive(Debug, Clone)]
pub struct HamHess {
    pub qq: DMatrix<f64>,
    pub qp: DMatrix<f64>,
    pub pp: DMatrix<f64>,
    pub qz: DVector<f64>,
    pub pz: DVector<f64>,
    pub zz: f64,
}

/// Possibly time-dependent Hamiltonian H(t, q, p, z).
pub trait HamiltonianField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, t: f64, x: &PhasePoint) -> f64;

    /// Spatial gradient; default falls back to 4th-order central differences.
    fn grad(&self, t: f64, x: &PhasePoint) -> HamGrad {
        fd_grad(|y| self.value(t, y), x, FD_STEP)
    }

    /// Spatial second derivatives when the family has them in closed form.
    fn hess(&self, _t: f64, _x: &PhasePoint) -> Option<HamHess> {
        None
    }

    fn label(&self) -> String {
        "field".to_string()
    }
}

/// Scalar function of a point only, used for conformal rescalings f lambda.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &PhasePoint) -> f64;
    fn grad(&self, x: &PhasePoint) -> HamGrad;
    fn label(&self) -> String {
        "scalar".to_string()
    }
}

pub const FD_STEP: f64 = 1e-5;

/// 4th-order central-difference gradient in (q, p, z).
pub fn fd_grad<F: Fn(&PhasePoint) -> f64>(f: F, x: &PhasePoint, h: f64) -> HamGrad {
    let n = x.dim();
    let flat = x.to_flat();
    let mut out = DVector::zeros(2 * n + 1);
    for k in 0..2 * n + 1 {
        let eval = |s: f64| {
            let mut y = flat.clone();
            y[k] += s;
            f(&PhasePoint::from_flat(n, &y))
        };
        out[k] = (8.0 * (eval(h) - eval(-h)) - (eval(2.0 * h) - eval(-2.0 * h))) / (12.0 * h);
    }
    HamGrad {
        dq: out.rows(0, n).into_owned(),
        dp: out.rows(n, n).into_owned(),
        dz: out[2 * n],
    }
}

/// 2nd-order central-difference gradient; half the evaluations of `fd_grad`,
/// the right trade for fields whose value needs an integration.
pub fn fd_grad2<F: Fn(&PhasePoint) -> f64>(f: F, x: &PhasePoint, h: f64) -> HamGrad {
    let n = x.dim();
    let flat = x.to_flat();
    let mut out = DVector::zeros(2 * n + 1);
    for k in 0..2 * n + 1 {
        let eval = |s: f64| {
            let mut y = flat.clone();
            y[k] += s;
            f(&PhasePoint::from_flat(n, &y))
        };
        out[k] = (eval(h) - eval(-h)) / (2.0 * h);
    }
    HamGrad {
        dq: out.rows(0, n).into_owned(),
        dp: out.rows(n, n).into_owned(),
        dz: out[2 * n],
    }
}

/// Monomial exponents for c * t^t_exp * z^z_exp * prod q_i^qe * prod p_i^pe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct MonoKey {
    t_exp: u8,
    z_exp: u8,
    q_exp: Vec<u8>,
    p_exp: Vec<u8>,
}

/// Polynomial in (t, q, p, z) with exact coefficient arithmetic on terms.
///
/// Small and dimension-aware; this is the registry's working representation
/// and the closed-form route for nested bracket identities.
#[derive(Debug, Clone)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<MonoKey, f64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(c, 0, 0, &vec![0; n], &vec![0; n]);
        p
    }

    pub fn coord_z(n: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(1.0, 0, 1, &vec![0; n], &vec![0; n]);
        p
    }

    pub fn coord_q(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut e = vec![0u8; n];
        e[i] = 1;
        let mut p = Self::zero(n);
        p.add_term(1.0, 0, 0, &e, &vec![0; n]);
        p
    }

    pub fn coord_p(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut e = vec![0u8; n];
        e[i] = 1;
        let mut p = Self::zero(n);
        p.add_term(1.0, 0, 0, &vec![0; n], &e);
        p
    }

    pub fn time(n: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(1.0, 1, 0, &vec![0; n], &vec![0; n]);
        p
    }

    /// (a/2) |q|^2.
    pub fn q_quadratic(n: usize, a: f64) -> Self {
        let mut p = Self::zero(n);
        for i in 0..n {
            let mut e = vec![0u8; n];
            e[i] = 2;
            p.add_term(0.5 * a, 0, 0, &e, &vec![0; n]);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, c: f64, t_exp: u8, z_exp: u8, q_exp: &[u8], p_exp: &[u8]) {
        assert_eq!(q_exp.len(), self.n);
        assert_eq!(p_exp.len(), self.n);
        if c == 0.0 {
            return;
        }
        let key = MonoKey {
            t_exp,
            z_exp,
            q_exp: q_exp.to_vec(),
            p_exp: p_exp.to_vec(),
        };
        let entry = self.terms.entry(key.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*c, k.t_exp, k.z_exp, &k.q_exp, &k.p_exp);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.n);
        for (k, c) in &self.terms {
            out.add_term(c * s, k.t_exp, k.z_exp, &k.q_exp, &k.p_exp);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.n, other.n);
        let mut out = Poly::zero(self.n);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let q: Vec<u8> = ka
                    .q_exp
                    .iter()
                    .zip(&kb.q_exp)
                    .map(|(a, b)| a + b)
                    .collect();
                let p: Vec<u8> = ka
                    .p_exp
                    .iter()
                    .zip(&kb.p_exp)
                    .map(|(a, b)| a + b)
                    .collect();
                out.add_term(ca * cb, ka.t_exp + kb.t_exp, ka.z_exp + kb.z_exp, &q, &p);
            }
        }
        out
    }

    fn diff_key(&self, which: Var) -> Poly {
        let mut out = Poly::zero(self.n);
        for (k, c) in &self.terms {
            let mut k2 = k.clone();
            let factor = match which {
                Var::Z => {
                    if k.z_exp == 0 {
                        continue;
                    }
                    k2.z_exp -= 1;
                    k.z_exp as f64
                }
                Var::Q(i) => {
                    if k.q_exp[i] == 0 {
                        continue;
                    }
                    k2.q_exp[i] -= 1;
                    k.q_exp[i] as f64
                }
                Var::P(i) => {
                    if k.p_exp[i] == 0 {
                        continue;
                    }
                    k2.p_exp[i] -= 1;
                    k.p_exp[i] as f64
                }
            };
            out.add_term(c * factor, k2.t_exp, k2.z_exp, &k2.q_exp, &k2.p_exp);
        }
        out
    }

    pub fn d_q(&self, i: usize) -> Poly {
        self.diff_key(Var::Q(i))
    }

    pub fn d_p(&self, i: usize) -> Poly {
        self.diff_key(Var::P(i))
    }

    pub fn d_z(&self) -> Poly {
        self.diff_key(Var::Z)
    }

    pub fn eval(&self, t: f64, x: &PhasePoint) -> f64 {
        assert_eq!(x.dim(), self.n);
        let mut acc = 0.0;
        for (k, c) in &self.terms {
            let mut m = *c;
            m *= powi_u8(t, k.t_exp);
            m *= powi_u8(x.z, k.z_exp);
            for i in 0..self.n {
                m *= powi_u8(x.q[i], k.q_exp[i]);
                m *= powi_u8(x.p[i], k.p_exp[i]);
            }
            acc += m;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            let _ = write!(s, "{c}");
            if k.t_exp > 0 {
                let _ = write!(s, " t^{}", k.t_exp);
            }
            for (j, e) in k.q_exp.iter().enumerate() {
                if *e > 0 {
                    let _ = write!(s, " q{}^{}", j + 1, e);
                }
            }
            for (j, e) in k.p_exp.iter().enumerate() {
                if *e > 0 {
                    let _ = write!(s, " p{}^{}", j + 1, e);
                }
            }
            if k.z_exp > 0 {
                let _ = write!(s, " z^{}", k.z_exp);
            }
        }
        s
    }
}

enum Var {
    Z,
    Q(usize),
    P(usize),
}

fn powi_u8(base: f64, e: u8) -> f64 {
    match e {
        0 => 1.0,
        1 => base,
        2 => base * base,
        _ => base.powi(e as i32),
    }
}

/// Flat term list for fast repeated evaluation inside integrator loops.
#[derive(Debug, Clone)]
struct CompiledPoly {
    terms: Vec<CTerm>,
}

#[derive(Debug, Clone)]
struct CTerm {
    c: f64,
    t_exp: u8,
    z_exp: u8,
    q_exp: Box<[u8]>,
    p_exp: Box<[u8]>,
}

impl CompiledPoly {
    fn from_poly(p: &Poly) -> Self {
        Self {
            terms: p
                .terms
                .iter()
                .map(|(k, c)| CTerm {
                    c: *c,
                    t_exp: k.t_exp,
                    z_exp: k.z_exp,
                    q_exp: k.q_exp.clone().into_boxed_slice(),
                    p_exp: k.p_exp.clone().into_boxed_slice(),
                })
                .collect(),
        }
    }

    fn eval(&self, t: f64, x: &PhasePoint) -> f64 {
        let mut acc = 0.0;
        for term in &self.terms {
            let mut m = term.c;
            m *= powi_u8(t, term.t_exp);
            m *= powi_u8(x.z, term.z_exp);
            for (i, e) in term.q_exp.iter().enumerate() {
                if *e > 0 {
                    m *= powi_u8(x.q[i], *e);
                }
            }
            for (i, e) in term.p_exp.iter().enumerate() {
                if *e > 0 {
                    m *= powi_u8(x.p[i], *e);
                }
            }
            acc += m;
        }
        acc
    }
}

/// Polynomial Hamiltonian with precomputed derivative polynomials.
pub struct PolyField {
    poly: Poly,
    value_c: CompiledPoly,
    dq_c: Vec<CompiledPoly>,
    dp_c: Vec<CompiledPoly>,
    dz_c: CompiledPoly,
    hess: PolyHess,
    name: String,
}

struct PolyHess {
    qq: Vec<Vec<Poly>>,
    qp: Vec<Vec<Poly>>,
    pp: Vec<Vec<Poly>>,
    qz: Vec<Poly>,
    pz: Vec<Poly>,
    zz: Poly,
}

impl std::fmt::Debug for PolyField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolyField")
            .field("name", &self.name)
            .field("dim", &self.poly.dim())
            .finish()
    }
}

impl PolyField {
    pub fn new(poly: Poly, name: impl Into<String>) -> Self {
        let n = poly.dim();
        let dq: Vec<Poly> = (0..n).map(|i| poly.d_q(i)).collect();
        let dp: Vec<Poly> = (0..n).map(|i| poly.d_p(i)).collect();
        let dz = poly.d_z();
        let hess = PolyHess {
            qq: (0..n)
                .map(|i| (0..n).map(|j| dq[i].d_q(j)).collect())
                .collect(),
            qp: (0..n)
                .map(|i| (0..n).map(|j| dq[i].d_p(j)).collect())
                .collect(),
            pp: (0..n)
                .map(|i| (0..n).map(|j| dp[i].d_p(j)).collect())
                .collect(),
            qz: (0..n).map(|i| dq[i].d_z()).collect(),
            pz: (0..n).map(|i| dp[i].d_z()).collect(),
            zz: dz.d_z(),
        };
        Self {
            value_c: CompiledPoly::from_poly(&poly),
            dq_c: dq.iter().map(CompiledPoly::from_poly).collect(),
            dp_c: dp.iter().map(CompiledPoly::from_poly).collect(),
            dz_c: CompiledPoly::from_poly(&dz),
            poly,
            hess,
            name: name.into(),
        }
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }
}

impl HamiltonianField for PolyField {
    fn dim(&self) -> usize {
        self.poly.dim()
    }

    fn value(&self, t: f64, x: &PhasePoint) -> f64 {
        self.value_c.eval(t, x)
    }

    fn grad(&self, t: f64, x: &PhasePoint) -> HamGrad {
        let n = self.dim();
        HamGrad {
            dq: DVector::from_iterator(n, self.dq_c.iter().map(|p| p.eval(t, x))),
            dp: DVector::from_iterator(n, self.dp_c.iter().map(|p| p.eval(t, x))),
            dz: self.dz_c.eval(t, x),
        }
    }

    fn hess(&self, t: f64, x: &PhasePoint) -> Option<HamHess> {
        let n = self.dim();
        let h = &self.hess;
        Some(HamHess {
            qq: DMatrix::from_fn(n, n, |i, j| h.qq[i][j].eval(t, x)),
            qp: DMatrix::from_fn(n, n, |i, j| h.qp[i][j].eval(t, x)),
            pp: DMatrix::from_fn(n, n, |i, j| h.pp[i][j].eval(t, x)),
            qz: DVector::from_iterator(n, h.qz.iter().map(|p| p.eval(t, x))),
            pz: DVector::from_iterator(n, h.pz.iter().map(|p| p.eval(t, x))),
            zz: h.zz.eval(t, x),
        })
    }

    fn label(&self) -> String {
        self.name.clone()
    }
}

impl ScalarField for PolyField {
    fn dim(&self) -> usize {
        self.poly.dim()
    }

    fn value(&self, x: &PhasePoint) -> f64 {
        self.poly.eval(0.0, x)
    }

    fn grad(&self, x: &PhasePoint) -> HamGrad {
        HamiltonianField::grad(self, 0.0, x)
    }

    fn label(&self) -> String {
        self.name.clone()
    }
}

/// f(q, p, z) = e^z, the standard positive rescaling example.
pub struct ExpZ {
    pub n: usize,
}

impl ScalarField for ExpZ {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &PhasePoint) -> f64 {
        x.z.exp()
    }

    fn grad(&self, x: &PhasePoint) -> HamGrad {
        let mut g = HamGrad::zeros(self.n);
        g.dz = x.z.exp();
        g
    }

    fn label(&self) -> String {
        "exp:z".to_string()
    }
}

/// Parses registry names like "reeb", "const:-1", "coord:z", "coord:q1",
/// "coord:p2", "quadratic:0.5", "time", and "+"-separated sums of those.
pub fn parse_field(n: usize, spec: &str) -> Result<Arc<PolyField>> {
    let mut poly = Poly::zero(n);
    for atom in spec.split('+') {
        let atom = atom.trim();
        poly = poly.add(&parse_atom(n, atom)?);
    }
    Ok(Arc::new(PolyField::new(poly, spec)))
}

fn parse_atom(n: usize, atom: &str) -> Result<Poly> {
    let bad = |m: String| Error::BadFieldSpec(m);
    if atom == "reeb" {
        return Ok(Poly::constant(n, -1.0));
    }
    if atom == "time" {
        return Ok(Poly::time(n));
    }
    if let Some(rest) = atom.strip_prefix("const:") {
        let c: f64 = rest
            .parse()
            .map_err(|_| bad(format!("bad constant in '{atom}'")))?;
        return Ok(Poly::constant(n, c));
    }
    if let Some(rest) = atom.strip_prefix("quadratic:") {
        let a: f64 = rest
            .parse()
            .map_err(|_| bad(format!("bad coefficient in '{atom}'")))?;
        return Ok(Poly::q_quadratic(n, a));
    }
    if let Some(rest) = atom.strip_prefix("coord:") {
        if rest == "z" {
            return Ok(Poly::coord_z(n));
        }
        let (kind, idx) = rest.split_at(1);
        let i: usize = idx
            .parse()
            .map_err(|_| bad(format!("bad coordinate index in '{atom}'")))?;
        if i == 0 || i > n {
            return Err(bad(format!("coordinate index out of range in '{atom}'")));
        }
        return match kind {
            "q" => Ok(Poly::coord_q(n, i - 1)),
            "p" => Ok(Poly::coord_p(n, i - 1)),
            _ => Err(bad(format!("unknown coordinate kind in '{atom}'"))),
        };
    }
    Err(bad(format!("unknown field atom '{atom}'")))
}

impl std::fmt::Display for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe())
    }
}
