//! Multidimensional RDM (relative distance measure) interval arithmetic.
//!
//! Every interval `[lo, hi]` is parameterized as `lo + alpha * (hi - lo)` with
//! its own `alpha` in `[0, 1]`. Arithmetic happens on polynomials in these
//! `alpha` variables, so repeated occurrences of the same interval stay
//! correlated: `x - x` is exactly zero and the distributive law holds.
//! Expressions are capped at degree 2, which covers every equation of the
//! estimator; the range of a value is recovered with [`RdmExpr::span`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::RdmError;
use crate::interval::Interval;

/// Coefficients with smaller magnitude are dropped on normalization.
pub const COEFF_TOLERANCE: f64 = 1e-14;

/// Default cap on distinct variables for [`RdmExpr::span`].
pub const DEFAULT_SPAN_VAR_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RdmVarId(pub u32);

impl fmt::Display for RdmVarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Per-problem binding of RDM variables to the intervals they parameterize.
#[derive(Clone, Debug, Default)]
pub struct RdmRegistry {
    bound: BTreeMap<RdmVarId, Interval>,
}

impl RdmRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: RdmVarId) -> Option<Interval> {
        self.bound.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.bound.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bound.is_empty()
    }

    /// Parameterizes `x` by `alpha_id`: returns `lo + (hi - lo) * alpha_id`.
    pub fn lift(&mut self, x: Interval, id: RdmVarId) -> Result<RdmExpr, RdmError> {
        match self.bound.get(&id) {
            Some(existing) if *existing != x => {
                return Err(RdmError::RdmVarRebound {
                    id: id.0,
                    existing: existing.to_string(),
                    requested: x.to_string(),
                })
            }
            Some(_) => {}
            None => {
                self.bound.insert(id, x);
            }
        }
        Ok(RdmExpr::affine(x.lo(), id, x.width()))
    }

    /// Maps an alpha assignment back to the value of the underlying interval.
    pub fn value_at(&self, id: RdmVarId, alpha: f64) -> Option<f64> {
        self.get(id).map(|x| x.at(alpha))
    }
}

/// `rdm_lift` as a free function over a registry.
pub fn rdm_lift(
    registry: &mut RdmRegistry,
    x: Interval,
    id: RdmVarId,
) -> Result<RdmExpr, RdmError> {
    registry.lift(x, id)
}

/// A polynomial `c + sum a_i x_i + sum b_ij x_i x_j` of degree at most 2.
///
/// Quadratic keys are stored with `i <= j`; `(i, i)` is a pure square.
/// The same algebra is used for polynomials in physical quantities (see
/// `equations`); span semantics only apply when the variables are RDM
/// alphas ranging over `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RdmExpr {
    constant: f64,
    linear: BTreeMap<RdmVarId, f64>,
    quadratic: BTreeMap<(RdmVarId, RdmVarId), f64>,
}

fn ordered(a: RdmVarId, b: RdmVarId) -> (RdmVarId, RdmVarId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl RdmExpr {
    pub fn constant(c: f64) -> Self {
        RdmExpr {
            constant: c,
            ..Default::default()
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The bare variable `alpha_id`.
    pub fn var(id: RdmVarId) -> Self {
        Self::affine(0.0, id, 1.0)
    }

    pub fn affine(c: f64, id: RdmVarId, coeff: f64) -> Self {
        let mut e = Self::constant(c);
        e.linear.insert(id, coeff);
        e.normalize();
        e
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn linear_coeff(&self, id: RdmVarId) -> f64 {
        self.linear.get(&id).copied().unwrap_or(0.0)
    }

    pub fn quadratic_coeff(&self, a: RdmVarId, b: RdmVarId) -> f64 {
        self.quadratic.get(&ordered(a, b)).copied().unwrap_or(0.0)
    }

    pub fn linear_terms(&self) -> impl Iterator<Item = (RdmVarId, f64)> + '_ {
        self.linear.iter().map(|(k, v)| (*k, *v))
    }

    pub fn quadratic_terms(&self) -> impl Iterator<Item = (RdmVarId, RdmVarId, f64)> + '_ {
        self.quadratic.iter().map(|((a, b), v)| (*a, *b, *v))
    }

    pub fn degree(&self) -> usize {
        if !self.quadratic.is_empty() {
            2
        } else if !self.linear.is_empty() {
            1
        } else {
            0
        }
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Distinct variables, ascending.
    pub fn vars(&self) -> Vec<RdmVarId> {
        let mut v: Vec<RdmVarId> = self.linear.keys().copied().collect();
        for (a, b) in self.quadratic.keys() {
            v.push(*a);
            v.push(*b);
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    fn normalize(&mut self) {
        self.linear.retain(|_, c| c.abs() >= COEFF_TOLERANCE);
        self.quadratic.retain(|_, c| c.abs() >= COEFF_TOLERANCE);
        if self.constant.abs() < COEFF_TOLERANCE {
            self.constant = 0.0;
        }
    }

    pub fn scale(&self, k: f64) -> RdmExpr {
        let mut out = RdmExpr {
            constant: self.constant * k,
            linear: self.linear.iter().map(|(i, c)| (*i, c * k)).collect(),
            quadratic: self.quadratic.iter().map(|(i, c)| (*i, c * k)).collect(),
        };
        out.normalize();
        out
    }

    fn combine(&self, other: &RdmExpr, sign: f64) -> RdmExpr {
        let mut out = self.clone();
        out.constant += sign * other.constant;
        for (id, c) in &other.linear {
            *out.linear.entry(*id).or_insert(0.0) += sign * c;
        }
        for (key, c) in &other.quadratic {
            *out.quadratic.entry(*key).or_insert(0.0) += sign * c;
        }
        out.normalize();
        out
    }

    pub fn try_mul(&self, other: &RdmExpr) -> Result<RdmExpr, RdmError> {
        let degree = self.degree() + other.degree();
        if degree > 2 {
            return Err(RdmError::DegreeOverflow { degree });
        }
        let mut out = RdmExpr::constant(self.constant * other.constant);
        for (id, c) in &self.linear {
            *out.linear.entry(*id).or_insert(0.0) += c * other.constant;
        }
        for (id, c) in &other.linear {
            *out.linear.entry(*id).or_insert(0.0) += c * self.constant;
        }
        for (key, c) in &self.quadratic {
            *out.quadratic.entry(*key).or_insert(0.0) += c * other.constant;
        }
        for (key, c) in &other.quadratic {
            *out.quadratic.entry(*key).or_insert(0.0) += c * self.constant;
        }
        for (a, ca) in &self.linear {
            for (b, cb) in &other.linear {
                *out.quadratic.entry(ordered(*a, *b)).or_insert(0.0) += ca * cb;
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn eval(&self, value: impl Fn(RdmVarId) -> f64) -> f64 {
        let mut acc = self.constant;
        for (id, c) in &self.linear {
            acc += c * value(*id);
        }
        for ((a, b), c) in &self.quadratic {
            acc += c * value(*a) * value(*b);
        }
        acc
    }

    /// Partial derivative with respect to `id`, itself a polynomial.
    pub fn partial(&self, id: RdmVarId) -> RdmExpr {
        let mut out = RdmExpr::constant(self.linear_coeff(id));
        for ((a, b), c) in &self.quadratic {
            if *a == id && *b == id {
                *out.linear.entry(id).or_insert(0.0) += 2.0 * c;
            } else if *a == id {
                *out.linear.entry(*b).or_insert(0.0) += c;
            } else if *b == id {
                *out.linear.entry(*a).or_insert(0.0) += c;
            }
        }
        out.normalize();
        out
    }

    /// Classic interval evaluation with each variable replaced by its range.
    /// Pure squares use the exact square range.
    pub fn eval_interval(&self, range: impl Fn(RdmVarId) -> Interval) -> Interval {
        let mut acc = Interval::point(self.constant);
        for (id, c) in &self.linear {
            acc = acc + range(*id) * *c;
        }
        for ((a, b), c) in &self.quadratic {
            let term = if a == b {
                range(*a).sqr()
            } else {
                range(*a) * range(*b)
            };
            acc = acc + term * *c;
        }
        acc
    }

    /// Same polynomial with every pure-square term removed.
    pub fn without_pure_squares(&self) -> RdmExpr {
        let mut out = self.clone();
        out.quadratic.retain(|(a, b), _| a != b);
        out
    }

    /// Exact range over the unit box `[0, 1]^k`.
    pub fn span(&self) -> Result<Interval, RdmError> {
        self.span_with_cap(DEFAULT_SPAN_VAR_CAP)
    }

    /// Exact range over `[0, 1]^k` for at most `cap` variables.
    ///
    /// A coordinate along which the polynomial is concave (or linear) can be
    /// pushed to 0 or 1 without leaving the minimum, so only coordinates with
    /// a positive pure-square coefficient may sit strictly inside at a
    /// minimizer (negative ones for a maximizer). For every face spanned by
    /// such interior candidates the stationary point is solved exactly; the
    /// remaining coordinates range over the vertices.
    pub fn span_with_cap(&self, cap: usize) -> Result<Interval, RdmError> {
        let vars = self.vars();
        let k = vars.len();
        if k > cap {
            return Err(RdmError::TooManyRdmVars { count: k, cap });
        }
        if k == 0 {
            return Ok(Interval::point(self.constant));
        }
        let pos: BTreeMap<RdmVarId, usize> =
            vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut grad = vec![0.0; k];
        let mut hess = vec![vec![0.0; k]; k];
        for (id, c) in &self.linear {
            grad[pos[id]] = *c;
        }
        for ((a, b), c) in &self.quadratic {
            let (i, j) = (pos[a], pos[b]);
            if i == j {
                hess[i][i] += 2.0 * c;
            } else {
                hess[i][j] += c;
                hess[j][i] += c;
            }
        }
        let quad = DenseQuadratic {
            constant: self.constant,
            grad,
            hess,
        };
        let lo = quad.extremum(1.0);
        let hi = -quad.extremum(-1.0);
        Ok(Interval::hull_of(lo, hi))
    }
}

/// `0.5 x'Hx + g'x + c` in dense form, for span enumeration.
struct DenseQuadratic {
    constant: f64,
    grad: Vec<f64>,
    hess: Vec<Vec<f64>>,
}

impl DenseQuadratic {
    fn value(&self, x: &[f64], sign: f64) -> f64 {
        let k = x.len();
        let mut v = self.constant;
        for i in 0..k {
            v += self.grad[i] * x[i];
            let mut hx = 0.0;
            for j in 0..k {
                hx += self.hess[i][j] * x[j];
            }
            v += 0.5 * x[i] * hx;
        }
        sign * v
    }

    /// Minimum of `sign * q` over the unit box.
    fn extremum(&self, sign: f64) -> f64 {
        let k = self.grad.len();
        let interior: Vec<usize> = (0..k).filter(|&i| sign * self.hess[i][i] > 0.0).collect();
        let boundary: Vec<usize> = (0..k).filter(|&i| sign * self.hess[i][i] <= 0.0).collect();

        let mut best = f64::INFINITY;
        let mut x = vec![0.0; k];
        let n_vertex = 1usize << boundary.len();
        let n_faces = 3usize.pow(interior.len() as u32);
        for vmask in 0..n_vertex {
            for (bit, &i) in boundary.iter().enumerate() {
                x[i] = ((vmask >> bit) & 1) as f64;
            }
            for mut face in 0..n_faces {
                let mut free = Vec::new();
                for &i in &interior {
                    match face % 3 {
                        0 => x[i] = 0.0,
                        1 => x[i] = 1.0,
                        _ => free.push(i),
                    }
                    face /= 3;
                }
                if free.is_empty() {
                    best = best.min(self.value(&x, sign));
                } else if self.solve_stationary(&free, &mut x) {
                    best = best.min(self.value(&x, sign));
                }
            }
        }
        best
    }

    /// Solves `H_ff x_f = -(g_f + H_fF x_F)` in place; false when singular or
    /// the stationary point leaves the face.
    fn solve_stationary(&self, free: &[usize], x: &mut [f64]) -> bool {
        let n = free.len();
        let mut m = vec![vec![0.0; n + 1]; n];
        for (r, &i) in free.iter().enumerate() {
            let mut rhs = -self.grad[i];
            for j in 0..x.len() {
                if !free.contains(&j) {
                    rhs -= self.hess[i][j] * x[j];
                }
            }
            for (c, &j) in free.iter().enumerate() {
                m[r][c] = self.hess[i][j];
            }
            m[r][n] = rhs;
        }
        let scale = m
            .iter()
            .flat_map(|row| row[..n].iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .unwrap();
            if m[piv][col].abs() <= 1e-12 * scale {
                return false;
            }
            m.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    if f != 0.0 {
                        for c in col..=n {
                            m[r][c] -= f * m[col][c];
                        }
                    }
                }
            }
        }
        for (r, &i) in free.iter().enumerate() {
            let v = m[r][n] / m[r][r];
            if !(0.0..=1.0).contains(&v) {
                return false;
            }
            x[i] = v;
        }
        true
    }
}

impl Add for &RdmExpr {
    type Output = RdmExpr;

    fn add(self, rhs: &RdmExpr) -> RdmExpr {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &RdmExpr {
    type Output = RdmExpr;

    fn sub(self, rhs: &RdmExpr) -> RdmExpr {
        self.combine(rhs, -1.0)
    }
}

impl Add for RdmExpr {
    type Output = RdmExpr;

    fn add(self, rhs: RdmExpr) -> RdmExpr {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for RdmExpr {
    type Output = RdmExpr;

    fn sub(self, rhs: RdmExpr) -> RdmExpr {
        self.combine(&rhs, -1.0)
    }
}

impl Neg for RdmExpr {
    type Output = RdmExpr;

    fn neg(self) -> RdmExpr {
        self.scale(-1.0)
    }
}

pub fn rdm_add(a: &RdmExpr, b: &RdmExpr) -> RdmExpr {
    a + b
}

pub fn rdm_sub(a: &RdmExpr, b: &RdmExpr) -> RdmExpr {
    a - b
}

pub fn rdm_mul(a: &RdmExpr, b: &RdmExpr) -> Result<RdmExpr, RdmError> {
    a.try_mul(b)
}

pub fn rdm_span(e: &RdmExpr) -> Result<Interval, RdmError> {
    e.span()
}

impl fmt::Display for RdmExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (id, c) in &self.linear {
            write!(f, " + {c}*{id}")?;
        }
        for ((a, b), c) in &self.quadratic {
            if a == b {
                write!(f, " + {c}*{a}^2")?;
            } else {
                write!(f, " + {c}*{a}*{b}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A1: RdmVarId = RdmVarId(1);
    const A2: RdmVarId = RdmVarId(2);
    const A3: RdmVarId = RdmVarId(3);

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn lift_examples() {
        let mut reg = RdmRegistry::new();
        let e = reg.lift(iv(1.0, 2.0), A1).unwrap();
        assert_eq!(e, RdmExpr::affine(1.0, A1, 1.0));
        let e = reg.lift(iv(5.0, 5.0), A2).unwrap();
        assert_eq!(e, RdmExpr::constant(5.0));
        assert_eq!(e.degree(), 0);
        let e = reg.lift(iv(-2.0, 3.0), A3).unwrap();
        assert_eq!(e.constant_term(), -2.0);
        assert_eq!(e.linear_coeff(A3), 5.0);
    }

    #[test]
    fn rebinding_is_rejected() {
        let mut reg = RdmRegistry::new();
        reg.lift(iv(1.0, 2.0), A1).unwrap();
        assert!(reg.lift(iv(1.0, 2.0), A1).is_ok());
        let err = reg.lift(iv(1.0, 3.0), A1).unwrap_err();
        assert!(matches!(err, RdmError::RdmVarRebound { id: 1, .. }));
    }

    #[test]
    fn add_sub_examples() {
        let x = RdmExpr::affine(1.0, A1, 1.0);
        assert_eq!(rdm_sub(&x, &x), RdmExpr::zero());
        let y = RdmExpr::affine(3.0, A2, 1.0);
        let s = rdm_add(&x, &y);
        assert_eq!(s.constant_term(), 4.0);
        assert_eq!(s.linear_coeff(A1), 1.0);
        assert_eq!(s.linear_coeff(A2), 1.0);
        let d = RdmExpr::var(A1).scale(2.0) - RdmExpr::var(A1);
        assert_eq!(d, RdmExpr::var(A1));
    }

    #[test]
    fn mul_examples() {
        let x = RdmExpr::affine(1.0, A1, 1.0);
        let sq = rdm_mul(&x, &x).unwrap();
        assert_eq!(sq.constant_term(), 1.0);
        assert_eq!(sq.linear_coeff(A1), 2.0);
        assert_eq!(sq.quadratic_coeff(A1, A1), 1.0);
        assert_eq!(rdm_mul(&x, &RdmExpr::zero()).unwrap(), RdmExpr::zero());

        let y = RdmExpr::affine(-1.0, A1, 1.0);
        let p = rdm_mul(&x, &y).unwrap();
        assert_eq!(p.constant_term(), -1.0);
        assert_eq!(p.linear_coeff(A1), 0.0);
        assert_eq!(p.quadratic_coeff(A1, A1), 1.0);
        assert_eq!(p.span().unwrap(), iv(-1.0, 0.0));
    }

    #[test]
    fn degree_overflow() {
        let x = RdmExpr::var(A1);
        let sq = rdm_mul(&x, &x).unwrap();
        assert!(matches!(
            rdm_mul(&sq, &x),
            Err(RdmError::DegreeOverflow { degree: 3 })
        ));
    }

    #[test]
    fn span_examples() {
        // x - x^2 with x = 1 + a1
        let x = RdmExpr::affine(1.0, A1, 1.0);
        let f1 = &x - &rdm_mul(&x, &x).unwrap();
        assert_eq!(f1.span().unwrap(), iv(-2.0, 0.0));
        assert_eq!(RdmExpr::constant(5.0).span().unwrap(), iv(5.0, 5.0));
        let e = rdm_mul(&RdmExpr::var(A1), &RdmExpr::var(A2)).unwrap() - RdmExpr::var(A1);
        assert_eq!(e.span().unwrap(), iv(-1.0, 0.0));
    }

    #[test]
    fn span_finds_coupled_interior_minimum() {
        // a1^2 + a2^2 - a1*a2 - 0.5 a1 - 0.5 a2 has its minimum at (0.5, 0.5), maximum 0.5 at (1, 0)
        let a = RdmExpr::var(A1);
        let b = RdmExpr::var(A2);
        let e = rdm_mul(&a, &a).unwrap() + rdm_mul(&b, &b).unwrap()
            - rdm_mul(&a, &b).unwrap()
            - a.scale(0.5)
            - b.scale(0.5);
        let s = e.span().unwrap();
        assert!((s.lo() - (-0.25)).abs() < 1e-15, "{s:?}");
        assert!((s.hi() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn span_cap() {
        let mut e = RdmExpr::zero();
        for i in 0..17 {
            e = e + RdmExpr::var(RdmVarId(i));
        }
        assert!(matches!(
            e.span(),
            Err(RdmError::TooManyRdmVars { count: 17, cap: 16 })
        ));
        assert_eq!(e.span_with_cap(17).unwrap(), iv(0.0, 17.0));
    }

    #[test]
    fn partial_derivatives() {
        let a = RdmExpr::var(A1);
        let b = RdmExpr::var(A2);
        let e = rdm_mul(&a, &a).unwrap().scale(3.0) + rdm_mul(&a, &b).unwrap() + a.scale(2.0);
        let d = e.partial(A1);
        assert_eq!(d.constant_term(), 2.0);
        assert_eq!(d.linear_coeff(A1), 6.0);
        assert_eq!(d.linear_coeff(A2), 1.0);
    }

    fn expr_strategy(nvars: u32) -> impl Strategy<Value = RdmExpr> {
        let n = nvars as usize;
        (
            -2.0f64..2.0,
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-2.0f64..2.0, n * (n + 1) / 2),
            prop::collection::vec(any::<bool>(), n * (n + 1) / 2),
        )
            .prop_map(move |(c, lin, quad, keep)| {
                let mut e = RdmExpr::constant(c);
                for (i, a) in lin.iter().enumerate() {
                    e = e + RdmExpr::var(RdmVarId(i as u32)).scale(*a);
                }
                let mut k = 0;
                for i in 0..nvars {
                    for j in i..nvars {
                        if keep[k] {
                            let t = rdm_mul(&RdmExpr::var(RdmVarId(i)), &RdmExpr::var(RdmVarId(j)))
                                .unwrap();
                            e = e + t.scale(quad[k]);
                        }
                        k += 1;
                    }
                }
                e
            })
    }

    fn grid_range(e: &RdmExpr, nvars: u32, steps: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let total = (steps + 1).pow(nvars);
        let mut idx = vec![0usize; nvars as usize];
        for _ in 0..total {
            let v = e.eval(|id| idx[id.0 as usize] as f64 / steps as f64);
            lo = lo.min(v);
            hi = hi.max(v);
            for d in idx.iter_mut() {
                *d += 1;
                if *d <= steps {
                    break;
                }
                *d = 0;
            }
        }
        (lo, hi)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn cancellation(e in expr_strategy(4)) {
            prop_assert_eq!(rdm_sub(&e, &e).span().unwrap(), Interval::ZERO);
        }

        #[test]
        fn span_contains_grid_and_is_tight(e in expr_strategy(3)) {
            let s = e.span().unwrap();
            let (lo, hi) = grid_range(&e, 3, 20);
            prop_assert!(s.lo() <= lo + 1e-12 && hi <= s.hi() + 1e-12);
            // grid spacing 0.05: deviation bounded by gradient * h + curvature * h^2
            let bound: f64 = e.linear_terms().map(|(_, c)| c.abs()).sum::<f64>()
                + 2.0 * e.quadratic_terms().map(|(_, _, c)| c.abs()).sum::<f64>();
            prop_assert!(lo - s.lo() <= bound * 0.05 + 1e-12);
            prop_assert!(s.hi() - hi <= bound * 0.05 + 1e-12);
        }
    }
}
