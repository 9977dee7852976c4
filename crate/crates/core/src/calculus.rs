//! Dirac operators `D = ∂_0 + Σ e_i ∂_i` and `D̄ = ∂_0 − Σ e_i ∂_i`.
//!
//! Exact differentiation acts on [`MultivectorPolynomial`]; central
//! differences act on arbitrary fields through [`FieldHandle`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;

use crate::clifford::{generator_mask, grade, Multivector, Paravector, Signature};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which Dirac operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operator {
    D,
    Dbar,
}

/// Whether the generators multiply from the left (`D f`) or the right (`f D`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Operator {
    fn sign(self) -> i64 {
        match self {
            Self::D => 1,
            Self::Dbar => -1,
        }
    }
}

/// Polynomial in the real coordinates `z_0, …, z_m` with multivector coefficients.
///
/// Monomials are real and commute with every coefficient, so no coefficient
/// side needs to be recorded.
#[derive(Clone, PartialEq)]
pub struct MultivectorPolynomial<T> {
    sig: Signature,
    terms: BTreeMap<Vec<u32>, Multivector<T>>,
}

impl<T: Scalar> MultivectorPolynomial<T> {
    pub fn zero(sig: Signature) -> Self {
        Self { sig, terms: BTreeMap::new() }
    }

    pub fn constant(c: Multivector<T>) -> Self {
        let sig = c.signature();
        Self::monomial(vec![0; sig.paravector_dim()], c).expect("matching exponent length")
    }

    pub fn monomial(exponent: Vec<u32>, coeff: Multivector<T>) -> Result<Self> {
        let sig = coeff.signature();
        if exponent.len() != sig.paravector_dim() {
            return Err(Error::InvalidArgument(format!(
                "exponent needs {} entries, got {}",
                sig.paravector_dim(),
                exponent.len()
            )));
        }
        let mut p = Self::zero(sig);
        p.add_term(exponent, coeff);
        Ok(p)
    }

    /// The coordinate `z_i` as a scalar polynomial.
    pub fn coordinate(sig: Signature, i: usize) -> Self {
        let mut e = vec![0; sig.paravector_dim()];
        e[i] = 1;
        Self::monomial(e, Multivector::one(sig)).expect("matching exponent length")
    }

    /// The identity map `z ↦ z_0 + Σ z_i e_i`.
    pub fn paravector_variable(sig: Signature) -> Self {
        let mut p = Self::zero(sig);
        for i in 0..=sig.generators() {
            p += &Self::coordinate(sig, i).right_mul(&Multivector::generator(sig, i));
        }
        p
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Multivector<T>)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    fn add_term(&mut self, exponent: Vec<u32>, coeff: Multivector<T>) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&exponent) {
            Some(c) => {
                *c += &coeff;
                if c.is_zero() {
                    self.terms.remove(&exponent);
                }
            }
            None => {
                self.terms.insert(exponent, coeff);
            }
        }
    }

    fn map_coeffs(&self, f: impl Fn(&Multivector<T>) -> Multivector<T>) -> Self {
        let mut out = Self::zero(self.sig);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// `a · p`.
    pub fn left_mul(&self, a: &Multivector<T>) -> Self {
        self.map_coeffs(|c| a * c)
    }

    /// `p · a`.
    pub fn right_mul(&self, a: &Multivector<T>) -> Self {
        self.map_coeffs(|c| c * a)
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map_coeffs(|c| c.scale(s))
    }

    pub fn conjugate(&self) -> Self {
        self.map_coeffs(Multivector::conjugate)
    }

    /// Keeps only the blades selected by `keep`.
    pub fn filter_blades(&self, keep: impl Fn(usize) -> bool) -> Self {
        self.map_coeffs(|c| {
            let mut out = c.clone();
            for (mask, x) in out.coeffs_mut().iter_mut().enumerate() {
                if !keep(mask) {
                    *x = T::zero();
                }
            }
            out
        })
    }

    /// The real component `f_A` as a scalar-valued polynomial.
    pub fn component(&self, mask: usize) -> Self {
        self.map_coeffs(|c| Multivector::scalar(self.sig, c.coeff(mask).clone()))
    }

    /// `Sc(f)`.
    pub fn scalar_part(&self) -> Self {
        self.component(0)
    }

    /// `R(f) = f − Sc(f)`.
    pub fn vector_rest(&self) -> Self {
        self.filter_blades(|mask| mask != 0)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.sig.check(&other.sig)?;
        let mut out = Self::zero(self.sig);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    /// `∂f/∂z_i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.sig);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c.scale(&T::from_i64(e[i] as i64)));
        }
        out
    }

    /// `D f`, `D̄ f`, `f D` or `f D̄`.
    pub fn dirac(&self, op: Operator, side: Side) -> Self {
        let mut out = self.partial(0);
        for i in 1..=self.sig.generators() {
            let ei = Multivector::generator(self.sig, i).scale(&T::from_i64(op.sign()));
            let d = self.partial(i);
            out += &match side {
                Side::Left => d.left_mul(&ei),
                Side::Right => d.right_mul(&ei),
            };
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.sig);
        for i in 0..=self.sig.generators() {
            out += &self.partial(i).partial(i);
        }
        out
    }

    /// `z ↦ f(z + b)`, expanded exactly.
    pub fn translated(&self, b: &Paravector<T>) -> Result<Self> {
        self.sig.check(&b.signature())?;
        let one = Multivector::one(self.sig);
        let shifted: Vec<Self> = (0..self.sig.paravector_dim())
            .map(|i| &Self::coordinate(self.sig, i) + &Self::constant(one.scale(b.comp(i))))
            .collect();
        let mut out = Self::zero(self.sig);
        for (e, c) in &self.terms {
            let mut term = Self::constant(c.clone());
            for (i, k) in e.iter().enumerate() {
                for _ in 0..*k {
                    term = term.mul(&shifted[i])?;
                }
            }
            out += &term;
        }
        Ok(out)
    }

    pub fn eval(&self, z: &Paravector<T>) -> Result<Multivector<T>> {
        self.sig.check(&z.signature())?;
        let mut out = Multivector::zero(self.sig);
        for (e, c) in &self.terms {
            let mut mono = T::one();
            for (x, k) in z.comps().iter().zip(e) {
                for _ in 0..*k {
                    mono = mono * x.clone();
                }
            }
            out += &c.scale(&mono);
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> MultivectorPolynomial<f64> {
        MultivectorPolynomial {
            sig: self.sig,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.to_f64())).collect(),
        }
    }
}

impl<T: Scalar> fmt::Debug for MultivectorPolynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

impl<T: Scalar> std::ops::AddAssign<&MultivectorPolynomial<T>> for MultivectorPolynomial<T> {
    fn add_assign(&mut self, rhs: &MultivectorPolynomial<T>) {
        assert_eq!(self.sig, rhs.sig, "signature mismatch");
        for (e, c) in &rhs.terms {
            self.add_term(e.clone(), c.clone());
        }
    }
}

impl<T: Scalar> std::ops::SubAssign<&MultivectorPolynomial<T>> for MultivectorPolynomial<T> {
    fn sub_assign(&mut self, rhs: &MultivectorPolynomial<T>) {
        assert_eq!(self.sig, rhs.sig, "signature mismatch");
        for (e, c) in &rhs.terms {
            self.add_term(e.clone(), -c);
        }
    }
}

impl<T: Scalar> std::ops::Add for &MultivectorPolynomial<T> {
    type Output = MultivectorPolynomial<T>;

    fn add(self, rhs: Self) -> MultivectorPolynomial<T> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<T: Scalar> std::ops::Sub for &MultivectorPolynomial<T> {
    type Output = MultivectorPolynomial<T>;

    fn sub(self, rhs: Self) -> MultivectorPolynomial<T> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<T: Scalar> std::ops::Mul for &MultivectorPolynomial<T> {
    type Output = MultivectorPolynomial<T>;

    fn mul(self, rhs: Self) -> MultivectorPolynomial<T> {
        MultivectorPolynomial::mul(self, rhs).expect("signature mismatch")
    }
}

/// The blade family `{A : i ∉ A, |A| ≡ 0,1 (mod 4)} ∪ {A : i ∈ A, |A| ≡ 2,3 (mod 4)}`
/// indexing the correction sums of the product rules.
pub fn mod4_selector(i: usize, mask: usize) -> bool {
    let contains = mask & generator_mask(i) != 0;
    let r = grade(mask) % 4;
    if contains {
        r == 2 || r == 3
    } else {
        r == 0 || r == 1
    }
}

/// Masks `A` for which `e_i e_A ≠ ē_A e_i`, found by multiplying out.
pub fn commutation_failure_set(sig: Signature, i: usize) -> Vec<usize> {
    let ei = Multivector::<BigRational>::generator(sig, i);
    (0..sig.dim())
        .filter(|&mask| {
            let ea = Multivector::<BigRational>::blade(sig, mask);
            &ei * &ea != &ea.conjugate() * &ei
        })
        .collect()
}

/// The four generalized Leibniz rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProductRule {
    DLeft,
    DRight,
    DbarLeft,
    DbarRight,
}

impl ProductRule {
    pub const ALL: [ProductRule; 4] = [Self::DLeft, Self::DRight, Self::DbarLeft, Self::DbarRight];

    fn operator(self) -> Operator {
        match self {
            Self::DLeft | Self::DRight => Operator::D,
            Self::DbarLeft | Self::DbarRight => Operator::Dbar,
        }
    }

    fn side(self) -> Side {
        match self {
            Self::DLeft | Self::DbarLeft => Side::Left,
            Self::DRight | Self::DbarRight => Side::Right,
        }
    }
}

/// Which right-hand side to subtract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleForm {
    /// `D(fg) = (Df)g + f̄(D̄g) + (f − f̄)∂_0 g + 2 Σ_i Σ_{A∈S_i} f_A ē_A e_i ∂_i g`
    /// and its three analogues; holds identically.
    Consistent,
    /// `D(fg) = (Df)g + f̄(Dg) + 2R(f)∂_0 g + 2 Σ_i Σ_{A∈S_i} f_A ∂_i g` and its
    /// analogues, with scalar correction terms.
    Scalar,
}

/// `lhs − rhs` of the chosen product rule for polynomials `f`, `g`.
pub fn product_rule_residual<T: Scalar>(
    rule: ProductRule,
    form: RuleForm,
    f: &MultivectorPolynomial<T>,
    g: &MultivectorPolynomial<T>,
) -> Result<MultivectorPolynomial<T>> {
    let sig = f.signature();
    sig.check(&g.signature())?;
    let op = rule.operator();
    let side = rule.side();
    let dual = match op {
        Operator::D => Operator::Dbar,
        Operator::Dbar => Operator::D,
    };
    let two = T::from_i64(2);
    let sign = T::from_i64(op.sign());
    let lhs = f.mul(g)?.dirac(op, side);

    let mut rhs = match (form, side) {
        (RuleForm::Consistent, Side::Left) => {
            let mut r = f.dirac(op, side).mul(g)?;
            r += &f.conjugate().mul(&g.dirac(dual, side))?;
            r += &(f - &f.conjugate()).mul(&g.partial(0))?;
            r
        }
        (RuleForm::Consistent, Side::Right) => {
            let mut r = f.mul(&g.dirac(op, side))?;
            r += &f.dirac(dual, side).mul(&g.conjugate())?;
            r += &f.partial(0).mul(&(g - &g.conjugate()))?;
            r
        }
        (RuleForm::Scalar, Side::Left) => {
            let mut r = f.dirac(op, side).mul(g)?;
            r += &f.conjugate().mul(&g.dirac(op, side))?;
            r += &f.vector_rest().mul(&g.partial(0))?.scale(&two);
            r
        }
        (RuleForm::Scalar, Side::Right) => {
            let mut r = f.dirac(op, side).mul(&g.conjugate())?;
            r += &f.mul(&g.dirac(op, side))?;
            r += &f.partial(0).mul(&g.vector_rest())?.scale(&two);
            r
        }
    };

    let factor = two * sign;
    for i in 1..=sig.generators() {
        let ei = Multivector::generator(sig, i);
        let term = match (form, side) {
            (RuleForm::Consistent, Side::Left) => {
                let sel = f.filter_blades(|a| mod4_selector(i, a)).conjugate();
                sel.right_mul(&ei).mul(&g.partial(i))?
            }
            (RuleForm::Consistent, Side::Right) => {
                let sel = g.filter_blades(|a| mod4_selector(i, a)).conjugate();
                f.partial(i).right_mul(&ei).mul(&sel)?
            }
            (RuleForm::Scalar, Side::Left) => {
                let mut acc = MultivectorPolynomial::zero(sig);
                for mask in (0..sig.dim()).filter(|&a| mod4_selector(i, a)) {
                    acc += &f.component(mask).mul(&g.partial(i))?;
                }
                acc
            }
            (RuleForm::Scalar, Side::Right) => {
                let mut acc = MultivectorPolynomial::zero(sig);
                for mask in (0..sig.dim()).filter(|&a| mod4_selector(i, a)) {
                    acc += &g.component(mask).mul(&f.partial(i))?;
                }
                acc
            }
        };
        rhs += &term.scale(&factor);
    }
    Ok(&lhs - &rhs)
}

/// Central-difference step for the finite-difference operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdScheme {
    h: f64,
}

impl FdScheme {
    pub const MIN_STEP: f64 = 1e-6;
    pub const MAX_STEP: f64 = 1e-2;

    pub fn new(h: f64) -> Result<Self> {
        if !(Self::MIN_STEP..=Self::MAX_STEP).contains(&h) {
            return Err(Error::StepOutOfRange { h });
        }
        Ok(Self { h })
    }

    /// Step for first derivatives.
    pub fn first() -> Self {
        Self { h: 1e-4 }
    }

    /// Step for second derivatives.
    pub fn second() -> Self {
        Self { h: 1e-3 }
    }

    pub fn step(&self) -> f64 {
        self.h
    }
}

type Evaluator = dyn Fn(&Paravector<f64>) -> Result<Multivector<f64>> + Send + Sync;
type Guard = dyn Fn(&Paravector<f64>) -> bool + Send + Sync;

/// A multivector field on a guarded region of `R^{m+1}`.
#[derive(Clone)]
pub struct FieldHandle {
    sig: Signature,
    eval: Arc<Evaluator>,
    guard: Arc<Guard>,
}

impl fmt::Debug for FieldHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldHandle").field("sig", &self.sig).finish_non_exhaustive()
    }
}

impl FieldHandle {
    pub fn new(
        sig: Signature,
        eval: impl Fn(&Paravector<f64>) -> Result<Multivector<f64>> + Send + Sync + 'static,
        guard: impl Fn(&Paravector<f64>) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self { sig, eval: Arc::new(eval), guard: Arc::new(guard) }
    }

    /// A polynomial field, defined everywhere.
    pub fn from_polynomial<T: Scalar>(p: &MultivectorPolynomial<T>) -> Self {
        let p = p.to_f64();
        Self::new(p.signature(), move |z| p.eval(z), |_| true)
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn admits(&self, z: &Paravector<f64>) -> bool {
        (self.guard)(z)
    }

    pub fn eval(&self, z: &Paravector<f64>) -> Result<Multivector<f64>> {
        self.sig.check(&z.signature())?;
        if !(self.guard)(z) {
            return Err(Error::OutsideDomain { point: z.comps().to_vec() });
        }
        (self.eval)(z)
    }

    fn shifted(z: &Paravector<f64>, i: usize, t: f64) -> Paravector<f64> {
        let mut w = z.clone();
        w.comps_mut()[i] += t;
        w
    }

    pub fn partial(&self, z: &Paravector<f64>, i: usize, scheme: FdScheme) -> Result<Multivector<f64>> {
        let h = scheme.step();
        let plus = self.eval(&Self::shifted(z, i, h))?;
        let minus = self.eval(&Self::shifted(z, i, -h))?;
        Ok((&plus - &minus).scale(&(0.5 / h)))
    }

    pub fn dirac(&self, z: &Paravector<f64>, op: Operator, side: Side, scheme: FdScheme) -> Result<Multivector<f64>> {
        let mut out = self.partial(z, 0, scheme)?;
        for i in 1..=self.sig.generators() {
            let ei = Multivector::generator(self.sig, i).scale(&(op.sign() as f64));
            let d = self.partial(z, i, scheme)?;
            out += &match side {
                Side::Left => &ei * &d,
                Side::Right => &d * &ei,
            };
        }
        Ok(out)
    }

    pub fn laplacian(&self, z: &Paravector<f64>, scheme: FdScheme) -> Result<Multivector<f64>> {
        let h = scheme.step();
        let center = self.eval(z)?;
        let mut out = Multivector::zero(self.sig);
        for i in 0..=self.sig.generators() {
            let plus = self.eval(&Self::shifted(z, i, h))?;
            let minus = self.eval(&Self::shifted(z, i, -h))?;
            out += &(&(&plus + &minus) - &center.scale(&2.0)).scale(&(1.0 / (h * h)));
        }
        Ok(out)
    }

    /// The field `z ↦ (op f)(z)` evaluated by central differences.
    pub fn dirac_field(&self, op: Operator, side: Side, scheme: FdScheme) -> FieldHandle {
        let inner = self.clone();
        let guard = self.guard.clone();
        let h = scheme.step();
        let sig = self.sig;
        FieldHandle {
            sig,
            eval: Arc::new(move |z| inner.dirac(z, op, side, scheme)),
            guard: Arc::new(move |z| {
                (0..=sig.generators()).all(|i| guard(&Self::shifted(z, i, h)) && guard(&Self::shifted(z, i, -h)))
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    type P = MultivectorPolynomial<BigRational>;

    fn sig(m: usize) -> Signature {
        Signature::new(m).unwrap()
    }

    fn fueter(s: Signature, i: usize) -> P {
        &P::coordinate(s, i) - &P::coordinate(s, 0).right_mul(&Multivector::generator(s, i))
    }

    #[test]
    fn fueter_variable_derivatives() {
        let s = sig(2);
        let z1 = fueter(s, 1);
        assert!(z1.dirac(Operator::D, Side::Left).is_zero());
        let expected = P::constant(Multivector::generator(s, 1).scale(&ratio(-2, 1)));
        assert_eq!(z1.dirac(Operator::Dbar, Side::Left), expected);
        assert!(P::constant(Multivector::one(s)).dirac(Operator::D, Side::Left).is_zero());
    }

    #[test]
    fn laplacian_of_norm_squared() {
        for m in 1..=3 {
            let s = sig(m);
            let mut r2 = P::zero(s);
            for i in 0..=m {
                r2 += &P::coordinate(s, i).mul(&P::coordinate(s, i)).unwrap();
            }
            let expected = P::constant(Multivector::scalar(s, ratio(2 * (m as i64 + 1), 1)));
            assert_eq!(r2.laplacian(), expected);
        }
    }

    #[test]
    fn selector_examples() {
        assert!(mod4_selector(1, 0b00));
        assert!(!mod4_selector(1, 0b01));
    }

    #[test]
    fn selector_is_where_commutation_holds() {
        for m in 1..=4 {
            let s = sig(m);
            for i in 1..=m {
                let fails = commutation_failure_set(s, i);
                for mask in 0..s.dim() {
                    assert_eq!(mod4_selector(i, mask), !fails.contains(&mask), "m={m} i={i} A={mask:b}");
                }
            }
        }
    }

    #[test]
    fn consistent_rule_on_worked_example() {
        let s = sig(2);
        let f = P::coordinate(s, 0).right_mul(&Multivector::generator(s, 1));
        let g = P::coordinate(s, 1).right_mul(&Multivector::generator(s, 2));
        let r = product_rule_residual(ProductRule::DLeft, RuleForm::Consistent, &f, &g).unwrap();
        assert!(r.is_zero(), "{r:?}");
        let printed = product_rule_residual(ProductRule::DLeft, RuleForm::Scalar, &f, &g).unwrap();
        let expected = P::coordinate(s, 0).right_mul(&Multivector::generator(s, 2).scale(&ratio(-2, 1)));
        assert_eq!(printed, expected);
    }

    #[test]
    fn fd_partial_of_polynomial() {
        let s = sig(2);
        let p = fueter(s, 1).mul(&fueter(s, 2)).unwrap().to_f64();
        let field = FieldHandle::from_polynomial(&p);
        let z = Paravector::from_slice(&[0.3, -0.2, 0.5]).unwrap();
        let fd = field.dirac(&z, Operator::Dbar, Side::Left, FdScheme::first()).unwrap();
        let exact = p.dirac(Operator::Dbar, Side::Left).eval(&z).unwrap();
        assert!((&fd - &exact).norm() < 1e-7);
    }

    #[test]
    fn fd_step_range() {
        assert!(FdScheme::new(1e-7).is_err());
        assert!(FdScheme::new(0.1).is_err());
        assert!(FdScheme::new(1e-3).is_ok());
    }

    #[test]
    fn guard_is_enforced() {
        let s = sig(1);
        let field = FieldHandle::new(s, move |_| Ok(Multivector::one(s)), |z| z.norm() < 1.0);
        let z = Paravector::from_slice(&[0.99995, 0.0]).unwrap();
        assert!(matches!(field.partial(&z, 0, FdScheme::first()), Err(Error::OutsideDomain { .. })));
    }
}
