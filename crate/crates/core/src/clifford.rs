//! The real Clifford algebra Cl(0,m) with `e_i e_j + e_j e_i = -2 δ_ij`.
//!
//! Multivectors are stored densely: `2^m` coefficients indexed by a blade
//! bitmask, bit `i-1` standing for generator `e_i`. The blade `e_A` for
//! `A = {l_1 < … < l_r}` is the ordered product `e_{l_1} ⋯ e_{l_r}`, so the
//! mask order is the canonical increasing order.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};

/// Largest supported number of generators.
pub const MAX_GENERATORS: usize = 6;

/// Relative off-subspace mass tolerated when a float multivector is read as a paravector.
pub const PARAVECTOR_TOL: f64 = 1e-10;

/// Number of generators `m` of `Cl(0,m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    m: usize,
}

impl Signature {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_GENERATORS {
            return Err(Error::UnsupportedSignature { m, max: MAX_GENERATORS });
        }
        Ok(Self { m })
    }

    #[inline]
    pub fn generators(&self) -> usize {
        self.m
    }

    /// Algebra dimension `2^m`.
    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.m
    }

    /// Dimension `m+1` of the paravector space.
    #[inline]
    pub fn paravector_dim(&self) -> usize {
        self.m + 1
    }

    pub fn check(&self, other: &Signature) -> Result<()> {
        if self.m != other.m {
            return Err(Error::SignatureMismatch { left: self.m, right: other.m });
        }
        Ok(())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cl(0,{})", self.m)
    }
}

/// Bitmask of the generator `e_i`, `i ≥ 1`.
#[inline]
pub fn generator_mask(i: usize) -> usize {
    debug_assert!(i >= 1);
    1 << (i - 1)
}

#[inline]
pub fn grade(mask: usize) -> u32 {
    mask.count_ones()
}

/// Whether `e_a e_b = -e_{a xor b}`.
///
/// Counts the transpositions needed to sort the concatenated generator list,
/// plus one sign for every generator squared to `-1`.
#[inline]
pub fn blade_product_negative(a: usize, b: usize) -> bool {
    let mut swaps = 0u32;
    let mut x = a >> 1;
    while x != 0 {
        swaps += (x & b).count_ones();
        x >>= 1;
    }
    swaps += (a & b).count_ones();
    swaps & 1 == 1
}

/// Sign of `ē_A` relative to `e_A`: negative for grades ≡ 1, 2 (mod 4).
#[inline]
pub fn conjugate_negative(mask: usize) -> bool {
    matches!(grade(mask) % 4, 1 | 2)
}

/// Sign of the reversion `ẽ_A`: negative for grades ≡ 2, 3 (mod 4).
#[inline]
pub fn reversion_negative(mask: usize) -> bool {
    matches!(grade(mask) % 4, 2 | 3)
}

/// Dense multivector over a [`Scalar`] field.
#[derive(Clone, PartialEq)]
pub struct Multivector<T> {
    sig: Signature,
    coeffs: Vec<T>,
}

impl<T: Scalar> Multivector<T> {
    pub fn zero(sig: Signature) -> Self {
        Self { sig, coeffs: vec![T::zero(); sig.dim()] }
    }

    pub fn one(sig: Signature) -> Self {
        Self::scalar(sig, T::one())
    }

    pub fn scalar(sig: Signature, value: T) -> Self {
        let mut mv = Self::zero(sig);
        mv.coeffs[0] = value;
        mv
    }

    /// The unit blade `e_A`.
    pub fn blade(sig: Signature, mask: usize) -> Self {
        let mut mv = Self::zero(sig);
        mv.coeffs[mask] = T::one();
        mv
    }

    /// The generator `e_i` (`i ≥ 1`); `i = 0` gives the unit.
    pub fn generator(sig: Signature, i: usize) -> Self {
        if i == 0 {
            Self::one(sig)
        } else {
            Self::blade(sig, generator_mask(i))
        }
    }

    pub fn from_coeffs(sig: Signature, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != sig.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                sig.dim(),
                coeffs.len()
            )));
        }
        Ok(Self { sig, coeffs })
    }

    #[inline]
    pub fn signature(&self) -> Signature {
        self.sig
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    #[inline]
    pub fn coeff(&self, mask: usize) -> &T {
        &self.coeffs[mask]
    }

    pub fn set_coeff(&mut self, mask: usize, value: T) {
        self.coeffs[mask] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn geometric_product(&self, other: &Self) -> Result<Self> {
        self.sig.check(&other.sig)?;
        let mut out = vec![T::zero(); self.sig.dim()];
        geometric_product_into(&self.coeffs, &other.coeffs, &mut out);
        Ok(Self { sig: self.sig, coeffs: out })
    }

    /// Clifford conjugate `ā`, the anti-automorphism with `ē_j = -e_j`.
    pub fn conjugate(&self) -> Self {
        self.map_signed(conjugate_negative)
    }

    /// Reversion `ã`: reverses blade factor order, generators unchanged.
    pub fn reversion(&self) -> Self {
        self.map_signed(reversion_negative)
    }

    fn map_signed(&self, negative: fn(usize) -> bool) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(mask, c)| if negative(mask) { -c.clone() } else { c.clone() })
            .collect();
        Self { sig: self.sig, coeffs }
    }

    /// `Sc(a)`, the coefficient of the unit blade.
    pub fn scalar_part(&self) -> T {
        self.coeffs[0].clone()
    }

    /// `R(a) = a - Sc(a)`.
    pub fn vector_rest(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = T::zero();
        out
    }

    /// Keeps the coefficients of blades of the given grade.
    pub fn grade_part(&self, k: u32) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(mask, c)| if grade(mask) == k { c.clone() } else { T::zero() })
            .collect();
        Self { sig: self.sig, coeffs }
    }

    /// Squared Euclidean norm of the coefficient vector.
    pub fn norm_squared(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc + c.clone() * c.clone())
    }

    /// Coefficient dot product, equal to `Sc(a b̄)`.
    pub fn dot(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        Self { sig: self.sig, coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    /// Squared norm of the part outside `span{1, e_1, …, e_m}`.
    pub fn off_paravector_mass(&self) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(mask, _)| grade(*mask) > 1)
            .fold(T::zero(), |acc, (_, c)| acc + c.clone() * c.clone())
    }

    /// Whether all non-paravector blades vanish within `rel_tol·‖a‖`.
    ///
    /// Exact backends ignore the tolerance.
    pub fn is_paravector(&self, rel_tol: f64) -> bool {
        let off = self.off_paravector_mass();
        if T::EXACT {
            return off.is_zero();
        }
        let total = self.norm_squared().to_f64();
        off.to_f64() <= rel_tol * rel_tol * total.max(f64::MIN_POSITIVE)
    }

    /// Reads the paravector part, failing if other grades carry mass.
    pub fn to_paravector(&self) -> Result<Paravector<T>> {
        self.to_paravector_within(PARAVECTOR_TOL)
    }

    pub fn to_paravector_within(&self, rel_tol: f64) -> Result<Paravector<T>> {
        if !self.is_paravector(rel_tol) {
            let total = self.norm_squared().to_f64().max(f64::MIN_POSITIVE);
            return Err(Error::NotParavector {
                residual: (self.off_paravector_mass().to_f64() / total).sqrt(),
            });
        }
        Ok(self.paravector_part())
    }

    /// Projection onto the paravector subspace.
    pub fn paravector_part(&self) -> Paravector<T> {
        let m = self.sig.generators();
        let mut comps = Vec::with_capacity(m + 1);
        comps.push(self.coeffs[0].clone());
        for i in 1..=m {
            comps.push(self.coeffs[generator_mask(i)].clone());
        }
        Paravector { comps }
    }

    /// Inverse for elements with scalar `a ā`, i.e. products of paravectors.
    pub fn versor_inverse(&self) -> Result<Self> {
        let conj = self.conjugate();
        let n = self.geometric_product(&conj)?;
        let s = n.scalar_part();
        let rest = n.vector_rest().norm_squared();
        let scale = s.clone() * s.clone();
        if !T::negligible(&rest, &scale) {
            return Err(Error::NotInvertible { residual: rest.to_f64().sqrt() });
        }
        if s.is_zero() {
            return Err(Error::NotInvertible { residual: 0.0 });
        }
        Ok(conj.scale(&(T::one() / s)))
    }

    pub fn to_f64(&self) -> Multivector<f64> {
        Multivector { sig: self.sig, coeffs: self.coeffs.iter().map(Scalar::to_f64).collect() }
    }

    pub fn from_f64(mv: &Multivector<f64>) -> Self {
        Self { sig: mv.sig, coeffs: mv.coeffs.iter().map(|c| T::from_f64(*c)).collect() }
    }
}

impl<T: RealScalar> Multivector<T> {
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }
}

/// Dense geometric product on raw coefficient slices of equal length `2^m`.
pub fn geometric_product_into<T: Scalar>(a: &[T], b: &[T], out: &mut [T]) {
    for c in out.iter_mut() {
        *c = T::zero();
    }
    for (ia, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (ib, cb) in b.iter().enumerate() {
            if cb.is_zero() {
                continue;
            }
            let term = ca.clone() * cb.clone();
            if blade_product_negative(ia, ib) {
                out[ia ^ ib] = out[ia ^ ib].clone() - term;
            } else {
                out[ia ^ ib] = out[ia ^ ib].clone() + term;
            }
        }
    }
}

/// Precomputed sign table for fast `f64` products in hot loops.
#[derive(Clone, Debug)]
pub struct ProductTable {
    dim: usize,
    signs: Vec<f64>,
}

impl ProductTable {
    pub fn new(sig: Signature) -> Self {
        let dim = sig.dim();
        let mut signs = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                signs[a * dim + b] = if blade_product_negative(a, b) { -1.0 } else { 1.0 };
            }
        }
        Self { dim, signs }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out += a b`.
    #[inline]
    pub fn mul_add(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for ia in 0..d {
            let ca = a[ia];
            if ca == 0.0 {
                continue;
            }
            let row = &self.signs[ia * d..(ia + 1) * d];
            for ib in 0..d {
                out[ia ^ ib] += row[ib] * ca * b[ib];
            }
        }
    }

    /// `out += a b̄`.
    #[inline]
    pub fn mul_conj_add(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for ia in 0..d {
            let ca = a[ia];
            if ca == 0.0 {
                continue;
            }
            let row = &self.signs[ia * d..(ia + 1) * d];
            for ib in 0..d {
                let cb = if conjugate_negative(ib) { -b[ib] } else { b[ib] };
                out[ia ^ ib] += row[ib] * ca * cb;
            }
        }
    }

    /// `out += ā b`.
    #[inline]
    pub fn conj_mul_add(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for ia in 0..d {
            let ca = if conjugate_negative(ia) { -a[ia] } else { a[ia] };
            if ca == 0.0 {
                continue;
            }
            let row = &self.signs[ia * d..(ia + 1) * d];
            for ib in 0..d {
                out[ia ^ ib] += row[ib] * ca * b[ib];
            }
        }
    }
}

impl<T: Scalar> fmt::Debug for Multivector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multivector[{}](", self.sig)?;
        let mut first = true;
        for (mask, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{:?}", c)?;
            if mask != 0 {
                write!(f, "·e")?;
                for i in 0..self.sig.generators() {
                    if mask & (1 << i) != 0 {
                        write!(f, "{}", i + 1)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<T: Scalar> $trait<&Multivector<T>> for &Multivector<T> {
            type Output = Multivector<T>;

            fn $method(self, rhs: &Multivector<T>) -> Multivector<T> {
                assert_eq!(self.sig, rhs.sig, "signature mismatch");
                let coeffs = self
                    .coeffs
                    .iter()
                    .zip(&rhs.coeffs)
                    .map(|(a, b)| a.clone() $op b.clone())
                    .collect();
                Multivector { sig: self.sig, coeffs }
            }
        }

        impl<T: Scalar> $trait for Multivector<T> {
            type Output = Multivector<T>;

            fn $method(self, rhs: Multivector<T>) -> Multivector<T> {
                (&self).$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);

impl<T: Scalar> AddAssign<&Multivector<T>> for Multivector<T> {
    fn add_assign(&mut self, rhs: &Multivector<T>) {
        assert_eq!(self.sig, rhs.sig, "signature mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a = a.clone() + b.clone();
        }
    }
}

impl<T: Scalar> SubAssign<&Multivector<T>> for Multivector<T> {
    fn sub_assign(&mut self, rhs: &Multivector<T>) {
        assert_eq!(self.sig, rhs.sig, "signature mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a = a.clone() - b.clone();
        }
    }
}

impl<T: Scalar> Neg for &Multivector<T> {
    type Output = Multivector<T>;

    fn neg(self) -> Multivector<T> {
        Multivector { sig: self.sig, coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }
}

impl<T: Scalar> Neg for Multivector<T> {
    type Output = Multivector<T>;

    fn neg(self) -> Multivector<T> {
        -&self
    }
}

/// Geometric product. Panics on signature mismatch; use
/// [`Multivector::geometric_product`] for a fallible version.
impl<T: Scalar> Mul<&Multivector<T>> for &Multivector<T> {
    type Output = Multivector<T>;

    fn mul(self, rhs: &Multivector<T>) -> Multivector<T> {
        self.geometric_product(rhs).expect("signature mismatch")
    }
}

impl<T: Scalar> Mul for Multivector<T> {
    type Output = Multivector<T>;

    fn mul(self, rhs: Multivector<T>) -> Multivector<T> {
        &self * &rhs
    }
}

/// A paravector `z_0 + z_1 e_1 + … + z_m e_m`, i.e. a point of `R^{m+1}`.
#[derive(Clone, PartialEq)]
pub struct Paravector<T> {
    comps: Vec<T>,
}

impl<T: Scalar> Paravector<T> {
    /// Components `z_0, …, z_m`.
    pub fn new(comps: Vec<T>) -> Result<Self> {
        let m = comps.len().saturating_sub(1);
        Signature::new(m)?;
        Ok(Self { comps })
    }

    pub fn zero(sig: Signature) -> Self {
        Self { comps: vec![T::zero(); sig.paravector_dim()] }
    }

    pub fn real(sig: Signature, value: T) -> Self {
        let mut p = Self::zero(sig);
        p.comps[0] = value;
        p
    }

    /// The unit `e_i` (`i = 0` gives `1`).
    pub fn unit(sig: Signature, i: usize) -> Self {
        let mut p = Self::zero(sig);
        p.comps[i] = T::one();
        p
    }

    pub fn signature(&self) -> Signature {
        Signature { m: self.comps.len() - 1 }
    }

    #[inline]
    pub fn comps(&self) -> &[T] {
        &self.comps
    }

    #[inline]
    pub fn comps_mut(&mut self) -> &mut [T] {
        &mut self.comps
    }

    #[inline]
    pub fn comp(&self, i: usize) -> &T {
        &self.comps[i]
    }

    pub fn embed(&self) -> Multivector<T> {
        let sig = self.signature();
        let mut mv = Multivector::zero(sig);
        mv.coeffs[0] = self.comps[0].clone();
        for i in 1..self.comps.len() {
            mv.coeffs[generator_mask(i)] = self.comps[i].clone();
        }
        mv
    }

    pub fn conjugate(&self) -> Self {
        let mut comps = self.comps.clone();
        for c in comps.iter_mut().skip(1) {
            *c = -c.clone();
        }
        Self { comps }
    }

    /// `|z|²`.
    pub fn norm_squared(&self) -> T {
        self.comps.iter().fold(T::zero(), |acc, c| acc + c.clone() * c.clone())
    }

    pub fn dot(&self, other: &Self) -> T {
        self.comps.iter().zip(&other.comps).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    /// `z⁻¹ = z̄ / |z|²`.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm_squared();
        if n.is_zero() {
            return Err(Error::ZeroParavector);
        }
        Ok(self.conjugate().scale(&(T::one() / n)))
    }

    pub fn scale(&self, s: &T) -> Self {
        Self { comps: self.comps.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    pub fn to_f64(&self) -> Paravector<f64> {
        Paravector { comps: self.comps.iter().map(Scalar::to_f64).collect() }
    }

    pub fn from_f64(p: &Paravector<f64>) -> Self {
        Self { comps: p.comps.iter().map(|c| T::from_f64(*c)).collect() }
    }
}

impl<T: RealScalar> Paravector<T> {
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Self) -> T {
        (self - other).norm()
    }
}

impl Paravector<f64> {
    pub fn from_slice(comps: &[f64]) -> Result<Self> {
        Self::new(comps.to_vec())
    }
}

impl<T: Scalar> fmt::Debug for Paravector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Paravector{:?}", self.comps)
    }
}

impl<T: Scalar> Add<&Paravector<T>> for &Paravector<T> {
    type Output = Paravector<T>;

    fn add(self, rhs: &Paravector<T>) -> Paravector<T> {
        assert_eq!(self.comps.len(), rhs.comps.len(), "signature mismatch");
        Paravector { comps: self.comps.iter().zip(&rhs.comps).map(|(a, b)| a.clone() + b.clone()).collect() }
    }
}

impl<T: Scalar> Sub<&Paravector<T>> for &Paravector<T> {
    type Output = Paravector<T>;

    fn sub(self, rhs: &Paravector<T>) -> Paravector<T> {
        assert_eq!(self.comps.len(), rhs.comps.len(), "signature mismatch");
        Paravector { comps: self.comps.iter().zip(&rhs.comps).map(|(a, b)| a.clone() - b.clone()).collect() }
    }
}

impl<T: Scalar> Add for Paravector<T> {
    type Output = Paravector<T>;

    fn add(self, rhs: Paravector<T>) -> Paravector<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for Paravector<T> {
    type Output = Paravector<T>;

    fn sub(self, rhs: Paravector<T>) -> Paravector<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Neg for &Paravector<T> {
    type Output = Paravector<T>;

    fn neg(self) -> Paravector<T> {
        Paravector { comps: self.comps.iter().map(|c| -c.clone()).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn sig(m: usize) -> Signature {
        Signature::new(m).unwrap()
    }

    /// Multiplies generator lists by bubble-sorting, the textbook way.
    fn brute_force_blade_product(a: usize, b: usize, m: usize) -> (usize, i32) {
        let mut word: Vec<usize> = (0..m).filter(|i| a & (1 << i) != 0).collect();
        word.extend((0..m).filter(|i| b & (1 << i) != 0));
        let mut sign = 1;
        let mut changed = true;
        while changed {
            changed = false;
            let mut k = 0;
            while k + 1 < word.len() {
                if word[k] > word[k + 1] {
                    word.swap(k, k + 1);
                    sign = -sign;
                    changed = true;
                } else if word[k] == word[k + 1] {
                    word.drain(k..k + 2);
                    sign = -sign;
                    changed = true;
                    continue;
                }
                k += 1;
            }
        }
        let mask = word.iter().fold(0, |acc, i| acc | (1 << i));
        (mask, sign)
    }

    #[test]
    fn sign_rule_matches_brute_force() {
        for m in 1..=4 {
            for a in 0..(1 << m) {
                for b in 0..(1 << m) {
                    let (mask, sign) = brute_force_blade_product(a, b, m);
                    assert_eq!(mask, a ^ b);
                    assert_eq!(blade_product_negative(a, b), sign < 0, "a={a:b} b={b:b}");
                }
            }
        }
    }

    #[test]
    fn generator_squares_to_minus_one() {
        let s = sig(2);
        let e1 = Multivector::<f64>::generator(s, 1);
        assert_eq!(e1.geometric_product(&e1).unwrap(), Multivector::scalar(s, -1.0));
    }

    #[test]
    fn e1_times_e12_is_minus_e2() {
        let s = sig(2);
        let e1 = Multivector::<BigRational>::generator(s, 1);
        let e12 = Multivector::<BigRational>::blade(s, 0b11);
        let e2 = Multivector::<BigRational>::generator(s, 2);
        assert_eq!(&e1 * &e12, -e2);
    }

    #[test]
    fn unit_is_identity() {
        let s = sig(3);
        let a = Multivector::from_coeffs(s, (0..8).map(|k| ratio(k, 3)).collect()).unwrap();
        assert_eq!(&Multivector::one(s) * &a, a);
        assert_eq!(&a * &Multivector::one(s), a);
    }

    #[test]
    fn mismatched_signatures_are_rejected() {
        let a = Multivector::<f64>::one(sig(1));
        let b = Multivector::<f64>::one(sig(2));
        assert!(matches!(a.geometric_product(&b), Err(Error::SignatureMismatch { .. })));
    }

    #[test]
    fn conjugate_examples() {
        let s = sig(2);
        let e12 = Multivector::<BigRational>::blade(s, 0b11);
        assert_eq!(e12.conjugate(), -e12.clone());
        assert_eq!(Multivector::<BigRational>::one(s).conjugate(), Multivector::one(s));
        let z = Paravector::new(vec![ratio(1, 1), ratio(2, 1), ratio(-3, 1)]).unwrap();
        let expected = Paravector::new(vec![ratio(1, 1), ratio(-2, 1), ratio(3, 1)]).unwrap();
        assert_eq!(z.embed().conjugate(), expected.embed());
    }

    #[test]
    fn conjugate_of_blade_matches_reversed_negated_factors() {
        // ē_A = ē_{l_r} ⋯ ē_{l_1} with ē_j = -e_j, multiplied out explicitly.
        let s = sig(4);
        for mask in 0..s.dim() {
            let mut expected = Multivector::<BigRational>::one(s);
            for i in (1..=4).rev() {
                if mask & generator_mask(i) != 0 {
                    expected = &expected * &(-Multivector::generator(s, i));
                }
            }
            assert_eq!(Multivector::<BigRational>::blade(s, mask).conjugate(), expected);
        }
    }

    #[test]
    fn scalar_part_and_vector_rest() {
        let s = sig(2);
        let a = Multivector::from_coeffs(s, vec![3.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.scalar_part(), 3.0);
        assert_eq!(Multivector::<f64>::generator(s, 1).scalar_part(), 0.0);
        assert!(Multivector::scalar(s, 5.0).vector_rest().is_zero());
        let two_plus_e1 = Multivector::from_coeffs(s, vec![2.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(two_plus_e1.vector_rest(), Multivector::generator(s, 1));
        let e12 = Multivector::<f64>::blade(s, 3);
        assert_eq!(e12.vector_rest(), e12);
        let e1 = Multivector::<f64>::generator(s, 1);
        assert_eq!((&e1 * &e1.conjugate()).scalar_part(), 1.0);
    }

    #[test]
    fn norm_examples() {
        let s = sig(2);
        let v = Multivector::from_coeffs(s, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((v.norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(Multivector::<f64>::zero(s).norm(), 0.0);
    }

    #[test]
    fn paravector_inverse_examples() {
        let one_plus_e1 = Paravector::new(vec![ratio(1, 1), ratio(1, 1)]).unwrap();
        let expected = Paravector::new(vec![ratio(1, 2), ratio(-1, 2)]).unwrap();
        assert_eq!(one_plus_e1.inverse().unwrap(), expected);
        let one = Paravector::new(vec![ratio(1, 1), ratio(0, 1)]).unwrap();
        assert_eq!(one.inverse().unwrap(), one);
        let two = Paravector::new(vec![2.0, 0.0, 0.0]).unwrap();
        assert_eq!(two.inverse().unwrap().comps(), &[0.5, 0.0, 0.0]);
        let zero = Paravector::<f64>::zero(sig(2));
        assert!(matches!(zero.inverse(), Err(Error::ZeroParavector)));
    }

    #[test]
    fn paravector_extraction_respects_tolerance() {
        let s = sig(2);
        let mut a = Paravector::new(vec![1.0, 2.0, 3.0]).unwrap().embed();
        assert!(a.to_paravector().is_ok());
        a.set_coeff(3, 1e-6);
        assert!(matches!(a.to_paravector(), Err(Error::NotParavector { .. })));
        a.set_coeff(3, 1e-14);
        assert!(a.to_paravector().is_ok());
        assert_eq!(a.signature(), s);
    }

    #[test]
    fn product_table_agrees_with_generic_product() {
        let s = sig(3);
        let table = ProductTable::new(s);
        let a: Vec<f64> = (0..8).map(|k| (k as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..8).map(|k| (k as f64 * 1.3).cos()).collect();
        let ma = Multivector::from_coeffs(s, a.clone()).unwrap();
        let mb = Multivector::from_coeffs(s, b.clone()).unwrap();
        let mut out = vec![0.0; 8];
        table.mul_add(&a, &b, &mut out);
        let expected = &ma * &mb;
        for (x, y) in out.iter().zip(expected.coeffs()) {
            assert!((x - y).abs() < 1e-15);
        }
        let mut out = vec![0.0; 8];
        table.mul_conj_add(&a, &b, &mut out);
        let expected = &ma * &mb.conjugate();
        for (x, y) in out.iter().zip(expected.coeffs()) {
            assert!((x - y).abs() < 1e-15);
        }
        let mut out = vec![0.0; 8];
        table.conj_mul_add(&a, &b, &mut out);
        let expected = &ma.conjugate() * &mb;
        for (x, y) in out.iter().zip(expected.coeffs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
