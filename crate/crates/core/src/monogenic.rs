//! Left-monogenic families: Fueter polynomials, the Cauchy kernel and the
//! boundary test functions built from it.

use std::collections::HashMap;

use crate::calculus::{FieldHandle, MultivectorPolynomial};
use crate::clifford::{blade_product_negative, generator_mask, Multivector, Paravector, Signature};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The Fueter variable `z_i − z_0 e_i` (`i ≥ 1`).
pub fn fueter_variable<T: Scalar>(sig: Signature, i: usize) -> MultivectorPolynomial<T> {
    let zi = MultivectorPolynomial::coordinate(sig, i);
    let z0 = MultivectorPolynomial::coordinate(sig, 0).right_mul(&Multivector::generator(sig, i));
    &zi - &z0
}

/// `z_i − z_0 e_i − (w_i − w_0 e_i)`, the Fueter variable vanishing at `w`.
pub fn shifted_fueter_variable<T: Scalar>(i: usize, w: &Paravector<T>) -> MultivectorPolynomial<T> {
    let sig = w.signature();
    let mut at_w = Multivector::scalar(sig, w.comp(i).clone());
    at_w -= &Multivector::generator(sig, i).scale(w.comp(0));
    &fueter_variable(sig, i) - &MultivectorPolynomial::constant(at_w)
}

/// Multi-index `α = (α_1, …, α_m)` of a Fueter polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FueterIndex {
    counts: Vec<u32>,
}

impl FueterIndex {
    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    /// From a list of variable indices in `1..=m`: `[1, 1]` names `𝔷_1²`.
    pub fn from_list(sig: Signature, list: &[usize]) -> Result<Self> {
        let m = sig.generators();
        let mut counts = vec![0; m];
        for &i in list {
            if i == 0 || i > m {
                return Err(Error::InvalidArgument(format!("Fueter index {i} outside 1..={m}")));
            }
            counts[i - 1] += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn degree(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Variable indices in non-decreasing order.
    pub fn as_list(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, c) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat_n(k + 1, *c as usize));
        }
        out
    }

    /// `α − ε_i`, if `α_i > 0`.
    pub fn lowered(&self, i: usize) -> Option<Self> {
        if self.counts[i - 1] == 0 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[i - 1] -= 1;
        Some(Self { counts })
    }
}

/// All indices with `|α| ≤ degree`: by degree, then lexicographically by index list.
pub fn fueter_indices(sig: Signature, degree: u32) -> Vec<FueterIndex> {
    let m = sig.generators();
    let mut out = Vec::new();
    for k in 0..=degree {
        let mut lists: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..k {
            let mut next = Vec::new();
            for l in &lists {
                let start = l.last().copied().unwrap_or(1);
                for i in start..=m {
                    let mut l2 = l.clone();
                    l2.push(i);
                    next.push(l2);
                }
            }
            lists = next;
        }
        for l in lists {
            out.push(FueterIndex::from_list(sig, &l).expect("indices in range"));
        }
    }
    out
}

/// `V_α`, built by the recursion `V_α = Σ_i (α_i/|α|) V_{α−ε_i} 𝔷_i`.
pub fn fueter_polynomial<T: Scalar>(sig: Signature, alpha: &FueterIndex) -> MultivectorPolynomial<T> {
    let mut memo: HashMap<FueterIndex, MultivectorPolynomial<T>> = HashMap::new();
    fueter_recursive(sig, alpha, &mut memo)
}

fn fueter_recursive<T: Scalar>(
    sig: Signature,
    alpha: &FueterIndex,
    memo: &mut HashMap<FueterIndex, MultivectorPolynomial<T>>,
) -> MultivectorPolynomial<T> {
    if let Some(p) = memo.get(alpha) {
        return p.clone();
    }
    let k = alpha.degree();
    let out = if k == 0 {
        MultivectorPolynomial::constant(Multivector::one(sig))
    } else {
        let mut acc = MultivectorPolynomial::zero(sig);
        for i in 1..=sig.generators() {
            if let Some(lower) = alpha.lowered(i) {
                let prev = fueter_recursive(sig, &lower, memo);
                let weight = T::from_i64(alpha.counts()[i - 1] as i64) / T::from_i64(k as i64);
                acc += &(&prev * &fueter_variable(sig, i)).scale(&weight);
            }
        }
        acc
    };
    memo.insert(alpha.clone(), out.clone());
    out
}

/// `V_α` as `(1/|α|!) Σ_σ 𝔷_{σ(1)} ⋯ 𝔷_{σ(k)}` over all orderings of the index list.
pub fn fueter_polynomial_by_permutations<T: Scalar>(sig: Signature, alpha: &FueterIndex) -> MultivectorPolynomial<T> {
    let list = alpha.as_list();
    let k = list.len();
    let mut acc = MultivectorPolynomial::zero(sig);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut count: i64 = 0;
    loop {
        let mut prod = MultivectorPolynomial::constant(Multivector::one(sig));
        for &p in &perm {
            prod = &prod * &fueter_variable(sig, list[p]);
        }
        acc += &prod;
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    acc.scale(&(T::one() / T::from_i64(count)))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// One real generator `V_α e_A` of the truncated Hardy space.
#[derive(Clone, Debug)]
pub struct BasisElement<T: Scalar> {
    pub alpha: FueterIndex,
    pub blade: usize,
    pub poly: MultivectorPolynomial<T>,
}

/// `V_α e_A` for `|α| ≤ degree` and every blade `A`, ordered by degree, then
/// `α`, then blade.
pub fn basis_up_to_degree<T: Scalar>(sig: Signature, degree: u32) -> Vec<BasisElement<T>> {
    let mut memo = HashMap::new();
    let mut out = Vec::new();
    for alpha in fueter_indices(sig, degree) {
        let v = fueter_recursive::<T>(sig, &alpha, &mut memo);
        for blade in 0..sig.dim() {
            out.push(BasisElement { alpha: alpha.clone(), blade, poly: v.right_mul(&Multivector::blade(sig, blade)) });
        }
    }
    out
}

/// Fast `f64` evaluation of all `V_α` and `∂_0 V_α` up to a degree.
#[derive(Clone, Debug)]
pub struct FueterTable {
    sig: Signature,
    indices: Vec<FueterIndex>,
    /// For each index, `(i, position of α−ε_i, α_i/|α|)`.
    parents: Vec<Vec<(usize, usize, f64)>>,
    /// Right multiplication by `e_i`: target blade and sign for each source blade.
    right_gen: Vec<Vec<(usize, f64)>>,
}

/// Values and `∂_0` derivatives from [`FueterTable::eval`], flattened as `index * 2^m + blade`.
#[derive(Clone, Debug)]
pub struct FueterValues {
    pub values: Vec<f64>,
    pub d0: Vec<f64>,
}

impl FueterTable {
    pub fn new(sig: Signature, degree: u32) -> Self {
        let indices = fueter_indices(sig, degree);
        let position: HashMap<&FueterIndex, usize> = indices.iter().enumerate().map(|(k, a)| (a, k)).collect();
        let parents = indices
            .iter()
            .map(|alpha| {
                let k = alpha.degree() as f64;
                (1..=sig.generators())
                    .filter_map(|i| {
                        alpha.lowered(i).map(|lower| (i, position[&lower], alpha.counts()[i - 1] as f64 / k))
                    })
                    .collect()
            })
            .collect();
        let right_gen = (0..=sig.generators())
            .map(|i| {
                if i == 0 {
                    return vec![];
                }
                let g = generator_mask(i);
                (0..sig.dim())
                    .map(|a| (a ^ g, if blade_product_negative(a, g) { -1.0 } else { 1.0 }))
                    .collect()
            })
            .collect();
        Self { sig, indices, parents, right_gen }
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn indices(&self) -> &[FueterIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn eval(&self, z: &Paravector<f64>) -> FueterValues {
        let dim = self.sig.dim();
        let n = self.indices.len();
        let mut values = vec![0.0; n * dim];
        let mut d0 = vec![0.0; n * dim];
        values[0] = 1.0;
        let x0 = *z.comp(0);
        for k in 1..n {
            let (head, tail) = values.split_at_mut(k * dim);
            let (dhead, dtail) = d0.split_at_mut(k * dim);
            let v = &mut tail[..dim];
            let dv = &mut dtail[..dim];
            for &(i, p, w) in &self.parents[k] {
                let xi = *z.comp(i);
                let pv = &head[p * dim..(p + 1) * dim];
                let pd = &dhead[p * dim..(p + 1) * dim];
                // V 𝔷_i = x_i V − x_0 V e_i and ∂_0(V 𝔷_i) = (∂_0 V) 𝔷_i − V e_i.
                for (a, &(b, s)) in self.right_gen[i].iter().enumerate() {
                    v[a] += w * xi * pv[a];
                    v[b] -= w * x0 * s * pv[a];
                    dv[a] += w * xi * pd[a];
                    dv[b] -= w * x0 * s * pd[a];
                    dv[b] -= w * s * pv[a];
                }
            }
        }
        FueterValues { values, d0 }
    }
}

/// The Cauchy kernel `𝔎(x) = x̄/|x|^{m+1}` shifted to the pole `w0`.
#[derive(Clone, Debug)]
pub struct CauchyKernel {
    pub pole: Paravector<f64>,
    pub normalization: f64,
}

impl CauchyKernel {
    pub fn new(pole: Paravector<f64>) -> Self {
        Self { pole, normalization: 1.0 }
    }

    fn offset(&self, z: &Paravector<f64>) -> Result<(Paravector<f64>, f64)> {
        let x = z - &self.pole;
        let r2 = x.norm_squared();
        if r2 == 0.0 {
            return Err(Error::Pole { pole: self.pole.comps().to_vec() });
        }
        Ok((x, r2.sqrt()))
    }

    fn m(&self) -> i32 {
        self.pole.signature().generators() as i32
    }

    /// `𝔎(z − w0)`.
    pub fn eval(&self, z: &Paravector<f64>) -> Result<Multivector<f64>> {
        let (x, r) = self.offset(z)?;
        Ok(x.conjugate().embed().scale(&(self.normalization / r.powi(self.m() + 1))))
    }

    /// `D̄𝔎(x) = 2(|x|² − (m+1) x̄ x_0)/|x|^{m+3}`.
    pub fn dbar(&self, z: &Paravector<f64>) -> Result<Multivector<f64>> {
        let (x, r) = self.offset(z)?;
        let m = self.m();
        let sig = x.signature();
        let x0 = *x.comp(0);
        let xbar = x.conjugate().embed();
        let v = &Multivector::scalar(sig, r * r) - &xbar.scale(&((m + 1) as f64 * x0));
        Ok(v.scale(&(2.0 * self.normalization / r.powi(m + 3))))
    }

    /// `D̄²𝔎(x) = 4[−(m+1)(2x_0 + x̄)/|x|^{m+3} + (m+1)(m+3) x̄ x_0²/|x|^{m+5}]`.
    pub fn dbar2(&self, z: &Paravector<f64>) -> Result<Multivector<f64>> {
        let (x, r) = self.offset(z)?;
        let m = self.m() as f64;
        let sig = x.signature();
        let x0 = *x.comp(0);
        let xbar = x.conjugate().embed();
        let first = (&Multivector::scalar(sig, 2.0 * x0) + &xbar).scale(&(-(m + 1.0) / r.powf(m + 3.0)));
        let second = xbar.scale(&((m + 1.0) * (m + 3.0) * x0 * x0 / r.powf(m + 5.0)));
        Ok((&first + &second).scale(&(4.0 * self.normalization)))
    }

    /// `−4(m+1) x̄/|x|^{m+3}`: the value of [`Self::dbar2`] on the hyperplane `x_0 = 0`.
    pub fn dbar2_on_hyperplane(&self, z: &Paravector<f64>) -> Result<Multivector<f64>> {
        let (x, r) = self.offset(z)?;
        let m = self.m() as f64;
        Ok(x.conjugate().embed().scale(&(-4.0 * (m + 1.0) * self.normalization / r.powf(m + 3.0))))
    }

    pub fn field(&self) -> FieldHandle {
        let k = self.clone();
        let pole = self.pole.clone();
        FieldHandle::new(self.pole.signature(), move |z| k.eval(z), move |z| z.distance(&pole) > 0.0)
    }
}

/// `𝔎₂(z) = D̄𝔎(z − w0) − D̄𝔎(p0 − w0)`: monogenic off `w0`, zero at `p0`.
#[derive(Clone, Debug)]
pub struct K2TestFunction {
    kernel: CauchyKernel,
    offset: Multivector<f64>,
    pub zero_point: Paravector<f64>,
}

impl K2TestFunction {
    pub fn new(pole: Paravector<f64>, zero_point: Paravector<f64>) -> Result<Self> {
        let kernel = CauchyKernel::new(pole);
        let offset = kernel.dbar(&zero_point)?;
        Ok(Self { kernel, offset, zero_point })
    }

    pub fn pole(&self) -> &Paravector<f64> {
        &self.kernel.pole
    }

    pub fn eval(&self, z: &Paravector<f64>) -> Result<Multivector<f64>> {
        Ok(&self.kernel.dbar(z)? - &self.offset)
    }

    /// `D̄𝔎₂(z) = D̄²𝔎(z − w0)`.
    pub fn dbar(&self, z: &Paravector<f64>) -> Result<Multivector<f64>> {
        self.kernel.dbar2(z)
    }

    pub fn field(&self) -> FieldHandle {
        let k = self.clone();
        let pole = self.kernel.pole.clone();
        FieldHandle::new(self.kernel.pole.signature(), move |z| k.eval(z), move |z| z.distance(&pole) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{FdScheme, Operator, Side};
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn sig(m: usize) -> Signature {
        Signature::new(m).unwrap()
    }

    #[test]
    fn index_ordering_and_counts() {
        let s = sig(2);
        let idx = fueter_indices(s, 2);
        let lists: Vec<Vec<usize>> = idx.iter().map(FueterIndex::as_list).collect();
        assert_eq!(lists, vec![vec![], vec![1], vec![2], vec![1, 1], vec![1, 2], vec![2, 2]]);
        assert_eq!(basis_up_to_degree::<f64>(s, 1).len(), 12);
        assert_eq!(basis_up_to_degree::<f64>(s, 0).len(), 4);
    }

    #[test]
    fn fueter_variable_values() {
        let s = sig(2);
        let z1 = fueter_variable::<BigRational>(s, 1);
        assert!(z1.eval(&Paravector::zero(s)).unwrap().is_zero());
        let w = Paravector::new(vec![ratio(1, 2), ratio(1, 3), ratio(2, 5)]).unwrap();
        assert!(shifted_fueter_variable(1, &w).eval(&w).unwrap().is_zero());
    }

    #[test]
    fn recursion_matches_permutation_sum() {
        let s = sig(3);
        for alpha in fueter_indices(s, 4) {
            let a = fueter_polynomial::<BigRational>(s, &alpha);
            let b = fueter_polynomial_by_permutations::<BigRational>(s, &alpha);
            assert_eq!(a, b, "{alpha:?}");
        }
    }

    #[test]
    fn table_matches_polynomials() {
        let s = sig(2);
        let table = FueterTable::new(s, 5);
        let z = Paravector::from_slice(&[0.3, -0.4, 0.25]).unwrap();
        let vals = table.eval(&z);
        for (k, alpha) in table.indices().iter().enumerate() {
            let p = fueter_polynomial::<f64>(s, alpha);
            let v = p.eval(&z).unwrap();
            let d = p.partial(0).eval(&z).unwrap();
            for blade in 0..4 {
                assert!((vals.values[k * 4 + blade] - v.coeffs()[blade]).abs() < 1e-14);
                assert!((vals.d0[k * 4 + blade] - d.coeffs()[blade]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cauchy_kernel_m1_is_conjugate_inverse() {
        // For m = 1, x̄/|x|² = 1/x in the complex picture.
        let k = CauchyKernel::new(Paravector::from_slice(&[0.2, -0.1]).unwrap());
        let z = Paravector::from_slice(&[0.7, 0.4]).unwrap();
        let x = &z - &k.pole;
        let inv = x.inverse().unwrap().embed();
        assert!((&k.eval(&z).unwrap() - &inv).norm() < 1e-15);
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let s = sig(2);
        let k = CauchyKernel::new(Paravector::from_slice(&[1.5, 0.2, -0.3]).unwrap());
        let field = k.field();
        let z = Paravector::from_slice(&[0.1, 0.3, 0.2]).unwrap();
        let fd = field.dirac(&z, Operator::Dbar, Side::Left, FdScheme::first()).unwrap();
        let exact = k.dbar(&z).unwrap();
        assert!((&fd - &exact).norm() < 1e-7 * exact.norm());
        let nested = field.dirac_field(Operator::Dbar, Side::Left, FdScheme::second());
        let fd2 = nested.dirac(&z, Operator::Dbar, Side::Left, FdScheme::second()).unwrap();
        let exact2 = k.dbar2(&z).unwrap();
        assert!((&fd2 - &exact2).norm() < 1e-4 * exact2.norm());
        assert_eq!(s, k.pole.signature());
    }

    #[test]
    fn k2_vanishes_at_zero_point() {
        let k2 = K2TestFunction::new(
            Paravector::from_slice(&[0.0, 1.2, 0.0]).unwrap(),
            Paravector::from_slice(&[0.0, 0.8, 0.0]).unwrap(),
        )
        .unwrap();
        assert!(k2.eval(&k2.zero_point.clone()).unwrap().norm() < 1e-15);
    }
}
