//! Möbius transformations of `R^{m+1}` in Vahlen form `z ↦ (az+b)(cz+d)⁻¹`.

use crate::clifford::{Multivector, Paravector, Signature};
use crate::error::{Error, Result};
use crate::quadrature::BoundarySurface;
use crate::scalar::{RealScalar, Scalar};

/// Relative paravector tolerance for outputs of [`VahlenMatrix::apply`].
pub const APPLY_PARAVECTOR_TOL: f64 = 1e-9;

/// Default tolerance used by [`VahlenMatrix::validate`] in float mode.
pub const VALIDATE_TOL: f64 = 1e-9;

/// Outcome of one constraint check.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintStatus {
    Pass { residual: f64 },
    Fail { residual: f64 },
    /// Entry was not supplied with a factorization.
    NotCheckable,
}

impl ConstraintStatus {
    fn from_residual(residual: f64, tol: f64, exact: bool) -> Self {
        let ok = if exact { residual == 0.0 } else { residual <= tol };
        if ok {
            Self::Pass { residual }
        } else {
            Self::Fail { residual }
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self, Self::Pass { .. })
    }

    pub fn failed(&self) -> bool {
        matches!(self, Self::Fail { .. })
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            Self::Pass { residual } | Self::Fail { residual } => Some(*residual),
            Self::NotCheckable => None,
        }
    }
}

/// Per-constraint diagnostics for a Vahlen matrix.
#[derive(Clone, Debug)]
pub struct VahlenDiagnostics {
    /// Every entry equals the product of its supplied paravector factors.
    pub factorization: ConstraintStatus,
    /// `a d̃ − b c̃ = 1`.
    pub pseudo_determinant: ConstraintStatus,
    /// `a c⁻¹`, `c⁻¹ d` (or `b d⁻¹` when `c = 0`) are paravectors.
    pub paravector_ratios: ConstraintStatus,
    /// Value of `a d̃ − b c̃`.
    pub determinant: Multivector<f64>,
}

impl VahlenDiagnostics {
    /// No constraint failed; unverifiable ones do not count against the matrix.
    pub fn ok(&self) -> bool {
        !self.factorization.failed() && self.pseudo_determinant.passed() && self.paravector_ratios.passed()
    }

    /// Pseudo-determinant `−1`: an orientation-reversing conformal map.
    pub fn orientation_reversing(&self) -> bool {
        let d = self.determinant.coeffs();
        (d[0] + 1.0).abs() <= VALIDATE_TOL && d[1..].iter().all(|c| c.abs() <= VALIDATE_TOL)
    }
}

/// Paravector factor list of one matrix entry; `None` marks a zero entry.
pub type Factors<T> = Option<Vec<Paravector<T>>>;

/// A 2×2 matrix of multivectors acting by `z ↦ (az+b)(cz+d)⁻¹`.
#[derive(Clone, Debug)]
pub struct VahlenMatrix<T: Scalar> {
    pub a: Multivector<T>,
    pub b: Multivector<T>,
    pub c: Multivector<T>,
    pub d: Multivector<T>,
    factors: Option<[Factors<T>; 4]>,
}

fn product_of<T: Scalar>(sig: Signature, factors: &Factors<T>) -> Multivector<T> {
    match factors {
        None => Multivector::zero(sig),
        Some(list) => list.iter().fold(Multivector::one(sig), |acc, p| &acc * &p.embed()),
    }
}

impl<T: Scalar> VahlenMatrix<T> {
    pub fn new(a: Multivector<T>, b: Multivector<T>, c: Multivector<T>, d: Multivector<T>) -> Result<Self> {
        let sig = a.signature();
        for x in [&b, &c, &d] {
            sig.check(&x.signature())?;
        }
        Ok(Self { a, b, c, d, factors: None })
    }

    /// Builds the entries as products of paravector factors `[a, b, c, d]`,
    /// which makes constraint (i) checkable.
    pub fn from_factors(sig: Signature, factors: [Factors<T>; 4]) -> Result<Self> {
        for list in factors.iter().flatten() {
            for p in list {
                sig.check(&p.signature())?;
            }
        }
        let [a, b, c, d] = [0, 1, 2, 3].map(|k| product_of(sig, &factors[k]));
        Ok(Self { a, b, c, d, factors: Some(factors) })
    }

    pub fn identity(sig: Signature) -> Self {
        Self::from_factors(sig, [Some(vec![]), None, None, Some(vec![])]).expect("consistent signature")
    }

    /// `z ↦ z + t`.
    pub fn translation(t: &Paravector<T>) -> Self {
        let sig = t.signature();
        Self::from_factors(sig, [Some(vec![]), Some(vec![t.clone()]), None, Some(vec![])])
            .expect("consistent signature")
    }

    pub fn signature(&self) -> Signature {
        self.a.signature()
    }

    pub fn factors(&self) -> Option<&[Factors<T>; 4]> {
        self.factors.as_ref()
    }

    /// `a d̃ − b c̃`.
    pub fn pseudo_determinant(&self) -> Multivector<T> {
        &(&self.a * &self.d.reversion()) - &(&self.b * &self.c.reversion())
    }

    pub fn validate(&self) -> VahlenDiagnostics {
        self.validate_with(VALIDATE_TOL)
    }

    pub fn validate_with(&self, tol: f64) -> VahlenDiagnostics {
        let sig = self.signature();
        let factorization = match &self.factors {
            None => ConstraintStatus::NotCheckable,
            Some(lists) => {
                let entries = [&self.a, &self.b, &self.c, &self.d];
                let residual = lists
                    .iter()
                    .zip(entries)
                    .map(|(list, entry)| (&product_of(sig, list) - entry).to_f64().norm())
                    .fold(0.0, f64::max);
                ConstraintStatus::from_residual(residual, tol, T::EXACT)
            }
        };

        let det = self.pseudo_determinant();
        let det_residual = (&det - &Multivector::one(sig)).to_f64().norm();
        let pseudo_determinant = ConstraintStatus::from_residual(det_residual, tol, T::EXACT);

        let paravector_ratios = match self.ratio_residual() {
            Some(r) => ConstraintStatus::from_residual(r, tol, T::EXACT),
            None => ConstraintStatus::Fail { residual: f64::INFINITY },
        };

        VahlenDiagnostics { factorization, pseudo_determinant, paravector_ratios, determinant: det.to_f64() }
    }

    /// Largest relative off-paravector mass among the ratios of constraint (iii),
    /// or `None` when a required inverse does not exist.
    fn ratio_residual(&self) -> Option<f64> {
        let rel = |x: &Multivector<T>| {
            let total = x.norm_squared().to_f64();
            if total == 0.0 {
                0.0
            } else {
                (x.off_paravector_mass().to_f64() / total).sqrt()
            }
        };
        if !self.c.is_zero() {
            let c_inv = self.c.versor_inverse().ok()?;
            Some(rel(&(&self.a * &c_inv)).max(rel(&(&c_inv * &self.d))))
        } else {
            let d_inv = self.d.versor_inverse().ok()?;
            Some(rel(&(&self.b * &d_inv)))
        }
    }

    /// `cz + d`.
    pub fn denominator(&self, z: &Paravector<T>) -> Multivector<T> {
        &(&self.c * &z.embed()) + &self.d
    }

    pub fn apply(&self, z: &Paravector<T>) -> Result<Paravector<T>> {
        self.signature().check(&z.signature())?;
        let den = self.denominator(z);
        let n2 = den.norm_squared();
        if n2.is_zero() || (!T::EXACT && n2.to_f64() < 1e-28) {
            return Err(Error::SingularDenominator { modulus: n2.to_f64().sqrt() });
        }
        let den_inv = den.versor_inverse()?;
        let num = &(&self.a * &z.embed()) + &self.b;
        (&num * &den_inv).to_paravector_within(APPLY_PARAVECTOR_TOL)
    }

    /// Matrix product: `apply(compose(V1, V2), z) = apply(V1, apply(V2, z))`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        self.signature().check(&inner.signature())?;
        Self::new(
            &(&self.a * &inner.a) + &(&self.b * &inner.c),
            &(&self.a * &inner.b) + &(&self.b * &inner.d),
            &(&self.c * &inner.a) + &(&self.d * &inner.c),
            &(&self.c * &inner.b) + &(&self.d * &inner.d),
        )
    }

    /// Adjugate `[[d̃, −b̃], [−c̃, ã]]`, the inverse map for pseudo-determinant `±1`.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.d.reversion(),
            b: -self.b.reversion(),
            c: -self.c.reversion(),
            d: self.a.reversion(),
            factors: None,
        }
    }

    /// `1/|cz+d|²`, the local length scale of the map.
    pub fn conformal_scale(&self, z: &Paravector<T>) -> Result<T> {
        let n2 = self.denominator(z).norm_squared();
        if n2.is_zero() {
            return Err(Error::SingularDenominator { modulus: 0.0 });
        }
        Ok(T::one() / n2)
    }

    pub fn to_f64(&self) -> VahlenMatrix<f64> {
        VahlenMatrix {
            a: self.a.to_f64(),
            b: self.b.to_f64(),
            c: self.c.to_f64(),
            d: self.d.to_f64(),
            factors: self.factors.as_ref().map(|lists| {
                lists.clone().map(|list| list.map(|ps| ps.iter().map(Paravector::to_f64).collect()))
            }),
        }
    }
}

impl<T: RealScalar> VahlenMatrix<T> {
    /// `z ↦ s z` for `s > 0`.
    pub fn dilation(sig: Signature, s: T) -> Result<Self> {
        if s <= T::zero() {
            return Err(Error::InvalidArgument("dilation factor must be positive".into()));
        }
        let r = s.sqrt();
        Self::from_factors(
            sig,
            [Some(vec![Paravector::real(sig, r)]), None, None, Some(vec![Paravector::real(sig, T::one() / r)])],
        )
    }

    /// `conj(cz+d)/|cz+d|^p`.
    pub fn automorphy_factor(&self, z: &Paravector<T>, p: i32) -> Result<Multivector<T>> {
        let den = self.denominator(z);
        let modulus = den.norm();
        if modulus == T::zero() {
            return Err(Error::SingularDenominator { modulus: 0.0 });
        }
        Ok(den.conjugate().scale(&modulus.powi(-p)))
    }
}

/// Sphere-inversion data attached to a boundary point: centre `C` and radius `r0`.
#[derive(Clone, Debug)]
pub struct InversionMaps<T: Scalar> {
    pub center: Paravector<T>,
    pub r0: T,
}

impl<T: RealScalar> InversionMaps<T> {
    pub fn new(center: Paravector<T>, r0: T) -> Result<Self> {
        if r0 <= T::zero() {
            return Err(Error::InvalidArgument("r0 must be positive".into()));
        }
        Ok(Self { center, r0 })
    }

    /// `i_P(z) = r0² (z−C)⁻¹ + C`, inversion in the tangent sphere.
    ///
    /// Pseudo-determinant `−1` for `m ≥ 1`.
    pub fn i_p(&self) -> VahlenMatrix<T> {
        let sig = self.center.signature();
        let c = self.center.embed();
        let r0 = self.r0;
        let inv = T::one() / r0;
        let r0sq = Multivector::scalar(sig, r0 * r0);
        VahlenMatrix::new(
            c.scale(&inv),
            (&r0sq - &(&c * &c)).scale(&inv),
            Multivector::scalar(sig, inv),
            (-&c).scale(&inv),
        )
        .expect("consistent signature")
    }

    /// `j_P(z) = (z − C)/r0`.
    pub fn j_p(&self) -> VahlenMatrix<T> {
        let sig = self.center.signature();
        let s = self.r0.sqrt();
        let minus_c = -&self.center;
        VahlenMatrix::from_factors(
            sig,
            [
                Some(vec![Paravector::real(sig, T::one() / s)]),
                Some(vec![minus_c.scale(&(T::one() / s))]),
                None,
                Some(vec![Paravector::real(sig, s)]),
            ],
        )
        .expect("consistent signature")
    }

    /// `j_P ∘ i_P`, which equals `z ↦ r0 (z − C)⁻¹`.
    pub fn composite(&self) -> VahlenMatrix<T> {
        self.j_p().compose(&self.i_p()).expect("consistent signature")
    }

    /// Direct evaluation of `i_P`.
    pub fn apply_i(&self, z: &Paravector<T>) -> Result<Paravector<T>> {
        let w = z - &self.center;
        if w.norm_squared() == T::zero() {
            return Err(Error::Pole { pole: self.center.to_f64().comps().to_vec() });
        }
        Ok(&w.inverse()?.scale(&(self.r0 * self.r0)) + &self.center)
    }

    /// Direct evaluation of `j_P`.
    pub fn apply_j(&self, z: &Paravector<T>) -> Paravector<T> {
        (z - &self.center).scale(&(T::one() / self.r0))
    }
}

/// Orientation-preserving map `z ↦ −r0 e_1 (z − C)⁻¹ e_1`.
///
/// Up to the reflection `x_j ↦ −x_j` (`j ≥ 2`) this is `r0 (z − C)⁻¹`; it
/// carries pseudo-determinant `+1` and coincides with `r0 (z − C)⁻¹` for `m = 1`.
pub fn reflected_inversion<T: RealScalar>(center: &Paravector<T>, r0: T) -> Result<VahlenMatrix<T>> {
    if r0 <= T::zero() {
        return Err(Error::InvalidArgument("r0 must be positive".into()));
    }
    let sig = center.signature();
    let s = r0.sqrt();
    let e1 = Paravector::unit(sig, 1);
    let e1c = &e1.embed() * &center.embed();
    VahlenMatrix::new(
        Multivector::zero(sig),
        e1.embed().scale(&s),
        e1.embed().scale(&(T::one() / s)),
        (-&e1c).scale(&(T::one() / s)),
    )
}

/// Parameters of the bounded Möbius example `z ↦ reflected_inversion(z) + shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct HelperMap {
    /// Pole `C = pole_distance · e_1`, outside the closed unit ball.
    pub pole_distance: f64,
    pub r0: f64,
    /// Translation applied after the inversion, along `e_1`.
    pub shift: f64,
}

impl Default for HelperMap {
    fn default() -> Self {
        Self::unit_image(10.0)
    }
}

impl HelperMap {
    /// Chooses `r0` and `shift` so the unit ball maps onto a ball of radius one
    /// centred at `0.1 e_1`.
    pub fn unit_image(pole_distance: f64) -> Self {
        let s = pole_distance;
        let r0 = s * s - 1.0;
        // The diameter endpoints ±e_1 map to r0/(s∓1)·e_1, whose midpoint is s·e_1.
        Self { pole_distance: s, r0, shift: 0.1 - s }
    }

    pub fn vahlen(&self, sig: Signature) -> Result<VahlenMatrix<f64>> {
        if self.pole_distance <= 1.0 {
            return Err(Error::InvalidArgument("helper pole must lie outside the closed unit ball".into()));
        }
        let center = Paravector::unit(sig, 1).scale(&self.pole_distance);
        let inv = reflected_inversion(&center, self.r0)?;
        let t = Paravector::unit(sig, 1).scale(&self.shift);
        VahlenMatrix::translation(&t).compose(&inv)
    }

    /// Image of the unit ball: `(centre, radius)`.
    pub fn image_ball(&self, sig: Signature) -> (Paravector<f64>, f64) {
        let s = self.pole_distance;
        let near = self.r0 / (s - 1.0);
        let far = self.r0 / (s + 1.0);
        let mid = 0.5 * (near + far) + self.shift;
        (Paravector::unit(sig, 1).scale(&mid), 0.5 * (far - near).abs())
    }
}

/// Nearest boundary point `P` of `z`, the external tangent-ball centre `C` and
/// the distance `δ = |z − P|`.
#[derive(Clone, Debug)]
pub struct TangentBallData {
    pub p: Paravector<f64>,
    pub c: Paravector<f64>,
    pub r0: f64,
    pub delta: f64,
}

impl TangentBallData {
    fn from_nearest(z: &Paravector<f64>, p: Paravector<f64>, r0: f64) -> Self {
        let out = &p - z;
        let delta = out.norm();
        let c = &p + &out.scale(&(r0 / delta));
        Self { p, c, r0, delta }
    }

    pub fn inversion_maps(&self) -> InversionMaps<f64> {
        InversionMaps { center: self.c.clone(), r0: self.r0 }
    }
}

/// Finds the boundary point closest to the interior point `z`.
///
/// Spheres are handled analytically. Möbius images are minimised in the
/// parameters of the base sphere from the best point of a dense sample.
pub fn nearest_boundary_point(surface: &BoundarySurface, z: &Paravector<f64>, r0: f64) -> Result<TangentBallData> {
    if r0 <= 0.0 {
        return Err(Error::InvalidArgument("r0 must be positive".into()));
    }
    if !surface.contains(z)? {
        return Err(Error::OutsideDomain { point: z.comps().to_vec() });
    }
    match surface {
        BoundarySurface::Sphere { center, radius } => {
            let v = z - center;
            let n = v.norm();
            if n <= 1e-12 * radius {
                return Err(Error::NonUniqueMinimizer { distance: *radius });
            }
            let p = center + &v.scale(&(radius / n));
            Ok(TangentBallData::from_nearest(z, p, r0))
        }
        BoundarySurface::MobiusImage { map, base_center, base_radius } => {
            let sig = z.signature();
            let dist = |u: &[f64]| -> f64 {
                let x = sphere_point(base_center, *base_radius, u);
                match map.apply(&x) {
                    Ok(y) => y.distance(z),
                    Err(_) => f64::INFINITY,
                }
            };
            let samples = sphere_samples(sig.generators(), 24);
            let mut scored: Vec<(f64, Vec<f64>)> = samples.into_iter().map(|u| (dist(&u), u)).collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (_, best_u) = scored[0].clone();
            let refined = nelder_mead(&dist, &best_u, 0.05, 1e-14, 4000);
            let best = dist(&refined);
            // A rival start well separated on the base sphere that refines to the same distance
            // signals a non-unique minimiser.
            let rival = scored.iter().skip(1).find(|(_, u)| unit_distance(u, &refined) > 0.3);
            if let Some((d_rival, u_rival)) = rival {
                if *d_rival <= best * (1.0 + 0.05) + 1e-12 {
                    let r = nelder_mead(&dist, u_rival, 0.05, 1e-14, 4000);
                    let dr = dist(&r);
                    if unit_distance(&r, &refined) > 0.1 && (dr - best).abs() <= 1e-8 * (1.0 + best) {
                        return Err(Error::NonUniqueMinimizer { distance: best });
                    }
                }
            }
            let x = sphere_point(base_center, *base_radius, &refined);
            let p = map.apply(&x)?;
            Ok(TangentBallData::from_nearest(z, p, r0))
        }
    }
}

fn normalize(u: &[f64]) -> Vec<f64> {
    let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter().map(|x| x / n).collect()
}

fn unit_distance(u: &[f64], v: &[f64]) -> f64 {
    let (u, v) = (normalize(u), normalize(v));
    u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn sphere_point(center: &Paravector<f64>, radius: f64, u: &[f64]) -> Paravector<f64> {
    let dir = normalize(u);
    let comps = center.comps().iter().zip(&dir).map(|(c, d)| c + radius * d).collect();
    Paravector::new(comps).expect("dimension of the base sphere")
}

/// Roughly uniform directions in `R^{m+1}`: normalised points of a cube-surface grid.
pub fn sphere_samples(m: usize, per_edge: usize) -> Vec<Vec<f64>> {
    let dim = m + 1;
    let mut out = Vec::new();
    let ticks: Vec<f64> = (0..=per_edge).map(|k| -1.0 + 2.0 * k as f64 / per_edge as f64).collect();
    for face in 0..dim {
        for sign in [-1.0, 1.0] {
            let free = dim - 1;
            let count = ticks.len().pow(free as u32);
            for idx in 0..count {
                let mut u = vec![0.0; dim];
                let mut rest = idx;
                let mut slot = 0;
                for (axis, value) in u.iter_mut().enumerate() {
                    if axis == face {
                        *value = sign;
                    } else {
                        *value = ticks[rest % ticks.len()];
                        rest /= ticks.len();
                        slot += 1;
                    }
                }
                debug_assert_eq!(slot, free);
                out.push(normalize(&u));
            }
        }
    }
    out
}

/// Nelder–Mead simplex minimisation.
pub(crate) fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, ftol: f64, max_iter: usize) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() <= ftol * (1.0 + values[0].abs()) {
            let spread = simplex.iter().map(|x| unit_free_dist(x, &simplex[0])).fold(0.0, f64::max);
            if spread < 1e-12 {
                break;
            }
        }
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let xc = if fr < values[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    simplex[best].clone()
}

fn unit_free_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn sig(m: usize) -> Signature {
        Signature::new(m).unwrap()
    }

    fn pv(c: &[f64]) -> Paravector<f64> {
        Paravector::from_slice(c).unwrap()
    }

    #[test]
    fn identity_and_translation_validate() {
        let s = sig(2);
        assert!(VahlenMatrix::<BigRational>::identity(s).validate().ok());
        let t = Paravector::new(vec![ratio(1, 2), ratio(-3, 4), ratio(2, 1)]).unwrap();
        let v = VahlenMatrix::translation(&t);
        let diag = v.validate();
        assert!(diag.ok(), "{diag:?}");
        assert!(diag.factorization.passed());
        let z = Paravector::new(vec![ratio(1, 3), ratio(0, 1), ratio(5, 7)]).unwrap();
        assert_eq!(v.apply(&z).unwrap(), &z + &t);
    }

    #[test]
    fn bivector_entry_checked_against_factorization() {
        // a = e1 e2 and d = (a⁻¹)~, so that a d̃ = 1.
        let s = sig(2);
        let e1 = Paravector::<BigRational>::unit(s, 1);
        let e2 = Paravector::<BigRational>::unit(s, 2);
        let a = &e1.embed() * &e2.embed();
        let a_inv = a.versor_inverse().unwrap();
        let d = a_inv.reversion();
        let d_factors = vec![e1.inverse().unwrap(), e2.inverse().unwrap()];
        let v = VahlenMatrix::from_factors(s, [Some(vec![e1.clone(), e2.clone()]), None, None, Some(d_factors)]).unwrap();
        assert_eq!(v.d, d);
        let diag = v.validate();
        assert!(diag.ok(), "{diag:?}");
        let plain = VahlenMatrix::new(a, Multivector::zero(s), Multivector::zero(s), d).unwrap();
        assert_eq!(plain.validate().factorization, ConstraintStatus::NotCheckable);
    }

    #[test]
    fn composite_inversion_matches_closed_form() {
        let s = sig(2);
        let maps = InversionMaps::new(pv(&[0.0, 2.0, 0.0]), 0.5).unwrap();
        let comp = maps.composite();
        for z in [pv(&[0.1, 0.2, -0.3]), pv(&[-0.5, 0.0, 0.4]), pv(&[0.7, -0.1, 0.0])] {
            let lhs = comp.apply(&z).unwrap();
            let rhs = (&z - &maps.center).inverse().unwrap().scale(&0.5);
            assert!(lhs.distance(&rhs) < 1e-12);
            let two_step = maps.apply_j(&maps.apply_i(&z).unwrap());
            assert!(lhs.distance(&two_step) < 1e-12);
        }
        assert!(maps.i_p().validate().orientation_reversing());
        assert!(maps.j_p().validate().ok());
        assert_eq!(s, comp.signature());
    }

    #[test]
    fn tangent_sphere_modulus() {
        let maps = InversionMaps::new(pv(&[0.0, 3.0, 0.0]), 1.0).unwrap();
        let comp = maps.composite();
        let on_sphere = pv(&[0.0, 2.0, 0.0]);
        assert!((comp.apply(&on_sphere).unwrap().norm() - 1.0).abs() < 1e-14);
        let delta_equals_r0 = pv(&[0.0, 1.0, 0.0]);
        assert!((comp.apply(&delta_equals_r0).unwrap().norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reflected_inversion_is_proper() {
        for m in 1..=3 {
            let s = sig(m);
            let c = Paravector::unit(s, 1).scale(&2.0);
            let v = reflected_inversion(&c, 0.5).unwrap();
            let diag = v.validate();
            assert!(diag.ok(), "m={m} {diag:?}");
        }
        let s = sig(1);
        let c = Paravector::unit(s, 1).scale(&2.0);
        let v = reflected_inversion(&c, 0.5).unwrap();
        let z = pv(&[0.3, -0.2]);
        let expected = (&z - &c).inverse().unwrap().scale(&0.5);
        assert!(v.apply(&z).unwrap().distance(&expected) < 1e-14);
    }

    #[test]
    fn helper_image_ball_matches_sampled_boundary() {
        let s = sig(2);
        let h = HelperMap::default();
        let v = h.vahlen(s).unwrap();
        let (center, radius) = h.image_ball(s);
        for u in sphere_samples(2, 6) {
            let x = pv(&u);
            let y = v.apply(&x).unwrap();
            assert!((y.distance(&center) - radius).abs() < 1e-9);
        }
        assert!((radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn automorphy_factor_modulus() {
        let maps = InversionMaps::new(pv(&[0.0, 3.0, 0.0]), 0.5).unwrap();
        let comp = maps.composite();
        let delta = 0.7;
        let z = pv(&[0.0, 3.0 - 0.5 - delta, 0.0]);
        let f = comp.automorphy_factor(&z, 3).unwrap();
        let den = comp.denominator(&z).norm();
        assert!((f.norm() - den.powi(-2)).abs() < 1e-14);
        // For m = 2 this is r0/(δ+r0)².
        assert!((f.norm() - 0.5 / (delta + 0.5f64).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn nearest_point_on_sphere() {
        let surf = BoundarySurface::unit_ball(sig(2));
        let t = nearest_boundary_point(&surf, &pv(&[0.0, 0.5, 0.0]), 1.0).unwrap();
        assert!(t.p.distance(&pv(&[0.0, 1.0, 0.0])) < 1e-15);
        assert!((t.delta - 0.5).abs() < 1e-15);
        assert!((t.p.distance(&t.c) - 1.0).abs() < 1e-15);
        assert!(matches!(
            nearest_boundary_point(&surf, &pv(&[0.0, 0.0, 0.0]), 1.0),
            Err(Error::NonUniqueMinimizer { .. })
        ));
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let x = nelder_mead(&f, &[0.0, 0.0], 0.5, 1e-16, 5000);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] + 2.0).abs() < 1e-6);
    }
}
