//! Boundary surfaces and quadrature rules on them.
//!
//! `order` always means polynomial exactness: a rule of order `q` integrates
//! restrictions of polynomials of total degree `≤ q` exactly (up to rounding).

use std::f64::consts::PI;

use crate::clifford::{Paravector, Signature};
use crate::error::{Error, Result};
use crate::mobius::VahlenMatrix;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Nodes on a surface with positive weights that include the area element.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<Paravector<f64>>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Paravector<f64>) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn signature(&self) -> Signature {
        self.nodes[0].signature()
    }

    /// Moves the nodes by `V` and scales each weight by `conformal_scale^m`,
    /// the Jacobian of the `m`-dimensional surface measure.
    pub fn transport(&self, v: &VahlenMatrix<f64>) -> Result<Self> {
        let m = self.signature().generators() as i32;
        let mut nodes = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(v.apply(x)?);
            weights.push(w * v.conformal_scale(x)?.powi(m));
        }
        Ok(Self { nodes, weights, order: self.order })
    }

    /// The rule moved from the unit sphere to `|x − center| = radius`.
    pub fn affine(&self, center: &Paravector<f64>, radius: f64) -> Self {
        let m = self.signature().generators() as i32;
        Self {
            nodes: self.nodes.iter().map(|x| center + &x.scale(&radius)).collect(),
            weights: self.weights.iter().map(|w| w * radius.powi(m)).collect(),
            order: self.order,
        }
    }
}

/// Rule of the given exactness on the sphere `|z − center| = radius` in `R^{m+1}`.
pub fn sphere_quadrature(sig: Signature, order: usize, radius: f64, center: &Paravector<f64>) -> Result<QuadratureRule> {
    sig.check(&center.signature())?;
    if radius <= 0.0 {
        return Err(Error::InvalidArgument("sphere radius must be positive".into()));
    }
    let unit = match sig.generators() {
        1 => circle_rule(order + 1, order),
        2 => s2_rule(order),
        3 => s3_rule(order),
        m => return Err(Error::UnsupportedSignature { m, max: 3 }),
    };
    Ok(unit.affine(center, radius))
}

/// Uniform rule with `n` nodes on the unit circle; exact for trigonometric degree `< n`.
pub fn circle_rule(n: usize, order: usize) -> QuadratureRule {
    let w = 2.0 * PI / n as f64;
    let nodes = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            Paravector::new(vec![t.cos(), t.sin()]).expect("m = 1")
        })
        .collect();
    QuadratureRule { nodes, weights: vec![w; n], order }
}

/// Gauss–Legendre in `cos θ` times a uniform azimuthal rule on `S²`.
fn s2_rule(order: usize) -> QuadratureRule {
    let (xs, ws) = gauss_legendre((order + 1).div_ceil(2));
    let nphi = order + 1;
    let dphi = 2.0 * PI / nphi as f64;
    let mut nodes = Vec::with_capacity(xs.len() * nphi);
    let mut weights = Vec::with_capacity(xs.len() * nphi);
    for (x, w) in xs.iter().zip(&ws) {
        let s = (1.0 - x * x).sqrt();
        for k in 0..nphi {
            let phi = dphi * k as f64;
            nodes.push(Paravector::new(vec![*x, s * phi.cos(), s * phi.sin()]).expect("m = 2"));
            weights.push(w * dphi);
        }
    }
    QuadratureRule { nodes, weights, order }
}

/// Hopf coordinates on `S³` with `u = sin²η` integrated by Gauss–Legendre.
fn s3_rule(order: usize) -> QuadratureRule {
    let (us, ws) = gauss_legendre_on(order / 2 + 1, 0.0, 1.0);
    let n = order + 1;
    let dxi = 2.0 * PI / n as f64;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (u, w) in us.iter().zip(&ws) {
        let (c, s) = ((1.0 - u).sqrt(), u.sqrt());
        for j in 0..n {
            let a = dxi * j as f64;
            for k in 0..n {
                let b = dxi * k as f64;
                nodes.push(Paravector::new(vec![c * a.cos(), c * a.sin(), s * b.cos(), s * b.sin()]).expect("m = 3"));
                weights.push(0.5 * w * dxi * dxi);
            }
        }
    }
    QuadratureRule { nodes, weights, order }
}

/// Rule on the unit sphere graded towards the pole `axis`.
///
/// The polar angle from `axis` is split into panels whose widths grow
/// geometrically from `h0`, each integrated by `per_panel` Gauss points; the
/// remaining directions use a sphere rule of the given azimuthal order. Meant
/// for integrands peaked near `axis` with width about `h0`.
pub fn graded_sphere_quadrature(
    sig: Signature,
    axis: &Paravector<f64>,
    h0: f64,
    per_panel: usize,
    azimuthal_order: usize,
) -> Result<QuadratureRule> {
    sig.check(&axis.signature())?;
    let m = sig.generators();
    let n = axis.norm();
    if n == 0.0 || h0 <= 0.0 {
        return Err(Error::InvalidArgument("graded rule needs a nonzero axis and positive h0".into()));
    }
    let e = axis.scale(&(1.0 / n));
    let frame = orthonormal_complement(e.comps());

    let mut breaks = vec![0.0];
    let mut h = h0.min(PI);
    while *breaks.last().unwrap() < PI {
        let next = (breaks.last().unwrap() + h).min(PI);
        breaks.push(next);
        h *= 2.0;
    }
    // Directions in the tangent sphere S^{m-1} with their weights.
    let tangent: Vec<(Vec<f64>, f64)> = match m {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        _ => {
            let rule = match m - 1 {
                1 => circle_rule(azimuthal_order + 1, azimuthal_order),
                _ => s2_rule(azimuthal_order),
            };
            rule.nodes.iter().zip(&rule.weights).map(|(x, w)| (x.comps().to_vec(), *w)).collect()
        }
    };

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for win in breaks.windows(2) {
        let (ts, tw) = gauss_legendre_on(per_panel, win[0], win[1]);
        for (t, w) in ts.iter().zip(&tw) {
            let jac = t.sin().powi(m as i32 - 1);
            for (dir, dw) in &tangent {
                let mut comps: Vec<f64> = e.comps().iter().map(|c| c * t.cos()).collect();
                for (k, basis) in frame.iter().enumerate() {
                    for (c, b) in comps.iter_mut().zip(basis) {
                        *c += t.sin() * dir[k] * b;
                    }
                }
                nodes.push(Paravector::new(comps)?);
                weights.push(w * jac * dw);
            }
        }
    }
    Ok(QuadratureRule { nodes, weights, order: azimuthal_order })
}

/// Orthonormal basis of the complement of the unit vector `e`.
fn orthonormal_complement(e: &[f64]) -> Vec<Vec<f64>> {
    let dim = e.len();
    let mut basis: Vec<Vec<f64>> = vec![e.to_vec()];
    for k in 0..dim {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
        if basis.len() == dim {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// A closed smooth surface bounding the domain `G`.
#[derive(Clone, Debug)]
pub enum BoundarySurface {
    Sphere { center: Paravector<f64>, radius: f64 },
    /// Image of the sphere `|x − base_center| = base_radius` under `map`, whose
    /// pole lies outside the closed base ball.
    MobiusImage { map: VahlenMatrix<f64>, base_center: Paravector<f64>, base_radius: f64 },
}

impl BoundarySurface {
    pub fn unit_ball(sig: Signature) -> Self {
        Self::Sphere { center: Paravector::zero(sig), radius: 1.0 }
    }

    /// Image of the unit ball under `map`. Fails if the pole of the map lies in
    /// the closed unit ball.
    pub fn mobius_image_of_unit_ball(map: VahlenMatrix<f64>) -> Result<Self> {
        let sig = map.signature();
        if let Some(pole) = pole_of(&map) {
            if pole.norm() <= 1.0 {
                return Err(Error::InvalidArgument("pole of the map lies in the closed base ball".into()));
            }
        }
        Ok(Self::MobiusImage { map, base_center: Paravector::zero(sig), base_radius: 1.0 })
    }

    pub fn signature(&self) -> Signature {
        match self {
            Self::Sphere { center, .. } => center.signature(),
            Self::MobiusImage { base_center, .. } => base_center.signature(),
        }
    }

    /// Whether `z` lies strictly inside the domain.
    pub fn contains(&self, z: &Paravector<f64>) -> Result<bool> {
        self.signature().check(&z.signature())?;
        Ok(self.interior_margin(z)? > 0.0)
    }

    /// Positive inside, zero on the surface: `1 − |x|/R` in base coordinates.
    pub fn interior_margin(&self, z: &Paravector<f64>) -> Result<f64> {
        match self {
            Self::Sphere { center, radius } => Ok(1.0 - z.distance(center) / radius),
            Self::MobiusImage { map, base_center, base_radius } => match map.inverse().apply(z) {
                Ok(x) => Ok(1.0 - x.distance(base_center) / base_radius),
                Err(Error::SingularDenominator { .. }) => Ok(-1.0),
                Err(e) => Err(e),
            },
        }
    }

    /// Center and radius of the bounding sphere.
    ///
    /// For an image surface the base points nearest to and farthest from the
    /// pole map to antipodal points of the image sphere.
    pub fn sphere(&self) -> Result<(Paravector<f64>, f64)> {
        match self {
            Self::Sphere { center, radius } => Ok((center.clone(), *radius)),
            Self::MobiusImage { map, base_center, base_radius } => {
                let sig = self.signature();
                let dir = match pole_of(map) {
                    Some(pole) if pole.distance(base_center) > 0.0 => {
                        let d = &pole - base_center;
                        d.scale(&(1.0 / d.norm()))
                    }
                    _ => Paravector::unit(sig, 0),
                };
                let p = map.apply(&(base_center + &dir.scale(base_radius)))?;
                let q = map.apply(&(base_center - &dir.scale(base_radius)))?;
                let center = (&p + &q).scale(&0.5);
                let radius = 0.5 * p.distance(&q);
                Ok((center, radius))
            }
        }
    }

    /// Product Gauss rule of the given polynomial exactness on the surface.
    pub fn quadrature(&self, order: usize) -> Result<QuadratureRule> {
        let (center, radius) = self.sphere()?;
        sphere_quadrature(self.signature(), order, radius, &center)
    }

    /// Rule on the base sphere carried to the surface by the map. Loses
    /// polynomial exactness as the pole approaches the base sphere.
    pub fn transported_quadrature(&self, order: usize) -> Result<QuadratureRule> {
        let sig = self.signature();
        match self {
            Self::Sphere { center, radius } => sphere_quadrature(sig, order, *radius, center),
            Self::MobiusImage { map, base_center, base_radius } => {
                sphere_quadrature(sig, order, *base_radius, base_center)?.transport(map)
            }
        }
    }

    /// Axis-aligned bounding box of the domain, from a dense boundary sample.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let rule = self.quadrature(24)?;
        let dim = self.signature().paravector_dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for x in &rule.nodes {
            for (k, c) in x.comps().iter().enumerate() {
                lo[k] = lo[k].min(*c);
                hi[k] = hi[k].max(*c);
            }
        }
        Ok((lo, hi))
    }

    /// Short text describing the surface, used in cache keys.
    pub fn descriptor(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",");
        match self {
            Self::Sphere { center, radius } => format!("sphere({};{radius:.16e})", fmt(center.comps())),
            Self::MobiusImage { map, base_center, base_radius } => format!(
                "mobius([{}],[{}],[{}],[{}];sphere({};{base_radius:.16e}))",
                fmt(map.a.coeffs()),
                fmt(map.b.coeffs()),
                fmt(map.c.coeffs()),
                fmt(map.d.coeffs()),
                fmt(base_center.comps()),
            ),
        }
    }
}

/// `−c⁻¹d`, the point sent to infinity, if `c ≠ 0`.
pub fn pole_of(map: &VahlenMatrix<f64>) -> Option<Paravector<f64>> {
    if map.c.is_zero() {
        return None;
    }
    let c_inv = map.c.versor_inverse().ok()?;
    (-&(&c_inv * &map.d)).to_paravector_within(1e-9).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::HelperMap;

    fn sig(m: usize) -> Signature {
        Signature::new(m).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((approx - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn sphere_areas() {
        let r = sphere_quadrature(sig(1), 15, 1.0, &Paravector::zero(sig(1))).unwrap();
        assert_eq!(r.len(), 16);
        assert!((r.total_weight() - 2.0 * PI).abs() < 1e-13);
        let r = sphere_quadrature(sig(2), 20, 1.0, &Paravector::zero(sig(2))).unwrap();
        assert!((r.total_weight() - 4.0 * PI).abs() < 1e-12);
        let r = sphere_quadrature(sig(3), 10, 2.0, &Paravector::zero(sig(3))).unwrap();
        assert!((r.total_weight() - 2.0 * PI * PI * 8.0).abs() < 1e-10);
    }

    #[test]
    fn sphere_moments() {
        let r = sphere_quadrature(sig(2), 14, 1.0, &Paravector::zero(sig(2))).unwrap();
        let m2 = r.integrate(|x| x.comp(0).powi(2));
        assert!((m2 - 4.0 * PI / 3.0).abs() < 1e-12);
        let m4 = r.integrate(|x| x.comp(1).powi(2) * x.comp(2).powi(2));
        assert!((m4 - 4.0 * PI / 15.0).abs() < 1e-12);
        let r3 = sphere_quadrature(sig(3), 8, 1.0, &Paravector::zero(sig(3))).unwrap();
        let q = r3.integrate(|x| x.comp(2).powi(2));
        assert!((q - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn graded_rule_integrates_like_uniform_rule() {
        let s = sig(2);
        let axis = Paravector::unit(s, 1);
        let g = graded_sphere_quadrature(s, &axis, 1e-3, 8, 16).unwrap();
        assert!((g.total_weight() - 4.0 * PI).abs() < 1e-10);
        let m2 = g.integrate(|x| x.comp(1).powi(2));
        assert!((m2 - 4.0 * PI / 3.0).abs() < 1e-10);
        let g1 = graded_sphere_quadrature(sig(1), &Paravector::unit(sig(1), 0), 1e-3, 8, 0).unwrap();
        assert!((g1.total_weight() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn transported_rule_measures_image_area() {
        let s = sig(2);
        let h = HelperMap::default();
        let surf = BoundarySurface::mobius_image_of_unit_ball(h.vahlen(s).unwrap()).unwrap();
        let (_, radius) = h.image_ball(s);
        let r = surf.transported_quadrature(20).unwrap();
        assert!((r.total_weight() - 4.0 * PI * radius * radius).abs() < 1e-9);
        let (c, _) = h.image_ball(s);
        assert!(surf.contains(&c).unwrap());
    }

    #[test]
    fn image_sphere_matches_helper_geometry() {
        let s = sig(2);
        let h = HelperMap::default();
        let surf = BoundarySurface::mobius_image_of_unit_ball(h.vahlen(s).unwrap()).unwrap();
        let (c, radius) = h.image_ball(s);
        let (c2, r2) = surf.sphere().unwrap();
        assert!(c.distance(&c2) < 1e-12 && (radius - r2).abs() < 1e-12);
        for x in &surf.quadrature(10).unwrap().nodes {
            assert!(surf.interior_margin(x).unwrap().abs() < 1e-10);
        }
    }
}
