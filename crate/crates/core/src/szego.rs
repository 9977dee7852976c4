//! Truncated Szegő kernels.
//!
//! The generators `V_α e_A` (`|α| ≤ N`) are orthonormalised on a boundary
//! quadrature rule and the kernel is summed over the resulting basis. In the
//! default real-span mode each Clifford direction is a separate real basis
//! function, so the sum is scaled by `2^{-m}`:
//!
//! `K(z,w) = 2^{-m} Σ_k φ_k(z) conj(φ_k(w))`.

use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::clifford::{Multivector, Paravector, ProductTable, Signature};
use crate::error::{Error, Result};
use crate::mobius::VahlenMatrix;
use crate::monogenic::{FueterIndex, FueterTable};
use crate::quadrature::{BoundarySurface, QuadratureRule};

/// How the generators are orthonormalised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrthoMode {
    /// Real Gram–Schmidt over `V_α e_A` with the inner product `Sc⟨f, g⟩`.
    RealSpan,
    /// Gram–Schmidt over `V_α` with Clifford-valued projection coefficients.
    CliffordModule,
}

impl OrthoMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RealSpan => "real",
            Self::CliffordModule => "clifford",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Self::RealSpan),
            "clifford" => Ok(Self::CliffordModule),
            other => Err(Error::InvalidArgument(format!("unknown orthonormalisation mode {other:?}"))),
        }
    }
}

/// Options for [`HardyBasis::orthonormalize`].
#[derive(Clone, Copy, Debug)]
pub struct OrthoOptions {
    pub mode: OrthoMode,
    /// A generator is dropped when its projected norm falls below this
    /// fraction of its original norm.
    pub drop_tol: f64,
    /// Number of dropped generators tolerated before failing.
    pub max_drops: usize,
    /// Largest non-scalar part of a Clifford-valued norm accepted in module mode.
    pub nonscalar_tol: f64,
}

impl Default for OrthoOptions {
    fn default() -> Self {
        Self { mode: OrthoMode::RealSpan, drop_tol: 1e-10, max_drops: 0, nonscalar_tol: 1e-9 }
    }
}

/// Quality of the computed orthonormal basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GramReport {
    /// `max |Sc⟨φ_j, φ_k⟩ − δ_jk|`.
    pub max_scalar_residual: f64,
    /// Largest non-scalar part of `⟨φ_j, φ_k⟩` (module mode only; zero otherwise).
    pub max_nonscalar: f64,
    /// Generator positions removed as numerically dependent.
    pub dropped: Vec<usize>,
}

/// Everything that determines a kernel.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    pub surface: BoundarySurface,
    pub degree: u32,
    pub quad_order: usize,
    pub options: OrthoOptions,
}

impl KernelSpec {
    pub fn new(surface: BoundarySurface, degree: u32, quad_order: usize) -> Self {
        Self { surface, degree, quad_order, options: OrthoOptions::default() }
    }

    pub fn signature(&self) -> Signature {
        self.surface.signature()
    }

    /// Text hashed into the cache key.
    pub fn key_text(&self) -> String {
        format!(
            "m={};N={};surface={};quad={};mode={};drop={:.16e}",
            self.signature().generators(),
            self.degree,
            self.surface.descriptor(),
            self.quad_order,
            self.options.mode.name(),
            self.options.drop_tol
        )
    }

    /// SHA-256 of [`Self::key_text`], hex encoded.
    pub fn cache_key(&self) -> String {
        let digest = Sha256::digest(self.key_text().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Orthonormal basis `φ_k = Σ_α V_α W_{α,k}` of the truncated Hardy space.
#[derive(Clone, Debug)]
pub struct HardyBasis {
    sig: Signature,
    degree: u32,
    mode: OrthoMode,
    table: FueterTable,
    products: ProductTable,
    /// `W_{α,k}` flattened as `(k * n_alpha + α) * 2^m + blade`.
    coeffs: Vec<f64>,
    /// Polynomial degree of the generator each function was derived from.
    degrees: Vec<u32>,
    gram: GramReport,
    /// Row `k * 2^m + A`, column `α * 2^m + B`: the coefficient of `e_A` in `e_B W_{α,k}`.
    eval_matrix: Vec<f64>,
}

/// Basis functions and their `D̄` values at one point, flattened as `k * 2^m + blade`.
#[derive(Clone, Debug)]
pub struct BasisValues {
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

struct Column {
    samples: Vec<f64>,
    coeffs: Vec<f64>,
}

impl HardyBasis {
    /// Orthonormalises the generators up to `degree` on `rule`.
    pub fn orthonormalize(sig: Signature, degree: u32, rule: &QuadratureRule, options: OrthoOptions) -> Result<Self> {
        sig.check(&rule.signature())?;
        let table = FueterTable::new(sig, degree);
        let products = ProductTable::new(sig);
        let dim = sig.dim();
        let n_alpha = table.len();
        let n_nodes = rule.len();

        // Fueter values at the nodes, weighted by √w.
        let node_values: Vec<Vec<f64>> = rule
            .nodes
            .par_iter()
            .zip(&rule.weights)
            .map(|(x, w)| {
                let sw = w.sqrt();
                table.eval(x).values.iter().map(|v| v * sw).collect()
            })
            .collect();
        let value_at = |node: usize, alpha: usize| &node_values[node][alpha * dim..(alpha + 1) * dim];

        let mut report = GramReport::default();
        let (coeffs, degrees) = match options.mode {
            OrthoMode::RealSpan => {
                let mut basis: Vec<Column> = Vec::new();
                let mut degrees = Vec::new();
                for (alpha_pos, alpha) in table.indices().iter().enumerate() {
                    for blade in 0..dim {
                        let j = alpha_pos * dim + blade;
                        let mut samples = vec![0.0; n_nodes * dim];
                        let e = unit(dim, blade);
                        for n in 0..n_nodes {
                            products.mul_add(value_at(n, alpha_pos), &e, &mut samples[n * dim..(n + 1) * dim]);
                        }
                        let mut coeffs = vec![0.0; n_alpha * dim];
                        coeffs[j] = 1.0;
                        let mut col = Column { samples, coeffs };
                        let original = norm(&col.samples);
                        for _ in 0..2 {
                            for q in &basis {
                                let r = dot(&q.samples, &col.samples);
                                axpy(-r, &q.samples, &mut col.samples);
                                axpy(-r, &q.coeffs, &mut col.coeffs);
                            }
                        }
                        let remaining = norm(&col.samples);
                        if remaining < options.drop_tol * original || remaining == 0.0 {
                            report.dropped.push(j);
                            if report.dropped.len() > options.max_drops {
                                return Err(Error::RankDeficient {
                                    dropped: report.dropped.len(),
                                    budget: options.max_drops,
                                });
                            }
                            continue;
                        }
                        scale(1.0 / remaining, &mut col.samples);
                        scale(1.0 / remaining, &mut col.coeffs);
                        basis.push(col);
                        degrees.push(alpha.degree());
                    }
                }
                let mut max_res: f64 = 0.0;
                for (a, qa) in basis.iter().enumerate() {
                    for qb in &basis[a..] {
                        let g = dot(&qa.samples, &qb.samples);
                        let target = if std::ptr::eq(qa, qb) { 1.0 } else { 0.0 };
                        max_res = max_res.max((g - target).abs());
                    }
                }
                report.max_scalar_residual = max_res;
                (basis.into_iter().flat_map(|c| c.coeffs).collect(), degrees)
            }
            OrthoMode::CliffordModule => {
                let mut basis: Vec<Column> = Vec::new();
                let mut degrees = Vec::new();
                for (alpha_pos, alpha) in table.indices().iter().enumerate() {
                    let mut samples = vec![0.0; n_nodes * dim];
                    for n in 0..n_nodes {
                        samples[n * dim..(n + 1) * dim].copy_from_slice(value_at(n, alpha_pos));
                    }
                    let mut coeffs = vec![0.0; n_alpha * dim];
                    coeffs[alpha_pos * dim] = 1.0;
                    let mut col = Column { samples, coeffs };
                    let original = norm(&col.samples);
                    for _ in 0..2 {
                        for q in &basis {
                            let r = clifford_inner(&products, &q.samples, &col.samples, dim);
                            // col -= q r
                            let mut qr = vec![0.0; q.samples.len()];
                            right_mul_all(&products, &q.samples, &r, dim, &mut qr);
                            axpy(-1.0, &qr, &mut col.samples);
                            let mut cr = vec![0.0; q.coeffs.len()];
                            right_mul_all(&products, &q.coeffs, &r, dim, &mut cr);
                            axpy(-1.0, &cr, &mut col.coeffs);
                        }
                    }
                    let remaining = norm(&col.samples);
                    if remaining < options.drop_tol * original || remaining == 0.0 {
                        report.dropped.push(alpha_pos);
                        if report.dropped.len() > options.max_drops {
                            return Err(Error::RankDeficient { dropped: report.dropped.len(), budget: options.max_drops });
                        }
                        continue;
                    }
                    let nn = clifford_inner(&products, &col.samples, &col.samples, dim);
                    let nonscalar = nn[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                    if nonscalar > options.nonscalar_tol * nn[0] {
                        return Err(Error::NonScalarNorm { residual: nonscalar / nn[0] });
                    }
                    let s = 1.0 / nn[0].sqrt();
                    scale(s, &mut col.samples);
                    scale(s, &mut col.coeffs);
                    basis.push(col);
                    degrees.push(alpha.degree());
                }
                let (mut max_res, mut max_ns): (f64, f64) = (0.0, 0.0);
                for (a, qa) in basis.iter().enumerate() {
                    for (b, qb) in basis.iter().enumerate().skip(a) {
                        let g = clifford_inner(&products, &qa.samples, &qb.samples, dim);
                        let target = if a == b { 1.0 } else { 0.0 };
                        max_res = max_res.max((g[0] - target).abs());
                        max_ns = max_ns.max(g[1..].iter().map(|x| x * x).sum::<f64>().sqrt());
                    }
                }
                report.max_scalar_residual = max_res;
                report.max_nonscalar = max_ns;
                (basis.into_iter().flat_map(|c| c.coeffs).collect(), degrees)
            }
        };
        Ok(Self::assemble(sig, degree, options.mode, table, products, coeffs, degrees, report))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        sig: Signature,
        degree: u32,
        mode: OrthoMode,
        table: FueterTable,
        products: ProductTable,
        coeffs: Vec<f64>,
        degrees: Vec<u32>,
        gram: GramReport,
    ) -> Self {
        let dim = sig.dim();
        let n_alpha = table.len();
        let cols = n_alpha * dim;
        let mut eval_matrix = vec![0.0; degrees.len() * dim * cols];
        let mut prod = vec![0.0; dim];
        for k in 0..degrees.len() {
            for a in 0..n_alpha {
                let w = &coeffs[(k * n_alpha + a) * dim..(k * n_alpha + a + 1) * dim];
                for b in 0..dim {
                    prod.iter_mut().for_each(|x| *x = 0.0);
                    products.mul_add(&unit(dim, b), w, &mut prod);
                    for (r, v) in prod.iter().enumerate() {
                        eval_matrix[(k * dim + r) * cols + a * dim + b] = *v;
                    }
                }
            }
        }
        Self { sig, degree, mode, table, products, coeffs, degrees, gram, eval_matrix }
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn mode(&self) -> OrthoMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn gram_report(&self) -> &GramReport {
        &self.gram
    }

    /// Generator degree of each basis function.
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn fueter_indices(&self) -> &[FueterIndex] {
        self.table.indices()
    }

    /// `W_{α,k}` coefficients, flattened as `(k * n_alpha + α) * 2^m + blade`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `2^{-m}` in real-span mode, `1` in module mode.
    pub fn normalization(&self) -> f64 {
        match self.mode {
            OrthoMode::RealSpan => 1.0 / self.sig.dim() as f64,
            OrthoMode::CliffordModule => 1.0,
        }
    }

    /// `φ_k(z)` and `φ'_k(z) = D̄φ_k(z) = 2 ∂_0 φ_k(z)`.
    pub fn eval(&self, z: &Paravector<f64>) -> BasisValues {
        let fv = self.table.eval(z);
        let cols = fv.values.len();
        let rows = self.len() * self.sig.dim();
        let mut phi = vec![0.0; rows];
        let mut dphi = vec![0.0; rows];
        for (r, row) in self.eval_matrix.chunks_exact(cols).enumerate() {
            phi[r] = dot(row, &fv.values);
            dphi[r] = 2.0 * dot(row, &fv.d0);
        }
        BasisValues { phi, dphi }
    }

    /// `φ_k(z)` only.
    pub fn eval_values(&self, z: &Paravector<f64>) -> Vec<f64> {
        let fv = self.table.eval(z);
        let cols = fv.values.len();
        self.eval_matrix.chunks_exact(cols).map(|row| dot(row, &fv.values)).collect()
    }

    /// `n Σ_k a_k conj(b_k)` for flattened basis values.
    pub fn pair_sum(&self, a: &[f64], b: &[f64]) -> Multivector<f64> {
        let dim = self.sig.dim();
        let mut out = vec![0.0; dim];
        for k in 0..self.len() {
            self.products.mul_conj_add(&a[k * dim..(k + 1) * dim], &b[k * dim..(k + 1) * dim], &mut out);
        }
        let n = self.normalization();
        for x in out.iter_mut() {
            *x *= n;
        }
        Multivector::from_coeffs(self.sig, out).expect("dimension")
    }

    /// Cache file contents; coefficients in 17 significant digits.
    pub fn to_cache_string(&self, spec: &KernelSpec) -> String {
        let dim = self.sig.dim();
        let mut s = String::new();
        let _ = writeln!(s, "szego-kernel 1");
        let _ = writeln!(s, "key {}", spec.cache_key());
        let _ = writeln!(s, "m {}", self.sig.generators());
        let _ = writeln!(s, "degree {}", self.degree);
        let _ = writeln!(s, "mode {}", self.mode.name());
        let _ = writeln!(s, "surface {}", spec.surface.descriptor());
        let _ = writeln!(s, "quadrature gauss-product order {}", spec.quad_order);
        let _ = writeln!(s, "gram_residual {:.16e}", self.gram.max_scalar_residual);
        let _ = writeln!(s, "gram_nonscalar {:.16e}", self.gram.max_nonscalar);
        let dropped: Vec<String> = self.gram.dropped.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "dropped {}", dropped.join(","));
        let _ = writeln!(s, "functions {}", self.len());
        let _ = writeln!(s, "alphas {}", self.table.len());
        for (k, d) in self.degrees.iter().enumerate() {
            let row = &self.coeffs[k * self.table.len() * dim..(k + 1) * self.table.len() * dim];
            let nums: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(s, "{k} {d} {}", nums.join(" "));
        }
        s
    }

    /// Parses a cache file written for `spec`; fails if the key differs.
    pub fn from_cache_str(text: &str, spec: &KernelSpec) -> Result<Self> {
        let sig = spec.signature();
        let bad = |msg: &str| Error::CacheFormat(msg.to_string());
        let mut lines = text.lines();
        let mut header = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing {name}")))?;
            let rest = line.strip_prefix(name).ok_or_else(|| bad(&format!("expected {name}, got {line:?}")))?;
            Ok(rest.trim().to_string())
        };
        if header("szego-kernel")? != "1" {
            return Err(bad("unsupported version"));
        }
        let key = header("key")?;
        if key != spec.cache_key() {
            return Err(bad("cache key does not match the requested kernel"));
        }
        let m: usize = header("m")?.parse().map_err(|_| bad("m"))?;
        let degree: u32 = header("degree")?.parse().map_err(|_| bad("degree"))?;
        if m != sig.generators() || degree != spec.degree {
            return Err(bad("signature or degree mismatch"));
        }
        let mode = OrthoMode::parse(&header("mode")?)?;
        header("surface")?;
        header("quadrature")?;
        let max_scalar_residual = header("gram_residual")?.parse().map_err(|_| bad("gram_residual"))?;
        let max_nonscalar = header("gram_nonscalar")?.parse().map_err(|_| bad("gram_nonscalar"))?;
        let dropped_text = header("dropped")?;
        let dropped = if dropped_text.is_empty() {
            vec![]
        } else {
            dropped_text.split(',').map(|t| t.parse().map_err(|_| bad("dropped"))).collect::<Result<_>>()?
        };
        let functions: usize = header("functions")?.parse().map_err(|_| bad("functions"))?;
        let alphas: usize = header("alphas")?.parse().map_err(|_| bad("alphas"))?;
        let table = FueterTable::new(sig, degree);
        if alphas != table.len() {
            return Err(bad("index count mismatch"));
        }
        let dim = sig.dim();
        let mut coeffs = Vec::with_capacity(functions * alphas * dim);
        let mut degrees = Vec::with_capacity(functions);
        for k in 0..functions {
            let line = lines.next().ok_or_else(|| bad("truncated coefficient table"))?;
            let mut it = line.split_whitespace();
            let idx: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("row index"))?;
            if idx != k {
                return Err(bad("rows out of order"));
            }
            degrees.push(it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("row degree"))?);
            let row: Vec<f64> = it.map(|t| t.parse().map_err(|_| bad("coefficient"))).collect::<Result<_>>()?;
            if row.len() != alphas * dim {
                return Err(bad("row length"));
            }
            coeffs.extend(row);
        }
        Ok(Self::assemble(
            sig,
            degree,
            mode,
            table,
            ProductTable::new(sig),
            coeffs,
            degrees,
            GramReport { max_scalar_residual, max_nonscalar, dropped },
        ))
    }
}

fn unit(dim: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[k] = 1.0;
    e
}

/// Dot product with four independent accumulators; the summation order is fixed.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// `Σ_n conj(a_n) b_n` over blocks of length `dim`.
fn clifford_inner(products: &ProductTable, a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (x, y) in a.chunks_exact(dim).zip(b.chunks_exact(dim)) {
        products.conj_mul_add(x, y, &mut out);
    }
    out
}

fn right_mul_all(products: &ProductTable, a: &[f64], r: &[f64], dim: usize, out: &mut [f64]) {
    for (x, o) in a.chunks_exact(dim).zip(out.chunks_exact_mut(dim)) {
        products.mul_add(x, r, o);
    }
}

/// `⟨f, g⟩ = Σ_n w_n conj(f(x_n)) g(x_n)`.
pub fn hardy_inner_product(
    f: &dyn Fn(&Paravector<f64>) -> Result<Multivector<f64>>,
    g: &dyn Fn(&Paravector<f64>) -> Result<Multivector<f64>>,
    rule: &QuadratureRule,
) -> Result<Multivector<f64>> {
    let sig = rule.signature();
    let mut acc = Multivector::zero(sig);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += &(&f(x)?.conjugate() * &g(x)?).scale(w);
    }
    Ok(acc)
}

/// Kernel values on the diagonal: `K(z,z)`, `K_z(z,z)`, `K_z̄(z,z)`, `K_z̄z(z,z)`.
#[derive(Clone, Debug)]
pub struct Diagonal {
    pub k: Multivector<f64>,
    pub k_z: Multivector<f64>,
    pub k_zbar: Multivector<f64>,
    pub k_zbarz: Multivector<f64>,
}

/// Per-degree contributions `Σ ‖φ'_k(z)‖²` of the basis functions.
#[derive(Clone, Debug)]
pub struct TailReport {
    pub increments: Vec<f64>,
    /// `increments[d+1] / increments[d]`, `NaN` where the denominator vanishes.
    pub ratios: Vec<f64>,
}

/// Left factor, right factor and residual of the kernel transformation formula.
#[derive(Clone, Debug)]
pub struct TransformationResidual {
    pub lhs: Multivector<f64>,
    pub rhs: Multivector<f64>,
    pub residual: f64,
    /// `residual / |lhs|`.
    pub relative: f64,
    /// `residual / sqrt(K(z,z) K(ζ,ζ))`.
    pub diagonal_relative: f64,
}

/// A truncated Szegő kernel together with its defining data.
#[derive(Clone, Debug)]
pub struct TruncatedSzegoKernel {
    spec: KernelSpec,
    basis: HardyBasis,
    rule: QuadratureRule,
}

impl TruncatedSzegoKernel {
    pub fn build(spec: KernelSpec) -> Result<Self> {
        if spec.quad_order < 2 * spec.degree as usize {
            return Err(Error::InvalidArgument(format!(
                "quadrature order {} below 2N = {}",
                spec.quad_order,
                2 * spec.degree
            )));
        }
        let rule = spec.surface.quadrature(spec.quad_order)?;
        let basis = HardyBasis::orthonormalize(spec.signature(), spec.degree, &rule, spec.options)?;
        Ok(Self { spec, basis, rule })
    }

    /// Reassembles a kernel from a cache file written for the same spec.
    pub fn from_cache(spec: KernelSpec, text: &str) -> Result<Self> {
        let basis = HardyBasis::from_cache_str(text, &spec)?;
        let rule = spec.surface.quadrature(spec.quad_order)?;
        Ok(Self { spec, basis, rule })
    }

    pub fn to_cache_string(&self) -> String {
        self.basis.to_cache_string(&self.spec)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn basis(&self) -> &HardyBasis {
        &self.basis
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn surface(&self) -> &BoundarySurface {
        &self.spec.surface
    }

    pub fn signature(&self) -> Signature {
        self.spec.signature()
    }

    /// `K(z, w)`.
    pub fn eval(&self, z: &Paravector<f64>, w: &Paravector<f64>) -> Multivector<f64> {
        self.basis.pair_sum(&self.basis.eval_values(z), &self.basis.eval_values(w))
    }

    /// `(K_z, K_z̄, K_z̄z)` at `(z, w)`.
    pub fn derivatives(
        &self,
        z: &Paravector<f64>,
        w: &Paravector<f64>,
    ) -> (Multivector<f64>, Multivector<f64>, Multivector<f64>) {
        let a = self.basis.eval(z);
        let b = self.basis.eval(w);
        (
            self.basis.pair_sum(&a.dphi, &b.phi),
            self.basis.pair_sum(&a.phi, &b.dphi),
            self.basis.pair_sum(&a.dphi, &b.dphi),
        )
    }

    pub fn diagonal(&self, z: &Paravector<f64>) -> Diagonal {
        let a = self.basis.eval(z);
        Diagonal {
            k: self.basis.pair_sum(&a.phi, &a.phi),
            k_z: self.basis.pair_sum(&a.dphi, &a.phi),
            k_zbar: self.basis.pair_sum(&a.phi, &a.dphi),
            k_zbarz: self.basis.pair_sum(&a.dphi, &a.dphi),
        }
    }

    /// `K(z,z)` alone.
    pub fn diagonal_kernel(&self, z: &Paravector<f64>) -> Multivector<f64> {
        let phi = self.basis.eval_values(z);
        self.basis.pair_sum(&phi, &phi)
    }

    /// Scalar part of `K(z,z)`.
    pub fn diagonal_value(&self, z: &Paravector<f64>) -> f64 {
        // Sc(φ conj φ) = |φ|².
        let phi = self.basis.eval_values(z);
        dot(&phi, &phi) * self.basis.normalization()
    }

    /// `∫ K(z,w) f(w) dS_w` by the construction quadrature.
    pub fn reproduce(
        &self,
        f: &dyn Fn(&Paravector<f64>) -> Result<Multivector<f64>>,
        z: &Paravector<f64>,
    ) -> Result<Multivector<f64>> {
        self.reproduce_with(f, z, &self.rule)
    }

    pub fn reproduce_with(
        &self,
        f: &dyn Fn(&Paravector<f64>) -> Result<Multivector<f64>>,
        z: &Paravector<f64>,
        rule: &QuadratureRule,
    ) -> Result<Multivector<f64>> {
        let a = self.basis.eval_values(z);
        let mut acc = Multivector::zero(self.signature());
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let k = self.basis.pair_sum(&a, &self.basis.eval_values(x));
            acc += &(&k * &f(x)?).scale(w);
        }
        Ok(acc)
    }

    /// Block sums of `‖φ'_k(z)‖²` by generator degree, scaled like the kernel.
    pub fn tail_check(&self, z: &Paravector<f64>) -> TailReport {
        let dim = self.signature().dim();
        let a = self.basis.eval(z);
        let mut increments = vec![0.0; self.basis.degree() as usize + 1];
        for (k, d) in self.basis.degrees().iter().enumerate() {
            let c = &a.dphi[k * dim..(k + 1) * dim];
            increments[*d as usize] += dot(c, c) * self.basis.normalization();
        }
        let ratios = increments.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN }).collect();
        TailReport { increments, ratios }
    }
}

/// Residual of `K_G(z,ζ) = J(z) K_{G*}(z*,ζ*) J'(ζ)` with
/// `J(z) = conj(cz+d)/|cz+d|^{m+1}` and `J'(ζ) = (cζ+d)/|cζ+d|^{m+1}`, where
/// `G* = V(G)` and `z* = V(z)`.
pub fn transformation_residual(
    k_g: &TruncatedSzegoKernel,
    k_image: &TruncatedSzegoKernel,
    v: &VahlenMatrix<f64>,
    z: &Paravector<f64>,
    zeta: &Paravector<f64>,
) -> Result<TransformationResidual> {
    let m = k_g.signature().generators() as i32;
    let lhs = k_g.eval(z, zeta);
    let zs = v.apply(z)?;
    let zetas = v.apply(zeta)?;
    let left = v.automorphy_factor(z, m + 1)?;
    let den = v.denominator(zeta);
    let right = den.scale(&den.norm().powi(-(m + 1)));
    let rhs = &(&left * &k_image.eval(&zs, &zetas)) * &right;
    let residual = (&lhs - &rhs).norm();
    let diag = (k_g.diagonal_value(z) * k_g.diagonal_value(zeta)).sqrt();
    Ok(TransformationResidual { relative: residual / lhs.norm(), diagonal_relative: residual / diag, lhs, rhs, residual })
}

/// Non-scalar part of a multivector relative to its scalar part.
pub fn nonscalar_ratio(x: &Multivector<f64>) -> f64 {
    x.vector_rest().norm() / x.scalar_part().abs()
}

/// `a ā` for a multivector, used with diagonal derivative values.
pub fn times_conjugate(x: &Multivector<f64>) -> Multivector<f64> {
    x * &x.conjugate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sig(m: usize) -> Signature {
        Signature::new(m).unwrap()
    }

    fn ball_kernel(m: usize, n: u32) -> TruncatedSzegoKernel {
        let s = sig(m);
        TruncatedSzegoKernel::build(KernelSpec::new(BoundarySurface::unit_ball(s), n, 2 * n as usize + 2)).unwrap()
    }

    #[test]
    fn constant_normalization_and_origin_value() {
        let k = ball_kernel(2, 3);
        let z = Paravector::zero(sig(2));
        assert!((k.diagonal_value(&z) - 1.0 / (4.0 * PI)).abs() < 1e-13);
        let k1 = ball_kernel(1, 6);
        assert!((k1.diagonal_value(&Paravector::zero(sig(1))) - 1.0 / (2.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn gram_is_identity() {
        let k = ball_kernel(2, 4);
        assert!(k.basis().gram_report().max_scalar_residual < 1e-12);
        assert!(k.basis().gram_report().dropped.is_empty());
    }

    #[test]
    fn disk_kernel_matches_classical_formula() {
        let k = ball_kernel(1, 30);
        let z = Paravector::from_slice(&[0.3, -0.2]).unwrap();
        let w = Paravector::from_slice(&[-0.1, 0.4]).unwrap();
        // 1/(2π(1 − z w̄)) in complex form, mapped to x + y e_1.
        let (zr, zi) = (0.3, -0.2);
        let (wr, wi) = (-0.1, 0.4);
        let (pr, pi) = (zr * wr + zi * wi, zi * wr - zr * wi);
        let (dr, di) = (1.0 - pr, -pi);
        let n2 = dr * dr + di * di;
        let expected = [dr / n2 / (2.0 * PI), -di / n2 / (2.0 * PI)];
        let got = k.eval(&z, &w);
        assert!((got.coeffs()[0] - expected[0]).abs() < 1e-12, "{got:?} vs {expected:?}");
        assert!((got.coeffs()[1] - expected[1]).abs() < 1e-12, "{got:?} vs {expected:?}");
    }

    #[test]
    fn clifford_mode_agrees_with_real_mode() {
        let s = sig(2);
        let mut spec = KernelSpec::new(BoundarySurface::unit_ball(s), 4, 10);
        let real = TruncatedSzegoKernel::build(spec.clone()).unwrap();
        spec.options.mode = OrthoMode::CliffordModule;
        let module = TruncatedSzegoKernel::build(spec).unwrap();
        let z = Paravector::from_slice(&[0.2, -0.1, 0.3]).unwrap();
        let w = Paravector::from_slice(&[-0.3, 0.25, 0.1]).unwrap();
        assert!((&real.eval(&z, &w) - &module.eval(&z, &w)).norm() < 1e-12);
    }

    #[test]
    fn cache_round_trip() {
        let k = ball_kernel(2, 3);
        let text = k.to_cache_string();
        let back = TruncatedSzegoKernel::from_cache(k.spec().clone(), &text).unwrap();
        let z = Paravector::from_slice(&[0.1, 0.2, -0.3]).unwrap();
        assert_eq!(k.eval(&z, &z), back.eval(&z, &z));
        let mut other = k.spec().clone();
        other.degree = 4;
        other.quad_order = 10;
        assert!(matches!(TruncatedSzegoKernel::from_cache(other, &text), Err(Error::CacheFormat(_))));
    }
}
