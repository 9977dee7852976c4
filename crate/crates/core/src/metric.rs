//! The Szegő metric `λ(z) = K(z,z)`, its curvature and geodesic distance,
//! computable lower bounds for the Szegő–Carathéodory metric, and the
//! transformation checks relating both metrics across Möbius maps.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use petgraph::algo::{astar, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};
use rayon::prelude::*;

use crate::calculus::{FdScheme, FieldHandle, MultivectorPolynomial, Operator, Side};
use crate::clifford::{Multivector, Paravector, Signature};
use crate::error::{Error, Result};
use crate::mobius::{sphere_samples, VahlenMatrix};
use crate::monogenic::{shifted_fueter_variable, K2TestFunction};
use crate::quadrature::{gauss_legendre_on, graded_sphere_quadrature, BoundarySurface, QuadratureRule};
use crate::szego::{OrthoMode, TruncatedSzegoKernel};

/// Largest non-scalar part of `K(z,z)` accepted, relative to the scalar part.
pub const DIAGONAL_NONSCALAR_TOL: f64 = 1e-9;
/// Default step for finite differences of `log λ`.
pub const CURVATURE_STEP: f64 = 1e-3;

/// The Szegő metric of a truncated kernel.
#[derive(Clone, Debug)]
pub struct SzegoMetric {
    kernel: Arc<TruncatedSzegoKernel>,
}

/// Curvature `−Δ log λ / λ²` at step `h`, at `h/2`, and the Richardson value.
#[derive(Clone, Copy, Debug)]
pub struct Curvature {
    pub value: f64,
    pub half_step: f64,
    pub extrapolated: f64,
}

impl Curvature {
    pub fn stable_sign(&self) -> bool {
        self.value.signum() == self.half_step.signum() && self.value != 0.0
    }
}

/// The positivity quantity `K(K K_z̄z − K_z K_z̄)` on the diagonal, computed
/// directly and as `‖M‖²` with `M(w) = K_z̄(w,z) K − K(w,z) conj(K_z)`.
#[derive(Clone, Copy, Debug)]
pub struct DiagonalPositivity {
    pub direct: f64,
    pub direct_nonscalar: f64,
    pub norm_form: f64,
}

impl DiagonalPositivity {
    pub fn agreement(&self) -> f64 {
        (self.direct - self.norm_form).abs() / self.direct.abs().max(f64::MIN_POSITIVE)
    }
}

impl SzegoMetric {
    pub fn new(kernel: TruncatedSzegoKernel) -> Self {
        Self { kernel: Arc::new(kernel) }
    }

    pub fn kernel(&self) -> &TruncatedSzegoKernel {
        &self.kernel
    }

    pub fn surface(&self) -> &BoundarySurface {
        self.kernel.surface()
    }

    pub fn signature(&self) -> Signature {
        self.kernel.signature()
    }

    fn require_interior(&self, z: &Paravector<f64>) -> Result<()> {
        if self.surface().contains(z)? {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: z.comps().to_vec() })
        }
    }

    /// `λ(z)`, the scalar part of `K(z,z)`.
    pub fn lambda(&self, z: &Paravector<f64>) -> Result<f64> {
        self.require_interior(z)?;
        let k = self.kernel.diagonal_kernel(z);
        let s = k.scalar_part();
        let rest = k.vector_rest().norm();
        if rest > DIAGONAL_NONSCALAR_TOL * s.abs() {
            return Err(Error::NonScalarNorm { residual: rest / s.abs() });
        }
        Ok(s)
    }

    fn log_lambda_laplacian(&self, z: &Paravector<f64>, h: f64) -> Result<f64> {
        let dim = self.signature().paravector_dim();
        for i in 0..dim {
            for t in [h, -h] {
                let mut w = z.clone();
                w.comps_mut()[i] += t;
                self.require_interior(&w)?;
            }
        }
        let l = |w: &Paravector<f64>| self.kernel.diagonal_value(w).ln();
        let center = l(z);
        let mut sum = 0.0;
        for i in 0..dim {
            let mut p = z.clone();
            p.comps_mut()[i] += h;
            let mut q = z.clone();
            q.comps_mut()[i] -= h;
            sum += l(&p) + l(&q) - 2.0 * center;
        }
        Ok(sum / (h * h))
    }

    /// Gaussian curvature `−Δ(log λ)/λ²` by central differences.
    pub fn curvature(&self, z: &Paravector<f64>, h: f64) -> Result<Curvature> {
        let lam = self.lambda(z)?;
        let full = self.log_lambda_laplacian(z, h)?;
        let half = self.log_lambda_laplacian(z, h / 2.0)?;
        let scale = -1.0 / (lam * lam);
        Ok(Curvature { value: scale * full, half_step: scale * half, extrapolated: scale * (4.0 * half - full) / 3.0 })
    }

    /// `sqrt(Δ log K(z,z)²)`, the quantity bounded by the Carathéodory
    /// comparison, and the same expression without the root.
    pub fn lambda_star(&self, z: &Paravector<f64>, h: f64) -> Result<(f64, f64)> {
        self.require_interior(z)?;
        let lap = 2.0 * self.log_lambda_laplacian(z, h)?;
        Ok((lap.max(0.0).sqrt(), lap))
    }

    pub fn positivity(&self, z: &Paravector<f64>) -> Result<DiagonalPositivity> {
        self.require_interior(z)?;
        let d = self.kernel.diagonal(z);
        let k = d.k.scalar_part();
        let inner = &d.k_zbarz.scale(&k) - &(&d.k_z * &d.k_zbar);
        let direct = inner.scale(&k);
        let m_fn = kernel_combination(&self.kernel, z);
        let norm_form = squared_norm(&m_fn, self.kernel.rule())?;
        Ok(DiagonalPositivity { direct: direct.scalar_part(), direct_nonscalar: direct.vector_rest().norm(), norm_form })
    }

    /// `∫ λ |dz|` along the polyline, `gauss_points` per segment.
    pub fn path_length(&self, path: &PathPolyline, gauss_points: usize) -> Result<f64> {
        let mut total = 0.0;
        for seg in path.vertices.windows(2) {
            total += self.segment_length(&seg[0], &seg[1], gauss_points)?;
        }
        Ok(total)
    }

    fn segment_length(&self, a: &Paravector<f64>, b: &Paravector<f64>, gauss_points: usize) -> Result<f64> {
        let len = a.distance(b);
        if len == 0.0 {
            return Ok(0.0);
        }
        let (ts, ws) = gauss_legendre_on(gauss_points, 0.0, 1.0);
        let mut acc = 0.0;
        for (t, w) in ts.iter().zip(&ws) {
            let x = lerp(a, b, *t);
            acc += w * self.lambda(&x)?;
        }
        Ok(acc * len)
    }

    /// One row of a point scan.
    pub fn scan_row(&self, z: &Paravector<f64>, h: f64, family: &FamilySpec) -> Result<MetricRow> {
        Ok(MetricRow {
            point: z.comps().to_vec(),
            lambda: self.lambda(z)?,
            curvature: self.curvature(z, h)?.value,
            positivity: self.positivity(z)?.direct,
            caratheodory_lower: caratheodory_lower_bound(self, z, family)?.value,
        })
    }
}

/// `M(w) = K_z̄(w,z) K(z,z) − K(w,z) conj(K_z(z,z))`, which vanishes at `w = z`.
fn kernel_combination(
    kernel: &Arc<TruncatedSzegoKernel>,
    z: &Paravector<f64>,
) -> impl Fn(&Paravector<f64>) -> Result<Multivector<f64>> + Send + Sync + 'static {
    let basis_z = kernel.basis().eval(z);
    let d = kernel.diagonal(z);
    let k = d.k.scalar_part();
    let a_bar = d.k_z.conjugate();
    let kernel = kernel.clone();
    move |w| {
        let phi_w = kernel.basis().eval_values(w);
        let k_zbar_wz = kernel.basis().pair_sum(&phi_w, &basis_z.dphi);
        let k_wz = kernel.basis().pair_sum(&phi_w, &basis_z.phi);
        Ok(&k_zbar_wz.scale(&k) - &(&k_wz * &a_bar))
    }
}

fn lerp(a: &Paravector<f64>, b: &Paravector<f64>, t: f64) -> Paravector<f64> {
    a + &(b - a).scale(&t)
}

/// `Σ w |f|²` over a rule.
pub fn squared_norm(f: &dyn Fn(&Paravector<f64>) -> Result<Multivector<f64>>, rule: &QuadratureRule) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(x)?.norm_squared();
    }
    Ok(acc)
}

/// A point-scan record.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub point: Vec<f64>,
    pub lambda: f64,
    pub curvature: f64,
    pub positivity: f64,
    pub caratheodory_lower: f64,
}

/// An interior polyline with fixed endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPolyline {
    pub vertices: Vec<Paravector<f64>>,
}

impl PathPolyline {
    pub fn new(vertices: Vec<Paravector<f64>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidArgument("a path needs at least one vertex".into()));
        }
        Ok(Self { vertices })
    }

    pub fn segment(a: Paravector<f64>, b: Paravector<f64>) -> Self {
        Self { vertices: vec![a, b] }
    }

    /// Fails unless every vertex keeps `clearance` from the boundary sphere.
    pub fn check_clearance(&self, surface: &BoundarySurface, clearance: f64) -> Result<()> {
        for v in &self.vertices {
            if clearance_of(surface, v)? < clearance {
                return Err(Error::OutsideDomain { point: v.comps().to_vec() });
            }
        }
        Ok(())
    }

    pub fn reversed(&self) -> Self {
        Self { vertices: self.vertices.iter().rev().cloned().collect() }
    }

    pub fn euclidean_length(&self) -> f64 {
        self.vertices.windows(2).map(|s| s[0].distance(&s[1])).sum()
    }
}

/// Euclidean distance from `z` to the boundary sphere, negative outside.
pub fn clearance_of(surface: &BoundarySurface, z: &Paravector<f64>) -> Result<f64> {
    let (c, r) = surface.sphere()?;
    Ok(r - z.distance(&c))
}

/// Lattice used by the distance engine.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub step: f64,
    /// Boundary clearance in units of `step`.
    pub clearance_steps: f64,
    /// Smoothing sweeps applied to the graph path.
    pub smoothing_passes: usize,
    /// Gauss points per segment for path lengths.
    pub gauss_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { step: 0.1, clearance_steps: 2.0, smoothing_passes: 40, gauss_points: 4 }
    }
}

/// Result of a distance query.
#[derive(Clone, Debug)]
pub struct DistanceResult {
    /// The reported upper bound for the distance.
    pub value: f64,
    /// Shortest graph path with midpoint edge weights.
    pub graph_length: f64,
    pub smoothed_length: f64,
    pub straight_length: f64,
    pub path: PathPolyline,
}

/// Interior lattice graph with `λ(midpoint)·length` edge weights over the
/// full `3^{m+1} − 1` neighbour stencil.
#[derive(Clone, Debug)]
pub struct DistanceGrid {
    metric: SzegoMetric,
    spec: GridSpec,
    center: Paravector<f64>,
    nodes: Vec<Paravector<f64>>,
    lattice: HashMap<Vec<i64>, NodeIndex>,
    graph: UnGraph<(), f64>,
}

fn offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|v| (-1..=1).map(move |d| [v.clone(), vec![d]].concat())).collect();
    }
    out.retain(|v| v.iter().any(|&d| d != 0));
    out
}

impl DistanceGrid {
    pub fn build(metric: &SzegoMetric, spec: GridSpec) -> Result<Self> {
        if !(spec.step > 0.0) {
            return Err(Error::InvalidArgument("grid step must be positive".into()));
        }
        let surface = metric.surface();
        let (center, radius) = surface.sphere()?;
        let clearance = spec.clearance_steps * spec.step;
        let dim = metric.signature().paravector_dim();
        let reach = ((radius - clearance) / spec.step).floor() as i64;
        if reach < 1 {
            return Err(Error::InvalidArgument("grid step too coarse for the domain".into()));
        }
        let mut graph = UnGraph::<(), f64>::new_undirected();
        let mut lattice = HashMap::new();
        let mut nodes = Vec::new();
        let mut keys: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..dim {
            keys = keys.into_iter().flat_map(|v| (-reach..=reach).map(move |k| [v.clone(), vec![k]].concat())).collect();
        }
        for key in keys {
            let x = Self::point_of(&center, spec.step, &key);
            if clearance_of(surface, &x)? >= clearance {
                let idx = graph.add_node(());
                lattice.insert(key, idx);
                nodes.push(x);
            }
        }
        let stencil: Vec<Vec<i64>> = offsets(dim).into_iter().filter(|o| o.iter().find(|&&d| d != 0) == Some(&1)).collect();
        let mut pairs = Vec::new();
        let mut keys: Vec<(&Vec<i64>, &NodeIndex)> = lattice.iter().collect();
        keys.sort();
        for (key, &a) in keys {
            for o in &stencil {
                let nb: Vec<i64> = key.iter().zip(o).map(|(k, d)| k + d).collect();
                if let Some(&b) = lattice.get(&nb) {
                    pairs.push((a, b));
                }
            }
        }
        let weights: Vec<f64> = pairs
            .par_iter()
            .map(|(a, b)| {
                let (x, y) = (&nodes[a.index()], &nodes[b.index()]);
                metric.lambda(&lerp(x, y, 0.5)).map(|l| l * x.distance(y))
            })
            .collect::<Result<_>>()?;
        for ((a, b), w) in pairs.into_iter().zip(weights) {
            graph.add_edge(a, b, w);
        }
        Ok(Self { metric: metric.clone(), spec, center, nodes, lattice, graph })
    }

    fn point_of(center: &Paravector<f64>, step: f64, key: &[i64]) -> Paravector<f64> {
        let comps = center.comps().iter().zip(key).map(|(c, k)| c + step * *k as f64).collect();
        Paravector::new(comps).expect("lattice dimension")
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn node(&self, i: usize) -> &Paravector<f64> {
        &self.nodes[i]
    }

    /// Graph distance between two lattice nodes.
    pub fn node_distance(&self, a: usize, b: usize) -> Result<f64> {
        let (a, b) = (a.min(b), a.max(b));
        let n = self.nodes.len();
        if b >= n {
            return Err(Error::InvalidArgument(format!("node {b} out of range ({n} nodes)")));
        }
        let target = NodeIndex::new(b);
        astar(&self.graph, NodeIndex::new(a), |v| v == target, |e| *e.weight(), |_| 0.0)
            .map(|(c, _)| c)
            .ok_or_else(|| Error::InvalidArgument("lattice is disconnected".into()))
    }

    /// Distance upper bound between interior points with its witness path.
    pub fn distance(&self, z1: &Paravector<f64>, z2: &Paravector<f64>) -> Result<DistanceResult> {
        let swap = z2.comps().partial_cmp(z1.comps()) == Some(std::cmp::Ordering::Less);
        let (a, b) = if swap { (z2, z1) } else { (z1, z2) };
        let mut out = self.distance_ordered(a, b)?;
        if swap {
            out.path = out.path.reversed();
        }
        Ok(out)
    }

    fn attachments(&self, z: &Paravector<f64>) -> Vec<NodeIndex> {
        let rel: Vec<f64> =
            z.comps().iter().zip(self.center.comps()).map(|(x, c)| (x - c) / self.spec.step).collect();
        let mut keys: Vec<Vec<i64>> = vec![vec![]];
        for r in &rel {
            let (lo, hi) = (r.floor() as i64, r.ceil() as i64);
            keys = keys.into_iter().flat_map(|v| (lo - 1..=hi + 1).map(move |k| [v.clone(), vec![k]].concat())).collect();
        }
        let mut found: Vec<NodeIndex> = keys
            .iter()
            .filter(|k| k.iter().zip(&rel).all(|(k, r)| (*k as f64 - r).abs() <= 1.0))
            .filter_map(|k| self.lattice.get(k).copied())
            .collect();
        found.sort();
        found
    }

    fn distance_ordered(&self, z1: &Paravector<f64>, z2: &Paravector<f64>) -> Result<DistanceResult> {
        let surface = self.metric.surface();
        for z in [z1, z2] {
            if clearance_of(surface, z)? <= 0.0 {
                return Err(Error::OutsideDomain { point: z.comps().to_vec() });
            }
        }
        let gp = self.spec.gauss_points;
        let straight = PathPolyline::segment(z1.clone(), z2.clone());
        let straight_length = self.metric.path_length(&straight, gp * 8)?;
        if z1 == z2 {
            return Ok(DistanceResult {
                value: 0.0,
                graph_length: 0.0,
                smoothed_length: 0.0,
                straight_length: 0.0,
                path: PathPolyline::new(vec![z1.clone()])?,
            });
        }
        let mut graph = self.graph.clone();
        let mut points = self.nodes.clone();
        let s = graph.add_node(());
        points.push(z1.clone());
        let t = graph.add_node(());
        points.push(z2.clone());
        for (node, z) in [(s, z1), (t, z2)] {
            for nb in self.attachments(z) {
                let y = &self.nodes[nb.index()];
                let w = self.metric.lambda(&lerp(z, y, 0.5))? * z.distance(y);
                graph.add_edge(node, nb, w);
            }
        }
        if z1.comps().iter().zip(z2.comps()).all(|(a, b)| (a - b).abs() <= self.spec.step) {
            let w = self.metric.lambda(&lerp(z1, z2, 0.5))? * z1.distance(z2);
            graph.add_edge(s, t, w);
        }
        let (graph_length, route) = astar(&graph, s, |v| v == t, |e| *e.weight(), |_| 0.0)
            .ok_or_else(|| Error::OutsideDomain { point: z1.comps().to_vec() })?;
        let mut path = PathPolyline::new(route.iter().map(|i| points[i.index()].clone()).collect())?;
        let smoothed_length = self.smooth(&mut path)?;
        let (value, path) =
            if straight_length <= smoothed_length { (straight_length, straight) } else { (smoothed_length, path) };
        Ok(DistanceResult { value, graph_length, smoothed_length, straight_length, path })
    }

    /// Moves interior vertices toward the midpoint of their neighbours and
    /// drops vertices whose removal shortens the path; returns the length.
    fn smooth(&self, path: &mut PathPolyline) -> Result<f64> {
        let gp = self.spec.gauss_points;
        let surface = self.metric.surface();
        let clearance = self.spec.clearance_steps * self.spec.step * 0.5;
        let local = |p: &Paravector<f64>, v: &Paravector<f64>, n: &Paravector<f64>| -> Result<f64> {
            Ok(self.metric.segment_length(p, v, gp)? + self.metric.segment_length(v, n, gp)?)
        };
        for _ in 0..self.spec.smoothing_passes {
            let mut improved = false;
            let mut i = 1;
            while i + 1 < path.vertices.len() {
                let (p, v, n) = (&path.vertices[i - 1], &path.vertices[i], &path.vertices[i + 1]);
                let current = local(p, v, n)?;
                let direct = self.metric.segment_length(p, n, gp)?;
                if direct < current {
                    path.vertices.remove(i);
                    improved = true;
                    continue;
                }
                let target = lerp(p, n, 0.5);
                let candidate = lerp(v, &target, 0.5);
                if clearance_of(surface, &candidate)? >= clearance && local(p, &candidate, n)? < current {
                    path.vertices[i] = candidate;
                    improved = true;
                }
                i += 1;
            }
            if !improved {
                break;
            }
        }
        self.metric.path_length(path, gp)
    }
}

/// Pairwise distances among a set of points, taken in one graph that holds
/// the lattice, the points, straight segments between every pair of points
/// and the smoothed witness path of every pair.
///
/// Shortest paths in a single graph form a metric, so the matrix satisfies
/// the triangle inequality and never exceeds the straight-segment lengths.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    pub points: Vec<Paravector<f64>>,
    pub values: Vec<Vec<f64>>,
    /// Per-pair results of [`DistanceGrid::distance`] for comparison.
    pub pairwise: Vec<Vec<f64>>,
    pub straight: Vec<Vec<f64>>,
}

impl DistanceGrid {
    pub fn distance_matrix(&self, points: &[Paravector<f64>]) -> Result<DistanceMatrix> {
        let n = points.len();
        let gp = self.spec.gauss_points;
        let mut graph = self.graph.clone();
        let ids: Vec<NodeIndex> = points.iter().map(|_| graph.add_node(())).collect();
        for (node, z) in ids.iter().zip(points) {
            if clearance_of(self.metric.surface(), z)? <= 0.0 {
                return Err(Error::OutsideDomain { point: z.comps().to_vec() });
            }
            for nb in self.attachments(z) {
                let y = &self.nodes[nb.index()];
                graph.add_edge(*node, nb, self.metric.segment_length(z, y, gp)?);
            }
        }
        let mut pairwise = vec![vec![0.0; n]; n];
        let mut straight = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(&points[i], &points[j])?;
                pairwise[i][j] = d.value;
                pairwise[j][i] = d.value;
                straight[i][j] = d.straight_length;
                straight[j][i] = d.straight_length;
                graph.add_edge(ids[i], ids[j], d.straight_length);
                let v = &d.path.vertices;
                if v.len() > 2 {
                    let mut prev = ids[i];
                    let oriented = if v[0] == points[i] { v.clone() } else { v.iter().rev().cloned().collect() };
                    for k in 1..oriented.len() {
                        let next = if k + 1 == oriented.len() { ids[j] } else { graph.add_node(()) };
                        graph.add_edge(prev, next, self.metric.segment_length(&oriented[k - 1], &oriented[k], gp)?);
                        prev = next;
                    }
                }
            }
        }
        let mut values = vec![vec![0.0; n]; n];
        for i in 0..n {
            let costs = dijkstra(&graph, ids[i], None, |e| *e.weight());
            for j in i + 1..n {
                let d = *costs.get(&ids[j]).ok_or_else(|| Error::InvalidArgument("lattice is disconnected".into()))?;
                values[i][j] = d;
                values[j][i] = d;
            }
        }
        Ok(DistanceMatrix { points: points.to_vec(), values, pairwise, straight })
    }
}

/// Candidates used for the Carathéodory lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    /// Shifted Fueter variables `𝔷_i − 𝔷_i(z)`.
    pub fueter: bool,
    /// Best function in the truncated Hardy space vanishing at `z`.
    pub truncated_span: bool,
    /// The kernel combination `M(w) = K_z̄(w,z)K(z,z) − K(w,z)conj(K_z(z,z))`.
    pub kernel_candidate: bool,
    /// Directions for `𝔎₂` poles: the nearest-boundary direction plus a
    /// cube grid with this many subdivisions per edge (0 keeps only the nearest).
    pub k2_grid: Option<usize>,
    /// Pole offsets beyond the boundary in units of the boundary distance of `z`.
    pub k2_offsets: Vec<f64>,
    pub graded: GradedSpec,
}

/// Graded quadrature used for norms of candidates with a nearby pole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradedSpec {
    pub per_panel: usize,
    pub azimuthal_order: usize,
}

impl Default for GradedSpec {
    fn default() -> Self {
        Self { per_panel: 10, azimuthal_order: 24 }
    }
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            fueter: true,
            truncated_span: true,
            kernel_candidate: true,
            k2_grid: Some(1),
            k2_offsets: vec![0.5, 1.0, 2.0, 4.0],
            graded: GradedSpec::default(),
        }
    }
}

/// How a candidate was built.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    FueterShift { i: usize },
    TruncatedSpan { coefficients: Vec<f64> },
    KernelCombination,
    K2 { pole: Vec<f64> },
}

impl Witness {
    pub fn describe(&self) -> String {
        match self {
            Self::FueterShift { i } => format!("shifted Fueter variable z_{i}"),
            Self::TruncatedSpan { coefficients } => {
                format!("optimal truncated-span function ({} coefficients)", coefficients.len())
            }
            Self::KernelCombination => "kernel combination K_zbar(w,z)K(z,z) - K(w,z)conj(K_z(z,z))".into(),
            Self::K2 { pole } => format!("K2 test function with pole {pole:?}"),
        }
    }
}

/// One evaluated candidate `|D̄f(z)| / ‖f‖`.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub witness: Witness,
    pub dbar_norm: f64,
    pub norm: f64,
    pub value: f64,
    field: FieldHandle,
}

impl Candidate {
    pub fn field(&self) -> &FieldHandle {
        &self.field
    }
}

/// Lower bound for the Szegő–Carathéodory metric at a point.
#[derive(Clone, Debug)]
pub struct CaratheodoryEstimate {
    pub value: f64,
    pub witness: Witness,
    pub candidates: Vec<Candidate>,
}

impl CaratheodoryEstimate {
    pub fn best(&self) -> &Candidate {
        self.candidates
            .iter()
            .find(|c| c.value == self.value)
            .expect("the estimate is attained by a candidate")
    }
}

/// Graded rule on the boundary sphere clustered at the point nearest `focus`.
pub fn graded_rule_toward(surface: &BoundarySurface, focus: &Paravector<f64>, spec: GradedSpec) -> Result<QuadratureRule> {
    let (c, r) = surface.sphere()?;
    let axis = focus - &c;
    let n = axis.norm();
    if n == 0.0 {
        return surface.quadrature(spec.azimuthal_order);
    }
    let gap = (n - r).abs() / r;
    let h0 = (0.25 * gap).clamp(1e-6, 0.5);
    Ok(graded_sphere_quadrature(surface.signature(), &axis, h0, spec.per_panel, spec.azimuthal_order)?.affine(&c, r))
}

/// Evaluates `|D̄f(z)|/‖f‖` for the family and returns the largest value.
pub fn caratheodory_lower_bound(
    metric: &SzegoMetric,
    z: &Paravector<f64>,
    family: &FamilySpec,
) -> Result<CaratheodoryEstimate> {
    metric.require_interior(z)?;
    let sig = metric.signature();
    let surface = metric.surface().clone();
    let rule = metric.kernel().rule();
    let mut candidates = Vec::new();

    if family.fueter {
        for i in 1..=sig.generators() {
            let poly: MultivectorPolynomial<f64> = shifted_fueter_variable(i, z);
            let dbar = poly.dirac(Operator::Dbar, Side::Left).eval(z)?;
            let field = FieldHandle::from_polynomial(&poly);
            let norm = squared_norm(&|x| poly.eval(x), rule)?.sqrt();
            candidates.push(make_candidate(Witness::FueterShift { i }, dbar.norm(), norm, field));
        }
    }

    if family.truncated_span {
        candidates.push(span_candidate(metric, z)?);
    }

    if family.kernel_candidate {
        let d = metric.kernel().diagonal(z);
        let k = d.k.scalar_part();
        let dbar = &d.k_zbarz.scale(&k) - &(&d.k_z * &d.k_z.conjugate());
        let f = kernel_combination(&metric.kernel, z);
        let norm = squared_norm(&f, rule)?.sqrt();
        let field = FieldHandle::new(sig, f, |_| true);
        candidates.push(make_candidate(Witness::KernelCombination, dbar.norm(), norm, field));
    }

    if let Some(per_edge) = family.k2_grid {
        let (c, r) = surface.sphere()?;
        let rel = z - &c;
        let delta = r - rel.norm();
        let nearest = if rel.norm() > 0.0 { rel.scale(&(1.0 / rel.norm())) } else { Paravector::unit(sig, 0) };
        let mut dirs = vec![nearest.comps().to_vec()];
        if per_edge > 0 {
            dirs.extend(sphere_samples(sig.generators(), per_edge));
        }
        for u in dirs {
            let u = Paravector::new(u)?;
            let boundary = &c + &u.scale(&r);
            let gap = z.distance(&boundary).max(delta);
            for t in &family.k2_offsets {
                let pole = &boundary + &u.scale(&(t * gap));
                candidates.push(k2_candidate(&surface, &pole, z, family.graded)?);
            }
        }
    }

    if candidates.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let best = candidates
        .iter()
        .filter(|c| c.value.is_finite())
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or(Error::EmptyFamily)?;
    Ok(CaratheodoryEstimate { value: best.value, witness: best.witness.clone(), candidates })
}

fn make_candidate(witness: Witness, dbar_norm: f64, norm: f64, field: FieldHandle) -> Candidate {
    let value = if norm > 0.0 { dbar_norm / norm } else { 0.0 };
    Candidate { witness, dbar_norm, norm, value, field }
}

/// `𝔎₂` candidate vanishing at `z` with its norm on a rule graded toward the pole.
pub fn k2_candidate(
    surface: &BoundarySurface,
    pole: &Paravector<f64>,
    z: &Paravector<f64>,
    graded: GradedSpec,
) -> Result<Candidate> {
    let f = K2TestFunction::new(pole.clone(), z.clone())?;
    let dbar = f.dbar(z)?;
    let rule = graded_rule_toward(surface, pole, graded)?;
    let norm = squared_norm(&|x| f.eval(x), &rule)?.sqrt();
    Ok(make_candidate(Witness::K2 { pole: pole.comps().to_vec() }, dbar.norm(), norm, f.field()))
}

/// Maximises `|D̄f(z)|` over unit-norm `f` in the truncated space with `f(z) = 0`.
fn span_candidate(metric: &SzegoMetric, z: &Paravector<f64>) -> Result<Candidate> {
    let kernel = metric.kernel.clone();
    let basis = kernel.basis();
    let sig = metric.signature();
    let dim = sig.dim();
    let values = basis.eval(z);
    // Real columns: φ_k in real-span mode, φ_k e_B in module mode.
    let blades: Vec<usize> = match basis.mode() {
        OrthoMode::RealSpan => vec![0],
        OrthoMode::CliffordModule => (0..dim).collect(),
    };
    let cols = basis.len() * blades.len();
    let column = |src: &[f64], k: usize, b: usize| -> Vec<f64> {
        let phi = Multivector::from_coeffs(sig, src[k * dim..(k + 1) * dim].to_vec()).expect("dimension");
        (&phi * &Multivector::blade(sig, b)).coeffs().to_vec()
    };
    let mut p = DMatrix::<f64>::zeros(dim, cols);
    let mut l = DMatrix::<f64>::zeros(dim, cols);
    for k in 0..basis.len() {
        for (j, &b) in blades.iter().enumerate() {
            let c = k * blades.len() + j;
            for (r, v) in column(&values.phi, k, b).into_iter().enumerate() {
                p[(r, c)] = v;
            }
            for (r, v) in column(&values.dphi, k, b).into_iter().enumerate() {
                l[(r, c)] = v;
            }
        }
    }
    let ppt = &p * p.transpose();
    let ppt_inv = ppt.pseudo_inverse(1e-14).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let projector = DMatrix::<f64>::identity(cols, cols) - p.transpose() * ppt_inv * &p;
    let b = &l * &projector;
    let svd = b.clone().svd(false, true);
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, s)| (i, *s))
        .ok_or(Error::EmptyFamily)?;
    let v_t = svd.v_t.ok_or_else(|| Error::InvalidArgument("singular vectors unavailable".into()))?;
    let coeffs: Vec<f64> = (&projector * v_t.row(idx).transpose()).iter().copied().collect();
    let coeff_norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
    let coeffs: Vec<f64> = coeffs.iter().map(|x| x / coeff_norm).collect();
    let cb = coeffs.clone();
    let blades_c = blades.clone();
    let field = FieldHandle::new(
        sig,
        move |w| {
            let vals = kernel.basis().eval_values(w);
            let mut out = Multivector::zero(sig);
            for k in 0..kernel.basis().len() {
                let phi = Multivector::from_coeffs(sig, vals[k * dim..(k + 1) * dim].to_vec())?;
                for (j, &bl) in blades_c.iter().enumerate() {
                    let c = cb[k * blades_c.len() + j];
                    if c != 0.0 {
                        out += &(&phi * &Multivector::blade(sig, bl).scale(&c));
                    }
                }
            }
            Ok(out)
        },
        |_| true,
    );
    let dbar_norm = (&b * DMatrix::from_column_slice(cols, 1, &coeffs)).norm();
    let _ = sigma;
    Ok(Candidate { witness: Witness::TruncatedSpan { coefficients: coeffs }, dbar_norm, norm: 1.0, value: dbar_norm, field })
}

/// `sqrt((K K_z̄z − K_z conj(K_z)) / K)` on the diagonal: the supremum over the
/// truncated space.
pub fn truncated_supremum(metric: &SzegoMetric, z: &Paravector<f64>) -> Result<f64> {
    let d = metric.kernel().diagonal(z);
    let k = d.k.scalar_part();
    let q = &d.k_zbarz.scale(&k) - &(&d.k_z * &d.k_z.conjugate());
    Ok((q.scalar_part() / k).max(0.0).sqrt())
}

/// Comparison of `λ`, `λ*` and the Carathéodory lower bound at a point.
#[derive(Clone, Debug)]
pub struct MetricComparison {
    pub lambda: f64,
    pub lambda_star: f64,
    /// `Δ log K²` without the square root.
    pub lambda_star_unrooted: f64,
    pub caratheodory: f64,
    pub lambda_dominates: bool,
    pub lambda_star_dominates: bool,
}

pub fn metric_comparison(
    metric: &SzegoMetric,
    z: &Paravector<f64>,
    family: &FamilySpec,
    h: f64,
    tol: f64,
) -> Result<MetricComparison> {
    let lambda = metric.lambda(z)?;
    let (lambda_star, unrooted) = metric.lambda_star(z, h)?;
    let caratheodory = caratheodory_lower_bound(metric, z, family)?.value;
    Ok(MetricComparison {
        lambda,
        lambda_star,
        lambda_star_unrooted: unrooted,
        caratheodory,
        lambda_dominates: lambda >= caratheodory - tol,
        lambda_star_dominates: lambda_star >= caratheodory - tol,
    })
}

/// Log-log slope of the `𝔎₂` lower bound approaching the boundary.
#[derive(Clone, Debug)]
pub struct BlowupReport {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub monotone: bool,
}

/// Evaluates the `𝔎₂` bound at `z = c + (r − δ) u` with the pole at distance
/// `2δ` from `z` along `u`.
pub fn blowup_scan(
    surface: &BoundarySurface,
    direction: &Paravector<f64>,
    deltas: &[f64],
    graded: GradedSpec,
) -> Result<BlowupReport> {
    if deltas.len() < 2 {
        return Err(Error::InvalidArgument("a slope needs at least two distances".into()));
    }
    let (c, r) = surface.sphere()?;
    let n = direction.norm();
    if n == 0.0 {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let u = direction.scale(&(1.0 / n));
    let values: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            let z = &c + &u.scale(&(r - d));
            let pole = &c + &u.scale(&(r + d));
            k2_candidate(surface, &pole, &z, graded).map(|k| k.value)
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let monotone = order.windows(2).all(|w| values[w[1]] > values[w[0]]);
    Ok(BlowupReport { deltas: deltas.to_vec(), values, slope, monotone })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// How the derivative in the intertwining identity is taken.
#[derive(Clone, Copy, Debug)]
pub enum Differentiation {
    /// Exact polynomial expansion; translations only.
    Exact,
    FiniteDifference(FdScheme),
}

/// Which side the weight and the operator act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntertwiningForm {
    /// `|D̄(A_p f∘V)(z)| = |A_{p+2}(z) (D̄f)(V z)|` with `A_p = conj(cz+d)/|cz+d|^p`.
    LeftConjugate,
    /// `|(f∘V B_p) D̄ (z)| = |(f D̄)(V z) B_{p+2}(z)|` with `B_p = (cz+d)/|cz+d|^p`.
    RightPlain,
}

impl IntertwiningForm {
    pub const ALL: [Self; 2] = [Self::LeftConjugate, Self::RightPlain];

    pub fn name(&self) -> &'static str {
        match self {
            Self::LeftConjugate => "left-conjugate",
            Self::RightPlain => "right-plain",
        }
    }

    fn side(&self) -> Side {
        match self {
            Self::LeftConjugate => Side::Left,
            Self::RightPlain => Side::Right,
        }
    }

    fn weight(&self, v: &VahlenMatrix<f64>, z: &Paravector<f64>, p: i32) -> Result<Multivector<f64>> {
        match self {
            Self::LeftConjugate => v.automorphy_factor(z, p),
            Self::RightPlain => {
                let q = v.denominator(z);
                Ok(q.scale(&q.norm().powi(-p)))
            }
        }
    }

    fn attach(&self, w: &Multivector<f64>, f: &Multivector<f64>) -> Multivector<f64> {
        match self {
            Self::LeftConjugate => w * f,
            Self::RightPlain => f * w,
        }
    }
}

/// Both sides of the intertwining identity for `f` shifted to vanish at `V z`.
#[derive(Clone, Copy, Debug)]
pub struct IntertwiningReport {
    pub form: IntertwiningForm,
    pub exponent: i32,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IntertwiningReport {
    pub fn relative(&self) -> f64 {
        self.residual / self.rhs.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn intertwining_residual(
    v: &VahlenMatrix<f64>,
    f: &MultivectorPolynomial<f64>,
    z: &Paravector<f64>,
    p: i32,
    form: IntertwiningForm,
    mode: Differentiation,
) -> Result<IntertwiningReport> {
    let sig = f.signature();
    let side = form.side();
    let vz = v.apply(z)?;
    let f0 = f - &MultivectorPolynomial::constant(f.eval(&vz)?);
    let dbar_f = f0.dirac(Operator::Dbar, side);
    let rhs = form.attach(&form.weight(v, z, p + 2)?, &dbar_f.eval(&vz)?).norm();
    let lhs = match mode {
        Differentiation::Exact => {
            let one = Multivector::one(sig);
            let is_translation = v.c.is_zero() && v.a == one && v.d == one;
            if !is_translation {
                return Err(Error::InvalidArgument("exact differentiation supports translations only".into()));
            }
            let shift = v.b.to_paravector_within(0.0)?;
            f0.translated(&shift)?.dirac(Operator::Dbar, side).eval(z)?.norm()
        }
        Differentiation::FiniteDifference(scheme) => {
            let vv = v.clone();
            let g = FieldHandle::new(
                sig,
                move |x| Ok(form.attach(&form.weight(&vv, x, p)?, &f0.eval(&vv.apply(x)?)?)),
                |_| true,
            );
            g.dirac(z, Operator::Dbar, side, scheme)?.norm()
        }
    };
    Ok(IntertwiningReport { form, exponent: p, lhs, rhs, residual: (lhs - rhs).abs() })
}

/// `|A_m(z)| d̂^{target}(V z)` against `d̂^{source}(z)` where the source family
/// contains the pull-backs `A_{m+1}(·) f(V ·)` of the target candidates.
#[derive(Clone, Debug)]
pub struct TransformCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|cz+d|`.
    pub modulus: f64,
    /// `d̂^{target}(V z)`.
    pub target_value: f64,
    /// Best pulled-back candidate on the source domain.
    pub pulled_back: f64,
    /// `lhs ≤ rhs + tol`.
    pub holds: bool,
    /// `|cz+d|^{-(m+2)} d̂^{target}(V z)`, the weight matching the pulled-back family.
    pub matched_lhs: f64,
    pub matched_holds: bool,
}

pub fn caratheodory_transform_check(
    source: &SzegoMetric,
    target: &SzegoMetric,
    v: &VahlenMatrix<f64>,
    z: &Paravector<f64>,
    family: &FamilySpec,
    scheme: FdScheme,
    tol: f64,
) -> Result<TransformCheck> {
    let m = source.signature().generators() as i32;
    let vz = v.apply(z)?;
    let tgt = caratheodory_lower_bound(target, &vz, family)?;
    let modulus = v.denominator(z).norm();
    let lhs = v.automorphy_factor(z, m)?.norm() * tgt.value;
    let native = caratheodory_lower_bound(source, z, family)?.value;
    let rule = source.kernel().rule();
    let mut pulled_back: f64 = 0.0;
    for cand in &tgt.candidates {
        let f = cand.field().clone();
        let vv = v.clone();
        let g = FieldHandle::new(
            source.signature(),
            move |x| Ok(&vv.automorphy_factor(x, m + 1)? * &f.eval(&vv.apply(x)?)?),
            |_| true,
        );
        let dbar = g.dirac(z, Operator::Dbar, Side::Left, scheme)?.norm();
        let norm = match &cand.witness {
            Witness::K2 { pole } => {
                let pole = v.inverse().apply(&Paravector::new(pole.clone())?)?;
                let graded = graded_rule_toward(source.surface(), &pole, family.graded)?;
                squared_norm(&|x| g.eval(x), &graded)?.sqrt()
            }
            _ => squared_norm(&|x| g.eval(x), rule)?.sqrt(),
        };
        if norm > 0.0 {
            pulled_back = pulled_back.max(dbar / norm);
        }
    }
    let rhs = native.max(pulled_back);
    let matched_lhs = modulus.powi(-(m + 2)) * tgt.value;
    Ok(TransformCheck {
        lhs,
        rhs,
        modulus,
        target_value: tgt.value,
        pulled_back,
        holds: lhs <= rhs + tol,
        matched_lhs,
        matched_holds: matched_lhs <= rhs + tol,
    })
}

/// Relative residual of `λ_{V(G)}(Vz)/|cz+d|² = |cz+d|^{2m−2} λ_G(z)`.
pub fn pseudo_invariance_residual(
    source: &SzegoMetric,
    image: &SzegoMetric,
    v: &VahlenMatrix<f64>,
    z: &Paravector<f64>,
) -> Result<f64> {
    let m = source.signature().generators() as i32;
    let q = v.denominator(z).norm();
    let lhs = image.lambda(&v.apply(z)?)? / (q * q);
    let rhs = q.powi(2 * m - 2) * source.lambda(z)?;
    Ok((lhs - rhs).abs() / rhs.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::HelperMap;
    use crate::monogenic::fueter_variable;
    use crate::szego::KernelSpec;
    use std::f64::consts::PI;

    fn sig(m: usize) -> Signature {
        Signature::new(m).unwrap()
    }

    fn pv(c: &[f64]) -> Paravector<f64> {
        Paravector::from_slice(c).unwrap()
    }

    fn ball(m: usize, n: u32) -> SzegoMetric {
        let spec = KernelSpec::new(BoundarySurface::unit_ball(sig(m)), n, 2 * n as usize + 2);
        SzegoMetric::new(TruncatedSzegoKernel::build(spec).unwrap())
    }

    #[test]
    fn disk_curvature_matches_oracle() {
        let metric = ball(1, 40);
        for z in [pv(&[0.0, 0.0]), pv(&[0.3, -0.2]), pv(&[-0.5, 0.1])] {
            let c = metric.curvature(&z, CURVATURE_STEP).unwrap();
            let oracle = -16.0 * PI * PI;
            assert!((c.value - oracle).abs() / oracle.abs() < 1e-3, "{c:?}");
        }
    }

    #[test]
    fn positivity_forms_agree() {
        let metric = ball(2, 5);
        let z = pv(&[0.2, -0.1, 0.3]);
        let l = metric.positivity(&z).unwrap();
        assert!(l.direct > 0.0);
        assert!(l.agreement() < 1e-8, "{l:?}");
    }

    #[test]
    fn span_candidate_attains_closed_form() {
        let metric = ball(2, 4);
        let z = pv(&[0.1, 0.2, -0.1]);
        let est = caratheodory_lower_bound(&metric, &z, &FamilySpec { k2_grid: None, ..FamilySpec::default() }).unwrap();
        let closed = truncated_supremum(&metric, &z).unwrap();
        let span = est.candidates.iter().find(|c| matches!(c.witness, Witness::TruncatedSpan { .. })).unwrap();
        assert!((span.value - closed).abs() < 1e-9 * closed, "{} vs {closed}", span.value);
        let kc = est.candidates.iter().find(|c| c.witness == Witness::KernelCombination).unwrap();
        assert!((kc.value - closed).abs() < 1e-8 * closed, "{} vs {closed}", kc.value);
        assert!(span.field().eval(&z).unwrap().norm() < 1e-12);
    }

    #[test]
    fn exact_intertwining_for_translations() {
        let s = sig(2);
        let f = &fueter_variable::<f64>(s, 1).mul(&fueter_variable(s, 2)).unwrap() + &fueter_variable(s, 1);
        let v = VahlenMatrix::translation(&pv(&[0.1, -0.2, 0.3]));
        for form in IntertwiningForm::ALL {
            let r = intertwining_residual(&v, &f, &pv(&[0.2, 0.1, 0.0]), 2, form, Differentiation::Exact).unwrap();
            assert!(r.residual < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn intertwining_under_helper_map() {
        let s = sig(2);
        let f = &fueter_variable::<f64>(s, 1).mul(&fueter_variable(s, 2)).unwrap() + &fueter_variable(s, 2);
        let v = HelperMap::default().vahlen(s).unwrap();
        let z = pv(&[0.2, 0.1, -0.3]);
        let fd = Differentiation::FiniteDifference(FdScheme::first());
        for p in [2, 3] {
            let right = intertwining_residual(&v, &f, &z, p, IntertwiningForm::RightPlain, fd).unwrap();
            assert!(right.relative() < 1e-7, "{right:?}");
            // The left-sided form with the conjugated weight does not hold off the real line.
            let left = intertwining_residual(&v, &f, &z, p, IntertwiningForm::LeftConjugate, fd).unwrap();
            assert!(left.relative() > 1e-4, "{left:?}");
        }
    }

    #[test]
    fn distance_basics() {
        let metric = ball(1, 6);
        let grid = DistanceGrid::build(&metric, GridSpec::default()).unwrap();
        let a = pv(&[0.1, 0.2]);
        let b = pv(&[-0.3, -0.1]);
        let ab = grid.distance(&a, &b).unwrap();
        let ba = grid.distance(&b, &a).unwrap();
        assert_eq!(ab.value, ba.value);
        assert!(ab.value <= ab.straight_length);
        assert_eq!(grid.distance(&a, &a).unwrap().value, 0.0);
    }
}
