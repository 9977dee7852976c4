//! Reproducing property, disk oracle and diagonal stability of the truncated kernel.

use std::f64::consts::PI;

use rand::Rng;
use szego_core::monogenic::{fueter_indices, fueter_polynomial};
use szego_core::quadrature::BoundarySurface;
use szego_core::szego::TruncatedSzegoKernel;
use szego_core::{Multivector64, Paravector, Polynomial64, Signature};

use super::{ball_points, kernel, max_of, rng};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{timed, Check, SuiteReport};

const REPRO_DEGREE: u32 = 6;
const REPRO_ORDER: usize = 14;
const REPRO_POINTS: usize = 20;
const REPRO_FUNCTIONS: usize = 4;
const DISK_DEGREE: u32 = 12;

/// `|S^m|`, the area of the unit sphere bounding the ball in `R^{m+1}`.
pub fn sphere_area(m: usize) -> f64 {
    match m {
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        3 => 2.0 * PI * PI,
        _ => {
            let n = (m + 1) as f64;
            // 2 π^{n/2} / Γ(n/2) through the recursion |S^{k}| = 2π/(k−1) |S^{k−2}|.
            let mut area = if m % 2 == 1 { 2.0 * PI } else { 4.0 * PI };
            let mut k = if m % 2 == 1 { 1.0 } else { 2.0 };
            while k + 2.0 <= n - 1.0 {
                k += 2.0;
                area *= 2.0 * PI / (k - 1.0);
            }
            area
        }
    }
}

/// The classical disk kernel `1/(2π(1 − z w̄))` in the form `x + y e_1`.
pub fn disk_oracle(z: &Paravector<f64>, w: &Paravector<f64>) -> [f64; 2] {
    let (zr, zi) = (*z.comp(0), *z.comp(1));
    let (wr, wi) = (*w.comp(0), *w.comp(1));
    let (pr, pi) = (zr * wr + zi * wi, zi * wr - zr * wi);
    let (dr, di) = (1.0 - pr, -pi);
    let n2 = dr * dr + di * di;
    [dr / n2 / (2.0 * PI), -di / n2 / (2.0 * PI)]
}

fn random_in_span(r: &mut impl Rng, sig: Signature, degree: u32) -> Polynomial64 {
    let mut f = Polynomial64::zero(sig);
    for d in 0..=degree {
        for alpha in fueter_indices(sig, d) {
            if r.gen_bool(0.3) {
                let coeffs = (0..sig.dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
                let c = Multivector64::from_coeffs(sig, coeffs).expect("full coefficient vector");
                f += &fueter_polynomial::<f64>(sig, &alpha).right_mul(&c);
            }
        }
    }
    f
}

pub fn run(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let sig = cfg.signature();
    let m = cfg.m;
    let mut report = SuiteReport::new("kernel", m, cfg.seed);
    let ball = BoundarySurface::unit_ball(sig);
    let origin = Paravector::zero(sig);

    let (k6, build6) = timed(|| kernel(cfg, ball.clone(), REPRO_DEGREE, REPRO_ORDER));
    let k6 = k6?;
    report.push(
        Check::at_most(
            &format!("gram_identity_m{m}"),
            "orthonormal Hardy basis: Gram matrix equals the identity under the boundary quadrature",
            k6.basis().gram_report().max_scalar_residual,
            1e-10,
        )
        .record()
        .runtime(build6)
        .detail("functions", k6.basis().len() as f64)
        .detail("dropped", k6.basis().gram_report().dropped.len() as f64),
    );

    let mut r = rng(cfg, 500);
    let points = ball_points(&mut r, &origin, 0.5, REPRO_POINTS);
    let funcs: Vec<Polynomial64> = (0..REPRO_FUNCTIONS).map(|_| random_in_span(&mut r, sig, REPRO_DEGREE)).collect();
    let (res, secs) = timed(|| -> CliResult<(f64, f64)> {
        let mut abs: f64 = 0.0;
        let mut rel: f64 = 0.0;
        for f in &funcs {
            for z in &points {
                let exact = f.eval(z)?;
                let got = k6.reproduce(&|w| f.eval(w), z)?;
                let d = (&got - &exact).norm();
                abs = abs.max(d);
                rel = rel.max(d / exact.norm().max(1e-300));
            }
        }
        Ok((abs, rel))
    });
    let (abs, rel) = res?;
    report.push(
        Check::at_most(
            &format!("reproducing_property_m{m}"),
            "reproducing property f(z) = integral of K(z,w) f(w) dS(w) for in-span monogenic polynomials, |z| <= 0.5",
            abs,
            1e-8,
        )
        .criterion(4)
        .runtime(secs)
        .detail("relative", rel)
        .detail("degree", REPRO_DEGREE as f64)
        .detail("quad_order", REPRO_ORDER as f64),
    );

    if m == 1 {
        let (kd, build) = timed(|| kernel(cfg, ball.clone(), DISK_DEGREE, 2 * DISK_DEGREE as usize + 2));
        let kd = kd?;
        let zs = ball_points(&mut r, &origin, 0.5, 10);
        let ws = ball_points(&mut r, &origin, 0.5, 10);
        let (worst, secs) = timed(|| {
            max_of(zs.iter().flat_map(|z| {
                ws.iter().map(|w| {
                    let got = kd.eval(z, w);
                    let [a, b] = disk_oracle(z, w);
                    let err = ((got.coeffs()[0] - a).powi(2) + (got.coeffs()[1] - b).powi(2)).sqrt();
                    err / (a * a + b * b).sqrt()
                })
                .collect::<Vec<_>>()
            }))
        });
        report.push(
            Check::at_most(
                "disk_kernel_oracle_m1",
                "truncated kernel on the unit disk vs 1/(2 pi (1 - z conj w)), |z|, |w| <= 0.5",
                worst,
                1e-6,
            )
            .criterion(4)
            .runtime(secs + build)
            .detail("degree", DISK_DEGREE as f64),
        );
    }

    let k00 = k6.eval(&origin, &origin);
    let oracle = 1.0 / sphere_area(m);
    report.push(
        Check::at_most(
            &format!("kernel_origin_value_m{m}"),
            "K(0,0) equals the reciprocal boundary area on the unit ball",
            (k00.scalar_part() - oracle).abs(),
            1e-10,
        )
        .criterion(5)
        .detail("value", k00.scalar_part())
        .detail("oracle", oracle)
        .detail("nonscalar", k00.vector_rest().norm()),
    );

    let (k8, build8) = timed(|| kernel(cfg, ball.clone(), 8, 18));
    let k8 = k8?;
    let zs = ball_points(&mut r, &origin, 0.5, REPRO_POINTS);
    let change = max_of(zs.iter().map(|z| {
        let a = k6.diagonal_value(z);
        let b = k8.diagonal_value(z);
        (b - a).abs() / b
    }));
    report.push(
        Check::at_most(
            &format!("diagonal_truncation_change_m{m}"),
            "kernel diagonal K(z,z) changes by at most 0.5% from N = 6 to N = 8, |z| <= 0.5",
            change,
            5e-3,
        )
        .criterion(5)
        .runtime(build8),
    );
    report.push(tail_record(&k8, &zs));
    Ok(report)
}

fn tail_record(k: &TruncatedSzegoKernel, zs: &[Paravector<f64>]) -> Check {
    let ratio = max_of(zs.iter().map(|z| {
        let t = k.tail_check(z);
        t.ratios.iter().rev().find(|r| r.is_finite()).copied().unwrap_or(f64::NAN)
    }));
    Check::at_most(
        &format!("derivative_tail_ratio_m{}", k.signature().generators()),
        "ratio of the last two per-degree derivative contributions on the diagonal, |z| <= 0.5",
        ratio,
        1.0,
    )
    .record()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!((sphere_area(5) - PI.powi(3)).abs() < 1e-12);
    }
}
