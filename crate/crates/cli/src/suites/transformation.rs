//! Kernel transformation formula and pseudo-invariance of the metric under Möbius maps.

use szego_core::metric::{pseudo_invariance_residual, SzegoMetric};
use szego_core::mobius::InversionMaps;
use szego_core::quadrature::BoundarySurface;
use szego_core::szego::{transformation_residual, TruncatedSzegoKernel};
use szego_core::{Paravector, Signature, Vahlen64};

use super::{ball_points, kernel, max_of, rng};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{timed, Check, SuiteReport};

const PAIR_POINTS: usize = 6;
const INVARIANCE_POINTS: usize = 20;

/// Degree used for this suite: the planar case is cheap enough to push the
/// truncation error below the exact-invariance tolerance.
fn degree(m: usize) -> u32 {
    if m == 1 {
        16
    } else {
        8
    }
}

fn worst_relative(
    k_g: &TruncatedSzegoKernel,
    k_image: &TruncatedSzegoKernel,
    v: &Vahlen64,
    points: &[Paravector<f64>],
) -> CliResult<(f64, f64)> {
    let mut rel: f64 = 0.0;
    let mut abs: f64 = 0.0;
    for z in points {
        for zeta in points {
            let r = transformation_residual(k_g, k_image, v, z, zeta)?;
            rel = rel.max(r.relative);
            abs = abs.max(r.residual);
        }
    }
    Ok((rel, abs))
}

/// Inversion in the sphere of radius one about `2 e_1` followed by the reflection.
fn inversion_pair(sig: Signature) -> CliResult<Vahlen64> {
    let center = Paravector::unit(sig, 1).scale(&2.0);
    Ok(InversionMaps::new(center, 1.0)?.composite())
}

pub fn run(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let sig = cfg.signature();
    let m = cfg.m;
    let n = degree(m);
    let order = 2 * n as usize + 2;
    let mut report = SuiteReport::new("transformation", m, cfg.seed);
    let origin = Paravector::zero(sig);
    let mut r = rng(cfg, 600);
    let points = ball_points(&mut r, &origin, 0.5, PAIR_POINTS);

    let (checks, secs) = timed(|| -> CliResult<Vec<Check>> {
        let mut out = Vec::new();
        let k_g = kernel(cfg, BoundarySurface::unit_ball(sig), n, order)?;

        let identity = Vahlen64::identity(sig);
        let (_, abs) = worst_relative(&k_g, &k_g, &identity, &points)?;
        out.push(
            Check::at_most(
                &format!("kernel_transformation_identity_m{m}"),
                "kernel transformation formula under the identity map",
                abs,
                0.0,
            )
            .criterion(6),
        );

        let mut shift = vec![0.0; m + 1];
        shift[0] = 0.15;
        shift[1] = -0.1;
        let translation = Vahlen64::translation(&Paravector::new(shift)?);
        let (k_t, secs) = timed(|| kernel(cfg, BoundarySurface::mobius_image_of_unit_ball(translation.clone())?, n, order));
        let (rel, _) = worst_relative(&k_g, &k_t?, &translation, &points)?;
        out.push(
            Check::at_most(
                &format!("kernel_transformation_translation_m{m}"),
                "kernel transformation formula under a translation, |z|, |zeta| <= 0.5",
                rel,
                1e-6,
            )
            .criterion(6)
            .runtime(secs),
        );

        let helper = cfg.helper().vahlen(sig)?;
        let (k_h, secs) = timed(|| kernel(cfg, BoundarySurface::mobius_image_of_unit_ball(helper.clone())?, n, order));
        let k_h = k_h?;
        let (rel, _) = worst_relative(&k_g, &k_h, &helper, &points)?;
        out.push(
            Check::at_most(
                &format!("kernel_transformation_helper_m{m}"),
                "kernel transformation formula under the helper Moebius map onto a unit ball, |z|, |zeta| <= 0.5",
                rel,
                1e-2,
            )
            .criterion(6)
            .runtime(secs)
            .detail("degree", n as f64)
            .detail("pole_distance", cfg.helper_pole_distance),
        );

        let inversion = inversion_pair(sig)?;
        let (k_i, secs) = timed(|| kernel(cfg, BoundarySurface::mobius_image_of_unit_ball(inversion.clone())?, n, order));
        let k_i = k_i?;
        let (rel, _) = worst_relative(&k_g, &k_i, &inversion, &points)?;
        out.push(
            Check::at_most(
                &format!("kernel_transformation_inversion_m{m}"),
                "kernel transformation formula under inversion about 2e_1 (image ball of radius 1/3)",
                rel,
                1e-2,
            )
            .criterion(6)
            .record()
            .runtime(secs)
            .note("the image ball is small and close to the pole, so the truncated image kernel converges slowly"),
        );

        let source = SzegoMetric::new(k_g);
        let invariance_points = ball_points(&mut r, &origin, 0.5, INVARIANCE_POINTS);
        for (name, v, k, role_gate) in [("helper", &helper, k_h, true), ("inversion", &inversion, k_i, false)] {
            let image = SzegoMetric::new(k);
            let worst = max_of(
                invariance_points
                    .iter()
                    .map(|z| pseudo_invariance_residual(&source, &image, v, z))
                    .collect::<szego_core::Result<Vec<f64>>>()?,
            );
            let tol = if m == 1 { 1e-6 } else { 1e-2 };
            let check = Check::at_most(
                &format!("metric_pseudo_invariance_{name}_m{m}"),
                "pseudo-invariance lambda_V(G)(Vz)/|cz+d|^2 = |cz+d|^(2m-2) lambda_G(z), |z| <= 0.5",
                worst,
                tol,
            )
            .criterion(7);
            out.push(if role_gate { check } else { check.record() });
        }
        Ok(out)
    });
    report.checks.extend(checks?);
    report.push(
        Check::at_most(&format!("transformation_runtime_m{m}"), "kernel transformation checks: runtime budget", secs, 300.0)
            .criterion(6)
            .runtime(secs),
    );
    Ok(report)
}
