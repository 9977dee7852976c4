//! Sign of the curvature and of the diagonal positivity quantity on the ball and its helper image.

use std::f64::consts::PI;

use szego_core::metric::SzegoMetric;
use szego_core::quadrature::BoundarySurface;
use szego_core::Paravector;

use super::{ball_points, metric, rng};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{timed, Check, SuiteReport};

const POINTS_PER_DOMAIN: usize = 200;
const RADIUS_FRACTION: f64 = 0.8;
const DISK_DEGREE: u32 = 40;
const POSITIVITY_AGREEMENT: f64 = 1e-8;

pub fn run(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let sig = cfg.signature();
    let m = cfg.m;
    let mut report = SuiteReport::new("curvature", m, cfg.seed);
    let helper = BoundarySurface::mobius_image_of_unit_ball(cfg.helper().vahlen(sig)?)?;
    for (stream, (name, surface)) in [("ball", BoundarySurface::unit_ball(sig)), ("helper", helper)].into_iter().enumerate() {
        let (met, build) = timed(|| metric(cfg, surface, cfg.degree));
        let met = met?;
        let (c, r) = met.surface().sphere()?;
        let points = ball_points(&mut rng(cfg, 700 + stream as u64), &c, RADIUS_FRACTION * r, POINTS_PER_DOMAIN);
        let (res, secs) = timed(|| sign_counts(&met, &points, cfg.curvature_step));
        let counts = res?;
        report.push(
            Check::at_least(
                &format!("curvature_negative_{name}_m{m}"),
                "Gaussian curvature -Laplacian(log lambda)/lambda^2 is strictly negative (stable under step halving)",
                counts.negative as f64,
                POINTS_PER_DOMAIN as f64,
            )
            .criterion(8)
            .runtime(secs + build)
            .detail("sampled", POINTS_PER_DOMAIN as f64)
            .detail("max_curvature", counts.max_curvature)
            .detail("degree", cfg.degree as f64),
        );
        report.push(
            Check::at_least(
                &format!("diagonal_positivity_{name}_m{m}"),
                "K(K K_zbar_z - K_z K_zbar) > 0 on the diagonal, equal to the squared norm of the kernel combination",
                counts.positive as f64,
                POINTS_PER_DOMAIN as f64,
            )
            .criterion(8)
            .detail("sampled", POINTS_PER_DOMAIN as f64)
            .detail("min_value", counts.min_positivity)
            .detail("max_form_disagreement", counts.max_disagreement),
        );
    }

    if m == 1 {
        let (met, build) = timed(|| metric(cfg, BoundarySurface::unit_ball(sig), DISK_DEGREE));
        let met = met?;
        let points = ball_points(&mut rng(cfg, 710), &Paravector::zero(sig), 0.5, 10);
        let oracle = -16.0 * PI * PI;
        let (res, secs) = timed(|| -> CliResult<f64> {
            let mut worst: f64 = 0.0;
            for z in &points {
                let c = met.curvature(z, cfg.curvature_step)?;
                worst = worst.max((c.value - oracle).abs() / oracle.abs());
            }
            Ok(worst)
        });
        report.push(
            Check::at_most(
                "curvature_disk_oracle_m1",
                "disk curvature matches the constant -16 pi^2 of the classical Szego metric, |z| <= 0.5",
                res?,
                1e-3,
            )
            .criterion(8)
            .runtime(secs + build)
            .detail("degree", DISK_DEGREE as f64),
        );
    }
    Ok(report)
}

struct SignCounts {
    negative: usize,
    positive: usize,
    max_curvature: f64,
    min_positivity: f64,
    max_disagreement: f64,
}

fn sign_counts(met: &SzegoMetric, points: &[Paravector<f64>], h: f64) -> CliResult<SignCounts> {
    let mut s = SignCounts {
        negative: 0,
        positive: 0,
        max_curvature: f64::NEG_INFINITY,
        min_positivity: f64::INFINITY,
        max_disagreement: 0.0,
    };
    for z in points {
        let c = met.curvature(z, h)?;
        if c.value < 0.0 && c.stable_sign() {
            s.negative += 1;
        }
        s.max_curvature = s.max_curvature.max(c.value);
        let l = met.positivity(z)?;
        if l.direct > 0.0 && l.norm_form > 0.0 && l.agreement() < POSITIVITY_AGREEMENT {
            s.positive += 1;
        }
        s.min_positivity = s.min_positivity.min(l.direct);
        s.max_disagreement = s.max_disagreement.max(l.agreement());
    }
    Ok(s)
}
