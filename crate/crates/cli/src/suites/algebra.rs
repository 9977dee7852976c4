//! Exact Clifford algebra identities over the rationals.

use rand::Rng;
use szego_core::scalar::Scalar;
use szego_core::{ratio, MultivectorQ, Rational, Signature};

use super::{max_of, rng};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{timed, Check, SuiteReport};

const SAMPLES: usize = 25;

fn random_mv(rng: &mut impl Rng, sig: Signature) -> MultivectorQ {
    let coeffs = (0..sig.dim()).map(|_| ratio(rng.gen_range(-6..=6), rng.gen_range(1..=5))).collect();
    MultivectorQ::from_coeffs(sig, coeffs).expect("full coefficient vector")
}

fn size(x: &MultivectorQ) -> f64 {
    max_of(x.coeffs().iter().map(|c| c.to_f64().abs()))
}

pub fn run(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let mut report = SuiteReport::new("algebra", cfg.m, cfg.seed);
    let (checks, secs) = timed(|| -> CliResult<Vec<Check>> {
        let mut out = Vec::new();
        for m in 1..=RunConfig::MAX_M {
            out.extend(identities(cfg, Signature::new(m)?)?);
        }
        Ok(out)
    });
    report.checks.extend(checks?);
    report.push(
        Check::at_most("algebra_runtime", "clifford algebra: exact identities runtime budget", secs, 5.0)
            .criterion(1)
            .runtime(secs),
    );
    Ok(report)
}

fn identities(cfg: &RunConfig, sig: Signature) -> CliResult<Vec<Check>> {
    let m = sig.generators();
    let mut r = rng(cfg, 100 + m as u64);
    let mut out = Vec::new();

    let (res, secs) = timed(|| -> CliResult<f64> {
        let mut worst: f64 = 0.0;
        for i in 1..=m {
            for j in 1..=m {
                let ei = MultivectorQ::generator(sig, i);
                let ej = MultivectorQ::generator(sig, j);
                let lhs = &ei.geometric_product(&ej)? + &ej.geometric_product(&ei)?;
                let rhs = MultivectorQ::scalar(sig, Rational::from_i64(if i == j { -2 } else { 0 }));
                worst = worst.max(size(&(&lhs - &rhs)));
            }
        }
        Ok(worst)
    });
    out.push(
        Check::at_most(&format!("anticommutation_m{m}"), "clifford algebra: e_i e_j + e_j e_i = -2 delta_ij", res?, 0.0)
            .criterion(1)
            .runtime(secs),
    );

    let triples: Vec<[MultivectorQ; 3]> =
        (0..SAMPLES).map(|_| [random_mv(&mut r, sig), random_mv(&mut r, sig), random_mv(&mut r, sig)]).collect();

    let (res, secs) = timed(|| -> CliResult<f64> {
        let mut worst: f64 = 0.0;
        for [a, b, c] in &triples {
            let left = a.geometric_product(b)?.geometric_product(c)?;
            let right = a.geometric_product(&b.geometric_product(c)?)?;
            worst = worst.max(size(&(&left - &right)));
        }
        Ok(worst)
    });
    out.push(
        Check::at_most(&format!("associativity_m{m}"), "clifford algebra: (ab)c = a(bc)", res?, 0.0)
            .criterion(1)
            .runtime(secs),
    );

    let (res, secs) = timed(|| -> CliResult<f64> {
        let mut worst: f64 = 0.0;
        for [a, b, _] in &triples {
            let left = a.geometric_product(b)?.conjugate();
            let right = b.conjugate().geometric_product(&a.conjugate())?;
            worst = worst.max(size(&(&left - &right)));
            worst = worst.max(size(&(&a.conjugate().conjugate() - a)));
        }
        Ok(worst)
    });
    out.push(
        Check::at_most(
            &format!("conjugation_anti_automorphism_m{m}"),
            "clifford conjugate: conj(ab) = conj(b) conj(a), involutive",
            res?,
            0.0,
        )
        .criterion(1)
        .runtime(secs),
    );

    let (res, secs) = timed(|| -> CliResult<f64> {
        let mut worst: f64 = 0.0;
        for [a, b, c] in &triples {
            let alpha = ratio(r.gen_range(-7..=7), r.gen_range(1..=3));
            let beta = ratio(r.gen_range(-7..=7), r.gen_range(1..=3));
            let combo = &a.scale(&alpha) + &b.scale(&beta);
            let sc = |x: &MultivectorQ, y: &MultivectorQ| -> CliResult<Rational> { Ok(x.geometric_product(y)?.scalar_part()) };
            let first = sc(&combo, c)? - (alpha.clone() * sc(a, c)? + beta.clone() * sc(b, c)?);
            let second = sc(c, &combo)? - (alpha * sc(c, a)? + beta * sc(c, b)?);
            worst = worst.max(first.to_f64().abs()).max(second.to_f64().abs());
            // Sc(ab) = Sc(ba) and Sc(a conj(a)) = |a|^2.
            worst = worst.max((sc(a, b)? - sc(b, a)?).to_f64().abs());
            worst = worst.max((sc(a, &a.conjugate())? - a.norm_squared()).to_f64().abs());
        }
        Ok(worst)
    });
    out.push(
        Check::at_most(
            &format!("scalar_part_bilinearity_m{m}"),
            "scalar part: Sc(ab) bilinear and symmetric, Sc(a conj a) = |a|^2",
            res?,
            0.0,
        )
        .criterion(1)
        .runtime(secs),
    );
    Ok(out)
}
