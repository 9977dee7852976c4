//! Product rules, monogenicity of the Fueter basis and the Cauchy kernel.

use rand::Rng;
use szego_core::calculus::{product_rule_residual, FieldHandle, Operator, ProductRule, RuleForm, Side};
use szego_core::monogenic::{fueter_indices, fueter_polynomial, CauchyKernel};
use szego_core::scalar::Scalar;
use szego_core::{ratio, MultivectorQ, Paravector, PolynomialQ, Signature};

use super::{ball_point, max_of, rng};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{timed, Check, SuiteReport};

const PAIRS: usize = 100;
const CAUCHY_POINTS: usize = 50;
const DBAR2_POINTS: usize = 20;

fn rule_name(rule: ProductRule) -> &'static str {
    match rule {
        ProductRule::DLeft => "d_left",
        ProductRule::DRight => "d_right",
        ProductRule::DbarLeft => "dbar_left",
        ProductRule::DbarRight => "dbar_right",
    }
}

fn rule_text(rule: ProductRule) -> &'static str {
    match rule {
        ProductRule::DLeft => "D(fg)",
        ProductRule::DRight => "(fg)D",
        ProductRule::DbarLeft => "Dbar(fg)",
        ProductRule::DbarRight => "(fg)Dbar",
    }
}

/// A polynomial of degree at most 3 with a few sparse rational terms.
fn random_poly(rng: &mut impl Rng, sig: Signature) -> PolynomialQ {
    let vars = sig.paravector_dim();
    let mut p = PolynomialQ::zero(sig);
    for _ in 0..rng.gen_range(1..=3) {
        let degree = rng.gen_range(0..=3u32);
        let mut exponent = vec![0u32; vars];
        for _ in 0..degree {
            exponent[rng.gen_range(0..vars)] += 1;
        }
        let mut coeff = MultivectorQ::zero(sig);
        for _ in 0..rng.gen_range(1..=3) {
            let mask = rng.gen_range(0..sig.dim());
            coeff.set_coeff(mask, ratio(rng.gen_range(-5..=5), rng.gen_range(1..=4)));
        }
        p += &PolynomialQ::monomial(exponent, coeff).expect("exponent length matches");
    }
    p
}

fn poly_size(p: &PolynomialQ) -> f64 {
    max_of(p.terms().flat_map(|(_, c)| c.coeffs().iter().map(|x| x.to_f64().abs()).collect::<Vec<_>>()))
}

pub fn run(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let mut report = SuiteReport::new("calculus", cfg.m, cfg.seed);
    let (checks, secs) = timed(|| product_rules(cfg));
    report.checks.extend(checks?);
    report.push(
        Check::at_most("product_rules_runtime", "product rules: runtime budget", secs, 30.0)
            .criterion(2)
            .runtime(secs),
    );
    for m in 1..=RunConfig::MAX_M {
        let sig = Signature::new(m)?;
        report.push(fueter_monogenic(sig)?);
        report.push(cauchy_fd(cfg, sig)?);
        report.checks.extend(dbar2_closed_form(cfg, sig)?);
    }
    Ok(report)
}

fn product_rules(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for m in 1..=RunConfig::MAX_M {
        let sig = Signature::new(m)?;
        let mut r = rng(cfg, 200 + m as u64);
        let pairs: Vec<(PolynomialQ, PolynomialQ)> =
            (0..PAIRS).map(|_| (random_poly(&mut r, sig), random_poly(&mut r, sig))).collect();
        for rule in ProductRule::ALL {
            for form in [RuleForm::Scalar, RuleForm::Consistent] {
                let (res, secs) = timed(|| -> CliResult<(f64, usize)> {
                    let mut worst: f64 = 0.0;
                    let mut failing = 0;
                    for (f, g) in &pairs {
                        let res = product_rule_residual(rule, form, f, g)?;
                        if !res.is_zero() {
                            failing += 1;
                        }
                        worst = worst.max(poly_size(&res));
                    }
                    Ok((worst, failing))
                });
                let (worst, failing) = res?;
                let check = match form {
                    RuleForm::Scalar => Check::at_most(
                        &format!("product_rule_{}_m{m}", rule_name(rule)),
                        &format!(
                            "product rule for {}: correction 2R(f)d0 g plus the mod-4 selected sum with scalar weights f_A",
                            rule_text(rule)
                        ),
                        worst,
                        0.0,
                    )
                    .criterion(2),
                    RuleForm::Consistent => Check::at_most(
                        &format!("product_rule_{}_m{m}_conjugate_weighted", rule_name(rule)),
                        &format!(
                            "product rule for {}: correction (f - conj f)d0 g plus the mod-4 selected sum with weights conj(f_A e_A) e_i",
                            rule_text(rule)
                        ),
                        worst,
                        0.0,
                    )
                    .criterion(2)
                    .record(),
                };
                out.push(check.runtime(secs).detail("failing_pairs", failing as f64).detail("pairs", PAIRS as f64));
            }
        }
    }
    Ok(out)
}

fn fueter_monogenic(sig: Signature) -> CliResult<Check> {
    let m = sig.generators();
    let (worst, secs) = timed(|| {
        let mut worst: f64 = 0.0;
        for degree in 0..=4 {
            for alpha in fueter_indices(sig, degree) {
                let v: PolynomialQ = fueter_polynomial(sig, &alpha);
                worst = worst.max(poly_size(&v.dirac(Operator::D, Side::Left)));
                worst = worst.max(poly_size(&v.dirac(Operator::D, Side::Right)));
            }
        }
        worst
    });
    Ok(Check::at_most(
        &format!("fueter_polynomials_monogenic_m{m}"),
        "symmetric Fueter polynomials are left and right monogenic, degree <= 4",
        worst,
        0.0,
    )
    .criterion(3)
    .runtime(secs))
}

/// Pole near the origin and a point at distance in `[0.5, 1.5]` from it.
fn pole_and_point(r: &mut impl Rng, sig: Signature) -> (Paravector<f64>, Paravector<f64>) {
    let origin = Paravector::zero(sig);
    let pole = ball_point(r, &origin, 0.5);
    loop {
        let z = ball_point(r, &pole, 1.5);
        if z.distance(&pole) >= 0.5 {
            return (pole, z);
        }
    }
}

fn cauchy_fd(cfg: &RunConfig, sig: Signature) -> CliResult<Check> {
    let m = sig.generators();
    let mut r = rng(cfg, 300 + m as u64);
    let scheme = cfg.fd_scheme();
    let (res, secs) = timed(|| -> CliResult<(f64, f64)> {
        let mut abs: f64 = 0.0;
        let mut rel: f64 = 0.0;
        for _ in 0..CAUCHY_POINTS {
            let (pole, z) = pole_and_point(&mut r, sig);
            let k = CauchyKernel::new(pole);
            let d = k.field().dirac(&z, Operator::D, Side::Left, scheme)?.norm();
            abs = abs.max(d);
            rel = rel.max(d / k.eval(&z)?.norm());
        }
        Ok((abs, rel))
    });
    let (abs, rel) = res?;
    Ok(Check::at_most(
        &format!("cauchy_kernel_fd_monogenic_m{m}"),
        "Cauchy kernel conj(x)/|x|^(m+1) is left monogenic off its pole (central differences)",
        abs,
        1e-5,
    )
    .criterion(3)
    .runtime(secs)
    .detail("relative", rel)
    .detail("points", CAUCHY_POINTS as f64)
    .detail("fd_step", cfg.fd_step))
}

fn dbar2_closed_form(cfg: &RunConfig, sig: Signature) -> CliResult<Vec<Check>> {
    let m = sig.generators();
    let mut r = rng(cfg, 400 + m as u64);
    let scheme = cfg.fd_scheme();
    let samples: Vec<(Paravector<f64>, Paravector<f64>)> = (0..DBAR2_POINTS).map(|_| pole_and_point(&mut r, sig)).collect();

    let rel = |a: &szego_core::Multivector64, b: &szego_core::Multivector64| (a - b).norm() / b.norm();
    let nested = |k: &CauchyKernel, z: &Paravector<f64>| -> CliResult<szego_core::Multivector64> {
        let first: FieldHandle = k.field().dirac_field(Operator::Dbar, Side::Left, scheme);
        Ok(first.dirac(z, Operator::Dbar, Side::Left, scheme)?)
    };

    let (res, secs) = timed(|| -> CliResult<(f64, f64, f64)> {
        let (mut short, mut full, mut plane): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for (pole, z) in &samples {
            let k = CauchyKernel::new(pole.clone());
            let fd = nested(&k, z)?;
            short = short.max(rel(&k.dbar2_on_hyperplane(z)?, &fd));
            full = full.max(rel(&k.dbar2(z)?, &fd));
            // The same point moved onto the hyperplane through the pole.
            let mut zp = z.clone();
            zp.comps_mut()[0] = *pole.comp(0);
            if zp.distance(pole) > 0.1 {
                let fd = nested(&k, &zp)?;
                plane = plane.max(rel(&k.dbar2_on_hyperplane(&zp)?, &fd));
            }
        }
        Ok((short, full, plane))
    });
    let (short, full, plane) = res?;
    Ok(vec![
        Check::at_most(
            &format!("dbar2_cauchy_closed_form_m{m}"),
            "closed form Dbar^2 of the Cauchy kernel: -4(m+1) conj(x)/|x|^(m+3), vs nested differences",
            short,
            1e-4,
        )
        .criterion(3)
        .runtime(secs)
        .detail("points", DBAR2_POINTS as f64)
        .note("holds only where x_0 = 0; see dbar2_cauchy_full_expansion and dbar2_cauchy_closed_form_on_hyperplane"),
        Check::at_most(
            &format!("dbar2_cauchy_full_expansion_m{m}"),
            "Dbar^2 of the Cauchy kernel: 4[-(m+1)(2x_0 + conj x)/|x|^(m+3) + (m+1)(m+3) x_0^2 conj(x)/|x|^(m+5)]",
            full,
            1e-4,
        )
        .criterion(3)
        .record(),
        Check::at_most(
            &format!("dbar2_cauchy_closed_form_on_hyperplane_m{m}"),
            "closed form Dbar^2 of the Cauchy kernel restricted to x_0 = 0",
            plane,
            1e-4,
        )
        .criterion(3)
        .record(),
    ])
}
