use proptest::prelude::*;
use szego_core::calculus::{product_rule_residual, MultivectorPolynomial, Operator, ProductRule, RuleForm, Side};
use szego_core::mobius::VahlenMatrix;
use szego_core::monogenic::{fueter_indices, fueter_polynomial};
use szego_core::{ratio, Multivector, MultivectorQ, Paravector, ParavectorQ, PolynomialQ, Signature};

fn multivector(m: usize) -> impl Strategy<Value = MultivectorQ> {
    let sig = Signature::new(m).unwrap();
    prop::collection::vec((-6i64..=6, 1i64..=4), sig.dim())
        .prop_map(move |c| Multivector::from_coeffs(sig, c.into_iter().map(|(n, d)| ratio(n, d)).collect()).unwrap())
}

fn paravector(m: usize) -> impl Strategy<Value = ParavectorQ> {
    prop::collection::vec((-6i64..=6, 1i64..=4), m + 1)
        .prop_map(|c| Paravector::new(c.into_iter().map(|(n, d)| ratio(n, d)).collect()).unwrap())
}

fn polynomial(m: usize) -> impl Strategy<Value = PolynomialQ> {
    let sig = Signature::new(m).unwrap();
    let term = (prop::collection::vec(0u32..=1, m + 1), multivector(m));
    prop::collection::vec(term, 1..4).prop_map(move |terms| {
        let mut p = MultivectorPolynomial::zero(sig);
        for (e, c) in terms {
            p += &MultivectorPolynomial::monomial(e, c).unwrap();
        }
        p
    })
}

fn dims() -> impl Strategy<Value = usize> {
    1usize..=3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_is_associative((a, b, c) in dims().prop_flat_map(|m| (multivector(m), multivector(m), multivector(m)))) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn conjugation_reverses_products((a, b) in dims().prop_flat_map(|m| (multivector(m), multivector(m)))) {
        prop_assert_eq!((&a * &b).conjugate(), &b.conjugate() * &a.conjugate());
    }

    #[test]
    fn paravector_norm_is_multiplicative((x, y) in dims().prop_flat_map(|m| (paravector(m), paravector(m)))) {
        let xy = &x.embed() * &y.embed();
        prop_assert_eq!(xy.norm_squared(), x.norm_squared() * y.norm_squared());
    }

    #[test]
    fn paravector_times_conjugate_is_scalar(x in dims().prop_flat_map(paravector)) {
        let p = &x.embed() * &x.conjugate().embed();
        prop_assert_eq!(p.vector_rest(), Multivector::zero(x.signature()));
        prop_assert_eq!(p.scalar_part(), x.norm_squared());
    }

    #[test]
    fn consistent_product_rules_hold((f, g) in (1usize..=2).prop_flat_map(|m| (polynomial(m), polynomial(m)))) {
        for rule in ProductRule::ALL {
            prop_assert!(product_rule_residual(rule, RuleForm::Consistent, &f, &g).unwrap().is_zero());
        }
    }

    #[test]
    fn translations_compose((s, t, z) in dims().prop_flat_map(|m| (paravector(m), paravector(m), paravector(m)))) {
        let both = VahlenMatrix::translation(&s).compose(&VahlenMatrix::translation(&t)).unwrap();
        prop_assert_eq!(both.apply(&z).unwrap(), &(&z + &t) + &s);
    }
}

#[test]
fn generators_anticommute_and_square_to_minus_one() {
    for m in 1..=3 {
        let sig = Signature::new(m).unwrap();
        for i in 1..=m {
            let ei: MultivectorQ = Multivector::generator(sig, i);
            assert_eq!(&ei * &ei, -Multivector::one(sig));
            for j in i + 1..=m {
                let ej = Multivector::generator(sig, j);
                assert!((&(&ei * &ej) + &(&ej * &ei)).is_zero());
            }
        }
    }
}

#[test]
fn fueter_polynomials_are_two_sided_monogenic() {
    for m in 1..=3 {
        let sig = Signature::new(m).unwrap();
        for degree in 0..=3 {
            for alpha in fueter_indices(sig, degree) {
                let p: PolynomialQ = fueter_polynomial(sig, &alpha);
                assert!(p.dirac(Operator::D, Side::Left).is_zero(), "m={m} {alpha:?}");
                assert!(p.dirac(Operator::D, Side::Right).is_zero(), "m={m} {alpha:?}");
            }
        }
    }
}

#[test]
fn inversion_is_an_involution_on_rationals() {
    let sig = Signature::new(2).unwrap();
    let e1: MultivectorQ = Multivector::generator(sig, 1);
    let inv = VahlenMatrix::new(Multivector::zero(sig), e1.clone(), e1, Multivector::zero(sig)).unwrap();
    let z = Paravector::new(vec![ratio(1, 3), ratio(-2, 5), ratio(3, 7)]).unwrap();
    let once = inv.apply(&z).unwrap();
    assert_ne!(once, z);
    assert_eq!(inv.apply(&once).unwrap(), z);
}
