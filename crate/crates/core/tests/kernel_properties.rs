use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use szego_core::metric::{DistanceGrid, GridSpec, SzegoMetric};
use szego_core::quadrature::BoundarySurface;
use szego_core::szego::{KernelSpec, TruncatedSzegoKernel};
use szego_core::{Paravector, Signature};

fn kernel(m: usize) -> &'static TruncatedSzegoKernel {
    static CACHE: [OnceLock<TruncatedSzegoKernel>; 2] = [OnceLock::new(), OnceLock::new()];
    CACHE[m - 1].get_or_init(|| {
        let sig = Signature::new(m).unwrap();
        TruncatedSzegoKernel::build(KernelSpec::new(BoundarySurface::unit_ball(sig), 5, 12)).unwrap()
    })
}

fn ball_point(m: usize, radius: f64) -> impl Strategy<Value = Paravector<f64>> {
    prop::collection::vec(-1.0f64..1.0, m + 1).prop_filter_map("nonzero direction", move |v| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (n > 1e-3).then(|| Paravector::from_slice(&v.iter().map(|x| x * radius * n.min(1.0) / n).collect::<Vec<_>>()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_is_hermitian((m, z, w) in (1usize..=2).prop_flat_map(|m| (Just(m), ball_point(m, 0.8), ball_point(m, 0.8)))) {
        let k = kernel(m);
        let lhs = k.eval(&w, &z);
        let rhs = k.eval(&z, &w).conjugate();
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn diagonal_is_positive_scalar((m, z) in (1usize..=2).prop_flat_map(|m| (Just(m), ball_point(m, 0.9)))) {
        let d = kernel(m).diagonal_kernel(&z);
        prop_assert!(d.scalar_part() > 0.0);
        prop_assert!(d.vector_rest().norm() <= 1e-10 * d.scalar_part());
    }

    #[test]
    fn kernel_is_cauchy_schwarz_bounded((m, z, w) in (1usize..=2).prop_flat_map(|m| (Just(m), ball_point(m, 0.8), ball_point(m, 0.8)))) {
        let k = kernel(m);
        let off = k.eval(&z, &w).norm();
        // The real-span kernel is a sum of 2^m positive blocks.
        let bound = (1u32 << m) as f64 * (k.diagonal_value(&z) * k.diagonal_value(&w)).sqrt();
        prop_assert!(off <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn metric_is_positive((m, z) in (1usize..=2).prop_flat_map(|m| (Just(m), ball_point(m, 0.9)))) {
        let metric = SzegoMetric::new(kernel(m).clone());
        prop_assert!(metric.lambda(&z).unwrap() > 0.0);
    }
}

#[test]
fn origin_value_matches_sphere_area() {
    let areas = [2.0 * PI, 4.0 * PI];
    for m in 1..=2 {
        let origin = Paravector::zero(Signature::new(m).unwrap());
        let value = kernel(m).diagonal_value(&origin);
        assert!((value - 1.0 / areas[m - 1]).abs() < 1e-12, "m={m}: {value}");
    }
}

#[test]
fn diagonal_grows_towards_boundary() {
    for m in 1..=2 {
        let sig = Signature::new(m).unwrap();
        let values: Vec<f64> = [0.0, 0.3, 0.6, 0.9]
            .iter()
            .map(|&r| kernel(m).diagonal_value(&Paravector::unit(sig, 1).scale(&r)))
            .collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]), "m={m}: {values:?}");
    }
}

#[test]
fn cache_round_trip_is_exact() {
    let k = kernel(2);
    let text = k.to_cache_string();
    let back = TruncatedSzegoKernel::from_cache(k.spec().clone(), &text).unwrap();
    let z = Paravector::from_slice(&[0.1, -0.2, 0.3]).unwrap();
    assert_eq!(k.eval(&z, &z), back.eval(&z, &z));
    let other = KernelSpec::new(k.surface().clone(), 4, 12);
    assert!(TruncatedSzegoKernel::from_cache(other, &text).is_err());
}

#[test]
fn distance_matrix_is_a_metric() {
    let metric = SzegoMetric::new(kernel(1).clone());
    let grid = DistanceGrid::build(&metric, GridSpec { step: 0.1, ..GridSpec::default() }).unwrap();
    let pts: Vec<Paravector<f64>> =
        [[0.0, 0.0], [0.4, 0.1], [-0.3, 0.35], [0.1, -0.5]].iter().map(|p| Paravector::from_slice(p).unwrap()).collect();
    let d = grid.distance_matrix(&pts).unwrap();
    for i in 0..pts.len() {
        assert_eq!(d.values[i][i], 0.0);
        for j in 0..pts.len() {
            assert_eq!(d.values[i][j], d.values[j][i]);
            if i != j {
                assert!(d.values[i][j] > 0.0);
                assert!(d.values[i][j] <= d.straight[i][j]);
            }
            for k in 0..pts.len() {
                assert!(d.values[i][k] <= d.values[i][j] + d.values[j][k] + 1e-12);
            }
        }
    }
}
