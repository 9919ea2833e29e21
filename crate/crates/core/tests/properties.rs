use nonsmooth_lb::instance::Certificate;
use nonsmooth_lb::oracle::resisting_query;
use nonsmooth_lb::vecspace::sample_haar_orthonormal;
use nonsmooth_lb::{DenseVector, HardInstance, OrthonormalBasis, QueryLedger};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, d)
}

fn point_in_ball(d: usize, radius: f64) -> impl Strategy<Value = DenseVector> {
    vector(d).prop_map(move |v| {
        let mut x = DenseVector::new(v).unwrap();
        x.project_to_ball(radius);
        x
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_splits_orthogonally(seed in any::<u64>(), m in 0usize..6, x in vector(8)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = if m == 0 {
            OrthonormalBasis::empty(8)
        } else {
            sample_haar_orthonormal(8, m, &mut rng).unwrap()
        };
        let x = DenseVector::new(x).unwrap();
        let p = basis.project(&x).unwrap();
        let q = basis.project_perp(&x).unwrap();
        let scale = x.dot(&x).max(1.0);
        prop_assert!((p.dot(&p) + q.dot(&q) - x.dot(&x)).abs() <= 1e-10 * scale);
        for b in basis.vectors() {
            prop_assert!(q.dot(b).abs() <= 1e-10 * scale.sqrt());
        }
        prop_assert!((basis.projected_norm_sq(&x).unwrap() - p.dot(&p)).abs() <= 1e-10 * scale);
        // Projecting twice changes nothing.
        let pp = basis.project(&p).unwrap();
        prop_assert!(pp.sub(&p).norm() <= 1e-10 * scale.sqrt());
    }

    #[test]
    fn value_scales_with_l_and_b(
        seed in any::<u64>(),
        l in 0.1f64..10.0,
        b in 0.1f64..10.0,
        x in point_in_ball(12, 1.0),
    ) {
        let unit = HardInstance::build(3, 12, 1.0, 1.0, seed).unwrap();
        let scaled = HardInstance::from_basis(unit.vectors().clone(), l, b, seed).unwrap();
        let fx = unit.evaluate(&x).unwrap();
        let fy = scaled.evaluate(&x.scaled(b)).unwrap();
        prop_assert!((fy - l * b * fx).abs() <= 1e-12 * l * b);
        prop_assert!(
            (scaled.reference_value() - l * b * unit.reference_value()).abs() <= 1e-12 * l * b
        );
    }

    #[test]
    fn oracle_answers_are_reproducible(seed in any::<u64>(), x in point_in_ball(10, 2.0)) {
        let inst = HardInstance::build(4, 10, 1.5, 2.0, seed).unwrap();
        let mut a = QueryLedger::new();
        let mut b = QueryLedger::new();
        let ra = resisting_query(&inst, &mut a, x.clone()).unwrap();
        let rb = resisting_query(&inst, &mut b, x.clone()).unwrap();
        prop_assert_eq!(&ra, &rb);
        prop_assert_eq!(ra.value.to_bits(), inst.evaluate(&x).unwrap().to_bits());
        prop_assert_eq!(&ra.subgradient, &inst.v(ra.active_index).scaled(1.5));
    }

    #[test]
    fn certified_points_are_not_eps_optimal(seed in any::<u64>(), x in point_in_ball(16, 1.0)) {
        let inst = HardInstance::build(4, 16, 1.0, 1.0, seed).unwrap();
        let eps = inst.target_eps();
        if let Certificate::NotSuboptimal { .. } = inst.certify_not_suboptimal(&x, eps).unwrap() {
            prop_assert!(inst.evaluate(&x).unwrap() > inst.reference_value() + eps);
        }
    }

    #[test]
    fn value_is_bounded_by_reference_bracket(seed in any::<u64>(), x in point_in_ball(16, 1.0)) {
        let inst = HardInstance::build(4, 16, 1.0, 1.0, seed).unwrap();
        let r = inst.reference_solution();
        prop_assert!(inst.evaluate(&x).unwrap() >= r.optimum_lower - 1e-12);
        prop_assert!(r.optimum_lower <= r.f_x_hat && r.f_x_hat == r.optimum_upper);
    }
}
