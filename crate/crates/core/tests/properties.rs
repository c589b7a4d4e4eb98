use approx::assert_relative_eq;
use proptest::prelude::*;

use tubeflow::curvature_scan::{gram_schmidt_plane, p_profile};
use tubeflow::deformation::{deform_conformal, deform_g00, DeformationKind, DeformationProfile};
use tubeflow::flow::JacobiState;
use tubeflow::hyperbolicity::{
    analytic_rate_symmetric, f_zero_expanded, f_zero_sum_of_squares, theta, ConeCenter, ConeFamily,
};
use tubeflow::model::{FermiChart, ModelSpec};
use tubeflow::sampling::{job_rng, orthonormalize, unit_vector};
use tubeflow::tensor::{curvature_at, MetricChart};

fn vec6() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn theta_is_scale_invariant(seed in any::<u64>(), c in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64]) {
        let mut rng = job_rng(seed, 0);
        let u = unit_vector(&mut rng, 6);
        let w = orthonormalize(unit_vector(&mut rng, 6), std::slice::from_ref(&u));
        prop_assume!(w.is_some());
        let basis = vec![u, w.unwrap()];
        let z = unit_vector(&mut rng, 6);
        let scaled: Vec<f64> = z.iter().map(|x| c * x).collect();
        let a = theta(&basis, &z).unwrap();
        let b = theta(&basis, &scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-14, "{a} {b}");
        prop_assert!((0.0..=1.0 + 1e-15).contains(&a));
    }
}

proptest! {
    #[test]
    fn f_zero_decomposition_is_an_identity(xi in prop::collection::vec(-1.0..1.0f64, 3), eta in prop::collection::vec(-1.0..1.0f64, 3)) {
        let spec = ModelSpec::default();
        let a = f_zero_expanded(&spec, &xi, &eta);
        let b = f_zero_sum_of_squares(&spec, &xi, &eta);
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn unstable_rate_is_nonnegative(z in vec6()) {
        prop_assume!(z.iter().any(|x| x.abs() > 1e-3));
        let cone = ConeFamily::new(ConeCenter::AUnstable, 0.9).unwrap();
        let r = analytic_rate_symmetric(&cone, &JacobiState::from_slice(&z), &[1.0, 0.0, 0.0]).unwrap();
        prop_assert!(r.value >= 0.0);
        prop_assert!(r.degenerate || r.value > 0.0);
    }

    #[test]
    fn stable_rate_is_nonpositive(z in vec6()) {
        prop_assume!(z.iter().any(|x| x.abs() > 1e-3));
        let cone = ConeFamily::new(ConeCenter::AStable, 0.9).unwrap();
        let r = analytic_rate_symmetric(&cone, &JacobiState::from_slice(&z), &[1.0, 0.0, 0.0]).unwrap();
        prop_assert!(r.value <= 0.0);
    }

    #[test]
    fn gram_schmidt_is_orthonormal_off_axis(x1 in -0.045..0.045f64, x2 in -0.045..0.045f64, xs in -0.0024..0.0024f64, t in 0.0..6.0f64) {
        let base = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let chart = deform_g00(base, DeformationProfile::new(DeformationKind::G00, 4, 3, 3, 0.05).unwrap()).unwrap();
        let pair = gram_schmidt_plane(&chart, &[t, x1, x2, xs], &[0.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        prop_assert!(pair.gram_defect < 1e-12);
    }
}

#[test]
fn theta_examples() {
    let e = vec![vec![0.0, 1.0, 0.0]];
    assert_eq!(theta(&e, &[0.0, -4.0, 0.0]).unwrap(), 1.0);
    assert_eq!(theta(&e, &[1.0, 0.0, 0.0]).unwrap(), 0.0);
    assert_relative_eq!(theta(&e, &[0.0, 1.0, 1.0]).unwrap(), 0.5, epsilon = 1e-15);
    assert!(theta(&e, &[0.0, 0.0, 0.0]).is_err());
}

#[test]
fn sum_of_squares_vanishes_only_at_zero() {
    let spec = ModelSpec::default();
    assert_eq!(f_zero_sum_of_squares(&spec, &[0.0; 3], &[0.0; 3]), 0.0);
    // ξ = η purely in A gives zero A-part
    assert_eq!(f_zero_sum_of_squares(&spec, &[0.7, 0.0, 0.0], &[0.7, 0.0, 0.0]), 0.0);
    assert_eq!(f_zero_expanded(&spec, &[0.7, 0.0, 0.0], &[0.7, 0.0, 0.0]), 0.0);
}

#[test]
fn p_profile_examples() {
    for eps in [0.2, 0.1, 0.05] {
        let p = p_profile(eps, 2).unwrap();
        assert_eq!(p.p0, 0.25);
        assert_relative_eq!(p.p2, -12.0 / eps.powi(4) + 0.5, max_relative = 1e-12);
        assert_eq!((p.global_max, p.argmax), (0.25, 0.0));
        let p3 = p_profile(eps, 3).unwrap();
        assert!(p3.max_abs_away_from_zero < 0.25);
        assert_relative_eq!(p3.p2, p3.p2_expected, max_relative = 1e-12);
    }
}

#[test]
fn deformations_agree_with_base_outside_support() {
    let base = FermiChart::from_spec(ModelSpec::default()).unwrap();
    let a = deform_conformal(base.clone(), DeformationProfile::new(DeformationKind::Conformal, 4, 3, 3, 0.05).unwrap()).unwrap();
    let b = deform_g00(base.clone(), DeformationProfile::new(DeformationKind::G00, 4, 3, 3, 0.05).unwrap()).unwrap();
    for p in [[0.3, 0.0, 0.0, 0.003], [1.0, 0.06, 0.0, 0.0], [2.0, 0.01, -0.05, 0.001]] {
        assert_eq!(a.jet(&p), base.jet(&p));
        assert_eq!(b.jet(&p), base.jet(&p));
        assert_eq!(curvature_at(&a, &p).unwrap(), curvature_at(&base, &p).unwrap());
    }
}
