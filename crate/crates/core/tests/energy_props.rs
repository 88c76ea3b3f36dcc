use nalgebra::{Matrix3, Rotation3, Unit};
use proptest::prelude::*;
use tpsurf::energy::{
    cosine_factor, curvatures, dirichlet_off_loss, eikonal_loss, smooth_loss, total_loss, FeatureIndex, LossComponents,
    LossWeights,
};
use tpsurf::field::Jet3;
use tpsurf::fixtures::sphere_field;
use tpsurf::field::ScalarField;
use tpsurf::Vec3;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Jets with gradient norm in [0.5, 2] and Hessian entries in [-2, 2].
fn jet() -> impl Strategy<Value = Jet3> {
    let grad = vec3()
        .prop_filter("direction", |v| v.norm() > 1e-3)
        .prop_flat_map(|v| (Just(v.normalize()), 0.5..2.0f64))
        .prop_map(|(d, n)| d * n);
    (grad, prop::array::uniform6(-2.0..2.0f64), -1.0..1.0f64).prop_map(|(g, h, v)| Jet3::new(v, g, h))
}

fn rotate(j: &Jet3, r: &Matrix3<f64>) -> Jet3 {
    Jet3::from_matrix(j.value, r * j.grad, &(r * j.hess_matrix() * r.transpose()))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn density_is_nonnegative(j in jet()) {
        let c = curvatures(&j).unwrap();
        prop_assert!(c.density >= -1e-12 * (1.0 + 4.0 * c.mean * c.mean), "{c:?}");
    }

    #[test]
    fn density_is_the_sum_of_squared_principal_curvatures(j in jet()) {
        let c = curvatures(&j).unwrap();
        // k1, k2 are the roots of k^2 - 2Hk + K; their squares sum to 4H^2 - 2K.
        let disc = (c.mean * c.mean - c.gaussian).max(0.0).sqrt();
        let (k1, k2) = (c.mean + disc, c.mean - disc);
        if c.mean * c.mean >= c.gaussian {
            prop_assert!(close(k1 * k1 + k2 * k2, c.density));
        }
    }

    #[test]
    fn curvature_is_invariant_under_positive_scaling(j in jet(), pick in 0usize..3) {
        let s = [0.5, 2.0, 10.0][pick];
        let a = curvatures(&j).unwrap();
        let b = curvatures(&j.scaled(s)).unwrap();
        prop_assert!(close(a.mean, b.mean) && close(a.gaussian, b.gaussian) && close(a.density, b.density));
    }

    #[test]
    fn curvature_is_invariant_under_rotation(j in jet(), axis in vec3(), angle in -3.14..3.14f64) {
        prop_assume!(axis.norm() > 1e-3);
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner();
        let a = curvatures(&j).unwrap();
        let b = curvatures(&rotate(&j, &r)).unwrap();
        prop_assert!(close(a.mean, b.mean) && close(a.gaussian, b.gaussian) && close(a.density, b.density));
    }

    #[test]
    fn negating_the_field_flips_mean_curvature_only(j in jet()) {
        let a = curvatures(&j).unwrap();
        let b = curvatures(&j.scaled(-1.0)).unwrap();
        prop_assert!(close(a.mean, -b.mean) && close(a.gaussian, b.gaussian) && close(a.density, b.density));
    }

    #[test]
    fn cosine_factor_is_bounded_and_periodic(it in 0usize..10_000_000, c in 1usize..5000) {
        let t = cosine_factor(it, c);
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(t, cosine_factor(it + c, c));
    }

    #[test]
    fn off_surface_loss_is_a_mean_of_unit_terms(vals in prop::collection::vec(-1.0..1.0f64, 1..50)) {
        let l = dirichlet_off_loss(&vals, 100.0).unwrap();
        prop_assert!(l > 0.0 && l <= 1.0);
    }
}

#[test]
fn sphere_and_plane_curvatures() {
    for r in [0.2, 1.0, 3.0] {
        let j = sphere_field(r).jets(&[Vec3::new(r, 0.0, 0.0)], tpsurf::field::JetOrder::Hessian)[0];
        let c = curvatures(&j).unwrap();
        assert!((c.mean.abs() - 1.0 / r).abs() < 1e-12);
        assert!((c.gaussian - 1.0 / (r * r)).abs() < 1e-12);
        assert!((c.density - 2.0 / (r * r)).abs() < 1e-12);
    }
    let plane = Jet3::new(0.0, Vec3::new(0.6, 0.0, 0.8), [0.0; 6]);
    let c = curvatures(&plane).unwrap();
    assert_eq!((c.mean, c.gaussian, c.density), (0.0, 0.0, 0.0));
}

#[test]
fn cosine_schedule_landmarks() {
    for c in [2, 100, 1000, 2000, 4096] {
        assert_eq!(cosine_factor(0, c), 1.0);
        assert_eq!(cosine_factor(c / 2, c), 0.0);
        assert_eq!(cosine_factor(c, c), 1.0);
    }
}

#[test]
fn zero_cosine_factor_removes_the_smooth_term() {
    let w = LossWeights::default();
    let comp = LossComponents {
        eikonal: 0.3,
        dirichlet_on: 0.01,
        dirichlet_off: 0.2,
        smooth: 1e6,
    };
    let half = total_loss(&comp, &w, w.cycle_length / 2).unwrap();
    let expected = w.eikonal * 0.3 + w.dirichlet_on * 0.01 + w.dirichlet_off * 0.2;
    assert_eq!(half.tau, 0.0);
    assert_eq!(half.total, expected);
}

#[test]
fn smooth_energy_vanishes_on_feature_samples() {
    let j = sphere_field(1.0).jets(&[Vec3::new(1.0, 0.0, 0.0)], tpsurf::field::JetOrder::Hessian)[0];
    let p = Vec3::new(1.0, 0.0, 0.0);
    assert!((smooth_loss(&[j], &[p], &FeatureIndex::new(&[])).unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(smooth_loss(&[j], &[p], &FeatureIndex::new(&[p])).unwrap(), 0.0);
}

#[test]
fn eikonal_is_zero_on_a_distance_field() {
    let pts: Vec<Vec3> = (0..20).map(|i| Vec3::new(0.1 + 0.02 * i as f64, -0.2, 0.3)).collect();
    assert!(eikonal_loss(&sphere_field(0.4).jets(&pts, tpsurf::field::JetOrder::Gradient)).unwrap() < 1e-15);
}
