use std::f64::consts::PI;

use lavgap_core::counterexample::{
    compute_r1, compute_r2, compute_r3, upper_bound_on_mesh, SharpnessInstance,
};
use lavgap_core::domain_grid::{build_disk_mesh, node_holder_seminorm, Domain, GridFunction};
use lavgap_core::energy::DoublePhaseIntegrand;
use lavgap_core::mollify::{
    jensen_domination_check, l1_error, make_kernel, smooth_bump, tent, ShrinkMollifier,
};
use lavgap_core::weights::{power_weight, zk_membership_verdict};
use proptest::prelude::*;
use statrs::function::beta::beta;

/// Planar `r₁` in closed form: separating radius and angle gives a power
/// integral times `4∫₀^{π/4} sin(2s)^{−β} ds = B((1−β)/2, 1/2)`.
fn r1_closed(q: f64, kappa: f64) -> f64 {
    let b = kappa / (q - 1.0);
    let radial = 1.0 - (q + kappa) / (q - 1.0);
    beta((1.0 - b) / 2.0, 0.5) / (radial + 1.0)
}

fn r2_closed(p: f64) -> f64 {
    2f64.powf(p) * beta((p + 1.0) / 2.0, 0.5) / (2.0 - p)
}

#[test]
fn default_constants_match_gamma_values() {
    // Γ(1/3), Γ(1/2), Γ(5/6), Γ(5/4), Γ(7/4)
    let (g13, g12, g56) = (2.678_938_534_707_747_6, PI.sqrt(), 1.128_787_029_908_126);
    let (g54, g74) = (0.906_402_477_055_477, 0.919_062_526_848_883_2);
    let r1 = compute_r1(2, 4.0, 1.0).unwrap();
    assert!(
        (r1.estimate.value - 3.0 * g13 * g12 / g56).abs() < 1e-9,
        "{r1:?}"
    );
    let r2 = compute_r2(2, 1.5).unwrap();
    assert!(
        (r2.value - 2f64.powf(1.5) * g54 * g12 / g74 / 0.5).abs() < 1e-9,
        "{r2:?}"
    );
    assert!((compute_r3(2).unwrap() - PI).abs() < 1e-12);
    assert!((compute_r3(3).unwrap() - 4.0 * PI * (1.0 - 0.5 * 2f64.sqrt())).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn r1_matches_beta_closed_form(kappa in 0.3f64..2.0, dq in 0.2f64..4.0) {
        let q = 2.0 + kappa + dq;
        let r = compute_r1(2, q, kappa).unwrap();
        let exact = r1_closed(q, kappa);
        prop_assert!((r.estimate.value - exact).abs() <= 1e-7 * exact, "{} vs {exact}", r.estimate.value);
        prop_assert!((r.estimate.check - exact).abs() <= 1e-7 * exact);
    }

    #[test]
    fn r2_matches_beta_closed_form(p in 1.05f64..1.95) {
        let r = compute_r2(2, p).unwrap();
        let exact = r2_closed(p);
        prop_assert!((r.value - exact).abs() <= 1e-9 * exact, "{} vs {exact}", r.value);
    }
}

#[test]
fn mesh_upper_bound_tracks_the_closed_form() {
    let inst = SharpnessInstance::default_planar().unwrap();
    let mesh = build_disk_mesh(1.0, 1.0 / 32.0).unwrap();
    let check = upper_bound_on_mesh(&inst, &mesh).unwrap();
    let exact = inst.t0.powf(inst.p) * r2_closed(inst.p);
    assert!(
        (check.mesh.total - exact).abs() <= 1e-2 * exact,
        "{check:?}"
    );
    assert!(check.mesh.q_part <= 1e-10);
}

#[test]
fn l1_error_eventually_decreases_for_shipped_functions() {
    let mesh = build_disk_mesh(1.0, 1.0 / 32.0).unwrap();
    let kernel = make_kernel(2).unwrap();
    let fns: [fn(&[f64; 2]) -> f64; 3] = [tent, smooth_bump, |x| x[0] * x[1] + x[0]];
    for f in fns {
        let v = GridFunction::from_fn(&mesh, f);
        let errs: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&d| {
                l1_error(
                    &ShrinkMollifier::for_domain(d, &Domain::unit_disk(), kernel.clone()).unwrap(),
                    &v,
                )
                .unwrap()
            })
            .collect();
        assert!(errs.windows(2).skip(1).all(|w| w[1] < w[0]), "{errs:?}");
    }
}

#[test]
fn mollified_energy_is_dominated() {
    let mesh = build_disk_mesh(1.0, 1.0 / 32.0).unwrap();
    let a = power_weight(1.0, [0.0, 0.0]).unwrap();
    let verdict = zk_membership_verdict(&a, 1.0, &[0.1, 0.05, 0.025]).unwrap();
    let integrand = DoublePhaseIntegrand::new(2.0, 3.0, a).unwrap();
    let phi = GridFunction::from_fn(&mesh, tent);
    for delta in [0.1, 0.05] {
        let m = ShrinkMollifier::for_domain(delta, &Domain::unit_disk(), make_kernel(2).unwrap())
            .unwrap();
        let rep = jensen_domination_check(&m, &phi, &integrand, &verdict, None).unwrap();
        assert!(rep.lhs_integral <= rep.rhs_integral, "{rep:?}");
        assert_eq!(rep.violations, 0, "{rep:?}");
    }
}

#[test]
fn sampled_holder_seminorms_stay_below_exact_values() {
    let mesh = build_disk_mesh(1.0, 1.0 / 16.0).unwrap();
    type Case = (fn(&[f64; 2]) -> f64, f64, f64);
    let cases: [Case; 3] = [
        (|x| x[0], 1.0, 1.0),
        (|x| x[0].hypot(x[1]).sqrt(), 0.5, 1.0),
        (|x| x[0].sin(), 1.0, 1.0),
    ];
    for (f, gamma, exact) in cases {
        let v = GridFunction::from_fn(&mesh, f);
        let est = node_holder_seminorm(&mesh, v.values(), gamma, 1_000_000);
        assert!(
            est <= exact * (1.0 + 1e-12) && est > 0.9 * exact,
            "γ = {gamma}: {est}"
        );
    }
}
