use std::sync::OnceLock;

use lavgap_core::counterexample::{
    cone_weight, gap_report, in_cone, u_star_gradient, SharpnessInstance,
};
use lavgap_core::domain_grid::{
    build_disk_mesh, gradient, integrate, Domain, Field, GridFunction, Mesh, QuadratureRule,
};
use lavgap_core::energy::{
    energy, energy_of_gradient_field, luxemburg_norm, modular, regime_classify, truncate,
    DoublePhaseIntegrand, SingularPoint,
};
use lavgap_core::minimize::{minimize_energy, DiscreteProblem, SolverOptions};
use lavgap_core::mollify::{make_kernel, smooth_bump, tent, ShrinkMollifier};
use lavgap_core::weights::{power_weight, zk_constant_estimate, Weight};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coarse() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| build_disk_mesh(1.0, 0.1).unwrap())
}

fn fine() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| build_disk_mesh(1.0, 1.0 / 32.0).unwrap())
}

fn random_values(mesh: &Mesh, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..mesh.num_nodes())
        .map(|_| scale * rng.gen_range(-1.0..1.0))
        .collect()
}

fn shipped(i: usize) -> fn(&[f64; 2]) -> f64 {
    const F: [fn(&[f64; 2]) -> f64; 4] =
        [|x| x[0], tent, smooth_bump, |x| x[0] * x[1] + 0.5 * x[1]];
    F[i % F.len()]
}

fn integrand(p: f64, q: f64, kappa: f64) -> DoublePhaseIntegrand {
    DoublePhaseIntegrand::new(p, q, power_weight(kappa, [0.0, 0.0]).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_is_convex_along_segments(seed in 0u64..1000, p in 1.1f64..3.0, dq in 0.1f64..2.0) {
        let mesh = coarse();
        let it = integrand(p, p + dq, 1.0);
        let u = GridFunction::new(mesh, random_values(mesh, seed, 1.0)).unwrap();
        let v = GridFunction::new(mesh, random_values(mesh, seed + 1, 2.0)).unwrap();
        let mid = u.add(&v).unwrap().scaled(0.5);
        let (eu, ev, em) = (energy(&it, &u).unwrap().total, energy(&it, &v).unwrap().total, energy(&it, &mid).unwrap().total);
        prop_assert!(em <= 0.5 * (eu + ev) + 1e-10, "{em} > mean of {eu}, {ev}");
    }

    #[test]
    fn integrate_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mesh = coarse();
        let rule = QuadratureRule::degree2();
        let f = |x: &[f64; 2]| x[0] * x[0] - x[1];
        let g = |x: &[f64; 2]| (x[0] + x[1]).sin();
        let combined = |x: &[f64; 2]| alpha * f(x) + beta * g(x);
        let lhs = integrate(&Field::Fn(&combined), mesh, &rule).unwrap();
        let rhs = alpha * integrate(&Field::Fn(&f), mesh, &rule).unwrap()
            + beta * integrate(&Field::Fn(&g), mesh, &rule).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + lhs.abs()));
    }

    #[test]
    fn affine_interpolants_have_exact_slopes(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let mesh = coarse();
        let u = GridFunction::from_fn(mesh, |x| a * x[0] + b * x[1] + c);
        for g in gradient(&u).unwrap() {
            prop_assert!((g[0] - a).abs() < 1e-11 && (g[1] - b).abs() < 1e-11);
        }
    }

    #[test]
    fn truncation_never_raises_energy(which in 0usize..4, scale in 0.2f64..4.0, k in 0.02f64..2.0) {
        let mesh = coarse();
        let f = shipped(which);
        let u = GridFunction::from_fn(mesh, |x| scale * f(x));
        let it = integrand(2.0, 3.0, 1.0);
        let t = truncate(&u, k).unwrap();
        prop_assert!(energy(&it, &t).unwrap().total <= energy(&it, &u).unwrap().total + 1e-12);
    }

    #[test]
    fn luxemburg_unit_ball_matches_modular(seed in 0u64..1000, scale in 0.05f64..3.0) {
        let mesh = coarse();
        let it = integrand(2.0, 3.0, 1.0);
        let u = GridFunction::new(mesh, random_values(mesh, seed, scale)).unwrap();
        let xi = gradient(&u).unwrap();
        let m = modular(&it, mesh, &xi).unwrap();
        let norm = luxemburg_norm(&it, mesh, &xi).unwrap();
        prop_assert_eq!(norm <= 1.0 + 1e-7, m <= 1.0 + 1e-7, "norm {} modular {}", norm, m);
    }

    #[test]
    fn mollifier_is_linear_and_bounded(seed in 0u64..1000, alpha in -2.0f64..2.0, delta in 0.05f64..0.24) {
        let mesh = coarse();
        let m = ShrinkMollifier::for_domain(delta, &Domain::unit_disk(), make_kernel(2).unwrap()).unwrap();
        let u = GridFunction::new(mesh, random_values(mesh, seed, 1.0)).unwrap();
        let v = GridFunction::from_fn(mesh, smooth_bump);
        let lhs = m.apply(&u.scaled(alpha).add(&v).unwrap()).unwrap();
        let rhs = m.apply(&u).unwrap().scaled(alpha).add(&m.apply(&v).unwrap()).unwrap();
        let scale = 1.0 + lhs.max_abs();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
        prop_assert!(m.apply(&u).unwrap().max_abs() <= u.max_abs() * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_is_radially_symmetric(r in 0.0f64..1.2, theta in 0.0f64..6.3) {
        let k = make_kernel(2).unwrap();
        let a = k.rho(&[r * theta.cos(), r * theta.sin()]);
        let b = k.rho(&[r, 0.0]);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        prop_assert!(a >= 0.0);
        if r >= 1.0 {
            prop_assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn constant_scale_is_monotone_in_kappa(k1 in 0.2f64..3.0, dk in 0.0f64..2.0, shift in 0.0f64..0.3) {
        // diameter of the half-disk sample set stays below one
        let mesh = build_disk_mesh(0.45, 0.09).unwrap();
        let a = power_weight(1.3, [shift, 0.0]).unwrap();
        let c1 = zk_constant_estimate(&a, k1, &mesh).unwrap().constant;
        let c2 = zk_constant_estimate(&a, k1 + dk, &mesh).unwrap().constant;
        prop_assert!(c1 <= c2 * (1.0 + 1e-12), "{c1} > {c2}");
    }

    #[test]
    fn regime_classifier_is_deterministic(n in 2usize..5, p in 1.01f64..4.0, dq in 0.01f64..6.0, kappa in 0.01f64..4.0) {
        let a = regime_classify(n, p, p + dq, kappa, None).unwrap();
        let b = regime_classify(n, p, p + dq, kappa, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cone_weight_vanishes_off_the_cone(r in 0.0f64..1.0, theta in 0.0f64..6.3, kappa in 0.5f64..3.0) {
        let a = cone_weight(kappa).unwrap();
        let x = [r * theta.cos(), r * theta.sin()];
        if !in_cone(&x) {
            prop_assert_eq!(a.eval(&x), 0.0);
        }
        prop_assert!(a.eval(&x) <= a.sup_bound);
    }

    #[test]
    fn gap_verdict_is_monotone_in_safety(s in 1.0f64..3.0, ds in 0.0f64..2.0) {
        let lo = SharpnessInstance::new(2, 1.5, 4.0, 1.0, s).unwrap();
        let hi = SharpnessInstance::new(2, 1.5, 4.0, 1.0, s + ds).unwrap();
        if gap_report(&lo, Vec::new()).verdict {
            prop_assert!(gap_report(&hi, Vec::new()).verdict);
        }
    }
}

#[test]
fn weight_vanishes_at_quadrature_points_outside_the_cone() {
    let mesh = fine();
    let a = cone_weight(1.0).unwrap();
    for c in 0..mesh.num_cells() {
        for (x, _) in QuadratureRule::degree5().mapped(&mesh.cell_points(c)) {
            if !in_cone(&x) {
                assert_eq!(a.eval(&x), 0.0, "a({x:?}) ≠ 0");
            }
        }
    }
}

#[test]
fn q_part_of_scaled_u_star_vanishes() {
    let mesh = fine();
    let inst = SharpnessInstance::default_planar().unwrap();
    let it = inst.integrand().unwrap();
    for t in [0.5, 1.0, inst.t0, 100.0] {
        let grad = move |x: &[f64; 2]| {
            let g = u_star_gradient(x);
            [t * g[0], t * g[1]]
        };
        let sp = SingularPoint {
            at: [0.0, 0.0],
            p_exponent: -1.5,
            q_exponent: -1.5,
        };
        let e = energy_of_gradient_field(&it, mesh, &grad, Some(sp)).unwrap();
        assert!(e.q_part <= 1e-10, "t = {t}: q-part {}", e.q_part);
        assert!(e.p_part > 0.0);
    }
}

#[test]
fn minimizer_energy_ignores_node_order() {
    let mesh = build_disk_mesh(1.0, 0.1).unwrap();
    let n = mesh.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let other = mesh.renumbered(&perm).unwrap();
    let it = integrand(1.8, 3.0, 1.0);
    let g = |x: &[f64; 2]| x[0] + 0.5 * x[1] * x[1];
    let solve = |m: &Mesh| {
        let problem = DiscreteProblem::new(m, it.clone(), g).unwrap();
        let start = GridFunction::from_fn(m, g);
        minimize_energy(&problem, &start, &SolverOptions::default()).unwrap()
    };
    let (a, b) = (solve(&mesh), solve(&other));
    assert!(a.converged && b.converged);
    assert!(
        (a.energy.total - b.energy.total).abs() <= 1e-8,
        "{} vs {}",
        a.energy.total,
        b.energy.total
    );
}

#[test]
fn bounded_below_weight_has_bounded_constant() {
    let mesh = build_disk_mesh(1.0, 1.0 / 16.0).unwrap();
    let a = Weight::new("1+|x|", 2.0, |x| 1.0 + x[0].hypot(x[1]));
    for kappa in [0.5, 1.0, 3.0, 8.0] {
        assert!(zk_constant_estimate(&a, kappa, &mesh).unwrap().constant <= 2.0);
    }
}
