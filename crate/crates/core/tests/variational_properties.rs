use mdimer::model::log_partition_exact;
use mdimer::variational::{
    entropy, fixed_point_residual, fixed_point_solve, grad_psi, maximize_psi, pressure, psi,
    solve_zero_coupling, FixedPointOptions,
};
use mdimer::{DimerDensities, ModelParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn symmetric(v: [f64; 6]) -> [[f64; 3]; 3] {
    [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]]
}

/// Map the unit cube onto `Ω_α`.
fn cube_point(alpha: f64, u: [f64; 3]) -> DimerDensities {
    let d_ab = u[2] * alpha.min(1.0 - alpha);
    DimerDensities::new(u[0] * (alpha - d_ab) / 2.0, u[1] * (1.0 - alpha - d_ab) / 2.0, d_ab)
}

fn params_strategy(h_range: f64, j_range: f64) -> impl Strategy<Value = ModelParams> {
    (
        0.05f64..0.95,
        prop::array::uniform3(-h_range..h_range),
        prop::array::uniform6(-j_range..j_range),
    )
        .prop_map(|(alpha, h, j)| ModelParams::new(alpha, h, symmetric(j)).unwrap())
}

fn interior(lo: f64) -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(lo..(1.0 - lo))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn pressure_is_nonnegative(p in params_strategy(3.0, 2.0)) {
        prop_assert!(pressure(&p).unwrap() >= 0.0);
    }

    #[test]
    fn entropy_is_concave(
        alpha in 0.02f64..0.98,
        u1 in interior(0.0),
        u2 in interior(0.0),
        t in 0.0f64..1.0,
    ) {
        let d1 = cube_point(alpha, u1);
        let d2 = cube_point(alpha, u2);
        let mix = DimerDensities::from_array([0, 1, 2].map(|k| t * d1.as_array()[k] + (1.0 - t) * d2.as_array()[k]));
        let lhs = entropy(&mix, alpha).unwrap();
        let rhs = t * entropy(&d1, alpha).unwrap() + (1.0 - t) * entropy(&d2, alpha).unwrap();
        prop_assert!(lhs >= rhs - 1e-12, "{lhs} < {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn gradient_matches_finite_differences(p in params_strategy(2.0, 2.0), u in interior(0.05)) {
        let d = cube_point(p.alpha, u);
        let g = grad_psi(&d, &p).unwrap();
        for k in 0..3 {
            let step = 1e-6 * d.as_array()[k];
            let mut a = d.as_array();
            let mut b = d.as_array();
            a[k] += step;
            b[k] -= step;
            let fd = (psi(&DimerDensities::from_array(a), &p).unwrap()
                - psi(&DimerDensities::from_array(b), &p).unwrap())
                / (2.0 * step);
            prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0), "k={k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn maximizers_are_fixed_points(p in params_strategy(2.0, 1.0)) {
        for m in maximize_psi(&p).unwrap() {
            if m.interior {
                let r = fixed_point_residual(&m.d, &p);
                prop_assert!(r.iter().all(|v| v.abs() < 1e-10), "{r:?}");
            }
        }
    }

    #[test]
    fn fixed_points_are_stationary(p in params_strategy(2.0, 1.0), u in interior(0.05)) {
        let d0 = cube_point(p.alpha, u);
        let d = fixed_point_solve(&p, &d0, FixedPointOptions::default()).unwrap();
        let g = grad_psi(&d, &p).unwrap();
        prop_assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
    }
}

#[test]
fn zero_coupling_solution_is_unique() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let alpha = rng.random_range(0.05..0.95);
        let h = [0, 1, 2].map(|_| rng.random_range(-2.0..2.0));
        let p = ModelParams::zero_coupling(alpha, h).unwrap();
        let reference = solve_zero_coupling(h, alpha).unwrap();
        for _ in 0..100 {
            let u = [0, 1, 2].map(|_| rng.random_range(0.0..1.0));
            let d = fixed_point_solve(&p, &cube_point(alpha, u), FixedPointOptions::default()).unwrap();
            assert!(d.max_abs_diff(&reference) < 1e-10);
        }
        // and it is the global maximizer
        let m = maximize_psi(&p).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m[0].d.max_abs_diff(&reference) < 1e-10);
    }
}

/// `C_N = |(1/N) log Z_N − p|·N / ln N` stays bounded and does not grow.
#[test]
fn enumeration_converges_to_pressure() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sizes = [50u64, 100, 200, 400, 800];
    for _ in 0..10 {
        let alpha = rng.random_range(0.2..0.8);
        let h = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
        let j = symmetric([0, 1, 2, 3, 4, 5].map(|_| rng.random_range(-1.0..1.0)));
        let p = ModelParams::new(alpha, h, j).unwrap();
        let limit = pressure(&p).unwrap();
        let c: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                let nf = n as f64;
                let err = log_partition_exact(n, &p).unwrap() / nf - limit;
                err.abs() * nf / nf.ln()
            })
            .collect();
        // Rounding αN adds O(1/N) noise of either sign, so C_N wobbles;
        // the envelope must hold uniformly and not widen at the largest N.
        let envelope = c[..4].iter().cloned().fold(0.0, f64::max);
        assert!(envelope < 0.5, "alpha={alpha} h={h:?}: {c:?}");
        assert!(c[4] <= envelope, "alpha={alpha} h={h:?}: {c:?}");
    }
}
