use mdimer::gaussian::{
    laplace_region_maxima, mixing_lemma_checks, superadditivity_check, weight_matrix, z_star,
    z_via_gaussian, GaussianMethod,
};
use mdimer::model::{log_partition_exact, split_sizes};
use mdimer::quadrature::gauss_hermite_normal;
use mdimer::variational::pressure;
use mdimer::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random field with `W` positive definite.
fn random_field(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let h_a = rng.random_range(-1.5..1.5);
    let h_b = rng.random_range(-1.5..1.5);
    let margin = rng.random_range(0.2..3.0);
    [h_a, h_b, 0.5 * (h_a + h_b - margin)]
}

#[test]
fn gaussian_moment_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let h = random_field(&mut rng);
        let alpha = rng.random_range(0.2..0.8);
        let p = ModelParams::zero_coupling(alpha, h).unwrap();
        for n in 2..=40 {
            let g = z_via_gaussian(n, alpha, h, GaussianMethod::Quadrature).unwrap();
            let e = log_partition_exact(n, &p).unwrap();
            assert!((g.log_value - e).exp_m1().abs() < 1e-6, "N={n} h={h:?}: {} vs {e}", g.log_value);
        }
    }
}

#[test]
fn independent_components_when_mixed_field_vanishes() {
    let h: [f64; 3] = [0.3, -0.2, -40.0];
    let n = 24;
    let sizes = split_sizes(n, 0.4).unwrap();
    let rule = gauss_hermite_normal(100);
    let moment = |var: f64, p: u64| -> f64 {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(z, w)| w * (1.0 + var.sqrt() * z).powi(p as i32))
            .sum()
    };
    let product = moment(h[0].exp() / n as f64, sizes.n_a) * moment(h[1].exp() / n as f64, sizes.n_b);
    let z = z_via_gaussian(n, 0.4, h, GaussianMethod::Quadrature).unwrap();
    assert!((z.log_value - product.ln()).abs() < 1e-12);
}

#[test]
fn monte_carlo_agrees_within_error_bars() {
    let h = [0.2, -0.1, -0.8];
    let q = z_via_gaussian(10, 0.5, h, GaussianMethod::Quadrature).unwrap();
    let m = z_via_gaussian(
        10,
        0.5,
        h,
        GaussianMethod::MonteCarlo {
            samples: 1_000_000,
            seed: 42,
        },
    )
    .unwrap();
    assert!((m.log_value - q.log_value).abs() < 5.0 * m.error, "{m:?} vs {q:?}");
}

#[test]
fn laplace_maximum_lies_in_positive_quadrant() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let h = random_field(&mut rng);
        let alpha = rng.random_range(0.05..0.95);
        let w = weight_matrix(h).unwrap();
        let maxima = laplace_region_maxima(alpha, &w).unwrap();
        let q = maxima[0];
        assert_eq!(q.region, [true, true]);
        assert!(q.grad_norm < 1e-9, "{q:?}");
        assert!(q.xi[0] >= 0.0 && q.xi[1] >= 0.0, "{q:?}");
        for other in &maxima[1..] {
            assert!(other.value < q.value, "{other:?} beats {q:?}");
        }
    }
}

#[test]
fn restricted_moment_approaches_full_moment() {
    let h = [0.0, 0.0, -1.0];
    for n in [100, 150, 200] {
        let z = z_via_gaussian(n, 0.5, h, GaussianMethod::Quadrature).unwrap();
        let zs = z_star(n, 0.5, h).unwrap();
        assert!(zs.log_value.is_finite());
        assert!((z.log_value - zs.log_value).exp_m1().abs() < 1e-3, "N={n}");
    }
}

#[test]
fn superadditivity_on_random_decompositions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n1 = rng.random_range(1..=100);
        let n2 = rng.random_range(1..=100);
        let alpha = rng.random_range(0.1..0.9);
        let h = random_field(&mut rng);
        let s = superadditivity_check(n1, n2, alpha, h).unwrap();
        assert!(s.holds, "N1={n1} N2={n2} alpha={alpha} h={h:?}: {s:?}");
    }
}

#[test]
fn restricted_pressure_is_monotone_along_powers_of_two() {
    for h in [[0.0, 0.0, -1.0], [0.5, -0.3, -0.8]] {
        let v: Vec<f64> = (0..=7)
            .map(|k| {
                let n = 1u64 << k;
                z_star(n, 0.5, h).unwrap().log_value / n as f64
            })
            .collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0]), "{v:?}");
    }
}

#[test]
fn finite_volume_pressures_approach_variational_pressure() {
    let h = [0.0, 0.0, -1.0];
    let p = pressure(&ModelParams::zero_coupling(0.5, h).unwrap()).unwrap();
    let exact = log_partition_exact(128, &ModelParams::zero_coupling(0.5, h).unwrap()).unwrap() / 128.0;
    let star = (0..=7)
        .map(|k| z_star(1 << k, 0.5, h).unwrap().log_value / (1u64 << k) as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((exact - p).abs() < 0.02 && (star - p).abs() < 0.02, "{exact} {star} {p}");
    let exact_64 = log_partition_exact(64, &ModelParams::zero_coupling(0.5, h).unwrap()).unwrap() / 64.0;
    assert!((exact - p).abs() < (exact_64 - p).abs());
}

#[test]
fn mixing_lemmas_hold_on_random_sweeps() {
    let rep = mixing_lemma_checks(20_000).unwrap();
    assert!(rep.passed, "{rep:?}");
    // the covariance identity with N1=3, N2=7
    let g: f64 = 0.3;
    assert!((g * g / 3.0 + (1.0 - g) * (1.0 - g) / 7.0 - 0.1).abs() < 1e-16);
}
