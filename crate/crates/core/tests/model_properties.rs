use mdimer::model::{enumerate, log_partition_exact, split_sizes, EnumerationOptions};
use mdimer::{DimerCounts, ModelParams};
use proptest::prelude::*;

fn symmetric(v: [f64; 6]) -> [[f64; 3]; 3] {
    [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]]
}

fn params_strategy(h_range: f64, j_range: f64) -> impl Strategy<Value = ModelParams> {
    (
        0.05f64..0.95,
        prop::array::uniform3(-h_range..h_range),
        prop::array::uniform6(-j_range..j_range),
    )
        .prop_map(|(alpha, h, j)| ModelParams::new(alpha, h, symmetric(j)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_function_at_least_one(n in 2u64..=60, p in params_strategy(3.0, 2.0)) {
        let lz = log_partition_exact(n, &p).unwrap();
        prop_assert!(lz >= -1e-12, "log Z = {lz}");
    }

    #[test]
    fn enumeration_visits_every_admissible_class(n in 2u64..=40, alpha in 0.05f64..0.95) {
        let p = ModelParams::zero_coupling(alpha, [0.0; 3]).unwrap();
        let s = enumerate(n, &p, EnumerationOptions::default()).unwrap();
        let sizes = split_sizes(n, alpha).unwrap();
        let mut count = 0u64;
        for d_a in 0..=sizes.n_a {
            for d_b in 0..=sizes.n_b {
                for d_ab in 0..=n {
                    if DimerCounts::new(d_a, d_b, d_ab).monomers(&sizes).is_some() {
                        count += 1;
                    }
                }
            }
        }
        prop_assert_eq!(s.classes, count);
    }

    #[test]
    fn swapping_populations_leaves_z_unchanged(
        n_a in 1u64..=30,
        n_b in 1u64..=30,
        h in prop::array::uniform3(-2.0f64..2.0),
        j in prop::array::uniform6(-1.5f64..1.5),
    ) {
        let n = n_a + n_b;
        let alpha = n_a as f64 / n as f64;
        let p = ModelParams::new(alpha, h, symmetric(j)).unwrap();
        let q = p.swapped();
        prop_assume!(split_sizes(n, alpha).unwrap().n_a == n_a);
        prop_assume!(split_sizes(n, q.alpha).unwrap().n_a == n_b);
        let a = log_partition_exact(n, &p).unwrap();
        let b = log_partition_exact(n, &q).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn field_derivative_is_mean_count(n in 4u64..=40, p in params_strategy(2.0, 1.0), i in 0usize..3) {
        let step = 1e-5;
        let mut up = p;
        up.h[i] += step;
        let mut down = p;
        down.h[i] -= step;
        let fd = (log_partition_exact(n, &up).unwrap() - log_partition_exact(n, &down).unwrap())
            / (2.0 * step);
        let s = enumerate(n, &p, EnumerationOptions::default()).unwrap();
        let mean = s.densities[i] * n as f64;
        prop_assert!((fd - mean).abs() <= 1e-6 * mean.abs().max(1e-2), "fd {fd} vs {mean}");
    }

    #[test]
    fn mean_count_increases_with_its_field(n in 4u64..=40, p in params_strategy(2.0, 1.0), i in 0usize..3) {
        let mut up = p;
        up.h[i] += 0.1;
        let lo = enumerate(n, &p, EnumerationOptions::default()).unwrap().densities[i];
        let hi = enumerate(n, &up, EnumerationOptions::default()).unwrap().densities[i];
        prop_assert!(hi >= lo - 1e-15, "{lo} -> {hi}");
    }
}
