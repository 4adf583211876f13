use std::path::PathBuf;

use critnls::Exponent;
use critnls_cli::{CheckKind, RunConfig};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![1e-12f64..1e12, -1e6f64..1e6, Just(0.1), Just(1e-300)]
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        (1i64..40, 1i64..9).prop_map(|(num, den)| Exponent::Ratio { num, den }),
        (2.0f64..8.0).prop_map(Exponent::Float),
    ]
}

fn path() -> impl Strategy<Value = PathBuf> {
    "[a-z][a-z0-9_./-]{0,20}".prop_map(PathBuf::from)
}

prop_compose! {
    fn config()(
        dim in proptest::option::of(3u32..12),
        q in proptest::option::of(exponent()),
        lambda in proptest::option::of(finite()),
        window in proptest::option::of((1e-8f64..1.0, 1.0f64..1e4)),
        ppd in proptest::option::of(1usize..40),
        tol in proptest::option::of(1e-14f64..1e-2),
        out in proptest::option::of(path()),
        jobs in proptest::option::of(0usize..64),
        report in proptest::option::of(path()),
        checks in proptest::option::of(proptest::sample::subsequence(CheckKind::ALL.to_vec(), 1..=4)),
        input in proptest::option::of(path()),
        prefactor in proptest::option::of(1e-6f64..1e6),
    ) -> RunConfig {
        RunConfig {
            dim, q, lambda, lambda_window: window, points_per_decade: ppd, tol, out, jobs,
            report, checks, input, prefactor,
        }
    }
}

proptest! {
    #[test]
    fn parse_of_serialized_is_identity(cfg in config()) {
        let text = cfg.to_string();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
