//! Invariant suites: eigensolver identities on seeded random matrices, gauge
//! complexification, IPR bounds, walk unitarity, config round trip.

mod common;

use nhsl::io::{parse_config, Field, Grid, Model, RunConfig};
use proptest::prelude::*;

fn expect(check: common::Check) {
    match check {
        Ok(summary) => println!("{summary}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn eigensolver_invariants_on_random_matrices() {
    expect(common::eigensolver_invariants());
}

#[test]
fn gauge_field_is_an_imaginary_momentum_shift() {
    expect(common::gauge_complexification());
}

#[test]
fn ipr_lies_between_extended_and_localized_limits() {
    expect(common::ipr_bounds());
}

#[test]
fn walk_conserves_power_without_gain() {
    expect(common::walk_unitarity());
}

fn model_strategy() -> impl Strategy<Value = (Model, Vec<usize>)> {
    let sizes = prop::collection::btree_set(2usize..40, 1..4).prop_map(|s| s.into_iter().map(|m| 2 * m).collect::<Vec<_>>());
    prop_oneof![
        sizes.clone().prop_map(|m| (Model::Clean, m)),
        (0.1f64..5.0, sizes.clone()).prop_map(|(a, m)| (Model::Impurity { a }, m)),
        (0.1f64..5.0, sizes.clone()).prop_map(|(v, m)| (Model::Barrier { v }, m)),
        (0.1f64..5.0).prop_map(|v| (Model::Incommensurate { v, r: Some(1) }, vec![8, 34])),
        (0.1f64..5.0).prop_map(|v| (Model::Incommensurate { v, r: None }, vec![13, 21, 34])),
        (0.05f64..1.5).prop_map(|beta| (Model::Electric { beta, r: None }, vec![8, 55])),
        (0.05f64..1.5, -3.0f64..3.0, sizes).prop_map(|(beta, v, m)| (Model::BarrierPhase { beta, v }, m)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trip(
        (model, m) in model_strategy(),
        j in 0.1f64..3.0,
        h in prop_oneof![
            (-1.0f64..1.0).prop_map(Field::Value),
            (0.0f64..0.5, 1usize..50, 0.001f64..0.1).prop_map(|(start, n, step)| Field::Grid(Grid {
                start,
                stop: start + n as f64 * step,
                step,
            })),
        ],
        nk in prop::option::of(2usize..300),
        seed in prop::option::of(any::<u64>()),
        emit_vectors in any::<bool>(),
        steps in prop::option::of(1usize..1000),
    ) {
        let config = RunConfig {
            command: None,
            model,
            j,
            m,
            h,
            nk,
            output: Some("out/run".into()),
            format: None,
            seed,
            emit_vectors,
            band: Some(0),
            n0: Some(1),
            steps,
        };
        let text = config.serialize();
        prop_assert_eq!(parse_config(&text).unwrap(), config);
    }
}
