//! Network-level properties under randomized configurations and data.

use hebbnet::{
    ActivationKind, Bounding, Connection, LayerSpec, Network, NetworkConfig, PlasticityParams,
    Rule, WeightMatrix,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Setup {
    config: NetworkConfig,
    data: Vec<(Vec<f64>, usize)>,
}

fn rule() -> impl Strategy<Value = Rule> {
    prop_oneof![
        Just(Rule::Compressed),
        Just(Rule::Extended),
        Just(Rule::PlainHebb)
    ]
}

fn bounding() -> impl Strategy<Value = Bounding> {
    prop_oneof![
        (0.05f64..0.99).prop_map(|r| Bounding::HardReset { reset_magnitude: r }),
        (0.05f64..3.0).prop_map(|c| Bounding::Squash { c_weights: c }),
    ]
}

fn setup() -> impl Strategy<Value = Setup> {
    (
        rule(),
        bounding(),
        (1e-3f64..0.9, 1e-4f64..0.5, 1e-4f64..0.5),
        0.0f64..=1.0,
        any::<bool>(),
        -1.0f64..=1.0,
        -1.0f64..=1.0,
        any::<bool>(),
        0.0f64..0.5,
        prop::collection::vec(
            (
                prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..=1.0], 16),
                0usize..3,
            ),
            1..25,
        ),
    )
        .prop_map(
            |(
                rule,
                bounding,
                (eta_ltp, eta_ltd, eta_ltp2),
                threshold,
                requires,
                pool_c,
                init,
                hidden_trains,
                bias,
                data,
            )| {
                let plasticity = PlasticityParams {
                    eta_ltp,
                    eta_ltd,
                    eta_ltp2,
                    threshold,
                    creation_value: 0.5,
                    creation_requires_threshold: requires,
                    rule,
                    bounding,
                };
                let config = NetworkConfig {
                    layers: vec![
                        LayerSpec::input(16),
                        LayerSpec {
                            size: 4,
                            bias,
                            activation: ActivationKind::RectifiedTanh { coefficient: 1.0 },
                            trainable_incoming: hidden_trains,
                        },
                        LayerSpec {
                            size: 3,
                            bias,
                            activation: ActivationKind::Relu,
                            trainable_incoming: true,
                        },
                    ],
                    connections: vec![
                        Connection::Pooling {
                            connectivity: 1,
                            value: pool_c,
                        },
                        Connection::FullyConnected {
                            initial_weight: init,
                        },
                    ],
                    plasticity,
                };
                Setup { config, data }
            },
        )
}

fn target(label: usize) -> Vec<f64> {
    let mut t = vec![0.0; 3];
    t[label] = 1.0;
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn training_preserves_range_sign_and_frozen_layers(s in setup()) {
        let mut net = Network::new(s.config.clone()).unwrap();
        let frozen_before = net.weights()[0].clone();
        for (x, label) in &s.data {
            let before: Vec<WeightMatrix> = net.weights().to_vec();
            let t = target(*label);
            let trace = net.forward_clamped(x, &t).unwrap();
            prop_assert!(trace.clamped());
            prop_assert_eq!(trace.output(), &t[..]);
            net.train_on_example(x, &t).unwrap();
            for (old, new) in before.iter().zip(net.weights()) {
                for (&a, &b) in old.as_slice().iter().zip(new.as_slice()) {
                    prop_assert!((-1.0..=1.0).contains(&b), "weight {} out of range", b);
                    prop_assert!(!(a > 0.0 && b < 0.0) && !(a < 0.0 && b > 0.0), "sign flip {} -> {}", a, b);
                }
            }
        }
        if !s.config.layers[1].trainable_incoming {
            let same = frozen_before.as_slice().iter().zip(net.weights()[0].as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same);
        }
    }

    #[test]
    fn identical_runs_are_bit_identical(s in setup()) {
        let mut a = Network::new(s.config.clone()).unwrap();
        let mut b = Network::new(s.config.clone()).unwrap();
        a.fit_samples(&s.data, 2).unwrap();
        b.fit_samples(&s.data, 2).unwrap();
        for (ma, mb) in a.weights().iter().zip(b.weights()) {
            prop_assert!(ma.as_slice().iter().zip(mb.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn hidden_activations_unaffected_by_clamp(s in setup()) {
        let net = Network::new(s.config.clone()).unwrap();
        for (x, label) in &s.data {
            let free = net.forward(x).unwrap();
            let clamped = net.forward_clamped(x, &target(*label)).unwrap();
            prop_assert_eq!(free.layer(0), clamped.layer(0));
            prop_assert_eq!(free.layer(1), clamped.layer(1));
            prop_assert!(free.layer(1).iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn prediction_invariant_under_positive_output_scaling(
        weights in prop::collection::vec(-1.0f64..=1.0, 3 * 8),
        bias in -0.5f64..0.5,
        scale in 0.05f64..=1.0,
        x in prop::collection::vec(0.0f64..=1.0, 8),
    ) {
        let config = |b: f64| NetworkConfig {
            layers: vec![
                LayerSpec::input(8),
                LayerSpec { size: 3, bias: b, activation: ActivationKind::Relu, trainable_incoming: true },
            ],
            connections: vec![Connection::FullyConnected { initial_weight: 0.0 }],
            plasticity: PlasticityParams::default(),
        };
        let base = Network::from_parts(
            config(bias), vec![WeightMatrix::from_vec(3, 8, weights.clone()).unwrap()], 0).unwrap();
        let scaled_w: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let scaled = Network::from_parts(
            config(bias * scale), vec![WeightMatrix::from_vec(3, 8, scaled_w).unwrap()], 0).unwrap();
        let out = base.forward(&x).unwrap();
        let o = out.output();
        // skip near-ties where rounding of the scaled sums can reorder outputs
        let mut sorted = o.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(sorted[0] == 0.0 || sorted[0] - sorted[1] > 1e-9);
        prop_assert_eq!(base.predict(&x).unwrap(), scaled.predict(&x).unwrap());
    }
}
