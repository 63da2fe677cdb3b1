//! Oracles and fixtures shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use hebbnet::{
    ActivationKind, Bounding, Connection, DatasetSplits, LabeledExample, LayerSpec, Network,
    NetworkConfig, PlasticityParams, Rule,
};

pub fn toy() -> Network {
    Network::new(NetworkConfig {
        layers: vec![
            LayerSpec::input(4),
            LayerSpec {
                size: 2,
                bias: 0.1,
                activation: ActivationKind::Relu,
                trainable_incoming: true,
            },
        ],
        connections: vec![Connection::FullyConnected {
            initial_weight: 0.0,
        }],
        plasticity: PlasticityParams {
            eta_ltp: 0.6,
            eta_ltd: 0.0001,
            eta_ltp2: 0.0001,
            threshold: 0.25,
            creation_value: 0.5,
            creation_requires_threshold: true,
            rule: Rule::Compressed,
            bounding: Bounding::HardReset {
                reset_magnitude: 0.9,
            },
        },
    })
    .unwrap()
}

/// Weights worked out by hand, example by example.
///
/// 1. x = [1.0, 0.5, 0.2, 0.0], class 0. Row 0 sees y = 1: products
///    1.0 and 0.5 clear T = 0.25, so w00 = w01 = 0.5 (creation); 0.2 and 0.0
///    stay 0. Row 1 sees y = 0: nothing changes.
/// 2. x = [0.8, 0.0, 0.6, 0.3], class 1. Row 0, y = 0: products are 0, the
///    depression term is -0.6 * 0 so the two live weights keep 0.5. Row 1:
///    0.8, 0.6, 0.3 clear T, so w10 = w12 = w13 = 0.5.
/// 3. x = [0.9, 0.2, 0.0, 0.1], class 0. Row 0: w00 = 0.5 + 0.6 * 0.9 = 1.04,
///    above 1 so reset to 0.9; w01 = 0.5 - 0.6 * 0.2 = 0.38; w02 stays 0
///    (product 0); w03 stays 0 (product 0.1 < T). Row 1 unchanged.
pub const TOY_STEPS: [([f64; 4], usize, [[f64; 4]; 2]); 3] = [
    (
        [1.0, 0.5, 0.2, 0.0],
        0,
        [[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]],
    ),
    (
        [0.8, 0.0, 0.6, 0.3],
        1,
        [[0.5, 0.5, 0.0, 0.0], [0.5, 0.0, 0.5, 0.5]],
    ),
    (
        [0.9, 0.2, 0.0, 0.1],
        0,
        [[0.9, 0.38, 0.0, 0.0], [0.5, 0.0, 0.5, 0.5]],
    ),
];

/// Replays the toy trajectory; the error names the first mismatching weight.
pub fn check_toy_trajectory() -> Result<(), String> {
    let mut net = toy();
    for (k, (x, class, want)) in TOY_STEPS.iter().enumerate() {
        let mut target = [0.0; 2];
        target[*class] = 1.0;
        net.train_on_example(x, &target)
            .map_err(|e| e.to_string())?;
        let w = &net.weights()[0];
        for row in 0..2 {
            for col in 0..4 {
                if w.get(row, col).to_bits() != want[row][col].to_bits() {
                    return Err(format!(
                        "after example {} at ({row}, {col}): {} vs {}",
                        k + 1,
                        w.get(row, col),
                        want[row][col]
                    ));
                }
            }
        }
    }
    // x = [1, 0, 0, 0] gives z0 = 0.9 - 0.1, z1 = 0.5 - 0.1
    if net.predict(&[1.0, 0.0, 0.0, 0.0]).unwrap() != 0
        || net.predict(&[0.0, 0.0, 1.0, 1.0]).unwrap() != 1
    {
        return Err("toy predictions disagree".into());
    }
    Ok(())
}

pub fn extended_params() -> PlasticityParams {
    PlasticityParams {
        eta_ltp: 0.001,
        eta_ltd: 0.0001,
        eta_ltp2: 0.0003,
        threshold: 0.25,
        creation_value: 0.5,
        creation_requires_threshold: true,
        rule: Rule::Extended,
        bounding: Bounding::HardReset {
            reset_magnitude: 0.9,
        },
    }
}

pub type Branch = (
    &'static str,
    fn(f64, f64, f64, &PlasticityParams) -> bool,
    fn(f64, f64, &PlasticityParams) -> f64,
);

pub fn extended_table() -> Vec<Branch> {
    vec![
        (
            "ltp+",
            |x, y, w, _| x > 0.0 && y > 0.0 && w > 0.0,
            |x, y, p| p.eta_ltp * x * y,
        ),
        (
            "ltp-",
            |x, y, w, _| x > 0.0 && y > 0.0 && w < 0.0,
            |x, y, p| -(p.eta_ltp * x * y),
        ),
        (
            "ltd-",
            |x, y, w, _| x > 0.0 && y == 0.0 && w > 0.0,
            |x, _, p| -p.eta_ltd * x,
        ),
        (
            "ltd+",
            |x, y, w, _| x > 0.0 && y == 0.0 && w < 0.0,
            |x, _, p| p.eta_ltd * x,
        ),
        (
            "ltp2+",
            |x, y, w, _| x == 0.0 && y > 0.0 && w > 0.0,
            |_, y, p| p.eta_ltp2 * y,
        ),
        (
            "ltp2-",
            |x, y, w, _| x == 0.0 && y > 0.0 && w < 0.0,
            |_, y, p| -(p.eta_ltp2 * y),
        ),
        (
            "create",
            |x, y, w, p| x * y >= p.threshold && w == 0.0,
            |_, _, p| p.creation_value,
        ),
    ]
}

pub fn grid(steps: usize, lo: f64) -> impl Iterator<Item = f64> + Clone {
    (0..=steps).map(move |k| lo + k as f64 / 20.0)
}

/// Compares the extended rule with the branch table on the 0.05 grid.
/// Returns the number of grid points and distinct branches hit.
pub fn check_extended_grid() -> Result<(usize, usize), String> {
    let p = extended_params();
    let table = extended_table();
    let mut hits = std::collections::HashMap::new();
    for x in grid(20, 0.0) {
        for y in grid(20, 0.0) {
            for w in grid(40, -1.0) {
                let fired: Vec<&Branch> = table
                    .iter()
                    .filter(|(_, cond, _)| cond(x, y, w, &p))
                    .collect();
                if fired.len() > 1 {
                    return Err(format!("x={x} y={y} w={w}: {} branches", fired.len()));
                }
                let (name, want) = match fired.first() {
                    Some((name, _, value)) => (*name, value(x, y, &p)),
                    None => ("otherwise", 0.0),
                };
                *hits.entry(name).or_insert(0usize) += 1;
                let got = hebbnet::delta_w_extended(x, y, w, &p).map_err(|e| e.to_string())?;
                if (got - want).abs() >= 1e-18 {
                    return Err(format!("x={x} y={y} w={w} branch {name}: {got} vs {want}"));
                }
            }
        }
    }
    Ok((hits.values().sum(), hits.len()))
}

pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Class `d` lights a band of rows plus a class-specific column block.
pub fn digit(d: usize, rng: &mut Lcg) -> LabeledExample {
    let mut pixels = vec![0.0; 784];
    for r in 0..28 {
        for c in 0..28 {
            let band = r / 3 == d % 9 + (d / 9);
            let block = c / 3 == (d * 7) % 9;
            if (band || block) && rng.next() < 0.85 {
                pixels[r * 28 + c] = (0.5 + 0.5 * rng.next()).min(1.0);
            }
        }
    }
    LabeledExample {
        pixels,
        label: d as u8,
    }
}

pub fn synthetic(n_train: usize, seed: u64) -> DatasetSplits {
    let mut rng = Lcg(seed);
    let mut make = |n: usize| {
        (0..n)
            .map(|k| digit((k * 3 + k / 10) % 10, &mut rng))
            .collect::<Vec<_>>()
    };
    DatasetSplits {
        train: make(n_train),
        test: make(200),
        validation: make(200),
    }
}
