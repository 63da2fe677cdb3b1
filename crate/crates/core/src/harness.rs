//! Experiment presets and runners: single runs, IPD sweeps, assisted
//! learning and CSV export.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::activations::ActivationKind;
use crate::data::{
    candidate_order, select_ipd_indices, DatasetSplits, LabeledExample, CLASSES, PIXELS,
};
use crate::error::{Error, Result};
use crate::network::{Connection, LayerSpec, Network, NetworkConfig, Sample};
use crate::par::{self, Execution};
use crate::plasticity::{Bounding, PlasticityParams, Rule};
use crate::pooling::connectivity_from_factor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 784 → 10, fully connected.
    Shallow,
    /// 784 → 196 (frozen pooling) → 10.
    Medium,
    /// 784 → 196 → 49 (both frozen pooling) → 10.
    Deeper,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Shallow, Preset::Medium, Preset::Deeper];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Shallow => "shallow",
            Preset::Medium => "medium",
            Preset::Deeper => "deeper",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shallow" => Ok(Preset::Shallow),
            "medium" => Ok(Preset::Medium),
            "deeper" => Ok(Preset::Deeper),
            other => Err(Error::config(format!(
                "unknown preset `{other}` (expected shallow, medium or deeper)"
            ))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn hidden(size: usize, bias: f64, c_output: f64) -> LayerSpec {
    LayerSpec {
        size,
        bias,
        activation: ActivationKind::RectifiedTanh {
            coefficient: c_output,
        },
        trainable_incoming: false,
    }
}

fn output(bias: f64) -> LayerSpec {
    LayerSpec {
        size: CLASSES,
        bias,
        activation: ActivationKind::Relu,
        trainable_incoming: true,
    }
}

fn rates(eta_ltp: f64, eta_ltd: f64, c_weights: f64) -> PlasticityParams {
    PlasticityParams {
        eta_ltp,
        eta_ltd,
        eta_ltp2: eta_ltd,
        threshold: 0.25,
        creation_value: 0.50,
        creation_requires_threshold: true,
        rule: Rule::Compressed,
        bounding: Bounding::Squash { c_weights },
    }
}

fn pooling(factor: f64, value: f64) -> Connection {
    Connection::Pooling {
        connectivity: connectivity_from_factor(factor).expect("preset factors are valid"),
        value,
    }
}

/// Hyperparameters of the three published network shapes.
pub fn resolve_preset(preset: Preset) -> NetworkConfig {
    match preset {
        Preset::Shallow => NetworkConfig {
            layers: vec![LayerSpec::input(PIXELS), output(0.95)],
            connections: vec![Connection::FullyConnected {
                initial_weight: 0.0,
            }],
            plasticity: rates(0.001, 0.0001, 0.5),
        },
        Preset::Medium => NetworkConfig {
            layers: vec![
                LayerSpec::input(PIXELS),
                hidden(196, 0.95, 0.50),
                output(0.0),
            ],
            connections: vec![
                pooling(0.0, 0.50),
                Connection::FullyConnected {
                    initial_weight: 0.0,
                },
            ],
            plasticity: rates(0.01, 0.0005, 0.50),
        },
        Preset::Deeper => NetworkConfig {
            layers: vec![
                LayerSpec::input(PIXELS),
                hidden(196, 0.35, 1.0),
                hidden(49, 0.05, 1.0),
                output(0.0),
            ],
            connections: vec![
                pooling(0.75, 0.50),
                pooling(0.25, 0.60),
                Connection::FullyConnected {
                    initial_weight: 0.0,
                },
            ],
            plasticity: rates(0.001, 0.0001, 0.5),
        },
    }
}

/// Like [`resolve_preset`], by name.
pub fn resolve_preset_name(name: &str) -> Result<NetworkConfig> {
    Ok(resolve_preset(name.parse()?))
}

/// Optional replacements for individual plasticity parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlasticityOverrides {
    pub eta_ltp: Option<f64>,
    pub eta_ltd: Option<f64>,
    pub eta_ltp2: Option<f64>,
    pub threshold: Option<f64>,
    pub creation_value: Option<f64>,
    pub creation_requires_threshold: Option<bool>,
    pub rule: Option<Rule>,
    pub bounding: Option<Bounding>,
}

impl PlasticityOverrides {
    pub fn apply(&self, p: &mut PlasticityParams) {
        if let Some(v) = self.eta_ltp {
            p.eta_ltp = v;
        }
        if let Some(v) = self.eta_ltd {
            p.eta_ltd = v;
        }
        if let Some(v) = self.eta_ltp2 {
            p.eta_ltp2 = v;
        }
        if let Some(v) = self.threshold {
            p.threshold = v;
        }
        if let Some(v) = self.creation_value {
            p.creation_value = v;
        }
        if let Some(v) = self.creation_requires_threshold {
            p.creation_requires_threshold = v;
        }
        if let Some(v) = self.rule {
            p.rule = v;
        }
        if let Some(v) = self.bounding {
            p.bounding = v;
        }
    }

    /// Fields set in `other` replace fields in `self`.
    pub fn merge(&mut self, other: &PlasticityOverrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            eta_ltp,
            eta_ltd,
            eta_ltp2,
            threshold,
            creation_value,
            creation_requires_threshold,
            rule,
            bounding
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetChoice {
    Named(Preset),
    Custom(NetworkConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: PresetChoice,
    pub ipd: usize,
    pub epochs: usize,
    pub seed: u64,
    pub overrides: PlasticityOverrides,
}

impl ExperimentConfig {
    pub fn new(preset: Preset) -> Self {
        ExperimentConfig {
            preset: PresetChoice::Named(preset),
            ipd: 60,
            epochs: 1,
            seed: 0,
            overrides: PlasticityOverrides::default(),
        }
    }

    pub fn with_ipd(mut self, ipd: usize) -> Self {
        self.ipd = ipd;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn preset_name(&self) -> &str {
        match &self.preset {
            PresetChoice::Named(p) => p.name(),
            PresetChoice::Custom(_) => "custom",
        }
    }

    /// The fully resolved, validated network configuration.
    pub fn network_config(&self) -> Result<NetworkConfig> {
        let mut config = match &self.preset {
            PresetChoice::Named(p) => resolve_preset(*p),
            PresetChoice::Custom(c) => c.clone(),
        };
        self.overrides.apply(&mut config.plasticity);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ipd == 0 {
            return Err(Error::config("ipd must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        self.network_config().map(|_| ())
    }
}

/// On-disk experiment description (TOML). Every key is optional; present
/// keys replace preset defaults.
///
/// ```toml
/// preset = "medium"          # shallow | medium | deeper | custom
/// ipd = 60
/// epochs = 1
/// seed = 0
///
/// [plasticity]               # overrides, any subset
/// eta_ltp = 0.01
/// rule = "extended"          # compressed | extended | plain_hebb
/// bounding = { mode = "hard_reset", reset_magnitude = 0.9 }
///
/// [network]                  # full network, only with preset = "custom"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub preset: Option<String>,
    pub ipd: Option<usize>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub plasticity: Option<PlasticityOverrides>,
    pub network: Option<NetworkConfig>,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("bad experiment file: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Layers this file over `cfg`.
    pub fn apply_to(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        match (self.preset.as_deref(), &self.network) {
            (Some("custom"), Some(net)) => cfg.preset = PresetChoice::Custom(net.clone()),
            (Some("custom"), None) => {
                return Err(Error::config("preset = \"custom\" needs a [network] table"))
            }
            (Some(name), None) => cfg.preset = PresetChoice::Named(name.parse()?),
            (None, Some(net)) => cfg.preset = PresetChoice::Custom(net.clone()),
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "[network] is only allowed with preset = \"custom\"",
                ))
            }
            (None, None) => {}
        }
        if let Some(v) = self.ipd {
            cfg.ipd = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(o) = &self.plasticity {
            cfg.overrides.merge(o);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub preset: String,
    pub ipd: usize,
    pub epochs: usize,
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub validation_accuracy: f64,
    /// Wall time of the training loop only.
    pub train_seconds: f64,
    pub examples_trained: u64,
}

fn subset<'a>(data: &'a [LabeledExample], indices: &[usize]) -> Vec<&'a LabeledExample> {
    indices.iter().map(|&i| &data[i]).collect()
}

/// Builds, trains and scores one network. Returns the trained network too.
pub fn run_experiment_with_network(
    cfg: &ExperimentConfig,
    data: &DatasetSplits,
) -> Result<(Network, RunResult)> {
    cfg.validate()?;
    let mut net = Network::new(cfg.network_config()?)?;
    let picked = select_ipd_indices(&data.train, cfg.ipd, cfg.seed)?;
    let train = subset(&data.train, &picked);

    let start = Instant::now();
    net.fit_samples(&train, cfg.epochs)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let result = RunResult {
        preset: cfg.preset_name().to_string(),
        ipd: cfg.ipd,
        epochs: cfg.epochs,
        seed: cfg.seed,
        train_accuracy: net.evaluate(&train)?,
        test_accuracy: net.evaluate(&data.test)?,
        validation_accuracy: net.evaluate(&data.validation)?,
        train_seconds,
        examples_trained: net.examples_seen(),
    };
    Ok((net, result))
}

pub fn run_experiment(cfg: &ExperimentConfig, data: &DatasetSplits) -> Result<RunResult> {
    run_experiment_with_network(cfg, data).map(|(_, r)| r)
}

/// One fresh run per IPD value, results in input order. `jobs > 1` runs
/// entries concurrently (timings then include contention).
pub fn sweep_ipd(
    cfg: &ExperimentConfig,
    ipd_values: &[usize],
    data: &DatasetSplits,
    jobs: usize,
) -> Result<Vec<RunResult>> {
    if ipd_values.is_empty() {
        return Err(Error::invalid("ipd list is empty"));
    }
    let run = |&ipd: &usize| run_experiment(&cfg.clone().with_ipd(ipd), data);
    let results = if jobs <= 1 {
        ipd_values.iter().map(run).collect::<Vec<_>>()
    } else {
        par::with_jobs(jobs, || par::map(ipd_values, Execution::Parallel, run))?
    };
    results.into_iter().collect()
}

/// Accuracy per label; `NaN` for labels absent from `examples`.
pub fn per_digit_accuracy<S: Sample + Sync>(
    net: &Network,
    examples: &[S],
) -> Result<[f64; CLASSES]> {
    let predicted = net.predictions(examples, Execution::default())?;
    let mut correct = [0usize; CLASSES];
    let mut total = [0usize; CLASSES];
    for (p, s) in predicted.iter().zip(examples) {
        let label = s.label();
        if label < CLASSES {
            total[label] += 1;
            if *p == label {
                correct[label] += 1;
            }
        }
    }
    let mut acc = [f64::NAN; CLASSES];
    for d in 0..CLASSES {
        if total[d] > 0 {
            acc[d] = correct[d] as f64 / total[d] as f64;
        }
    }
    Ok(acc)
}

/// The `k` digits with the lowest accuracy, ties to the lower digit.
pub fn worst_digits(accuracy: &[f64; CLASSES], k: usize) -> Vec<usize> {
    let mut digits: Vec<usize> = (0..CLASSES).filter(|&d| !accuracy[d].is_nan()).collect();
    digits.sort_by(|&a, &b| accuracy[a].total_cmp(&accuracy[b]).then(a.cmp(&b)));
    digits.truncate(k);
    digits
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssistedRound {
    pub per_digit_accuracy: [f64; CLASSES],
    pub digits: Vec<usize>,
    pub examples_added: usize,
}

#[derive(Debug, Clone)]
pub struct AssistedOutcome {
    pub network: Network,
    pub rounds: Vec<AssistedRound>,
}

/// Extra training targeted at the worst-classified digits.
///
/// Each round scores the accumulated training set per digit, picks the
/// `top_k` worst digits and trains on `cfg.ipd` unused training examples of
/// each. Test and validation data are never touched.
pub fn assisted_learning(
    net: Network,
    cfg: &ExperimentConfig,
    data: &DatasetSplits,
    rounds: usize,
    top_k: usize,
) -> Result<AssistedOutcome> {
    if rounds == 0 {
        return Err(Error::invalid("assisted learning needs at least one round"));
    }
    if top_k == 0 || top_k > CLASSES {
        return Err(Error::invalid(format!(
            "top_k must lie in 1..={CLASSES}, got {top_k}"
        )));
    }
    if net.examples_seen() == 0 {
        return Err(Error::invalid(
            "assisted learning needs an already trained network",
        ));
    }
    let mut net = net;
    let train = &data.train;
    let mut seen: Vec<usize> = select_ipd_indices(train, cfg.ipd, cfg.seed)?;
    let mut used: HashSet<usize> = seen.iter().copied().collect();
    let order = candidate_order(train, cfg.seed);
    let mut cursor = [0usize; CLASSES];
    let mut log = Vec::with_capacity(rounds);

    for _ in 0..rounds {
        let accuracy = per_digit_accuracy(&net, &subset(train, &seen))?;
        let digits = worst_digits(&accuracy, top_k);
        let mut fresh: Vec<Vec<usize>> = Vec::with_capacity(digits.len());
        for &d in &digits {
            let mut picked = Vec::with_capacity(cfg.ipd);
            while picked.len() < cfg.ipd {
                let Some(&i) = order[d].get(cursor[d]) else {
                    return Err(Error::data(format!(
                        "no fresh training examples left for digit {d}"
                    )));
                };
                cursor[d] += 1;
                if used.insert(i) {
                    picked.push(i);
                }
            }
            fresh.push(picked);
        }
        let batch: Vec<usize> = (0..cfg.ipd)
            .flat_map(|k| fresh.iter().map(move |f| f[k]))
            .collect();
        net.fit_samples(&subset(train, &batch), cfg.epochs)?;
        seen.extend_from_slice(&batch);
        log.push(AssistedRound {
            per_digit_accuracy: accuracy,
            digits,
            examples_added: batch.len(),
        });
    }
    Ok(AssistedOutcome {
        network: net,
        rounds: log,
    })
}

pub const CSV_HEADER: &str =
    "preset,ipd,epochs,seed,train_acc,test_acc,val_acc,train_seconds,examples_trained";

pub fn export_csv<W: Write>(results: &[RunResult], mut out: W) -> Result<()> {
    if results.is_empty() {
        return Err(Error::invalid("no results to export"));
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.preset,
            r.ipd,
            r.epochs,
            r.seed,
            r.train_accuracy,
            r.test_accuracy,
            r.validation_accuracy,
            r.train_seconds,
            r.examples_trained
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn export_csv_path(results: &[RunResult], path: impl AsRef<Path>) -> Result<()> {
    if results.is_empty() {
        return Err(Error::invalid("no results to export"));
    }
    let file = std::fs::File::create(path)?;
    export_csv(results, std::io::BufWriter::new(file))
}
