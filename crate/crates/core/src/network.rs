//! Feed-forward network with fixed per-layer biases, trained one example at a
//! time by a local plasticity rule.
//!
//! Training runs a single forward pass, replaces the output activations with
//! the one-hot target, then walks the weight layers in forward order and
//! updates every weight of each trainable layer from that one stored trace.
//! Weight layers feeding a frozen layer never change; their forward product
//! goes through a compressed-row copy built once at construction.

use serde::{Deserialize, Serialize};

use crate::activations::ActivationKind;
use crate::error::{Error, Result};
use crate::matrix::{SparseRows, WeightMatrix};
use crate::par::{self, Execution};
use crate::plasticity::PlasticityParams;
use crate::pooling::{build_pooling_matrix, PoolingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub size: usize,
    /// Subtracted from every neuron's weighted input sum. Never learned.
    pub bias: f64,
    pub activation: ActivationKind,
    /// Whether the weight layer feeding this layer learns.
    pub trainable_incoming: bool,
}

impl LayerSpec {
    /// Input layers carry no bias or activation of their own.
    pub fn input(size: usize) -> Self {
        LayerSpec {
            size,
            bias: 0.0,
            activation: ActivationKind::Relu,
            trainable_incoming: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Connection {
    /// Every pair connected, every weight starting at `initial_weight`.
    FullyConnected { initial_weight: f64 },
    /// Square-grid pooling map; see [`crate::pooling`].
    Pooling { connectivity: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layers: Vec<LayerSpec>,
    pub connections: Vec<Connection>,
    pub plasticity: PlasticityParams,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::config("a network needs at least two layers"));
        }
        if self.connections.len() != self.layers.len() - 1 {
            return Err(Error::config(format!(
                "{} layers need {} connections, got {}",
                self.layers.len(),
                self.layers.len() - 1,
                self.connections.len()
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.size == 0 {
                return Err(Error::config(format!("layer {l} has size 0")));
            }
            if !layer.bias.is_finite() {
                return Err(Error::config(format!("layer {l} bias is not finite")));
            }
            if l > 0 {
                layer
                    .activation
                    .validate()
                    .map_err(|e| Error::config(format!("layer {l}: {e}")))?;
            }
        }
        for (l, conn) in self.connections.iter().enumerate() {
            self.check_connection(l, conn)?;
        }
        self.plasticity.validate()
    }

    fn check_connection(&self, l: usize, conn: &Connection) -> Result<()> {
        match *conn {
            Connection::FullyConnected { initial_weight } => {
                if !(-1.0..=1.0).contains(&initial_weight) {
                    return Err(Error::config(format!(
                        "connection {l}: initial weight {initial_weight} outside [-1, 1]"
                    )));
                }
                Ok(())
            }
            Connection::Pooling {
                connectivity,
                value,
            } => self.pooling_spec(l, connectivity, value).map(|_| ()),
        }
    }

    fn pooling_spec(&self, l: usize, connectivity: usize, value: f64) -> Result<PoolingSpec> {
        PoolingSpec::new(
            self.layers[l].size,
            self.layers[l + 1].size,
            connectivity,
            value,
        )
        .map_err(|e| Error::config(format!("connection {l}: {e}")))
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].size
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].size
    }
}

/// Activations of every layer for one example, input layer first.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    activations: Vec<Vec<f64>>,
    clamped: bool,
}

impl ForwardTrace {
    fn for_config(config: &NetworkConfig) -> Self {
        ForwardTrace {
            activations: config.layers.iter().map(|l| vec![0.0; l.size]).collect(),
            clamped: false,
        }
    }

    pub fn activations(&self) -> &[Vec<f64>] {
        &self.activations
    }

    pub fn layer(&self, l: usize) -> &[f64] {
        &self.activations[l]
    }

    pub fn output(&self) -> &[f64] {
        &self.activations[self.activations.len() - 1]
    }

    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn len(&self) -> usize {
        self.activations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activations.is_empty()
    }
}

/// Something that can be classified: a `[0, 1]` input vector and a class label.
pub trait Sample {
    fn input(&self) -> &[f64];
    fn label(&self) -> usize;
}

impl Sample for (Vec<f64>, usize) {
    fn input(&self) -> &[f64] {
        &self.0
    }

    fn label(&self) -> usize {
        self.1
    }
}

impl<S: Sample> Sample for &S {
    fn input(&self) -> &[f64] {
        (**self).input()
    }

    fn label(&self) -> usize {
        (**self).label()
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    weights: Vec<WeightMatrix>,
    frozen: Vec<Option<SparseRows>>,
    examples_seen: u64,
}

impl Network {
    /// Builds a network with deterministic initial weights.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let weights = config
            .connections
            .iter()
            .enumerate()
            .map(|(l, conn)| match *conn {
                Connection::FullyConnected { initial_weight } => Ok(WeightMatrix::filled(
                    config.layers[l + 1].size,
                    config.layers[l].size,
                    initial_weight,
                )),
                Connection::Pooling {
                    connectivity,
                    value,
                } => Ok(build_pooling_matrix(&config.pooling_spec(
                    l,
                    connectivity,
                    value,
                )?)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(config, weights, 0))
    }

    /// Reassembles a network from stored weights, checking shapes and ranges.
    pub fn from_parts(
        config: NetworkConfig,
        weights: Vec<WeightMatrix>,
        examples_seen: u64,
    ) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.connections.len() {
            return Err(Error::config(format!(
                "expected {} weight layers, got {}",
                config.connections.len(),
                weights.len()
            )));
        }
        for (l, m) in weights.iter().enumerate() {
            let (rows, cols) = (config.layers[l + 1].size, config.layers[l].size);
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::config(format!(
                    "weight layer {l} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
            if let Some(w) = m.as_slice().iter().find(|w| !(-1.0..=1.0).contains(*w)) {
                return Err(Error::config(format!(
                    "weight layer {l} holds {w}, outside [-1, 1]"
                )));
            }
        }
        Ok(Self::assemble(config, weights, examples_seen))
    }

    fn assemble(config: NetworkConfig, weights: Vec<WeightMatrix>, examples_seen: u64) -> Self {
        let frozen = weights
            .iter()
            .zip(&config.layers[1..])
            .map(|(m, dest)| (!dest.trainable_incoming).then(|| SparseRows::from_dense(m)))
            .collect();
        Network {
            config,
            weights,
            frozen,
            examples_seen,
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn weights(&self) -> &[WeightMatrix] {
        &self.weights
    }

    pub fn plasticity(&self) -> &PlasticityParams {
        &self.config.plasticity
    }

    /// Number of `train_on_example` calls applied so far.
    pub fn examples_seen(&self) -> u64 {
        self.examples_seen
    }

    pub fn input_size(&self) -> usize {
        self.config.input_size()
    }

    pub fn output_size(&self) -> usize {
        self.config.output_size()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::invalid(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.input_size()
            )));
        }
        if let Some(v) = input.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("input value {v} outside [0, 1]")));
        }
        Ok(())
    }

    fn check_target(&self, target: &[f64]) -> Result<()> {
        if target.len() != self.output_size() {
            return Err(Error::invalid(format!(
                "target has length {}, network has {} outputs",
                target.len(),
                self.output_size()
            )));
        }
        let ones = target.iter().filter(|&&t| t == 1.0).count();
        let zeros = target.iter().filter(|&&t| t == 0.0).count();
        if ones != 1 || ones + zeros != target.len() {
            return Err(Error::invalid("target is not one-hot"));
        }
        Ok(())
    }

    /// Unchecked forward pass into a trace shaped for this network.
    fn propagate(&self, input: &[f64], trace: &mut ForwardTrace) {
        trace.activations[0].copy_from_slice(input);
        for l in 0..self.weights.len() {
            let layer = &self.config.layers[l + 1];
            let (head, tail) = trace.activations.split_at_mut(l + 1);
            let src = &head[l];
            let dst = &mut tail[0];
            match &self.frozen[l] {
                Some(sparse) => sparse.affine_into(src, layer.bias, dst),
                None => self.weights[l].affine_into(src, layer.bias, dst),
            }
            for z in dst.iter_mut() {
                *z = layer.activation.eval(*z);
            }
        }
        trace.clamped = false;
    }

    /// Feeds `input` through every layer.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        self.check_input(input)?;
        let mut trace = ForwardTrace::for_config(&self.config);
        self.propagate(input, &mut trace);
        Ok(trace)
    }

    /// Like [`Network::forward`] but the output layer is replaced by `target`.
    pub fn forward_clamped(&self, input: &[f64], target: &[f64]) -> Result<ForwardTrace> {
        self.check_input(input)?;
        self.check_target(target)?;
        let mut trace = ForwardTrace::for_config(&self.config);
        self.propagate_clamped(input, target, &mut trace);
        Ok(trace)
    }

    fn propagate_clamped(&self, input: &[f64], target: &[f64], trace: &mut ForwardTrace) {
        self.propagate(input, trace);
        let last = trace.activations.len() - 1;
        trace.activations[last].copy_from_slice(target);
        trace.clamped = true;
    }

    fn apply_plasticity(&mut self, trace: &ForwardTrace) {
        let params = self.config.plasticity;
        for l in 0..self.weights.len() {
            if !self.config.layers[l + 1].trainable_incoming {
                continue;
            }
            let src = &trace.activations[l];
            let dst = &trace.activations[l + 1];
            let cols = self.weights[l].cols();
            for (row, &y) in self.weights[l]
                .as_mut_slice()
                .chunks_exact_mut(cols)
                .zip(dst)
            {
                for (w, &x) in row.iter_mut().zip(src) {
                    *w = params.step(x, y, *w);
                }
            }
        }
        self.examples_seen += 1;
    }

    /// One supervised update from a single example.
    pub fn train_on_example(&mut self, input: &[f64], target: &[f64]) -> Result<()> {
        let mut trace = ForwardTrace::for_config(&self.config);
        self.train_with_trace(input, target, &mut trace)
    }

    /// As [`Network::train_on_example`], reusing `trace` as scratch space. On
    /// return `trace` holds the clamped trace the update was computed from.
    pub fn train_with_trace(
        &mut self,
        input: &[f64],
        target: &[f64],
        trace: &mut ForwardTrace,
    ) -> Result<()> {
        self.check_input(input)?;
        self.check_target(target)?;
        if trace.activations.len() != self.config.layers.len()
            || trace
                .activations
                .iter()
                .zip(&self.config.layers)
                .any(|(a, l)| a.len() != l.size)
        {
            *trace = ForwardTrace::for_config(&self.config);
        }
        self.propagate_clamped(input, target, trace);
        self.apply_plasticity(trace);
        Ok(())
    }

    /// Trains on `examples` in order, `epochs` times over.
    pub fn fit<I, T>(&mut self, examples: &[(I, T)], epochs: usize) -> Result<()>
    where
        I: AsRef<[f64]>,
        T: AsRef<[f64]>,
    {
        check_fit_args(examples.len(), epochs)?;
        let mut trace = ForwardTrace::for_config(&self.config);
        for _ in 0..epochs {
            for (input, target) in examples {
                self.train_with_trace(input.as_ref(), target.as_ref(), &mut trace)?;
            }
        }
        Ok(())
    }

    /// Trains on labelled samples in order, using one-hot targets.
    pub fn fit_samples<S: Sample>(&mut self, examples: &[S], epochs: usize) -> Result<()> {
        check_fit_args(examples.len(), epochs)?;
        let outputs = self.output_size();
        let mut trace = ForwardTrace::for_config(&self.config);
        let mut target = vec![0.0; outputs];
        for _ in 0..epochs {
            for s in examples {
                let label = s.label();
                if label >= outputs {
                    return Err(Error::invalid(format!(
                        "label {label} out of range for {outputs} outputs"
                    )));
                }
                target[label] = 1.0;
                let res = self.train_with_trace(s.input(), &target, &mut trace);
                target[label] = 0.0;
                res?;
            }
        }
        Ok(())
    }

    /// Index of the largest un-clamped output; ties go to the lowest index.
    pub fn predict(&self, input: &[f64]) -> Result<usize> {
        Ok(argmax(self.forward(input)?.output()))
    }

    pub fn predictions<S: Sample + Sync>(
        &self,
        examples: &[S],
        exec: Execution,
    ) -> Result<Vec<usize>> {
        par::map(examples, exec, |s| self.predict(s.input()))
            .into_iter()
            .collect()
    }

    /// Fraction of `examples` whose prediction equals the label.
    pub fn evaluate<S: Sample + Sync>(&self, examples: &[S]) -> Result<f64> {
        self.evaluate_with(examples, Execution::default())
    }

    pub fn evaluate_with<S: Sample + Sync>(&self, examples: &[S], exec: Execution) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::invalid("cannot evaluate on an empty example list"));
        }
        let predicted = self.predictions(examples, exec)?;
        let correct = predicted
            .iter()
            .zip(examples)
            .filter(|(p, s)| **p == s.label())
            .count();
        Ok(correct as f64 / examples.len() as f64)
    }
}

fn check_fit_args(len: usize, epochs: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::invalid("cannot fit on an empty example list"));
    }
    if epochs == 0 {
        return Err(Error::invalid("epochs must be >= 1"));
    }
    Ok(())
}

/// First index of the maximum value.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
