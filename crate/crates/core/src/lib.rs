//! Feed-forward networks trained without gradients by a supervised,
//! modified Hebbian plasticity rule.
//!
//! Training is online and single-pass friendly: each example is fed forward,
//! the output layer is clamped to the one-hot target, and every trainable
//! weight is updated from its own pre- and postsynaptic activity. Weights
//! stay in `[-1, 1]` and never change sign.
//!
//! ```
//! use hebbnet::{resolve_preset, Network, Preset};
//!
//! let mut net = Network::new(resolve_preset(Preset::Medium)).unwrap();
//! let image = vec![0.5; 784];
//! let mut target = vec![0.0; 10];
//! target[3] = 1.0;
//! net.train_on_example(&image, &target).unwrap();
//! let digit = net.predict(&image).unwrap();
//! assert!(digit < 10);
//! ```
//!
//! Modules:
//! - [`activations`]: rectified tanh and ReLU.
//! - [`plasticity`]: update rules and weight bounding.
//! - [`pooling`]: fixed square-grid pooling maps.
//! - [`network`]: forward pass, clamped training, prediction.
//! - [`data`]: MNIST IDX loading and per-digit subsets.
//! - [`harness`]: presets, experiment runs, sweeps, CSV.
//! - [`persist`]: binary network dumps.
//! - [`par`]: rayon helpers with a sequential fallback.

pub mod activations;
pub mod data;
mod error;
pub mod harness;
mod matrix;
pub mod network;
pub mod par;
pub mod persist;
pub mod plasticity;
pub mod pooling;

pub use activations::{apply_activation, relu, tanh_rec, ActivationKind};
pub use data::{
    load_idx_images, load_idx_labels, load_mnist_dir, one_hot, select_ipd, DatasetSplits,
    LabeledExample,
};
pub use error::{Error, Result};
pub use harness::{
    assisted_learning, export_csv, resolve_preset, run_experiment, sweep_ipd, ExperimentConfig,
    ExperimentFile, Preset, PresetChoice, RunResult,
};
pub use matrix::WeightMatrix;
pub use network::{Connection, ForwardTrace, LayerSpec, Network, NetworkConfig, Sample};
pub use par::Execution;
pub use persist::{load_network, save_network};
pub use plasticity::{
    bound_weight, delta_w_compressed, delta_w_extended, delta_w_plain, Bounding, PlasticityParams,
    Rule,
};
pub use pooling::{build_pooling_matrix, decompose_index, pooling_weight, PoolingSpec};
