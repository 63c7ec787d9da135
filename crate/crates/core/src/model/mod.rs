//! Trainable toy classifiers: softmax-linear and small MLPs, synthetic
//! low-dimensional class datasets, standard and PGD-adversarial training,
//! and gradient verification.

pub mod data;
pub mod mlp;
pub mod train;

pub use data::{synth_dataset, SynthDataset};
pub use mlp::{finite_diff_check, softmax, Activation, MlpModel, ParamGrads};
pub use train::{train, AdvTrainSettings, OptimizerKind, TrainConfig, TrainOutcome};
