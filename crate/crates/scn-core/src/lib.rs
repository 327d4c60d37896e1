//! Event-driven spiking convolutional network for first-spike visual feature
//! learning, with interchangeable neuron models (non-leaky IF and a
//! simplified Izhikevich regular-spiking unit) and interchangeable STDP rules
//! (multiplicative and probabilistic), plus the evaluation harness used to
//! compare them.

pub mod config;
pub mod error;
pub mod eval;
pub mod ingestion;
pub mod network;
pub mod neurons;
pub mod plasticity;
pub mod rng;
pub mod runner;
pub mod snapshot;
pub mod types;

pub use config::{NeuronKind, RuleKind, RunConfig, Variant};
pub use error::{Error, Result};
pub use types::{Latency, LatencyMap, Layer, RunRecord, SpikeEvent, SynapseBank};
