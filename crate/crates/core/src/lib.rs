//! Density-matrix simulation of virtual state and channel purification, with
//! probabilistic error cancellation, for noisy quantum metrology.

pub mod analysis;
pub mod channels;
pub mod circuit;
pub mod engine;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod operators;
pub mod optimize;
pub mod pauli;
pub mod pec;
pub mod sampling;
pub mod tasks;

pub use channels::{NoiseFamily, QuantumChannel};
pub use circuit::{Circuit, Gate, GateClass};
pub use engine::{Method, NoiseLocationMask, PecMode, PurificationConfig, RatioExpectation, RefreshMode, Region};
pub use error::{Error, Result};
pub use harness::{EstimateRecord, ExperimentSpec};
pub use linalg::{ComplexMatrix, DensityMatrix, C64};
pub use noise::{CswapNoise, LocalNoise, NoiseModel};
pub use pec::{PecDecomposition, PecOp};
pub use tasks::{OutcomeDistribution, TaskKind, TaskSpec};
