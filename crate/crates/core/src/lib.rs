//! Simulation and analysis toolkit for optical-clock qubits in tweezer arrays:
//! dense state vectors, clock and Rydberg laser noise, a time-optimal CZ pulse,
//! timed circuits with an executor, benchmarking, statistical analysis and
//! Bayesian metrological gain.

pub mod analysis;
pub mod benchmarking;
pub mod circuit;
pub mod error;
pub mod experiments;
pub mod gain;
pub mod linalg;
pub mod noise;
pub mod optim;
pub mod rng;
pub mod rydberg;
pub mod shots;
pub mod statevec;
pub mod svg;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use shots::{ShotMetadata, ShotRecord, ShotTable};
pub use statevec::{Observable, QuantumState};
