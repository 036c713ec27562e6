//! Monte Carlo simulation of a classical wave model of heralded-photon
//! interferometry with beam blockers, as used in Leggett-Garg tests of
//! macrorealism.
//!
//! Entangled light is a pair of squeezed complex Gaussian Jones vectors,
//! blockers inject fresh vacuum noise, and detectors fire on amplitude
//! threshold crossings. Post-selecting on heralded single coincidences gives
//! the usual K and W statistics, which can exceed their macrorealist bounds.
//! A closed-form quantum oracle is provided for comparison.
//!
//! Module map:
//! - [`jones`], [`optics`], [`sampling`]: fields, network stages, hidden-variable streams
//! - [`harness`]: the nine measurement contexts and coincidence tallies
//! - [`stats`]: PMFs, K, W, marginal identities, efficiencies
//! - [`oracle`]: quantum amplitudes and predicted PMFs
//! - [`config`], [`driver`]: configuration, runs, sweeps, output files

pub mod config;
pub mod driver;
pub mod error;
pub mod harness;
pub mod jones;
pub mod optics;
pub mod oracle;
pub mod sampling;
pub mod stats;

pub use config::RunConfig;
pub use error::{ConfigError, Error, Result, StatsError};
pub use harness::{ContextCounts, CounterfactualRecord, DrawMode, ExperimentPlan};
pub use jones::JonesVector;
pub use optics::{Blockers, Context, OpticalParams, SourceParams};
pub use sampling::{HiddenState, HiddenStream, StreamId};
