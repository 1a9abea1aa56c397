//! Polarization-resolved phase-OTDR simulation: fiber birefringence model,
//! laser and receiver noise, SISO/SIMO/MIMO phase estimators and the
//! stability metrics and sweeps built on them.

pub mod config;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod fiber;
pub mod io;
pub mod jones;
pub mod metrics;
pub mod noise;
pub mod output;
pub mod plot;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{PhaseTrace, ProbeScheme};
pub use experiments::{run_scenario, ScenarioConfig, ScenarioOutput, SweepKind};
pub use fiber::{FiberRealization, FiberSpec, SegmentParams};
pub use jones::{Complex, JonesMatrix};
pub use metrics::{DiffMode, StdvProfile};
pub use noise::NoiseConfig;
