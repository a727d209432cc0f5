//! Deterministic simulator and control library for half-bridge modular
//! multilevel converters: full switched state-space plant, averaged and
//! sum/difference models, closed-form steady-state harmonic analysis,
//! capacitor-voltage balancing, adaptive optimal-reference generation and
//! windowed predictive current control.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod harmonic;
pub mod model;
pub mod params;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod trace;

pub use controller::{Controller, ControllerGains, ReferenceMode, ReferenceSchedule};
pub use error::{Error, Result};
pub use harmonic::{HarmonicAnalysis, HarmonicSpec};
pub use model::{FullState, SwitchCommand};
pub use params::ConverterParams;
pub use scenario::{load_scenario, parse_scenario};
pub use sim::{run_closed_loop, run_open_loop, run_oracle, PlantIntegrator, Scenario};
pub use trace::{Trace, TraceRow};
