//! Simulation and metrology workbench for a giant-emitter waveguide-QED
//! magnetometer.
//!
//! A giant emitter couples to a waveguide at `M` points spaced by `d`. The
//! interference between those legs makes its decay rate strongly frequency
//! dependent, which a population measurement turns into a frequency (and so
//! magnetic field) estimate. The crate covers
//!
//! * [`spectral`]: Markovian decay rate, Lamb shift, slope and working point;
//! * [`dynamics`]: Markovian, retarded (delay-equation) and exact dynamics;
//! * [`ensemble`]: the small-emitter array used as a benchmark;
//! * [`metrology`]: Fisher information per unit time and sensitivity;
//! * [`cli`]: the `wqed` batch front-end.

// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod metrology;
pub mod optimize;
pub mod output;
pub mod settings;
pub mod spectral;

pub use config::{
    derive, make_grid, DerivedQuantities, EmitterConfig, GridSpec, PhysicalScale, TimeGrid, TimePlan, WaveguideGrid,
};
pub use dynamics::{AmplitudeTrajectory, EffectiveDecay, Engine};
pub use error::{Error, Result};
pub use metrology::{MetrologyPoint, Setup, Study};
pub use spectral::{OptimalPoint, SpectrumTable};
