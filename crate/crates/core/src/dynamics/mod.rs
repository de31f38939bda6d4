//! Emitter population dynamics at three levels of fidelity.
//!
//! * [`markov_population`]: exponential decay at the Markovian rate.
//! * [`dde_evolve`]: the retarded single-excitation amplitude equation.
//! * [`exact_evolve`]: unitary evolution of the emitter plus a discretized
//!   waveguide in the single-excitation sector.
//!
//! Amplitudes are reported in the frame rotating at the bare emitter
//! frequency; populations do not depend on the frame.

mod dde;
mod exact;
mod markov;
mod trajectory;

pub use dde::{dde_evolve, dde_evolve_with, MIN_STEPS_PER_DELAY};
pub use exact::{build_hamiltonian, emitter_excited_state, exact_evolve, Hamiltonian, Propagator};
pub use markov::markov_population;
pub use trajectory::{effective_decay, AmplitudeTrajectory, EffectiveDecay, Engine, POPULATION_FLOOR};
