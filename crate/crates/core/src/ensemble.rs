//! Small-emitter benchmark: `M` independent two-level emitters sitting at
//! the coupling points of the giant emitter, prepared in the symmetric
//! single-excitation (Dicke) state.
//!
//! Basis: `{|e_1>, ..., |e_M>, |1_{k_1}>, ..., |1_{k_N}>}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::{EmitterConfig, TimeGrid, WaveguideGrid};
use crate::dynamics::{AmplitudeTrajectory, Engine, Hamiltonian, Propagator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub emitters: Vec<Complex64>,
    pub modes: Vec<Complex64>,
}

impl EnsembleState {
    pub fn norm(&self) -> f64 {
        self.emitters.iter().chain(&self.modes).map(|z| z.norm_sqr()).sum()
    }

    fn to_vector(&self) -> Vec<Complex64> {
        self.emitters.iter().chain(&self.modes).copied().collect()
    }
}

/// All emitter amplitudes `1/sqrt(M)`, waveguide empty.
pub fn dicke_state(m: usize, n_modes: usize) -> EnsembleState {
    assert!(m >= 1, "Dicke state needs at least one emitter");
    let a = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    EnsembleState { emitters: vec![a; m], modes: vec![Complex64::new(0.0, 0.0); n_modes] }
}

/// Emitter `n` couples to mode `j` with the grid's leg-`n` weight; there is
/// no direct emitter-emitter term.
pub fn build_small_hamiltonian(config: &EmitterConfig, grid: &WaveguideGrid) -> Result<Hamiltonian> {
    let legs: Vec<usize> = (1..=config.m()).collect();
    build_with_positions(config, grid, &legs)
}

/// `positions[i]` is the grid leg (1-based) hosting emitter `i`.
fn build_with_positions(config: &EmitterConfig, grid: &WaveguideGrid, positions: &[usize]) -> Result<Hamiltonian> {
    grid.check_compatible(config)?;
    let m = positions.len();
    let n = grid.len();
    let mut h = DMatrix::<Complex64>::zeros(m + n, m + n);
    for (i, &leg) in positions.iter().enumerate() {
        h[(i, i)] = Complex64::new(config.omega(), 0.0);
        for (j, &c) in grid.leg_weights(leg).iter().enumerate() {
            h[(i, m + j)] = c;
            h[(m + j, i)] = c.conj();
        }
    }
    for (j, &w) in grid.frequencies().iter().enumerate() {
        h[(m + j, m + j)] = Complex64::new(w, 0.0);
    }
    Ok(Hamiltonian::from_matrix(h))
}

/// Evolves the Dicke state and records the total excited population.
pub fn exact_evolve_small(
    config: &EmitterConfig,
    grid: &WaveguideGrid,
    time_grid: &TimeGrid,
) -> Result<AmplitudeTrajectory> {
    exact_evolve_small_from(config, grid, time_grid, &dicke_state(config.m(), grid.len()))
}

pub fn exact_evolve_small_from(
    config: &EmitterConfig,
    grid: &WaveguideGrid,
    time_grid: &TimeGrid,
    initial: &EnsembleState,
) -> Result<AmplitudeTrajectory> {
    let h = build_small_hamiltonian(config, grid)?;
    evolve(config, &h, time_grid, initial)
}

fn evolve(
    config: &EmitterConfig,
    h: &Hamiltonian,
    time_grid: &TimeGrid,
    initial: &EnsembleState,
) -> Result<AmplitudeTrajectory> {
    let m = config.m();
    if initial.emitters.len() != m {
        return Err(Error::InvalidConfig(format!("{} emitter amplitudes for M = {m}", initial.emitters.len())));
    }
    let prop = Propagator::new(h, &initial.to_vector())?;
    let times = time_grid.times();
    let dicke = 1.0 / (m as f64).sqrt();
    let mut alpha = Vec::with_capacity(times.len());
    let mut population = Vec::with_capacity(times.len());
    let mut norm = Vec::with_capacity(times.len());
    for &t in &times {
        let psi = prop.state_at(t);
        let (emit, _) = psi.split_at(m);
        let sym: Complex64 = emit.iter().sum::<Complex64>() * dicke;
        alpha.push(sym * Complex64::from_polar(1.0, config.omega() * t));
        population.push(emit.iter().map(|z| z.norm_sqr()).sum());
        norm.push(psi.iter().map(|z| z.norm_sqr()).sum());
    }
    Ok(AmplitudeTrajectory { engine: Engine::Small, times, alpha, population, norm: Some(norm), modes: None })
}
