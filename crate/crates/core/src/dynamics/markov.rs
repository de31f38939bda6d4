use num_complex::Complex64;

use super::{AmplitudeTrajectory, Engine};
use crate::config::{EmitterConfig, TimeGrid};
use crate::spectral::decay_rate;

/// `P_e(t) = exp(-R t)`, `alpha(t) = exp(-R t / 2)` with `R` at `config.omega()`.
pub fn markov_population(config: &EmitterConfig, time_grid: &TimeGrid) -> AmplitudeTrajectory {
    let rate = decay_rate(config, config.omega());
    let times = time_grid.times();
    let population = times.iter().map(|t| (-rate * t).exp()).collect();
    let alpha = times.iter().map(|t| Complex64::new((-0.5 * rate * t).exp(), 0.0)).collect();
    AmplitudeTrajectory { engine: Engine::Markov, times, alpha, population, norm: None, modes: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn starts_excited_and_halves_at_ln2() {
        let c = EmitterConfig::dimensionless(2, 0.1, 2.5 * PI).unwrap();
        let rate = decay_rate(&c, c.omega());
        let tg = TimeGrid::new(std::f64::consts::LN_2 / rate, std::f64::consts::LN_2 / rate / 10.0).unwrap();
        let tr = markov_population(&c, &tg);
        assert_eq!(tr.population[0], 1.0);
        assert!((tr.population.last().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dark_point_never_decays() {
        let c = EmitterConfig::dimensionless(2, 0.1, PI).unwrap();
        let tr = markov_population(&c, &TimeGrid::new(1e4, 10.0).unwrap());
        assert!(tr.population.iter().all(|p| (p - 1.0).abs() < 1e-15));
    }
}
