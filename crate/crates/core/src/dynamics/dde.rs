//! Retarded amplitude equation of the giant emitter,
//!
//! ```text
//! a'(t) = -(G^2 / (M v)) a(t)
//!         - (2 G^2 / (M^2 v)) sum_{l=1}^{M-1} (M - l) e^{i Omega l tau} a(t - l tau) H(t - l tau)
//! ```
//!
//! with `a(0) = 1` and `a(t < 0) = 0`.
//!
//! Classical RK4 with step `h = tau / q`. The solution is stored on the
//! half-step lattice `h / 2`, and every lattice point starts its own RK4 step
//! of length `h`, so the midpoint stages read delayed values straight from
//! storage. Two interleaved chains result (even and odd lattice points), both
//! seeded exactly because the dynamics is a pure exponential before `tau`.
//!
//! Every delay `l tau` is an even lattice offset. The step function is
//! evaluated as the limit from inside the current step: 1 at its start,
//! 1/2 at its midpoint, 0 at its end.

use num_complex::Complex64;

use super::{AmplitudeTrajectory, Engine};
use crate::config::{EmitterConfig, TimeGrid};
use crate::error::Result;

pub const MIN_STEPS_PER_DELAY: usize = 20;

/// Integrates with at least [`MIN_STEPS_PER_DELAY`] RK4 steps per delay.
///
/// The sampling step is first shrunk so it divides `tau`; the returned
/// trajectory uses the adjusted grid.
pub fn dde_evolve(config: &EmitterConfig, time_grid: &TimeGrid) -> Result<AmplitudeTrajectory> {
    dde_evolve_with(config, time_grid, MIN_STEPS_PER_DELAY)
}

pub fn dde_evolve_with(
    config: &EmitterConfig,
    time_grid: &TimeGrid,
    min_steps_per_delay: usize,
) -> Result<AmplitudeTrajectory> {
    let tau = config.tau();
    let (grid, per_sample) = time_grid.aligned_to_delay(tau)?;
    let sub = min_steps_per_delay.max(1).div_ceil(per_sample);
    let steps_per_delay = per_sample * sub;
    let h = tau / steps_per_delay as f64;
    let half = 0.5 * h;

    let m = config.m();
    let mf = m as f64;
    let g2 = config.g_total() * config.g_total();
    let local = g2 / (mf * config.v());
    let omega_tau = config.omega() * tau;
    // (lattice lag, coefficient) per delayed leg pair separation
    let history: Vec<(usize, Complex64)> = (1..m)
        .map(|l| {
            let c = 2.0 * g2 / (mf * mf * config.v()) * (m - l) as f64;
            (2 * steps_per_delay * l, Complex64::from_polar(c, omega_tau * l as f64))
        })
        .collect();

    let samples = grid.samples();
    let stride = 2 * sub;
    let n_store = (samples - 1) * stride + 1;
    let mut a = vec![Complex64::new(0.0, 0.0); n_store.max(2)];
    a[0] = Complex64::new(1.0, 0.0);
    a[1] = Complex64::new((-local * half).exp(), 0.0);

    // stage position within a step: 0 start, 1 midpoint, 2 end
    const THETA_AT_JUMP: [f64; 3] = [1.0, 0.5, 0.0];
    let rhs = |a: &[Complex64], j: usize, pos: usize, y: Complex64| -> Complex64 {
        let mut delayed = Complex64::new(0.0, 0.0);
        for &(lag, coef) in &history {
            if j > lag {
                delayed += coef * a[j - lag];
            } else if j == lag {
                delayed += coef * a[0] * THETA_AT_JUMP[pos];
            } else {
                break;
            }
        }
        -local * y - delayed
    };

    for i in 0..n_store.saturating_sub(2) {
        let y = a[i];
        let k1 = rhs(&a, i, 0, y);
        let k2 = rhs(&a, i + 1, 1, y + k1 * (0.5 * h));
        let k3 = rhs(&a, i + 1, 1, y + k2 * (0.5 * h));
        let k4 = rhs(&a, i + 2, 2, y + k3 * h);
        a[i + 2] = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }

    let times = grid.times();
    let alpha: Vec<Complex64> = (0..samples).map(|s| a[s * stride]).collect();
    let population = alpha.iter().map(|z| z.norm_sqr()).collect();
    Ok(AmplitudeTrajectory { engine: Engine::Dde, times, alpha, population, norm: None, modes: None })
}
