//! Configuration types shared by every engine.
//!
//! All computation is dimensionless with `v = 1`, `d = 1` as the natural
//! choice (both remain free parameters). Physical units enter only through
//! [`PhysicalScale`] when Fisher information and sensitivity are reported.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Gyromagnetic ratio of the Kittel mode, 175 GHz/T.
pub const DEFAULT_GAMMA: f64 = 1.75e11;
/// Angular frequency assigned to the dimensionless unit `v/d`. With this value
/// the window centre `phi = 2 pi` sits at 2 pi x 7 GHz.
pub const DEFAULT_OMEGA_REF: f64 = 7.0e9;

/// Maps dimensionless results onto Hz/T^2 and T/sqrt(Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScale")]
pub struct PhysicalScale {
    omega_ref: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawScale {
    omega_ref: f64,
    gamma: f64,
}

impl TryFrom<RawScale> for PhysicalScale {
    type Error = Error;
    fn try_from(raw: RawScale) -> Result<Self> {
        PhysicalScale::new(raw.omega_ref, raw.gamma)
    }
}

impl PhysicalScale {
    pub fn new(omega_ref: f64, gamma: f64) -> Result<Self> {
        if !(omega_ref.is_finite() && omega_ref > 0.0) {
            return Err(Error::InvalidConfig(format!("omega_ref must be positive, got {omega_ref}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { omega_ref, gamma })
    }

    /// Unit scale: reported quantities stay dimensionless.
    pub fn dimensionless() -> Self {
        Self { omega_ref: 1.0, gamma: 1.0 }
    }

    pub fn omega_ref(&self) -> f64 {
        self.omega_ref
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Seconds corresponding to a dimensionless time.
    pub fn time(&self, t: f64) -> f64 {
        t / self.omega_ref
    }

    /// Converts a dimensionless `t (dR/dOmega)^2 / (e^{Rt} - 1)` into Hz/T^2.
    pub fn cfi_factor(&self) -> f64 {
        self.gamma * self.gamma / self.omega_ref
    }
}

impl Default for PhysicalScale {
    fn default() -> Self {
        Self { omega_ref: DEFAULT_OMEGA_REF, gamma: DEFAULT_GAMMA }
    }
}

/// Geometry and couplings of a giant emitter with `m` legs.
///
/// `g_total` is the total coupling `G = M g`; the per-leg coupling is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEmitter")]
pub struct EmitterConfig {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "G")]
    g_total: f64,
    d: f64,
    v: f64,
    omega: f64,
}

#[derive(Deserialize)]
struct RawEmitter {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "G")]
    g_total: f64,
    d: f64,
    v: f64,
    omega: f64,
}

impl TryFrom<RawEmitter> for EmitterConfig {
    type Error = Error;
    fn try_from(r: RawEmitter) -> Result<Self> {
        EmitterConfig::new(r.m, r.g_total, r.d, r.v, r.omega)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {x}")))
    }
}

impl EmitterConfig {
    pub fn new(m: usize, g_total: f64, d: f64, v: f64, omega: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("M must be at least 1".into()));
        }
        positive("G", g_total)?;
        positive("d", d)?;
        positive("v", v)?;
        positive("omega", omega)?;
        Ok(Self { m, g_total, d, v, omega })
    }

    /// Unit spacing and group velocity, so that `phi == omega`.
    pub fn dimensionless(m: usize, g_total: f64, omega: f64) -> Result<Self> {
        Self::new(m, g_total, 1.0, 1.0, omega)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn g_total(&self) -> f64 {
        self.g_total
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Per-leg coupling `g = G / M`.
    pub fn g(&self) -> f64 {
        self.g_total / self.m as f64
    }

    /// Phase picked up between adjacent legs at frequency `omega`.
    pub fn phase_at(&self, omega: f64) -> f64 {
        omega * self.d / self.v
    }

    /// Frequency at which the inter-leg phase equals `phi`.
    pub fn omega_at_phase(&self, phi: f64) -> f64 {
        phi * self.v / self.d
    }

    /// Travel time between adjacent legs.
    pub fn tau(&self) -> f64 {
        self.d / self.v
    }

    pub fn derive(&self) -> DerivedQuantities {
        derive(self)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.m, self.g_total, self.d, self.v, omega)
    }

    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(m, self.g_total, self.d, self.v, self.omega)
    }

    pub fn with_g_total(&self, g_total: f64) -> Result<Self> {
        Self::new(self.m, g_total, self.d, self.v, self.omega)
    }

    /// Same geometry, tuned to the right-branch working point.
    pub fn at_working_point(&self) -> Result<Self> {
        let opt = spectral::find_optimal(self)?;
        self.with_omega(opt.omega_opt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub g: f64,
    pub phi: f64,
    pub tau: f64,
}

pub fn derive(config: &EmitterConfig) -> DerivedQuantities {
    DerivedQuantities { g: config.g(), phi: config.phase_at(config.omega), tau: config.tau() }
}

/// Mode-grid parameters. The window is given in units of `|k| d`.
///
/// `n_modes` counts both propagation directions; the default of 600 is
/// 300 modes per branch, which puts the grid recurrence at `t = 450 d/v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_modes: usize,
    pub k_lo: f64,
    pub k_hi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_modes: 600, k_lo: 4.0 * PI / 3.0, k_hi: 8.0 * PI / 3.0 }
    }
}

impl GridSpec {
    pub fn build(&self, config: &EmitterConfig) -> Result<WaveguideGrid> {
        make_grid(config, self.n_modes, (self.k_lo, self.k_hi))
    }

    /// Same window, with `n_modes` raised (never lowered) until field
    /// returning from the grid recurrence cannot reach any leg before `t_max`:
    /// `RECURRENCE_MARGIN * T_rec >= t_max + (M - 1) d / v`.
    pub fn covering(&self, config: &EmitterConfig, t_max: f64) -> GridSpec {
        let width = self.k_hi - self.k_lo;
        if !(width > 0.0) || !t_max.is_finite() {
            return *self;
        }
        let reach = t_max + (config.m() - 1) as f64 * config.tau();
        // T_rec = 2 pi d half / (v width)
        let needed = reach * config.v() * width / (2.0 * PI * config.d() * RECURRENCE_MARGIN);
        let half = (self.n_modes / 2).max(needed.ceil() as usize);
        GridSpec { n_modes: 2 * half, ..*self }
    }
}

/// Fraction of the recurrence time treated as free of returning field.
pub const RECURRENCE_MARGIN: f64 = 0.9;

/// Discretized waveguide continuum with per-leg coupling amplitudes.
#[derive(Debug, Clone)]
pub struct WaveguideGrid {
    k: Vec<f64>,
    omega: Vec<f64>,
    dk: f64,
    k_window: (f64, f64),
    legs: usize,
    // row-major [leg][mode]
    weights: Vec<Complex64>,
    built_for: (usize, f64, f64, f64),
}

/// Builds `n_modes / 2` equally spaced `|k|` values per branch (cell midpoints
/// of the window), mirrored in sign. Leg `n` (1-based) couples to mode `j`
/// with `g sqrt(dk / 2 pi) e^{i k_j n d}`.
pub fn make_grid(config: &EmitterConfig, n_modes: usize, window: (f64, f64)) -> Result<WaveguideGrid> {
    if n_modes == 0 || !n_modes.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("n_modes must be even and positive, got {n_modes}")));
    }
    let (lo_kd, hi_kd) = window;
    if !(lo_kd.is_finite() && hi_kd.is_finite() && 0.0 <= lo_kd && lo_kd < hi_kd) {
        return Err(Error::InvalidConfig(format!("mode window ({lo_kd}, {hi_kd}) is not a valid |k|d interval")));
    }
    let k_lo = lo_kd / config.d();
    let k_hi = hi_kd / config.d();
    check_window(config.omega(), config.v(), (k_lo, k_hi))?;

    let half = n_modes / 2;
    let dk = (k_hi - k_lo) / half as f64;
    let positive: Vec<f64> = (0..half).map(|j| k_lo + (j as f64 + 0.5) * dk).collect();
    let k: Vec<f64> = positive.iter().copied().chain(positive.iter().map(|k| -k)).collect();
    let omega = k.iter().map(|k| config.v() * k.abs()).collect();

    let amp = config.g() * (dk / (2.0 * PI)).sqrt();
    let mut weights = Vec::with_capacity(config.m() * n_modes);
    for leg in 1..=config.m() {
        let x = leg as f64 * config.d();
        weights.extend(k.iter().map(|&kj| Complex64::from_polar(amp, kj * x)));
    }

    Ok(WaveguideGrid {
        k,
        omega,
        dk,
        k_window: (k_lo, k_hi),
        legs: config.m(),
        weights,
        built_for: (config.m(), config.g_total(), config.d(), config.v()),
    })
}

fn check_window(omega: f64, v: f64, (k_lo, k_hi): (f64, f64)) -> Result<()> {
    let (lo, hi) = (v * k_lo, v * k_hi);
    if omega > lo && omega < hi {
        Ok(())
    } else {
        Err(Error::WindowExcludesEmitter { omega, lo, hi })
    }
}

impl WaveguideGrid {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    /// `2 pi / (v dk)`: the discretized continuum revives after this time.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / (self.built_for.3 * self.dk)
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    /// `(k_min_abs, k_max_abs)`.
    pub fn k_window(&self) -> (f64, f64) {
        self.k_window
    }

    pub fn legs(&self) -> usize {
        self.legs
    }

    /// Coupling amplitudes of leg `leg` (1-based) to every mode.
    pub fn leg_weights(&self, leg: usize) -> &[Complex64] {
        assert!(leg >= 1 && leg <= self.legs, "leg {leg} out of 1..={}", self.legs);
        let n = self.k.len();
        &self.weights[(leg - 1) * n..leg * n]
    }

    /// Sum over legs: the giant emitter's coupling to mode `j`.
    pub fn total_weight(&self, j: usize) -> Complex64 {
        let n = self.k.len();
        (0..self.legs).map(|leg| self.weights[leg * n + j]).sum()
    }

    /// Checks the grid was built for this geometry and that `config.omega()`
    /// sits inside the frequency window.
    pub fn check_compatible(&self, config: &EmitterConfig) -> Result<()> {
        let (m, g, d, v) = self.built_for;
        if m != config.m() || g != config.g_total() || d != config.d() || v != config.v() {
            return Err(Error::GridConfigMismatch(format!(
                "grid built for (M={m}, G={g}, d={d}, v={v}), config has (M={}, G={}, d={}, v={})",
                config.m(),
                config.g_total(),
                config.d(),
                config.v()
            )));
        }
        check_window(config.omega(), config.v(), self.k_window)
    }
}

/// Uniform sampling `t_i = i dt`, `0 <= t_i <= t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    dt: f64,
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        positive("t_max", t_max)?;
        positive("dt", dt)?;
        if dt > t_max {
            return Err(Error::InvalidConfig(format!("dt {dt} exceeds t_max {t_max}")));
        }
        Ok(Self { t_max, dt })
    }

    /// `samples` points spanning `[0, t_max]` inclusive.
    pub fn with_samples(t_max: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 samples, got {samples}")));
        }
        Self::new(t_max, t_max / (samples - 1) as f64)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples()).map(|i| i as f64 * self.dt).collect()
    }

    /// Shrinks `dt` to the largest value `tau / p` (integer `p`) not above it.
    pub fn aligned_to_delay(&self, tau: f64) -> Result<(Self, usize)> {
        positive("tau", tau)?;
        let p = (tau / self.dt - 1e-9).ceil().max(1.0);
        if p > 1e8 {
            return Err(Error::StepIncompatibleWithDelay { dt: self.dt, tau });
        }
        let p = p as usize;
        let dt = tau / p as f64;
        let ratio = tau / dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::StepIncompatibleWithDelay { dt, tau });
        }
        Ok((Self { t_max: self.t_max, dt }, p))
    }
}

/// How the run window is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimePlan {
    /// `t in [0, rt_max / R(omega)]` where `R` is the Markovian decay rate.
    MarkovWindow {
        rt_max: f64,
        samples: usize,
    },
    Fixed(TimeGrid),
}

impl Default for TimePlan {
    fn default() -> Self {
        TimePlan::MarkovWindow { rt_max: 3.0, samples: 500 }
    }
}

impl TimePlan {
    pub fn resolve(&self, config: &EmitterConfig) -> Result<TimeGrid> {
        match *self {
            TimePlan::Fixed(grid) => Ok(grid),
            TimePlan::MarkovWindow { rt_max, samples } => {
                positive("rt_max", rt_max)?;
                let rate = spectral::decay_rate(config, config.omega());
                // relative to the largest possible rate 2 G^2 / v
                if rate <= 1e-12 * 2.0 * config.g_total().powi(2) / config.v() {
                    return Err(Error::InvalidConfig(format!(
                        "decay rate vanishes at omega = {}, cannot size a Markov window",
                        config.omega()
                    )));
                }
                TimeGrid::with_samples(rt_max / rate, samples)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-15;

    #[test]
    fn derive_examples() {
        let c = EmitterConfig::new(4, 0.1, 1.0, 1.0, 2.0 * PI).unwrap();
        let q = c.derive();
        assert!((q.g - 0.025).abs() < TOL);
        assert!((q.phi - 2.0 * PI).abs() < TOL);
        assert_eq!(q.tau, 1.0);

        let q = EmitterConfig::new(1, 0.1, 1.0, 1.0, PI).unwrap().derive();
        assert_eq!(q.g, 0.1);
        assert_eq!(q.phi, PI);
        assert_eq!(q.tau, 1.0);

        let q = EmitterConfig::new(3, 0.3, 2.0, 4.0, PI).unwrap().derive();
        assert!((q.g - 0.1).abs() < TOL);
        assert!((q.phi - PI / 2.0).abs() < TOL);
        assert_eq!(q.tau, 0.5);
    }

    #[test]
    fn m_times_g_recovers_total_coupling() {
        for m in 1..200 {
            let c = EmitterConfig::dimensionless(m, 0.137, 6.0).unwrap();
            assert!((c.g() * m as f64 - 0.137).abs() <= 2.0 * f64::EPSILON * 0.137);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(matches!(EmitterConfig::new(0, 0.1, 1.0, 1.0, 1.0), Err(Error::InvalidConfig(_))));
        assert!(EmitterConfig::new(1, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(EmitterConfig::new(1, 0.1, -1.0, 1.0, 1.0).is_err());
        assert!(EmitterConfig::new(1, 0.1, 1.0, 0.0, 1.0).is_err());
        assert!(EmitterConfig::new(1, 0.1, 1.0, 1.0, f64::NAN).is_err());
        assert!(PhysicalScale::new(0.0, 1.0).is_err());
        assert!(PhysicalScale::new(1.0, -1.0).is_err());
    }

    #[test]
    fn grid_splits_modes_between_branches() {
        let c = EmitterConfig::dimensionless(4, 0.1, 2.0 * PI).unwrap();
        let g = make_grid(&c, 200, (4.0 * PI / 3.0, 8.0 * PI / 3.0)).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g.wavenumbers().iter().filter(|k| **k > 0.0).count(), 100);
        assert!((g.dk() - (4.0 * PI / 3.0) / 100.0).abs() < 1e-15);
    }

    #[test]
    fn smallest_grid() {
        let c = EmitterConfig::dimensionless(1, 0.1, 2.0 * PI + 0.1).unwrap();
        let g = make_grid(&c, 2, (PI, 3.0 * PI)).unwrap();
        assert_eq!(g.wavenumbers(), &[2.0 * PI, -2.0 * PI]);
        assert!((g.dk() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn aligned_legs_sum_to_m() {
        // A window whose single cell midpoint is exactly k d = 2 pi.
        let c = EmitterConfig::dimensionless(7, 0.1, 2.0 * PI + 0.01).unwrap();
        let g = make_grid(&c, 2, (PI, 3.0 * PI)).unwrap();
        let amp = c.g() * (g.dk() / (2.0 * PI)).sqrt();
        for j in 0..2 {
            assert!((g.total_weight(j).norm() / amp - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn window_must_contain_emitter() {
        let c = EmitterConfig::dimensionless(2, 0.1, 1.0).unwrap();
        let err = make_grid(&c, 200, (4.0 * PI / 3.0, 8.0 * PI / 3.0)).unwrap_err();
        assert!(matches!(err, Error::WindowExcludesEmitter { .. }));
        assert!(make_grid(&c, 3, (0.5, 2.0)).is_err());
    }

    #[test]
    fn grid_mismatch_detected() {
        let c = EmitterConfig::dimensionless(3, 0.1, 2.0 * PI).unwrap();
        let g = GridSpec::default().build(&c).unwrap();
        assert!(g.check_compatible(&c).is_ok());
        assert!(g.check_compatible(&c.with_omega(2.0 * PI + 0.2).unwrap()).is_ok());
        assert!(matches!(g.check_compatible(&c.with_m(4).unwrap()), Err(Error::GridConfigMismatch(_))));
        assert!(matches!(g.check_compatible(&c.with_omega(10.0).unwrap()), Err(Error::WindowExcludesEmitter { .. })));
    }

    #[test]
    fn doubling_modes_halves_dk() {
        let c = EmitterConfig::dimensionless(3, 0.1, 2.0 * PI).unwrap();
        for n in [2usize, 10, 200, 400] {
            let a = make_grid(&c, n, (4.0, 9.0)).unwrap();
            let b = make_grid(&c, 2 * n, (4.0, 9.0)).unwrap();
            assert_eq!(a.dk(), 2.0 * b.dk());
        }
    }

    #[test]
    fn time_alignment_shrinks_step() {
        let tg = TimeGrid::new(10.0, 0.3).unwrap();
        let (aligned, p) = tg.aligned_to_delay(1.0).unwrap();
        assert_eq!(p, 4);
        assert_eq!(aligned.dt(), 0.25);
        assert_eq!(aligned.samples(), 41);
        let (aligned, p) = TimeGrid::new(10.0, 2.0).unwrap().aligned_to_delay(0.5).unwrap();
        assert_eq!((aligned.dt(), p), (0.5, 1));
        let (aligned, p) = TimeGrid::new(10.0, 0.25).unwrap().aligned_to_delay(1.0).unwrap();
        assert_eq!((aligned.dt(), p), (0.25, 4));
    }

    #[test]
    fn covering_grid_keeps_recurrence_out_of_window() {
        let spec = GridSpec::default();
        let c = EmitterConfig::dimensionless(2, 0.1, 2.5 * PI).unwrap();
        assert!((spec.build(&c).unwrap().recurrence_time() - 450.0).abs() < 1e-9);
        assert_eq!(spec.covering(&c, 300.0), spec);
        let c = c.with_m(100).unwrap();
        for t_max in [350.0, 1000.0, 2500.0] {
            let grown = spec.covering(&c, t_max);
            assert!(grown.n_modes > spec.n_modes && grown.n_modes % 2 == 0);
            let t_rec = grown.build(&c).unwrap().recurrence_time();
            assert!(RECURRENCE_MARGIN * t_rec >= t_max + 99.0);
            // minimal: one fewer mode pair would not cover
            let smaller = GridSpec { n_modes: grown.n_modes - 2, ..spec };
            assert!(RECURRENCE_MARGIN * smaller.build(&c).unwrap().recurrence_time() < t_max + 99.0);
        }
    }

    #[test]
    fn markov_plan_sizes_window_by_rate() {
        let c = EmitterConfig::dimensionless(2, 0.1, 2.5 * PI).unwrap();
        let tg = TimePlan::default().resolve(&c).unwrap();
        // R = 4 g^2 (1 + cos phi) = 0.01 at phi = 5 pi / 2
        assert!((tg.t_max() - 300.0).abs() < 1e-9);
        assert_eq!(tg.samples(), 500);
        let dark = EmitterConfig::dimensionless(2, 0.1, PI).unwrap();
        assert!(TimePlan::default().resolve(&dark).is_err());
    }
}
