//! Frequency variance, classical Fisher information per unit time and
//! field sensitivity from population measurements.
//!
//! For a population `P` measured at time `t` the error-transfer variance is
//! `P (1 - P) / (dP/dOmega)^2`. Writing `P = exp(-R t)` gives
//! `(e^{Rt} - 1) / (t^2 (dR/dOmega)^2)` and, with `Omega = gamma H`,
//!
//! ```text
//! f_H = gamma^2 t (dR/dOmega)^2 / (e^{Rt} - 1),      S_H = 1 / sqrt(f_H).
//! ```
//!
//! Beyond the Markovian regime `R` is replaced by `R_eff(t) = -ln P(t) / t`
//! taken from exact evolutions, and its slope by a central difference in
//! `Omega`.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EmitterConfig, GridSpec, PhysicalScale, TimeGrid, TimePlan, WaveguideGrid};
use crate::dynamics::{build_hamiltonian, emitter_excited_state, Engine, Propagator, POPULATION_FLOOR};
use crate::ensemble::{build_small_hamiltonian, dicke_state};
use crate::error::{Error, Result};
use crate::output::num;
use crate::spectral::{decay_rate, decay_slope};

/// `Delta^2 Omega = P (1 - P) / (dP/dOmega)^2`.
///
/// A vanishing slope yields `+inf` rather than an error so sweeps can cross
/// symmetric points.
pub fn variance_from_population(pe: f64, dpe_domega: f64) -> Result<f64> {
    if !(pe > 0.0 && pe < 1.0) {
        return Err(Error::BoundaryPopulation { pe });
    }
    if dpe_domega == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(pe * (1.0 - pe) / (dpe_domega * dpe_domega))
}

/// `(e^{Rt} - 1) / (t^2 (dR/dOmega)^2)` for exponential decay.
pub fn variance_markov(rate: f64, slope: f64, t: f64) -> f64 {
    if slope == 0.0 {
        return f64::INFINITY;
    }
    (rate * t).exp_m1() / (t * t * slope * slope)
}

/// `t / (e^{Rt} - 1)`, continued to `1 / R` and to `0` at `R = 0`.
fn exposure(rate: f64, t: f64) -> f64 {
    let x = rate * t;
    if x <= 0.0 {
        return if rate == 0.0 { f64::INFINITY } else { 0.0 };
    }
    if x < 1e-8 {
        return 1.0 / (rate * (1.0 + 0.5 * x));
    }
    t / x.exp_m1()
}

/// Markovian `f_H` at frequency `omega` after time `t` (dimensionless `t`).
pub fn cfi_per_time_markov(config: &EmitterConfig, omega: f64, t: f64, scale: &PhysicalScale) -> f64 {
    let slope = decay_slope(config, omega);
    if slope == 0.0 {
        return 0.0;
    }
    let rate = decay_rate(config, omega);
    scale.cfi_factor() * slope * slope * exposure(rate, t)
}

/// `S_H = f_H^{-1/2}`.
pub fn sensitivity(f_h: f64) -> Result<f64> {
    if !(f_h > 0.0) {
        return Err(Error::NonpositiveCfi(f_h));
    }
    Ok(1.0 / f_h.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    /// One emitter with `M` legs, initially excited.
    Giant,
    /// `M` small emitters at the leg positions, Dicke initial state.
    Small,
}

impl Setup {
    pub fn engine(&self) -> Engine {
        match self {
            Setup::Giant => Engine::Exact,
            Setup::Small => Engine::Small,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Setup::Giant => "giant",
            Setup::Small => "small",
        }
    }
}

/// One `(t, M)` cell. Times are dimensionless; `t_phys` is in seconds.
/// `f_h` is in Hz/T^2 and `s_h` in T/sqrt(Hz) under the scale used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetrologyPoint {
    pub t: f64,
    pub t_phys: f64,
    pub m: usize,
    pub f_h: f64,
    pub s_h: f64,
    pub var_omega: f64,
    pub var_h: f64,
    /// `f_H` from the error-transfer formula applied to `P` directly.
    pub f_h_direct: f64,
    pub engine: Engine,
}

impl MetrologyPoint {
    /// Builds a point from dimensionless rate, slope and time.
    fn from_rate(m: usize, t: f64, rate: f64, slope: f64, engine: Engine, scale: &PhysicalScale) -> Self {
        let f_dimless = if slope == 0.0 { 0.0 } else { slope * slope * exposure(rate, t) };
        let f_h = scale.cfi_factor() * f_dimless;
        let var_omega = scale.omega_ref().powi(2) * variance_markov(rate, slope, t);
        MetrologyPoint {
            t,
            t_phys: scale.time(t),
            m,
            f_h,
            s_h: if f_h > 0.0 { 1.0 / f_h.sqrt() } else { f64::INFINITY },
            var_omega,
            var_h: var_omega / scale.gamma().powi(2),
            f_h_direct: f_h,
            engine,
        }
    }
}

/// Markovian metrology along a time grid (the `t = 0` sample is skipped).
pub fn markov_points(config: &EmitterConfig, time_grid: &TimeGrid, scale: &PhysicalScale) -> Vec<MetrologyPoint> {
    let rate = decay_rate(config, config.omega());
    let slope = decay_slope(config, config.omega());
    time_grid
        .times()
        .into_iter()
        .filter(|t| *t > 0.0)
        .map(|t| MetrologyPoint::from_rate(config.m(), t, rate, slope, Engine::Markov, scale))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiniteDifference {
    /// Frequency step (dimensionless) of the central difference.
    pub delta: f64,
    /// Allowed relative disagreement between steps `delta` and `delta / 2`.
    pub richardson_tol: f64,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self { delta: 1e-4, richardson_tol: 0.01 }
    }
}

/// Emitter populations of one setup at frequency `omega`.
fn populations(
    config: &EmitterConfig,
    grid: &WaveguideGrid,
    times: &[f64],
    omega: f64,
    setup: Setup,
) -> Result<Vec<f64>> {
    let c = config.with_omega(omega)?;
    let (h, psi0, rows): (_, Vec<_>, Range<usize>) = match setup {
        Setup::Giant => (build_hamiltonian(&c, grid)?, emitter_excited_state(grid), 0..1),
        Setup::Small => {
            let s = dicke_state(c.m(), grid.len());
            let v = s.emitters.iter().chain(&s.modes).copied().collect();
            (build_small_hamiltonian(&c, grid)?, v, 0..c.m())
        }
    };
    Ok(Propagator::new(&h, &psi0)?.populations(times, rows))
}

/// Fisher information per unit time along `time_grid`, using exact
/// evolutions at `Omega`, `Omega +- delta` and `Omega +- delta/2`.
///
/// The result stops at the first sample where any population falls to the
/// underflow floor.
pub fn cfi_per_time_dynamic(
    config: &EmitterConfig,
    grid: &WaveguideGrid,
    time_grid: &TimeGrid,
    fd: &FiniteDifference,
    setup: Setup,
    scale: &PhysicalScale,
) -> Result<Vec<MetrologyPoint>> {
    let delta = fd.delta;
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {delta}")));
    }
    let omega = config.omega();
    config.with_omega(omega - delta).and_then(|c| grid.check_compatible(&c))?;
    config.with_omega(omega + delta).and_then(|c| grid.check_compatible(&c))?;

    let times: Vec<f64> = time_grid.times().into_iter().filter(|t| *t > 0.0).collect();
    let offsets = [0.0, -delta, delta, -0.5 * delta, 0.5 * delta];
    let pops = offsets
        .par_iter()
        .map(|off| populations(config, grid, &times, omega + off, setup))
        .collect::<Result<Vec<_>>>()?;

    let usable = times.iter().enumerate().take_while(|&(i, _)| pops.iter().all(|p| p[i] > POPULATION_FLOOR)).count();
    if usable == 0 {
        return Err(Error::PopulationUnderflow { t: times.first().copied().unwrap_or(0.0) });
    }

    let r_eff = |k: usize, i: usize| -pops[k][i].ln() / times[i];
    let slope: Vec<f64> = (0..usable).map(|i| (r_eff(2, i) - r_eff(1, i)) / (2.0 * delta)).collect();
    let slope_half: Vec<f64> = (0..usable).map(|i| (r_eff(4, i) - r_eff(3, i)) / delta).collect();
    let scale_ref = slope_half.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let worst = slope.iter().zip(&slope_half).fold(0.0f64, |a, (s, h)| a.max((s - h).abs()));
    if scale_ref > 0.0 && worst > fd.richardson_tol * scale_ref {
        return Err(Error::FiniteDifferenceUnstable { relative: worst / scale_ref });
    }

    let engine = setup.engine();
    Ok((0..usable)
        .map(|i| {
            let t = times[i];
            let mut point = MetrologyPoint::from_rate(config.m(), t, r_eff(0, i), slope[i], engine, scale);
            let dp = (pops[2][i] - pops[1][i]) / (2.0 * delta);
            point.f_h_direct = match variance_from_population(pops[0][i], dp) {
                Ok(var) if var.is_finite() => scale.cfi_factor() / (var * t),
                _ => 0.0,
            };
            point
        })
        .collect())
}

/// Grid, run window, scale and differencing shared by a batch of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Study {
    pub grid: GridSpec,
    pub time: TimePlan,
    pub scale: PhysicalScale,
    pub fd: FiniteDifference,
}

/// Maximum of `f_H` over time for one `(M, G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RidgePoint {
    pub m: usize,
    pub g_total: f64,
    pub omega: f64,
    pub t_opt: f64,
    pub f_h_max: f64,
    pub s_h: f64,
    pub f_h_direct_max: f64,
    /// Whether the maximum lies strictly inside the sampled window.
    pub interior: bool,
    /// Mode count of the grid actually used.
    pub n_modes: usize,
}

impl RidgePoint {
    fn from_points(config: &EmitterConfig, n_modes: usize, points: &[MetrologyPoint]) -> Self {
        let (idx, best) =
            points
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.f_h > acc.1 { (i, p.f_h) } else { acc });
        let direct = points.iter().map(|p| p.f_h_direct).fold(0.0, f64::max);
        RidgePoint {
            m: config.m(),
            g_total: config.g_total(),
            omega: config.omega(),
            t_opt: points[idx].t,
            f_h_max: best,
            s_h: sensitivity(best).unwrap_or(f64::INFINITY),
            f_h_direct_max: direct,
            interior: idx > 0 && idx + 1 < points.len(),
            n_modes,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CfiRow {
    pub m: usize,
    pub omega: f64,
    pub points: Vec<MetrologyPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CfiMap {
    pub setup: Setup,
    pub rows: Vec<CfiRow>,
    pub ridge: Vec<RidgePoint>,
}

impl CfiMap {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "M,t,fH,SH")?;
        for row in &self.rows {
            for p in &row.points {
                writeln!(out, "{},{},{},{}", p.m, num(p.t), num(p.f_h), num(p.s_h))?;
            }
        }
        Ok(())
    }

    pub fn write_ridge_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "M,omega,t_opt,fH_max,SH,fH_direct_max,n_modes")?;
        for r in &self.ridge {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.m,
                num(r.omega),
                num(r.t_opt),
                num(r.f_h_max),
                num(r.s_h),
                num(r.f_h_direct_max),
                r.n_modes
            )?;
        }
        Ok(())
    }
}

/// Configuration at the working point for `M` legs and total coupling `G`,
/// with its run window (sized on the giant-emitter rate) and a mode grid
/// whose recurrence stays outside that window.
pub fn working_point(
    base: &EmitterConfig,
    m: usize,
    g_total: f64,
    study: &Study,
) -> Result<(EmitterConfig, WaveguideGrid, TimeGrid)> {
    let c = base.with_m(m)?.with_g_total(g_total)?.at_working_point()?;
    let tg = study.time.resolve(&c)?;
    let grid = study.grid.covering(&c, tg.t_max()).build(&c)?;
    Ok((c, grid, tg))
}

fn ridge_for(base: &EmitterConfig, m: usize, g: f64, setup: Setup, study: &Study) -> Result<(CfiRow, RidgePoint)> {
    let (c, grid, tg) = working_point(base, m, g, study)?;
    let points = cfi_per_time_dynamic(&c, &grid, &tg, &study.fd, setup, &study.scale)?;
    let ridge = RidgePoint::from_points(&c, grid.len(), &points);
    Ok((CfiRow { m, omega: c.omega(), points }, ridge))
}

/// `f_H(t)` for every `M`, each at its own working point. Geometry and total
/// coupling come from `base`.
pub fn cfi_map(base: &EmitterConfig, m_list: &[usize], setup: Setup, study: &Study) -> Result<CfiMap> {
    let cells =
        m_list.par_iter().map(|&m| ridge_for(base, m, base.g_total(), setup, study)).collect::<Result<Vec<_>>>()?;
    let (rows, ridge) = cells.into_iter().unzip();
    Ok(CfiMap { setup, rows, ridge })
}

/// Time-optimal sensitivity for every `(M, G)`, ordered by `M` then `G`.
pub fn sensitivity_vs_m(
    base: &EmitterConfig,
    m_list: &[usize],
    g_list: &[f64],
    setup: Setup,
    study: &Study,
) -> Result<Vec<RidgePoint>> {
    let keys: Vec<(usize, f64)> = m_list.iter().flat_map(|&m| g_list.iter().map(move |&g| (m, g))).collect();
    keys.par_iter().map(|&(m, g)| ridge_for(base, m, g, setup, study).map(|(_, r)| r)).collect()
}

pub fn write_sensitivity_csv<W: Write>(rows: &[RidgePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "M,G,t_opt,fH_max,SH")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.m, num(r.g_total), num(r.t_opt), num(r.f_h_max), num(r.s_h))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Comparison {
    pub giant: RidgePoint,
    pub small: RidgePoint,
    /// Giant over small time-optimal `f_H`.
    pub ratio: f64,
}

/// Giant emitter and small-emitter array at identical `M`, `G`, frequency,
/// mode grid and run window.
pub fn compare_small(base: &EmitterConfig, m: usize, study: &Study) -> Result<Comparison> {
    let (c, grid, tg) = working_point(base, m, base.g_total(), study)?;
    let mut out = [Setup::Giant, Setup::Small]
        .par_iter()
        .map(|&setup| {
            cfi_per_time_dynamic(&c, &grid, &tg, &study.fd, setup, &study.scale)
                .map(|p| RidgePoint::from_points(&c, grid.len(), &p))
        })
        .collect::<Result<Vec<_>>>()?;
    let small = out.pop().expect("two setups");
    let giant = out.pop().expect("two setups");
    Ok(Comparison { giant, small, ratio: giant.f_h_max / small.f_h_max })
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "setup,M,G,omega,t_opt,fH_max,SH")?;
        for (name, r) in [("giant", &self.giant), ("small", &self.small)] {
            writeln!(
                out,
                "{name},{},{},{},{},{},{}",
                r.m,
                num(r.g_total),
                num(r.omega),
                num(r.t_opt),
                num(r.f_h_max),
                num(r.s_h)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn variance_examples() {
        assert_eq!(variance_from_population(0.5, 1.0).unwrap(), 0.25);
        assert_eq!(variance_from_population(0.3, 0.0).unwrap(), f64::INFINITY);
        assert!(matches!(variance_from_population(1.0, 2.0), Err(Error::BoundaryPopulation { .. })));
        assert!(matches!(variance_from_population(0.0, 2.0), Err(Error::BoundaryPopulation { .. })));
        // binomial variance shrinks towards the boundary
        assert!(variance_from_population(1.0 - 1e-9, 1.0).unwrap() < 1e-8);
    }

    #[test]
    fn exponential_population_reproduces_rate_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let rate: f64 = rng.random_range(1e-3..0.1);
            let t: f64 = rng.random_range(0.5..200.0);
            let slope: f64 = rng.random_range(-2.0..2.0);
            let pe = (-rate * t).exp();
            // dP/dOmega = -t P dR/dOmega
            let a = variance_from_population(pe, -t * pe * slope).unwrap();
            let b = variance_markov(rate, slope, t);
            assert!((a - b).abs() <= 1e-10 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn markov_cfi_limits() {
        let scale = PhysicalScale::dimensionless();
        let dark = EmitterConfig::dimensionless(2, 0.1, PI).unwrap();
        // R and dR/dOmega vanish together; f tends to dR^2/R = 8 g^2
        let f = cfi_per_time_markov(&dark, PI, 10.0, &scale);
        assert!((f - 8.0 * dark.g().powi(2)).abs() < 1e-9, "{f}");
        let c = EmitterConfig::dimensionless(4, 0.1, 6.6).unwrap();
        let (r, s) = (decay_rate(&c, 6.6), decay_slope(&c, 6.6));
        let small_t = cfi_per_time_markov(&c, 6.6, 1e-12, &scale);
        assert!((small_t - s * s / r).abs() < 1e-9 * s * s / r);
    }

    #[test]
    fn markov_cfi_inverts_field_variance() {
        let scale = PhysicalScale::default();
        let c = EmitterConfig::dimensionless(6, 0.1, 6.6).unwrap();
        let tg = TimeGrid::with_samples(200.0, 50).unwrap();
        for p in markov_points(&c, &tg, &scale) {
            assert!((p.f_h * p.var_h * p.t_phys - 1.0).abs() < 1e-12);
            assert!((p.s_h - 1.0 / p.f_h.sqrt()).abs() < 1e-12 * p.s_h);
            let direct = cfi_per_time_markov(&c, 6.6, p.t, &scale);
            assert!((direct - p.f_h).abs() < 1e-12 * p.f_h);
        }
    }

    #[test]
    fn doubling_gamma_quadruples_cfi() {
        let c = EmitterConfig::dimensionless(6, 0.1, 6.6).unwrap();
        let s1 = PhysicalScale::new(7e9, 1.75e11).unwrap();
        let s2 = PhysicalScale::new(7e9, 3.5e11).unwrap();
        let tg = TimeGrid::with_samples(100.0, 10).unwrap();
        for (a, b) in markov_points(&c, &tg, &s1).iter().zip(markov_points(&c, &tg, &s2).iter()) {
            assert!((b.f_h / a.f_h - 4.0).abs() < 1e-12);
            assert!((b.s_h / a.s_h - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sensitivity_definition() {
        assert!((sensitivity(1e16).unwrap() - 1e-8).abs() < 1e-22);
        assert_eq!(sensitivity(4.0).unwrap(), 0.5);
        assert!(matches!(sensitivity(0.0), Err(Error::NonpositiveCfi(_))));
        assert!(matches!(sensitivity(-1.0), Err(Error::NonpositiveCfi(_))));
    }

    #[test]
    fn dynamic_cfi_rejects_step_leaving_window() {
        let c = EmitterConfig::dimensionless(2, 0.1, 2.5 * PI).unwrap();
        let grid = GridSpec::default().build(&c).unwrap();
        let tg = TimeGrid::with_samples(50.0, 20).unwrap();
        let fd = FiniteDifference { delta: 1.0, richardson_tol: 0.01 };
        let err = cfi_per_time_dynamic(&c, &grid, &tg, &fd, Setup::Giant, &PhysicalScale::dimensionless());
        assert!(matches!(err, Err(Error::WindowExcludesEmitter { .. })));
    }

    #[test]
    fn dynamic_cfi_tracks_markov_for_two_legs() {
        let c = EmitterConfig::dimensionless(2, 0.1, 2.5 * PI).unwrap();
        let grid = GridSpec::default().build(&c).unwrap();
        let rate = decay_rate(&c, c.omega());
        let tg = TimeGrid::with_samples(2.0 / rate, 200).unwrap();
        let scale = PhysicalScale::dimensionless();
        let pts = cfi_per_time_dynamic(&c, &grid, &tg, &FiniteDifference::default(), Setup::Giant, &scale).unwrap();
        // retardation ripples of a few percent ride on the Markov curve
        let mut ratios = Vec::new();
        for p in pts.iter().filter(|p| rate * p.t >= 0.2) {
            let mk = cfi_per_time_markov(&c, c.omega(), p.t, &scale);
            assert!((p.f_h - mk).abs() < 0.1 * mk, "t={} {} vs {}", p.t, p.f_h, mk);
            assert!((p.f_h_direct - p.f_h).abs() < 1e-3 * p.f_h);
            ratios.push(p.f_h / mk);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean ratio {mean}");
    }

    #[test]
    fn halving_step_keeps_dynamic_cfi() {
        let c = EmitterConfig::dimensionless(10, 0.1, 7.0).unwrap().at_working_point().unwrap();
        let grid = GridSpec::default().build(&c).unwrap();
        let tg = TimePlan::MarkovWindow { rt_max: 3.0, samples: 120 }.resolve(&c).unwrap();
        let scale = PhysicalScale::default();
        let a = cfi_per_time_dynamic(&c, &grid, &tg, &FiniteDifference::default(), Setup::Giant, &scale).unwrap();
        let fd = FiniteDifference { delta: 5e-5, ..Default::default() };
        let b = cfi_per_time_dynamic(&c, &grid, &tg, &fd, Setup::Giant, &scale).unwrap();
        let peak = a.iter().map(|p| p.f_h).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.f_h - y.f_h).abs() <= 0.01 * peak);
        }
    }
}
