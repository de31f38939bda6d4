//! Markovian dissipation spectrum of a giant emitter.
//!
//! With `phi = Omega d / v` the waveguide-induced decay rate and Lamb shift are
//!
//! ```text
//! R = (2 g^2 / v) sum_{n,l=1..M} cos(|n - l| phi) = (2 g^2 / v) sin^2(M phi / 2) / sin^2(phi / 2)
//! L = (g^2 / v)   sum_{n,l=1..M} sin(|n - l| phi)
//! ```
//!
//! `R(phi)` is `2 pi` periodic and forms a window of width `2 pi / M` around
//! `phi = 2 pi`. The working point is where `|dR/dOmega|` peaks on its flank.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::EmitterConfig;
use crate::error::{Error, Result};
use crate::optimize::{golden_section_max, grid_bracket_max};

/// Below this `|sin(phi/2)|` the closed form is replaced by the direct sum.
const SINGULAR_GUARD: f64 = 1e-8;
const SCAN_POINTS: usize = 4096;
const PHASE_TOL: f64 = 1e-11;

/// `sum_{n,l=1..M} cos(|n - l| phi)`, the Fejer-type kernel behind `R`.
///
/// The product `M phi / 2` is carried with its rounding error so that the
/// result keeps full relative precision next to the zeros of the kernel.
pub fn interference_kernel(m: usize, phi: f64) -> f64 {
    let half = 0.5 * phi;
    let s_half = half.sin();
    if s_half.abs() < SINGULAR_GUARD {
        return weighted_cos_sum(m, phi);
    }
    let mf = m as f64;
    let p = mf * half;
    let err = mf.mul_add(half, -p);
    let s = p.sin() + p.cos() * err;
    let r = s / s_half;
    r * r
}

fn weighted_cos_sum(m: usize, phi: f64) -> f64 {
    let mut acc = m as f64;
    for l in 1..m {
        acc += 2.0 * (m - l) as f64 * (l as f64 * phi).cos();
    }
    acc
}

/// Markovian decay rate `R(Omega)`.
pub fn decay_rate(config: &EmitterConfig, omega: f64) -> f64 {
    let g = config.g();
    2.0 * g * g / config.v() * interference_kernel(config.m(), config.phase_at(omega))
}

/// Lamb shift `L(Omega)`.
pub fn lamb_shift(config: &EmitterConfig, omega: f64) -> f64 {
    let m = config.m();
    let phi = config.phase_at(omega);
    let g = config.g();
    let sum: f64 = (1..m).map(|l| 2.0 * (m - l) as f64 * (l as f64 * phi).sin()).sum();
    g * g / config.v() * sum
}

/// Analytic `dR/dOmega = -(2 g^2 d / v^2) sum_{n,l} |n-l| sin(|n-l| phi)`.
pub fn decay_slope(config: &EmitterConfig, omega: f64) -> f64 {
    let m = config.m();
    let phi = config.phase_at(omega);
    let g = config.g();
    let sum: f64 = (1..m)
        .map(|l| {
            let lf = l as f64;
            2.0 * (m - l) as f64 * lf * (lf * phi).sin()
        })
        .sum();
    -2.0 * g * g * config.d() / (config.v() * config.v()) * sum
}

/// Second derivative `d^2R/dOmega^2`, used to confirm a located maximum.
pub fn decay_curvature(config: &EmitterConfig, omega: f64) -> f64 {
    let m = config.m();
    let phi = config.phase_at(omega);
    let g = config.g();
    let sum: f64 = (1..m)
        .map(|l| {
            let lf = l as f64;
            2.0 * (m - l) as f64 * lf * lf * (lf * phi).cos()
        })
        .sum();
    let s = config.d() / config.v();
    -2.0 * g * g / config.v() * s * s * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub phi: f64,
    pub rate: f64,
    pub lamb_shift: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTable {
    pub config: EmitterConfig,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub const CSV_HEADER: &'static str = "omega,phi,R,L,dRdOmega";

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                crate::output::num(r.omega),
                crate::output::num(r.phi),
                crate::output::num(r.rate),
                crate::output::num(r.lamb_shift),
                crate::output::num(r.slope)
            )?;
        }
        Ok(())
    }
}

/// Samples `n_points` frequencies evenly over `[lo, hi]` (inclusive).
pub fn sweep(config: &EmitterConfig, (lo, hi): (f64, f64), n_points: usize) -> Result<SpectrumTable> {
    if n_points < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::EmptyRange(format!("[{lo}, {hi}] with {n_points} points")));
    }
    if lo <= 0.0 {
        return Err(Error::InvalidConfig(format!("sweep frequencies must be positive, got lower bound {lo}")));
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    let rows = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let omega = if i + 1 == n_points { hi } else { lo + i as f64 * step };
            SpectrumRow {
                omega,
                phi: config.phase_at(omega),
                rate: decay_rate(config, omega),
                lamb_shift: lamb_shift(config, omega),
                slope: decay_slope(config, omega),
            }
        })
        .collect();
    Ok(SpectrumTable { config: *config, rows })
}

/// Sweep expressed as a phase interval, e.g. the principal window `(pi, 3 pi)`.
pub fn sweep_phase(config: &EmitterConfig, (phi_lo, phi_hi): (f64, f64), n_points: usize) -> Result<SpectrumTable> {
    sweep(config, (config.omega_at_phase(phi_lo), config.omega_at_phase(phi_hi)), n_points)
}

pub const PRINCIPAL_WINDOW: (f64, f64) = (PI, 3.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Left,
    Right,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Left => "left",
            Branch::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPoint {
    pub omega_opt: f64,
    pub phi_opt: f64,
    pub slope_max: f64,
    pub rate: f64,
    pub branch: Branch,
}

/// Working point on the right flank of the central window.
pub fn find_optimal(config: &EmitterConfig) -> Result<OptimalPoint> {
    find_optimal_branch(config, Branch::Right)
}

/// Maximizer of `|dR/dOmega|` on one flank of the window around `phi = 2 pi`:
/// `(2 pi, 2 pi + 2 pi / M)` on the right, its mirror on the left.
pub fn find_optimal_branch(config: &EmitterConfig, branch: Branch) -> Result<OptimalPoint> {
    let m = config.m();
    if m < 2 {
        return Err(Error::DegenerateSpectrum);
    }
    let width = 2.0 * PI / m as f64;
    let (a, b) = match branch {
        Branch::Right => (2.0 * PI, 2.0 * PI + width),
        Branch::Left => (2.0 * PI - width, 2.0 * PI),
    };
    let abs_slope = |phi: f64| decay_slope(config, config.omega_at_phase(phi)).abs();
    let (lo, hi) = grid_bracket_max(abs_slope, a, b, SCAN_POINTS);
    let (phi, slope_max) = golden_section_max(abs_slope, lo, hi, PHASE_TOL);
    let omega = config.omega_at_phase(phi);
    Ok(OptimalPoint { omega_opt: omega, phi_opt: phi, slope_max, rate: decay_rate(config, omega), branch })
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub correlation: f64,
    pub residuals: Vec<f64>,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let distinct = count_distinct(x);
    if distinct < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: distinct });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (slope * a + intercept)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(LinearFit { slope, intercept, r_squared: 1.0 - ss_res / syy, correlation: sxy / (sxx * syy).sqrt(), residuals })
}

fn count_distinct(x: &[f64]) -> usize {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    /// `c` in `phi_opt / pi = 2 + c / M`.
    pub c: f64,
    /// `phi_opt / pi - (2 + c / M)` per input point.
    pub c_residuals: Vec<f64>,
    pub c_rms: f64,
    /// `slope_max` against `M`.
    pub slope_fit: LinearFit,
    pub points: Vec<(usize, OptimalPoint)>,
}

/// Locates the working point for every `M` (geometry and total coupling from
/// `base`) and fits `phi_opt / pi = 2 + c / M` and `slope_max = a M + b`.
pub fn fit_optimal_scaling(base: &EmitterConfig, m_list: &[usize]) -> Result<ScalingFit> {
    let mf: Vec<f64> = m_list.iter().map(|&m| m as f64).collect();
    let distinct = count_distinct(&mf);
    if distinct < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: distinct });
    }
    let points = m_list.par_iter().map(|&m| Ok((m, find_optimal(&base.with_m(m)?)?))).collect::<Result<Vec<_>>>()?;

    let y: Vec<f64> = points.iter().map(|(_, p)| p.phi_opt / PI - 2.0).collect();
    let inv: Vec<f64> = mf.iter().map(|m| 1.0 / m).collect();
    let c = y.iter().zip(&inv).map(|(y, u)| y * u).sum::<f64>() / inv.iter().map(|u| u * u).sum::<f64>();
    let c_residuals: Vec<f64> = y.iter().zip(&inv).map(|(y, u)| y - c * u).collect();
    let c_rms = (c_residuals.iter().map(|r| r * r).sum::<f64>() / c_residuals.len() as f64).sqrt();

    let slopes: Vec<f64> = points.iter().map(|(_, p)| p.slope_max).collect();
    let slope_fit = linear_fit(&mf, &slopes)?;
    Ok(ScalingFit { c, c_residuals, c_rms, slope_fit, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(m: usize, phi: f64) -> EmitterConfig {
        EmitterConfig::dimensionless(m, 0.1, phi).unwrap()
    }

    fn double_sum_cos(m: usize, phi: f64) -> f64 {
        let mut s = 0.0;
        for n in 0..m {
            for l in 0..m {
                s += ((n as f64 - l as f64).abs() * phi).cos();
            }
        }
        s
    }

    #[test]
    fn rate_examples() {
        let c = cfg(1, 3.7);
        assert!((decay_rate(&c, 3.7) - 2.0 * 0.01).abs() < 1e-17);
        let c = cfg(2, PI);
        assert!(decay_rate(&c, PI).abs() < 1e-17);
        let c = cfg(3, 2.0 * PI);
        let g2 = c.g() * c.g();
        assert!((decay_rate(&c, 2.0 * PI) - 18.0 * g2).abs() < 1e-15);
    }

    #[test]
    fn lamb_shift_examples() {
        assert_eq!(lamb_shift(&cfg(1, 2.0), 2.0), 0.0);
        let c = cfg(2, PI / 2.0);
        let g2 = c.g() * c.g();
        assert!((lamb_shift(&c, PI / 2.0) - 2.0 * g2).abs() < 1e-15);
    }

    #[test]
    fn slope_vanishes_at_centre_and_for_single_leg() {
        for m in 1..40 {
            let c = cfg(m, 2.0 * PI);
            assert!(decay_slope(&c, 2.0 * PI).abs() < 1e-14);
        }
        let c = cfg(1, 5.0);
        for k in 0..50 {
            assert_eq!(decay_slope(&c, 4.0 + 0.1 * k as f64), 0.0);
        }
    }

    #[test]
    fn analytic_slope_matches_central_difference() {
        let h = 1e-6;
        for m in 2..=60 {
            let c = cfg(m, 2.0 * PI);
            let w = 2.0 * PI / m as f64;
            for frac in [0.1, 0.25, 0.4, 0.6, 0.85] {
                let omega = 2.0 * PI + frac * w;
                let fd = (decay_rate(&c, omega + h) - decay_rate(&c, omega - h)) / (2.0 * h);
                let an = decay_slope(&c, omega);
                assert!((fd - an).abs() < 1e-6 * an.abs(), "M={m} frac={frac}: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn sweep_window_shape() {
        for m in [2usize, 6, 10] {
            let c = cfg(m, 2.0 * PI);
            let t = sweep_phase(&c, PRINCIPAL_WINDOW, 2001).unwrap();
            assert!(t.rows.windows(2).all(|w| w[1].omega > w[0].omega));
            let peak = t.rows.iter().map(|r| r.rate).fold(0.0, f64::max);
            assert!((peak - 2.0 * 0.01).abs() < 1e-15);
            let w = 2.0 * PI / m as f64;
            assert!(decay_rate(&c, 2.0 * PI + w).abs() < 1e-15);
            assert!(decay_rate(&c, 2.0 * PI - w).abs() < 1e-15);
        }
        let c = cfg(10, 2.0 * PI);
        assert!(matches!(sweep(&c, (3.0, 3.0), 10), Err(Error::EmptyRange(_))));
        assert!(matches!(sweep(&c, (3.0, 4.0), 1), Err(Error::EmptyRange(_))));
    }

    #[test]
    fn optimum_for_two_legs_is_quarter_period() {
        // R = 4 g^2 (1 + cos phi): |dR/dphi| peaks at phi = 5 pi / 2.
        let p = find_optimal(&cfg(2, 7.0)).unwrap();
        assert!((p.phi_opt - 2.5 * PI).abs() < 1e-7);
        assert!((p.slope_max - 0.01).abs() < 1e-15);
        let l = find_optimal_branch(&cfg(2, 7.0), Branch::Left).unwrap();
        assert!((l.phi_opt - 1.5 * PI).abs() < 1e-7);
        assert!(matches!(find_optimal(&cfg(1, 7.0)), Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn optimum_is_a_true_interior_maximum() {
        for m in [2usize, 3, 5, 8, 13, 30, 64, 100] {
            let c = cfg(m, 7.0);
            let p = find_optimal(&c).unwrap();
            assert!(p.phi_opt > 2.0 * PI && p.phi_opt < 2.0 * PI + 2.0 * PI / m as f64);
            // at a maximum of |R'| the curvature vanishes
            let scale = p.slope_max * m as f64;
            assert!(decay_curvature(&c, p.omega_opt).abs() < 1e-6 * scale, "M={m}");
            let h = 1e-3 / m as f64;
            let s = |x: f64| decay_slope(&c, x).abs();
            assert!(s(p.omega_opt + h) + s(p.omega_opt - h) - 2.0 * s(p.omega_opt) < 0.0);
            assert!(p.slope_max > s(2.0 * PI) && p.slope_max > s(2.0 * PI + 2.0 * PI / m as f64));
        }
    }

    #[test]
    fn slope_halves_when_legs_halve() {
        let base = cfg(2, 7.0);
        for m in [40usize, 50] {
            let a = find_optimal(&base.with_m(m).unwrap()).unwrap().slope_max;
            let b = find_optimal(&base.with_m(2 * m).unwrap()).unwrap().slope_max;
            assert!((a / b - 0.5).abs() < 0.02, "M={m}: {}", a / b);
        }
    }

    #[test]
    fn scaling_fit_rejects_degenerate_lists() {
        let base = cfg(2, 7.0);
        assert!(matches!(fit_optimal_scaling(&base, &[5, 5, 5, 5]), Err(Error::InsufficientPoints { .. })));
        assert!(matches!(fit_optimal_scaling(&base, &[2, 3]), Err(Error::InsufficientPoints { .. })));
        assert!(matches!(fit_optimal_scaling(&base, &[1, 2, 3]), Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn csv_header() {
        let t = sweep_phase(&cfg(3, 7.0), PRINCIPAL_WINDOW, 3).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("omega,phi,R,L,dRdOmega\n"));
        assert_eq!(s.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn rate_nonnegative(m in 1usize..=64, phi in 0.0f64..40.0) {
            prop_assert!(interference_kernel(m, phi) >= 0.0);
        }

        #[test]
        fn periodic(m in 1usize..=64, phi in 0.1f64..20.0) {
            let c = cfg(m, 1.0);
            let (r0, r1) = (decay_rate(&c, phi), decay_rate(&c, phi + 2.0 * PI));
            let (l0, l1) = (lamb_shift(&c, phi), lamb_shift(&c, phi + 2.0 * PI));
            let scale = 2.0 * c.g_total() * c.g_total();
            prop_assert!((r0 - r1).abs() < 1e-12 * scale);
            prop_assert!((l0 - l1).abs() < 1e-12 * scale);
        }

        #[test]
        fn mirror_about_window_centre(m in 1usize..=64, x in 0.0f64..PI) {
            let c = cfg(m, 1.0);
            let scale = 2.0 * c.g_total() * c.g_total();
            prop_assert!((decay_rate(&c, 2.0 * PI + x) - decay_rate(&c, 2.0 * PI - x)).abs() < 1e-12 * scale);
            prop_assert!((lamb_shift(&c, 2.0 * PI + x) + lamb_shift(&c, 2.0 * PI - x)).abs() < 1e-12 * scale);
        }

        #[test]
        fn closed_form_matches_plain_double_sum(m in 1usize..=64, phi in PI..3.0 * PI) {
            // plain f64 summation of M^2 unit terms is only good to ~M^2 eps absolute
            let a = interference_kernel(m, phi);
            let b = double_sum_cos(m, phi);
            prop_assert!((a - b).abs() < 1e-13 * (m * m) as f64);
        }

        #[test]
        fn slope_matches_difference_quotient(m in 2usize..=60, frac in 0.02f64..0.98) {
            let c = cfg(m, 1.0);
            let omega = 2.0 * PI + frac * 2.0 * PI / m as f64;
            let h = 1e-6;
            let fd = (decay_rate(&c, omega + h) - decay_rate(&c, omega - h)) / (2.0 * h);
            let an = decay_slope(&c, omega);
            let floor = 1e-3 * find_optimal(&c).unwrap().slope_max;
            prop_assert!((fd - an).abs() < 1e-6 * an.abs().max(floor));
        }
    }
}
