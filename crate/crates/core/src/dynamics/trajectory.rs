use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::num;

/// Populations at or below this are treated as lost to underflow.
pub const POPULATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Markov,
    Dde,
    Exact,
    Small,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Markov => "markov",
            Engine::Dde => "dde",
            Engine::Exact => "exact",
            Engine::Small => "small",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markov" => Ok(Engine::Markov),
            "dde" => Ok(Engine::Dde),
            "exact" => Ok(Engine::Exact),
            "small" => Ok(Engine::Small),
            other => Err(Error::InvalidConfig(format!("unknown engine '{other}'"))),
        }
    }
}

/// Sampled emitter dynamics.
///
/// For the giant emitter `population[i] == |alpha[i]|^2`. For the small-emitter
/// array `population` is the total excited population and `alpha` the
/// amplitude of the symmetric (Dicke) emitter state.
#[derive(Debug, Clone)]
pub struct AmplitudeTrajectory {
    pub engine: Engine,
    pub times: Vec<f64>,
    pub alpha: Vec<Complex64>,
    pub population: Vec<f64>,
    /// Total single-excitation norm, recorded by the unitary engines.
    pub norm: Option<Vec<f64>>,
    /// Mode amplitudes per sample, when requested.
    pub modes: Option<Vec<Vec<Complex64>>>,
}

impl AmplitudeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest deviation of the norm from one, if tracked.
    pub fn norm_drift(&self) -> Option<f64> {
        self.norm.as_ref().map(|n| n.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max))
    }

    pub fn csv_header(&self) -> &'static str {
        if self.norm.is_some() {
            "t,Pe,Re_alpha,Im_alpha,norm"
        } else {
            "t,Pe,Re_alpha,Im_alpha"
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        for i in 0..self.len() {
            write!(
                out,
                "{},{},{},{}",
                num(self.times[i]),
                num(self.population[i]),
                num(self.alpha[i].re),
                num(self.alpha[i].im)
            )?;
            if let Some(norm) = &self.norm {
                write!(out, ",{}", num(norm[i]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Time-dependent decay rate `R_eff(t) = -ln(P_e(t)) / t`.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveDecay {
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
}

/// Extracts `R_eff` at every sample with `t > 0`, stopping at the first
/// population at or below [`POPULATION_FLOOR`]. Fails only when no sample
/// is usable.
pub fn effective_decay(traj: &AmplitudeTrajectory) -> Result<EffectiveDecay> {
    let mut times = Vec::with_capacity(traj.len());
    let mut rate = Vec::with_capacity(traj.len());
    for (&t, &p) in traj.times.iter().zip(&traj.population) {
        if t <= 0.0 {
            continue;
        }
        if !(p > POPULATION_FLOOR) {
            if times.is_empty() {
                return Err(Error::PopulationUnderflow { t });
            }
            break;
        }
        times.push(t);
        rate.push(-p.ln() / t);
    }
    if times.is_empty() {
        return Err(Error::PopulationUnderflow { t: traj.times.last().copied().unwrap_or(0.0) });
    }
    Ok(EffectiveDecay { times, rate })
}
