//! Run configuration file (TOML) with `WQED_<SECTION>_<KEY>` environment
//! overrides.
//!
//! ```toml
//! [emitter]
//! M = 10          # coupling points
//! G = 0.1         # total coupling, units of v/d
//! d = 1.0
//! v = 1.0
//! # omega = 6.5   # omitted: the right-branch working point
//!
//! [grid]
//! n_modes = 600   # both branches together
//! k_lo = 4.18879  # |k| d window
//! k_hi = 8.37758
//!
//! [time]
//! rt_max = 3.0    # window length in units of 1/R
//! samples = 500
//! # t_max = 250.0 # fixed window instead (optional dt)
//!
//! [scale]
//! omega_ref = 7e9     # rad/s per unit v/d
//! gamma = 1.75e11     # rad/s per tesla
//!
//! [metrology]
//! delta = 1e-4
//! richardson_tol = 0.01
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{EmitterConfig, GridSpec, PhysicalScale, TimeGrid, TimePlan, DEFAULT_GAMMA, DEFAULT_OMEGA_REF};
use crate::error::{Error, Result};
use crate::metrology::{FiniteDifference, Study};

pub const ENV_PREFIX: &str = "WQED_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitterSection {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "G")]
    pub g_total: f64,
    pub d: f64,
    pub v: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl Default for EmitterSection {
    fn default() -> Self {
        Self { m: 10, g_total: 0.1, d: 1.0, v: 1.0, omega: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub rt_max: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { rt_max: 3.0, samples: 500, t_max: None, dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSection {
    pub omega_ref: f64,
    pub gamma: f64,
}

impl Default for ScaleSection {
    fn default() -> Self {
        Self { omega_ref: DEFAULT_OMEGA_REF, gamma: DEFAULT_GAMMA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub emitter: EmitterSection,
    pub grid: GridSpec,
    pub time: TimeSection,
    pub scale: ScaleSection,
    pub metrology: FiniteDifference,
}

const KEYS: &[(&str, &[&str])] = &[
    ("emitter", &["M", "G", "d", "v", "omega"]),
    ("grid", &["n_modes", "k_lo", "k_hi"]),
    ("time", &["rt_max", "samples", "t_max", "dt"]),
    ("scale", &["omega_ref", "gamma"]),
    ("metrology", &["delta", "richardson_tol"]),
];
const INTEGER_KEYS: &[&str] = &["M", "n_modes", "samples"];

impl RunConfig {
    /// Reads `path` (if any), then applies `WQED_*` overrides from `env`.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::ConfigFile(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(&text, env)
    }

    pub fn parse<I>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigFile(e.to_string()))?;
        for (name, value) in env {
            if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
                apply_override(&mut table, rest, &value)?;
            }
        }
        let cfg: RunConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::ConfigFile(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section without running any dynamics.
    pub fn validate(&self) -> Result<()> {
        let c = self.base_config()?;
        self.study()?;
        if self.emitter.omega.is_some() {
            self.grid.build(&c)?;
        }
        Ok(())
    }

    /// Emitter with the configured frequency, or the window centre `2 pi v/d`
    /// when none is given.
    pub fn base_config(&self) -> Result<EmitterConfig> {
        let e = &self.emitter;
        let omega = e.omega.unwrap_or(2.0 * PI * e.v / e.d);
        EmitterConfig::new(e.m, e.g_total, e.d, e.v, omega)
    }

    /// Emitter at the configured frequency, else at its working point.
    pub fn resolved_config(&self) -> Result<EmitterConfig> {
        let c = self.base_config()?;
        match self.emitter.omega {
            Some(_) => Ok(c),
            None if c.m() >= 2 => c.at_working_point(),
            None => Ok(c),
        }
    }

    pub fn scale(&self) -> Result<PhysicalScale> {
        PhysicalScale::new(self.scale.omega_ref, self.scale.gamma)
    }

    pub fn time_plan(&self) -> Result<TimePlan> {
        let t = &self.time;
        match t.t_max {
            Some(t_max) => {
                let grid = match t.dt {
                    Some(dt) => TimeGrid::new(t_max, dt)?,
                    None => TimeGrid::with_samples(t_max, t.samples)?,
                };
                Ok(TimePlan::Fixed(grid))
            }
            None => {
                if t.samples < 2 || !(t.rt_max > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "time window needs rt_max > 0 and samples >= 2, got {} and {}",
                        t.rt_max, t.samples
                    )));
                }
                Ok(TimePlan::MarkovWindow { rt_max: t.rt_max, samples: t.samples })
            }
        }
    }

    pub fn study(&self) -> Result<Study> {
        if !(self.metrology.delta > 0.0 && self.metrology.richardson_tol > 0.0) {
            return Err(Error::InvalidConfig("metrology.delta and richardson_tol must be positive".into()));
        }
        Ok(Study { grid: self.grid, time: self.time_plan()?, scale: self.scale()?, fd: self.metrology })
    }
}

fn apply_override(table: &mut toml::Table, rest: &str, value: &str) -> Result<()> {
    let unknown = || Error::ConfigFile(format!("unknown override {ENV_PREFIX}{rest}"));
    let (section, key) = rest.split_once('_').ok_or_else(unknown)?;
    let section = section.to_ascii_lowercase();
    let (_, keys) = KEYS.iter().find(|(s, _)| *s == section).ok_or_else(unknown)?;
    let key = *keys.iter().find(|k| k.eq_ignore_ascii_case(key)).ok_or_else(unknown)?;
    let bad = |_| Error::ConfigFile(format!("{ENV_PREFIX}{rest}: cannot parse '{value}'"));
    let parsed = if INTEGER_KEYS.contains(&key) {
        toml::Value::Integer(value.trim().parse::<i64>().map_err(|e| bad(e.to_string()))?)
    } else {
        toml::Value::Float(value.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?)
    };
    let entry = table.entry(section).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(key.to_string(), parsed);
            Ok(())
        }
        _ => Err(Error::ConfigFile(format!("[{key}] is not a table"))),
    }
}
