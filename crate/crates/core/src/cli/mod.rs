//! `wqed` batch front-end.
//!
//! Every command computes all of its tables first, then writes them to
//! `--out` together with `<command>.manifest.json`. Times in CSV files are in
//! units of `d/v`; `f_H` and `S_H` use the configured physical scale.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{EmitterConfig, TimeGrid, WaveguideGrid};
use crate::dynamics::{
    dde_evolve, emitter_excited_state, exact_evolve, markov_population, AmplitudeTrajectory, Engine,
};
use crate::ensemble::exact_evolve_small;
use crate::error::{Error, Result};
use crate::metrology::{self, Setup};
use crate::output::{num, RunManifest};
use crate::settings::RunConfig;
use crate::spectral;

mod mlist;
pub use mlist::{MList, MListError};

const DEFAULT_SWEEP: &str = "10..100:10";

#[derive(Debug, Parser)]
#[command(name = "wqed", version, about = "Giant-emitter waveguide-QED magnetometer workbench")]
pub struct Cli {
    /// TOML run configuration; WQED_<SECTION>_<KEY> variables override it
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for independent runs (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Reserved; every computation is deterministic
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Validate configuration and flags without computing
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decay rate, Lamb shift and slope over a phase window, one file per M
    Spectrum(SpectrumArgs),
    /// Excited-state population from one engine, or all three side by side
    Dynamics(DynamicsArgs),
    /// f_H(t) for each M at its working point, plus the ridge max_t f_H
    Cfi(CfiArgs),
    /// Time-optimal sensitivity over M and total coupling G
    Sensitivity(SensitivityArgs),
    /// Giant emitter against the small-emitter array at matched parameters
    CompareSmall(CompareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Dynamics(_) => "dynamics",
            Command::Cfi(_) => "cfi",
            Command::Sensitivity(_) => "sensitivity",
            Command::CompareSmall(_) => "compare-small",
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Leg counts: N, a..b or a..b:step; repeatable (default: config)
    #[arg(long = "M", value_name = "LIST")]
    pub m: Vec<MList>,
    /// Total coupling in units of v/d (default: config)
    #[arg(long = "G")]
    pub g: Option<f64>,
    /// Window start, in units of pi
    #[arg(long, default_value_t = 1.0)]
    pub phi_min: f64,
    /// Window end, in units of pi
    #[arg(long, default_value_t = 3.0)]
    pub phi_max: f64,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Markov,
    Dde,
    Exact,
    Small,
    /// Markov, DDE and exact on a common time grid
    All,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// Leg counts: N, a..b or a..b:step; repeatable (default: config)
    #[arg(long = "M", value_name = "LIST")]
    pub m: Vec<MList>,
    /// Total coupling in units of v/d (default: config)
    #[arg(long = "G")]
    pub g: Option<f64>,
    /// Emitter frequency in units of v/d (default: the working point)
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, value_enum, default_value_t = EngineChoice::Exact)]
    pub engine: EngineChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SetupChoice {
    Giant,
    Small,
}

impl From<SetupChoice> for Setup {
    fn from(s: SetupChoice) -> Self {
        match s {
            SetupChoice::Giant => Setup::Giant,
            SetupChoice::Small => Setup::Small,
        }
    }
}

#[derive(Debug, Args)]
pub struct CfiArgs {
    /// Leg counts: N, a..b or a..b:step; repeatable (default: 10..100:10)
    #[arg(long = "M", value_name = "LIST")]
    pub m: Vec<MList>,
    /// Total coupling in units of v/d (default: config)
    #[arg(long = "G")]
    pub g: Option<f64>,
    #[arg(long, value_enum, default_value_t = SetupChoice::Giant)]
    pub setup: SetupChoice,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Leg counts: N, a..b or a..b:step; repeatable (default: 10..100:10)
    #[arg(long = "M", value_name = "LIST")]
    pub m: Vec<MList>,
    /// Total couplings; repeatable (default: config)
    #[arg(long = "G")]
    pub g: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SetupChoice::Giant)]
    pub setup: SetupChoice,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Leg counts: N, a..b or a..b:step; repeatable (default: 20)
    #[arg(long = "M", value_name = "LIST")]
    pub m: Vec<MList>,
    /// Total coupling in units of v/d (default: config)
    #[arg(long = "G")]
    pub g: Option<f64>,
}

/// Files written by a run, manifest last.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
}

#[derive(Default)]
struct Report {
    files: Vec<(String, Vec<u8>)>,
    summary: BTreeMap<String, Value>,
}

impl Report {
    fn file(&mut self, name: String, write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name, buf));
        Ok(())
    }
}

/// Loads the configuration, applies flag overrides, runs the command and
/// writes its outputs. `argv` is recorded verbatim in the manifest.
pub fn execute<I>(cli: &Cli, argv: Vec<String>, env: I) -> Result<Outcome>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut cfg = RunConfig::load(cli.config.as_deref(), env)?;
    let g_override = match &cli.command {
        Command::Spectrum(a) => a.g,
        Command::Dynamics(a) => a.g,
        Command::Cfi(a) => a.g,
        Command::CompareSmall(a) => a.g,
        Command::Sensitivity(_) => None,
    };
    if let Some(g) = g_override {
        cfg.emitter.g_total = g;
    }
    if let Command::Dynamics(DynamicsArgs { omega: Some(w), .. }) = &cli.command {
        cfg.emitter.omega = Some(*w);
    }
    cfg.validate()?;
    if cli.jobs == Some(0) {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }

    let dry = cli.dry_run;
    let start = Instant::now();
    let run = || match &cli.command {
        Command::Spectrum(a) => spectrum(a, &cfg, dry),
        Command::Dynamics(a) => dynamics(a, &cfg, dry),
        Command::Cfi(a) => cfi(a, &cfg, dry),
        Command::Sensitivity(a) => sensitivity(a, &cfg, dry),
        Command::CompareSmall(a) => compare(a, &cfg, dry),
    };
    let report = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("--jobs: {e}")))?
            .install(run)?,
        None => run()?,
    };
    if dry {
        return Ok(Outcome::default());
    }

    std::fs::create_dir_all(&cli.out)?;
    let mut outcome = Outcome::default();
    let mut manifest = RunManifest::new(argv, serde_json::to_value(&cfg).expect("config serializes"));
    for (name, body) in &report.files {
        let path = cli.out.join(name);
        std::fs::write(&path, body)?;
        manifest.outputs.push(name.clone());
        outcome.outputs.push(path);
    }
    manifest.summary = report.summary;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let path = cli.out.join(format!("{}.manifest.json", cli.command.name()));
    manifest.write(&path)?;
    outcome.manifest = Some(path);
    Ok(outcome)
}

fn m_values(lists: &[MList], fallback: &[usize]) -> Vec<usize> {
    if lists.is_empty() {
        fallback.to_vec()
    } else {
        mlist::flatten(lists)
    }
}

fn default_sweep() -> Vec<usize> {
    DEFAULT_SWEEP.parse::<MList>().expect("default sweep parses").0
}

/// Working points need at least two legs.
fn working_point_configs(base: &EmitterConfig, ms: &[usize], g_list: &[f64]) -> Result<()> {
    for &m in ms {
        if m < 2 {
            return Err(Error::InvalidConfig(format!("--M {m}: a working point needs M >= 2")));
        }
        for &g in g_list {
            base.with_m(m)?.with_g_total(g)?;
        }
    }
    Ok(())
}

fn spectrum(a: &SpectrumArgs, cfg: &RunConfig, dry: bool) -> Result<Report> {
    if !(a.phi_min.is_finite() && a.phi_max.is_finite() && a.phi_min < a.phi_max) {
        return Err(Error::InvalidConfig(format!(
            "--phi-min ({}) must be below --phi-max ({}), both in units of pi",
            a.phi_min, a.phi_max
        )));
    }
    if a.points < 2 {
        return Err(Error::InvalidConfig(format!("--points must be at least 2, got {}", a.points)));
    }
    let base = cfg.base_config()?;
    let configs = m_values(&a.m, &[base.m()]).into_iter().map(|m| base.with_m(m)).collect::<Result<Vec<_>>>()?;
    let mut report = Report::default();
    if dry {
        return Ok(report);
    }
    let window = (a.phi_min * PI, a.phi_max * PI);
    let tables = configs.par_iter().map(|c| spectral::sweep_phase(c, window, a.points)).collect::<Result<Vec<_>>>()?;
    for (c, table) in configs.iter().zip(&tables) {
        report.file(format!("spectrum_M{}.csv", c.m()), |w| table.write_csv(w))?;
        if c.m() >= 2 {
            let opt = spectral::find_optimal(c)?;
            report.summary.insert(
                format!("M{}", c.m()),
                json!({
                    "omega_opt": opt.omega_opt,
                    "phi_opt_over_pi": opt.phi_opt / PI,
                    "slope_max": opt.slope_max,
                    "rate_at_opt": opt.rate,
                }),
            );
        }
    }
    Ok(report)
}

struct DynamicsRun {
    config: EmitterConfig,
    time: TimeGrid,
    grid: Option<WaveguideGrid>,
}

fn engines_for(choice: EngineChoice) -> Vec<Engine> {
    match choice {
        EngineChoice::Markov => vec![Engine::Markov],
        EngineChoice::Dde => vec![Engine::Dde],
        EngineChoice::Exact => vec![Engine::Exact],
        EngineChoice::Small => vec![Engine::Small],
        EngineChoice::All => vec![Engine::Markov, Engine::Dde, Engine::Exact],
    }
}

fn run_engine(run: &DynamicsRun, engine: Engine) -> Result<AmplitudeTrajectory> {
    let c = &run.config;
    let grid = || run.grid.as_ref().expect("grid built for unitary engines");
    match engine {
        Engine::Markov => Ok(markov_population(c, &run.time)),
        Engine::Dde => dde_evolve(c, &run.time),
        Engine::Exact => exact_evolve(c, grid(), &run.time, &emitter_excited_state(grid())),
        Engine::Small => exact_evolve_small(c, grid(), &run.time),
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dynamics(a: &DynamicsArgs, cfg: &RunConfig, dry: bool) -> Result<Report> {
    let study = cfg.study()?;
    let engines = engines_for(a.engine);
    let unitary = engines.iter().any(|e| matches!(e, Engine::Exact | Engine::Small));
    let mut runs = Vec::new();
    for m in m_values(&a.m, &[cfg.emitter.m]) {
        let mut local = cfg.clone();
        local.emitter.m = m;
        let config = local.resolved_config()?;
        // one delay-aligned grid shared by every engine
        let (time, _) = study.time.resolve(&config)?.aligned_to_delay(config.tau())?;
        let grid = if unitary { Some(study.grid.covering(&config, time.t_max()).build(&config)?) } else { None };
        runs.push(DynamicsRun { config, time, grid });
    }
    let mut report = Report::default();
    if dry {
        return Ok(report);
    }
    let results = runs
        .par_iter()
        .map(|run| engines.par_iter().map(|&e| run_engine(run, e)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    for (run, trajs) in runs.iter().zip(&results) {
        let m = run.config.m();
        let mut info = json!({ "omega": run.config.omega(), "t_max": run.time.t_max(), "samples": run.time.samples() });
        if let Some(grid) = &run.grid {
            info["n_modes"] = json!(grid.len());
        }
        for t in trajs {
            if let Some(drift) = t.norm_drift() {
                info[format!("norm_drift_{}", t.engine)] = json!(drift);
            }
        }
        if a.engine == EngineChoice::All {
            let (mk, dde, ex) = (&trajs[0], &trajs[1], &trajs[2]);
            info["max_gap_markov_exact"] = json!(max_gap(&mk.population, &ex.population));
            info["max_gap_dde_exact"] = json!(max_gap(&dde.population, &ex.population));
            report.file(format!("dynamics_M{m}.csv"), |w| {
                use io::Write;
                writeln!(w, "t,Pe_markov,Pe_dde,Pe_exact")?;
                for i in 0..ex.len() {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        num(ex.times[i]),
                        num(mk.population[i]),
                        num(dde.population[i]),
                        num(ex.population[i])
                    )?;
                }
                Ok(())
            })?;
        } else {
            let t = &trajs[0];
            report.file(format!("dynamics_M{m}_{}.csv", t.engine), |w| t.write_csv(w))?;
        }
        report.summary.insert(format!("M{m}"), info);
    }
    Ok(report)
}

fn ridge_summary(ridge: &[metrology::RidgePoint]) -> Value {
    let increasing = ridge.windows(2).all(|w| w[1].f_h_max > w[0].f_h_max);
    json!({
        "ridge_increasing_in_M": increasing,
        "all_maxima_interior": ridge.iter().all(|r| r.interior),
    })
}

fn cfi(a: &CfiArgs, cfg: &RunConfig, dry: bool) -> Result<Report> {
    let base = cfg.base_config()?;
    let study = cfg.study()?;
    let ms = m_values(&a.m, &default_sweep());
    working_point_configs(&base, &ms, &[base.g_total()])?;
    let mut report = Report::default();
    if dry {
        return Ok(report);
    }
    let map = metrology::cfi_map(&base, &ms, a.setup.into(), &study)?;
    report.file("cfi_map.csv".into(), |w| map.write_csv(w))?;
    report.file("cfi_ridge.csv".into(), |w| map.write_ridge_csv(w))?;
    report.summary.insert("setup".into(), json!(map.setup.name()));
    report.summary.insert("ridge".into(), ridge_summary(&map.ridge));
    Ok(report)
}

fn sensitivity(a: &SensitivityArgs, cfg: &RunConfig, dry: bool) -> Result<Report> {
    let base = cfg.base_config()?;
    let study = cfg.study()?;
    let ms = m_values(&a.m, &default_sweep());
    let gs = if a.g.is_empty() { vec![base.g_total()] } else { a.g.clone() };
    working_point_configs(&base, &ms, &gs)?;
    let mut report = Report::default();
    if dry {
        return Ok(report);
    }
    let rows = metrology::sensitivity_vs_m(&base, &ms, &gs, a.setup.into(), &study)?;
    report.file("sensitivity.csv".into(), |w| metrology::write_sensitivity_csv(&rows, w))?;
    for &g in &gs {
        let curve: Vec<_> = rows.iter().filter(|r| r.g_total == g).copied().collect();
        let decreasing = curve.windows(2).all(|w| w[1].s_h < w[0].s_h);
        report.summary.insert(format!("G{}", num(g)), json!({ "SH_decreasing_in_M": decreasing }));
    }
    Ok(report)
}

fn compare(a: &CompareArgs, cfg: &RunConfig, dry: bool) -> Result<Report> {
    let base = cfg.base_config()?;
    let study = cfg.study()?;
    let ms = m_values(&a.m, &[20]);
    working_point_configs(&base, &ms, &[base.g_total()])?;
    let mut report = Report::default();
    if dry {
        return Ok(report);
    }
    let pairs = ms.iter().map(|&m| metrology::compare_small(&base, m, &study)).collect::<Result<Vec<_>>>()?;
    report.file("compare_small.csv".into(), |w| {
        for (i, p) in pairs.iter().enumerate() {
            let mut buf = Vec::new();
            p.write_csv(&mut buf)?;
            // one header for the whole table
            let skip = if i == 0 { 0 } else { buf.iter().position(|&b| b == b'\n').map_or(0, |n| n + 1) };
            w.extend_from_slice(&buf[skip..]);
        }
        Ok(())
    })?;
    for p in &pairs {
        report.summary.insert(
            format!("M{}", p.giant.m),
            json!({ "ratio_giant_over_small": p.ratio, "SH_giant": p.giant.s_h, "SH_small": p.small.s_h }),
        );
    }
    Ok(report)
}
