//! Cross-engine consistency at the working point.

use std::f64::consts::PI;

use wqed::config::{EmitterConfig, GridSpec, TimeGrid, TimePlan};
use wqed::dynamics::{dde_evolve, effective_decay, emitter_excited_state, exact_evolve, markov_population};
use wqed::ensemble::exact_evolve_small;
use wqed::metrology::{working_point, Study};

fn at_optimum(m: usize) -> (EmitterConfig, TimeGrid) {
    let c = EmitterConfig::dimensionless(m, 0.1, 2.0 * PI).unwrap().at_working_point().unwrap();
    let (tg, _) = TimePlan::default().resolve(&c).unwrap().aligned_to_delay(c.tau()).unwrap();
    (c, tg)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn hierarchy_at_weak_coupling() {
    for m in 2..=4 {
        let (c, tg) = at_optimum(m);
        let grid = GridSpec::default().build(&c).unwrap();
        let mk = markov_population(&c, &tg);
        let dde = dde_evolve(&c, &tg).unwrap();
        let ex = exact_evolve(&c, &grid, &tg, &emitter_excited_state(&grid)).unwrap();
        assert_eq!(dde.times, ex.times);
        assert!(max_gap(&mk.population, &dde.population) <= 0.02, "M={m}");
        assert!(max_gap(&dde.population, &ex.population) <= 0.02, "M={m}");
    }
}

#[test]
fn exact_engine_converges_in_mode_count() {
    for m in [2usize, 10] {
        let (c, tg) = at_optimum(m);
        let coarse = GridSpec::default();
        let fine = GridSpec { n_modes: 2 * coarse.n_modes, ..coarse };
        let run = |spec: GridSpec| {
            let g = spec.build(&c).unwrap();
            exact_evolve(&c, &g, &tg, &emitter_excited_state(&g)).unwrap().population
        };
        let gap = max_gap(&run(coarse), &run(fine));
        assert!(gap < 0.01, "M={m}: {gap}");
    }
}

#[test]
fn delay_engine_tracks_exact_at_large_m() {
    let (c, tg) = at_optimum(30);
    let grid = GridSpec::default().build(&c).unwrap();
    let dde = dde_evolve(&c, &tg).unwrap();
    let ex = exact_evolve(&c, &grid, &tg, &emitter_excited_state(&grid)).unwrap();
    assert!(max_gap(&dde.population, &ex.population) <= 0.02);
    // retardation makes the effective rate time dependent
    let r = effective_decay(&ex).unwrap();
    let (lo, hi) = r.rate.iter().skip(r.rate.len() / 10).fold((f64::MAX, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    assert!((hi - lo) / hi > 0.01, "R_eff range {lo}..{hi}");
}

#[test]
fn small_array_is_less_frequency_sensitive() {
    let (c, tg) = at_optimum(20);
    let grid = GridSpec::default().covering(&c, tg.t_max()).build(&c).unwrap();
    let delta = 1e-3;
    let spread = |run: &dyn Fn(&EmitterConfig) -> Vec<f64>| {
        let lo = run(&c.with_omega(c.omega() - delta).unwrap());
        let hi = run(&c.with_omega(c.omega() + delta).unwrap());
        max_gap(&lo, &hi)
    };
    let giant = spread(&|k| exact_evolve(k, &grid, &tg, &emitter_excited_state(&grid)).unwrap().population);
    let small = spread(&|k| exact_evolve_small(k, &grid, &tg).unwrap().population);
    assert!(giant > 2.0 * small, "giant {giant} small {small}");
}

#[test]
fn working_point_grid_outlasts_the_window() {
    let base = EmitterConfig::dimensionless(2, 0.05, 2.0 * PI).unwrap();
    let study = Study::default();
    for m in [10usize, 100] {
        let (c, grid, tg) = working_point(&base, m, 0.05, &study).unwrap();
        assert!(0.9 * grid.recurrence_time() >= tg.t_max() + (m - 1) as f64 * c.tau());
    }
}
