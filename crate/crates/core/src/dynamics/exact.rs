//! Single-excitation Schrodinger evolution with a discretized waveguide.
//!
//! Basis: `{|e, vac>, |g, 1_{k_1}>, ..., |g, 1_{k_N}>}`. The Hamiltonian is
//! diagonalized once; any sample time is then reconstructed exactly.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{AmplitudeTrajectory, Engine};
use crate::config::{EmitterConfig, TimeGrid, WaveguideGrid};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-9;
const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 0; // unlimited
const GAUGE_TOL: f64 = 1e-15;

/// Dense Hermitian matrix in a single-excitation basis.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: DMatrix<Complex64>,
}

impl Hamiltonian {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        assert!(matrix.is_square());
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `U` with `U^dagger H U` real, built from the phases of row 0, if such a
    /// diagonal gauge exists (it does for the single giant emitter).
    fn real_gauge(&self) -> Option<(DMatrix<f64>, Vec<Complex64>)> {
        let n = self.dim();
        let u: Vec<Complex64> = (0..n)
            .map(|j| {
                let c = self.matrix[(0, j)];
                if j == 0 || c.norm() == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    c.conj() / c.norm()
                }
            })
            .collect();
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut real = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                if z == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let w = u[i].conj() * z * u[j];
                if w.im.abs() > GAUGE_TOL * scale {
                    return None;
                }
                real[(i, j)] = w.re;
            }
        }
        Some((real, u))
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Giant emitter coupled through all legs to each grid mode.
pub fn build_hamiltonian(config: &EmitterConfig, grid: &WaveguideGrid) -> Result<Hamiltonian> {
    grid.check_compatible(config)?;
    let n = grid.len();
    let mut h = DMatrix::<Complex64>::zeros(n + 1, n + 1);
    h[(0, 0)] = Complex64::new(config.omega(), 0.0);
    for (j, &w) in grid.frequencies().iter().enumerate() {
        let c = grid.total_weight(j);
        h[(0, j + 1)] = c;
        h[(j + 1, 0)] = c.conj();
        h[(j + 1, j + 1)] = Complex64::new(w, 0.0);
    }
    Ok(Hamiltonian { matrix: h })
}

/// `sigma_+ |g, vac>` in the giant-emitter basis.
pub fn emitter_excited_state(grid: &WaveguideGrid) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(0.0, 0.0); grid.len() + 1];
    psi[0] = Complex64::new(1.0, 0.0);
    psi
}

/// Spectral representation of `exp(-i H t) |psi_0>`.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: Vec<f64>,
    vectors: DMatrix<Complex64>,
    coeffs: Vec<Complex64>,
}

impl Propagator {
    pub fn new(h: &Hamiltonian, initial: &[Complex64]) -> Result<Self> {
        let n = h.dim();
        if initial.len() != n {
            return Err(Error::InvalidConfig(format!(
                "initial state has {} components, Hamiltonian dimension is {n}",
                initial.len()
            )));
        }
        let norm: f64 = initial.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NonNormalizedInitialState { norm });
        }
        // the real solver is several times faster; results are identical up
        // to eigenvector phases
        let (energies, vectors) = match h.real_gauge() {
            Some((real, u)) => {
                let eig = SymmetricEigen::try_new(real, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::EigenFailure(n))?;
                let vectors = DMatrix::from_fn(n, n, |r, m| u[r] * eig.eigenvectors[(r, m)]);
                (eig.eigenvalues, vectors)
            }
            None => {
                let eig = SymmetricEigen::try_new(h.matrix.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
                    .ok_or(Error::EigenFailure(n))?;
                (eig.eigenvalues, eig.eigenvectors)
            }
        };
        let coeffs = (0..n).map(|m| vectors.column(m).iter().zip(initial).map(|(v, p)| v.conj() * p).sum()).collect();
        Ok(Self { energies: energies.iter().copied().collect(), vectors, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn phased(&self, t: f64) -> Vec<Complex64> {
        self.energies.iter().zip(&self.coeffs).map(|(e, c)| Complex64::from_polar(1.0, -e * t) * c).collect()
    }

    /// Full state vector at time `t`.
    pub fn state_at(&self, t: f64) -> Vec<Complex64> {
        self.components_at(t, 0..self.dim())
    }

    /// Selected basis components at time `t`.
    pub fn components_at(&self, t: f64, rows: Range<usize>) -> Vec<Complex64> {
        let phased = self.phased(t);
        let mut out = vec![Complex64::new(0.0, 0.0); rows.len()];
        for (m, p) in phased.iter().enumerate() {
            let col = self.vectors.column(m);
            for (o, r) in out.iter_mut().zip(rows.clone()) {
                *o += col[r] * p;
            }
        }
        out
    }

    /// `sum_{r in rows} |psi_r(t)|^2` at every time.
    pub fn populations(&self, times: &[f64], rows: Range<usize>) -> Vec<f64> {
        times.iter().map(|&t| self.components_at(t, rows.clone()).iter().map(|z| z.norm_sqr()).sum()).collect()
    }
}

/// Evolves `initial` (giant-emitter basis) and records the emitter amplitude,
/// its population and the total norm at every sample.
pub fn exact_evolve(
    config: &EmitterConfig,
    grid: &WaveguideGrid,
    time_grid: &TimeGrid,
    initial: &[Complex64],
) -> Result<AmplitudeTrajectory> {
    let h = build_hamiltonian(config, grid)?;
    let prop = Propagator::new(&h, initial)?;
    let times = time_grid.times();
    let mut alpha = Vec::with_capacity(times.len());
    let mut norm = Vec::with_capacity(times.len());
    for &t in &times {
        let psi = prop.state_at(t);
        alpha.push(psi[0] * Complex64::from_polar(1.0, config.omega() * t));
        norm.push(psi.iter().map(|z| z.norm_sqr()).sum());
    }
    let population = alpha.iter().map(|z| z.norm_sqr()).collect();
    Ok(AmplitudeTrajectory { engine: Engine::Exact, times, alpha, population, norm: Some(norm), modes: None })
}
