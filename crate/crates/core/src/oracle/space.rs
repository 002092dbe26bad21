use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::kernels;
use crate::observables::poisson_tail;
use crate::params::Model;

/// Largest composite dimension accepted.
pub const MAX_DIM: usize = 4096;

/// Photon ⊗ oscillator Fock space truncated at `photon_cut` and `osc_cut`
/// (inclusive). Composite index `n * (osc_cut + 1) + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncatedSpace {
    pub photon_cut: usize,
    pub osc_cut: usize,
}

impl TruncatedSpace {
    pub fn new(photon_cut: usize, osc_cut: usize) -> Result<Self> {
        if photon_cut < 1 || osc_cut < 1 {
            return Err(Error::InvalidInput("both truncation indices must be at least 1".into()));
        }
        let dim = (photon_cut + 1) * (osc_cut + 1);
        if dim > MAX_DIM {
            return Err(Error::SpaceTooLarge { dim, cap: MAX_DIM });
        }
        Ok(Self { photon_cut, osc_cut })
    }

    pub fn dim(&self) -> usize {
        self.photon_levels() * self.osc_levels()
    }

    pub fn photon_levels(&self) -> usize {
        self.photon_cut + 1
    }

    pub fn osc_levels(&self) -> usize {
        self.osc_cut + 1
    }

    #[inline]
    pub fn index(&self, n: usize, j: usize) -> usize {
        n * self.osc_levels() + j
    }

    /// Smallest space whose top-two-level populations stay below
    /// `leakage_tol / 10` up to `t_final` for a coherent photon input of mean
    /// `photons` and an oscillator starting in its ground state.
    ///
    /// For fixed photon number the oscillator stays coherent, with amplitude
    /// `g n A(t) + B(t)`, so both tails are exact Poisson tails.
    pub fn suggest(model: &Model, photons: f64, t_final: f64, leakage_tol: f64) -> Result<Self> {
        let target = 0.1 * leakage_tol;
        let mut photon_cut = (4.0 * photons).max(photons + 10.0).ceil() as usize;
        while poisson_tail(photons, photon_cut - 2) > target {
            photon_cut += 1;
        }
        let weights: Vec<f64> = (0..=photon_cut)
            .map(|n| poisson_pmf(photons, n as u64))
            .collect();
        let samples = 200;
        let displacements: Vec<Vec<f64>> = (0..=samples)
            .map(|i| {
                let t = t_final * i as f64 / samples as f64;
                let (a, b) = kernels::oscillator_response(t, model);
                (0..=photon_cut)
                    .map(|n| (a * (model.coupling * n as f64) + b).norm_sqr())
                    .collect()
            })
            .collect();
        let leak = |cut: usize| {
            displacements
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&weights)
                        .map(|(&mean, &w)| w * poisson_tail(mean, cut - 2))
                        .sum::<f64>()
                })
                .fold(0.0, f64::max)
        };
        let mut osc_cut = 8;
        while leak(osc_cut) > target {
            osc_cut += 1;
            if (photon_cut + 1) * (osc_cut + 1) > MAX_DIM {
                break;
            }
        }
        Self::new(photon_cut, osc_cut)
    }
}

fn poisson_pmf(mean: f64, n: u64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp()
}

/// Truncated coherent-state amplitudes `e^{-|α|²/2} αⁿ / sqrt(n!)`,
/// `n = 0..=cut`, without renormalisation.
pub fn coherent_amplitudes(alpha: Complex64, cut: usize) -> DVector<Complex64> {
    let norm2 = alpha.norm_sqr();
    DVector::from_fn(cut + 1, |n, _| {
        if norm2 == 0.0 {
            return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
        }
        let log_mag = -0.5 * norm2 + n as f64 * alpha.norm().ln() - 0.5 * ln_factorial(n as u64);
        Complex64::from_polar(log_mag.exp(), n as f64 * alpha.arg())
    })
}

pub fn fock_amplitudes(level: usize, cut: usize) -> DVector<Complex64> {
    DVector::from_fn(cut + 1, |n, _| Complex64::new(if n == level { 1.0 } else { 0.0 }, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub space: TruncatedSpace,
    pub entries: DMatrix<Complex64>,
}

/// Top-two-level populations of each factor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Leakage {
    pub photon: f64,
    pub oscillator: f64,
}

impl Leakage {
    pub fn max(&self) -> f64 {
        self.photon.max(self.oscillator)
    }
}

impl DensityMatrix {
    pub fn from_matrix(space: TruncatedSpace, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != space.dim() || entries.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(Self { space, entries })
    }

    /// `|ψ⟩⟨ψ|` for a composite state vector.
    pub fn pure(space: TruncatedSpace, psi: &DVector<Complex64>) -> Result<Self> {
        Self::from_matrix(space, psi * psi.adjoint())
    }

    /// Product of a photon state and an oscillator state.
    pub fn product(
        space: TruncatedSpace,
        photon: &DVector<Complex64>,
        oscillator: &DVector<Complex64>,
    ) -> Result<Self> {
        if photon.len() != space.photon_levels() {
            return Err(Error::DimensionMismatch {
                expected: space.photon_levels(),
                found: photon.len(),
            });
        }
        if oscillator.len() != space.osc_levels() {
            return Err(Error::DimensionMismatch {
                expected: space.osc_levels(),
                found: oscillator.len(),
            });
        }
        Self::pure(space, &product_vector(photon, oscillator))
    }

    /// Coherent photon state `|α⟩` with the oscillator in its ground state.
    pub fn coherent_ground(space: TruncatedSpace, alpha: Complex64) -> Self {
        let photon = coherent_amplitudes(alpha, space.photon_cut);
        let osc = fock_amplitudes(0, space.osc_cut);
        Self::product(space, &photon, &osc).expect("dimensions follow from the space")
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest entry of `ρ − ρ†`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for c in 0..d {
            for r in 0..c {
                worst = worst.max((self.entries[(r, c)] - self.entries[(c, r)].conj()).norm());
            }
            worst = worst.max(self.entries[(c, c)].im.abs());
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_part(&self.entries)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Reduced state of the radiation mode.
    pub fn reduced_photon(&self) -> DMatrix<Complex64> {
        let (p, o) = (self.space.photon_levels(), self.space.osc_levels());
        DMatrix::from_fn(p, p, |n, m| {
            (0..o)
                .map(|j| self.entries[(self.space.index(n, j), self.space.index(m, j))])
                .sum()
        })
    }

    /// Reduced state of the oscillator.
    pub fn reduced_oscillator(&self) -> DMatrix<Complex64> {
        let (p, o) = (self.space.photon_levels(), self.space.osc_levels());
        DMatrix::from_fn(o, o, |j, k| {
            (0..p)
                .map(|n| self.entries[(self.space.index(n, j), self.space.index(n, k))])
                .sum()
        })
    }

    /// `⟨b†b⟩`.
    pub fn osc_number(&self) -> f64 {
        let o = self.space.osc_levels();
        (0..self.dim())
            .map(|r| (r % o) as f64 * self.entries[(r, r)].re)
            .sum()
    }

    /// `⟨b⟩`.
    pub fn osc_lowering(&self) -> Complex64 {
        let o = self.space.osc_levels();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..self.dim() {
            let j = r % o;
            if j + 1 < o {
                // Tr(bρ) = Σ ⟨j|b|j+1⟩ ρ(j+1, j)
                acc += self.entries[(r + 1, r)] * ((j + 1) as f64).sqrt();
            }
        }
        acc
    }

    /// `⟨a†a⟩`.
    pub fn photon_number(&self) -> f64 {
        let o = self.space.osc_levels();
        (0..self.dim())
            .map(|r| (r / o) as f64 * self.entries[(r, r)].re)
            .sum()
    }

    /// Populations of the top two levels of each factor; the ground level
    /// never counts, so a cut of 1 watches level 1 only.
    pub fn leakage(&self) -> Leakage {
        let (p, o) = (self.space.photon_levels(), self.space.osc_levels());
        let mut out = Leakage::default();
        for r in 0..self.dim() {
            let (n, j) = (r / o, r % o);
            let pop = self.entries[(r, r)].re;
            if n > 0 && n + 2 >= p {
                out.photon += pop;
            }
            if j > 0 && j + 2 >= o {
                out.oscillator += pop;
            }
        }
        out
    }
}

pub(crate) fn product_vector(photon: &DVector<Complex64>, oscillator: &DVector<Complex64>) -> DVector<Complex64> {
    let o = oscillator.len();
    DVector::from_fn(photon.len() * o, |r, _| photon[r / o] * oscillator[r % o])
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `½ ‖A − B‖₁` for Hermitian `A`, `B`.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(0.5
        * hermitian_part(&(a - b))
            .symmetric_eigenvalues()
            .iter()
            .map(|e| e.abs())
            .sum::<f64>())
}
