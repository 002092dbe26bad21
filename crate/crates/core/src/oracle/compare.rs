use num_complex::Complex64;
use serde::Serialize;

use super::master::{evolve_master_with, Diagnostics, IntegratorConfig};
use super::space::{trace_distance, DensityMatrix, Leakage, TruncatedSpace};
use super::stochastic::{evolve_stochastic, Estimate, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::observables::{mean_energy, rho1_matrix, InterferometerConfig, Layout};
use crate::params::{Model, ReducedForce};

pub const TRACE_DISTANCE_TOL: f64 = 1e-4;
pub const ENERGY_REL_TOL: f64 = 1e-5;
pub const STOCHASTIC_Z_TOL: f64 = 3.0;

/// Natural-units benchmark: Ω = 1, λ = 0.1, g = 0.2, f_m = 0.1, ω_gr = 3.
pub fn benchmark_model() -> Model {
    Model::reduced(
        1.0,
        0.1,
        0.2,
        ReducedForce::Sinusoid {
            amplitude: 0.1,
            freq: 3.0,
            phase: 0.0,
        },
    )
    .expect("benchmark parameters are valid")
}

/// N = 2 with the whole beam in the cavity arm.
pub fn benchmark_config() -> InterferometerConfig {
    InterferometerConfig::general(2.0, 1.0).expect("benchmark configuration is valid")
}

pub const BENCHMARK_T_FINAL: f64 = 3.0;

/// Coherent amplitude `iσz` entering the cavity.
pub fn cavity_amplitude(cfg: &InterferometerConfig) -> Complex64 {
    cfg.arms()[0].amplitude
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub t: f64,
    pub trace_distance: f64,
    pub energy_oracle: f64,
    pub energy_analytic: f64,
    pub energy_rel_err: f64,
    pub leakage: Leakage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub max_trace_distance: f64,
    pub max_energy_rel_err: f64,
    pub max_leakage: f64,
    pub diagnostics: Diagnostics,
}

/// Integrates the master equation from `|iσz⟩ ⊗ |0⟩` and compares, at every
/// time of `t_grid`, the reduced radiation state with the analytic matrix
/// and `⟨b†b⟩` with the three-summand energy.
pub fn compare_with_analytic(
    t_grid: &[f64],
    model: &Model,
    cfg: &InterferometerConfig,
    space: &TruncatedSpace,
    dt: f64,
    leakage_tol: f64,
) -> Result<ComparisonReport> {
    if cfg.layout != Layout::General {
        return Err(Error::InvalidInput("the oracle models a single cavity arm".into()));
    }
    let t_final = t_grid.iter().copied().fold(f64::NAN, f64::max);
    if t_grid.is_empty() || !t_final.is_finite() {
        return Err(Error::InvalidInput("empty or non-finite time grid".into()));
    }
    let icfg = IntegratorConfig::new(dt, t_final)?
        .with_outputs(t_grid.to_vec())
        .with_leakage_tol(leakage_tol);
    let alpha = cavity_amplitude(cfg);
    let rho0 = DensityMatrix::coherent_ground(*space, alpha);
    let photons = alpha.norm_sqr();
    let mut rows = Vec::new();
    let diagnostics = evolve_master_with(&rho0, &icfg, model, space, |t, rho| {
        let analytic = rho1_matrix(space.photon_cut, t, model, cfg)?;
        let energy_analytic = mean_energy(t, photons, model)?;
        let energy_oracle = rho.osc_number();
        let diff = (energy_oracle - energy_analytic).abs();
        rows.push(ComparisonRow {
            t,
            trace_distance: trace_distance(&rho.reduced_photon(), &analytic)?,
            energy_oracle,
            energy_analytic,
            energy_rel_err: if energy_analytic > 0.0 { diff / energy_analytic } else { diff },
            leakage: rho.leakage(),
        });
        Ok(())
    })?;
    let max = |f: fn(&ComparisonRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(ComparisonReport {
        max_trace_distance: max(|r| r.trace_distance),
        max_energy_rel_err: max(|r| r.energy_rel_err),
        max_leakage: max(|r| r.leakage.max()),
        rows,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub stochastic_dt: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            n_traj: 10_000,
            seed: 0,
            stochastic_dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationParams {
    pub model: Model,
    pub photons: f64,
    pub reflectivity: f64,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationMetrics {
    pub max_trace_distance: f64,
    pub max_energy_rel_err: f64,
    pub leakage: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticCheck {
    pub n_traj: usize,
    pub seed: u64,
    pub dt: f64,
    pub aborted: usize,
    pub trace: Estimate,
    pub osc_number: Estimate,
    pub master_osc_number: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub params: ValidationParams,
    pub space: TruncatedSpace,
    pub leakage_tol: f64,
    pub metrics: ValidationMetrics,
    pub stochastic: Option<StochasticCheck>,
    pub pass: bool,
}

/// Master equation vs. analytic state on the benchmark, plus (when
/// `opts.n_traj > 0`) the trajectory ensemble vs. the master equation.
pub fn run_validation(opts: &ValidationOptions) -> Result<ValidationReport> {
    let model = benchmark_model();
    let cfg = benchmark_config();
    let leakage_tol = 1e-8;
    let space = TruncatedSpace::suggest(&model, cfg.photons, BENCHMARK_T_FINAL, leakage_tol)?;
    let dt = IntegratorConfig::max_step(&model, &space);
    let grid: Vec<f64> = (1..=6).map(|i| 0.5 * i as f64).collect();
    let report = compare_with_analytic(&grid, &model, &cfg, &space, dt, leakage_tol)?;
    let metrics = ValidationMetrics {
        max_trace_distance: report.max_trace_distance,
        max_energy_rel_err: report.max_energy_rel_err,
        leakage: report.max_leakage,
        max_trace_drift: report.diagnostics.max_trace_drift,
        max_hermiticity_drift: report.diagnostics.max_hermiticity_drift,
    };
    let stochastic = if opts.n_traj > 0 {
        let last = report.rows.last().expect("grid is non-empty");
        Some(stochastic_check(&model, &cfg, &space, last.t, last.energy_oracle, opts)?)
    } else {
        None
    };
    let pass = metrics.max_trace_distance <= TRACE_DISTANCE_TOL
        && metrics.max_energy_rel_err <= ENERGY_REL_TOL
        && metrics.leakage <= leakage_tol
        && stochastic.is_none_or(|s| s.z_score <= STOCHASTIC_Z_TOL);
    Ok(ValidationReport {
        params: ValidationParams {
            model,
            photons: cfg.photons,
            reflectivity: cfg.reflectivity,
            t_final: BENCHMARK_T_FINAL,
            dt,
        },
        space,
        leakage_tol,
        metrics,
        stochastic,
        pass,
    })
}

/// Ensemble `⟨b†b⟩(t_final)` against a master-equation value computed on
/// the same truncation, so only the Monte Carlo error is under test.
pub fn stochastic_check(
    model: &Model,
    cfg: &InterferometerConfig,
    space: &TruncatedSpace,
    t_final: f64,
    master_osc_number: f64,
    opts: &ValidationOptions,
) -> Result<StochasticCheck> {
    let ens = TrajectoryEnsemble::new(opts.n_traj, opts.seed, opts.stochastic_dt)?;
    let result = evolve_stochastic(&ens, model, space, cavity_amplitude(cfg), t_final)?;
    Ok(StochasticCheck {
        n_traj: opts.n_traj,
        seed: opts.seed,
        dt: opts.stochastic_dt,
        aborted: result.aborted,
        trace: result.trace,
        osc_number: result.osc_number,
        master_osc_number,
        z_score: result.osc_number.z_score(master_osc_number),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_evolution_matches_exactly() {
        let model = benchmark_model().with_coupling(0.0).with_force(ReducedForce::Zero);
        let cfg = benchmark_config();
        let space = TruncatedSpace::new(16, 3).unwrap();
        let r = compare_with_analytic(&[0.5, 1.0, 2.0], &model, &cfg, &space, 0.01, 1e-8).unwrap();
        assert!(r.max_trace_distance < 1e-13);
        assert!(r.max_energy_rel_err < 1e-15);
    }

    #[test]
    fn rejects_twin_layout_and_empty_grid() {
        let model = benchmark_model();
        let space = TruncatedSpace::new(4, 4).unwrap();
        let twin = InterferometerConfig::twin(2.0).unwrap();
        assert!(compare_with_analytic(&[1.0], &model, &twin, &space, 0.01, 1.0).is_err());
        assert!(compare_with_analytic(&[], &model, &benchmark_config(), &space, 0.01, 1.0).is_err());
    }
}
