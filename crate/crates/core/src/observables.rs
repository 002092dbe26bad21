//! Analytic state of the cavity field and the balanced-detector statistics.
//!
//! The cavity arm starts in the coherent state `|iσz⟩` with the mirror in its
//! ground state. Its reduced density matrix in the Fock basis is
//!
//! ```text
//! ρ(n, m; t) = e^{-|α|²} αⁿ ᾱᵐ / sqrt(n! m!) · e^{iω(m-n)t}
//!            · exp(-g²(m-n)² c_t + i g²(m-n)(n+m) s_t + 2i g (m-n) φ_t)
//! ```
//!
//! The detector observable is `Î = a₁†a₂ + a₁a₂†`; its mean `I(t)` and
//! variance `D(t)` are available in closed form, as a leading-order
//! approximation (twin-cavity layout) and as truncated Fock sums over the
//! matrix elements, the latter serving as a consistency check on the former.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::kernels::{self, EnergyCoefficients, KernelMethod, KernelSet};
use crate::params::{Model, ReducedForce};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Cavity in arm 1, free reference beam in arm 2.
    General,
    /// Identical cavities in both arms, 50/50 first splitter, opposite force
    /// phase in arm 2.
    TwinCavity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferometerConfig {
    /// Mean photon number `N = |z|²` of the laser beam.
    pub photons: f64,
    /// First-splitter reflectivity σ.
    pub reflectivity: f64,
    pub layout: Layout,
    /// Phase of the coherent amplitude z.
    pub z_phase: f64,
}

impl InterferometerConfig {
    pub fn general(photons: f64, reflectivity: f64) -> Result<Self> {
        let cfg = Self {
            photons,
            reflectivity,
            layout: Layout::General,
            z_phase: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn twin(photons: f64) -> Result<Self> {
        let cfg = Self {
            photons,
            reflectivity: FRAC_1_SQRT_2,
            layout: Layout::TwinCavity,
            z_phase: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_z_phase(mut self, z_phase: f64) -> Self {
        self.z_phase = z_phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photons.is_finite() && self.photons >= 0.0) {
            return Err(Error::invalid("N", self.photons, "photon number must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return Err(Error::invalid("sigma_r", self.reflectivity, "reflectivity must lie in [0, 1]"));
        }
        if self.layout == Layout::TwinCavity && (self.reflectivity - FRAC_1_SQRT_2).abs() > 1e-12 {
            return Err(Error::invalid(
                "sigma_r",
                self.reflectivity,
                "twin-cavity layout requires a 50/50 first splitter",
            ));
        }
        Ok(())
    }

    fn z(&self) -> Complex64 {
        Complex64::from_polar(self.photons.sqrt(), self.z_phase)
    }

    /// States entering the two arms after the first splitter.
    pub fn arms(&self) -> [ArmState; 2] {
        let sigma = self.reflectivity;
        let z = self.z();
        let cavity = ArmState {
            amplitude: Complex64::new(0.0, sigma) * z,
            cavity: Some(ForceSign::Same),
        };
        let reference = match self.layout {
            Layout::General => ArmState {
                amplitude: z * (1.0 - sigma * sigma).sqrt(),
                cavity: None,
            },
            Layout::TwinCavity => ArmState {
                amplitude: z * FRAC_1_SQRT_2,
                cavity: Some(ForceSign::Opposite),
            },
        };
        [cavity, reference]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ForceSign {
    Same,
    Opposite,
}

/// Coherent input of one interferometer arm, optionally inside a cavity with
/// a movable mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmState {
    pub amplitude: Complex64,
    pub cavity: Option<ForceSign>,
}

impl ArmState {
    /// Fock-basis element `⟨n|ρ(t)|m⟩`. `kernels` must be the closed-form
    /// set for `t` and the unsigned force.
    pub fn element(&self, n: u64, m: u64, t: f64, model: &Model, k: &KernelSet) -> Complex64 {
        let norm = self.amplitude.norm();
        if norm == 0.0 {
            return if n == 0 && m == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let (nf, mf) = (n as f64, m as f64);
        let dm = mf - nf;
        let mut log_mag = -norm * norm + (nf + mf) * norm.ln() - 0.5 * (ln_factorial(n) + ln_factorial(m));
        let mut phase = (nf - mf) * self.amplitude.arg() + model.laser_freq * dm * t;
        if let Some(sign) = self.cavity {
            let g = model.coupling;
            let phi = match sign {
                ForceSign::Same => k.phi,
                ForceSign::Opposite => -k.phi,
            };
            log_mag -= g * g * dm * dm * k.c;
            phase += g * g * dm * (nf + mf) * k.s + 2.0 * g * dm * phi;
        }
        Complex64::from_polar(log_mag.exp(), phase)
    }

    fn mean_photons(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityMatrixElement {
    pub n: u64,
    pub m: u64,
    pub value: Complex64,
}

/// Element of the reduced radiation state in the (first) cavity arm.
pub fn rho1_element(
    n: u64,
    m: u64,
    t: f64,
    model: &Model,
    cfg: &InterferometerConfig,
) -> Result<CavityMatrixElement> {
    cfg.validate()?;
    let k = kernels::kernel_set(t, model, KernelMethod::ClosedForm)?;
    let value = cfg.arms()[0].element(n, m, t, model, &k);
    Ok(CavityMatrixElement { n, m, value })
}

/// Truncated reduced density matrix of the cavity arm, indices `0..=cut`.
pub fn rho1_matrix(
    cut: usize,
    t: f64,
    model: &Model,
    cfg: &InterferometerConfig,
) -> Result<nalgebra::DMatrix<Complex64>> {
    cfg.validate()?;
    let k = kernels::kernel_set(t, model, KernelMethod::ClosedForm)?;
    let arm = cfg.arms()[0];
    Ok(nalgebra::DMatrix::from_fn(cut + 1, cut + 1, |n, m| {
        arm.element(n as u64, m as u64, t, model, &k)
    }))
}

/// Oscillator mean energy in quanta, `g²(N²+N)c₂ + gNc₁ + c₀`, where `N` is
/// the mean photon number inside the cavity.
pub fn mean_energy(t: f64, photons: f64, model: &Model) -> Result<f64> {
    let e = kernels::energy_coeffs(t, model)?;
    Ok(energy_from_coeffs(&e, photons, model.coupling))
}

pub fn energy_from_coeffs(e: &EnergyCoefficients, photons: f64, g: f64) -> f64 {
    g * g * (photons * photons + photons) * e.c2 + g * photons * e.c1 + e.c0
}

/// `g²N² / (Ω² + λ²/4)`: the force-free energy for t → ∞ and N ≫ 1.
pub fn steady_energy_limit(photons: f64, model: &Model) -> f64 {
    let g = model.coupling;
    let (l, w) = (model.damping, model.osc_freq);
    g * g * photons * photons / (w * w + 0.25 * l * l)
}

/// Per-term split of the noise: shot noise, standard quantum limit and
/// radiation-pressure back-action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBreakdown {
    pub shot: f64,
    pub sql: f64,
    pub back_action: f64,
}

impl NoiseBreakdown {
    pub fn total(&self) -> f64 {
        self.shot + self.sql + self.back_action
    }
}

/// Small parameters of the leading-order expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Validity {
    /// `g φ_t`
    pub force: f64,
    /// `g² c_t`
    pub dephasing: f64,
    /// `g² s_t`
    pub back_action_phase: f64,
    /// `N g⁴ s_t²`; the expansion breaks down once this reaches 1.
    pub photon_bound: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalStats {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    /// `D / I²`; +∞ when the mean vanishes.
    pub sigma2: f64,
    pub signal_vanishes: bool,
    pub breakdown: Option<NoiseBreakdown>,
    pub validity: Option<Validity>,
}

impl SignalStats {
    fn new(t: f64, mean: f64, variance: f64) -> Self {
        let signal_vanishes = mean == 0.0;
        Self {
            t,
            mean,
            variance,
            sigma2: if signal_vanishes {
                f64::INFINITY
            } else {
                variance / (mean * mean)
            },
            signal_vanishes,
            breakdown: None,
            validity: None,
        }
    }
}

/// Exact `I(t)`, `D(t)`.
pub fn signal_closed_form(t: f64, model: &Model, cfg: &InterferometerConfig) -> Result<SignalStats> {
    cfg.validate()?;
    let k = kernels::kernel_set(t, model, KernelMethod::ClosedForm)?;
    Ok(signal_from_kernels(&k, model.coupling, cfg))
}

pub fn signal_from_kernels(k: &KernelSet, g: f64, cfg: &InterferometerConfig) -> SignalStats {
    let n = cfg.photons;
    let (phi, c, s) = (k.phi, k.c, k.s);
    let g2s = g * g * s;
    let (mean, variance) = match cfg.layout {
        Layout::General => {
            let s2 = cfg.reflectivity * cfg.reflectivity;
            let mix = s2 * (1.0 - s2);
            let mean = 2.0 * n * mix.sqrt()
                * (-g * g * c - 2.0 * n * s2 * g2s.sin().powi(2)).exp()
                * (g * (2.0 * phi + g * s) + n * s2 * (2.0 * g2s).sin()).sin();
            let second = 2.0 * n * n * mix
                * (-4.0 * g * g * c - 2.0 * n * s2 * (2.0 * g2s).sin().powi(2)).exp()
                * (4.0 * g * (phi + g * s) + n * s2 * (4.0 * g2s).sin()).cos();
            (mean, n + 2.0 * n * n * mix - second - mean * mean)
        }
        Layout::TwinCavity => {
            let mean = n * (-2.0 * g * g * c - 2.0 * n * g2s.sin().powi(2)).exp() * (4.0 * g * phi).sin();
            let second = 0.5 * n * n
                * (-8.0 * g * g * c - 2.0 * n * (2.0 * g2s).sin().powi(2)).exp()
                * (8.0 * g * phi).cos();
            (mean, n + 0.5 * n * n - second - mean * mean)
        }
    };
    SignalStats::new(k.t, mean, variance)
}

/// Leading-order twin-cavity statistics: `I ≈ 4Ngφ_t`,
/// `D ≈ N + 4N²g²c_t + 4N³g⁴s_t²`.
pub fn signal_approx_twin(t: f64, model: &Model, cfg: &InterferometerConfig) -> Result<SignalStats> {
    cfg.validate()?;
    if cfg.layout != Layout::TwinCavity {
        return Err(Error::InvalidInput(
            "the leading-order approximation applies to the twin-cavity layout".into(),
        ));
    }
    let k = kernels::kernel_set(t, model, KernelMethod::ClosedForm)?;
    Ok(approx_from_kernels(&k, model.coupling, cfg.photons))
}

pub fn approx_from_kernels(k: &KernelSet, g: f64, n: f64) -> SignalStats {
    let g2 = g * g;
    let breakdown = NoiseBreakdown {
        shot: n,
        sql: 4.0 * n * n * g2 * k.c,
        back_action: 4.0 * n * n * n * g2 * g2 * k.s * k.s,
    };
    let photon_bound = n * g2 * g2 * k.s * k.s;
    let mut stats = SignalStats::new(k.t, 4.0 * n * g * k.phi, breakdown.total());
    stats.breakdown = Some(breakdown);
    stats.validity = Some(Validity {
        force: g * k.phi,
        dephasing: g2 * k.c,
        back_action_phase: g2 * k.s,
        photon_bound,
        warning: photon_bound >= 1.0,
    });
    stats
}

/// Default Fock cut-off `ceil(N + 12 sqrt(N) + 20)`.
pub fn default_cutoff(photons: f64) -> usize {
    (photons + 12.0 * photons.sqrt() + 20.0).ceil() as usize
}

/// Largest truncation tail accepted by [`signal_series`].
pub const SERIES_TAIL_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    pub stats: SignalStats,
    /// Poisson mass the truncated sums cannot reach.
    pub tail: f64,
    pub n_cut: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct ArmMoments {
    a: Complex64,
    a2: Complex64,
    number: f64,
}

fn arm_moments(arm: &ArmState, n_cut: usize, t: f64, model: &Model, k: &KernelSet) -> ArmMoments {
    let mut out = ArmMoments::default();
    for j in 0..=n_cut as u64 {
        let jf = j as f64;
        out.number += jf * arm.element(j, j, t, model, k).re;
        if j + 1 <= n_cut as u64 {
            out.a += arm.element(j + 1, j, t, model, k) * (jf + 1.0).sqrt();
        }
        if j + 2 <= n_cut as u64 {
            out.a2 += arm.element(j + 2, j, t, model, k) * ((jf + 1.0) * (jf + 2.0)).sqrt();
        }
    }
    out
}

/// Poisson probability of exceeding `cut`.
pub fn poisson_tail(mean: f64, cut: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = (-mean + (cut as f64 + 1.0) * mean.ln() - ln_factorial(cut as u64 + 1)).exp();
    let mut sum = 0.0;
    let mut j = cut as f64 + 1.0;
    while term > 0.0 && term > 1e-18 * sum {
        sum += term;
        j += 1.0;
        term *= mean / j;
    }
    sum
}

/// `I(t)` and `D(t)` from truncated Fock sums over the arm states.
pub fn signal_series(
    t: f64,
    model: &Model,
    cfg: &InterferometerConfig,
    n_cut: usize,
) -> Result<SeriesResult> {
    cfg.validate()?;
    let arms = cfg.arms();
    let tail = arms
        .iter()
        .map(|arm| poisson_tail(arm.mean_photons(), n_cut.saturating_sub(2)))
        .fold(0.0, f64::max);
    if tail > SERIES_TAIL_LIMIT {
        return Err(Error::TruncationTail {
            tail,
            limit: SERIES_TAIL_LIMIT,
            n_cut,
        });
    }
    let k = kernels::kernel_set(t, model, KernelMethod::ClosedForm)?;
    let m1 = arm_moments(&arms[0], n_cut, t, model, &k);
    let m2 = arm_moments(&arms[1], n_cut, t, model, &k);
    let mean = 2.0 * (m1.a.conj() * m2.a).re;
    let second = 2.0 * (m1.a2.conj() * m2.a2).re + 2.0 * m1.number * m2.number + m1.number + m2.number;
    Ok(SeriesResult {
        stats: SignalStats::new(t, mean, second - mean * mean),
        tail,
        n_cut,
    })
}

/// Exact and three-term relative fluctuation in the twin-cavity layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fluctuation {
    pub exact: SignalStats,
    /// `1/(16g²φ²N) + c/(4φ²) + g²s²N/(4φ²)`
    pub approx: f64,
    pub terms: NoiseBreakdown,
}

pub fn fluctuation_terms(k: &KernelSet, g: f64, photons: f64) -> NoiseBreakdown {
    let phi2 = k.phi * k.phi;
    NoiseBreakdown {
        shot: 1.0 / (16.0 * g * g * phi2 * photons),
        sql: k.c / (4.0 * phi2),
        back_action: g * g * k.s * k.s * photons / (4.0 * phi2),
    }
}

pub fn relative_fluctuation(t: f64, photons: f64, model: &Model) -> Result<Fluctuation> {
    let cfg = InterferometerConfig::twin(photons)?;
    let k = kernels::kernel_set(t, model, KernelMethod::ClosedForm)?;
    if k.phi == 0.0 {
        return Err(Error::UndetectableSignal { t });
    }
    let terms = fluctuation_terms(&k, model.coupling, photons);
    Ok(Fluctuation {
        exact: signal_from_kernels(&k, model.coupling, &cfg),
        approx: terms.total(),
        terms,
    })
}

/// The twin-cavity arm force for `sign`.
pub fn arm_force(force: &ReducedForce, sign: ForceSign) -> ReducedForce {
    match sign {
        ForceSign::Same => *force,
        ForceSign::Opposite => force.negated(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ligo_defaults, LIGO_STRAIN};

    fn bench_model() -> Model {
        Model::reduced(
            1.0,
            0.1,
            0.05,
            ReducedForce::Sinusoid {
                amplitude: 0.1,
                freq: 2.0,
                phase: 0.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn diagonal_is_poisson_and_time_independent() {
        let m = bench_model().with_laser_freq(3.0);
        let cfg = InterferometerConfig::general(4.0, 0.6).unwrap();
        let mu: f64 = 4.0 * 0.36;
        for n in 0..8u64 {
            let expected = (-mu).exp() * mu.powi(n as i32) / (1..=n).product::<u64>().max(1) as f64;
            for &t in &[0.0, 1.0, 7.5] {
                let v = rho1_element(n, n, t, &m, &cfg).unwrap().value;
                assert!((v.re - expected).abs() < 1e-15 && v.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_coupling_gives_free_coherent_state() {
        let m = bench_model().with_coupling(0.0).with_force(ReducedForce::Zero).with_laser_freq(2.0);
        let cfg = InterferometerConfig::general(3.0, 0.8).unwrap().with_z_phase(0.4);
        let z = Complex64::from_polar(3f64.sqrt(), 0.4);
        let alpha = Complex64::new(0.0, 0.8) * z;
        let t = 1.3;
        for (n, m_) in [(0u64, 2u64), (3, 1), (4, 4)] {
            let fact = |k: u64| (1..=k).product::<u64>().max(1) as f64;
            let expected = alpha.powu(n as u32)
                * (Complex64::new(0.0, -0.8) * z.conj()).powu(m_ as u32)
                * (-0.64 * 3.0f64).exp()
                * Complex64::from_polar(1.0, 2.0 * (m_ as f64 - n as f64) * t)
                / (fact(n) * fact(m_)).sqrt();
            let v = rho1_element(n, m_, t, &m, &cfg).unwrap().value;
            assert!((v - expected).norm() < 1e-14, "({n},{m_}) {v} vs {expected}");
        }
    }

    #[test]
    fn hermitian_and_dephasing_structure() {
        let m = bench_model().with_force(ReducedForce::Zero);
        let cfg = InterferometerConfig::general(2.0, 1.0).unwrap();
        let t = 2.2;
        let (c, _) = kernels::cos_sin_kernels(t, &m);
        for n in 0..6u64 {
            for k in 0..6u64 {
                let a = rho1_element(n, k, t, &m, &cfg).unwrap().value;
                let b = rho1_element(k, n, t, &m, &cfg).unwrap().value;
                assert!((a - b.conj()).norm() < 1e-15);
                let a0 = rho1_element(n, k, 0.0, &m, &cfg).unwrap().value;
                let d = (k as f64 - n as f64).powi(2);
                assert!((a.norm() - a0.norm() * (-0.0025 * d * c).exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn truncated_matrix_has_unit_trace() {
        let m = bench_model();
        let cfg = InterferometerConfig::general(5.0, 0.9).unwrap();
        let rho = rho1_matrix(60, 3.0, &m, &cfg).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!((&rho - rho.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn large_indices_do_not_overflow() {
        let m = bench_model();
        let cfg = InterferometerConfig::general(1e4, 1.0).unwrap();
        let v = rho1_element(10_000, 9_990, 1.0, &m, &cfg).unwrap().value;
        assert!(v.re.is_finite() && v.im.is_finite());
        let d = rho1_element(10_000, 10_000, 1.0, &m, &cfg).unwrap().value;
        assert!((d.re - 1.0 / (2.0 * std::f64::consts::PI * 1e4).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn energy_starts_at_zero_and_reaches_classical_shift() {
        let m = bench_model().with_force(ReducedForce::Zero).with_damping(0.5);
        assert_eq!(mean_energy(0.0, 10.0, &m).unwrap(), 0.0);
        let late = mean_energy(200.0, 1e6, &m).unwrap();
        let limit = steady_energy_limit(1e6, &m);
        // N² vs N² + N
        assert!((late / limit - 1.0).abs() < 2e-6);
    }

    #[test]
    fn ligo_steady_energy_limit() {
        let (p, _, k) = ligo_defaults();
        let model = Model::new(&p, &crate::params::ForceSpec::Zero, &k).unwrap();
        let n = 1e6;
        let limit = steady_energy_limit(n, &model);
        let g = model.coupling;
        let expected = g * g * n * n / ((2.0 * std::f64::consts::PI).powi(2) + 0.25e-10);
        assert!((limit / expected - 1.0).abs() < 1e-14);
        // damping of 1e-5 s⁻¹ settles after many 1/λ
        let e = mean_energy(3e6, n, &model).unwrap();
        assert!((e / limit - 1.0).abs() < 1e-5);
    }

    #[test]
    fn start_is_pure_shot_noise() {
        let m = bench_model();
        for cfg in [
            InterferometerConfig::general(7.0, 0.3).unwrap(),
            InterferometerConfig::twin(7.0).unwrap(),
        ] {
            let s = signal_closed_form(0.0, &m, &cfg).unwrap();
            assert_eq!(s.mean, 0.0);
            assert!((s.variance - 7.0).abs() < 1e-12);
            assert!(s.signal_vanishes && s.sigma2.is_infinite());
        }
        let a = signal_approx_twin(0.0, &m, &InterferometerConfig::twin(7.0).unwrap()).unwrap();
        assert_eq!(a.mean, 0.0);
        assert_eq!(a.variance, 7.0);
    }

    #[test]
    fn zero_coupling_is_balanced() {
        let m = bench_model().with_coupling(0.0);
        let cfg = InterferometerConfig::twin(9.0).unwrap();
        for &t in &[0.5, 3.0, 40.0] {
            let s = signal_closed_form(t, &m, &cfg).unwrap();
            assert_eq!(s.mean, 0.0);
            assert!((s.variance - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn back_action_saturation() {
        // large N g⁴ s² washes out the signal: I → 0, D → N + N²/2
        let m = Model::reduced(1.0, 0.01, 0.3, ReducedForce::Sinusoid { amplitude: 0.1, freq: 2.0, phase: 0.0 }).unwrap();
        let cfg = InterferometerConfig::twin(400.0).unwrap();
        let s = signal_closed_form(60.0, &m, &cfg).unwrap();
        let k = kernels::kernel_set(60.0, &m, KernelMethod::ClosedForm).unwrap();
        assert!(400.0 * 0.3f64.powi(4) * k.s * k.s > 10.0);
        assert!(s.mean.abs() < 1e-6);
        assert!((s.variance / (400.0 + 0.5 * 400.0 * 400.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn series_matches_closed_form() {
        let m = bench_model();
        for cfg in [
            InterferometerConfig::general(4.0, 0.6).unwrap(),
            InterferometerConfig::twin(4.0).unwrap(),
        ] {
            let series = signal_series(2.0, &m, &cfg, 60).unwrap();
            let closed = signal_closed_form(2.0, &m, &cfg).unwrap();
            assert!(series.tail < 1e-12);
            assert!((series.stats.mean / closed.mean - 1.0).abs() < 1e-8);
            assert!((series.stats.variance / closed.variance - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn series_degenerate_cases() {
        let m = bench_model();
        let vac = signal_series(1.0, &m, &InterferometerConfig::general(0.0, 0.5).unwrap(), 20).unwrap();
        assert_eq!((vac.stats.mean, vac.stats.variance), (0.0, 0.0));
        let free = m.with_force(ReducedForce::Zero);
        let cfg = InterferometerConfig::twin(6.0).unwrap();
        for &t in &[0.7, 2.0, 5.0] {
            let s = signal_series(t, &free, &cfg, default_cutoff(6.0)).unwrap();
            assert!(s.stats.mean.abs() < 1e-14);
        }
    }

    #[test]
    fn series_rejects_short_truncation() {
        let m = bench_model();
        let cfg = InterferometerConfig::general(50.0, 1.0).unwrap();
        assert!(matches!(
            signal_series(1.0, &m, &cfg, 40),
            Err(Error::TruncationTail { .. })
        ));
    }

    #[test]
    fn series_is_independent_of_laser_frequency() {
        let cfg = InterferometerConfig::general(4.0, 0.7).unwrap();
        let a = signal_series(2.5, &bench_model(), &cfg, 60).unwrap().stats;
        let b = signal_series(2.5, &bench_model().with_laser_freq(123.4), &cfg, 60).unwrap().stats;
        assert!((a.mean / b.mean - 1.0).abs() < 1e-10);
        assert!((a.variance / b.variance - 1.0).abs() < 1e-10);
    }

    #[test]
    fn approx_taylor_remainder() {
        // I_exact − I_approx = −N[4gφ·x + (4gφ)³/6 + …] with
        // x = 2g²c + 2N sin²(g²s): the remainder is cubic in gφ up to the
        // dephasing correction.
        let m = Model::reduced(1.0, 0.1, 1e-3, ReducedForce::Sinusoid { amplitude: 1.0, freq: 3.0, phase: 0.0 }).unwrap();
        let cfg = InterferometerConfig::twin(10.0).unwrap();
        let exact = signal_closed_form(1.0, &m, &cfg).unwrap();
        let approx = signal_approx_twin(1.0, &m, &cfg).unwrap();
        let k = kernels::kernel_set(1.0, &m, KernelMethod::ClosedForm).unwrap();
        let (g, n) = (1e-3, 10.0);
        let y = 4.0 * g * k.phi;
        let x = 2.0 * g * g * k.c + 2.0 * n * (g * g * k.s).sin().powi(2);
        let bound = n * (y.abs().powi(3) / 6.0 + y.abs() * x);
        let diff = (approx.mean - exact.mean).abs();
        assert!(diff <= 1.01 * bound, "{diff} > {bound}");
        assert!(diff >= 0.9 * bound);
    }

    #[test]
    fn exact_and_approx_agree_for_tiny_parameters() {
        let m = Model::reduced(1.0, 0.1, 1e-4, ReducedForce::Sinusoid { amplitude: 3.0, freq: 3.0, phase: 0.0 }).unwrap();
        let cfg = InterferometerConfig::twin(10.0).unwrap();
        let t = 1.0;
        let k = kernels::kernel_set(t, &m, KernelMethod::ClosedForm).unwrap();
        let g = 1e-4;
        assert!((g * k.phi).abs() <= 1e-3 && g * g * k.c <= 1e-3 && (g * g * k.s).abs() <= 1e-3);
        let e = signal_closed_form(t, &m, &cfg).unwrap();
        let a = signal_approx_twin(t, &m, &cfg).unwrap();
        assert!(((e.mean - a.mean) / e.mean).abs() <= 1e-5);
        assert!(((e.variance - a.variance) / e.variance).abs() <= 1e-4);
        assert!(!a.validity.unwrap().warning);
    }

    #[test]
    fn approx_warns_outside_validity() {
        let m = bench_model().with_coupling(0.5);
        let cfg = InterferometerConfig::twin(1e4).unwrap();
        let a = signal_approx_twin(20.0, &m, &cfg).unwrap();
        assert!(a.validity.unwrap().warning);
        assert!(signal_approx_twin(1.0, &m, &InterferometerConfig::general(2.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn ligo_signal_and_standard_quantum_limit() {
        let (p, f, k) = ligo_defaults();
        let model = Model::new(&p, &f, &k).unwrap();
        // half an oscillator period puts φ_t and c_t at their extremes
        let t = 0.5;
        let n = 1e10;
        let a = signal_approx_twin(t, &model, &InterferometerConfig::twin(n).unwrap()).unwrap();
        let per_strain = a.mean.abs() / (n * LIGO_STRAIN);
        assert!((per_strain / (4.0 * 5.6e16) - 1.0).abs() < 0.05, "{per_strain:e}");

        let fl = relative_fluctuation(t, n, &model).unwrap();
        let floor = fl.terms.sql * LIGO_STRAIN * LIGO_STRAIN;
        assert!((floor / 2.6e-48 - 1.0).abs() < 0.1, "{floor:e}");
    }

    #[test]
    fn fluctuation_term_structure() {
        let m = bench_model();
        let t = 2.0;
        let k = kernels::kernel_set(t, &m, KernelMethod::ClosedForm).unwrap();
        let g = m.coupling;
        let n_opt = 1.0 / (2.0 * g * g * k.s.abs());
        let fl = relative_fluctuation(t, n_opt, &m).unwrap();
        assert!((fl.terms.shot / fl.terms.back_action - 1.0).abs() < 1e-12);
        let mut last = 0.0;
        for n in [1e6, 1e7, 1e8, 1e9] {
            let fl = relative_fluctuation(t, n, &m).unwrap();
            assert!(fl.approx > last);
            assert!((fl.approx / fl.terms.back_action - 1.0).abs() < 1e-3 || n < 1e8);
            last = fl.approx;
        }
        let free = m.with_force(ReducedForce::Zero);
        assert!(matches!(
            relative_fluctuation(t, 10.0, &free),
            Err(Error::UndetectableSignal { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(InterferometerConfig::general(-1.0, 0.5).is_err());
        assert!(InterferometerConfig::general(1.0, 1.5).is_err());
        let mut cfg = InterferometerConfig::twin(1.0).unwrap();
        cfg.reflectivity = 0.3;
        assert!(cfg.validate().is_err());
    }
}
