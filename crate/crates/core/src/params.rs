//! Physical parameters, unit handling and the derived coupling constants.
//!
//! Everything downstream works with a validated [`Model`]: the laser and
//! oscillator frequencies, the damping rate, the radiation-pressure coupling
//! `g` and the reduced classical force `f(t) = F(t) / sqrt(2 m Omega hbar)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Speed of light in m/s.
pub const C_LIGHT_SI: f64 = 299_792_458.0;

/// Strain amplitude used by the LIGO-scale defaults.
pub const LIGO_STRAIN: f64 = 1e-22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitSystem {
    #[serde(rename = "SI")]
    Si,
    #[serde(rename = "natural")]
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub units: UnitSystem,
    pub hbar: f64,
    pub c_light: f64,
}

impl PhysicalConstants {
    pub fn si() -> Self {
        Self {
            units: UnitSystem::Si,
            hbar: HBAR_SI,
            c_light: C_LIGHT_SI,
        }
    }

    /// hbar = c = 1 exactly.
    pub fn natural() -> Self {
        Self {
            units: UnitSystem::Natural,
            hbar: 1.0,
            c_light: 1.0,
        }
    }

    pub fn for_units(units: UnitSystem) -> Self {
        match units {
            UnitSystem::Si => Self::si(),
            UnitSystem::Natural => Self::natural(),
        }
    }

    fn validate(&self) -> Result<()> {
        positive("hbar", self.hbar)?;
        positive("c_light", self.c_light)
    }
}

/// Cavity and oscillator parameters. Frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub laser_freq: f64,
    pub osc_freq: f64,
    pub damping: f64,
    pub mass: f64,
    pub length: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega", self.laser_freq)?;
        positive("Omega", self.osc_freq)?;
        positive("mass", self.mass)?;
        positive("length", self.length)?;
        non_negative("lambda", self.damping)
    }
}

/// Classical force acting on the movable mirror, in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ForceSpec {
    Zero,
    /// `F(t) = amplitude * sin(freq * t + phase)`.
    Sinusoid { amplitude: f64, freq: f64, phase: f64 },
}

impl ForceSpec {
    /// Gravitational-wave drive: `F_m = h L m omega_gr^2`.
    pub fn from_strain(h: f64, freq: f64, phase: f64, params: &ModelParams) -> Self {
        ForceSpec::Sinusoid {
            amplitude: h * params.length * params.mass * freq * freq,
            freq,
            phase,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            ForceSpec::Zero => 0.0,
            ForceSpec::Sinusoid { amplitude, .. } => amplitude,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ForceSpec::Zero => Ok(()),
            ForceSpec::Sinusoid {
                amplitude,
                freq,
                phase,
            } => {
                finite("F_m", amplitude)?;
                finite("phase", phase)?;
                positive("omega_gr", freq)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCouplings {
    /// Radiation-pressure coupling `g` (1/s).
    pub g: f64,
    /// Reduced force amplitude `f_m` (1/s).
    pub f_m: f64,
}

/// `g = (omega / L) sqrt(2 hbar / (m Omega))`, `f_m = F_m / sqrt(2 m Omega hbar)`.
pub fn derive_couplings(
    p: &ModelParams,
    f: &ForceSpec,
    k: &PhysicalConstants,
) -> Result<DerivedCouplings> {
    p.validate()?;
    f.validate()?;
    k.validate()?;
    let g = (p.laser_freq / p.length) * (2.0 * k.hbar / (p.mass * p.osc_freq)).sqrt();
    let f_m = f.amplitude() / (2.0 * p.mass * p.osc_freq * k.hbar).sqrt();
    Ok(DerivedCouplings { g, f_m })
}

/// LIGO-scale parameter set: L = 4 km, m = 10 kg, Omega = 2π s⁻¹,
/// omega_gr = 2π·100 s⁻¹, lambda = 1e-5 s⁻¹ and a phase-0 sinusoidal drive
/// of strain [`LIGO_STRAIN`].
///
/// The laser frequency is 1.75e15 rad/s; the published estimates for g,
/// g·phi_m, g²c_m, g²s_m, the photon-number bounds and the powers are all
/// jointly consistent only for omega in roughly [1.736e15, 1.757e15].
pub fn ligo_defaults() -> (ModelParams, ForceSpec, PhysicalConstants) {
    let params = ModelParams {
        laser_freq: 1.75e15,
        osc_freq: 2.0 * PI,
        damping: 1e-5,
        mass: 10.0,
        length: 4e3,
    };
    let force = ForceSpec::from_strain(LIGO_STRAIN, 2.0 * PI * 100.0, 0.0, &params);
    (params, force, PhysicalConstants::si())
}

/// Reduced classical force `f(t)` in units of 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReducedForce {
    Zero,
    Sinusoid { amplitude: f64, freq: f64, phase: f64 },
}

impl ReducedForce {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            ReducedForce::Zero => 0.0,
            ReducedForce::Sinusoid {
                amplitude,
                freq,
                phase,
            } => amplitude * (freq * t + phase).sin(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            ReducedForce::Zero => 0.0,
            ReducedForce::Sinusoid { amplitude, .. } => amplitude,
        }
    }

    /// Same waveform with the sign flipped (used for the second arm of the
    /// twin-cavity layout).
    pub fn negated(&self) -> Self {
        match *self {
            ReducedForce::Zero => ReducedForce::Zero,
            ReducedForce::Sinusoid {
                amplitude,
                freq,
                phase,
            } => ReducedForce::Sinusoid {
                amplitude: -amplitude,
                freq,
                phase,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude() == 0.0
    }
}

/// The reduced description every analytic and numerical routine consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub laser_freq: f64,
    pub osc_freq: f64,
    pub damping: f64,
    pub coupling: f64,
    pub force: ReducedForce,
}

impl Model {
    pub fn new(p: &ModelParams, f: &ForceSpec, k: &PhysicalConstants) -> Result<Self> {
        let d = derive_couplings(p, f, k)?;
        let force = match *f {
            ForceSpec::Zero => ReducedForce::Zero,
            ForceSpec::Sinusoid { freq, phase, .. } => ReducedForce::Sinusoid {
                amplitude: d.f_m,
                freq,
                phase,
            },
        };
        Ok(Self {
            laser_freq: p.laser_freq,
            osc_freq: p.osc_freq,
            damping: p.damping,
            coupling: d.g,
            force,
        })
    }

    /// Direct construction from reduced quantities (natural units, desk
    /// tests). The laser frequency defaults to zero, i.e. the rotating frame.
    pub fn reduced(osc_freq: f64, damping: f64, coupling: f64, force: ReducedForce) -> Result<Self> {
        positive("Omega", osc_freq)?;
        non_negative("lambda", damping)?;
        finite("g", coupling)?;
        if let ReducedForce::Sinusoid {
            amplitude,
            freq,
            phase,
        } = force
        {
            finite("f_m", amplitude)?;
            finite("phase", phase)?;
            positive("omega_gr", freq)?;
        }
        Ok(Self {
            laser_freq: 0.0,
            osc_freq,
            damping,
            coupling,
            force,
        })
    }

    pub fn with_laser_freq(mut self, laser_freq: f64) -> Self {
        self.laser_freq = laser_freq;
        self
    }

    pub fn with_force(mut self, force: ReducedForce) -> Self {
        self.force = force;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    /// One oscillator period `2π / Omega`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.osc_freq
    }
}

/// On-disk parameter file.
///
/// ```json
/// { "omega": 1.75e15, "Omega": 6.283, "lambda": 1e-5, "mass": 10, "length": 4000,
///   "force": { "kind": "sinusoid", "h": 1e-22, "omega_gr": 628.3, "phase": 0 },
///   "units": "SI" }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
    pub lambda: f64,
    pub mass: f64,
    pub length: f64,
    #[serde(default)]
    pub force: Option<ForceEntry>,
    #[serde(default = "default_units")]
    pub units: UnitSystem,
}

fn default_units() -> UnitSystem {
    UnitSystem::Si
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceEntry {
    pub kind: ForceKind,
    #[serde(rename = "F_m", default, skip_serializing_if = "Option::is_none")]
    pub f_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_gr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForceKind {
    Zero,
    Sinusoid,
}

impl ParamFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_parts(p: &ModelParams, f: &ForceSpec, k: &PhysicalConstants) -> Self {
        let force = match *f {
            ForceSpec::Zero => ForceEntry {
                kind: ForceKind::Zero,
                f_m: None,
                h: None,
                omega_gr: None,
                phase: None,
            },
            ForceSpec::Sinusoid {
                amplitude,
                freq,
                phase,
            } => ForceEntry {
                kind: ForceKind::Sinusoid,
                f_m: Some(amplitude),
                h: None,
                omega_gr: Some(freq),
                phase: Some(phase),
            },
        };
        Self {
            omega: p.laser_freq,
            big_omega: p.osc_freq,
            lambda: p.damping,
            mass: p.mass,
            length: p.length,
            force: Some(force),
            units: k.units,
        }
    }

    /// Validated parameter triple. When the force gives `h` instead of
    /// `F_m`, the amplitude is `h L m omega_gr^2`.
    pub fn resolve(&self) -> Result<(ModelParams, ForceSpec, PhysicalConstants)> {
        let params = ModelParams {
            laser_freq: self.omega,
            osc_freq: self.big_omega,
            damping: self.lambda,
            mass: self.mass,
            length: self.length,
        };
        params.validate()?;
        let force = match &self.force {
            None => ForceSpec::Zero,
            Some(entry) => match entry.kind {
                ForceKind::Zero => {
                    if entry.f_m.is_some_and(|v| v != 0.0) || entry.h.is_some_and(|v| v != 0.0) {
                        return Err(Error::InvalidInput(
                            "force kind `zero` cannot carry a nonzero amplitude".into(),
                        ));
                    }
                    ForceSpec::Zero
                }
                ForceKind::Sinusoid => {
                    let freq = entry.omega_gr.ok_or_else(|| {
                        Error::InvalidInput("sinusoidal force requires `omega_gr`".into())
                    })?;
                    let phase = entry.phase.unwrap_or(0.0);
                    match (entry.f_m, entry.h) {
                        (Some(_), Some(_)) => {
                            return Err(Error::InvalidInput(
                                "give either `F_m` or `h`, not both".into(),
                            ))
                        }
                        (Some(amplitude), None) => ForceSpec::Sinusoid {
                            amplitude,
                            freq,
                            phase,
                        },
                        (None, Some(h)) => ForceSpec::from_strain(h, freq, phase, &params),
                        (None, None) => {
                            return Err(Error::InvalidInput(
                                "sinusoidal force requires `F_m` or `h`".into(),
                            ))
                        }
                    }
                }
            },
        };
        force.validate()?;
        Ok((params, force, PhysicalConstants::for_units(self.units)))
    }

    pub fn to_model(&self) -> Result<Model> {
        let (p, f, k) = self.resolve()?;
        Model::new(&p, &f, &k)
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must be finite"))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must be strictly positive"))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must be non-negative"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural_params(omega: f64, length: f64, mass: f64, osc: f64) -> ModelParams {
        ModelParams {
            laser_freq: omega,
            osc_freq: osc,
            damping: 0.0,
            mass,
            length,
        }
    }

    #[test]
    fn natural_units_direct_substitution() {
        let k = PhysicalConstants::natural();
        let d = derive_couplings(&natural_params(2.0, 1.0, 2.0, 1.0), &ForceSpec::Zero, &k).unwrap();
        assert_eq!(d.g, 2.0);
        assert_eq!(d.f_m, 0.0);

        let f = ForceSpec::Sinusoid {
            amplitude: 2.0,
            freq: 1.0,
            phase: 0.0,
        };
        let d = derive_couplings(&natural_params(1.0, 1.0, 1.0, 2.0), &f, &k).unwrap();
        assert_eq!(d.f_m, 1.0);
    }

    #[test]
    fn ligo_couplings() {
        let (p, f, k) = ligo_defaults();
        assert_eq!(p.length, 4e3);
        assert_eq!(p.damping, 1e-5);
        let d = derive_couplings(&p, &f, &k).unwrap();
        assert!((d.g / 8.1e-7 - 1.0).abs() < 0.02, "g = {}", d.g);
        assert!((d.f_m / LIGO_STRAIN / 1.37e26 - 1.0).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_parameters() {
        let k = PhysicalConstants::si();
        for (i, bad) in [0.0, -1.0, f64::NAN].into_iter().enumerate() {
            let mut p = natural_params(1.0, 1.0, 1.0, 1.0);
            match i % 4 {
                0 => p.mass = bad,
                1 => p.length = bad,
                _ => p.osc_freq = bad,
            }
            assert!(derive_couplings(&p, &ForceSpec::Zero, &k).is_err());
        }
        let mut p = natural_params(1.0, 1.0, 1.0, 1.0);
        p.laser_freq = 0.0;
        assert!(derive_couplings(&p, &ForceSpec::Zero, &k).is_err());
        p.laser_freq = 1.0;
        p.damping = -1e-3;
        assert!(derive_couplings(&p, &ForceSpec::Zero, &k).is_err());
    }

    #[test]
    fn coupling_scales_with_frequency_over_length() {
        let k = PhysicalConstants::si();
        let p = natural_params(3.3e14, 17.0, 4.0, 0.7);
        let mut p2 = p;
        p2.laser_freq *= 2.0;
        let g1 = derive_couplings(&p, &ForceSpec::Zero, &k).unwrap().g;
        let g2 = derive_couplings(&p2, &ForceSpec::Zero, &k).unwrap().g;
        assert_eq!(g2, 2.0 * g1);
    }

    #[test]
    fn natural_and_si_agree_after_rescaling() {
        let p = natural_params(1.3, 0.8, 2.5, 0.9);
        let f = ForceSpec::Sinusoid {
            amplitude: 0.4,
            freq: 3.0,
            phase: 0.2,
        };
        let nat = derive_couplings(&p, &f, &PhysicalConstants::natural()).unwrap();
        let si = derive_couplings(&p, &f, &PhysicalConstants::si()).unwrap();
        let s = HBAR_SI.sqrt();
        assert!((si.g / s / nat.g - 1.0).abs() < 1e-12);
        assert!((si.f_m * s / nat.f_m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn param_file_with_strain() {
        let text = r#"{"omega": 1.75e15, "Omega": 6.283185307179586, "lambda": 1e-5,
            "mass": 10, "length": 4000,
            "force": {"kind": "sinusoid", "h": 1e-22, "omega_gr": 628.3185307179586}}"#;
        let pf = ParamFile::from_json(text).unwrap();
        let (p, f, k) = pf.resolve().unwrap();
        assert_eq!(k.units, UnitSystem::Si);
        let expected = 1e-22 * 4000.0 * 10.0 * 628.318_530_717_958_6_f64.powi(2);
        assert!((f.amplitude() / expected - 1.0).abs() < 1e-15);
        let (lp, _, _) = ligo_defaults();
        assert_eq!(p.laser_freq, lp.laser_freq);
    }

    #[test]
    fn param_file_rejects_inconsistent_force() {
        let both = r#"{"omega": 1, "Omega": 1, "lambda": 0, "mass": 1, "length": 1,
            "force": {"kind": "sinusoid", "h": 1e-22, "F_m": 2, "omega_gr": 1}, "units": "natural"}"#;
        assert!(ParamFile::from_json(both).unwrap().resolve().is_err());
        let zero = r#"{"omega": 1, "Omega": 1, "lambda": 0, "mass": 1, "length": 1,
            "force": {"kind": "zero", "F_m": 2}}"#;
        assert!(ParamFile::from_json(zero).unwrap().resolve().is_err());
        let unknown = r#"{"omega": 1, "Omega": 1, "lambda": 0, "mass": 1, "length": 1, "bogus": 3}"#;
        assert!(ParamFile::from_json(unknown).is_err());
    }
}
