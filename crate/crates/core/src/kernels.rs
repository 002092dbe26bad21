//! Scalar time kernels behind every closed-form observable.
//!
//! With `a = λ/2 + iΩ`:
//!
//! * `c_t + i s_t = ∫_0^t dτ ∫_0^τ ds e^{a(s-τ)}`
//! * `φ_t = ∫_0^t dτ ∫_0^τ ds f(s) e^{λ(s-τ)/2} sin Ω(s-τ)`
//! * `c₂, c₁, c₀`: coefficients of the oscillator mean energy
//! * `β⁺_n(t) = ∫_0^t (g n + f(τ)) e^{aτ} dτ`
//!
//! Each quantity has a closed-form route and an adaptive-quadrature route
//! that integrates the defining integral directly.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Model, ReducedForce};
use crate::quadrature::{self, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    ClosedForm,
    Quadrature,
    /// λ → 0 and Ω ≪ ω_gr leading terms.
    LeadingOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSet {
    pub t: f64,
    pub phi: f64,
    pub c: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCoefficients {
    pub t: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    /// Auxiliary phase with tan Φ = λ / (2Ω).
    pub aux_phase: f64,
}

const SERIES_RADIUS: f64 = 0.5;

#[inline]
pub(crate) fn rate(model: &Model) -> Complex64 {
    Complex64::new(0.5 * model.damping, model.osc_freq)
}

fn expm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * c - 2.0 * half * half, z.re.exp() * s)
}

/// `(e^z - 1) / z`.
pub(crate) fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..30 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        expm1(z) / z
    }
}

/// `(e^z - 1 - z) / z²`.
pub(crate) fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for k in 3..32 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (expm1(z) - z) / (z * z)
    }
}

/// `∫_0^t e^{z s} ds`.
#[inline]
pub(crate) fn exp_integral(z: Complex64, t: f64) -> Complex64 {
    phi1(z * t) * t
}

/// Phase φ of the cosine/sine kernels, `tan φ = λΩ / (λ²/4 − Ω²)`, resolved
/// to the right quadrant.
pub fn kernel_phase(model: &Model) -> f64 {
    let (l, w) = (model.damping, model.osc_freq);
    (l * w).atan2(0.25 * l * l - w * w)
}

/// Auxiliary phase Φ of the energy coefficients, `tan Φ = λ / (2Ω)`.
pub fn energy_phase(model: &Model) -> f64 {
    (0.5 * model.damping).atan2(model.osc_freq)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("t", t, "time must be finite and non-negative"))
    }
}

pub fn kernel_set(t: f64, model: &Model, method: KernelMethod) -> Result<KernelSet> {
    check_time(t)?;
    match method {
        KernelMethod::ClosedForm => Ok(closed_form(t, model)),
        KernelMethod::LeadingOrder => Ok(leading_order(t, model)),
        KernelMethod::Quadrature => by_quadrature(t, model),
    }
}

/// `(c_t, s_t)` in closed form.
pub fn cos_sin_kernels(t: f64, model: &Model) -> (f64, f64) {
    let a = rate(model);
    if a.norm() * t < SERIES_RADIUS {
        let k = phi2(-a * t) * (t * t);
        return (k.re, k.im);
    }
    let (l, w) = (model.damping, model.osc_freq);
    let r2 = 0.25 * l * l + w * w;
    let phase = kernel_phase(model);
    let decay = (-0.5 * l * t).exp();
    let (sin_p, cos_p) = (w * t + phase).sin_cos();
    let c = (-0.25 * l * l + l * l * l * t / 8.0 + w * w + 0.5 * l * t * w * w) / (r2 * r2)
        + decay * cos_p / r2;
    let s = -w * (0.25 * l * l * t + t * w * w - l) / (r2 * r2) - decay * sin_p / r2;
    (c, s)
}

/// `∫_0^t f(s) e^{-a(t-s)} ds` for the sinusoid; the building block of
/// `β⁺` and the energy coefficients.
pub(crate) fn damped_force_integral(t: f64, model: &Model, force: &ReducedForce) -> Complex64 {
    match *force {
        ReducedForce::Zero => Complex64::new(0.0, 0.0),
        ReducedForce::Sinusoid {
            amplitude,
            freq,
            phase,
        } => {
            let a = rate(model);
            let iw = Complex64::new(0.0, freq);
            let up = Complex64::from_polar(1.0, freq * t + phase) * exp_integral(-(a + iw), t);
            let down = Complex64::from_polar(1.0, -(freq * t + phase)) * exp_integral(-(a - iw), t);
            (up - down) * Complex64::new(0.0, -0.5 * amplitude)
        }
    }
}

/// `(A, B)` with `A = (1 − e^{-at})/a` and `B = ∫_0^t f(s) e^{-a(t-s)} ds`.
/// For photon number n the oscillator is driven into the coherent state of
/// amplitude `-i(g n A + B)`.
pub fn oscillator_response(t: f64, model: &Model) -> (Complex64, Complex64) {
    (
        exp_integral(-rate(model), t),
        damped_force_integral(t, model, &model.force),
    )
}

/// Closed-form φ_t for an arbitrary damping rate (four exponential terms).
pub fn force_kernel(t: f64, model: &Model, force: &ReducedForce) -> f64 {
    match *force {
        ReducedForce::Zero => 0.0,
        ReducedForce::Sinusoid {
            amplitude,
            freq,
            phase,
        } => {
            // φ_t = Im[(1/a) ∫_0^t f(s) (1 - e^{-a(t-s)}) ds]
            let a = rate(model);
            let window = |kappa: f64| {
                let ik = Complex64::new(0.0, kappa);
                Complex64::from_polar(1.0, kappa * t)
                    * (exp_integral(-ik, t) - exp_integral(-(a + ik), t))
            };
            let up = Complex64::from_polar(1.0, phase) * window(freq);
            let down = Complex64::from_polar(1.0, -phase) * window(-freq);
            let total = (up - down) * Complex64::new(0.0, -0.5 * amplitude);
            (total / a).im
        }
    }
}

fn closed_form(t: f64, model: &Model) -> KernelSet {
    let (c, s) = cos_sin_kernels(t, model);
    KernelSet {
        t,
        phi: force_kernel(t, model, &model.force),
        c,
        s,
    }
}

/// Leading terms for λ → 0 and Ω ≪ ω_gr.
pub fn leading_order(t: f64, model: &Model) -> KernelSet {
    let w = model.osc_freq;
    let (sin_wt, cos_wt) = (w * t).sin_cos();
    let phi = match model.force {
        ReducedForce::Zero => 0.0,
        ReducedForce::Sinusoid {
            amplitude,
            freq,
            phase,
        } => {
            amplitude * (cos_wt - 1.0) * phase.cos() / (w * freq)
                - amplitude * sin_wt * phase.sin() / (freq * freq)
        }
    };
    KernelSet {
        t,
        phi,
        c: (1.0 - cos_wt) / (w * w),
        s: sin_wt / (w * w) - t / w,
    }
}

fn by_quadrature(t: f64, model: &Model) -> Result<KernelSet> {
    let tol = Tolerance::default();
    let (l, w) = (model.damping, model.osc_freq);
    let c = quadrature::integrate_triangle(
        |tau, s| (0.5 * l * (s - tau)).exp() * (w * (s - tau)).cos(),
        t,
        tol,
    )?;
    let s = quadrature::integrate_triangle(
        |tau, s| (0.5 * l * (s - tau)).exp() * (w * (s - tau)).sin(),
        t,
        tol,
    )?;
    let phi = if model.force.is_zero() {
        0.0
    } else {
        let f = model.force;
        quadrature::integrate_triangle(
            |tau, s| f.at(s) * (0.5 * l * (s - tau)).exp() * (w * (s - tau)).sin(),
            t,
            tol,
        )?
        .value
    };
    Ok(KernelSet {
        t,
        phi,
        c: c.value,
        s: s.value,
    })
}

/// Energy coefficients in closed form.
pub fn energy_coeffs(t: f64, model: &Model) -> Result<EnergyCoefficients> {
    check_time(t)?;
    let a = rate(model);
    let (l, w) = (model.damping, model.osc_freq);
    let r2 = 0.25 * l * l + w * w;

    let c2 = if a.norm() * t < SERIES_RADIUS {
        exp_integral(-a, t).norm_sqr()
    } else {
        (1.0 - 2.0 * (-0.5 * l * t).exp() * (w * t).cos() + (-l * t).exp()) / r2
    };

    let aux_phase = energy_phase(model);
    let b = damped_force_integral(t, model, &model.force);
    // ∫ f(τ) e^{λ(τ-t)/2} (cos Ωτ + i sin Ωτ) dτ = e^{iΩt} B
    let proj = b * Complex64::from_polar(1.0, w * t);
    let decay = (-0.5 * l * t).exp();
    let r = r2.sqrt();
    let c1 = 2.0
        * (((w * t + aux_phase).sin() - aux_phase.sin() * decay) / r * proj.re
            - ((w * t + aux_phase).cos() - aux_phase.cos() * decay) / r * proj.im);
    Ok(EnergyCoefficients {
        t,
        c2,
        c1,
        c0: b.norm_sqr(),
        aux_phase,
    })
}

/// Energy coefficients from direct quadrature of
/// `P = ∫ e^{λ(τ-t)/2} e^{iΩτ} dτ` and `Q = ∫ f(τ) e^{λ(τ-t)/2} e^{iΩτ} dτ`:
/// `c₂ = |P|²`, `c₁ = 2 Re(P Q*)`, `c₀ = |Q|²`.
pub fn energy_coeffs_quadrature(t: f64, model: &Model) -> Result<EnergyCoefficients> {
    check_time(t)?;
    let tol = Tolerance::default();
    let (l, w) = (model.damping, model.osc_freq);
    let f = model.force;
    let env = |tau: f64| (0.5 * l * (tau - t)).exp();
    let pc = quadrature::integrate(|tau| env(tau) * (w * tau).cos(), 0.0, t, tol)?.value;
    let ps = quadrature::integrate(|tau| env(tau) * (w * tau).sin(), 0.0, t, tol)?.value;
    let (qc, qs) = if f.is_zero() {
        (0.0, 0.0)
    } else {
        (
            quadrature::integrate(|tau| f.at(tau) * env(tau) * (w * tau).cos(), 0.0, t, tol)?.value,
            quadrature::integrate(|tau| f.at(tau) * env(tau) * (w * tau).sin(), 0.0, t, tol)?.value,
        )
    };
    Ok(EnergyCoefficients {
        t,
        c2: pc * pc + ps * ps,
        c1: 2.0 * (pc * qc + ps * qs),
        c0: qc * qc + qs * qs,
        aux_phase: energy_phase(model),
    })
}

/// `β⁺_n(t) = ∫_0^t (g n + f(τ)) e^{(iΩ + λ/2)τ} dτ`.
pub fn beta_plus(n: u64, t: f64, model: &Model) -> Result<Complex64> {
    check_time(t)?;
    let a = rate(model);
    let photon = exp_integral(a, t) * (model.coupling * n as f64);
    let force = match model.force {
        ReducedForce::Zero => Complex64::new(0.0, 0.0),
        ReducedForce::Sinusoid {
            amplitude,
            freq,
            phase,
        } => {
            let iw = Complex64::new(0.0, freq);
            let up = Complex64::from_polar(1.0, phase) * exp_integral(a + iw, t);
            let down = Complex64::from_polar(1.0, -phase) * exp_integral(a - iw, t);
            (up - down) * Complex64::new(0.0, -0.5 * amplitude)
        }
    };
    Ok(photon + force)
}
