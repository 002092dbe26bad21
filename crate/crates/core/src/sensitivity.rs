//! Detector-scale sensitivity: oscillation amplitudes of the kernels,
//! photon-number and power bounds, optimal operating point and sweeps.
//!
//! Everything here works with envelope values of the kernels rather than the
//! instantaneous ones. Past one oscillator period those are the amplitudes
//!
//! ```text
//! φ_m = 2 f_m / (Ω ω_gr),   c_m = 2 / Ω²,   s_m = t / Ω
//! ```
//!
//! and below it the running maxima of the leading-order kernels, which reduce
//! to `c ≈ t²/2`, `|s| ≈ Ωt³/6`, `|φ| ≈ f_m Ω t² / (2ω_gr)` as t → 0.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{derive_couplings, ForceSpec, ModelParams, PhysicalConstants};
use crate::par;

pub const DEFAULT_REFLECTIONS: f64 = 1000.0;
/// Bisection bracket for the minimal detectable strain.
pub const H_BRACKET: (f64, f64) = (1e-26, 1e-18);
pub const H_BISECTION_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GWSource {
    pub h: f64,
    pub omega_gr: f64,
    pub phase: f64,
}

impl GWSource {
    pub fn new(h: f64, omega_gr: f64, phase: f64) -> Result<Self> {
        let src = Self { h, omega_gr, phase };
        src.validate()?;
        Ok(src)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::invalid("h", self.h, "strain amplitude must be positive"));
        }
        if !(self.omega_gr.is_finite() && self.omega_gr > 0.0) {
            return Err(Error::invalid("omega_gr", self.omega_gr, "must be positive"));
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid("phase", self.phase, "must be finite"));
        }
        Ok(())
    }

    /// Source matching a sinusoidal force specification.
    pub fn from_force(f: &ForceSpec, p: &ModelParams) -> Result<Self> {
        match *f {
            ForceSpec::Zero => Err(Error::InvalidInput("sensitivity needs a sinusoidal drive".into())),
            ForceSpec::Sinusoid {
                amplitude,
                freq,
                phase,
            } => Self::new(amplitude / (p.length * p.mass * freq * freq), freq, phase),
        }
    }
}

/// Reduced quantities of one detector and source; `f_m` is proportional to
/// `h`, so strain sweeps only rescale it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detector {
    pub g: f64,
    pub f_m: f64,
    pub h: f64,
    pub osc_freq: f64,
    pub omega_gr: f64,
    pub phase: f64,
    pub laser_freq: f64,
    pub length: f64,
    pub hbar: f64,
    pub c_light: f64,
}

impl Detector {
    pub fn new(p: &ModelParams, src: &GWSource, k: &PhysicalConstants) -> Result<Self> {
        src.validate()?;
        let force = ForceSpec::from_strain(src.h, src.omega_gr, src.phase, p);
        let d = derive_couplings(p, &force, k)?;
        Ok(Self {
            g: d.g,
            f_m: d.f_m,
            h: src.h,
            osc_freq: p.osc_freq,
            omega_gr: src.omega_gr,
            phase: src.phase,
            laser_freq: p.laser_freq,
            length: p.length,
            hbar: k.hbar,
            c_light: k.c_light,
        })
    }

    pub fn with_strain(&self, h: f64) -> Self {
        Self {
            f_m: self.f_m * h / self.h,
            h,
            ..*self
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.osc_freq
    }

    /// Leading-order `φ_t = A(cos Ωt − 1) − B sin Ωt`.
    fn phi_coefficients(&self) -> (f64, f64) {
        let (w, wg) = (self.osc_freq, self.omega_gr);
        (
            self.f_m * self.phase.cos() / (w * wg),
            self.f_m * self.phase.sin() / (wg * wg),
        )
    }

    /// Peak-to-peak swing of the leading-order force kernel.
    pub fn phi_amplitude(&self) -> f64 {
        let (a, b) = self.phi_coefficients();
        2.0 * a.hypot(b)
    }

    /// Amplitude values; past one period only.
    pub fn amplitudes(&self, t: f64) -> Result<AmplitudeSet> {
        let period = self.period();
        if !(t >= period) {
            return Err(Error::Regime { t, period });
        }
        let w = self.osc_freq;
        Ok(AmplitudeSet {
            t,
            phi_m: self.phi_amplitude(),
            c_m: 2.0 / (w * w),
            s_m: t / w,
        })
    }

    /// Envelope kernels for any `t > 0`.
    pub fn envelope(&self, t: f64) -> Result<AmplitudeSet> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("t", t, "time must be positive"));
        }
        if t >= self.period() {
            return self.amplitudes(t);
        }
        let w = self.osc_freq;
        let x = w * t;
        let (a, b) = self.phi_coefficients();
        let phi_at = |x: f64| (a * (x.cos() - 1.0) - b * x.sin()).abs();
        // critical points of A(cos x − 1) − B sin x sit at x₀ and x₀ + π
        let x0 = (-b).atan2(a).rem_euclid(PI);
        let phi_m = [x0, x0 + PI]
            .into_iter()
            .filter(|&c| c <= x)
            .map(phi_at)
            .fold(phi_at(x), f64::max);
        Ok(AmplitudeSet {
            t,
            phi_m,
            c_m: (1.0 - x.min(PI).cos()) / (w * w),
            s_m: t / w - x.sin() / (w * w),
        })
    }

    /// `16 f_m² / (Ω ω_gr²)` for phase 0; in general `4Ωφ_m²`.
    pub fn t_max(&self) -> f64 {
        let phi = self.phi_amplitude();
        4.0 * self.osc_freq * phi * phi
    }

    /// Laser power carrying `photons` photons.
    pub fn power(&self, photons: f64, reflections: f64) -> f64 {
        self.hbar * self.laser_freq * photons / reflections * self.c_light / (2.0 * self.length)
    }

    pub fn terms(&self, a: &AmplitudeSet, photons: f64) -> NoiseTerms {
        let g2 = self.g * self.g;
        let phi2 = a.phi_m * a.phi_m;
        NoiseTerms {
            shot: 1.0 / (16.0 * g2 * phi2 * photons),
            sql: a.c_m / (4.0 * phi2),
            back_action: g2 * a.s_m * a.s_m * photons / (4.0 * phi2),
        }
    }

    pub fn bounds(&self, t: f64, reflections: f64) -> Result<OperatingBounds> {
        if !(reflections.is_finite() && reflections > 0.0) {
            return Err(Error::invalid("reflections", reflections, "must be positive"));
        }
        let a = self.envelope(t)?;
        let g2 = self.g * self.g;
        let phi2 = a.phi_m * a.phi_m;
        let n_min = 1.0 / (16.0 * g2 * phi2);
        let n_max = 4.0 * phi2 / (g2 * a.s_m * a.s_m);
        let n_opt = 1.0 / (2.0 * g2 * a.s_m);
        Ok(OperatingBounds {
            t,
            h: self.h,
            n_min,
            n_max,
            n_opt,
            t_max: self.t_max(),
            p_min: self.power(n_min, reflections),
            p_max: self.power(n_max, reflections),
            reflections,
            sql_floor: a.c_m / (4.0 * phi2),
            window_open: n_min <= n_max,
        })
    }

    pub fn detect(&self, t: f64, photons: f64) -> Result<Detection> {
        if !(photons.is_finite() && photons >= 0.0) {
            return Err(Error::invalid("N", photons, "photon number must be non-negative"));
        }
        let a = self.envelope(t)?;
        let terms = self.terms(&a, photons);
        let sigma2 = terms.total();
        Ok(Detection {
            t,
            photons,
            sigma2,
            detectable: sigma2 <= 1.0,
            terms,
        })
    }

    /// Strain at which σ²(t, N) = 1, by log-space bisection on
    /// [`H_BRACKET`]; `None` when the root lies outside the bracket.
    pub fn min_detectable_strain(&self, t: f64, photons: f64) -> Result<Option<f64>> {
        let sigma2 = |h: f64| self.with_strain(h).detect(t, photons).map(|d| d.sigma2);
        let (mut lo, mut hi) = (H_BRACKET.0.ln(), H_BRACKET.1.ln());
        if sigma2(lo.exp())? <= 1.0 || sigma2(hi.exp())? > 1.0 {
            return Ok(None);
        }
        while hi - lo > H_BISECTION_REL_TOL * 0.5 {
            let mid = 0.5 * (lo + hi);
            if sigma2(mid.exp())? > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some((0.5 * (lo + hi)).exp()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSet {
    pub t: f64,
    pub phi_m: f64,
    pub c_m: f64,
    pub s_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseTerms {
    pub shot: f64,
    pub sql: f64,
    pub back_action: f64,
}

impl NoiseTerms {
    pub fn total(&self) -> f64 {
        self.shot + self.sql + self.back_action
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingBounds {
    pub t: f64,
    pub h: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub n_opt: f64,
    pub t_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub reflections: f64,
    /// N-independent part of σ², `c_m / (4φ_m²)`.
    pub sql_floor: f64,
    pub window_open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub t: f64,
    pub photons: f64,
    pub sigma2: f64,
    pub detectable: bool,
    pub terms: NoiseTerms,
}

pub fn amplitudes(t: f64, p: &ModelParams, src: &GWSource, k: &PhysicalConstants) -> Result<AmplitudeSet> {
    Detector::new(p, src, k)?.amplitudes(t)
}

pub fn operating_bounds(
    t: f64,
    p: &ModelParams,
    src: &GWSource,
    k: &PhysicalConstants,
    reflections: f64,
) -> Result<OperatingBounds> {
    Detector::new(p, src, k)?.bounds(t, reflections)
}

pub fn detectability(
    t: f64,
    photons: f64,
    p: &ModelParams,
    src: &GWSource,
    k: &PhysicalConstants,
) -> Result<Detection> {
    Detector::new(p, src, k)?.detect(t, photons)
}

/// One axis of a sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl Axis {
    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            points: 1,
            log: false,
        }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            log: true,
        }
    }

    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            log: false,
        }
    }

    /// `value` or `start:stop:points[:log|:lin]`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("malformed axis `{text}`; expected `x` or `a:b:n[:log]`"));
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let axis = match parts.as_slice() {
            [v] => Self::single(num(v)?),
            [a, b, n] | [a, b, n, _] => Self {
                start: num(a)?,
                stop: num(b)?,
                points: n.trim().parse().map_err(|_| bad())?,
                log: match parts.get(3).map(|s| s.trim()) {
                    None | Some("lin") => false,
                    Some("log") => true,
                    Some(_) => return Err(bad()),
                },
            },
            _ => return Err(bad()),
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidInput("empty axis range".into()));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidInput("axis bounds must be finite".into()));
        }
        if self.points > 1 && self.start == self.stop {
            return Err(Error::InvalidInput("axis with several points needs distinct bounds".into()));
        }
        if self.log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::InvalidInput("log axis bounds must be positive".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let u = i as f64 / last;
                if i == 0 {
                    self.start
                } else if i + 1 == self.points {
                    self.stop
                } else if self.log {
                    (self.start.ln() + u * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + u * (self.stop - self.start)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    pub t: Axis,
    pub photons: Axis,
    pub h: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub photons: f64,
    pub h: f64,
    pub sigma2: f64,
    /// σ² capped at 1, as plotted.
    pub sigma2_clipped: f64,
    /// Leading-order detector mean `4Ngφ_m`.
    pub mean: f64,
    /// Leading-order variance `N + 4N²g²c_m + 4N³g⁴s_m²`.
    pub variance: f64,
    pub detectable: bool,
    pub h_min: Option<f64>,
}

fn sweep_row(det: &Detector, t: f64, photons: f64, h: f64) -> Result<SweepRow> {
    let d = det.with_strain(h);
    let a = d.envelope(t)?;
    let detection = d.detect(t, photons)?;
    let g = d.g;
    let n = photons;
    Ok(SweepRow {
        t,
        photons,
        h,
        sigma2: detection.sigma2,
        sigma2_clipped: detection.sigma2.min(1.0),
        mean: 4.0 * n * g * a.phi_m,
        variance: n + 4.0 * n * n * g * g * a.c_m + 4.0 * n * n * n * g.powi(4) * a.s_m * a.s_m,
        detectable: detection.detectable,
        h_min: d.min_detectable_strain(t, photons)?,
    })
}

fn grid_points(spec: &SweepSpec) -> Result<Vec<(f64, f64, f64)>> {
    spec.t.validate()?;
    spec.photons.validate()?;
    spec.h.validate()?;
    let (ts, ns, hs) = (spec.t.values(), spec.photons.values(), spec.h.values());
    if let Some(&t) = ts.iter().find(|&&t| t <= 0.0) {
        return Err(Error::invalid("t", t, "sweep times must be positive"));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < 0.0) {
        return Err(Error::invalid("N", n, "photon numbers must be non-negative"));
    }
    if let Some(&h) = hs.iter().find(|&&h| h <= 0.0) {
        return Err(Error::invalid("h", h, "strain must be positive"));
    }
    let mut points = Vec::with_capacity(ts.len() * ns.len() * hs.len());
    for &t in &ts {
        for &n in &ns {
            for &h in &hs {
                points.push((t, n, h));
            }
        }
    }
    Ok(points)
}

/// Row-major (t, then N, then h) grid; row order is independent of how the
/// rows are scheduled.
pub fn sweep_grid(det: &Detector, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let points = grid_points(spec)?;
    par::map(&points, |&(t, n, h)| sweep_row(det, t, n, h)).into_iter().collect()
}

pub fn sweep_grid_sequential(det: &Detector, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let points = grid_points(spec)?;
    par::map_sequential(&points, |&(t, n, h)| sweep_row(det, t, n, h)).into_iter().collect()
}

/// σ²(t) at the optimal photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalRow {
    pub t: f64,
    pub n_opt: f64,
    pub sigma2: f64,
    pub sigma2_clipped: f64,
    pub t_max: f64,
}

pub fn sigma2_at_optimum(det: &Detector, times: &Axis) -> Result<Vec<OptimalRow>> {
    times.validate()?;
    let t_max = det.t_max();
    times
        .values()
        .into_iter()
        .map(|t| {
            let b = det.bounds(t, DEFAULT_REFLECTIONS)?;
            let sigma2 = det.detect(t, b.n_opt)?.sigma2;
            Ok(OptimalRow {
                t,
                n_opt: b.n_opt,
                sigma2,
                sigma2_clipped: sigma2.min(1.0),
                t_max,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrainRow {
    pub t: f64,
    pub n_opt: f64,
    pub h_min: Option<f64>,
}

/// Smallest detectable strain at the optimal photon number.
pub fn min_strain_curve(det: &Detector, times: &Axis) -> Result<Vec<StrainRow>> {
    times.validate()?;
    let ts = times.values();
    par::map(&ts, |&t| {
        let n_opt = det.bounds(t, DEFAULT_REFLECTIONS)?.n_opt;
        Ok(StrainRow {
            t,
            n_opt,
            h_min: det.min_detectable_strain(t, n_opt)?,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRow {
    pub t: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

pub fn power_window(det: &Detector, times: &Axis, reflections: f64) -> Result<Vec<PowerRow>> {
    times.validate()?;
    times
        .values()
        .into_iter()
        .map(|t| {
            let b = det.bounds(t, reflections)?;
            Ok(PowerRow {
                t,
                n_min: b.n_min,
                n_max: b.n_max,
                p_min: b.p_min,
                p_max: b.p_max,
            })
        })
        .collect()
}
