//! Direct RK4 integration of
//!
//! ```text
//! dρ/dt = −i[H_t, ρ] + λ(bρb† − ½{b†b, ρ})
//! H_t   = ω a†a + Ω b†b + (g a†a + f(t))(b + b†)
//! ```
//!
//! on the truncated space. A model with `laser_freq = 0` integrates in the
//! frame rotating with the laser.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::space::{DensityMatrix, Leakage, TruncatedSpace};
use crate::error::{Error, Result};
use crate::params::Model;

pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_final: f64,
    /// Largest population allowed in the top two levels of either factor.
    pub leakage_tol: f64,
    /// Output times in addition to `t_final`; sorted on use.
    pub outputs: Vec<f64>,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_final: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            scheme: Scheme::Rk4,
            t_final,
            leakage_tol: 1e-8,
            outputs: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_outputs(mut self, outputs: Vec<f64>) -> Self {
        self.outputs = outputs;
        self
    }

    pub fn with_leakage_tol(mut self, leakage_tol: f64) -> Self {
        self.leakage_tol = leakage_tol;
        self
    }

    /// `0.01 / max(Ω, g · photon_cut, |ω|)`.
    pub fn max_step(model: &Model, space: &TruncatedSpace) -> f64 {
        let rate = model
            .osc_freq
            .max(model.coupling.abs() * space.photon_cut as f64)
            .max(model.laser_freq.abs());
        0.01 / rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", self.dt, "step must be positive"));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::invalid("t_final", self.t_final, "must be non-negative"));
        }
        if !(self.leakage_tol > 0.0) {
            return Err(Error::invalid("leakage_tol", self.leakage_tol, "must be positive"));
        }
        if let Some(&t) = self.outputs.iter().find(|&&t| !(0.0..=self.t_final).contains(&t)) {
            return Err(Error::invalid("outputs", t, "output times must lie in [0, t_final]"));
        }
        Ok(())
    }

    fn output_times(&self) -> Vec<f64> {
        let mut times = self.outputs.clone();
        times.push(self.t_final);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

/// One photon block in split real/imaginary form, column-major with a ring
/// of zeros around it so the stencil needs no edge cases.
pub(crate) struct Block {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Block {
    fn zeros(osc_levels: usize) -> Self {
        let s = osc_levels + 2;
        Self {
            re: vec![0.0; s * s],
            im: vec![0.0; s * s],
        }
    }
}

/// Precomputed operator data for one model on one space.
///
/// The generator never mixes photon numbers, so `ρ` splits into
/// `osc_levels × osc_levels` blocks `(n, m)` that evolve independently.
pub(crate) struct Generator {
    photon_levels: usize,
    osc_levels: usize,
    /// `sqrt(j)` for `j = 0..=osc_levels`
    sqrt: Vec<f64>,
    /// `Ω j` and `½λ j`
    osc_energy: Vec<f64>,
    half_damping: Vec<f64>,
    model: Model,
}

impl Generator {
    pub(crate) fn new(model: &Model, space: &TruncatedSpace) -> Self {
        let o = space.osc_levels();
        Self {
            photon_levels: space.photon_levels(),
            osc_levels: o,
            sqrt: (0..=o).map(|k| (k as f64).sqrt()).collect(),
            osc_energy: (0..o).map(|j| model.osc_freq * j as f64).collect(),
            half_damping: (0..o).map(|j| 0.5 * model.damping * j as f64).collect(),
            model: *model,
        }
    }

    fn dim(&self) -> usize {
        self.photon_levels * self.osc_levels
    }

    /// `out = L_t` on photon block `(n, m)`. Only the interior of `out` is
    /// written, so its zero ring survives.
    fn apply_block(&self, t: f64, n: usize, m: usize, x: &Block, out: &mut Block) {
        let o = self.osc_levels;
        let s = o + 2;
        let md = &self.model;
        let f = md.force.at(t);
        let (f_row, f_col) = (md.coupling * n as f64 + f, md.coupling * m as f64 + f);
        let free = md.laser_freq * (n as f64 - m as f64);
        let sq = &self.sqrt;
        let (lo, hi) = (&sq[..o], &sq[1..=o]);
        let (energy, half_damping) = (&self.osc_energy[..o], &self.half_damping[..o]);
        for k in 0..o {
            let q = (k + 1) * s;
            // level j of this column sits at q + j + 1
            let (xr_m, xr_0, xr_p) = (&x.re[q..q + o], &x.re[q + 1..q + 1 + o], &x.re[q + 2..q + 2 + o]);
            let (xi_m, xi_0, xi_p) = (&x.im[q..q + o], &x.im[q + 1..q + 1 + o], &x.im[q + 2..q + 2 + o]);
            let (pr, pi) = (&x.re[q - s + 1..q - s + 1 + o], &x.im[q - s + 1..q - s + 1 + o]);
            let (nr_0, ni_0) = (&x.re[q + s + 1..q + s + 1 + o], &x.im[q + s + 1..q + s + 1 + o]);
            let (nr_p, ni_p) = (&x.re[q + s + 2..q + s + 2 + o], &x.im[q + s + 2..q + s + 2 + o]);
            let (or, oi) = (&mut out.re[q + 1..q + 1 + o], &mut out.im[q + 1..q + 1 + o]);
            let shift = free - md.osc_freq * k as f64;
            let damp = 0.5 * md.damping * k as f64;
            let (cp, cn) = (f_col * sq[k], f_col * sq[k + 1]);
            let jump = md.damping * sq[k + 1];
            for j in 0..o {
                let e = shift + energy[j];
                let d = damp + half_damping[j];
                let hr = e * xr_0[j] + f_row * (lo[j] * xr_m[j] + hi[j] * xr_p[j]);
                let hi_ = e * xi_0[j] + f_row * (lo[j] * xi_m[j] + hi[j] * xi_p[j]);
                let w = jump * hi[j];
                // −i[H, ρ] with the right action entering as +i, then damping
                or[j] = hi_ - d * xr_0[j] - cp * pi[j] - cn * ni_0[j] + w * nr_p[j];
                oi[j] = -hr - d * xi_0[j] + cp * pr[j] + cn * nr_0[j] + w * ni_p[j];
            }
        }
    }

    /// `out = L_t(ρ)`; both column-major `dim × dim`.
    pub(crate) fn apply(&self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let mut x = Block::zeros(self.osc_levels);
        let mut y = Block::zeros(self.osc_levels);
        for m in 0..self.photon_levels {
            for n in 0..self.photon_levels {
                self.gather(rho, n, m, &mut x);
                self.apply_block(t, n, m, &x, &mut y);
                self.scatter(&y, n, m, out);
            }
        }
    }

    fn gather(&self, full: &[Complex64], n: usize, m: usize, block: &mut Block) {
        let (o, d) = (self.osc_levels, self.dim());
        let s = o + 2;
        for k in 0..o {
            let at = (m * o + k) * d + n * o;
            let q = (k + 1) * s + 1;
            for (j, z) in full[at..at + o].iter().enumerate() {
                block.re[q + j] = z.re;
                block.im[q + j] = z.im;
            }
        }
    }

    fn scatter(&self, block: &Block, n: usize, m: usize, full: &mut [Complex64]) {
        let (o, d) = (self.osc_levels, self.dim());
        let s = o + 2;
        for k in 0..o {
            let at = (m * o + k) * d + n * o;
            let q = (k + 1) * s + 1;
            for (j, z) in full[at..at + o].iter_mut().enumerate() {
                *z = Complex64::new(block.re[q + j], block.im[q + j]);
            }
        }
    }

    /// Overwrites the blocks above the diagonal with the adjoints of those
    /// below it.
    fn fill_upper(&self, full: &mut [Complex64]) {
        let (o, d) = (self.osc_levels, self.dim());
        for c in 0..d {
            let first = (c / o + 1) * o;
            for r in first..d {
                full[r * d + c] = full[c * d + r].conj();
            }
        }
    }
}

/// Right-hand side of the master equation at time `t`.
pub fn apply_generator(
    rho: &DensityMatrix,
    t: f64,
    model: &Model,
    space: &TruncatedSpace,
) -> Result<DMatrix<Complex64>> {
    if rho.space != *space {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: rho.dim(),
        });
    }
    let gen = Generator::new(model, space);
    let mut out = DMatrix::zeros(space.dim(), space.dim());
    gen.apply(t, rho.entries.as_slice(), out.as_mut_slice());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub steps: usize,
    /// Largest `|Tr ρ(t) − Tr ρ(0)|` seen.
    pub max_trace_drift: f64,
    /// Largest anti-Hermitian part removed by one symmetrisation.
    pub max_hermiticity_drift: f64,
    pub max_leakage: Leakage,
}

/// Stepper holding the state and RK4 work buffers.
pub struct Integrator {
    gen: Generator,
    dt: f64,
    leakage_tol: f64,
    state: DensityMatrix,
    t: f64,
    trace0: f64,
    bufs: [Block; 4],
    pub diagnostics: Diagnostics,
}

impl Integrator {
    pub fn new(rho0: DensityMatrix, model: &Model, dt: f64, leakage_tol: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", dt, "step must be positive"));
        }
        let o = rho0.space.osc_levels();
        let trace0 = rho0.trace().re;
        Ok(Self {
            gen: Generator::new(model, &rho0.space),
            dt,
            leakage_tol,
            state: rho0,
            t: 0.0,
            trace0,
            bufs: std::array::from_fn(|_| Block::zeros(o)),
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// One RK4 step, block by block so each block stays in cache. Only
    /// blocks `n ≥ m` are integrated; [`Self::advance_to`] restores the rest
    /// by Hermiticity.
    fn step(&mut self, h: f64) -> Result<()> {
        let t = self.t;
        let gen = &self.gen;
        let [y, k, acc, tmp] = &mut self.bufs;
        let full = self.state.entries.as_mut_slice();
        let mut herm: f64 = 0.0;
        for n in 0..gen.photon_levels {
            for m in 0..=n {
                gen.gather(full, n, m, y);
                gen.apply_block(t, n, m, y, k);
                rk4_stage(y, k, acc, tmp, 0.5 * h, true);
                gen.apply_block(t + 0.5 * h, n, m, tmp, k);
                rk4_stage(y, k, acc, tmp, 0.5 * h, false);
                gen.apply_block(t + 0.5 * h, n, m, tmp, k);
                rk4_stage(y, k, acc, tmp, h, false);
                gen.apply_block(t + h, n, m, tmp, k);
                for (part, (ks, accs)) in [(&mut y.re, (&k.re, &acc.re)), (&mut y.im, (&k.im, &acc.im))] {
                    for i in 0..part.len() {
                        part[i] += (accs[i] + ks[i]) * (h / 6.0);
                    }
                }
                if n == m {
                    herm = herm.max(symmetrise(y, gen.osc_levels));
                }
                gen.scatter(y, n, m, full);
            }
        }
        self.t += h;
        self.diagnostics.steps += 1;
        self.diagnostics.max_hermiticity_drift = self.diagnostics.max_hermiticity_drift.max(herm);
        let drift = (self.state.trace().re - self.trace0).abs();
        if !drift.is_finite() || drift > TRACE_DRIFT_LIMIT {
            return Err(Error::StepSize { drift, t: self.t });
        }
        self.diagnostics.max_trace_drift = self.diagnostics.max_trace_drift.max(drift);
        Ok(())
    }

    /// Advances to `target` in equal steps no longer than `dt`, then checks
    /// the truncation leakage.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        let span = target - self.t;
        if span < 0.0 {
            return Err(Error::invalid("t", target, "cannot integrate backwards"));
        }
        if span > 0.0 {
            let steps = (span / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                self.step(h)?;
            }
            self.t = target;
            self.gen.fill_upper(self.state.entries.as_mut_slice());
        }
        self.check_leakage()
    }

    fn check_leakage(&mut self) -> Result<()> {
        let leak = self.state.leakage();
        let d = &mut self.diagnostics.max_leakage;
        d.photon = d.photon.max(leak.photon);
        d.oscillator = d.oscillator.max(leak.oscillator);
        let (factor, leakage) = if leak.photon >= leak.oscillator {
            ("photon", leak.photon)
        } else {
            ("oscillator", leak.oscillator)
        };
        if leakage > self.leakage_tol {
            return Err(Error::TruncationTooSmall {
                factor,
                leakage,
                tolerance: self.leakage_tol,
                t: self.t,
            });
        }
        Ok(())
    }
}

/// Folds slope `k` into `acc` (weight 1 on the first stage, 2 after) and
/// sets `tmp = y + c k`.
fn rk4_stage(y: &Block, k: &Block, acc: &mut Block, tmp: &mut Block, c: f64, first: bool) {
    let w = if first { 1.0 } else { 2.0 };
    let keep = if first { 0.0 } else { 1.0 };
    for (ys, ks, accs, tmps) in [(&y.re, &k.re, &mut acc.re, &mut tmp.re), (&y.im, &k.im, &mut acc.im, &mut tmp.im)] {
        for i in 0..ys.len() {
            accs[i] = keep * accs[i] + w * ks[i];
            tmps[i] = ys[i] + c * ks[i];
        }
    }
}

/// Replaces the `d × d` interior of a diagonal block by its Hermitian part
/// and returns the largest removed entry.
fn symmetrise(b: &mut Block, d: usize) -> f64 {
    let s = d + 2;
    let at = |r: usize, c: usize| (c + 1) * s + r + 1;
    let mut worst: f64 = 0.0;
    for c in 0..d {
        for r in 0..c {
            let (u, l) = (at(r, c), at(c, r));
            let (dr, di) = (b.re[u] - b.re[l], b.im[u] + b.im[l]);
            worst = worst.max(0.5 * dr.hypot(di));
            let (mr, mi) = (0.5 * (b.re[u] + b.re[l]), 0.5 * (b.im[u] - b.im[l]));
            b.re[u] = mr;
            b.im[u] = mi;
            b.re[l] = mr;
            b.im[l] = -mi;
        }
        let i = at(c, c);
        worst = worst.max(b.im[i].abs());
        b.im[i] = 0.0;
    }
    worst
}

#[derive(Debug, Clone)]
pub struct MasterTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Diagnostics,
}

/// RK4 trajectory sampled at `cfg.outputs` and `cfg.t_final`.
pub fn evolve_master(
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    model: &Model,
    space: &TruncatedSpace,
) -> Result<MasterTrajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let diagnostics = evolve_master_with(rho0, cfg, model, space, |t, rho| {
        times.push(t);
        states.push(rho.clone());
        Ok(())
    })?;
    Ok(MasterTrajectory {
        times,
        states,
        diagnostics,
    })
}

/// Like [`evolve_master`] but hands each output state to `observe` instead
/// of storing it.
pub fn evolve_master_with<F>(
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    model: &Model,
    space: &TruncatedSpace,
    mut observe: F,
) -> Result<Diagnostics>
where
    F: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    cfg.validate()?;
    if rho0.space != *space {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: rho0.dim(),
        });
    }
    let mut integ = Integrator::new(rho0.clone(), model, cfg.dt, cfg.leakage_tol)?;
    for t in cfg.output_times() {
        integ.advance_to(t)?;
        observe(t, integ.state())?;
    }
    Ok(integ.diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::space::{coherent_amplitudes, fock_amplitudes};
    use crate::params::ReducedForce;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(g: f64, force: ReducedForce) -> Model {
        Model::reduced(1.0, 0.1, g, force).unwrap()
    }

    fn random_state(space: TruncatedSpace, seed: u64) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = space.dim();
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        DensityMatrix::from_matrix(space, rho / tr).unwrap()
    }

    /// Dense reference generator built from explicit operator matrices.
    fn dense_generator(rho: &DMatrix<Complex64>, t: f64, m: &Model, space: &TruncatedSpace) -> DMatrix<Complex64> {
        let (p, o) = (space.photon_levels(), space.osc_levels());
        let ip = DMatrix::<Complex64>::identity(p, p);
        let io = DMatrix::<Complex64>::identity(o, o);
        let b1 = DMatrix::from_fn(o, o, |r, c| {
            Complex64::new(if c == r + 1 { (c as f64).sqrt() } else { 0.0 }, 0.0)
        });
        let n1 = DMatrix::from_fn(p, p, |r, c| Complex64::new(if r == c { r as f64 } else { 0.0 }, 0.0));
        let b = ip.kronecker(&b1);
        let bd = b.adjoint();
        let na = n1.kronecker(&io);
        let nb = &bd * &b;
        let x = &b + &bd;
        let f = Complex64::new(m.force.at(t), 0.0);
        let id = DMatrix::<Complex64>::identity(p * o, p * o);
        let h = &na * Complex64::new(m.laser_freq, 0.0)
            + &nb * Complex64::new(m.osc_freq, 0.0)
            + (&na * Complex64::new(m.coupling, 0.0) + id * f) * &x;
        let i = Complex64::new(0.0, 1.0);
        let l = Complex64::new(m.damping, 0.0);
        (&h * rho - rho * &h) * (-i) + (&b * rho * &bd - (&nb * rho + rho * &nb) * Complex64::new(0.5, 0.0)) * l
    }

    #[test]
    fn matches_dense_operator_algebra() {
        let space = TruncatedSpace::new(3, 4).unwrap();
        let m = model(0.3, ReducedForce::Sinusoid { amplitude: 0.4, freq: 2.0, phase: 0.3 }).with_laser_freq(1.7);
        let rho = random_state(space, 7);
        let fast = apply_generator(&rho, 0.8, &m, &space).unwrap();
        let slow = dense_generator(&rho.entries, 0.8, &m, &space);
        assert!((fast - slow).norm() < 1e-13);
    }

    #[test]
    fn ground_state_is_stationary() {
        let space = TruncatedSpace::new(3, 5).unwrap();
        let rho = DensityMatrix::product(space, &fock_amplitudes(0, 3), &fock_amplitudes(0, 5)).unwrap();
        let d = apply_generator(&rho, 0.0, &model(0.0, ReducedForce::Zero), &space).unwrap();
        assert_eq!(d.norm(), 0.0);
    }

    #[test]
    fn generator_is_traceless() {
        let space = TruncatedSpace::new(4, 6).unwrap();
        let m = model(0.2, ReducedForce::Sinusoid { amplitude: 0.5, freq: 3.0, phase: 0.0 });
        for seed in 0..5 {
            let d = apply_generator(&random_state(space, seed), 1.3, &m, &space).unwrap();
            assert!(d.trace().norm() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = TruncatedSpace::new(2, 3).unwrap();
        let b = TruncatedSpace::new(3, 2).unwrap();
        let rho = random_state(a, 1);
        assert!(matches!(
            apply_generator(&rho, 0.0, &model(0.1, ReducedForce::Zero), &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_phonon_decays_exponentially() {
        let space = TruncatedSpace::new(1, 4).unwrap();
        let rho0 = DensityMatrix::product(space, &fock_amplitudes(0, 1), &fock_amplitudes(1, 4)).unwrap();
        let m = model(0.0, ReducedForce::Zero);
        let cfg = IntegratorConfig::new(0.01, 5.0).unwrap().with_outputs(vec![1.0, 2.5]).with_leakage_tol(1.0);
        let traj = evolve_master(&rho0, &cfg, &m, &space).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.osc_number() - (-0.1 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn damped_coherent_oscillator() {
        let space = TruncatedSpace::new(1, 30).unwrap();
        let beta = Complex64::new(1.2, 0.5);
        let rho0 = DensityMatrix::product(space, &fock_amplitudes(0, 1), &coherent_amplitudes(beta, 30)).unwrap();
        let m = model(0.0, ReducedForce::Zero);
        let cfg = IntegratorConfig::new(0.005, 4.0).unwrap().with_outputs(vec![1.0, 2.0, 3.0]);
        let traj = evolve_master(&rho0, &cfg, &m, &space).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let expected = beta * (-Complex64::new(0.05, 1.0) * *t).exp();
            assert!((s.osc_lowering() - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn leakage_breach_names_the_factor() {
        let space = TruncatedSpace::new(2, 3).unwrap();
        let rho0 = DensityMatrix::coherent_ground(space, Complex64::new(0.0, 0.0));
        let m = model(0.0, ReducedForce::Sinusoid { amplitude: 3.0, freq: 1.0, phase: 0.0 });
        let cfg = IntegratorConfig::new(0.01, 2.0).unwrap().with_leakage_tol(1.0);
        assert!(evolve_master(&rho0, &cfg, &m, &space).is_ok());
        let strict = cfg.clone().with_leakage_tol(1e-8);
        match evolve_master(&rho0, &strict, &m, &space) {
            Err(Error::TruncationTooSmall { factor, .. }) => assert_eq!(factor, "oscillator"),
            other => panic!("expected a truncation error, got {other:?}"),
        }
    }

    #[test]
    fn oversized_step_reports_drift() {
        let space = TruncatedSpace::new(2, 10).unwrap();
        let rho0 = DensityMatrix::coherent_ground(space, Complex64::new(0.0, 1.0));
        let m = Model::reduced(40.0, 2.0, 1.0, ReducedForce::Zero).unwrap();
        let cfg = IntegratorConfig::new(0.5, 5.0).unwrap().with_leakage_tol(1.0);
        assert!(matches!(evolve_master(&rho0, &cfg, &m, &space), Err(Error::StepSize { .. })));
    }

    #[test]
    fn photon_diagonal_is_conserved() {
        let space = TruncatedSpace::new(8, 12).unwrap();
        let rho0 = DensityMatrix::coherent_ground(space, Complex64::new(0.0, 1.0));
        let m = model(0.2, ReducedForce::Sinusoid { amplitude: 0.1, freq: 3.0, phase: 0.0 });
        let cfg = IntegratorConfig::new(0.004, 2.0).unwrap().with_leakage_tol(1e-3);
        let traj = evolve_master(&rho0, &cfg, &m, &space).unwrap();
        let (a, b) = (rho0.reduced_photon(), traj.states[0].reduced_photon());
        for n in 0..space.photon_levels() {
            assert!((a[(n, n)] - b[(n, n)]).norm() < 1e-10);
        }
    }
}
