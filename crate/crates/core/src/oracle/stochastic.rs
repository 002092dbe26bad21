//! Linear (unnormalised) unraveling of the master equation:
//!
//! ```text
//! dψ = −(iH_t + ½λ b†b) ψ dt + sqrt(λ) b ψ dW
//! ```
//!
//! so that `ρ_t = E |ψ_t⟩⟨ψ_t|`. Each step applies an RK4 step of the drift
//! followed by an Ito increment `sqrt(λ) ΔW b ψ` evaluated at the start of
//! the step.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::space::{coherent_amplitudes, fock_amplitudes, product_vector, DensityMatrix, TruncatedSpace};
use crate::error::{Error, Result};
use crate::par;
use crate::params::Model;

/// Trajectories per work unit; fixed so results do not depend on scheduling.
const CHUNK: usize = 64;
/// Work units evaluated together before their sums are folded in order.
const WAVE: usize = 16;
/// Largest tolerated fraction of aborted trajectories.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub seed: u64,
    pub dt: f64,
    /// Also accumulate the full composite state (memory ~ dim²).
    pub keep_state: bool,
}

impl TrajectoryEnsemble {
    pub fn new(n_traj: usize, seed: u64, dt: f64) -> Result<Self> {
        let e = Self {
            n_traj,
            seed,
            dt,
            keep_state: false,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn with_state(mut self) -> Self {
        self.keep_state = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::InvalidInput("an ensemble needs at least one trajectory".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", self.dt, "step must be positive"));
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / nf).sqrt(),
        }
    }

    /// `|mean − value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.std_error
    }
}

#[derive(Debug, Clone)]
pub struct StochasticResult {
    pub t: f64,
    pub n_traj: usize,
    pub aborted: usize,
    pub trace: Estimate,
    /// `⟨b†b⟩`
    pub osc_number: Estimate,
    /// Ensemble mean of the reduced radiation state.
    pub reduced_photon: DMatrix<Complex64>,
    /// Entrywise standard errors of `reduced_photon` (real and imaginary
    /// parts combined in quadrature).
    pub reduced_photon_se: DMatrix<f64>,
    pub state: Option<DensityMatrix>,
}

/// State vector in split real/imaginary form. Photon block `n` occupies
/// `n·s .. (n+1)·s` with `s = osc_levels + 2`; the first and last slot of
/// each block stay zero so the stencil has no edge cases.
#[derive(Clone)]
struct Split {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Split {
    fn zeros(len: usize) -> Self {
        Self {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }
}

/// Drift `Gψ = −(iH_t + ½λ b†b)ψ` and the jump operator `b`.
struct Propagator {
    model: Model,
    photon_levels: usize,
    osc_levels: usize,
    sqrt: Vec<f64>,
    osc_energy: Vec<f64>,
    half_damping: Vec<f64>,
}

impl Propagator {
    fn new(model: &Model, space: &TruncatedSpace) -> Self {
        let o = space.osc_levels();
        Self {
            model: *model,
            photon_levels: space.photon_levels(),
            osc_levels: o,
            sqrt: (0..=o).map(|k| (k as f64).sqrt()).collect(),
            osc_energy: (0..o).map(|j| model.osc_freq * j as f64).collect(),
            half_damping: (0..o).map(|j| 0.5 * model.damping * j as f64).collect(),
        }
    }

    fn stride(&self) -> usize {
        self.osc_levels + 2
    }

    fn len(&self) -> usize {
        self.photon_levels * self.stride()
    }

    fn pack(&self, psi: &[Complex64]) -> Split {
        let (o, s) = (self.osc_levels, self.stride());
        let mut x = Split::zeros(self.len());
        for (r, z) in psi.iter().enumerate() {
            let at = (r / o) * s + r % o + 1;
            x.re[at] = z.re;
            x.im[at] = z.im;
        }
        x
    }

    fn unpack(&self, x: &Split) -> Vec<Complex64> {
        let (o, s) = (self.osc_levels, self.stride());
        (0..self.photon_levels * o)
            .map(|r| {
                let at = (r / o) * s + r % o + 1;
                Complex64::new(x.re[at], x.im[at])
            })
            .collect()
    }

    fn drift(&self, t: f64, x: &Split, out: &mut Split) {
        let m = &self.model;
        let (o, s) = (self.osc_levels, self.stride());
        let f = m.force.at(t);
        let (lo, hi) = (&self.sqrt[..o], &self.sqrt[1..=o]);
        let (energy, half_damping) = (&self.osc_energy[..o], &self.half_damping[..o]);
        for n in 0..self.photon_levels {
            let fnn = m.coupling * n as f64 + f;
            let shift = m.laser_freq * n as f64;
            let q = n * s;
            let (xr_m, xr_0, xr_p) = (&x.re[q..q + o], &x.re[q + 1..q + 1 + o], &x.re[q + 2..q + 2 + o]);
            let (xi_m, xi_0, xi_p) = (&x.im[q..q + o], &x.im[q + 1..q + 1 + o], &x.im[q + 2..q + 2 + o]);
            let (or, oi) = (&mut out.re[q + 1..q + 1 + o], &mut out.im[q + 1..q + 1 + o]);
            for j in 0..o {
                let e = shift + energy[j];
                let hr = e * xr_0[j] + fnn * (lo[j] * xr_m[j] + hi[j] * xr_p[j]);
                let hi_ = e * xi_0[j] + fnn * (lo[j] * xi_m[j] + hi[j] * xi_p[j]);
                or[j] = hi_ - half_damping[j] * xr_0[j];
                oi[j] = -hr - half_damping[j] * xi_0[j];
            }
        }
    }

    /// `out = c · bψ`.
    fn jump(&self, c: f64, x: &Split, out: &mut Split) {
        let (o, s) = (self.osc_levels, self.stride());
        let hi = &self.sqrt[1..=o];
        for n in 0..self.photon_levels {
            let q = n * s;
            let (xr_p, xi_p) = (&x.re[q + 2..q + 2 + o], &x.im[q + 2..q + 2 + o]);
            let (or, oi) = (&mut out.re[q + 1..q + 1 + o], &mut out.im[q + 1..q + 1 + o]);
            for j in 0..o {
                or[j] = c * hi[j] * xr_p[j];
                oi[j] = c * hi[j] * xi_p[j];
            }
        }
    }

    /// `ψ ← ψ + h·RK4(G) + sqrt(λ) ΔW bψ₀`.
    fn step(&self, t: f64, h: f64, dw: f64, psi: &mut Split, bufs: &mut [Split; 4]) {
        let [k, acc, tmp, jump] = bufs;
        self.jump(self.model.damping.sqrt() * dw, psi, jump);
        self.drift(t, psi, k);
        stage(psi, k, acc, tmp, 0.5 * h, 1.0, 0.0);
        self.drift(t + 0.5 * h, tmp, k);
        stage(psi, k, acc, tmp, 0.5 * h, 2.0, 1.0);
        self.drift(t + 0.5 * h, tmp, k);
        stage(psi, k, acc, tmp, h, 2.0, 1.0);
        self.drift(t + h, tmp, k);
        for (y, (ks, (accs, js))) in [
            (&mut psi.re, (&k.re, (&acc.re, &jump.re))),
            (&mut psi.im, (&k.im, (&acc.im, &jump.im))),
        ] {
            for i in 0..y.len() {
                y[i] += (accs[i] + ks[i]) * (h / 6.0) + js[i];
            }
        }
    }
}

/// `acc = keep·acc + w·k`, `tmp = y + c·k`.
fn stage(y: &Split, k: &Split, acc: &mut Split, tmp: &mut Split, c: f64, w: f64, keep: f64) {
    for (ys, ks, accs, tmps) in [(&y.re, &k.re, &mut acc.re, &mut tmp.re), (&y.im, &k.im, &mut acc.im, &mut tmp.im)] {
        for i in 0..ys.len() {
            accs[i] = keep * accs[i] + w * ks[i];
            tmps[i] = ys[i] + c * ks[i];
        }
    }
}

/// Per-work-unit sums.
struct Partial {
    count: usize,
    aborted: usize,
    trace: (f64, f64),
    energy: (f64, f64),
    photon: DMatrix<Complex64>,
    photon_sq: DMatrix<f64>,
    state: Option<DMatrix<Complex64>>,
}

impl Partial {
    fn new(space: &TruncatedSpace, keep_state: bool) -> Self {
        let p = space.photon_levels();
        Self {
            count: 0,
            aborted: 0,
            trace: (0.0, 0.0),
            energy: (0.0, 0.0),
            photon: DMatrix::zeros(p, p),
            photon_sq: DMatrix::zeros(p, p),
            state: keep_state.then(|| DMatrix::zeros(space.dim(), space.dim())),
        }
    }

    fn add(&mut self, psi: &[Complex64], space: &TruncatedSpace) {
        let (p, o) = (space.photon_levels(), space.osc_levels());
        let mut tr = 0.0;
        let mut en = 0.0;
        for (r, x) in psi.iter().enumerate() {
            let w = x.norm_sqr();
            tr += w;
            en += (r % o) as f64 * w;
        }
        self.count += 1;
        self.trace.0 += tr;
        self.trace.1 += tr * tr;
        self.energy.0 += en;
        self.energy.1 += en * en;
        for m in 0..p {
            for n in 0..p {
                let v: Complex64 = (0..o).map(|j| psi[n * o + j] * psi[m * o + j].conj()).sum();
                self.photon[(n, m)] += v;
                self.photon_sq[(n, m)] += v.norm_sqr();
            }
        }
        if let Some(state) = &mut self.state {
            let d = psi.len();
            for c in 0..d {
                let pc = psi[c].conj();
                for r in 0..d {
                    state[(r, c)] += psi[r] * pc;
                }
            }
        }
    }

    fn merge(&mut self, other: Partial) {
        self.count += other.count;
        self.aborted += other.aborted;
        self.trace.0 += other.trace.0;
        self.trace.1 += other.trace.1;
        self.energy.0 += other.energy.0;
        self.energy.1 += other.energy.1;
        self.photon += other.photon;
        self.photon_sq += other.photon_sq;
        if let (Some(a), Some(b)) = (&mut self.state, other.state) {
            *a += b;
        }
    }
}

/// Runs one trajectory from `psi0`; `None` if it went non-finite.
fn trajectory(
    prop: &Propagator,
    psi0: &[Complex64],
    t_final: f64,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Complex64>> {
    let steps = (t_final / dt * (1.0 - 1e-12)).ceil().max(if t_final > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if steps > 0 { t_final / steps as f64 } else { 0.0 };
    let sqrt_h = h.sqrt();
    let mut psi = prop.pack(psi0);
    let mut bufs: [Split; 4] = std::array::from_fn(|_| Split::zeros(prop.len()));
    for s in 0..steps {
        let z: f64 = StandardNormal.sample(rng);
        prop.step(s as f64 * h, h, z * sqrt_h, &mut psi, &mut bufs);
    }
    let finite = psi.re.iter().chain(&psi.im).all(|x| x.is_finite());
    finite.then(|| prop.unpack(&psi))
}

/// Monte Carlo estimate of `ρ(t_final)` from a coherent photon input `alpha`
/// with the oscillator in its ground state.
///
/// Trajectory `i` draws from `ChaCha8Rng::seed_from_u64(seed + i)`, and the
/// sums are reduced in trajectory order, so the result is bitwise the same
/// for any number of worker threads.
pub fn evolve_stochastic(
    ens: &TrajectoryEnsemble,
    model: &Model,
    space: &TruncatedSpace,
    alpha: Complex64,
    t_final: f64,
) -> Result<StochasticResult> {
    ens.validate()?;
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::invalid("t_final", t_final, "must be non-negative"));
    }
    let psi0: Vec<Complex64> = product_vector(
        &coherent_amplitudes(alpha, space.photon_cut),
        &fock_amplitudes(0, space.osc_cut),
    )
    .iter()
    .copied()
    .collect();
    let prop = Propagator::new(model, space);

    let chunks: Vec<(usize, usize)> = (0..ens.n_traj)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(ens.n_traj)))
        .collect();
    let run_chunk = |&(start, end): &(usize, usize)| {
        let mut part = Partial::new(space, ens.keep_state);
        for i in start..end {
            let mut rng = ChaCha8Rng::seed_from_u64(ens.seed.wrapping_add(i as u64));
            match trajectory(&prop, &psi0, t_final, ens.dt, &mut rng) {
                Some(psi) => part.add(&psi, space),
                None => part.aborted += 1,
            }
        }
        part
    };
    let mut total = Partial::new(space, ens.keep_state);
    for wave in chunks.chunks(WAVE) {
        for part in par::map(wave, run_chunk) {
            total.merge(part);
        }
    }

    if total.aborted as f64 > MAX_ABORT_FRACTION * ens.n_traj as f64 || total.count == 0 {
        return Err(Error::TrajectoryAborts {
            aborted: total.aborted,
            total: ens.n_traj,
        });
    }
    let n = total.count;
    let nf = n as f64;
    let photon = &total.photon / Complex64::new(nf, 0.0);
    let photon_se = DMatrix::from_fn(photon.nrows(), photon.ncols(), |r, c| {
        if n < 2 {
            return 0.0;
        }
        let var = (total.photon_sq[(r, c)] - nf * photon[(r, c)].norm_sqr()) / (nf - 1.0);
        (var.max(0.0) / nf).sqrt()
    });
    let state = match total.state {
        Some(s) => Some(DensityMatrix::from_matrix(*space, s / Complex64::new(nf, 0.0))?),
        None => None,
    };
    Ok(StochasticResult {
        t: t_final,
        n_traj: ens.n_traj,
        aborted: total.aborted,
        trace: Estimate::from_sums(total.trace.0, total.trace.1, n),
        osc_number: Estimate::from_sums(total.energy.0, total.energy.1, n),
        reduced_photon: photon,
        reduced_photon_se: photon_se,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::master::{evolve_master, IntegratorConfig};
    use crate::params::ReducedForce;

    fn small() -> (Model, TruncatedSpace) {
        let m = Model::reduced(1.0, 0.3, 0.15, ReducedForce::Sinusoid { amplitude: 0.2, freq: 2.0, phase: 0.0 }).unwrap();
        (m, TruncatedSpace::new(6, 10).unwrap())
    }

    #[test]
    fn undamped_trajectory_is_unitary() {
        let (m, space) = small();
        let m = m.with_damping(0.0);
        let alpha = Complex64::new(0.0, 0.8);
        let ens = TrajectoryEnsemble::new(1, 3, 0.002).unwrap().with_state();
        let r = evolve_stochastic(&ens, &m, &space, alpha, 2.0).unwrap();
        let rho0 = DensityMatrix::coherent_ground(space, alpha);
        assert!((r.trace.mean - rho0.trace().re).abs() < 1e-10);
        let cfg = IntegratorConfig::new(0.002, 2.0).unwrap().with_leakage_tol(1.0);
        let master = evolve_master(&rho0, &cfg, &m, &space).unwrap();
        let diff = (&r.state.unwrap().entries - &master.states[0].entries).norm();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn ensemble_is_unbiased() {
        let (m, space) = small();
        let alpha = Complex64::new(0.0, 0.8);
        let ens = TrajectoryEnsemble::new(2000, 11, 0.01).unwrap();
        let r = evolve_stochastic(&ens, &m, &space, alpha, 2.0).unwrap();
        let rho0 = DensityMatrix::coherent_ground(space, alpha);
        assert!(r.trace.z_score(rho0.trace().re) < 3.0, "{:?}", r.trace);
        let cfg = IntegratorConfig::new(0.005, 2.0).unwrap().with_leakage_tol(1.0);
        let master = evolve_master(&rho0, &cfg, &m, &space).unwrap();
        assert!(r.osc_number.z_score(master.states[0].osc_number()) < 3.0);
        let red = master.states[0].reduced_photon();
        for n in 0..space.photon_levels() {
            for k in 0..space.photon_levels() {
                let se = r.reduced_photon_se[(n, k)];
                assert!((r.reduced_photon[(n, k)] - red[(n, k)]).norm() <= 4.0 * se + 1e-12);
            }
        }
    }

    #[test]
    fn independent_of_worker_count() {
        let (m, space) = small();
        let ens = TrajectoryEnsemble::new(300, 5, 0.02).unwrap().with_state();
        let alpha = Complex64::new(0.3, 0.4);
        let one = par::with_threads(1, || evolve_stochastic(&ens, &m, &space, alpha, 1.0).unwrap());
        let four = par::with_threads(4, || evolve_stochastic(&ens, &m, &space, alpha, 1.0).unwrap());
        assert_eq!(one.trace, four.trace);
        assert_eq!(one.osc_number, four.osc_number);
        assert_eq!(one.reduced_photon, four.reduced_photon);
        assert_eq!(one.state, four.state);
    }

    #[test]
    fn aborted_trajectories_fail_the_run() {
        let (m, space) = small();
        let wild = m.with_damping(1e300);
        let ens = TrajectoryEnsemble::new(10, 1, 0.1).unwrap();
        assert!(matches!(
            evolve_stochastic(&ens, &wild, &space, Complex64::new(0.5, 0.0), 1.0),
            Err(Error::TrajectoryAborts { .. })
        ));
        assert!(TrajectoryEnsemble::new(0, 1, 0.1).is_err());
    }
}
