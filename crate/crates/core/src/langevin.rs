//! Euler–Maruyama integration of the semiclassical stochastic dynamics.
//!
//! Two levels are provided. [`FieldModel`] evolves complex amplitudes `α_j` with cartesian
//! drift `(A − C − B|α_j|²)α_j ∓ D Σ_k α_k − iε_j` and noise `√A` per component.
//! [`AngularModel`] evolves phases with drift `−½ D_θ ∂E/∂θ_j` and noise `√D_θ`, where `E` is
//! the exponent of the XY target sampled by [`crate::sampler`] and `D_θ = A/n₀`.

use std::io::Write;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::{CouplingSign, DerivedCoeffs, ModelParams};
use crate::observables::AngleProbe;
use crate::rng::{replica_rng, SimRng};
use crate::sampler::SamplerConfig;
use crate::scalar::{wrap_angle, Real};
use crate::state::{AngularConfig, FieldConfig};
use crate::stats::{Recorder, SampleStats, DEFAULT_BATCHES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinParams<T> {
    pub dt: T,
    /// Total steps, burn-in included.
    pub n_steps: usize,
    pub burn_in_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub replica: u64,
    /// Width of the radial distribution; informational only.
    #[serde(default)]
    pub radial_width_sigma: Option<T>,
    #[serde(default = "one")]
    pub measure_every: usize,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
    #[serde(default = "max_d")]
    pub max_distance: usize,
}

fn one() -> usize {
    1
}
fn default_batches() -> usize {
    DEFAULT_BATCHES
}
fn max_d() -> usize {
    usize::MAX
}

impl<T: Real> LangevinParams<T> {
    pub fn new(dt: T, n_steps: usize, burn_in_steps: usize, seed: u64) -> Self {
        Self {
            dt,
            n_steps,
            burn_in_steps,
            seed,
            replica: 0,
            radial_width_sigma: None,
            measure_every: 1,
            n_batches: DEFAULT_BATCHES,
            max_distance: usize::MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > T::zero()) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if self.burn_in_steps >= self.n_steps {
            return Err(Error::param("n_steps", "no steps left after burn-in"));
        }
        if self.measure_every == 0 {
            return Err(Error::param("measure_every", "must be >= 1"));
        }
        Ok(())
    }

    pub fn production_steps(&self) -> usize {
        self.n_steps - self.burn_in_steps
    }
}

/// Angular (Kuramoto-type) dynamics whose stationary law is `exp(−E)` for a sampler target.
#[derive(Debug, Clone)]
pub struct AngularModel<T> {
    adjacency: Vec<Vec<usize>>,
    drive: Vec<T>,
    coupling: T,
    h: T,
    diffusion: T,
}

impl<T: Real> AngularModel<T> {
    /// Drift `−½ D_θ ∇E` for the target of `cfg`, with angular diffusion constant `D_θ`.
    pub fn from_sampler_config(lattice: &LatticeSpec, cfg: &SamplerConfig<T>, diffusion: T) -> Result<Self> {
        lattice.validate()?;
        cfg.validate()?;
        if !(diffusion.is_finite() && diffusion > T::zero()) {
            return Err(Error::param("diffusion", "must be finite and > 0"));
        }
        Ok(Self {
            adjacency: lattice.adjacency(),
            drive: cfg.drive_phases(lattice),
            coupling: cfg.sign.alignment::<T>() * cfg.k_bond,
            h: cfg.h_field,
            diffusion,
        })
    }

    /// Physical model: `K = 4ςn₀`, `h = 2ν√n₀`, `D_θ = A/n₀`.
    pub fn from_params(params: &ModelParams<T>, coeffs: &DerivedCoeffs<T>) -> Result<Self> {
        if coeffs.n0 <= T::zero() {
            return Err(Error::param("n0", "angular dynamics need n0 > 0"));
        }
        let mut cfg = SamplerConfig::from_coeffs(coeffs, params.phi, params.coupling_sign);
        cfg.drive_pattern = params.drive_pattern;
        Self::from_sampler_config(&params.lattice, &cfg, coeffs.angular_diffusion())
    }

    pub fn n_sites(&self) -> usize {
        self.adjacency.len()
    }

    pub fn drive_phases(&self) -> &[T] {
        &self.drive
    }

    /// Deterministic drift at every site.
    pub fn drift(&self, theta: &[T], out: &mut Vec<T>) {
        out.clear();
        let half_d = self.diffusion / T::lit(2.0);
        for (j, &tj) in theta.iter().enumerate() {
            let mut pull = T::zero();
            for &k in &self.adjacency[j] {
                pull = pull + (theta[k] - tj).sin();
            }
            out.push(half_d * (self.coupling * pull - self.h * (tj - self.drive[j]).cos()));
        }
    }

    /// One step with caller-supplied standard normal increments `z`.
    pub fn step_with_noise(&self, theta: &mut [T], dt: T, z: &[T], scratch: &mut Vec<T>) {
        self.drift(theta, scratch);
        let amp = (self.diffusion * dt).sqrt();
        for (j, t) in theta.iter_mut().enumerate() {
            *t = wrap_angle(*t + scratch[j] * dt + amp * z[j]);
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, theta: &mut [T], dt: T, rng: &mut R, z: &mut Vec<T>, scratch: &mut Vec<T>) {
        z.clear();
        z.extend((0..theta.len()).map(|_| T::sample_normal(rng)));
        self.step_with_noise(theta, dt, z, scratch);
    }
}

/// Free-function form of one angular Euler–Maruyama step.
pub fn step_angular<T: Real, R: Rng + ?Sized>(
    state: &AngularConfig<T>,
    model: &AngularModel<T>,
    lp: &LangevinParams<T>,
    rng: &mut R,
) -> Result<AngularConfig<T>> {
    if state.len() != model.n_sites() {
        return Err(Error::param("theta", "site count does not match the model"));
    }
    let mut next = state.clone();
    let (mut z, mut scratch) = (Vec::new(), Vec::new());
    model.step(&mut next.theta, lp.dt, rng, &mut z, &mut scratch);
    Ok(next)
}

/// Complex-amplitude dynamics.
#[derive(Debug, Clone)]
pub struct FieldModel<T> {
    adjacency: Vec<Vec<usize>>,
    gain: T,
    b: T,
    /// Neighbour coefficient, `−D` antiferro, `+D` ferro.
    hop: T,
    /// `−iε_j = |ε| (sin φ_j, −cos φ_j)`.
    force: Vec<Complex<T>>,
    noise: T,
    guard: T,
}

impl<T: Real> FieldModel<T> {
    pub fn from_params(params: &ModelParams<T>, coeffs: &DerivedCoeffs<T>) -> Result<Self> {
        params.validate()?;
        let phases = params.drive_pattern.phases(params.phi, &params.lattice);
        let force = phases
            .iter()
            .map(|&p| Complex::new(p.sin(), -p.cos()) * params.epsilon_abs)
            .collect();
        let hop = match params.coupling_sign {
            CouplingSign::Antiferro => -coeffs.d,
            CouplingSign::Ferro => coeffs.d,
        };
        Ok(Self {
            adjacency: params.lattice.adjacency(),
            gain: coeffs.a - coeffs.c,
            b: coeffs.b,
            hop,
            force,
            noise: coeffs.a.sqrt(),
            guard: T::lit(1e6) * coeffs.n_mf.sqrt(),
        })
    }

    /// Overrides the saturation coefficient `B` (zero gives a linear process).
    pub fn with_saturation(mut self, b: T) -> Self {
        self.b = b;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.adjacency.len()
    }

    pub fn drift(&self, alpha: &[Complex<T>], out: &mut Vec<Complex<T>>) {
        out.clear();
        for (j, &a) in alpha.iter().enumerate() {
            let mut nb = Complex::new(T::zero(), T::zero());
            for &k in &self.adjacency[j] {
                nb = nb + alpha[k];
            }
            out.push(a * (self.gain - self.b * a.norm_sqr()) + nb * self.hop + self.force[j]);
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        alpha: &mut [Complex<T>],
        dt: T,
        time: T,
        rng: &mut R,
        scratch: &mut Vec<Complex<T>>,
    ) -> Result<()> {
        self.drift(alpha, scratch);
        let amp = self.noise * dt.sqrt();
        for (j, a) in alpha.iter_mut().enumerate() {
            let z = Complex::new(T::sample_normal(rng), T::sample_normal(rng));
            *a = *a + scratch[j] * dt + z * amp;
            let r = a.norm();
            if !(r <= self.guard) {
                return Err(Error::Divergence {
                    time: time.as_f64(),
                    detail: format!("|alpha_{j}| = {r} exceeds {}", self.guard),
                });
            }
        }
        Ok(())
    }
}

pub fn step_full<T: Real, R: Rng + ?Sized>(
    state: &FieldConfig<T>,
    model: &FieldModel<T>,
    lp: &LangevinParams<T>,
    rng: &mut R,
) -> Result<FieldConfig<T>> {
    if state.len() != model.n_sites() {
        return Err(Error::param("alpha", "site count does not match the model"));
    }
    let mut next = state.clone();
    model.step(&mut next.alpha, lp.dt, T::zero(), rng, &mut Vec::new())?;
    Ok(next)
}

fn angular_recorder<T: Real>(lattice: &LatticeSpec, model: &AngularModel<T>, lp: &LangevinParams<T>) -> (AngleProbe<T>, Recorder<T>) {
    let drive = model.drive_phases().to_vec();
    let probe = AngleProbe::new(lattice, drive.clone(), drive, lp.max_distance);
    let rec = Recorder::new(probe.names(), lp.production_steps() / lp.measure_every, lp.n_batches);
    (probe, rec)
}

/// Burn-in followed by time-averaged angle observables (same names as the sampler).
pub fn run_stationary<T: Real>(
    lattice: &LatticeSpec,
    model: &AngularModel<T>,
    initial: &AngularConfig<T>,
    lp: &LangevinParams<T>,
) -> Result<(SampleStats<T>, AngularConfig<T>)> {
    lp.validate()?;
    initial.check(lattice)?;
    let mut rng = replica_rng(lp.seed, lp.replica);
    let mut state = initial.clone();
    let (mut z, mut scratch, mut buf) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..lp.burn_in_steps {
        model.step(&mut state.theta, lp.dt, &mut rng, &mut z, &mut scratch);
    }
    let (mut probe, mut rec) = angular_recorder(lattice, model, lp);
    for step in 1..=lp.production_steps() {
        model.step(&mut state.theta, lp.dt, &mut rng, &mut z, &mut scratch);
        if step % lp.measure_every == 0 {
            probe.measure(&state.theta, &mut buf);
            rec.push(&buf);
        }
    }
    Ok((rec.finish(None), state))
}

/// Runs `dt` and `dt/2` on the same Brownian path.
///
/// Each coarse increment is `(z₁ + z₂)/√2` of the two fine increments, and both runs are
/// measured at identical times so their batch series can be differenced.
/// Returns `(coarse, fine)` statistics.
pub fn run_halving_pair<T: Real>(
    lattice: &LatticeSpec,
    model: &AngularModel<T>,
    initial: &AngularConfig<T>,
    lp: &LangevinParams<T>,
) -> Result<(SampleStats<T>, SampleStats<T>)> {
    lp.validate()?;
    initial.check(lattice)?;
    let n = lattice.n_sites();
    let mut rng = replica_rng(lp.seed, lp.replica);
    let mut coarse = initial.clone();
    let mut fine = initial.clone();
    let half = lp.dt / T::lit(2.0);
    let inv_sqrt2 = T::SQRT_2().recip();
    let (mut z1, mut z2, mut zc) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut scratch = Vec::new();
    let mut pair_step = |coarse: &mut AngularConfig<T>, fine: &mut AngularConfig<T>, rng: &mut SimRng| {
        for j in 0..n {
            z1[j] = T::sample_normal(rng);
            z2[j] = T::sample_normal(rng);
            zc[j] = (z1[j] + z2[j]) * inv_sqrt2;
        }
        model.step_with_noise(&mut fine.theta, half, &z1, &mut scratch);
        model.step_with_noise(&mut fine.theta, half, &z2, &mut scratch);
        model.step_with_noise(&mut coarse.theta, lp.dt, &zc, &mut scratch);
    };
    for _ in 0..lp.burn_in_steps {
        pair_step(&mut coarse, &mut fine, &mut rng);
    }
    let (mut probe, mut rec_c) = angular_recorder(lattice, model, lp);
    let (_, mut rec_f) = angular_recorder(lattice, model, lp);
    let mut buf = Vec::new();
    for step in 1..=lp.production_steps() {
        pair_step(&mut coarse, &mut fine, &mut rng);
        if step % lp.measure_every == 0 {
            probe.measure(&coarse.theta, &mut buf);
            rec_c.push(&buf);
            probe.measure(&fine.theta, &mut buf);
            rec_f.push(&buf);
        }
    }
    Ok((rec_c.finish(None), rec_f.finish(None)))
}

pub const ABS_ALPHA: &str = "abs_alpha";
pub const ABS_ALPHA_SQ: &str = "abs_alpha_sq";

/// Full-field run recording the site-averaged `|α|`, `|α|²` and the phase observables.
pub fn run_field_stationary<T: Real>(
    lattice: &LatticeSpec,
    model: &FieldModel<T>,
    drive_phases: Vec<T>,
    initial: &FieldConfig<T>,
    lp: &LangevinParams<T>,
) -> Result<(SampleStats<T>, FieldConfig<T>)> {
    lp.validate()?;
    initial.check(lattice)?;
    let mut rng = replica_rng(lp.seed, lp.replica);
    let mut state = initial.clone();
    let mut scratch = Vec::new();
    let mut t = T::zero();
    for _ in 0..lp.burn_in_steps {
        model.step(&mut state.alpha, lp.dt, t, &mut rng, &mut scratch)?;
        t = t + lp.dt;
    }
    let mut probe = AngleProbe::new(lattice, drive_phases.clone(), drive_phases, lp.max_distance);
    let mut names = vec![ABS_ALPHA.to_string(), ABS_ALPHA_SQ.to_string()];
    names.extend(probe.names());
    let mut rec = Recorder::new(names, lp.production_steps() / lp.measure_every, lp.n_batches);
    let nn = T::from_usize_lossy(state.len());
    let (mut buf, mut angles, mut row) = (Vec::new(), Vec::new(), Vec::new());
    for step in 1..=lp.production_steps() {
        model.step(&mut state.alpha, lp.dt, t, &mut rng, &mut scratch)?;
        t = t + lp.dt;
        if step % lp.measure_every == 0 {
            let r: T = state.alpha.iter().map(|a| a.norm()).sum::<T>() / nn;
            let r2: T = state.alpha.iter().map(|a| a.norm_sqr()).sum::<T>() / nn;
            angles.clear();
            angles.extend(state.alpha.iter().map(|a| wrap_angle(a.arg())));
            probe.measure(&angles, &mut buf);
            row.clear();
            row.push(r);
            row.push(r2);
            row.extend_from_slice(&buf);
            rec.push(&row);
        }
    }
    Ok((rec.finish(None), state))
}

/// CSV snapshot rows `time,site,theta`.
pub fn write_angular_snapshot<T: Real, W: Write>(out: &mut W, time: T, state: &AngularConfig<T>) -> Result<()> {
    for (j, t) in state.theta.iter().enumerate() {
        writeln!(out, "{time},{j},{t}")?;
    }
    Ok(())
}

/// CSV snapshot rows `time,site,re_alpha,im_alpha`.
pub fn write_field_snapshot<T: Real, W: Write>(out: &mut W, time: T, state: &FieldConfig<T>) -> Result<()> {
    for (j, a) in state.alpha.iter().enumerate() {
        writeln!(out, "{time},{j},{},{}", a.re, a.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_coeffs;
    use crate::sampler::brute_force_expectation;
    use std::f64::consts::PI;

    fn random_theta(n: usize, seed: u64) -> Vec<f64> {
        AngularConfig::<f64>::random(n, &mut replica_rng(seed, 0)).theta
    }

    /// `E` restricted to one angle is a first harmonic, so this central difference is exact.
    fn harmonic_derivative(cfg: &SamplerConfig<f64>, lat: &LatticeSpec, theta: &[f64], j: usize) -> f64 {
        let h = 0.5;
        let mut p = theta.to_vec();
        let mut m = theta.to_vec();
        p[j] += h;
        m[j] -= h;
        (cfg.energy(lat, &p) - cfg.energy(lat, &m)) / (2.0 * f64::sin(h))
    }

    #[test]
    fn drift_is_half_diffusion_times_energy_gradient() {
        let lat = LatticeSpec::square(3);
        for (sign, seed) in [(CouplingSign::Ferro, 1), (CouplingSign::Antiferro, 2)] {
            let cfg = SamplerConfig::new(1.7, 0.6).with_sign(sign).with_phi(0.9);
            let diffusion = 0.37;
            let model = AngularModel::from_sampler_config(&lat, &cfg, diffusion).unwrap();
            let theta = random_theta(9, seed);
            let mut drift = Vec::new();
            model.drift(&theta, &mut drift);
            for j in 0..9 {
                let want = -0.5 * diffusion * harmonic_derivative(&cfg, &lat, &theta, j);
                assert!((drift[j] - want).abs() < 1e-12, "site {j}: {} vs {want}", drift[j]);
            }
        }
    }

    #[test]
    fn physical_coefficients_reproduce_the_angular_drift() {
        // the field term is −(|ε|/√n₀) cos(θ − φ) and the bond term 2D Σ sin(θ_k − θ_j)
        let mut p = ModelParams::ring(4, 1.0, 0.1, 10.0).with_hopping(0.5, 5.0).with_drive(0.02, 0.3);
        p.coupling_sign = CouplingSign::Ferro;
        let c = derive_coeffs(&p, Some(9.0)).unwrap();
        let model = AngularModel::from_params(&p, &c).unwrap();
        let theta = random_theta(4, 3);
        let mut drift = Vec::new();
        model.drift(&theta, &mut drift);
        for j in 0..4 {
            let (l, r) = ((j + 3) % 4, (j + 1) % 4);
            let bond = 2.0 * c.d * ((theta[l] - theta[j]).sin() + (theta[r] - theta[j]).sin());
            let field = -(0.02 / 3.0) * (theta[j] - 0.3).cos();
            assert!((drift[j] - bond - field).abs() < 1e-14);
        }
        let below = derive_coeffs(&ModelParams::ring(4, 1.0, 1.0, 5.0), None).unwrap();
        assert!(AngularModel::from_params(&p, &below).is_err());
    }

    #[test]
    fn free_diffusion_spreads_linearly() {
        let lat = LatticeSpec::chain(2);
        let cfg = SamplerConfig::new(0.0, 0.0);
        let model = AngularModel::from_sampler_config(&lat, &cfg, 0.02).unwrap();
        let mut rng = replica_rng(4, 0);
        let (mut z, mut s) = (Vec::new(), Vec::new());
        let n_rep = 4000;
        let t_end = 5.0;
        let mut r = 0.0;
        for _ in 0..n_rep {
            let mut th = vec![0.0f64; 2];
            for _ in 0..50 {
                model.step(&mut th, t_end / 50.0, &mut rng, &mut z, &mut s);
            }
            r += th.iter().map(|t| t.cos()).sum::<f64>() / 2.0;
        }
        let mean_cos = r / n_rep as f64;
        // ⟨cos θ⟩ = exp(−D t / 2) for a free angular diffusion
        let want = (-0.02 * t_end / 2.0f64).exp();
        assert!((mean_cos - want).abs() < 0.01, "{mean_cos} vs {want}");
    }

    #[test]
    fn strong_drive_pins_sin_negative() {
        let lat = LatticeSpec::chain(2);
        let h = 3.0f64;
        let cfg = SamplerConfig::new(0.0, h).with_phi(0.7);
        let model = AngularModel::from_sampler_config(&lat, &cfg, 1.0).unwrap();
        let mut lp = LangevinParams::new(0.005, 220_000, 20_000, 9);
        lp.measure_every = 5;
        let (stats, _) = run_stationary(&lat, &model, &AngularConfig::uniform(2, 0.7), &lp).unwrap();
        let s = stats.estimate(crate::observables::SIN_SUM).unwrap().scale(0.5);
        let want = brute_force_expectation(&cfg, 1, 64, |t| (t[0] - 0.7).sin()).unwrap();
        assert!(s.value < 0.0);
        assert!((s.value - want).abs() < 0.02, "{} vs {want}", s.value);
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let lat = LatticeSpec::chain(5);
        let cfg = SamplerConfig::new(1.0, 0.2);
        let model = AngularModel::from_sampler_config(&lat, &cfg, 0.5).unwrap();
        let lp = LangevinParams::new(0.01, 2_000, 100, 77);
        let init = AngularConfig::uniform(5, 0.0);
        let (a, sa) = run_stationary(&lat, &model, &init, &lp).unwrap();
        let (b, sb) = run_stationary(&lat, &model, &init, &lp).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.get("g_1").unwrap().means, b.get("g_1").unwrap().means);
    }

    #[test]
    fn doubling_run_length_shrinks_error() {
        let lat = LatticeSpec::chain(4);
        let cfg = SamplerConfig::new(1.0, 0.0);
        let model = AngularModel::from_sampler_config(&lat, &cfg, 1.0).unwrap();
        let init = AngularConfig::uniform(4, 0.0);
        let mut se = Vec::new();
        for (steps, seeds) in [(40_000usize, 0..12u64), (80_000, 100..112)] {
            let v: Vec<f64> = seeds
                .map(|s| {
                    let lp = LangevinParams::new(0.02, steps + 1_000, 1_000, s);
                    run_stationary(&lat, &model, &init, &lp).unwrap().0.std_error("g_1").unwrap()
                })
                .collect();
            se.push(v.iter().sum::<f64>() / v.len() as f64);
        }
        let ratio = se[0] / se[1];
        assert!((ratio - 2f64.sqrt()).abs() < 0.25, "ratio {ratio}");
    }

    #[test]
    fn empty_production_rejected() {
        let lp = LangevinParams::<f64>::new(0.01, 100, 100, 0);
        assert!(lp.validate().is_err());
        assert!(LangevinParams::<f64>::new(0.0, 100, 10, 0).validate().is_err());
    }

    #[test]
    fn halving_pair_shares_noise() {
        let lat = LatticeSpec::chain(3);
        let cfg = SamplerConfig::<f64>::new(0.0, 0.0);
        let model = AngularModel::from_sampler_config(&lat, &cfg, 1.0).unwrap();
        let lp = LangevinParams::new(0.01, 2_000, 10, 1);
        let (c, f) = run_halving_pair(&lat, &model, &AngularConfig::uniform(3, 0.0), &lp).unwrap();
        // pure noise: both paths see the same Brownian motion, so their records coincide
        let a = &c.get("g_1").unwrap().means;
        let b = &f.get("g_1").unwrap().means;
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    fn ou_model(kappa: f64) -> (LatticeSpec, FieldModel<f64>, f64) {
        let p = ModelParams::ring(2, 1.0, kappa, 5.0);
        let c = derive_coeffs(&p, Some(1.0)).unwrap();
        let m = FieldModel::from_params(&p, &c).unwrap().with_saturation(0.0);
        (p.lattice, m, c.a / (c.c - c.a))
    }

    #[test]
    fn linear_process_reaches_ou_variance() {
        let (lat, model, var_total) = ou_model(0.5);
        let mut lp = LangevinParams::new(0.005, 400_000, 4_000, 21);
        lp.measure_every = 4;
        let (stats, _) = run_field_stationary(&lat, &model, vec![0.0; 2], &FieldConfig::zeros(2), &lp).unwrap();
        let e = stats.estimate(ABS_ALPHA_SQ).unwrap();
        // per component A/(2(C−A)), so ⟨|α|²⟩ = A/(C−A) up to O(dt)
        assert!((e.value - var_total).abs() < 4.0 * e.std_error + 0.01 * var_total, "{e:?} vs {var_total}");
    }

    #[test]
    fn field_update_commutes_with_global_rotation() {
        let p = ModelParams::ring(4, 1.0, 0.1, 5.0).with_hopping(0.3, 1.0);
        let c = derive_coeffs(&p, None).unwrap();
        let m = FieldModel::from_params(&p, &c).unwrap();
        let alpha: Vec<Complex<f64>> = random_theta(4, 8).iter().map(|&t| Complex::from_polar(2.0, t)).collect();
        let rot = Complex::from_polar(1.0, 1.1);
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        m.drift(&alpha, &mut d1);
        m.drift(&alpha.iter().map(|a| a * rot).collect::<Vec<_>>(), &mut d2);
        for (x, y) in d1.iter().zip(&d2) {
            assert!((x * rot - y).norm() < 1e-13);
        }
    }

    #[test]
    fn radial_mean_matches_stationary_density() {
        // single-site stationary law ∝ exp(μr² − λr⁴) on the plane
        let p = ModelParams::ring(2, 1.0, 0.1, 5.0);
        let c = derive_coeffs(&p, None).unwrap();
        let m = FieldModel::from_params(&p, &c).unwrap();
        let density = |r: f64| r * (c.mu * r * r - c.lambda * r.powi(4)).exp();
        let (mut z, mut num) = (0.0, 0.0);
        let h = 1e-3;
        for i in 1..20_000 {
            let r = i as f64 * h;
            z += density(r);
            num += r * density(r);
        }
        let want = num / z;
        let mut lp = LangevinParams::new(0.01, 600_000, 10_000, 5);
        lp.measure_every = 10;
        let init = FieldConfig::from_polar(2.5, &AngularConfig::uniform(2, 0.0));
        let (stats, _) = run_field_stationary(&p.lattice, &m, vec![0.0; 2], &init, &lp).unwrap();
        let e = stats.estimate(ABS_ALPHA).unwrap();
        assert!((e.value - want).abs() < 4.0 * e.std_error + 0.01 * want, "{e:?} vs {want}");
        assert!(want < 0.6 * c.n0.sqrt());
    }

    #[test]
    fn divergence_is_reported() {
        let p = ModelParams::ring(2, 1.0, 0.1, 5.0);
        let c = derive_coeffs(&p, None).unwrap();
        let m = FieldModel::from_params(&p, &c).unwrap().with_saturation(0.0);
        let mut lp = LangevinParams::new(0.5, 10_000, 0, 1);
        lp.n_batches = 10;
        let r = run_field_stationary(&p.lattice, &m, vec![0.0; 2], &FieldConfig::zeros(2), &lp);
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn snapshots_are_csv_rows() {
        let mut out = Vec::new();
        write_angular_snapshot(&mut out, 0.5, &AngularConfig::new(vec![PI, 0.0])).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("0.5,0,3.14159"));
    }
}
