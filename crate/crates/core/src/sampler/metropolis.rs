use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::{CouplingSign, DerivedCoeffs, DrivePattern};
use crate::observables::{g_name, AngleProbe, COS_SUM, COS_SUM_SQ, SIN_SUM, SIN_SUM_SQ};
use crate::rng::replica_rng;
use crate::scalar::{wrap_angle, Real};
use crate::state::AngularConfig;
use crate::stats::{jackknife, Estimate, Recorder, SampleStats, DEFAULT_BATCHES};

/// Weights of the target density `exp(−E)` with
/// `E = −s·K Σ_⟨jk⟩ cos(θ_j − θ_k) + h Σ_j sin(θ_j − φ_j)`, `s = +1` ferro, `−1` antiferro.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig<T> {
    pub k_bond: T,
    pub h_field: T,
    pub phi: T,
    /// Reference phase `φ̄` of the `X̂` quadrature; defaults to `phi`.
    #[serde(default)]
    pub measure_phi: Option<T>,
    #[serde(default)]
    pub sign: CouplingSign,
    #[serde(default)]
    pub drive_pattern: DrivePattern,
    pub proposal_width: T,
    pub sweeps: usize,
    pub burn_in_sweeps: usize,
    pub seed: u64,
    #[serde(default)]
    pub replica: u64,
    /// Adds one rigid rotation of all angles per sweep.
    #[serde(default = "yes")]
    pub global_moves: bool,
    /// Adapts the proposal widths towards 40–60 % acceptance during burn-in.
    #[serde(default = "yes")]
    pub tune_width: bool,
    /// Starts from the ordered ground state of the bonds instead of uniformly random angles,
    /// so strongly coupled rings begin in the zero-winding sector.
    #[serde(default = "yes")]
    pub cold_start: bool,
    #[serde(default = "one")]
    pub measure_every: usize,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
    /// Largest separation for `G(d)`; clipped to the lattice.
    #[serde(default = "max_d")]
    pub max_distance: usize,
}

fn yes() -> bool {
    true
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

impl<T: Real> SamplerConfig<T> {
    pub fn new(k_bond: T, h_field: T) -> Self {
        Self {
            k_bond,
            h_field,
            phi: T::zero(),
            measure_phi: None,
            sign: CouplingSign::Ferro,
            drive_pattern: DrivePattern::Uniform,
            proposal_width: T::FRAC_PI_2(),
            sweeps: 10_000,
            burn_in_sweeps: 1_000,
            seed: 0,
            replica: 0,
            global_moves: true,
            tune_width: true,
            cold_start: true,
            measure_every: 1,
            n_batches: DEFAULT_BATCHES,
            max_distance: usize::MAX,
        }
    }

    /// Weights `K = 4ςn₀` and `h = 2ν√n₀` taken from derived coefficients.
    pub fn from_coeffs(coeffs: &DerivedCoeffs<T>, phi: T, sign: CouplingSign) -> Self {
        let mut cfg = Self::new(coeffs.k_bond, coeffs.h_field());
        cfg.phi = wrap_angle(phi);
        cfg.sign = sign;
        cfg
    }

    pub fn with_sign(mut self, sign: CouplingSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_phi(mut self, phi: T) -> Self {
        self.phi = wrap_angle(phi);
        self
    }

    pub fn with_run(mut self, sweeps: usize, burn_in_sweeps: usize, seed: u64) -> Self {
        self.sweeps = sweeps;
        self.burn_in_sweeps = burn_in_sweeps;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_bond.is_finite() && self.k_bond >= T::zero()) {
            return Err(Error::param("k_bond", format!("must be finite and >= 0, got {}", self.k_bond)));
        }
        if !self.h_field.is_finite() || !self.phi.is_finite() {
            return Err(Error::param("h_field", "field weight and phase must be finite"));
        }
        if !(self.proposal_width > T::zero() && self.proposal_width <= T::PI()) {
            return Err(Error::param("proposal_width", "must lie in (0, pi]"));
        }
        if self.sweeps == 0 || self.measure_every == 0 {
            return Err(Error::param("sweeps", "need at least one production sweep"));
        }
        Ok(())
    }

    pub fn drive_phases(&self, lattice: &LatticeSpec) -> Vec<T> {
        self.drive_pattern.phases(self.phi, lattice)
    }

    pub fn measure_phases(&self, lattice: &LatticeSpec) -> Vec<T> {
        self.drive_pattern.phases(self.measure_phi.unwrap_or(self.phi), lattice)
    }

    /// `E(θ)` of the target density.
    pub fn energy(&self, lattice: &LatticeSpec, theta: &[T]) -> T {
        let phases = self.drive_phases(lattice);
        let s: T = self.sign.alignment();
        let bonds: T = lattice.bonds().iter().map(|&(i, j)| (theta[i] - theta[j]).cos()).sum();
        let field: T = theta.iter().zip(&phases).map(|(&t, &p)| (t - p).sin()).sum();
        -s * self.k_bond * bonds + self.h_field * field
    }
}

/// Single-site Metropolis kernel with an optional rigid-rotation move.
#[derive(Debug, Clone)]
pub struct XySampler<T> {
    adjacency: Vec<Vec<usize>>,
    drive: Vec<T>,
    coupling: T,
    h: T,
    width: T,
    global_width: T,
    global_moves: bool,
    accepted: usize,
    proposed: usize,
    global_accepted: usize,
    global_proposed: usize,
}

impl<T: Real> XySampler<T> {
    pub fn new(lattice: &LatticeSpec, cfg: &SamplerConfig<T>) -> Result<Self> {
        lattice.validate()?;
        cfg.validate()?;
        Ok(Self {
            adjacency: lattice.adjacency(),
            drive: cfg.drive_phases(lattice),
            coupling: cfg.sign.alignment::<T>() * cfg.k_bond,
            h: cfg.h_field,
            width: cfg.proposal_width,
            global_width: T::PI(),
            global_moves: cfg.global_moves,
            accepted: 0,
            proposed: 0,
            global_accepted: 0,
            global_proposed: 0,
        })
    }

    pub fn proposal_width(&self) -> T {
        self.width
    }

    pub fn acceptance(&self) -> T {
        if self.proposed == 0 {
            return T::zero();
        }
        T::from_usize_lossy(self.accepted) / T::from_usize_lossy(self.proposed)
    }

    pub fn reset_counters(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
        self.global_accepted = 0;
        self.global_proposed = 0;
    }

    #[inline]
    fn accept<R: Rng + ?Sized>(de: T, rng: &mut R) -> bool {
        de <= T::zero() || T::sample_unit(rng) < (-de).exp()
    }

    /// One pass of `N` single-site proposals in site order, then one rigid rotation if enabled.
    pub fn sweep<R: Rng + ?Sized>(&mut self, theta: &mut [T], rng: &mut R) {
        let two = T::lit(2.0);
        for j in 0..theta.len() {
            let old = theta[j];
            let new = wrap_angle(old + self.width * (two * T::sample_unit(rng) - T::one()));
            let mut dcos = T::zero();
            for &k in &self.adjacency[j] {
                dcos = dcos + (new - theta[k]).cos() - (old - theta[k]).cos();
            }
            let de = -self.coupling * dcos + self.h * ((new - self.drive[j]).sin() - (old - self.drive[j]).sin());
            self.proposed += 1;
            if Self::accept(de, rng) {
                theta[j] = new;
                self.accepted += 1;
            }
        }
        if self.global_moves {
            self.global_move(theta, rng);
        }
    }

    fn global_move<R: Rng + ?Sized>(&mut self, theta: &mut [T], rng: &mut R) {
        let delta = self.global_width * (T::lit(2.0) * T::sample_unit(rng) - T::one());
        let de = if self.h == T::zero() {
            T::zero()
        } else {
            let (mut s, mut c) = (T::zero(), T::zero());
            for (&t, &p) in theta.iter().zip(&self.drive) {
                let (sn, cs) = (t - p).sin_cos();
                s = s + sn;
                c = c + cs;
            }
            let (sd, cd) = delta.sin_cos();
            self.h * ((cd - T::one()) * s + sd * c)
        };
        self.global_proposed += 1;
        if Self::accept(de, rng) {
            for t in theta.iter_mut() {
                *t = wrap_angle(*t + delta);
            }
            self.global_accepted += 1;
        }
    }

    fn tune(&mut self) {
        let adjust = |w: T, acc: usize, prop: usize| {
            if prop == 0 {
                return w;
            }
            let rate = acc as f64 / prop as f64;
            let f = if rate > 0.6 {
                1.15
            } else if rate < 0.4 {
                0.85
            } else {
                1.0
            };
            (w * T::lit(f)).min(T::PI()).max(T::lit(1e-4))
        };
        self.width = adjust(self.width, self.accepted, self.proposed);
        self.global_width = adjust(self.global_width, self.global_accepted, self.global_proposed);
        self.reset_counters();
    }
}

/// Result of one Metropolis chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainOutput<T> {
    pub stats: SampleStats<T>,
    pub final_state: AngularConfig<T>,
    pub proposal_width: T,
    pub n_sites: usize,
}

const TUNE_INTERVAL: usize = 20;

/// All angles equal for ferromagnetic bonds, alternating by `π` on the checkerboard otherwise.
fn ordered_state<T: Real>(lattice: &LatticeSpec, sign: CouplingSign) -> AngularConfig<T> {
    let theta = (0..lattice.n_sites())
        .map(|j| match sign {
            CouplingSign::Ferro => T::zero(),
            CouplingSign::Antiferro => T::PI() * T::from_usize_lossy(lattice.parity(j)),
        })
        .collect();
    AngularConfig::new(theta)
}

/// Burn-in (with width tuning) followed by production sweeps with measurements.
pub fn run_chain<T: Real>(
    lattice: &LatticeSpec,
    cfg: &SamplerConfig<T>,
    initial: Option<AngularConfig<T>>,
) -> Result<ChainOutput<T>> {
    let mut sampler = XySampler::new(lattice, cfg)?;
    let mut rng = replica_rng(cfg.seed, cfg.replica);
    let n = lattice.n_sites();
    let mut state = match initial {
        Some(s) => {
            s.check(lattice)?;
            s
        }
        None if cfg.cold_start => ordered_state(lattice, cfg.sign),
        None => AngularConfig::random(n, &mut rng),
    };

    for sweep in 0..cfg.burn_in_sweeps {
        sampler.sweep(&mut state.theta, &mut rng);
        if cfg.tune_width && (sweep + 1) % TUNE_INTERVAL == 0 {
            sampler.tune();
        }
    }
    sampler.reset_counters();

    let mut probe = AngleProbe::new(lattice, cfg.drive_phases(lattice), cfg.measure_phases(lattice), cfg.max_distance);
    let n_records = cfg.sweeps / cfg.measure_every;
    let mut rec = Recorder::new(probe.names(), n_records, cfg.n_batches);
    let mut buf = Vec::new();
    for sweep in 1..=cfg.sweeps {
        sampler.sweep(&mut state.theta, &mut rng);
        if sweep % cfg.measure_every == 0 {
            probe.measure(&state.theta, &mut buf);
            rec.push(&buf);
        }
    }
    Ok(ChainOutput {
        stats: rec.finish(Some(sampler.acceptance())),
        final_state: state,
        proposal_width: sampler.proposal_width(),
        n_sites: n,
    })
}

/// Convenience wrapper: a single sweep of a freshly built kernel.
pub fn metropolis_sweep<T: Real, R: Rng + ?Sized>(
    state: &AngularConfig<T>,
    lattice: &LatticeSpec,
    cfg: &SamplerConfig<T>,
    rng: &mut R,
) -> Result<AngularConfig<T>> {
    state.check(lattice)?;
    let mut sampler = XySampler::new(lattice, cfg)?;
    let mut next = state.clone();
    sampler.sweep(&mut next.theta, rng);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationProfile<T> {
    /// `G(d)` for `d = 0..=max_d`; `G(0) = 1` exactly.
    pub g: Vec<Estimate<T>>,
    /// Exponential decay length from a weighted fit of `ln|G(d)|`, when resolvable.
    pub xi_fit: Option<T>,
}

impl<T: Real> CorrelationProfile<T> {
    pub fn from_stats(stats: &SampleStats<T>) -> Result<Self> {
        let mut g = vec![Estimate::exact(T::one())];
        let mut d = 1;
        while let Ok(s) = stats.get(&g_name(d)) {
            g.push(s.estimate());
            d += 1;
        }
        let xi_fit = fit_decay_length(&g);
        Ok(Self { g, xi_fit })
    }
}

fn fit_decay_length<T: Real>(g: &[Estimate<T>]) -> Option<T> {
    let pts: Vec<(T, T, T)> = g
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, e)| e.value.abs() > T::lit(3.0) * e.std_error && e.value != T::zero())
        .map(|(d, e)| {
            let w = if e.std_error > T::zero() {
                (e.value / e.std_error).powi(2)
            } else {
                T::one()
            };
            (T::from_usize_lossy(d), e.value.abs().ln(), w)
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let sw: T = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<T>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<T>() / sw;
    let sxx: T = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope < T::zero()).then(|| -slope.recip())
}

/// Quadrature-sum statistics of one chain, scaled by `r₀ = √n₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XyEstimates<T> {
    /// `⟨Σ_j P̂_j⟩ = −2r₀ Σ_j ⟨sin(θ_j − φ_j)⟩`.
    pub p_sum: Estimate<T>,
    /// `⟨Σ_j X̂_j⟩ = 2r₀ Σ_j ⟨cos(θ_j − φ̄_j)⟩`.
    pub x_sum: Estimate<T>,
    /// `Σ_{ij} ⟨P̂_i P̂_j⟩`.
    pub pp_sum: Estimate<T>,
    /// `Σ_{ij} ⟨X̂_i X̂_j⟩`.
    pub xx_sum: Estimate<T>,
    /// `Δ²(Σ_j P̂_j)` (jackknife error).
    pub p_var: Estimate<T>,
    pub x_var: Estimate<T>,
    pub profile: CorrelationProfile<T>,
    pub acceptance: Option<T>,
}

pub fn estimate_observables<T: Real>(out: &ChainOutput<T>, r0: T) -> Result<XyEstimates<T>> {
    estimate_from_stats(&out.stats, r0)
}

pub fn estimate_from_stats<T: Real>(stats: &SampleStats<T>, r0: T) -> Result<XyEstimates<T>> {
    for s in stats.series.values() {
        s.ensure_batches()?;
    }
    let two_r0 = T::lit(2.0) * r0;
    let q = two_r0 * two_r0;
    let s = stats.get(SIN_SUM)?;
    let c = stats.get(COS_SUM)?;
    let s2 = stats.get(SIN_SUM_SQ)?;
    let c2 = stats.get(COS_SUM_SQ)?;
    let var = |m2: &_, m1: &_| -> Result<Estimate<T>> {
        let (v, se) = jackknife(&[m2, m1], |x| q * (x[0] - x[1] * x[1]))?;
        Ok(Estimate::new(v, se))
    };
    Ok(XyEstimates {
        p_sum: s.estimate().scale(-two_r0),
        x_sum: c.estimate().scale(two_r0),
        pp_sum: s2.estimate().scale(q),
        xx_sum: c2.estimate().scale(q),
        p_var: var(s2, s)?,
        x_var: var(c2, c)?,
        profile: CorrelationProfile::from_stats(stats)?,
        acceptance: stats.acceptance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ChainSpec, RingCorrelator};
    use crate::rng::replica_rng;

    #[test]
    fn flat_target_accepts_everything() {
        let lat = LatticeSpec::chain(8);
        let mut cfg = SamplerConfig::new(0.0, 0.0).with_run(2_000, 0, 3);
        cfg.proposal_width = 1.0;
        cfg.tune_width = false;
        let out = run_chain(&lat, &cfg, None).unwrap();
        assert_eq!(out.stats.acceptance, Some(1.0));
        let e = estimate_observables(&out, 1.0).unwrap();
        assert!(e.p_sum.z_exact(0.0) < 4.0);
        assert!(e.profile.g[1].z_exact(0.0) < 4.0);
    }

    #[test]
    fn strong_ferro_coupling_locks_angles() {
        let lat = LatticeSpec::chain(6);
        let cfg = SamplerConfig::new(500.0, 0.0).with_run(500, 500, 1);
        let out = run_chain(&lat, &cfg, Some(AngularConfig::uniform(6, 1.0))).unwrap();
        let e = estimate_observables(&out, 1.0).unwrap();
        for g in &e.profile.g {
            assert!(g.value > 0.99);
        }
    }

    #[test]
    fn energy_difference_matches_local_update() {
        let lat = LatticeSpec::square(3);
        let mut cfg = SamplerConfig::new(1.3, 0.7).with_sign(CouplingSign::Antiferro).with_phi(0.4);
        cfg.global_moves = false;
        let mut rng = replica_rng(5, 0);
        let a = AngularConfig::<f64>::random(9, &mut rng);
        let b = metropolis_sweep(&a, &lat, &cfg, &mut rng).unwrap();
        assert_eq!(b.len(), 9);
        assert!(cfg.energy(&lat, &a.theta).is_finite());
    }

    #[test]
    fn ring_correlations_match_exact_values() {
        let lat = LatticeSpec::chain(8);
        let cfg = SamplerConfig::new(1.0, 0.0).with_run(40_000, 2_000, 11);
        let out = run_chain(&lat, &cfg, None).unwrap();
        let e = estimate_observables(&out, 1.0).unwrap();
        let exact = RingCorrelator::new(&ChainSpec::new(8, 1.0)).unwrap();
        for d in 1..=4 {
            let z = e.profile.g[d].z_exact(exact.g(d).unwrap());
            assert!(z < 4.0, "d={d} z={z}");
        }
        let xi = e.profile.xi_fit.unwrap();
        assert!(xi > 0.5 && xi < 3.0, "xi={xi}");
    }

    #[test]
    fn too_few_batches_rejected() {
        let lat = LatticeSpec::chain(4);
        let mut cfg = SamplerConfig::new(1.0, 0.0).with_run(5, 0, 1);
        cfg.n_batches = 5;
        let out = run_chain(&lat, &cfg, None).unwrap();
        assert!(matches!(estimate_observables(&out, 1.0), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn invalid_width_rejected() {
        let mut cfg = SamplerConfig::new(1.0, 0.0);
        cfg.proposal_width = 4.0;
        assert!(cfg.validate().is_err());
        let cfg = SamplerConfig::new(-1.0, 0.0);
        assert!(cfg.validate().is_err());
    }
}
