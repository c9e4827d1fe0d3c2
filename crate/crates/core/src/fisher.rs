//! Error-propagation Fisher information for the drive amplitude and phase.
//!
//! For an observable `O` with mean response `∂⟨O⟩/∂x` and variance `Δ²O`,
//! `F[x] = (∂⟨O⟩/∂x)² / Δ²O`. The amplitude uses `O = Σ_j P̂_j`, the phase `O = Σ_j X̂_j`
//! measured at the reference phase `φ̄`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::predict_quadratures_and_qfi;
use crate::lattice::LatticeSpec;
use crate::model::{DerivedCoeffs, ModelParams};
use crate::observables::{SIN_SUM, SIN_SUM_SQ};
use crate::sampler::{estimate_observables, run_chain, SamplerConfig, XyEstimates};
use crate::scalar::{wrap_angle, Real};
use crate::stats::{BatchSeries, Estimate, SampleStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QfiEstimate<T> {
    pub value: T,
    pub std_error: T,
    /// `∂⟨O⟩/∂x` by central difference.
    pub derivative: Estimate<T>,
    /// `Δ²O` at the midpoint.
    pub variance: Estimate<T>,
    /// Finite-difference half-step in the estimated parameter.
    pub step: T,
    pub theory_paper: Option<T>,
    pub theory_errorprop: Option<T>,
}

/// `d² / v`.
pub fn fisher_from<T: Real>(derivative: T, variance: T) -> T {
    derivative * derivative / variance
}

impl<T: Real> QfiEstimate<T> {
    /// Combines a derivative and a variance with first-order error propagation.
    pub fn from_parts(derivative: Estimate<T>, variance: Estimate<T>, step: T) -> Self {
        let value = derivative.value * derivative.value / variance.value;
        let rel_d = T::lit(2.0) * derivative.std_error / derivative.value.abs();
        let rel_v = variance.std_error / variance.value.abs();
        let std_error = if derivative.value == T::zero() {
            T::lit(2.0) * derivative.std_error * derivative.std_error / variance.value
        } else {
            value * (rel_d * rel_d + rel_v * rel_v).sqrt()
        };
        Self {
            value,
            std_error,
            derivative,
            variance,
            step,
            theory_paper: None,
            theory_errorprop: None,
        }
    }
}

/// Sampler-level description of an estimation problem.
#[derive(Debug, Clone)]
pub struct FisherProblem<T> {
    pub lattice: LatticeSpec,
    /// Run settings and bond coupling; `h_field`, `phi` and `measure_phi` are overwritten per run.
    pub sampler: SamplerConfig<T>,
    /// `√n₀`.
    pub r0: T,
    /// Linear gain `A`; the drive weight is `h = 2|ε|√n₀ / A`.
    pub gain: T,
    pub epsilon: T,
    pub phi: T,
    /// Finite-difference half-step; defaults to `0.2 |ε|` for the amplitude.
    pub delta: Option<T>,
    pub max_halvings: usize,
    pub coeffs: Option<DerivedCoeffs<T>>,
}

impl<T: Real> FisherProblem<T> {
    pub fn from_params(params: &ModelParams<T>, coeffs: &DerivedCoeffs<T>, run: SamplerConfig<T>) -> Result<Self> {
        if coeffs.n0 <= T::zero() {
            return Err(Error::param("n0", "Fisher estimation needs n0 > 0"));
        }
        let mut sampler = run;
        sampler.k_bond = coeffs.k_bond;
        sampler.sign = params.coupling_sign;
        sampler.drive_pattern = params.drive_pattern;
        Ok(Self {
            lattice: params.lattice.clone(),
            sampler,
            r0: coeffs.r0(),
            gain: coeffs.a,
            epsilon: params.epsilon_abs,
            phi: params.phi,
            delta: None,
            max_halvings: 3,
            coeffs: Some(*coeffs),
        })
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = Some(delta);
        self
    }

    fn h_of(&self, eps: T) -> T {
        T::lit(2.0) * eps * self.r0 / self.gain
    }

    /// Runs the chain at `(|ε|, φ)` with `X̂` measured at `phi_bar`.
    fn run_point(&self, eps: T, phi: T, phi_bar: T, replica: u64) -> Result<XyEstimates<T>> {
        let mut cfg = self.sampler.clone();
        cfg.h_field = self.h_of(eps);
        cfg.phi = wrap_angle(phi);
        cfg.measure_phi = Some(wrap_angle(phi_bar));
        cfg.replica = self.sampler.replica.wrapping_mul(64).wrapping_add(replica);
        let out = run_chain(&self.lattice, &cfg, None)?;
        estimate_observables(&out, self.r0)
    }

    fn theory(&self, delta_phi: T) -> Option<(T, T, T, T)> {
        let c = self.coeffs.as_ref()?;
        if self.lattice.dim != 1 {
            return None;
        }
        let p = predict_quadratures_and_qfi(c, self.lattice.n_sites(), delta_phi).ok()?;
        Some((p.fq_amplitude_paper, p.fq_amplitude_errorprop, p.fq_phase_paper, p.fq_phase_errorprop))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearityReport<T> {
    /// `⟨O⟩(x+δ) − ⟨O⟩(x−δ)`.
    pub response_full: Estimate<T>,
    pub response_half: Estimate<T>,
    /// `|R(δ) − 2R(δ/2)|` in units of its standard error.
    pub z: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherRun<T> {
    pub estimate: QfiEstimate<T>,
    pub linearity: LinearityReport<T>,
    pub halvings: usize,
    pub midpoint: XyEstimates<T>,
}

fn difference<T: Real>(a: &Estimate<T>, b: &Estimate<T>) -> Estimate<T> {
    Estimate::new(a.value - b.value, (a.std_error * a.std_error + b.std_error * b.std_error).sqrt())
}

fn linearity<T: Real>(full: Estimate<T>, half: Estimate<T>) -> LinearityReport<T> {
    let two = T::lit(2.0);
    let gap = (full.value - two * half.value).abs();
    let se = (full.std_error * full.std_error + T::lit(4.0) * half.std_error * half.std_error).sqrt();
    let z = gap / se;
    LinearityReport {
        response_full: full,
        response_half: half,
        z,
        passed: z <= T::lit(3.0),
    }
}

#[derive(Clone, Copy)]
enum Channel {
    Amplitude,
    Phase,
}

/// Generic driver: runs at `x ± δ`, `x ± δ/2` and `x`, halving `δ` until the response is linear.
fn estimate<T: Real>(problem: &FisherProblem<T>, channel: Channel, delta0: T) -> Result<FisherRun<T>> {
    problem.lattice.validate()?;
    problem.sampler.validate()?;
    if !(delta0 > T::zero() && delta0.is_finite()) {
        return Err(Error::param("delta", format!("finite-difference step must be > 0, got {delta0}")));
    }
    let (eps, phi) = (problem.epsilon, problem.phi);
    let point = |x: T, replica: u64| -> Result<XyEstimates<T>> {
        match channel {
            Channel::Amplitude => {
                if eps + x < T::zero() && eps > T::zero() {
                    return Err(Error::param("delta", "step exceeds the drive amplitude"));
                }
                problem.run_point(eps + x, phi, phi, replica)
            }
            Channel::Phase => problem.run_point(eps, phi + x, phi, replica),
        }
    };
    let observable = |e: &XyEstimates<T>| match channel {
        Channel::Amplitude => e.p_sum,
        Channel::Phase => e.x_sum,
    };
    let variance = |e: &XyEstimates<T>| match channel {
        Channel::Amplitude => e.p_var,
        Channel::Phase => e.x_var,
    };

    let mid = point(T::zero(), 0)?;
    let mut delta = delta0;
    let mut last = None;
    for halving in 0..=problem.max_halvings {
        let offsets = [delta, -delta, delta / T::lit(2.0), -delta / T::lit(2.0)];
        let base = 1 + 4 * halving as u64;
        let runs: Vec<XyEstimates<T>> = offsets
            .par_iter()
            .enumerate()
            .map(|(k, &x)| point(x, base + k as u64))
            .collect::<Result<_>>()?;
        let full = difference(&observable(&runs[0]), &observable(&runs[1]));
        let half = difference(&observable(&runs[2]), &observable(&runs[3]));
        let lin = linearity(full, half);
        let derivative = full.scale((T::lit(2.0) * delta).recip());
        let est = QfiEstimate::from_parts(derivative, variance(&mid), delta);
        let done = lin.passed;
        last = Some(FisherRun {
            estimate: est,
            linearity: lin,
            halvings: halving,
            midpoint: mid.clone(),
        });
        if done {
            break;
        }
        delta = delta / T::lit(2.0);
    }
    let run = last.expect("at least one attempt");
    if !run.linearity.passed {
        return Err(Error::Linearity(format!(
            "response at delta and delta/2 differ from factor 2 by {:.2} standard errors after {} halvings",
            run.linearity.z.as_f64(),
            run.halvings
        )));
    }
    Ok(run)
}

/// Fisher information for `|ε|` from `Σ_j P̂_j`.
pub fn estimate_qfi_amplitude<T: Real>(problem: &FisherProblem<T>) -> Result<FisherRun<T>> {
    let delta = match problem.delta {
        Some(d) => d,
        None if problem.epsilon > T::zero() => T::lit(0.2) * problem.epsilon,
        None => return Err(Error::param("delta", "zero drive amplitude needs an explicit step")),
    };
    let mut run = estimate(problem, Channel::Amplitude, delta)?;
    if let Some((paper, ep, _, _)) = problem.theory(T::zero()) {
        run.estimate.theory_paper = Some(paper);
        run.estimate.theory_errorprop = Some(ep);
    }
    Ok(run)
}

/// Fisher information for `φ` from `Σ_j X̂_j` at `φ̄ = φ`, with true phases `φ ± δφ`.
pub fn estimate_qfi_phase<T: Real>(problem: &FisherProblem<T>) -> Result<FisherRun<T>> {
    let delta = problem.delta.unwrap_or_else(|| T::lit(0.1));
    let mut run = estimate(problem, Channel::Phase, delta)?;
    if let Some((_, _, paper, ep)) = problem.theory(delta) {
        run.estimate.theory_paper = Some(paper);
        run.estimate.theory_errorprop = Some(ep);
    }
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElegantReport<T> {
    /// `ν⁻¹ ⟨Σ_j P̂_j⟩`.
    pub p_over_nu: Estimate<T>,
    /// `Σ_{ij} ⟨P̂_i P̂_j⟩`.
    pub pp_sum: Estimate<T>,
    /// `Σ_{ij} ⟨X̂_i X̂_j⟩`.
    pub xx_sum: Estimate<T>,
    pub z_p_pp: T,
    pub z_p_xx: T,
    pub z_pp_xx: T,
    /// Largest relative deviation of the three from their mean.
    pub max_rel_deviation: T,
}

impl<T: Real> ElegantReport<T> {
    pub fn max_z(&self) -> T {
        self.z_p_pp.max(self.z_p_xx).max(self.z_pp_xx)
    }
}

/// Compares `ν⁻¹⟨ΣP̂⟩`, `Σ⟨P̂P̂⟩` and `Σ⟨X̂X̂⟩` from one chain; z-scores use batch-wise
/// differences so correlations between the three are accounted for.
pub fn check_elegant_relation<T: Real>(stats: &SampleStats<T>, r0: T, nu: T) -> Result<ElegantReport<T>> {
    if !(nu > T::zero()) {
        return Err(Error::param("nu", "relation needs nu > 0"));
    }
    let two_r0 = T::lit(2.0) * r0;
    let q = two_r0 * two_r0;
    let s = stats.get(SIN_SUM)?;
    let s2 = stats.get(SIN_SUM_SQ)?;
    let c2 = stats.get(crate::observables::COS_SUM_SQ)?;
    for x in [s, s2, c2] {
        x.ensure_batches()?;
    }
    let p = -two_r0 / nu;
    let z_of = |terms: &[(T, &BatchSeries<T>)]| -> Result<T> {
        let d = BatchSeries::combine(terms)?;
        Ok(d.mean().abs() / d.std_error())
    };
    let p_over_nu = s.estimate().scale(p);
    let pp_sum = s2.estimate().scale(q);
    let xx_sum = c2.estimate().scale(q);
    let mean3 = (p_over_nu.value + pp_sum.value + xx_sum.value) / T::lit(3.0);
    let max_rel_deviation = [p_over_nu.value, pp_sum.value, xx_sum.value]
        .iter()
        .map(|v| ((*v - mean3) / mean3).abs())
        .fold(T::zero(), T::max);
    Ok(ElegantReport {
        p_over_nu,
        pp_sum,
        xx_sum,
        z_p_pp: z_of(&[(p, s), (-q, s2)])?,
        z_p_xx: z_of(&[(p, s), (-q, c2)])?,
        z_pp_xx: z_of(&[(q, s2), (-q, c2)])?,
        max_rel_deviation,
    })
}

/// Largest `ς` for which the linear optimal-observable argument is taken to hold.
pub const SLD_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SldReport<T> {
    pub varsigma: T,
    pub threshold: T,
    /// `ς ≤ threshold`.
    pub in_regime: bool,
}

pub fn check_sld_smallness<T: Real>(coeffs: &DerivedCoeffs<T>) -> SldReport<T> {
    check_sld_smallness_with(coeffs.varsigma, T::lit(SLD_THRESHOLD))
}

pub fn check_sld_smallness_with<T: Real>(varsigma: T, threshold: T) -> SldReport<T> {
    SldReport {
        varsigma,
        threshold,
        in_regime: varsigma <= threshold,
    }
}
