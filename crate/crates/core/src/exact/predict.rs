//! First-order predictions for the quadrature sums, Fisher information and the 2D spin-wave regime.

use serde::Serialize;

use super::chain::{finite_size_metric, ChainSpec, RingCorrelator};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::DerivedCoeffs;
use crate::scalar::Real;

/// Predictions for an `N`-site ring in the ferromagnetic (or staggered-equivalent) reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraturePrediction<T> {
    pub n: usize,
    /// `Σ_{d=0}^{N−1} G(d)` from the exact ring.
    pub sum_g: T,
    /// `N/ξ`; infinite when the bond coupling vanishes.
    pub finite_size_metric: T,
    pub long_range: bool,
    /// `(2n₀|ε|/(C_p κ)) · N · ΣG`.
    pub p_sum_general: T,
    /// `2n₀νN²`, the general form with `ΣG → N`.
    pub p_sum_reduced: T,
    /// `4n₀νN²`.
    pub p_sum_paper: T,
    /// `δφ · 2n₀νN · ΣG`.
    pub x_sum_general: T,
    /// `δφ · 4n₀νN²`.
    pub x_sum_paper: T,
    /// `2n₀N²/(C_p κ)`.
    pub fq_amplitude_paper: T,
    /// `2n₀N²|ε|²/(C_p κ)`.
    pub fq_phase_paper: T,
    /// `(∂⟨P̂_sum⟩/∂|ε|)² / Δ²P̂_sum = 2n₀NΣG / A²`.
    pub fq_amplitude_errorprop: T,
    /// `|ε|² · fq_amplitude_errorprop`.
    pub fq_phase_errorprop: T,
}

pub fn predict_quadratures_and_qfi<T: Real>(
    coeffs: &DerivedCoeffs<T>,
    n: usize,
    delta_phi: T,
) -> Result<QuadraturePrediction<T>> {
    if n == 0 {
        return Err(Error::param("n", "need at least one site"));
    }
    let (sum_g, metric, long_range) = if n == 1 {
        (T::one(), T::zero(), true)
    } else {
        let corr = RingCorrelator::new(&ChainSpec::new(n, coeffs.k_bond))?;
        let fs = finite_size_metric(n, coeffs.k_bond)?;
        (corr.sum()?, fs.metric, fs.long_range)
    };
    let two = T::lit(2.0);
    let nn = T::from_usize_lossy(n);
    let n0 = coeffs.n0;
    let eps = coeffs.nu * coeffs.a;
    // C_p κ = g²/γ = A
    let c_p_kappa = coeffs.a;
    let p_general = two * n0 * eps / c_p_kappa * nn * sum_g;
    let p_reduced = two * n0 * coeffs.nu * nn * nn;
    let p_paper = two * p_reduced;
    let fq_amp_paper = two * n0 * nn * nn / c_p_kappa;
    let fq_amp_ep = two * n0 * nn * sum_g / (coeffs.a * coeffs.a);
    Ok(QuadraturePrediction {
        n,
        sum_g,
        finite_size_metric: metric,
        long_range,
        p_sum_general: p_general,
        p_sum_reduced: p_reduced,
        p_sum_paper: p_paper,
        x_sum_general: delta_phi * p_general,
        x_sum_paper: delta_phi * p_paper,
        fq_amplitude_paper: fq_amp_paper,
        fq_phase_paper: fq_amp_paper * eps * eps,
        fq_amplitude_errorprop: fq_amp_ep,
        fq_phase_errorprop: fq_amp_ep * eps * eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KtRegime {
    QuasiLongRange,
    Boundary,
    Disordered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KtPrediction<T> {
    pub beta_varsigma: T,
    pub n0_varsigma: T,
    pub regime: KtRegime,
    /// Spin-wave exponent `1/(2πn₀ς)`.
    pub eta_paper: T,
    /// Spin-wave exponent of the bond coupling actually sampled, `1/(2πK_bond)`.
    pub eta_bond: T,
    /// `N_linear^{eta_paper}`.
    pub size_metric: T,
}

/// Relative width of the [`KtRegime::Boundary`] band around `n₀ς = 2/π`.
const BOUNDARY_BAND: f64 = 1e-12;

pub fn kt_predictions<T: Real>(coeffs: &DerivedCoeffs<T>, lattice: &LatticeSpec, n_linear: usize) -> Result<KtPrediction<T>> {
    if lattice.dim != 2 {
        return Err(Error::param("lattice", format!("spin-wave predictions need a 2D lattice, got dim {}", lattice.dim)));
    }
    let x = coeffs.n0 * coeffs.varsigma;
    let crit = T::lit(2.0) / T::PI();
    let regime = if (x - crit).abs() <= crit * T::lit(BOUNDARY_BAND) {
        KtRegime::Boundary
    } else if x > crit {
        KtRegime::QuasiLongRange
    } else {
        KtRegime::Disordered
    };
    let eta_paper = (T::two_pi() * x).recip();
    Ok(KtPrediction {
        beta_varsigma: coeffs.beta_eff * coeffs.varsigma,
        n0_varsigma: x,
        regime,
        eta_paper,
        eta_bond: (T::two_pi() * coeffs.k_bond).recip(),
        size_metric: T::from_usize_lossy(n_linear).powf(eta_paper),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_coeffs, ModelParams};
    use approx::assert_relative_eq;

    /// `C_p = 1`, `κ = 1` and `n₀ = 100`.
    fn unit_coeffs(eps: f64) -> DerivedCoeffs<f64> {
        let p = ModelParams::ring(4, 1.0, 1.0, 1.0).with_drive(eps, 0.0);
        derive_coeffs(&p, Some(100.0)).unwrap()
    }

    #[test]
    fn amplitude_fisher_by_substitution() {
        let c = unit_coeffs(0.0);
        let p = predict_quadratures_and_qfi(&c, 4, 0.0).unwrap();
        assert_relative_eq!(p.fq_amplitude_paper, 3200.0, max_relative = 1e-15);
        assert_eq!(p.fq_phase_paper, 0.0);
        let one = predict_quadratures_and_qfi(&c, 1, 0.0).unwrap();
        assert_relative_eq!(one.fq_amplitude_paper, 200.0, max_relative = 1e-15);
    }

    #[test]
    fn decoupled_ring_has_unit_correlation_sum() {
        let c = unit_coeffs(0.01);
        let p = predict_quadratures_and_qfi(&c, 8, 0.1).unwrap();
        assert_eq!(c.k_bond, 0.0);
        assert_relative_eq!(p.sum_g, 1.0, max_relative = 1e-14);
        assert!(!p.long_range);
        assert_relative_eq!(p.p_sum_general, 2.0 * 100.0 * c.nu * 8.0, max_relative = 1e-13);
        assert_relative_eq!(p.x_sum_general, 0.1 * p.p_sum_general, max_relative = 1e-15);
    }

    #[test]
    fn long_range_general_form_approaches_reduced() {
        let p = ModelParams::ring(8, 1.0, 0.1, 10.0).with_hopping(0.5, 5.0).with_drive(1e-3, 0.0);
        let c = derive_coeffs(&p, Some(200.0)).unwrap();
        let pr = predict_quadratures_and_qfi(&c, 8, 0.0).unwrap();
        assert!(pr.long_range);
        assert!((pr.p_sum_general / pr.p_sum_reduced - 1.0f64).abs() < 0.05);
        assert_relative_eq!(pr.p_sum_paper, 2.0 * pr.p_sum_reduced);
        let ratio = pr.fq_phase_errorprop / pr.fq_amplitude_errorprop;
        assert_relative_eq!(ratio, 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn spin_wave_values() {
        // ς = 0.5 here, so n₀ = 20 gives n₀ς = 10
        let p = ModelParams::ring(4, 1.0, 0.1, 10.0).with_hopping(0.5, 5.0);
        let lat = LatticeSpec::square(32);
        let c = derive_coeffs(&p, Some(20.0)).unwrap();
        let kt = kt_predictions(&c, &lat, 32).unwrap();
        assert_relative_eq!(kt.eta_paper, 1.0 / (20.0 * std::f64::consts::PI), max_relative = 1e-14);
        assert!((kt.eta_paper - 0.0159).abs() < 1e-4);
        assert_eq!(kt.regime, KtRegime::QuasiLongRange);
        assert_relative_eq!(kt.eta_bond, kt.eta_paper / 4.0, max_relative = 1e-14);

        let at = derive_coeffs(&p, Some(2.0 * 2.0 / std::f64::consts::PI)).unwrap();
        assert_eq!(kt_predictions(&at, &lat, 32).unwrap().regime, KtRegime::Boundary);
        let cold = derive_coeffs(&p, Some(1e8)).unwrap();
        assert!((kt_predictions(&cold, &lat, 32).unwrap().size_metric - 1.0).abs() < 1e-6);
        assert!(kt_predictions(&c, &LatticeSpec::chain(8), 8).is_err());
    }
}
