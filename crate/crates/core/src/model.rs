//! Physical parameters of the qubit-laser lattice and the effective constants derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::scalar::{wrap_angle, Real};

/// Sign of the dissipative bond. `Antiferro` is the bare `a_j + a_{j+1}` coupling;
/// `Ferro` is obtained by alternating the tunnelling sign (`a_j - a_{j+1}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CouplingSign {
    #[default]
    Antiferro,
    Ferro,
}

impl CouplingSign {
    /// `+1` for ferro, `-1` for antiferro: multiplies `K Σ cos(θ_j − θ_k)` in the log-density.
    pub fn alignment<T: Real>(self) -> T {
        match self {
            CouplingSign::Ferro => T::one(),
            CouplingSign::Antiferro => -T::one(),
        }
    }
}

/// Drive phase pattern across the lattice. `Staggered` adds `π` on odd checkerboard sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DrivePattern {
    #[default]
    Uniform,
    Staggered,
}

impl DrivePattern {
    pub fn site_phase<T: Real>(self, phi: T, lattice: &LatticeSpec, site: usize) -> T {
        match self {
            DrivePattern::Uniform => phi,
            DrivePattern::Staggered => wrap_angle(phi + T::PI() * T::from_usize_lossy(lattice.parity(site))),
        }
    }

    pub fn phases<T: Real>(self, phi: T, lattice: &LatticeSpec) -> Vec<T> {
        (0..lattice.n_sites()).map(|s| self.site_phase(phi, lattice, s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams<T> {
    /// Qubit-field coupling rate.
    pub g: T,
    /// Mode loss rate.
    pub kappa: T,
    /// Incoherent qubit pump rate.
    pub gamma: T,
    /// Photon tunnelling amplitude to the auxiliary modes.
    pub t_hop: T,
    /// Decay rate of the auxiliary modes.
    pub kappa_tilde: T,
    pub epsilon_abs: T,
    pub phi: T,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub coupling_sign: CouplingSign,
    #[serde(default)]
    pub drive_pattern: DrivePattern,
}

impl<T: Real> ModelParams<T> {
    /// Single-qubit-laser defaults on a ring of `n` sites, no drive, no hopping.
    pub fn ring(n: usize, g: T, kappa: T, gamma: T) -> Self {
        Self {
            g,
            kappa,
            gamma,
            t_hop: T::zero(),
            kappa_tilde: T::one(),
            epsilon_abs: T::zero(),
            phi: T::zero(),
            lattice: LatticeSpec::chain(n),
            coupling_sign: CouplingSign::Antiferro,
            drive_pattern: DrivePattern::Uniform,
        }
    }

    pub fn with_hopping(mut self, t_hop: T, kappa_tilde: T) -> Self {
        self.t_hop = t_hop;
        self.kappa_tilde = kappa_tilde;
        self
    }

    pub fn with_drive(mut self, epsilon_abs: T, phi: T) -> Self {
        self.epsilon_abs = epsilon_abs;
        self.phi = wrap_angle(phi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("kappa_tilde", self.kappa_tilde),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("t_hop", self.t_hop), ("epsilon_abs", self.epsilon_abs)] {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.phi.is_finite() {
            return Err(Error::param("phi", "not finite"));
        }
        self.lattice.validate()
    }

    /// Drive phase at `site`, including the staggered offset when selected.
    pub fn site_phase(&self, site: usize) -> T {
        self.drive_pattern.site_phase(wrap_angle(self.phi), &self.lattice, site)
    }
}

/// Effective constants of the adiabatically reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoeffs<T> {
    /// Linear gain `g²/γ`.
    pub a: T,
    /// Saturation `2g⁴/γ³`.
    pub b: T,
    /// On-site loss `κ + D`.
    pub c: T,
    /// Dissipative hopping `t²/κ̃`.
    pub d: T,
    pub lambda: T,
    pub mu: T,
    pub nu: T,
    pub varsigma: T,
    pub c_p: T,
    pub c_p_tilde: T,
    pub n_mf: T,
    /// Steady bosons per site.
    pub n0: T,
    pub beta_eff: T,
    /// XY bond coupling `4ςn₀`.
    pub k_bond: T,
}

impl<T: Real> DerivedCoeffs<T> {
    pub fn r0(&self) -> T {
        self.n0.sqrt()
    }

    /// Drive weight `2ν√n₀` in the angular log-density.
    pub fn h_field(&self) -> T {
        T::lit(2.0) * self.nu * self.r0()
    }

    /// Angular diffusion constant `A/n₀`.
    pub fn angular_diffusion(&self) -> T {
        self.a / self.n0
    }
}

/// Diagnostics about the validity of the adiabatic reduction. Never fatal.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// `γ / max(g, κ, |ε|)` below the configured separation.
    WeakPumpSeparation { ratio: f64 },
    /// Below the renormalised lasing threshold without an explicit `n₀`.
    BelowThreshold { c_p_tilde: f64 },
}

/// Minimum `γ / max(g, κ, |ε|)` before a [`Diagnostic::WeakPumpSeparation`] is raised.
pub const PUMP_SEPARATION: f64 = 10.0;

pub fn validity_diagnostics<T: Real>(params: &ModelParams<T>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let scale = params.g.max(params.kappa).max(params.epsilon_abs);
    let ratio = (params.gamma / scale).as_f64();
    if ratio < PUMP_SEPARATION {
        out.push(Diagnostic::WeakPumpSeparation { ratio });
    }
    let (_, c_p_tilde) = pumping_parameters(params);
    if c_p_tilde <= T::one() {
        out.push(Diagnostic::BelowThreshold {
            c_p_tilde: c_p_tilde.as_f64(),
        });
    }
    out
}

/// `(C_p, C̃_p)` with `C̃_p = C_p / (1 + 3(t/κ)²)`.
pub fn pumping_parameters<T: Real>(p: &ModelParams<T>) -> (T, T) {
    let c_p = p.g * p.g / (p.kappa * p.gamma);
    let ratio = p.t_hop / p.kappa;
    let c_p_tilde = c_p / (T::one() + T::lit(3.0) * ratio * ratio);
    (c_p, c_p_tilde)
}

/// Computes every effective constant. `n0_override` replaces the mean-field boson number.
pub fn derive_coeffs<T: Real>(params: &ModelParams<T>, n0_override: Option<T>) -> Result<DerivedCoeffs<T>> {
    params.validate()?;
    if let Some(n0) = n0_override {
        if !(n0.is_finite() && n0 > T::zero()) {
            return Err(Error::param("n0_override", format!("must be > 0, got {n0}")));
        }
    }
    for diag in validity_diagnostics(params) {
        match diag {
            Diagnostic::WeakPumpSeparation { ratio } => {
                log::warn!("gamma/max(g, kappa, |eps|) = {ratio:.3} < {PUMP_SEPARATION}: adiabatic elimination questionable")
            }
            Diagnostic::BelowThreshold { c_p_tilde } if n0_override.is_none() => {
                log::warn!("renormalised pumping {c_p_tilde:.4} <= 1: n0 reported as 0")
            }
            Diagnostic::BelowThreshold { .. } => {}
        }
    }

    let two = T::lit(2.0);
    let (g, kappa, gamma) = (params.g, params.kappa, params.gamma);
    let a = g * g / gamma;
    let b = two * g.powi(4) / gamma.powi(3);
    let d = params.t_hop * params.t_hop / params.kappa_tilde;
    let c = kappa + d;
    let (c_p, c_p_tilde) = pumping_parameters(params);
    let n_mf = two * gamma * gamma / (g * g);
    let n0_mf = if c_p_tilde > T::one() {
        n_mf * (c_p_tilde - T::one())
    } else {
        T::zero()
    };
    let n0 = n0_override.unwrap_or(n0_mf);
    let varsigma = d / a;
    Ok(DerivedCoeffs {
        a,
        b,
        c,
        d,
        lambda: b / (two * a),
        mu: (a - c) / a,
        nu: params.epsilon_abs / a,
        varsigma,
        c_p,
        c_p_tilde,
        n_mf,
        n0,
        beta_eff: n0 / (c_p * kappa),
        k_bond: T::lit(4.0) * varsigma * n0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn decoupled_limit() {
        let p = ModelParams::ring(4, 1.0, 0.1, 5.0);
        let c = derive_coeffs(&p, None).unwrap();
        assert_eq!(c.d, 0.0);
        assert_eq!(c.c, p.kappa);
        assert_eq!(c.c_p, c.c_p_tilde);
    }

    #[test]
    fn single_laser_substitution() {
        let p = ModelParams::ring(4, 1.0, 0.1, 5.0);
        let c = derive_coeffs(&p, None).unwrap();
        assert_relative_eq!(c.c_p, 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.n_mf, 50.0, max_relative = 1e-15);
        assert_relative_eq!(c.n0, 50.0, max_relative = 1e-14);
    }

    #[test]
    fn hand_evaluated_coefficients() {
        // A = 1/10, D = 0.25/5 = 0.05, ς = D/A = 0.5
        let p = ModelParams::ring(4, 1.0, 0.1, 10.0).with_hopping(0.5, 5.0);
        let c = derive_coeffs(&p, None).unwrap();
        assert_relative_eq!(c.a, 0.1, max_relative = 1e-15);
        assert_relative_eq!(c.d, 0.05, max_relative = 1e-15);
        assert_relative_eq!(c.varsigma, 0.5, max_relative = 1e-15);
        assert_relative_eq!(c.b, 2.0 / 1000.0, max_relative = 1e-15);
        assert_relative_eq!(c.c, 0.15, max_relative = 1e-15);
        assert_relative_eq!(c.lambda, 0.01, max_relative = 1e-14);
        assert_relative_eq!(c.mu, -0.5, max_relative = 1e-14);
    }

    #[test]
    fn override_and_k_bond() {
        let p = ModelParams::ring(4, 1.0, 0.1, 10.0).with_hopping(0.5, 5.0);
        let c = derive_coeffs(&p, Some(7.0)).unwrap();
        assert_eq!(c.n0, 7.0);
        assert_relative_eq!(c.k_bond, 4.0 * 0.5 * 7.0, max_relative = 1e-15);
        assert_relative_eq!(c.beta_eff, 7.0 / (c.c_p * 0.1), max_relative = 1e-15);
        assert!(derive_coeffs(&p, Some(0.0)).is_err());
    }

    #[test]
    fn below_threshold_reports_zero() {
        let p = ModelParams::ring(4, 1.0, 1.0, 5.0);
        let c = derive_coeffs(&p, None).unwrap();
        assert!(c.c_p_tilde < 1.0);
        assert_eq!(c.n0, 0.0);
    }

    #[test]
    fn rejects_bad_rates() {
        let mut p = ModelParams::ring(4, 1.0, 0.1, 5.0);
        p.kappa = 0.0;
        assert!(derive_coeffs(&p, None).is_err());
        let mut p = ModelParams::ring(4, 1.0, 0.1, 5.0);
        p.t_hop = -0.1;
        assert!(derive_coeffs(&p, None).is_err());
    }

    #[test]
    fn weak_separation_is_diagnosed() {
        let p = ModelParams::ring(4, 1.0, 0.1, 5.0);
        let d = validity_diagnostics(&p);
        assert!(matches!(d[0], Diagnostic::WeakPumpSeparation { ratio } if (ratio - 5.0).abs() < 1e-12));
        let p = ModelParams::ring(4, 1.0, 0.01, 50.0);
        assert!(validity_diagnostics(&p).is_empty());
    }

    #[test]
    fn staggered_phases_alternate() {
        let mut p = ModelParams::ring(4, 1.0, 0.1, 5.0).with_drive(0.1, 0.3);
        p.drive_pattern = DrivePattern::Staggered;
        assert_relative_eq!(p.site_phase(0), 0.3);
        assert_relative_eq!(p.site_phase(1), 0.3 + std::f64::consts::PI, max_relative = 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let p = ModelParams::<f32>::ring(4, 1.0, 0.1, 5.0);
        let c = derive_coeffs(&p, None).unwrap();
        assert!((c.n0 - 50.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn pure_and_renormalised_pumping_bounded(
            g in 0.1f64..3.0, kappa in 0.01f64..2.0, gamma in 0.5f64..50.0,
            t in 0.0f64..2.0, kt in 0.1f64..10.0,
        ) {
            let p = ModelParams::ring(3, g, kappa, gamma).with_hopping(t, kt);
            let c1 = derive_coeffs(&p, None).unwrap();
            let c2 = derive_coeffs(&p, None).unwrap();
            prop_assert_eq!(c1.a.to_bits(), c2.a.to_bits());
            prop_assert_eq!(c1.n0.to_bits(), c2.n0.to_bits());
            prop_assert_eq!(c1.k_bond.to_bits(), c2.k_bond.to_bits());
            prop_assert!(c1.c_p_tilde <= c1.c_p);
            prop_assert_eq!(c1.c_p_tilde == c1.c_p, t == 0.0);
        }
    }
}
