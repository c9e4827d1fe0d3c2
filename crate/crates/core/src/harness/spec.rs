use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::{derive_coeffs, CouplingSign, DerivedCoeffs, DrivePattern, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Meanfield,
    Sample,
    Langevin,
    Exact,
    QfiScaling,
    QuantumOracle,
    Kt2d,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Meanfield => "meanfield",
            Mode::Sample => "sample",
            Mode::Langevin => "langevin",
            Mode::Exact => "exact",
            Mode::QfiScaling => "qfi-scaling",
            Mode::QuantumOracle => "quantum-oracle",
            Mode::Kt2d => "kt-2d",
        }
    }

    fn is_scaling(self) -> bool {
        matches!(self, Mode::Exact | Mode::QfiScaling)
    }
}

/// Flat experiment description. Physical rates and direct XY weights are both optional;
/// each mode states which it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    /// Ring sizes, linear sizes for `kt-2d`, site counts for `quantum-oracle`.
    pub n_list: Vec<usize>,

    pub g: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(default)]
    pub t_hop: f64,
    #[serde(default = "unit")]
    pub kappa_tilde: f64,
    #[serde(default)]
    pub epsilon_abs: f64,
    #[serde(default)]
    pub phi: f64,
    /// Replaces the mean-field boson number.
    pub n0: Option<f64>,
    #[serde(default)]
    pub coupling_sign: CouplingSign,
    #[serde(default)]
    pub drive_pattern: DrivePattern,

    pub k_bond: Option<f64>,
    pub h_field: Option<f64>,

    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub replicates: usize,

    pub sweeps: Option<usize>,
    pub burn_in: Option<usize>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    /// Angular diffusion constant for `langevin` with direct weights.
    pub diffusion: Option<f64>,
    pub t_end: Option<f64>,
    /// Finite-difference half-step in `|ε|` for `qfi-scaling`.
    pub delta: Option<f64>,
    pub n_max: Option<usize>,
    pub max_distance: Option<usize>,
    pub output: Option<PathBuf>,
}

fn unit() -> f64 {
    1.0
}
fn one() -> usize {
    1
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn has_physics(&self) -> bool {
        self.g.is_some() && self.kappa.is_some() && self.gamma.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(invalid("n_list is empty"));
        }
        let min_n = if self.mode == Mode::QuantumOracle { 1 } else { 2 };
        if self.n_list.iter().any(|&n| n < min_n) {
            return Err(invalid(format!("{} needs n_list entries >= {min_n}", self.mode.as_str())));
        }
        if self.seeds.is_empty() || self.replicates == 0 {
            return Err(invalid("need at least one seed and one replicate"));
        }
        let partial = [self.g, self.kappa, self.gamma].iter().filter(|v| v.is_some()).count();
        if partial != 0 && partial != 3 {
            return Err(invalid("g, kappa and gamma must be given together"));
        }
        if self.mode.is_scaling() && self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_list must be strictly increasing for scaling modes"));
        }
        match self.mode {
            Mode::QfiScaling => {
                if self.n_list.len() < 3 {
                    return Err(invalid("qfi-scaling fits a slope and needs at least 3 sizes"));
                }
                if !self.has_physics() {
                    return Err(invalid("qfi-scaling needs g, kappa and gamma"));
                }
                if self.epsilon_abs == 0.0 && self.delta.is_none() {
                    return Err(invalid("qfi-scaling at zero drive needs an explicit delta"));
                }
            }
            Mode::Meanfield | Mode::QuantumOracle => {
                if !self.has_physics() {
                    return Err(invalid(format!("{} needs g, kappa and gamma", self.mode.as_str())));
                }
                if self.mode == Mode::QuantumOracle && self.n_list.iter().any(|&n| n > 2) {
                    return Err(invalid("quantum-oracle supports 1 or 2 sites"));
                }
            }
            Mode::Sample | Mode::Langevin | Mode::Exact | Mode::Kt2d => {
                if !self.has_physics() && self.k_bond.is_none() {
                    return Err(invalid(format!("{} needs k_bond or g, kappa and gamma", self.mode.as_str())));
                }
                if self.mode == Mode::Langevin && self.dt.is_none() {
                    return Err(invalid("langevin needs dt"));
                }
                if self.mode == Mode::Kt2d && self.n_list.iter().any(|&l| l < 3) {
                    return Err(invalid("kt-2d needs linear sizes >= 3"));
                }
            }
        }
        for (name, v) in [("t_hop", Some(self.t_hop)), ("epsilon_abs", Some(self.epsilon_abs)), ("k_bond", self.k_bond)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(invalid(format!("{name} must be finite and >= 0")));
                }
            }
        }
        for p in self.n_list.iter().filter(|&&n| n >= 2).filter_map(|&n| self.model_params(n)) {
            p.validate()?;
        }
        if let Some(p) = self.isolated_params() {
            p.validate()?;
        }
        Ok(())
    }

    pub fn lattice(&self, n: usize) -> LatticeSpec {
        match self.mode {
            Mode::Kt2d => LatticeSpec::square(n),
            _ => LatticeSpec::chain(n),
        }
    }

    pub fn model_params(&self, n: usize) -> Option<ModelParams<f64>> {
        let (g, kappa, gamma) = (self.g?, self.kappa?, self.gamma?);
        let mut p = ModelParams::ring(n, g, kappa, gamma)
            .with_hopping(self.t_hop, self.kappa_tilde)
            .with_drive(self.epsilon_abs, self.phi);
        p.lattice = self.lattice(n);
        p.coupling_sign = self.coupling_sign;
        p.drive_pattern = self.drive_pattern;
        Some(p)
    }

    /// A decoupled pair standing in for one isolated laser in the mean-field formulas.
    pub fn isolated_params(&self) -> Option<ModelParams<f64>> {
        let mut p = self.model_params(2)?;
        p.t_hop = 0.0;
        Some(p)
    }

    pub fn coeffs(&self, n: usize) -> Result<Option<DerivedCoeffs<f64>>> {
        self.model_params(n).map(|p| derive_coeffs(&p, self.n0)).transpose()
    }

    /// `(K_bond, h_field)`: direct values win over derived ones.
    pub fn weights(&self, coeffs: Option<&DerivedCoeffs<f64>>) -> (f64, f64) {
        let k = self.k_bond.or(coeffs.map(|c| c.k_bond)).unwrap_or(0.0);
        let h = self.h_field.or(coeffs.map(|c| c.h_field())).unwrap_or(0.0);
        (k, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_exact_spec() {
        let s = ExperimentSpec::from_json(r#"{"mode":"exact","n_list":[4,8,16],"k_bond":2.0}"#).unwrap();
        assert_eq!(s.mode, Mode::Exact);
        assert_eq!(s.seeds, vec![1]);
        assert_eq!(s.weights(None), (2.0, 0.0));
    }

    #[test]
    fn rejections() {
        for bad in [
            r#"{"mode":"exact","n_list":[],"k_bond":2.0}"#,
            r#"{"mode":"sample","n_list":[1,4],"k_bond":2.0}"#,
            r#"{"mode":"exact","n_list":[8,4,16],"k_bond":2.0}"#,
            r#"{"mode":"exact","n_list":[4],"k_bond":2.0,"colour":1}"#,
            r#"{"mode":"warp","n_list":[4]}"#,
            r#"{"mode":"sample","n_list":[4]}"#,
            r#"{"mode":"qfi-scaling","n_list":[4,8],"g":1,"kappa":0.1,"gamma":10,"epsilon_abs":0.01}"#,
            r#"{"mode":"quantum-oracle","n_list":[3],"g":1,"kappa":0.1,"gamma":10}"#,
            r#"{"mode":"meanfield","n_list":[4],"g":1,"kappa":0.1}"#,
            r#"{"mode":"meanfield","n_list":[4],"g":1,"kappa":-0.1,"gamma":5}"#,
        ] {
            let err = ExperimentSpec::from_json(bad).unwrap_err();
            assert!(err.is_input_error(), "{bad}: {err}");
        }
    }

    #[test]
    fn derived_weights() {
        let s = ExperimentSpec::from_json(
            r#"{"mode":"sample","n_list":[4],"g":1,"kappa":0.1,"gamma":10,"t_hop":0.1,"kappa_tilde":1,"n0":25,"epsilon_abs":0.001}"#,
        )
        .unwrap();
        let c = s.coeffs(4).unwrap().unwrap();
        let (k, h) = s.weights(Some(&c));
        assert!((k - 4.0 * c.varsigma * 25.0).abs() < 1e-12);
        assert!((h - 2.0 * c.nu * 5.0).abs() < 1e-12);
    }
}
