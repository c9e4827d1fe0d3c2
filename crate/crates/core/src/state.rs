//! Lattice configurations: phase angles and complex field amplitudes.

use num_complex::Complex;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::scalar::{wrap_angle, Real};

/// Phase angle per site, kept in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularConfig<T> {
    pub theta: Vec<T>,
}

impl<T: Real> AngularConfig<T> {
    pub fn new(theta: Vec<T>) -> Self {
        Self {
            theta: theta.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn uniform(n: usize, value: T) -> Self {
        Self::new(vec![value; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            theta: (0..n).map(|_| T::sample_unit(rng) * T::two_pi()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn check(&self, lattice: &LatticeSpec) -> Result<()> {
        if self.theta.len() != lattice.n_sites() {
            return Err(Error::param(
                "theta",
                format!("{} angles for {} sites", self.theta.len(), lattice.n_sites()),
            ));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("theta", "non-finite angle"));
        }
        Ok(())
    }

    /// Rotates every angle by `c`.
    pub fn rotated(&self, c: T) -> Self {
        Self::new(self.theta.iter().map(|&t| t + c).collect())
    }
}

/// Complex amplitude `α_j` per site.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig<T> {
    pub alpha: Vec<Complex<T>>,
}

impl<T: Real> FieldConfig<T> {
    pub fn new(alpha: Vec<Complex<T>>) -> Self {
        Self { alpha }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Complex::new(T::zero(), T::zero()); n])
    }

    /// Amplitude `r` with the phases of `angles`.
    pub fn from_polar(r: T, angles: &AngularConfig<T>) -> Self {
        Self::new(angles.theta.iter().map(|&t| Complex::from_polar(r, t)).collect())
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn check(&self, lattice: &LatticeSpec) -> Result<()> {
        if self.alpha.len() != lattice.n_sites() {
            return Err(Error::param(
                "alpha",
                format!("{} amplitudes for {} sites", self.alpha.len(), lattice.n_sites()),
            ));
        }
        if self.alpha.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::param("alpha", "non-finite amplitude"));
        }
        Ok(())
    }

    pub fn angles(&self) -> AngularConfig<T> {
        AngularConfig::new(self.alpha.iter().map(|a| a.arg()).collect())
    }
}
