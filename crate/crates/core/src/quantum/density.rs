use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::ops::{SparseOp, TruncatedHilbert};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const TAIL_TOL: f64 = 1e-6;

/// Row-major density matrix on a [`TruncatedHilbert`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    pub hilbert: TruncatedHilbert,
    pub data: Vec<Complex<T>>,
}

/// Local pure state: qubit excited or not, mode amplitude vector over `0..=n_max`.
#[derive(Debug, Clone)]
pub struct LocalState<T> {
    pub excited: bool,
    pub mode: Vec<Complex<T>>,
}

impl<T: Real> LocalState<T> {
    pub fn vacuum(n_max: usize, excited: bool) -> Self {
        let mut mode = vec![Complex::default(); n_max + 1];
        mode[0] = Complex::new(T::one(), T::zero());
        Self { excited, mode }
    }

    /// Truncated coherent state `|α⟩`, renormalised on the retained levels.
    pub fn coherent(n_max: usize, alpha: Complex<T>, excited: bool) -> Self {
        let mut mode = Vec::with_capacity(n_max + 1);
        let mut c = Complex::new(T::one(), T::zero());
        mode.push(c);
        for n in 1..=n_max {
            c = c * alpha / T::from_usize_lossy(n).sqrt();
            mode.push(c);
        }
        let norm = mode.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for z in &mut mode {
            *z = *z / norm;
        }
        Self { excited, mode }
    }
}

impl<T: Real> DensityMatrix<T> {
    pub fn zeros(hilbert: TruncatedHilbert) -> Self {
        Self {
            hilbert,
            data: vec![Complex::default(); hilbert.dims * hilbert.dims],
        }
    }

    /// `|ψ⟩⟨ψ|` for a product of local pure states.
    pub fn product(hilbert: TruncatedHilbert, sites: &[LocalState<T>]) -> Result<Self> {
        if sites.len() != hilbert.n_sites {
            return Err(Error::param("sites", format!("expected {} local states, got {}", hilbert.n_sites, sites.len())));
        }
        for s in sites {
            if s.mode.len() != hilbert.n_max + 1 {
                return Err(Error::param("sites", "local mode vector does not match the cutoff"));
            }
        }
        let psi: Vec<Complex<T>> = (0..hilbert.dims)
            .map(|i| {
                (0..hilbert.n_sites).fold(Complex::new(T::one(), T::zero()), |acc, j| {
                    let (q, n) = hilbert.decode(i, j);
                    if q == sites[j].excited {
                        acc * sites[j].mode[n]
                    } else {
                        Complex::default()
                    }
                })
            })
            .collect();
        let mut rho = Self::zeros(hilbert);
        let d = hilbert.dims;
        for i in 0..d {
            for j in 0..d {
                rho.data[i * d + j] = psi[i] * psi[j].conj();
            }
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.hilbert.dims
    }

    pub fn trace(&self) -> Complex<T> {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).fold(Complex::default(), |a, b| a + b)
    }

    pub fn hermiticity_error(&self) -> T {
        let d = self.dim();
        let mut worst = T::zero();
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// Replaces `ρ` by `(ρ + ρ†)/2` and rescales to unit trace.
    pub fn renormalize(&mut self) {
        let d = self.dim();
        let half = T::lit(0.5);
        for i in 0..d {
            for j in i..d {
                let m = (self.data[i * d + j] + self.data[j * d + i].conj()) * half;
                self.data[i * d + j] = m;
                self.data[j * d + i] = m.conj();
            }
        }
        let tr = self.trace().re;
        for z in &mut self.data {
            *z = *z / tr;
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| {
            let z = self.data[i * d + j];
            nalgebra::Complex::new(z.re.as_f64(), z.im.as_f64())
        });
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Hermiticity, unit trace and positivity within the module tolerances.
    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error().as_f64();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("hermiticity error {herm:e}")));
        }
        let tr = self.trace();
        if (tr.re.as_f64() - 1.0).abs() > TRACE_TOL || tr.im.as_f64().abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let lo = self.min_eigenvalue();
        if lo < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("eigenvalue {lo:e}")));
        }
        Ok(())
    }

    pub fn expect(&self, op: &SparseOp<T>) -> Complex<T> {
        op.trace_with(&self.data)
    }

    /// Population of the top Fock level of `site`.
    pub fn tail_population(&self, site: usize) -> T {
        let d = self.dim();
        (0..d)
            .filter(|&i| self.hilbert.decode(i, site).1 == self.hilbert.n_max)
            .map(|i| self.data[i * d + i].re)
            .sum()
    }

    /// Fails unless every site's top level holds less than [`TAIL_TOL`].
    pub fn certify_cutoff(&self) -> Result<()> {
        for site in 0..self.hilbert.n_sites {
            let p = self.tail_population(site).as_f64();
            if p >= TAIL_TOL {
                return Err(Error::InvalidState(format!(
                    "site {site} holds {p:e} in Fock level {}; raise n_max",
                    self.hilbert.n_max
                )));
            }
        }
        Ok(())
    }

    /// `ρ` with the two sites exchanged.
    pub fn swapped(&self) -> Self {
        let h = self.hilbert;
        if h.n_sites == 1 {
            return self.clone();
        }
        let ld = h.local_dim();
        let sw = |i: usize| (i % ld) * ld + i / ld;
        let d = h.dims;
        let mut out = Self::zeros(h);
        for i in 0..d {
            for j in 0..d {
                out.data[sw(i) * d + sw(j)] = self.data[i * d + j];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }
}
