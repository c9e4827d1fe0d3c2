//! Truncated qubit-plus-mode Hilbert spaces and sparse operators acting on dense matrices.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_BUDGET: usize = 4096;

/// Product of one qubit and one truncated bosonic mode per site.
///
/// The local basis index is `q·(n_max+1) + n` with `q = 0` ground and `q = 1` excited.
/// Site 0 is the most significant factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedHilbert {
    pub n_sites: usize,
    pub n_max: usize,
    pub dims: usize,
}

impl TruncatedHilbert {
    pub fn new(n_sites: usize, n_max: usize) -> Result<Self> {
        Self::with_budget(n_sites, n_max, DEFAULT_BUDGET)
    }

    pub fn with_budget(n_sites: usize, n_max: usize, budget: usize) -> Result<Self> {
        if !(1..=2).contains(&n_sites) {
            return Err(Error::param("n_sites", format!("quantum oracle supports 1 or 2 sites, got {n_sites}")));
        }
        if n_max == 0 {
            return Err(Error::param("n_max", "Fock cutoff must be at least 1"));
        }
        let local = 2 * (n_max + 1);
        let dims = local.checked_pow(n_sites as u32).unwrap_or(usize::MAX);
        if dims > budget {
            return Err(Error::HilbertBudget { dims, budget });
        }
        Ok(Self { n_sites, n_max, dims })
    }

    pub fn local_dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn local_index(&self, excited: bool, n: usize) -> usize {
        usize::from(excited) * (self.n_max + 1) + n
    }

    /// `(excited, n)` of site `site` in global basis state `index`.
    pub fn decode(&self, index: usize, site: usize) -> (bool, usize) {
        let d = self.local_dim();
        let l = if self.n_sites == 1 {
            index
        } else if site == 0 {
            index / d
        } else {
            index % d
        };
        (l > self.n_max, l % (self.n_max + 1))
    }

    /// Lifts a local operator given as `(row, col, value)` triples to the full space.
    fn embed<T: Real>(&self, site: usize, local: &[(usize, usize, Complex<T>)]) -> SparseOp<T> {
        let d = self.local_dim();
        let mut op = SparseOp::zero(self.dims);
        if self.n_sites == 1 {
            op.entries.extend_from_slice(local);
            return op;
        }
        for &(r, c, v) in local {
            for other in 0..d {
                let (row, col) = if site == 0 {
                    (r * d + other, c * d + other)
                } else {
                    (other * d + r, other * d + c)
                };
                op.entries.push((row, col, v));
            }
        }
        op
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites: self.n_sites });
        }
        Ok(())
    }

    /// Mode annihilation operator `a_site`.
    pub fn annihilation<T: Real>(&self, site: usize) -> Result<SparseOp<T>> {
        self.check_site(site)?;
        let mut local = Vec::new();
        for q in [false, true] {
            for n in 1..=self.n_max {
                let v = Complex::new(T::from_usize_lossy(n).sqrt(), T::zero());
                local.push((self.local_index(q, n - 1), self.local_index(q, n), v));
            }
        }
        Ok(self.embed(site, &local))
    }

    /// Qubit raising operator `σ⁺ = |e⟩⟨g|`.
    pub fn sigma_plus<T: Real>(&self, site: usize) -> Result<SparseOp<T>> {
        self.check_site(site)?;
        let local: Vec<_> = (0..=self.n_max)
            .map(|n| (self.local_index(true, n), self.local_index(false, n), Complex::new(T::one(), T::zero())))
            .collect();
        Ok(self.embed(site, &local))
    }

    pub fn sigma_z<T: Real>(&self, site: usize) -> Result<SparseOp<T>> {
        self.check_site(site)?;
        let mut local = Vec::new();
        for n in 0..=self.n_max {
            local.push((self.local_index(true, n), self.local_index(true, n), Complex::new(T::one(), T::zero())));
            local.push((self.local_index(false, n), self.local_index(false, n), Complex::new(-T::one(), T::zero())));
        }
        Ok(self.embed(site, &local))
    }

    pub fn number<T: Real>(&self, site: usize) -> Result<SparseOp<T>> {
        let a = self.annihilation::<T>(site)?;
        Ok(a.adjoint().mul(&a))
    }
}

/// Sparse complex matrix stored as unsorted `(row, col, value)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp<T> {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseOp<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect(),
        }
    }

    /// Sum of operators with duplicate positions merged.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.entries.extend_from_slice(&other.entries);
        out.compress()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut by_row: BTreeMap<usize, Vec<(usize, Complex<T>)>> = BTreeMap::new();
        for &(r, c, v) in &other.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut out = Self::zero(self.dim);
        for &(r, k, v) in &self.entries {
            if let Some(row) = by_row.get(&k) {
                for &(c, w) in row {
                    out.entries.push((r, c, v * w));
                }
            }
        }
        out.compress()
    }

    fn compress(self) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
        for (r, c, v) in self.entries {
            let e = map.entry((r, c)).or_insert_with(Complex::default);
            *e = *e + v;
        }
        Self {
            dim: self.dim,
            entries: map.into_iter().filter(|(_, v)| v.norm_sqr() > T::zero()).map(|((r, c), v)| (r, c, v)).collect(),
        }
    }

    /// `out += s · O ρ` for a row-major dense `ρ`.
    pub fn left_mul_acc(&self, rho: &[Complex<T>], s: Complex<T>, out: &mut [Complex<T>]) {
        let n = self.dim;
        for &(r, c, v) in &self.entries {
            let w = v * s;
            let src = &rho[c * n..(c + 1) * n];
            for (o, x) in out[r * n..(r + 1) * n].iter_mut().zip(src) {
                *o = *o + w * x;
            }
        }
    }

    /// `out += s · ρ O`.
    pub fn right_mul_acc(&self, rho: &[Complex<T>], s: Complex<T>, out: &mut [Complex<T>]) {
        let n = self.dim;
        let scaled: Vec<_> = self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect();
        for (src, dst) in rho.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            for &(r, c, w) in &scaled {
                dst[c] = dst[c] + src[r] * w;
            }
        }
    }

    /// `tr(O ρ)`.
    pub fn trace_with(&self, rho: &[Complex<T>]) -> Complex<T> {
        let n = self.dim;
        self.entries
            .iter()
            .fold(Complex::default(), |acc, &(r, c, v)| acc + v * rho[c * n + r])
    }
}
