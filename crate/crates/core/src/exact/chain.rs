//! Exact two-point functions of the zero-field ferromagnetic XY ring.
//!
//! With per-bond weight `exp(K cos(θ_j − θ_{j+1}))` the transfer-matrix eigenvalues are
//! `I_n(K)`, giving
//! `G(d) = Σ_n I_{n−1}(K)^d I_n(K)^{N−d} / Σ_n I_n(K)^N`.
//! Everything is evaluated with ratios `I_n / I_0` so large `K·N` cannot overflow.

use serde::{Deserialize, Serialize};

use super::bessel::{bessel_i_scaled_orders, bessel_ratio_1_0};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative size of the last retained series term.
pub const TAIL_TOLERANCE: f64 = 1e-14;

/// Default `N/ξ` threshold for the long-range (finite-size ordered) regime.
pub const LONG_RANGE_THRESHOLD: f64 = 0.1;

const MAX_ORDER: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec<T> {
    /// Ring length.
    pub n: usize,
    /// Bond coupling `K = 4 r₀² ς`.
    pub k: T,
    /// Initial Bessel truncation; grown until certified. `None` picks `⌈K + 10√K + 20⌉`.
    pub n_max: Option<usize>,
}

impl<T: Real> ChainSpec<T> {
    pub fn new(n: usize, k: T) -> Self {
        Self { n, k, n_max: None }
    }
}

/// Precomputed transfer-matrix spectrum for repeated correlation queries.
#[derive(Debug, Clone)]
pub struct RingCorrelator<T> {
    n: usize,
    /// `I_m(K) / I_0(K)` for `m = 0..=n_max + 1`.
    ratios: Vec<T>,
    n_max: usize,
    partition: T,
}

impl<T: Real> RingCorrelator<T> {
    pub fn new(spec: &ChainSpec<T>) -> Result<Self> {
        if spec.n < 2 {
            return Err(Error::param("n", "ring needs at least 2 sites"));
        }
        if !(spec.k.is_finite() && spec.k >= T::zero()) {
            return Err(Error::param("k", format!("must be finite and >= 0, got {}", spec.k)));
        }
        let kf = spec.k.as_f64();
        let mut n_max = spec
            .n_max
            .unwrap_or_else(|| (kf + 10.0 * kf.sqrt() + 20.0).ceil() as usize);
        loop {
            let scaled = bessel_i_scaled_orders(n_max + 1, spec.k)?;
            let ratios: Vec<T> = scaled.iter().map(|&v| v / scaled[0]).collect();
            let mut this = Self {
                n: spec.n,
                ratios,
                n_max,
                partition: T::zero(),
            };
            let (z, tail) = this.series(spec.n, 0);
            if tail <= z * T::lit(TAIL_TOLERANCE) {
                this.partition = z;
                return Ok(this);
            }
            n_max *= 2;
            if n_max > MAX_ORDER {
                return Err(Error::Truncation(n_max));
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> usize {
        self.n_max
    }

    #[inline]
    fn ratio(&self, m: i64) -> T {
        self.ratios[m.unsigned_abs() as usize]
    }

    /// `Σ_{|m| ≤ n_max} ρ_{m−1}^{d} ρ_m^{N−d}` together with the largest boundary term.
    fn series(&self, n: usize, d: usize) -> (T, T) {
        let nm = self.n_max as i64;
        let (pd, pr) = (d as i32, (n - d) as i32);
        let term = |m: i64| self.ratio(m - 1).powi(pd) * self.ratio(m).powi(pr);
        let mut sum = T::zero();
        for m in -nm..=nm {
            sum = sum + term(m);
        }
        let tail = term(nm).max(term(-nm)).max(term(nm + 1));
        (sum, tail)
    }

    /// `G(d) = ⟨cos(θ_1 − θ_{1+d})⟩` for `0 ≤ d ≤ N`.
    pub fn g(&self, d: usize) -> Result<T> {
        if d > self.n {
            return Err(Error::param("d", format!("distance {d} exceeds ring length {}", self.n)));
        }
        let (num, tail) = self.series(self.n, d);
        if num > T::zero() && tail > num * T::lit(TAIL_TOLERANCE) {
            return Err(Error::Truncation(self.n_max));
        }
        Ok((num / self.partition).min(T::one()).max(-T::one()))
    }

    /// `G(d)` for `d = 0..N`.
    pub fn profile(&self) -> Result<Vec<T>> {
        (0..self.n).map(|d| self.g(d)).collect()
    }

    /// `Σ_{d=0}^{N−1} G(d)`, the site-summed correlation seen from any site.
    pub fn sum(&self) -> Result<T> {
        Ok(self.profile()?.into_iter().sum())
    }
}

/// Exact `⟨cos(θ_1 − θ_{1+d})⟩` on a ferromagnetic ring.
pub fn correlation_exact<T: Real>(spec: &ChainSpec<T>, d: usize) -> Result<T> {
    RingCorrelator::new(spec)?.g(d)
}

/// Infinite-chain correlation length `1 / ln(I_0(K)/I_1(K))`; zero at `K = 0`.
pub fn correlation_length<T: Real>(k: T) -> Result<T> {
    if k == T::zero() {
        return Ok(T::zero());
    }
    let r = bessel_ratio_1_0(k)?;
    Ok((-r.ln()).recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteSizeReport<T> {
    /// `N ln(I_0(K)/I_1(K)) = N/ξ`.
    pub metric: T,
    pub long_range: bool,
}

/// Finite-size long-range condition with the given threshold on `N/ξ`.
pub fn finite_size_metric_with<T: Real>(n: usize, k: T, threshold: T) -> Result<FiniteSizeReport<T>> {
    let metric = if k == T::zero() {
        T::infinity()
    } else {
        let r = bessel_ratio_1_0(k)?;
        T::from_usize_lossy(n) * (-r.ln())
    };
    Ok(FiniteSizeReport {
        metric,
        long_range: metric <= threshold,
    })
}

pub fn finite_size_metric<T: Real>(n: usize, k: T) -> Result<FiniteSizeReport<T>> {
    finite_size_metric_with(n, k, T::lit(LONG_RANGE_THRESHOLD))
}

/// Smallest `K` (to relative `1e-10`) with `N/ξ ≤ target`.
pub fn coupling_for_metric<T: Real>(n: usize, target: T) -> Result<T> {
    let metric = |k: T| finite_size_metric(n, k).map(|r| r.metric);
    let mut hi = T::one();
    while metric(hi)? > target {
        hi = hi * T::lit(2.0);
        if hi > T::lit(1e9) {
            return Err(Error::param("target", "unreachable finite-size metric"));
        }
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if metric(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= hi * T::lit(1e-12) {
            break;
        }
    }
    Ok(hi)
}
