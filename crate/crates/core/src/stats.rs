//! Batch-means error analysis for correlated Markov-chain and SDE time series.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum batch count accepted by estimators.
pub const MIN_BATCHES: usize = 10;

/// Default batch count for streaming accumulation.
pub const DEFAULT_BATCHES: usize = 64;

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Estimate<T> {
    pub value: T,
    pub std_error: T,
}

impl<T: Real> Estimate<T> {
    pub fn new(value: T, std_error: T) -> Self {
        Self { value, std_error }
    }

    pub fn exact(value: T) -> Self {
        Self::new(value, T::zero())
    }

    /// `|a − b| / √(σ_a² + σ_b²)` for independent estimates.
    pub fn z_against(&self, other: &Estimate<T>) -> T {
        let se = (self.std_error * self.std_error + other.std_error * other.std_error).sqrt();
        (self.value - other.value).abs() / se
    }

    /// `|a − x| / σ_a` against an exact reference.
    pub fn z_exact(&self, x: T) -> T {
        (self.value - x).abs() / self.std_error
    }

    pub fn scale(&self, c: T) -> Self {
        Self::new(self.value * c, self.std_error * c.abs())
    }
}

/// Streaming accumulator producing non-overlapping batch means.
#[derive(Debug, Clone)]
pub struct BatchAccumulator<T> {
    batch_size: usize,
    sum: T,
    count: usize,
    raw_sum: T,
    raw_sq: T,
    raw_n: usize,
    means: Vec<T>,
}

impl<T: Real> BatchAccumulator<T> {
    pub fn new(batch_size: usize) -> Self {
        Self {
            batch_size: batch_size.max(1),
            sum: T::zero(),
            count: 0,
            raw_sum: T::zero(),
            raw_sq: T::zero(),
            raw_n: 0,
            means: Vec::new(),
        }
    }

    /// Batch size so that `n_samples` fill `n_batches` batches (trailing remainder dropped).
    pub fn for_samples(n_samples: usize, n_batches: usize) -> Self {
        Self::new((n_samples / n_batches.max(1)).max(1))
    }

    #[inline]
    pub fn push(&mut self, x: T) {
        self.sum = self.sum + x;
        self.count += 1;
        if self.count == self.batch_size {
            self.means.push(self.sum / T::from_usize_lossy(self.batch_size));
            self.raw_sum = self.raw_sum + self.sum;
            self.raw_n += self.batch_size;
            self.sum = T::zero();
            self.count = 0;
        }
        self.raw_sq = self.raw_sq + x * x;
    }

    pub fn finish(self) -> BatchSeries<T> {
        let n = self.raw_n + self.count;
        let sample_var = if n > 1 {
            let total = self.raw_sum + self.sum;
            let nn = T::from_usize_lossy(n);
            let m = total / nn;
            ((self.raw_sq / nn - m * m) * nn / (nn - T::one())).max(T::zero())
        } else {
            T::zero()
        };
        BatchSeries {
            means: self.means,
            batch_size: self.batch_size,
            sample_var,
        }
    }
}

/// Completed batch means of one observable.
#[derive(Debug, Clone, Serialize)]
pub struct BatchSeries<T> {
    pub means: Vec<T>,
    pub batch_size: usize,
    /// Per-sample variance (all pushed samples), used for the autocorrelation time.
    pub sample_var: T,
}

impl<T: Real> BatchSeries<T> {
    pub fn from_means(means: Vec<T>, batch_size: usize) -> Self {
        Self {
            means,
            batch_size,
            sample_var: T::zero(),
        }
    }

    pub fn n_batches(&self) -> usize {
        self.means.len()
    }

    pub fn mean(&self) -> T {
        mean(&self.means)
    }

    pub fn std_error(&self) -> T {
        std_error_of_mean(&self.means)
    }

    pub fn estimate(&self) -> Estimate<T> {
        Estimate::new(self.mean(), self.std_error())
    }

    /// Integrated autocorrelation time in samples, `b·s²_batch / (2σ²)`.
    pub fn tau_int(&self) -> T {
        if self.sample_var <= T::zero() {
            return T::lit(0.5);
        }
        let b = T::from_usize_lossy(self.batch_size);
        let sb = variance(&self.means);
        b * sb / (T::lit(2.0) * self.sample_var)
    }

    /// Batch-wise linear combination `Σ c_i · series_i`; series must share batching.
    pub fn combine(terms: &[(T, &BatchSeries<T>)]) -> Result<BatchSeries<T>> {
        let first = terms
            .first()
            .ok_or_else(|| Error::param("terms", "empty linear combination"))?;
        let n = first.1.n_batches();
        if terms.iter().any(|(_, s)| s.n_batches() != n) {
            return Err(Error::param("terms", "series with different batch counts"));
        }
        let means = (0..n)
            .map(|i| terms.iter().map(|(c, s)| *c * s.means[i]).sum())
            .collect();
        Ok(BatchSeries::from_means(means, first.1.batch_size))
    }

    /// Requires at least [`MIN_BATCHES`] batches.
    pub fn ensure_batches(&self) -> Result<()> {
        if self.n_batches() < MIN_BATCHES {
            return Err(Error::InsufficientSamples {
                got: self.n_batches(),
                need: MIN_BATCHES,
            });
        }
        Ok(())
    }
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Unbiased sample variance.
pub fn variance<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_usize_lossy(xs.len() - 1)
}

pub fn std_error_of_mean<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    (variance(xs) / T::from_usize_lossy(xs.len())).sqrt()
}

/// Jackknife over batches for a nonlinear function of several batch-mean series.
///
/// Returns `(estimate, std_error)`; the estimate is `f` applied to the full means.
pub fn jackknife<T: Real, F>(series: &[&BatchSeries<T>], f: F) -> Result<(T, T)>
where
    F: Fn(&[T]) -> T,
{
    let nb = series
        .first()
        .map(|s| s.n_batches())
        .ok_or_else(|| Error::param("series", "empty"))?;
    if series.iter().any(|s| s.n_batches() != nb) {
        return Err(Error::param("series", "different batch counts"));
    }
    if nb < 2 {
        return Err(Error::InsufficientSamples { got: nb, need: 2 });
    }
    let totals: Vec<T> = series.iter().map(|s| s.means.iter().copied().sum()).collect();
    let full: Vec<T> = totals.iter().map(|&t| t / T::from_usize_lossy(nb)).collect();
    let estimate = f(&full);
    let denom = T::from_usize_lossy(nb - 1);
    let loo: Vec<T> = (0..nb)
        .map(|i| {
            let args: Vec<T> = series
                .iter()
                .zip(&totals)
                .map(|(s, &t)| (t - s.means[i]) / denom)
                .collect();
            f(&args)
        })
        .collect();
    let m = mean(&loo);
    let nbt = T::from_usize_lossy(nb);
    let var = loo.iter().map(|&x| (x - m) * (x - m)).sum::<T>() * (nbt - T::one()) / nbt;
    Ok((estimate, var.sqrt()))
}

/// Named batch-mean series produced by one run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SampleStats<T> {
    pub series: BTreeMap<String, BatchSeries<T>>,
    /// Number of recorded samples (after burn-in and thinning).
    pub n_samples: usize,
    /// Metropolis acceptance ratio, when meaningful.
    pub acceptance: Option<T>,
}

impl<T: Real> SampleStats<T> {
    pub fn get(&self, name: &str) -> Result<&BatchSeries<T>> {
        self.series
            .get(name)
            .ok_or_else(|| Error::param("observable", format!("`{name}` not recorded")))
    }

    pub fn mean(&self, name: &str) -> Result<T> {
        Ok(self.get(name)?.mean())
    }

    pub fn std_error(&self, name: &str) -> Result<T> {
        Ok(self.get(name)?.std_error())
    }

    pub fn estimate(&self, name: &str) -> Result<Estimate<T>> {
        Ok(self.get(name)?.estimate())
    }

    /// Smallest batch count over all series.
    pub fn n_batches(&self) -> usize {
        self.series.values().map(BatchSeries::n_batches).min().unwrap_or(0)
    }
}

/// Named streaming accumulators.
#[derive(Debug, Clone)]
pub struct Recorder<T> {
    names: Vec<String>,
    accs: Vec<BatchAccumulator<T>>,
    n: usize,
}

impl<T: Real> Recorder<T> {
    pub fn new(names: Vec<String>, n_samples: usize, n_batches: usize) -> Self {
        let accs = names
            .iter()
            .map(|_| BatchAccumulator::for_samples(n_samples, n_batches))
            .collect();
        Self { names, accs, n: 0 }
    }

    pub fn push(&mut self, values: &[T]) {
        debug_assert_eq!(values.len(), self.accs.len());
        for (acc, &v) in self.accs.iter_mut().zip(values) {
            acc.push(v);
        }
        self.n += 1;
    }

    pub fn finish(self, acceptance: Option<T>) -> SampleStats<T> {
        SampleStats {
            series: self
                .names
                .into_iter()
                .zip(self.accs)
                .map(|(n, a)| (n, a.finish()))
                .collect(),
            n_samples: self.n,
            acceptance,
        }
    }
}
