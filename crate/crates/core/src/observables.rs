//! Per-configuration measurements shared by the Metropolis sampler and the Langevin integrator.

use crate::lattice::LatticeSpec;
use crate::scalar::Real;

pub const SIN_SUM: &str = "sin_sum";
pub const COS_SUM: &str = "cos_sum";
pub const SIN_SUM_SQ: &str = "sin_sum_sq";
pub const COS_SUM_SQ: &str = "cos_sum_sq";

/// Name of the recorded series for the translation-averaged `G(d)`.
pub fn g_name(d: usize) -> String {
    format!("g_{d}")
}

/// Measures `Σ sin(θ_j − φ_j)`, `Σ cos(θ_j − φ̄_j)`, their squares and `G(d)` for `1 ≤ d ≤ max_d`.
///
/// `G(d)` is averaged over all sites and all lattice axes.
#[derive(Debug, Clone)]
pub struct AngleProbe<T> {
    drive: Vec<T>,
    measure: Vec<T>,
    pairs: Vec<Vec<(usize, usize)>>,
    cos_buf: Vec<T>,
    sin_buf: Vec<T>,
}

impl<T: Real> AngleProbe<T> {
    pub fn new(lattice: &LatticeSpec, drive_phases: Vec<T>, measure_phases: Vec<T>, max_d: usize) -> Self {
        let n = lattice.n_sites();
        let max_d = max_d.min(lattice.max_separation());
        let mut pairs = Vec::with_capacity(max_d);
        for d in 1..=max_d {
            let mut list = Vec::new();
            for axis in 0..lattice.dim {
                if lattice.lengths[axis] < 2 {
                    continue;
                }
                for i in 0..n {
                    if let Some(j) = lattice.shift(i, axis, d) {
                        list.push((i, j));
                    }
                }
            }
            pairs.push(list);
        }
        Self {
            drive: drive_phases,
            measure: measure_phases,
            pairs,
            cos_buf: vec![T::zero(); n],
            sin_buf: vec![T::zero(); n],
        }
    }

    pub fn max_d(&self) -> usize {
        self.pairs.len()
    }

    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = [SIN_SUM, COS_SUM, SIN_SUM_SQ, COS_SUM_SQ].iter().map(|s| s.to_string()).collect();
        v.extend((1..=self.max_d()).map(g_name));
        v
    }

    pub fn measure(&mut self, theta: &[T], out: &mut Vec<T>) {
        out.clear();
        let mut s = T::zero();
        let mut c = T::zero();
        for (j, &t) in theta.iter().enumerate() {
            s = s + (t - self.drive[j]).sin();
            c = c + (t - self.measure[j]).cos();
            let (sn, cs) = t.sin_cos();
            self.sin_buf[j] = sn;
            self.cos_buf[j] = cs;
        }
        out.extend_from_slice(&[s, c, s * s, c * c]);
        for list in &self.pairs {
            let mut acc = T::zero();
            for &(i, j) in list {
                acc = acc + self.cos_buf[i] * self.cos_buf[j] + self.sin_buf[i] * self.sin_buf[j];
            }
            out.push(acc / T::from_usize_lossy(list.len().max(1)));
        }
    }
}
