//! Tensor-product trapezoid quadrature of the XY target on rings of at most four sites.

use crate::error::{Error, Result};
use crate::model::DrivePattern;
use crate::scalar::Real;

use super::metropolis::SamplerConfig;

pub const MAX_SITES: usize = 4;
pub const DEFAULT_POINTS: usize = 48;

/// Bonds of a ring of `n` sites: none for one site, one for two.
fn ring_bonds(n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    }
}

/// `⟨O⟩` under the target of `cfg` on an `n`-site ring using `m` points per angle.
///
/// Site `j` sees drive phase `φ` or, for a staggered pattern, `φ + πj`.
pub fn brute_force_expectation<T, F>(cfg: &SamplerConfig<T>, n: usize, m: usize, observable: F) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> T,
{
    if n == 0 || n > MAX_SITES {
        return Err(Error::TooManySites { got: n, max: MAX_SITES });
    }
    if m < 2 {
        return Err(Error::param("m", "need at least two quadrature points"));
    }
    cfg.validate()?;
    let bonds = ring_bonds(n);
    let s: T = cfg.sign.alignment();
    let ks = s * cfg.k_bond;
    let phases: Vec<T> = (0..n)
        .map(|j| match cfg.drive_pattern {
            DrivePattern::Uniform => cfg.phi,
            DrivePattern::Staggered => cfg.phi + T::PI() * T::from_usize_lossy(j % 2),
        })
        .collect();
    let grid: Vec<T> = (0..m)
        .map(|k| T::two_pi() * T::from_usize_lossy(k) / T::from_usize_lossy(m))
        .collect();
    // E is bounded below by −|K|·bonds − |h|·N; shifting by it keeps every weight ≤ 1
    let e_min = -cfg.k_bond * T::from_usize_lossy(bonds.len()) - cfg.h_field.abs() * T::from_usize_lossy(n);

    let total = m.pow(n as u32);
    let mut idx = vec![0usize; n];
    let mut theta = vec![T::zero(); n];
    let mut z = T::zero();
    let mut num = T::zero();
    for _ in 0..total {
        for j in 0..n {
            theta[j] = grid[idx[j]];
        }
        let mut e = T::zero();
        for &(i, j) in &bonds {
            e = e - ks * (theta[i] - theta[j]).cos();
        }
        for j in 0..n {
            e = e + cfg.h_field * (theta[j] - phases[j]).sin();
        }
        let w = (-(e - e_min)).exp();
        z = z + w;
        num = num + w * observable(&theta);
        for j in 0..n {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(num / z)
}
