//! Modified Bessel functions of the first kind, integer order, non-negative real argument.
//!
//! Small arguments use the ascending power series. Larger arguments use Miller's backward
//! recurrence normalised by `e^z = I_0(z) + 2 Σ_{k≥1} I_k(z)`, which directly yields the
//! exponentially scaled values `e^{-z} I_k(z)` and never overflows.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Arguments at or below this use the power series.
const SERIES_LIMIT: f64 = 12.0;

fn check_arg<T: Real>(z: T) -> Result<()> {
    if !z.is_finite() || z < T::zero() {
        return Err(Error::param("z", format!("Bessel argument must be finite and >= 0, got {z}")));
    }
    Ok(())
}

/// `I_n(z)`. Overflows to `+inf` where the true value exceeds the scalar range.
pub fn bessel_i<T: Real>(n: usize, z: T) -> Result<T> {
    check_arg(z)?;
    if z <= T::lit(SERIES_LIMIT) {
        return Ok(power_series(n, z));
    }
    Ok(bessel_i_scaled(n, z)? * z.exp())
}

/// `e^{-z} I_n(z)`.
pub fn bessel_i_scaled<T: Real>(n: usize, z: T) -> Result<T> {
    check_arg(z)?;
    if z <= T::lit(SERIES_LIMIT) {
        return Ok(power_series(n, z) * (-z).exp());
    }
    Ok(miller_scaled(n, z)[n])
}

/// `e^{-z} I_k(z)` for `k = 0..=n_max`, computed in one recurrence pass.
pub fn bessel_i_scaled_orders<T: Real>(n_max: usize, z: T) -> Result<Vec<T>> {
    check_arg(z)?;
    if z <= T::lit(SERIES_LIMIT) {
        let e = (-z).exp();
        return Ok((0..=n_max).map(|k| power_series(k, z) * e).collect());
    }
    Ok(miller_scaled(n_max, z))
}

/// `I_1(z) / I_0(z)`, well defined for all finite `z ≥ 0`.
pub fn bessel_ratio_1_0<T: Real>(z: T) -> Result<T> {
    let v = bessel_i_scaled_orders(1, z)?;
    Ok(v[1] / v[0])
}

fn power_series<T: Real>(n: usize, z: T) -> T {
    if z == T::zero() {
        return if n == 0 { T::one() } else { T::zero() };
    }
    let half = z / T::lit(2.0);
    let mut lead = T::one();
    for i in 1..=n {
        lead = lead * half / T::from_usize_lossy(i);
    }
    if lead == T::zero() {
        return T::zero();
    }
    let q = half * half;
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = 0usize;
    loop {
        k += 1;
        term = term * q / (T::from_usize_lossy(k) * T::from_usize_lossy(n + k));
        sum = sum + term;
        if term <= sum * T::epsilon() || k > 500 {
            break;
        }
    }
    lead * sum
}

fn miller_scaled<T: Real>(n_max: usize, z: T) -> Vec<T> {
    let zf = z.as_f64();
    let start = n_max + 40 + (12.0 * zf.sqrt()).ceil() as usize;
    let big = T::max_value().sqrt().sqrt();
    let inv_big = big.recip();
    let two_over_z = T::lit(2.0) / z;

    let mut out = vec![T::zero(); n_max + 1];
    let mut f_next = T::zero();
    let mut f = T::min_positive_value().sqrt();
    let mut norm = T::zero();
    for k in (1..=start).rev() {
        if k <= n_max {
            out[k] = f;
        }
        norm = norm + T::lit(2.0) * f;
        let f_prev = f_next + T::from_usize_lossy(k) * two_over_z * f;
        f_next = f;
        f = f_prev;
        if f > big {
            f = f * inv_big;
            f_next = f_next * inv_big;
            norm = norm * inv_big;
            for v in out.iter_mut() {
                *v = *v * inv_big;
            }
        }
    }
    out[0] = f;
    norm = norm + f;
    for v in out.iter_mut() {
        *v = *v / norm;
    }
    out
}
