//! Weighted least-squares fits used for scaling exponents and correlation decay.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stats::Estimate;

/// Two-sided 95 % normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    /// Weighted residual sum of squares.
    pub chi2: f64,
    /// Half-width of the 95 % confidence interval on the slope.
    pub ci_half_width: f64,
    /// Whether the supplied standard errors set the weights.
    pub weighted: bool,
}

impl LineFit {
    pub fn ci_contains(&self, x: f64) -> bool {
        (self.slope - x).abs() <= self.ci_half_width
    }
}

/// Straight line through `(x, y ± σ)`.
///
/// With every `σ > 0` the fit is weighted by `1/σ²` and the covariance taken as absolute.
/// Otherwise the points are weighted equally and the covariance scaled by the residual variance,
/// with a Student-t interval.
pub fn fit_line(points: &[(f64, f64, f64)]) -> Result<LineFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite() && p.2.is_finite() && p.2 >= 0.0)) {
        return Err(Error::Fit("non-finite coordinate or negative standard error".into()));
    }
    let weighted = points.iter().all(|p| p.2 > 0.0);
    let w: Vec<f64> = points.iter().map(|p| if weighted { p.2.powi(-2) } else { 1.0 }).collect();
    let sw: f64 = w.iter().sum();
    let mx = points.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = points.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("abscissae do not vary".into()));
    }
    let sxy: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = points
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let dof = (n - 2) as f64;
    let scale = if weighted { 1.0 } else { chi2 / dof };
    let slope_se = (scale / sxx).sqrt();
    let intercept_se = (scale * (1.0 / sw + mx * mx / sxx)).sqrt();
    let quantile = if weighted {
        Z95
    } else {
        StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::Fit(e.to_string()))?
            .inverse_cdf(0.975)
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
        chi2,
        ci_half_width: quantile * slope_se,
        weighted,
    })
}

/// Slope of `ln value` against `ln N` with `σ_ln = SE / value`.
pub fn fit_loglog_slope(points: &[(usize, Estimate<f64>)]) -> Result<LineFit> {
    let mut xy = Vec::with_capacity(points.len());
    for (n, e) in points {
        if !(e.value > 0.0) || *n == 0 {
            return Err(Error::Fit(format!("log-log fit needs positive values, got {} at N = {n}", e.value)));
        }
        xy.push(((*n as f64).ln(), e.value.ln(), e.std_error / e.value));
    }
    fit_line(&xy)
}

/// Power-law against exponential description of `G(d)` over `d_lo..=d_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// `η` of `G ∝ d^{−η}`.
    pub eta: f64,
    pub eta_se: f64,
    /// `ξ` of `G ∝ e^{−d/ξ}`; infinite for a non-decaying profile.
    pub xi: f64,
    pub aic_power: f64,
    pub aic_exponential: f64,
}

impl DecayFit {
    pub fn prefers_power_law(&self) -> bool {
        self.aic_power < self.aic_exponential
    }
}

/// Both fits are weighted by `(G/σ_G)²` on `ln G`; each model has two parameters.
pub fn fit_decay(g: &[Estimate<f64>], d_lo: usize, d_hi: usize) -> Result<DecayFit> {
    if d_lo == 0 || d_hi >= g.len() || d_hi < d_lo + 2 {
        return Err(Error::Fit(format!("separation window [{d_lo}, {d_hi}] unusable for {} points", g.len())));
    }
    let window = &g[d_lo..=d_hi];
    if window.iter().any(|e| !(e.value > 0.0)) {
        return Err(Error::Fit("correlation profile not positive over the fit window".into()));
    }
    let pts = |x: &dyn Fn(usize) -> f64| -> Vec<(f64, f64, f64)> {
        window
            .iter()
            .enumerate()
            .map(|(k, e)| (x(d_lo + k), e.value.ln(), e.std_error / e.value))
            .collect()
    };
    let power = fit_line(&pts(&|d| (d as f64).ln()))?;
    let expo = fit_line(&pts(&|d| d as f64))?;
    Ok(DecayFit {
        eta: -power.slope,
        eta_se: power.slope_se,
        xi: if expo.slope < 0.0 { -1.0 / expo.slope } else { f64::INFINITY },
        aic_power: power.chi2 + 4.0,
        aic_exponential: expo.chi2 + 4.0,
    })
}
