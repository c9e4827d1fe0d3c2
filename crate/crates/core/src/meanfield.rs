//! Mean-field Maxwell–Bloch dynamics of the laser lattice and its lasing threshold.
//!
//! Per site, with `C = κ + D` and `D = t²/κ̃`:
//!
//! ```text
//! dA_j/dt = g S_j − C A_j ∓ D Σ_k A_k
//! dS_j/dt = g D_j A_j − γ S_j
//! dD_j/dt = −2g (S_j* A_j + S_j A_j*) − 2γ (D_j − 1)
//! ```
//!
//! The neighbour term carries `−` for antiferromagnetic and `+` for ferromagnetic bonds.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_coeffs, CouplingSign, ModelParams};
use crate::scalar::Real;

/// Largest allowed `dt · max(γ, κ, g, t²/κ̃)`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState<T> {
    pub a: Vec<Complex<T>>,
    pub s: Vec<Complex<T>>,
    pub d: Vec<T>,
}

impl<T: Real> MeanFieldState<T> {
    /// Homogeneous seed `A_j = amplitude`, `S_j = 0`, `D_j = 1`.
    pub fn seeded(n: usize, amplitude: T) -> Self {
        Self {
            a: vec![Complex::new(amplitude, T::zero()); n],
            s: vec![Complex::new(T::zero(), T::zero()); n],
            d: vec![T::one(); n],
        }
    }

    /// Standard seed `A_j = 10⁻³ √n_mf`.
    pub fn standard_seed(params: &ModelParams<T>) -> Result<Self> {
        let c = derive_coeffs(params, None)?;
        Ok(Self::seeded(params.lattice.n_sites(), T::lit(1e-3) * c.n_mf.sqrt()))
    }

    pub fn n_sites(&self) -> usize {
        self.a.len()
    }

    pub fn intensity(&self, site: usize) -> T {
        self.a[site].norm_sqr()
    }

    pub fn mean_intensity(&self) -> T {
        self.a.iter().map(|a| a.norm_sqr()).sum::<T>() / T::from_usize_lossy(self.n_sites())
    }

    fn axpy(&self, k: &Self, h: T) -> Self {
        Self {
            a: self.a.iter().zip(&k.a).map(|(x, y)| x + y * h).collect(),
            s: self.s.iter().zip(&k.s).map(|(x, y)| x + y * h).collect(),
            d: self.d.iter().zip(&k.d).map(|(&x, &y)| x + y * h).collect(),
        }
    }

    fn is_finite(&self) -> bool {
        self.a.iter().chain(&self.s).all(|z| z.re.is_finite() && z.im.is_finite()) && self.d.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone)]
struct Rhs<T> {
    g: T,
    gamma: T,
    c: T,
    hop: T,
    adjacency: Vec<Vec<usize>>,
}

impl<T: Real> Rhs<T> {
    fn new(params: &ModelParams<T>) -> Self {
        let d = params.t_hop * params.t_hop / params.kappa_tilde;
        Self {
            g: params.g,
            gamma: params.gamma,
            c: params.kappa + d,
            hop: match params.coupling_sign {
                CouplingSign::Antiferro => -d,
                CouplingSign::Ferro => d,
            },
            adjacency: params.lattice.adjacency(),
        }
    }

    fn eval(&self, x: &MeanFieldState<T>) -> MeanFieldState<T> {
        let two = T::lit(2.0);
        let n = x.n_sites();
        let mut out = MeanFieldState {
            a: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
        };
        for j in 0..n {
            let mut nb = Complex::new(T::zero(), T::zero());
            for &k in &self.adjacency[j] {
                nb = nb + x.a[k];
            }
            let (a, s, d) = (x.a[j], x.s[j], x.d[j]);
            out.a.push(s * self.g - a * self.c + nb * self.hop);
            out.s.push(a * (self.g * d) - s * self.gamma);
            let cross = (s.conj() * a + s * a.conj()).re;
            out.d.push(-two * self.g * cross - two * self.gamma * (d - T::one()));
        }
        out
    }

    fn rk4(&self, x: &MeanFieldState<T>, dt: T) -> MeanFieldState<T> {
        let half = dt / T::lit(2.0);
        let k1 = self.eval(x);
        let k2 = self.eval(&x.axpy(&k1, half));
        let k3 = self.eval(&x.axpy(&k2, half));
        let k4 = self.eval(&x.axpy(&k3, dt));
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        MeanFieldState {
            a: (0..x.n_sites())
                .map(|j| x.a[j] + (k1.a[j] + k2.a[j] * two + k3.a[j] * two + k4.a[j]) * sixth)
                .collect(),
            s: (0..x.n_sites())
                .map(|j| x.s[j] + (k1.s[j] + k2.s[j] * two + k3.s[j] * two + k4.s[j]) * sixth)
                .collect(),
            d: (0..x.n_sites())
                .map(|j| x.d[j] + (k1.d[j] + two * k2.d[j] + two * k3.d[j] + k4.d[j]) * sixth)
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    /// `(time, state)` every `stride` steps, starting with the initial state.
    pub samples: Vec<(T, MeanFieldState<T>)>,
    pub final_time: T,
    pub final_state: MeanFieldState<T>,
}

/// Largest rate entering the stability guard.
pub fn fastest_rate<T: Real>(params: &ModelParams<T>) -> T {
    let d = params.t_hop * params.t_hop / params.kappa_tilde;
    params.gamma.max(params.kappa).max(params.g).max(d)
}

/// Fourth-order Runge–Kutta integration; `stride = 0` records only the endpoints.
pub fn integrate_maxwell_bloch<T: Real>(
    params: &ModelParams<T>,
    init: &MeanFieldState<T>,
    dt: T,
    t_end: T,
    stride: usize,
) -> Result<Trajectory<T>> {
    params.validate()?;
    if init.n_sites() != params.lattice.n_sites() || init.s.len() != init.a.len() || init.d.len() != init.a.len() {
        return Err(Error::param("init", "state size does not match the lattice"));
    }
    if !(dt > T::zero() && dt.is_finite()) || !(t_end >= T::zero() && t_end.is_finite()) {
        return Err(Error::param("dt", "need dt > 0 and a finite t_end >= 0"));
    }
    if dt * fastest_rate(params) > T::lit(STABILITY_LIMIT) {
        return Err(Error::param(
            "dt",
            format!("dt * max rate = {} exceeds {STABILITY_LIMIT}", dt * fastest_rate(params)),
        ));
    }
    let n_mf = derive_coeffs(params, None)?.n_mf;
    let limit = T::lit(1e6) * n_mf.sqrt();
    let rhs = Rhs::new(params);
    let n_steps = (t_end / dt).round().to_usize().unwrap_or(0);
    let mut x = init.clone();
    let mut samples = vec![(T::zero(), x.clone())];
    for step in 1..=n_steps {
        x = rhs.rk4(&x, dt);
        let t = dt * T::from_usize_lossy(step);
        if !x.is_finite() || x.a.iter().any(|a| a.norm() > limit) {
            return Err(Error::Divergence {
                time: t.as_f64(),
                detail: format!("field amplitude exceeded {limit}"),
            });
        }
        if stride > 0 && step % stride == 0 {
            samples.push((t, x.clone()));
        }
    }
    let final_time = dt * T::from_usize_lossy(n_steps);
    if stride == 0 || n_steps % stride != 0 {
        samples.push((final_time, x.clone()));
    }
    Ok(Trajectory {
        samples,
        final_time,
        final_state: x,
    })
}

/// Per-site boson number `n_mf (C̃_p − 1)`, zero at or below threshold.
pub fn steady_boson_number<T: Real>(params: &ModelParams<T>) -> Result<T> {
    Ok(derive_coeffs(params, None)?.n0)
}

/// Loss rate of the homogeneous mode under the Maxwell–Bloch bonds.
pub fn uniform_mode_loss<T: Real>(params: &ModelParams<T>) -> T {
    let d = params.t_hop * params.t_hop / params.kappa_tilde;
    let z = T::from_usize_lossy(params.lattice.neighbors(0).map(|v| v.len()).unwrap_or(0));
    match params.coupling_sign {
        CouplingSign::Antiferro => params.kappa + d + z * d,
        CouplingSign::Ferro => params.kappa + d - z * d,
    }
}

/// Homogeneous fixed point `|A|² = (γ²/2g²)(g²/(γ L) − 1)` of the equations above,
/// with `L` the uniform-mode loss; zero below threshold.
pub fn maxwell_bloch_fixed_point<T: Real>(params: &ModelParams<T>) -> T {
    let (g, gamma) = (params.g, params.gamma);
    let c_eff = g * g / (gamma * uniform_mode_loss(params));
    (gamma * gamma / (T::lit(2.0) * g * g) * (c_eff - T::one())).max(T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    G,
    Kappa,
    Gamma,
    THop,
}

impl SweepParameter {
    pub fn apply<T: Real>(self, base: &ModelParams<T>, value: T) -> ModelParams<T> {
        let mut p = base.clone();
        match self {
            SweepParameter::G => p.g = value,
            SweepParameter::Kappa => p.kappa = value,
            SweepParameter::Gamma => p.gamma = value,
            SweepParameter::THop => p.t_hop = value,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// `dt · max rate` used for every probe integration.
    pub courant: f64,
    /// Probe duration in units of `1/κ`.
    pub duration_over_kappa: f64,
    /// Relative bracket width at which bisection stops.
    pub rel_tol: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            courant: 0.05,
            duration_over_kappa: 50.0,
            rel_tol: 1e-6,
        }
    }
}

/// Whether a tiny homogeneous seed grows (or has already saturated) under `params`.
pub fn is_lasing<T: Real>(params: &ModelParams<T>, opts: &ThresholdOptions) -> Result<bool> {
    let seed = MeanFieldState::standard_seed(params)?;
    let floor = seed.mean_intensity();
    let dt = T::lit(opts.courant) / fastest_rate(params);
    let t_end = T::lit(opts.duration_over_kappa) / params.kappa;
    let half = integrate_maxwell_bloch(params, &seed, dt, t_end / T::lit(2.0), 0)?;
    let end = integrate_maxwell_bloch(params, &half.final_state, dt, t_end / T::lit(2.0), 0)?;
    let (i_mid, i_end) = (half.final_state.mean_intensity(), end.final_state.mean_intensity());
    Ok(i_end > T::lit(100.0) * floor || i_end >= i_mid)
}

/// Bisection for the value of `param` at which lasing starts.
pub fn detect_threshold<T: Real>(
    base: &ModelParams<T>,
    param: SweepParameter,
    lo: T,
    hi: T,
    opts: &ThresholdOptions,
) -> Result<T> {
    if !(lo < hi) {
        return Err(Error::param("sweep", "need lo < hi"));
    }
    let (mut a, mut b) = (lo, hi);
    let fa = is_lasing(&param.apply(base, a), opts)?;
    let fb = is_lasing(&param.apply(base, b), opts)?;
    if fa == fb {
        let state = if fa { "above" } else { "below" };
        return Err(Error::NotBracketed(format!("both ends of [{lo}, {hi}] are {state} threshold")));
    }
    while b - a > T::lit(opts.rel_tol) * b.abs().max(a.abs()) {
        let mid = (a + b) / T::lit(2.0);
        if is_lasing(&param.apply(base, mid), opts)? == fa {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((a + b) / T::lit(2.0))
}

/// CSV with columns `time,site,re_a,im_a,re_s,im_s,d`.
pub fn write_trajectory_csv<T: Real, W: Write>(out: &mut W, traj: &Trajectory<T>) -> Result<()> {
    writeln!(out, "time,site,re_a,im_a,re_s,im_s,d")?;
    for (t, x) in &traj.samples {
        for j in 0..x.n_sites() {
            writeln!(out, "{t},{j},{},{},{},{},{}", x.a[j].re, x.a[j].im, x.s[j].re, x.s[j].im, x.d[j])?;
        }
    }
    Ok(())
}
