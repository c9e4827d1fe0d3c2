use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Real;

use super::density::DensityMatrix;
use super::ops::{SparseOp, TruncatedHilbert};

/// Rates and drive of the qubit-laser master equation, without validation of physical regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumParams<T> {
    pub g: T,
    pub kappa: T,
    /// Incoherent pump rate of each qubit.
    pub gamma: T,
    /// Rate `t²/κ̃` of the collective dissipator on `a₀ + a₁`.
    pub hop_rate: T,
    /// Complex drive `ε_j` per site.
    pub drive: Vec<Complex<T>>,
}

impl<T: Real> QuantumParams<T> {
    pub fn single(g: T, kappa: T, gamma: T, epsilon: Complex<T>) -> Self {
        Self {
            g,
            kappa,
            gamma,
            hop_rate: T::zero(),
            drive: vec![epsilon],
        }
    }

    pub fn from_model(p: &ModelParams<T>) -> Result<Self> {
        p.validate()?;
        let n = p.lattice.n_sites();
        let drive = (0..n).map(|j| Complex::from_polar(p.epsilon_abs, p.site_phase(j))).collect();
        let hop_rate = if p.t_hop > T::zero() { p.t_hop * p.t_hop / p.kappa_tilde } else { T::zero() };
        Ok(Self {
            g: p.g,
            kappa: p.kappa,
            gamma: p.gamma,
            hop_rate,
            drive,
        })
    }

    /// Multiplies every drive amplitude by `e^{ic}`.
    pub fn rotate_drive(&self, c: T) -> Self {
        let mut out = self.clone();
        let w = Complex::from_polar(T::one(), c);
        for e in &mut out.drive {
            *e = *e * w;
        }
        out
    }
}

/// Matrix-free Lindblad generator `dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ_k 2Γ_k O_k ρ O_k†`.
#[derive(Debug, Clone)]
pub struct Generator<T> {
    pub hilbert: TruncatedHilbert,
    pub hamiltonian: SparseOp<T>,
    h_eff: SparseOp<T>,
    h_eff_dag: SparseOp<T>,
    jumps: Vec<(T, SparseOp<T>, SparseOp<T>)>,
}

pub fn build_generator<T: Real>(params: &QuantumParams<T>, hilbert: TruncatedHilbert) -> Result<Generator<T>> {
    if params.drive.len() != hilbert.n_sites {
        return Err(Error::param(
            "drive",
            format!("{} drive amplitudes for {} sites", params.drive.len(), hilbert.n_sites),
        ));
    }
    for (name, v) in [("g", params.g), ("kappa", params.kappa), ("gamma", params.gamma), ("hop_rate", params.hop_rate)] {
        if !(v >= T::zero() && v.is_finite()) {
            return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
        }
    }
    let one = Complex::new(T::one(), T::zero());
    let mut h = SparseOp::zero(hilbert.dims);
    let mut jumps = Vec::new();
    let mut modes = Vec::new();
    for j in 0..hilbert.n_sites {
        let a = hilbert.annihilation::<T>(j)?;
        let sp = hilbert.sigma_plus::<T>(j)?;
        let jc = sp.mul(&a);
        h = h.add(&jc.add(&jc.adjoint()).scale(one * params.g));
        let eps = params.drive[j];
        h = h.add(&a.scale(eps.conj())).add(&a.adjoint().scale(eps));
        jumps.push((params.gamma, sp));
        jumps.push((params.kappa, a.clone()));
        modes.push(a);
    }
    if hilbert.n_sites == 2 && params.hop_rate > T::zero() {
        jumps.push((params.hop_rate, modes[0].add(&modes[1])));
    }
    jumps.retain(|(rate, _)| *rate > T::zero());
    let mut h_eff = h.clone();
    for (rate, o) in &jumps {
        h_eff = h_eff.add(&o.adjoint().mul(o).scale(Complex::new(T::zero(), -*rate)));
    }
    Ok(Generator {
        hilbert,
        hamiltonian: h,
        h_eff_dag: h_eff.adjoint(),
        h_eff,
        jumps: jumps
            .into_iter()
            .map(|(rate, o)| {
                let od = o.adjoint();
                (T::lit(2.0) * rate, o, od)
            })
            .collect(),
    })
}

impl<T: Real> Generator<T> {
    /// Writes `L(ρ)` into `out`; `scratch` has the size of `ρ`.
    pub fn apply_into(&self, rho: &[Complex<T>], out: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        let zero = Complex::default();
        out.fill(zero);
        self.h_eff.left_mul_acc(rho, Complex::new(T::zero(), -T::one()), out);
        self.h_eff_dag.right_mul_acc(rho, Complex::new(T::zero(), T::one()), out);
        for (rate2, o, od) in &self.jumps {
            scratch.fill(zero);
            o.left_mul_acc(rho, Complex::new(T::one(), T::zero()), scratch);
            od.right_mul_acc(scratch, Complex::new(*rate2, T::zero()), out);
        }
    }

    pub fn apply(&self, rho: &DensityMatrix<T>) -> DensityMatrix<T> {
        let mut out = DensityMatrix::zeros(self.hilbert);
        let mut scratch = vec![Complex::default(); rho.data.len()];
        self.apply_into(&rho.data, &mut out.data, &mut scratch);
        out
    }

    /// Gershgorin-type bound on the generator's spectral radius.
    pub fn rate_bound(&self) -> T {
        let row_max = |op: &SparseOp<T>| {
            let mut sums = vec![T::zero(); op.dim];
            for &(r, _, v) in &op.entries {
                sums[r] = sums[r] + v.norm();
            }
            sums.into_iter().fold(T::zero(), T::max)
        };
        let mut b = T::lit(2.0) * row_max(&self.h_eff);
        for (rate2, o, _) in &self.jumps {
            let n = row_max(o).max(row_max(&o.adjoint()));
            b = b + *rate2 * n * n;
        }
        b
    }

    /// Classical RK4 step of length `dt`, followed by re-Hermitisation and renormalisation.
    pub fn rk4_step(&self, rho: &mut DensityMatrix<T>, dt: T, work: &mut Rk4Work<T>) {
        let n = rho.data.len();
        let half = dt * T::lit(0.5);
        let Rk4Work { k1, k2, k3, k4, stage, scratch } = work;
        self.apply_into(&rho.data, k1, scratch);
        for i in 0..n {
            stage[i] = rho.data[i] + k1[i] * half;
        }
        self.apply_into(stage, k2, scratch);
        for i in 0..n {
            stage[i] = rho.data[i] + k2[i] * half;
        }
        self.apply_into(stage, k3, scratch);
        for i in 0..n {
            stage[i] = rho.data[i] + k3[i] * dt;
        }
        self.apply_into(stage, k4, scratch);
        let sixth = dt / T::lit(6.0);
        for i in 0..n {
            rho.data[i] = rho.data[i] + (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]) * sixth;
        }
        rho.renormalize();
    }

    /// Entrywise `‖L(ρ)‖₁`, an upper bound on the trace norm.
    pub fn residual(&self, rho: &DensityMatrix<T>, work: &mut Rk4Work<T>) -> T {
        self.apply_into(&rho.data, &mut work.k1, &mut work.scratch);
        work.k1.iter().map(|z| z.norm()).sum()
    }
}

/// Buffers reused across RK4 steps.
#[derive(Debug, Clone)]
pub struct Rk4Work<T> {
    k1: Vec<Complex<T>>,
    k2: Vec<Complex<T>>,
    k3: Vec<Complex<T>>,
    k4: Vec<Complex<T>>,
    stage: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Rk4Work<T> {
    pub fn new(hilbert: TruncatedHilbert) -> Self {
        let z = vec![Complex::default(); hilbert.dims * hilbert.dims];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z.clone(),
            scratch: z,
        }
    }
}

/// Evolves `rho` for `t_end`, calling `observe(t, ρ)` every `stride` steps and at the end.
pub fn evolve<T: Real, F>(gen: &Generator<T>, rho: &mut DensityMatrix<T>, dt: T, t_end: T, stride: usize, mut observe: F) -> Result<()>
where
    F: FnMut(T, &DensityMatrix<T>) -> Result<()>,
{
    if !(dt > T::zero()) || t_end < T::zero() {
        return Err(Error::param("dt", "need dt > 0 and t_end >= 0"));
    }
    let steps = (t_end / dt).ceil().to_usize().unwrap_or(0);
    let mut work = Rk4Work::new(gen.hilbert);
    observe(T::zero(), rho)?;
    for k in 1..=steps {
        gen.rk4_step(rho, dt, &mut work);
        if k % stride.max(1) == 0 || k == steps {
            observe(T::from_usize_lossy(k) * dt, rho)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions<T> {
    /// Step length; `None` picks `2 / rate_bound`.
    pub dt: Option<T>,
    /// Target on the entrywise `‖dρ/dt‖₁`.
    pub tolerance: T,
    pub t_max: T,
    pub check_every: usize,
}

impl<T: Real> Default for SteadyOptions<T> {
    fn default() -> Self {
        Self {
            dt: None,
            tolerance: T::lit(1e-9),
            t_max: T::lit(5000.0),
            check_every: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState<T> {
    pub rho: DensityMatrix<T>,
    pub time: T,
    pub residual: T,
}

pub fn evolve_to_steady<T: Real>(gen: &Generator<T>, initial: &DensityMatrix<T>, opts: &SteadyOptions<T>) -> Result<SteadyState<T>> {
    if initial.hilbert != gen.hilbert {
        return Err(Error::param("initial", "density matrix lives on a different Hilbert space"));
    }
    let dt = opts.dt.unwrap_or_else(|| T::lit(2.0) / gen.rate_bound());
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
    }
    let mut rho = initial.clone();
    rho.renormalize();
    let mut work = Rk4Work::new(gen.hilbert);
    let mut t = T::zero();
    let mut residual = gen.residual(&rho, &mut work);
    let every = opts.check_every.max(1);
    while residual >= opts.tolerance {
        if t >= opts.t_max {
            return Err(Error::NonConvergence {
                t_max: opts.t_max.as_f64(),
                residual: residual.as_f64(),
            });
        }
        for _ in 0..every {
            gen.rk4_step(&mut rho, dt, &mut work);
        }
        t = t + dt * T::from_usize_lossy(every);
        residual = gen.residual(&rho, &mut work);
        if !residual.is_finite() {
            return Err(Error::Divergence {
                time: t.as_f64(),
                detail: "non-finite generator residual; reduce dt".into(),
            });
        }
    }
    Ok(SteadyState { rho, time: t, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteExpectations<T> {
    pub n: T,
    pub p: T,
    pub x: T,
    pub sigma_z: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumRecord<T> {
    pub sites: Vec<SiteExpectations<T>>,
    /// Largest imaginary part among the reported expectations.
    pub max_imag: T,
}

/// `P̂_φ = i(a e^{−iφ} − a† e^{iφ})` on `site`.
pub fn p_quadrature<T: Real>(hilbert: &TruncatedHilbert, site: usize, phi: T) -> Result<SparseOp<T>> {
    let a = hilbert.annihilation::<T>(site)?;
    let w = Complex::from_polar(T::one(), -phi);
    let i = Complex::new(T::zero(), T::one());
    Ok(a.scale(i * w).add(&a.adjoint().scale(-i * w.conj())))
}

/// `X̂_φ = a e^{−iφ} + a† e^{iφ}` on `site`.
pub fn x_quadrature<T: Real>(hilbert: &TruncatedHilbert, site: usize, phi: T) -> Result<SparseOp<T>> {
    let a = hilbert.annihilation::<T>(site)?;
    let w = Complex::from_polar(T::one(), -phi);
    Ok(a.scale(w).add(&a.adjoint().scale(w.conj())))
}

/// `⟨n⟩`, `⟨P̂_φ⟩`, `⟨X̂_φ⟩` and `⟨σᶻ⟩` on every site.
pub fn expectations<T: Real>(rho: &DensityMatrix<T>, phi: T) -> Result<QuantumRecord<T>> {
    let h = rho.hilbert;
    let mut max_imag = T::zero();
    let mut sites = Vec::with_capacity(h.n_sites);
    for j in 0..h.n_sites {
        let mut take = |op: SparseOp<T>| {
            let z = rho.expect(&op);
            max_imag = max_imag.max(z.im.abs());
            z.re
        };
        sites.push(SiteExpectations {
            n: take(h.number(j)?),
            p: take(p_quadrature(&h, j, phi)?),
            x: take(x_quadrature(&h, j, phi)?),
            sigma_z: take(h.sigma_z(j)?),
        });
    }
    Ok(QuantumRecord { sites, max_imag })
}
