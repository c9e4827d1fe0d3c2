//! Truncated-Fock Lindblad solver for one or two qubit lasers.

mod density;
mod lindblad;
mod ops;

pub use density::{DensityMatrix, LocalState, HERMITICITY_TOL, POSITIVITY_TOL, TAIL_TOL, TRACE_TOL};
pub use lindblad::{
    build_generator, evolve, evolve_to_steady, expectations, p_quadrature, x_quadrature, Generator, QuantumParams,
    QuantumRecord, Rk4Work, SiteExpectations, SteadyOptions, SteadyState,
};
pub use ops::{SparseOp, TruncatedHilbert, DEFAULT_BUDGET};

use serde::Serialize;

use crate::error::Result;
use crate::scalar::Real;

/// Steady state from vacuum with excited qubits.
pub fn steady_from_vacuum<T: Real>(params: &QuantumParams<T>, n_max: usize, opts: &SteadyOptions<T>) -> Result<SteadyState<T>> {
    let h = TruncatedHilbert::new(params.drive.len(), n_max)?;
    let gen = build_generator(params, h)?;
    let sites: Vec<_> = (0..h.n_sites).map(|_| LocalState::vacuum(n_max, true)).collect();
    let init = DensityMatrix::product(h, &sites)?;
    evolve_to_steady(&gen, &init, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffReport<T> {
    pub n_max: usize,
    pub n_refined: usize,
    pub mean_n: T,
    pub mean_n_refined: T,
    pub rel_change: T,
    /// Top-level population at the refined cutoff.
    pub tail: T,
}

/// Compares the site-0 steady `⟨n⟩` at `n_max` and `n_max + extra`.
pub fn cutoff_refinement<T: Real>(params: &QuantumParams<T>, n_max: usize, extra: usize, opts: &SteadyOptions<T>) -> Result<CutoffReport<T>> {
    let lo = steady_from_vacuum(params, n_max, opts)?;
    let hi = steady_from_vacuum(params, n_max + extra, opts)?;
    let n_lo = expectations(&lo.rho, T::zero())?.sites[0].n;
    let n_hi = expectations(&hi.rho, T::zero())?.sites[0].n;
    Ok(CutoffReport {
        n_max,
        n_refined: n_max + extra,
        mean_n: n_lo,
        mean_n_refined: n_hi,
        rel_change: ((n_hi - n_lo) / n_hi).abs(),
        tail: hi.rho.tail_population(0),
    })
}
