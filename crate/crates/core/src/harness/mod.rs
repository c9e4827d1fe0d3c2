//! Configuration-driven experiment runner writing one CSV per spec.

mod fit;
mod row;
mod spec;

pub use fit::{fit_decay, fit_line, fit_loglog_slope, DecayFit, LineFit, Z95};
pub use row::{CsvSink, ExperimentRow, CSV_COLUMNS};
pub use spec::{ExperimentSpec, Mode};

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{finite_size_metric, kt_predictions, predict_quadratures_and_qfi, ChainSpec, RingCorrelator};
use crate::fisher::{estimate_qfi_amplitude, estimate_qfi_phase, FisherProblem};
use crate::langevin::{run_stationary, AngularModel, LangevinParams};
use crate::meanfield::{fastest_rate, integrate_maxwell_bloch, maxwell_bloch_fixed_point, steady_boson_number, MeanFieldState};
use crate::model::{CouplingSign, DerivedCoeffs};
use crate::quantum::{expectations, steady_from_vacuum, QuantumParams, SteadyOptions};
use crate::sampler::{estimate_observables, run_chain, SamplerConfig, XyEstimates};
use crate::state::AngularConfig;
use crate::stats::Estimate;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "SIMULATE_THREADS";

const DEFAULT_SWEEPS: usize = 20_000;
const DEFAULT_LANGEVIN_STEPS: usize = 200_000;
const DEFAULT_N_MAX: usize = 30;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub seed_offset: u64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: usize,
    pub fits: Vec<(String, LineFit)>,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    n: usize,
    seed: u64,
    replica: u64,
}

fn points(spec: &ExperimentSpec, seed_offset: u64) -> Vec<Point> {
    let stochastic = matches!(spec.mode, Mode::Sample | Mode::Langevin | Mode::QfiScaling | Mode::Kt2d);
    let mut out = Vec::new();
    for &n in &spec.n_list {
        if stochastic {
            for &seed in &spec.seeds {
                for replica in 0..spec.replicates as u64 {
                    out.push(Point { n, seed: seed.wrapping_add(seed_offset), replica });
                }
            }
        } else {
            out.push(Point { n, seed: spec.seeds[0].wrapping_add(seed_offset), replica: 0 });
        }
    }
    out
}

struct RowFactory<'a> {
    spec: &'a ExperimentSpec,
    point: Point,
    k_bond: f64,
    h_field: f64,
    metric: Option<f64>,
    rows: Vec<ExperimentRow>,
}

impl<'a> RowFactory<'a> {
    fn push(&mut self, observable: impl Into<String>, e: Estimate<f64>, paper: Option<f64>, errorprop: Option<f64>) {
        self.rows.push(ExperimentRow {
            mode: self.spec.mode.as_str().to_string(),
            n: self.point.n,
            k_bond: self.k_bond,
            h_field: self.h_field,
            epsilon_abs: self.spec.epsilon_abs,
            phi: self.spec.phi,
            observable: observable.into(),
            value: e.value,
            std_error: e.std_error,
            theory_paper: paper,
            theory_errorprop: errorprop,
            finite_size_metric: self.metric,
            seed: self.point.seed,
            wall_time: 0.0,
        });
    }
}

fn ring_metric(n: usize, k: f64) -> Result<Option<f64>> {
    Ok(if n >= 2 { Some(finite_size_metric(n, k)?.metric) } else { None })
}

fn sampler_config(spec: &ExperimentSpec, p: Point, k: f64, h: f64) -> SamplerConfig<f64> {
    let mut cfg = SamplerConfig::new(k, h)
        .with_sign(spec.coupling_sign)
        .with_phi(spec.phi)
        .with_run(spec.sweeps.unwrap_or(DEFAULT_SWEEPS), spec.burn_in.unwrap_or(DEFAULT_SWEEPS / 10), p.seed);
    cfg.replica = p.replica;
    cfg.drive_pattern = spec.drive_pattern;
    cfg.max_distance = spec.max_distance.unwrap_or(usize::MAX);
    cfg
}

/// Rows shared by the sampler and Langevin modes.
fn push_angle_rows(f: &mut RowFactory<'_>, est: &XyEstimates<f64>, coeffs: Option<&DerivedCoeffs<f64>>) -> Result<()> {
    let one_d = f.spec.mode != Mode::Kt2d;
    let exact_g = one_d && f.h_field == 0.0 && f.spec.coupling_sign == CouplingSign::Ferro && f.point.n >= 2;
    let corr = if exact_g {
        Some(RingCorrelator::new(&ChainSpec::new(f.point.n, f.k_bond))?)
    } else {
        None
    };
    for (d, g) in est.profile.g.iter().enumerate().skip(1) {
        let theory = corr.as_ref().map(|c| c.g(d)).transpose()?;
        f.push(format!("g_{d}"), *g, theory, theory);
    }
    let pred = match coeffs {
        Some(c) if one_d && c.n0 > 0.0 => Some(predict_quadratures_and_qfi(c, f.point.n, 0.0)?),
        _ => None,
    };
    f.push("p_sum", est.p_sum, pred.map(|p| p.p_sum_paper), pred.map(|p| p.p_sum_general));
    f.push("x_sum", est.x_sum, None, None);
    f.push("pp_sum", est.pp_sum, None, None);
    f.push("xx_sum", est.xx_sum, None, None);
    f.push("p_var", est.p_var, None, None);
    f.push("x_var", est.x_var, None, None);
    if let Some(a) = est.acceptance {
        f.push("acceptance", Estimate::exact(a), None, None);
    }
    Ok(())
}

fn run_point(spec: &ExperimentSpec, p: Point) -> Result<Vec<ExperimentRow>> {
    let start = Instant::now();
    let coeffs = if p.n >= 2 { spec.coeffs(p.n)? } else { None };
    let (k, h) = spec.weights(coeffs.as_ref());
    let lattice = spec.lattice(p.n);
    let metric = if spec.mode == Mode::Kt2d { None } else { ring_metric(p.n, k)? };
    let mut f = RowFactory {
        spec,
        point: p,
        k_bond: k,
        h_field: h,
        metric,
        rows: Vec::new(),
    };
    let r0 = coeffs.as_ref().filter(|c| c.n0 > 0.0).map(|c| c.r0()).unwrap_or(1.0);
    match spec.mode {
        Mode::Exact => {
            let sum = RingCorrelator::new(&ChainSpec::new(p.n, k))?.sum()?;
            let pred = match &coeffs {
                Some(c) if c.n0 > 0.0 => Some(predict_quadratures_and_qfi(c, p.n, 0.0)?),
                _ => None,
            };
            f.push("sum_g", Estimate::exact(sum), pred.map(|q| q.fq_amplitude_paper), pred.map(|q| q.fq_amplitude_errorprop));
        }
        Mode::Sample | Mode::Kt2d => {
            let cfg = sampler_config(spec, p, k, h);
            let out = run_chain(&lattice, &cfg, None)?;
            let est = estimate_observables(&out, r0)?;
            push_angle_rows(&mut f, &est, coeffs.as_ref())?;
            if spec.mode == Mode::Kt2d {
                let hi = (p.n / 2).min(8);
                let fit = fit_decay(&est.profile.g, 2, hi)?;
                let kt = coeffs.as_ref().map(|c| kt_predictions(c, &lattice, p.n)).transpose()?;
                let eta_bond = if k > 0.0 { Some(1.0 / (std::f64::consts::TAU * k)) } else { None };
                f.push("eta_fit", Estimate::new(fit.eta, fit.eta_se), kt.map(|x| x.eta_paper), eta_bond);
                f.push("aic_power_minus_exponential", Estimate::exact(fit.aic_power - fit.aic_exponential), None, None);
            }
        }
        Mode::Langevin => {
            let cfg = sampler_config(spec, p, k, h);
            let model = match (&coeffs, spec.k_bond) {
                (Some(c), None) if c.n0 > 0.0 => AngularModel::from_params(&spec.model_params(p.n).expect("physics present"), c)?,
                _ => AngularModel::from_sampler_config(&lattice, &cfg, spec.diffusion.unwrap_or(1.0))?,
            };
            let steps = spec.steps.unwrap_or(DEFAULT_LANGEVIN_STEPS);
            let mut lp = LangevinParams::new(spec.dt.expect("validated"), steps, steps / 10, p.seed);
            lp.replica = p.replica;
            lp.max_distance = cfg.max_distance;
            let (stats, _) = run_stationary(&lattice, &model, &AngularConfig::uniform(p.n, spec.phi), &lp)?;
            let est = crate::sampler::estimate_from_stats(&stats, r0)?;
            push_angle_rows(&mut f, &est, coeffs.as_ref())?;
        }
        Mode::Meanfield => {
            let params = spec.model_params(p.n).expect("validated");
            let dt = 0.05 / fastest_rate(&params);
            let t_end = spec.t_end.unwrap_or(200.0 / params.kappa);
            let traj = integrate_maxwell_bloch(&params, &MeanFieldState::standard_seed(&params)?, dt, t_end, 0)?;
            let paper = steady_boson_number(&params)?;
            let fixed = maxwell_bloch_fixed_point(&params);
            f.push("intensity", Estimate::exact(traj.final_state.mean_intensity()), Some(paper), Some(fixed));
        }
        Mode::QfiScaling => {
            let params = spec.model_params(p.n).expect("validated");
            let c = coeffs.expect("validated");
            let run = sampler_config(spec, p, k, h);
            let mut problem = FisherProblem::from_params(&params, &c, run)?;
            problem.delta = spec.delta;
            let amp = estimate_qfi_amplitude(&problem)?;
            let e = amp.estimate;
            f.push("fq_amplitude", Estimate::new(e.value, e.std_error), e.theory_paper, e.theory_errorprop);
            f.push("dp_sum_depsilon", e.derivative, None, None);
            f.push("p_sum_midpoint", amp.midpoint.p_sum, None, None);
            if spec.epsilon_abs > 0.0 {
                let mut ph = problem.clone();
                ph.delta = None;
                let e = estimate_qfi_phase(&ph)?.estimate;
                f.push("fq_phase", Estimate::new(e.value, e.std_error), e.theory_paper, e.theory_errorprop);
            }
        }
        Mode::QuantumOracle => {
            let reference = spec.isolated_params().expect("validated");
            let q = if p.n == 1 {
                let mut q = QuantumParams::from_model(&reference)?;
                q.drive.truncate(1);
                q
            } else {
                QuantumParams::from_model(&spec.model_params(p.n).expect("validated"))?
            };
            let ss = steady_from_vacuum(&q, spec.n_max.unwrap_or(DEFAULT_N_MAX), &SteadyOptions::default())?;
            ss.rho.check()?;
            let rec = expectations(&ss.rho, spec.phi)?;
            let paper = steady_boson_number(&reference)?;
            let fixed = maxwell_bloch_fixed_point(&reference);
            for (j, s) in rec.sites.iter().enumerate() {
                f.push(format!("n_site{j}"), Estimate::exact(s.n), Some(paper), Some(fixed));
                f.push(format!("p_site{j}"), Estimate::exact(s.p), None, None);
                f.push(format!("x_site{j}"), Estimate::exact(s.x), None, None);
                f.push(format!("sigma_z_site{j}"), Estimate::exact(s.sigma_z), None, None);
                f.push(format!("tail_site{j}"), Estimate::exact(ss.rho.tail_population(j)), None, None);
            }
        }
    }
    let wall = start.elapsed().as_secs_f64();
    for r in &mut f.rows {
        r.wall_time = wall;
    }
    Ok(f.rows)
}

/// Inverse-variance mean of the estimates of one observable per `N`, fitted on log-log axes.
fn scaling_fit(rows: &[ExperimentRow], observable: &str, times_n: bool) -> Option<LineFit> {
    let mut by_n: BTreeMap<usize, Vec<Estimate<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.observable == observable) {
        let s = if times_n { r.n as f64 } else { 1.0 };
        by_n.entry(r.n).or_default().push(Estimate::new(r.value * s, r.std_error * s));
    }
    let pts: Vec<(usize, Estimate<f64>)> = by_n
        .into_iter()
        .map(|(n, es)| {
            if es.iter().all(|e| e.std_error > 0.0) {
                let w: f64 = es.iter().map(|e| e.std_error.powi(-2)).sum();
                let v = es.iter().map(|e| e.value * e.std_error.powi(-2)).sum::<f64>() / w;
                (n, Estimate::new(v, w.sqrt().recip()))
            } else {
                let v = es.iter().map(|e| e.value).sum::<f64>() / es.len() as f64;
                (n, Estimate::exact(v))
            }
        })
        .collect();
    fit_loglog_slope(&pts).ok()
}

pub fn summarize(mode: Mode, rows: &[ExperimentRow]) -> Vec<(String, LineFit)> {
    let mut fits = Vec::new();
    match mode {
        Mode::Exact => {
            if let Some(f) = scaling_fit(rows, "sum_g", true) {
                fits.push(("n_sum_g".to_string(), f));
            }
        }
        Mode::QfiScaling => {
            for obs in ["fq_amplitude", "fq_phase", "p_sum_midpoint"] {
                if let Some(f) = scaling_fit(rows, obs, false) {
                    fits.push((obs.to_string(), f));
                }
            }
        }
        _ => {}
    }
    fits
}

pub fn provenance(spec_bytes: &[u8], spec: &ExperimentSpec, opts: &RunOptions) -> Vec<String> {
    let digest = Sha256::digest(spec_bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    vec![
        format!("laser-xy {VERSION}"),
        format!("spec_sha256 {hex}"),
        format!("mode {}", spec.mode.as_str()),
        format!("seed_offset {}", opts.seed_offset),
    ]
}

/// Runs every `(N, seed, replicate)` point on a worker pool and writes rows in spec order.
///
/// Rows of points preceding a failure are written and flushed before the error is returned.
pub fn run_spec<W: Write>(spec: &ExperimentSpec, spec_bytes: &[u8], opts: &RunOptions, out: W) -> Result<RunSummary> {
    spec.validate()?;
    let mut sink = CsvSink::new(out, &provenance(spec_bytes, spec, opts))?;
    let pts = points(spec, opts.seed_offset);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.threads {
        if k == 0 {
            return Err(Error::InvalidSpec("thread count must be >= 1".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let results: Vec<Result<Vec<ExperimentRow>>> = pool.install(|| pts.par_iter().map(|&p| run_point(spec, p)).collect());
    let mut all = Vec::new();
    for res in results {
        match res {
            Ok(rows) => {
                for r in &rows {
                    sink.write_row(r)?;
                }
                all.extend(rows);
            }
            Err(e) => {
                sink.comment(&format!("aborted: {e}"))?;
                sink.flush()?;
                return Err(e);
            }
        }
    }
    let fits = summarize(spec.mode, &all);
    for (name, f) in &fits {
        sink.comment(&format!(
            "fit {name} slope={} slope_se={} ci_half_width={} intercept={}",
            f.slope, f.slope_se, f.ci_half_width, f.intercept
        ))?;
    }
    sink.flush()?;
    Ok(RunSummary { rows: sink.rows(), fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(json: &str) -> (String, RunSummary) {
        let spec = ExperimentSpec::from_json(json).unwrap();
        let mut buf = Vec::new();
        let s = run_spec(&spec, json.as_bytes(), &RunOptions::default(), &mut buf).unwrap();
        (String::from_utf8(buf).unwrap(), s)
    }

    fn body_without_wall_time(text: &str) -> Vec<String> {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.rsplit_once(',').map(|(a, _)| a.to_string()).unwrap_or_default())
            .collect()
    }

    #[test]
    fn exact_mode_rows_and_fit() {
        let (text, s) = run(r#"{"mode":"exact","n_list":[4,8,16],"k_bond":2.0}"#);
        assert_eq!(s.rows, 3);
        assert!(text.lines().filter(|l| l.starts_with("exact,")).count() == 3);
        let fit = &s.fits[0].1;
        assert!(fit.slope > 1.0 && fit.slope < 2.0);
        assert!(text.contains("# spec_sha256 "));
    }

    #[test]
    fn sampler_mode_is_reproducible() {
        let json = r#"{"mode":"sample","n_list":[4,6],"k_bond":1.0,"seeds":[3,4],"sweeps":2000,"burn_in":200}"#;
        let (a, _) = run(json);
        let (b, _) = run(json);
        assert_eq!(body_without_wall_time(&a), body_without_wall_time(&b));
        assert!(a.contains("sample,6,1,0,0,0,g_1,"));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let json = r#"{"mode":"sample","n_list":[5],"k_bond":0.5,"seeds":[1,2,3],"sweeps":1000,"burn_in":100}"#;
        let spec = ExperimentSpec::from_json(json).unwrap();
        let mut one = Vec::new();
        let mut many = Vec::new();
        run_spec(&spec, json.as_bytes(), &RunOptions { threads: Some(1), seed_offset: 0 }, &mut one).unwrap();
        run_spec(&spec, json.as_bytes(), &RunOptions { threads: Some(3), seed_offset: 0 }, &mut many).unwrap();
        let (a, b) = (String::from_utf8(one).unwrap(), String::from_utf8(many).unwrap());
        assert_eq!(body_without_wall_time(&a), body_without_wall_time(&b));
    }

    #[test]
    fn meanfield_row_carries_both_theories() {
        let (text, _) = run(r#"{"mode":"meanfield","n_list":[2],"g":1,"kappa":0.1,"gamma":5}"#);
        let row = text.lines().find(|l| l.starts_with("meanfield,")).unwrap();
        let cells: Vec<&str> = row.split(',').collect();
        let value: f64 = cells[7].parse().unwrap();
        let errorprop: f64 = cells[10].parse().unwrap();
        assert!((value / errorprop - 1.0).abs() < 1e-6, "{row}");
    }
}
