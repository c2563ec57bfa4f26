//! Monte Carlo experiments and log-log rate regression.
//!
//! Every replicate draws from its own counter-based stream and per-path
//! results are collected in replicate order before any reduction, so a report
//! depends only on its config and never on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{FbmSampler, HurstParam, SamplePath, SamplerMethod, TimeGrid};
use crate::norms::{vector_norm_1_1mb, BesovExponent};
use crate::sde::{solve_euler, solution_error, BuiltinProblem};
use crate::stats::Estimate;
use crate::wong_zakai::{build_driver, error_process, exact_lp_error, theta, ThetaMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PointwiseLp,
    BesovRate,
    SdeRate,
    ThetaScan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(rename = "H")]
    pub hurst: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    /// Grid steps on `[0, T]`.
    #[serde(rename = "n")]
    pub steps: usize,
    /// Noise components.
    #[serde(rename = "m", default = "default_dims")]
    pub dims: usize,
    /// Strictly decreasing, each a whole number of grid steps.
    #[serde(default)]
    pub deltas: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Reuse the same paths for every `δ`.
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
    #[serde(default)]
    pub sampler: SamplerMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<BuiltinProblem>,
    /// Arguments of a `theta_scan`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xs: Option<Vec<f64>>,
}

fn default_p() -> f64 {
    2.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_dims() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let hurst = HurstParam::new(self.hurst)?;
        let grid = self.grid()?;
        if self.dims == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.kind == ExperimentKind::ThetaScan {
            let xs = self.xs.as_deref().unwrap_or(&[]);
            if xs.len() < 2 || xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::Config(
                    "theta_scan needs at least two positive xs".into(),
                ));
            }
            return Ok(());
        }
        if self.n_paths < 2 {
            return Err(Error::Config(format!(
                "n_paths = {} but at least 2 are needed for a standard error",
                self.n_paths
            )));
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::domain("p", self.p, "[1, inf)"));
        }
        if self.deltas.is_empty() {
            return Err(Error::Config("deltas must not be empty".into()));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("deltas must be strictly decreasing".into()));
        }
        for &d in &self.deltas {
            grid.lag_steps(d)?;
        }
        if matches!(self.kind, ExperimentKind::BesovRate | ExperimentKind::SdeRate) {
            let beta = self
                .beta
                .ok_or_else(|| Error::Config(format!("{:?} needs beta", self.kind)))?;
            BesovExponent::new(beta)?;
            let h = hurst.value();
            if !(h > 0.5 && beta > 1.0 - h && beta < h) {
                return Err(Error::Config(format!(
                    "beta = {beta} is outside the window (1-H, H) = ({}, {h}) with H > 1/2 \
                     required for the Besov rate",
                    1.0 - h
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid<f64>> {
        TimeGrid::new(self.horizon, self.steps)
    }

    fn max_lag(&self, grid: &TimeGrid<f64>) -> Result<usize> {
        self.deltas.iter().try_fold(0, |m, &d| Ok(m.max(grid.lag_steps(d)?)))
    }
}

/// Least-squares fit of `ln e = intercept + slope · ln δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn rate_regression(rows: &[(f64, f64)]) -> Result<Regression> {
    for &(d, e) in rows {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Regression(format!("delta {d} is not positive")));
        }
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::Regression(format!(
                "error {e} at delta {d} is not positive"
            )));
        }
    }
    let mut distinct: Vec<f64> = rows.iter().map(|r| r.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Regression(
            "at least two distinct deltas are needed".into(),
        ));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(Regression {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub delta: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub exact: Option<f64>,
    pub n_paths: usize,
    /// Mean of `‖u_δ - u‖_{β,∞} / ‖G_δ - ω‖_{1,1-β}` in SDE runs.
    pub mean_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// Absent when some mean error is zero.
    pub regression: Option<Regression>,
    /// Leave-one-path-out jackknife standard error of the slope.
    pub slope_std_error: Option<f64>,
}

impl RateReport {
    /// Report for per-path errors `errors[r][k]` at `deltas[k]`.
    pub fn from_paths(deltas: &[f64], errors: &[Vec<f64>]) -> Result<Self> {
        let columns = transpose(errors, deltas.len());
        let rows = deltas
            .iter()
            .zip(&columns)
            .map(|(&delta, col)| {
                let est = Estimate::from_samples(col)?;
                Ok(RateRow {
                    delta,
                    mean_error: est.mean,
                    std_error: est.std_error,
                    exact: None,
                    n_paths: col.len(),
                    mean_ratio: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut report = RateReport {
            rows,
            regression: None,
            slope_std_error: None,
        };
        report.refit();
        if report.regression.is_some() {
            report.slope_std_error = jackknife_slope(deltas, &report.rows, errors);
        }
        Ok(report)
    }

    /// Report for errors known exactly, one per `δ`.
    pub fn from_exact(deltas: &[f64], errors: &[f64]) -> Self {
        let rows = deltas
            .iter()
            .zip(errors)
            .map(|(&delta, &e)| RateRow {
                delta,
                mean_error: e,
                std_error: 0.0,
                exact: Some(e),
                n_paths: 0,
                mean_ratio: None,
            })
            .collect();
        let mut report = RateReport {
            rows,
            regression: None,
            slope_std_error: None,
        };
        report.refit();
        report
    }

    fn refit(&mut self) {
        let pairs: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.delta, r.mean_error)).collect();
        self.regression = rate_regression(&pairs).ok();
    }

    pub fn slope(&self) -> Option<f64> {
        self.regression.map(|r| r.slope)
    }
}

fn transpose(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width)
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect()
}

fn jackknife_slope(deltas: &[f64], rows: &[RateRow], errors: &[Vec<f64>]) -> Option<f64> {
    let n = errors.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let slopes: Vec<f64> = errors
        .iter()
        .map(|path| {
            let pairs: Vec<(f64, f64)> = deltas
                .iter()
                .zip(rows)
                .zip(path)
                .map(|((&d, row), &e)| (d, (nf * row.mean_error - e) / (nf - 1.0)))
                .collect();
            rate_regression(&pairs).map(|r| r.slope)
        })
        .collect::<Result<_>>()
        .ok()?;
    let mean = slopes.iter().sum::<f64>() / nf;
    let ss: f64 = slopes.iter().map(|s| (s - mean).powi(2)).sum();
    Some(((nf - 1.0) / nf * ss).sqrt())
}

/// Supplies base paths by replicate index.
pub trait PathSource: Sync {
    fn path(&self, replicate: u64) -> SamplePath<f64>;
}

pub struct FbmSource {
    sampler: FbmSampler<f64>,
    dims: usize,
    seed: u64,
}

impl FbmSource {
    pub fn new(
        grid: TimeGrid<f64>,
        hurst: HurstParam<f64>,
        method: SamplerMethod,
        dims: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(FbmSource {
            sampler: FbmSampler::new(grid, hurst, method)?,
            dims,
            seed,
        })
    }
}

impl PathSource for FbmSource {
    fn path(&self, replicate: u64) -> SamplePath<f64> {
        self.sampler.sample(self.dims, self.seed, replicate)
    }
}

/// Identically zero noise, for checking the plumbing.
pub struct ZeroSource {
    pub grid: TimeGrid<f64>,
    pub hurst: HurstParam<f64>,
    pub dims: usize,
}

impl PathSource for ZeroSource {
    fn path(&self, replicate: u64) -> SamplePath<f64> {
        let values = vec![vec![0.0; self.grid.len()]; self.dims];
        SamplePath::new(self.grid, self.hurst, values, 0, replicate).expect("zero path is valid")
    }
}

/// The base grid every experiment samples on: `[0, T + max δ]`.
pub fn base_grid(config: &ExperimentConfig) -> Result<TimeGrid<f64>> {
    let grid = config.grid()?;
    Ok(grid.extended(config.max_lag(&grid)?))
}

pub fn fbm_source(config: &ExperimentConfig) -> Result<FbmSource> {
    FbmSource::new(
        base_grid(config)?,
        HurstParam::new(config.hurst)?,
        config.sampler,
        config.dims,
        config.seed,
    )
}

/// Per-path quantities for every `δ`, evaluated in parallel and returned in
/// replicate order. `eval(k, path)` handles `deltas[k]`.
fn per_path<R, F>(config: &ExperimentConfig, source: &dyn PathSource, eval: F) -> Result<Vec<Vec<R>>>
where
    R: Send,
    F: Fn(usize, &SamplePath<f64>) -> Result<R> + Sync,
{
    let n_paths = config.n_paths as u64;
    let k_count = config.deltas.len();
    (0..n_paths)
        .into_par_iter()
        .map(|r| {
            if config.common_random_numbers {
                let path = source.path(r);
                (0..k_count).map(|k| eval(k, &path)).collect()
            } else {
                (0..k_count)
                    .map(|k| eval(k, &source.path(k as u64 * n_paths + r)))
                    .collect()
            }
        })
        .collect()
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.kind != kind {
        return Err(Error::Config(format!(
            "config kind is {:?}, expected {kind:?}",
            config.kind
        )));
    }
    config.validate()
}

/// `E|G_δ(T) - ω(T)|^p` of the first component, with the exact value.
pub fn mc_pointwise_error(config: &ExperimentConfig) -> Result<RateReport> {
    expect_kind(config, ExperimentKind::PointwiseLp)?;
    mc_pointwise_error_with(config, &fbm_source(config)?)
}

pub fn mc_pointwise_error_with(
    config: &ExperimentConfig,
    source: &dyn PathSource,
) -> Result<RateReport> {
    config.validate()?;
    let grid = config.grid()?;
    let p = config.p;
    let errors = per_path(config, source, |k, path| {
        let driver = build_driver(path, config.deltas[k], &grid)?;
        Ok(error_process(&driver).at_horizon().abs().powf(p))
    })?;
    let mut report = RateReport::from_paths(&config.deltas, &errors)?;
    let hurst = HurstParam::new(config.hurst)?;
    for row in &mut report.rows {
        row.exact = Some(exact_lp_error(config.horizon, row.delta, hurst, p)?);
    }
    Ok(report)
}

/// Mean discrete `‖G_δ - ω‖_{1,1-β}` on `[0, T]`.
pub fn mc_besov_rate(config: &ExperimentConfig) -> Result<RateReport> {
    expect_kind(config, ExperimentKind::BesovRate)?;
    mc_besov_rate_with(config, &fbm_source(config)?)
}

pub fn mc_besov_rate_with(config: &ExperimentConfig, source: &dyn PathSource) -> Result<RateReport> {
    config.validate()?;
    let grid = config.grid()?;
    let beta = BesovExponent::new(config.beta.expect("validated"))?;
    let errors = per_path(config, source, |k, path| {
        let driver = build_driver(path, config.deltas[k], &grid)?;
        vector_norm_1_1mb(error_process(&driver).values(), grid.step(), beta)
    })?;
    RateReport::from_paths(&config.deltas, &errors)
}

/// Mean `‖u_δ - u‖_{β,∞}` where `u` is driven by `ω` and `u_δ` by `G_δ` on
/// the same grid, together with the mean ratio to `‖G_δ - ω‖_{1,1-β}`.
pub fn mc_sde_rate(config: &ExperimentConfig) -> Result<RateReport> {
    expect_kind(config, ExperimentKind::SdeRate)?;
    mc_sde_rate_with(config, &fbm_source(config)?)
}

pub fn mc_sde_rate_with(config: &ExperimentConfig, source: &dyn PathSource) -> Result<RateReport> {
    config.validate()?;
    let grid = config.grid()?;
    let beta = BesovExponent::new(config.beta.expect("validated"))?;
    let problem = config
        .problem
        .unwrap_or(BuiltinProblem::Linear)
        .build::<f64>(config.dims)?;
    let pairs = per_path(config, source, |k, path| {
        let u = solve_euler(&problem, path, &grid)?;
        let driver = build_driver(path, config.deltas[k], &grid)?;
        let u_delta = solve_euler(&problem, &driver, &grid)?;
        let err = solution_error(&u_delta, &u, beta)?;
        let noise = vector_norm_1_1mb(error_process(&driver).values(), grid.step(), beta)?;
        Ok((err, if noise > 0.0 { err / noise } else { 0.0 }))
    })?;
    let errors: Vec<Vec<f64>> = pairs.iter().map(|p| p.iter().map(|x| x.0).collect()).collect();
    let ratios: Vec<Vec<f64>> = pairs.iter().map(|p| p.iter().map(|x| x.1).collect()).collect();
    let mut report = RateReport::from_paths(&config.deltas, &errors)?;
    for (row, col) in report.rows.iter_mut().zip(transpose(&ratios, config.deltas.len())) {
        row.mean_ratio = Some(Estimate::from_samples(&col)?.mean);
    }
    Ok(report)
}

/// Θ at each `x` by quadrature (`mean_error`) and in closed form (`exact`);
/// the `delta` column holds `x`.
pub fn theta_scan(config: &ExperimentConfig) -> Result<RateReport> {
    expect_kind(config, ExperimentKind::ThetaScan)?;
    let hurst = HurstParam::new(config.hurst)?;
    let xs = config.xs.clone().expect("validated");
    let rows = xs
        .par_iter()
        .map(|&x| {
            Ok(RateRow {
                delta: x,
                mean_error: theta(x, hurst, ThetaMethod::Quadrature)?,
                std_error: 0.0,
                exact: Some(theta(x, hurst, ThetaMethod::ClosedForm)?),
                n_paths: 0,
                mean_ratio: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = RateReport {
        rows,
        regression: None,
        slope_std_error: None,
    };
    report.refit();
    Ok(report)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RateReport> {
    match config.kind {
        ExperimentKind::PointwiseLp => mc_pointwise_error(config),
        ExperimentKind::BesovRate => mc_besov_rate(config),
        ExperimentKind::SdeRate => mc_sde_rate(config),
        ExperimentKind::ThetaScan => theta_scan(config),
    }
}
