//! Exact sampling of fractional Brownian motion on uniform grids.
//!
//! Increments (fractional Gaussian noise) are drawn either by circulant
//! embedding of their Toeplitz covariance (Davies–Harte / Wood–Chan) or by a
//! dense Cholesky factor of the same matrix, and summed into a path that
//! starts at zero. Every replicate owns an independent ChaCha stream derived
//! from `(seed, replicate)`, so batches are reproducible bit for bit no
//! matter how they are scheduled.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::Estimate;

/// Hurst index, strictly inside `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct HurstParam<T>(T);

impl<T: Scalar> HurstParam<T> {
    pub fn new(h: T) -> Result<Self> {
        if h.is_finite() && h > T::zero() && h < T::one() {
            Ok(HurstParam(h))
        } else {
            Err(Error::domain("H", h.as_f64(), "(0, 1)"))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// Uniform grid `t_k = k * step`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    step: T,
    steps: usize,
}

impl<T: Scalar> TimeGrid<T> {
    /// Grid of `steps` equal cells on `[0, horizon]`.
    pub fn new(horizon: T, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > T::zero()) {
            return Err(Error::domain("T", horizon.as_f64(), "(0, inf)"));
        }
        if steps < 2 {
            return Err(Error::Grid(format!("need at least 2 steps, got {steps}")));
        }
        Ok(TimeGrid {
            step: horizon / T::from_count(steps),
            steps,
        })
    }

    pub fn from_step(step: T, steps: usize) -> Result<Self> {
        if !(step.is_finite() && step > T::zero()) {
            return Err(Error::domain("step", step.as_f64(), "(0, inf)"));
        }
        if steps < 2 {
            return Err(Error::Grid(format!("need at least 2 steps, got {steps}")));
        }
        Ok(TimeGrid { step, steps })
    }

    #[inline]
    pub fn step(&self) -> T {
        self.step
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `steps + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> T {
        self.time(self.steps)
    }

    #[inline]
    pub fn time(&self, k: usize) -> T {
        self.step * T::from_count(k)
    }

    /// Same step, `extra` more cells.
    pub fn extended(&self, extra: usize) -> Self {
        TimeGrid {
            step: self.step,
            steps: self.steps + extra,
        }
    }

    /// Same step, first `steps` cells.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        if steps > self.steps {
            return Err(Error::PathTooShort {
                available: self.steps,
                required: steps,
            });
        }
        TimeGrid::from_step(self.step, steps)
    }

    /// Number of cells spanned by `delta`; fails unless `delta` is a positive
    /// integer multiple of the step.
    pub fn lag_steps(&self, delta: T) -> Result<usize> {
        let err = || Error::NotGridMultiple {
            delta: delta.as_f64(),
            step: self.step.as_f64(),
        };
        if !(delta.is_finite() && delta > T::zero()) {
            return Err(err());
        }
        let ratio = delta / self.step;
        let k = ratio.round();
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        if k < T::one() || (ratio - k).abs() > tol * k {
            return Err(err());
        }
        k.to_usize().ok_or_else(err)
    }

    /// Steps agree to relative `1e-9`.
    pub fn same_step(&self, other: &TimeGrid<T>) -> bool {
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        (self.step - other.step).abs() <= tol * self.step
    }
}

/// Covariance of fBm, `(s^{2H} + t^{2H} - |t - s|^{2H}) / 2`.
pub fn covariance<T: Scalar>(s: T, t: T, hurst: HurstParam<T>) -> Result<T> {
    for (name, v) in [("s", s), ("t", t)] {
        if !(v.is_finite() && v >= T::zero()) {
            return Err(Error::domain(name, v.as_f64(), "[0, inf)"));
        }
    }
    let a = T::lit(2.0) * hurst.value();
    Ok(T::lit(0.5) * (s.powf(a) + t.powf(a) - (t - s).abs().powf(a)))
}

/// Autocovariance at lag `k` of increments over cells of width `step`.
fn increment_autocovariance<T: Scalar>(k: usize, step: T, hurst: HurstParam<T>) -> T {
    let a = T::lit(2.0) * hurst.value();
    let kf = T::from_count(k);
    let one = T::one();
    let lower = if k == 0 { one } else { (kf - one).powf(a) };
    T::lit(0.5) * step.powf(a) * ((kf + one).powf(a) - T::lit(2.0) * kf.powf(a) + lower)
}

/// Values of an `m`-dimensional path on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath<T> {
    grid: TimeGrid<T>,
    hurst: HurstParam<T>,
    seed: u64,
    replicate: u64,
    values: Vec<Vec<T>>,
    fallback: bool,
}

impl<T: Scalar> SamplePath<T> {
    /// Wraps externally produced values. Components must have one value per
    /// grid point, start at zero and be finite.
    pub fn new(
        grid: TimeGrid<T>,
        hurst: HurstParam<T>,
        values: Vec<Vec<T>>,
        seed: u64,
        replicate: u64,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Path("at least one component required".into()));
        }
        for (j, c) in values.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(Error::Path(format!(
                    "component {j} has {} values for {} grid points",
                    c.len(),
                    grid.len()
                )));
            }
            if c[0] != T::zero() {
                return Err(Error::Path(format!("component {j} does not start at zero")));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Path(format!("component {j} has non-finite values")));
            }
        }
        Ok(SamplePath {
            grid,
            hurst,
            seed,
            replicate,
            values,
            fallback: false,
        })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParam<T> {
        self.hurst
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn component(&self, j: usize) -> &[T] {
        &self.values[j]
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    /// Set when the circulant sampler had to fall back to Cholesky.
    pub fn used_fallback(&self) -> bool {
        self.fallback
    }

    /// Restriction to the first `steps` cells of the grid.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        let grid = self.grid.truncated(steps)?;
        Ok(SamplePath {
            grid,
            values: self.values.iter().map(|c| c[..=steps].to_vec()).collect(),
            ..self.clone()
        })
    }
}

/// A vector-valued signal sampled on a uniform grid.
pub trait GridPath<T: Scalar> {
    fn grid(&self) -> &TimeGrid<T>;
    fn dims(&self) -> usize;
    fn component(&self, j: usize) -> &[T];
}

impl<T: Scalar> GridPath<T> for SamplePath<T> {
    fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }
    fn dims(&self) -> usize {
        self.values.len()
    }
    fn component(&self, j: usize) -> &[T] {
        &self.values[j]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMethod {
    /// Circulant for grids of at least 64 steps, Cholesky below.
    #[default]
    Auto,
    Cholesky,
    Circulant,
}

impl SamplerMethod {
    pub const AUTO_CIRCULANT_MIN_STEPS: usize = 64;
}

impl fmt::Display for SamplerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerMethod::Auto => "auto",
            SamplerMethod::Cholesky => "cholesky",
            SamplerMethod::Circulant => "circulant",
        })
    }
}

impl FromStr for SamplerMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SamplerMethod::Auto),
            "cholesky" => Ok(SamplerMethod::Cholesky),
            "circulant" => Ok(SamplerMethod::Circulant),
            other => Err(Error::Config(format!("unknown sampler method '{other}'"))),
        }
    }
}

enum Factor<T: Scalar> {
    Circulant {
        // sqrt(lambda_k / M) for the 2N-point embedding
        scale: Vec<T>,
        fft: Arc<dyn Fft<T>>,
    },
    Cholesky {
        // row-major lower triangle, row i has i + 1 entries
        lower: Vec<T>,
    },
}

/// Precomputed factorization of the increment covariance for one grid and
/// Hurst index; draws any number of replicates.
pub struct FbmSampler<T: Scalar> {
    grid: TimeGrid<T>,
    hurst: HurstParam<T>,
    factor: Factor<T>,
    fallback: bool,
}

impl<T: Scalar> FbmSampler<T> {
    pub fn new(grid: TimeGrid<T>, hurst: HurstParam<T>, method: SamplerMethod) -> Result<Self> {
        let use_circulant = match method {
            SamplerMethod::Circulant => true,
            SamplerMethod::Cholesky => false,
            SamplerMethod::Auto => grid.steps() >= SamplerMethod::AUTO_CIRCULANT_MIN_STEPS,
        };
        if use_circulant {
            if let Some(factor) = circulant_factor(&grid, hurst) {
                return Ok(FbmSampler {
                    grid,
                    hurst,
                    factor,
                    fallback: false,
                });
            }
        }
        Ok(FbmSampler {
            grid,
            hurst,
            factor: cholesky_factor(&grid, hurst)?,
            fallback: use_circulant,
        })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParam<T> {
        self.hurst
    }

    /// The method actually in use after any fallback.
    pub fn method(&self) -> SamplerMethod {
        match self.factor {
            Factor::Circulant { .. } => SamplerMethod::Circulant,
            Factor::Cholesky { .. } => SamplerMethod::Cholesky,
        }
    }

    /// True when circulant embedding was requested but not positive
    /// semidefinite.
    pub fn used_fallback(&self) -> bool {
        self.fallback
    }

    /// One replicate with `dims` independent components.
    pub fn sample(&self, dims: usize, seed: u64, replicate: u64) -> SamplePath<T> {
        assert!(dims >= 1, "at least one component");
        let mut rng = replicate_rng(seed, replicate);
        let values = (0..dims)
            .map(|_| {
                let inc = self.increments(&mut rng);
                let mut path = Vec::with_capacity(inc.len() + 1);
                let mut acc = T::zero();
                path.push(acc);
                for dx in inc {
                    acc = acc + dx;
                    path.push(acc);
                }
                path
            })
            .collect();
        SamplePath {
            grid: self.grid,
            hurst: self.hurst,
            seed,
            replicate,
            values,
            fallback: self.fallback,
        }
    }

    /// Replicates `replicates.start..replicates.end`, generated in parallel
    /// and returned in replicate order.
    pub fn sample_batch(
        &self,
        dims: usize,
        seed: u64,
        replicates: std::ops::Range<u64>,
    ) -> Vec<SamplePath<T>> {
        replicates
            .into_par_iter()
            .map(|r| self.sample(dims, seed, r))
            .collect()
    }

    fn increments(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        let n = self.grid.steps();
        match &self.factor {
            Factor::Circulant { scale, fft } => {
                let mut buf: Vec<Complex<T>> = scale
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * T::lit(re), s * T::lit(im))
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..n].iter().map(|c| c.re).collect()
            }
            Factor::Cholesky { lower } => {
                let z: Vec<T> = (0..n)
                    .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
                    .collect();
                let mut out = Vec::with_capacity(n);
                let mut offset = 0;
                for i in 0..n {
                    let row = &lower[offset..offset + i + 1];
                    out.push(row.iter().zip(&z).fold(T::zero(), |s, (&l, &x)| s + l * x));
                    offset += i + 1;
                }
                out
            }
        }
    }
}

/// Independent stream for `(seed, replicate)`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn circulant_factor<T: Scalar>(grid: &TimeGrid<T>, hurst: HurstParam<T>) -> Option<Factor<T>> {
    let n = grid.steps();
    let m = 2 * n;
    let mut row: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); m];
    for k in 0..=n {
        row[k].re = increment_autocovariance(k, grid.step(), hurst);
    }
    for k in 1..n {
        row[m - k].re = row[k].re;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let max = row.iter().fold(T::zero(), |a, c| a.max(c.re));
    let floor = -T::lit(1e-10) * max;
    if row.iter().any(|c| c.re < floor) {
        return None;
    }
    let mf = T::from_count(m);
    let scale = row
        .iter()
        .map(|c| (c.re.max(T::zero()) / mf).sqrt())
        .collect();
    Some(Factor::Circulant { scale, fft })
}

fn cholesky_factor<T: Scalar>(grid: &TimeGrid<T>, hurst: HurstParam<T>) -> Result<Factor<T>> {
    let n = grid.steps();
    let gamma: Vec<T> = (0..n)
        .map(|k| increment_autocovariance(k, grid.step(), hurst))
        .collect();
    let mut lower: Vec<T> = Vec::with_capacity(n * (n + 1) / 2);
    let mut starts = Vec::with_capacity(n);
    for i in 0..n {
        let start_i = lower.len();
        starts.push(start_i);
        for j in 0..=i {
            let start_j = starts[j];
            let mut s = gamma[i - j];
            for k in 0..j {
                s = s - lower[start_i + k] * lower[start_j + k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(Error::Cholesky { size: n, row: i });
                }
                lower.push(s.sqrt());
            } else {
                let d = lower[start_j + j];
                lower.push(s / d);
            }
        }
    }
    Ok(Factor::Cholesky { lower })
}

/// One-shot convenience around [`FbmSampler`].
pub fn generate_path<T: Scalar>(
    grid: TimeGrid<T>,
    hurst: HurstParam<T>,
    dims: usize,
    seed: u64,
    replicate: u64,
    method: SamplerMethod,
) -> Result<SamplePath<T>> {
    if dims == 0 {
        return Err(Error::Config("dims must be at least 1".into()));
    }
    Ok(FbmSampler::new(grid, hurst, method)?.sample(dims, seed, replicate))
}

/// Mean of `w(t_i) w(t_j)` over the first component, with plug-in standard
/// error.
pub fn empirical_covariance<T: Scalar>(
    paths: &[SamplePath<T>],
    i: usize,
    j: usize,
) -> Result<Estimate<T>> {
    empirical_covariance_of(paths, i, j, 0)
}

pub fn empirical_covariance_of<T: Scalar>(
    paths: &[SamplePath<T>],
    i: usize,
    j: usize,
    component: usize,
) -> Result<Estimate<T>> {
    let first = paths.first().ok_or(Error::Empty("paths"))?;
    for p in paths {
        if p.grid != first.grid || p.hurst != first.hurst || p.dims() != first.dims() {
            return Err(Error::GridMismatch(
                "paths must share grid, Hurst index and dimension".into(),
            ));
        }
    }
    if i >= first.grid.len() || j >= first.grid.len() || component >= first.dims() {
        return Err(Error::Config(format!(
            "index ({i}, {j}, component {component}) out of range"
        )));
    }
    let products: Vec<T> = paths
        .iter()
        .map(|p| p.values[component][i] * p.values[component][j])
        .collect();
    Estimate::from_samples(&products)
}

/// Sample variance of `w(t_j) - w(t_i)` over the first component.
pub fn empirical_increment_variance<T: Scalar>(
    paths: &[SamplePath<T>],
    i: usize,
    j: usize,
) -> Result<Estimate<T>> {
    if paths.is_empty() {
        return Err(Error::Empty("paths"));
    }
    let sq: Vec<T> = paths
        .iter()
        .map(|p| {
            let d = p.values[0][j] - p.values[0][i];
            d * d
        })
        .collect();
    Estimate::from_samples(&sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HurstParam<f64> {
        HurstParam::new(x).unwrap()
    }

    #[test]
    fn covariance_examples() {
        for hh in [0.1, 0.5, 0.9] {
            assert_eq!(covariance(1.0, 1.0, h(hh)).unwrap(), 1.0);
        }
        assert_eq!(covariance(1.0, 2.0, h(0.5)).unwrap(), 1.0);
        let t: f64 = 0.37;
        assert!((covariance(t, t, h(0.3)).unwrap() - t.powf(0.6)).abs() < 1e-15);
        assert!(covariance(-1.0, 1.0, h(0.5)).is_err());
    }

    #[test]
    fn hurst_domain() {
        assert!(HurstParam::new(0.0_f64).is_err());
        assert!(HurstParam::new(1.0_f64).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(HurstParam::new(0.5_f64).is_ok());
    }

    #[test]
    fn lag_steps_requires_multiples() {
        let g = TimeGrid::new(1.0_f64, 1000).unwrap();
        assert_eq!(g.lag_steps(0.1).unwrap(), 100);
        assert!(g.lag_steps(0.0005).is_err());
        assert!(g.lag_steps(0.0).is_err());
        assert!(g.lag_steps(-0.1).is_err());
    }

    #[test]
    fn grid_needs_two_steps() {
        assert!(TimeGrid::new(1.0_f64, 1).is_err());
        assert!(TimeGrid::new(0.0_f64, 10).is_err());
    }

    #[test]
    fn paths_start_at_zero_and_are_reproducible() {
        let g = TimeGrid::new(1.0_f64, 128).unwrap();
        for method in [SamplerMethod::Cholesky, SamplerMethod::Circulant] {
            let a = generate_path(g, h(0.7), 3, 42, 5, method).unwrap();
            let b = generate_path(g, h(0.7), 3, 42, 5, method).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.dims(), 3);
            for j in 0..3 {
                assert_eq!(a.component(j)[0], 0.0);
                assert!(a.component(j).iter().all(|v| v.is_finite()));
            }
            let c = generate_path(g, h(0.7), 3, 42, 6, method).unwrap();
            assert_ne!(a.component(0), c.component(0));
        }
    }

    #[test]
    fn batch_matches_single_draws() {
        let g = TimeGrid::new(1.0_f64, 64).unwrap();
        let s = FbmSampler::new(g, h(0.3), SamplerMethod::Auto).unwrap();
        assert_eq!(s.method(), SamplerMethod::Circulant);
        let batch = s.sample_batch(2, 9, 10..14);
        for (k, p) in batch.iter().enumerate() {
            assert_eq!(*p, s.sample(2, 9, 10 + k as u64));
        }
    }

    #[test]
    fn auto_uses_cholesky_on_small_grids() {
        let g = TimeGrid::new(1.0_f64, 8).unwrap();
        let s = FbmSampler::new(g, h(0.6), SamplerMethod::Auto).unwrap();
        assert_eq!(s.method(), SamplerMethod::Cholesky);
        assert!(!s.used_fallback());
    }

    #[test]
    fn brownian_increments_have_unit_step_variance() {
        let g = TimeGrid::new(1.0_f64, 16).unwrap();
        let s = FbmSampler::new(g, h(0.5), SamplerMethod::Circulant).unwrap();
        let paths = s.sample_batch(1, 3, 0..20_000);
        for k in [0usize, 7, 15] {
            let e = empirical_increment_variance(&paths, k, k + 1).unwrap();
            assert!(e.within(g.step(), 4.0), "{e:?}");
        }
    }

    #[test]
    fn empirical_covariance_trivial_cases() {
        let g = TimeGrid::new(1.0_f64, 4).unwrap();
        let zero = SamplePath::new(g, h(0.5), vec![vec![0.0; 5]], 0, 0).unwrap();
        let e = empirical_covariance(&[zero.clone(), zero], 2, 3).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
        let paths = generate_path(g, h(0.5), 1, 1, 0, SamplerMethod::Cholesky).unwrap();
        let e = empirical_covariance(&[paths], 0, 0).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
        assert!(empirical_covariance::<f64>(&[], 0, 0).is_err());
    }

    #[test]
    fn sample_path_validation() {
        let g = TimeGrid::new(1.0_f64, 2).unwrap();
        assert!(SamplePath::new(g, h(0.5), vec![vec![1.0, 0.0, 0.0]], 0, 0).is_err());
        assert!(SamplePath::new(g, h(0.5), vec![vec![0.0, 0.0]], 0, 0).is_err());
        assert!(SamplePath::new(g, h(0.5), vec![vec![0.0, f64::NAN, 0.0]], 0, 0).is_err());
        assert!(SamplePath::new(g, h(0.5), vec![], 0, 0).is_err());
    }

    #[test]
    fn single_precision_sampler() {
        let g = TimeGrid::new(1.0_f32, 256).unwrap();
        let p = generate_path(g, HurstParam::new(0.7_f32).unwrap(), 1, 1, 1, SamplerMethod::Auto)
            .unwrap();
        assert_eq!(p.component(0).len(), 257);
        assert!(p.component(0).iter().all(|v| v.is_finite()));
    }
}
