//! Stationary Wong–Zakai smoothing of a sampled path.
//!
//! The driver is the running integral of the shifted-increment average,
//!
//! ```text
//! G_δ(t) = ∫_0^t (ω(s+δ) - ω(s))/δ ds = (1/δ)(∫_t^{t+δ} ω - ∫_0^δ ω),
//! ```
//!
//! evaluated with the trapezoid rule. `δ` must be a whole number of grid
//! cells so the shift is exact on the grid, and the base path has to extend
//! at least `δ` past the horizon of the driver.

mod theta;

pub use theta::{quadrature_tolerance, theta, ThetaMethod};

use crate::error::{Error, Result};
use crate::fbm::{GridPath, HurstParam, SamplePath, TimeGrid};
use crate::scalar::{gamma, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct WongZakaiDriver<T> {
    grid: TimeGrid<T>,
    delta: T,
    lag: usize,
    hurst: HurstParam<T>,
    seed: u64,
    replicate: u64,
    values: Vec<Vec<T>>,
    // ω restricted to `grid`
    source: Vec<Vec<T>>,
}

impl<T: Scalar> WongZakaiDriver<T> {
    pub fn delta(&self) -> T {
        self.delta
    }

    /// `δ / step`.
    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn hurst(&self) -> HurstParam<T> {
        self.hurst
    }

    /// Seed and replicate index of the base path.
    pub fn source_id(&self) -> (u64, u64) {
        (self.seed, self.replicate)
    }

    /// The base path restricted to the driver grid.
    pub fn source(&self) -> &[Vec<T>] {
        &self.source
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }
}

impl<T: Scalar> GridPath<T> for WongZakaiDriver<T> {
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

/// Builds `G_δ` on `grid` from a base path that covers `[0, T + δ]`.
pub fn build_driver<T: Scalar>(
    base: &SamplePath<T>,
    delta: T,
    grid: &TimeGrid<T>,
) -> Result<WongZakaiDriver<T>> {
    if !grid.same_step(base.grid()) {
        return Err(Error::GridMismatch(format!(
            "driver step {} differs from base step {}",
            grid.step(),
            base.grid().step()
        )));
    }
    let lag = grid.lag_steps(delta)?;
    let required = grid.steps() + lag;
    if base.grid().steps() < required {
        return Err(Error::PathTooShort {
            available: base.grid().steps(),
            required,
        });
    }
    let step = base.grid().step();
    let half_step = T::lit(0.5) * step;
    let delta = step * T::from_count(lag);
    let n = grid.steps();

    let mut values = Vec::with_capacity(base.dims());
    let mut source = Vec::with_capacity(base.dims());
    for omega in base.values() {
        let omega = &omega[..=required];
        let mut cumulative = Vec::with_capacity(required + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for w in omega.windows(2) {
            acc = acc + half_step * (w[0] + w[1]);
            cumulative.push(acc);
        }
        let head = cumulative[lag];
        let g: Vec<T> = (0..=n)
            .map(|i| (cumulative[i + lag] - cumulative[i] - head) / delta)
            .collect();
        values.push(g);
        source.push(omega[..=n].to_vec());
    }
    Ok(WongZakaiDriver {
        grid: *grid,
        delta,
        lag,
        hurst: base.hurst(),
        seed: base.seed(),
        replicate: base.replicate(),
        values,
        source,
    })
}

/// `G_δ(t_k) - ω(t_k)` on the driver grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorProcess<T> {
    grid: TimeGrid<T>,
    delta: T,
    hurst: HurstParam<T>,
    values: Vec<Vec<T>>,
}

impl<T: Scalar> ErrorProcess<T> {
    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn hurst(&self) -> HurstParam<T> {
        self.hurst
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    /// Value of the first component at the last grid point.
    pub fn at_horizon(&self) -> T {
        *self.values[0].last().expect("non-empty grid")
    }
}

impl<T: Scalar> GridPath<T> for ErrorProcess<T> {
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

pub fn error_process<T: Scalar>(driver: &WongZakaiDriver<T>) -> ErrorProcess<T> {
    let values = driver
        .values
        .iter()
        .zip(&driver.source)
        .map(|(g, w)| g.iter().zip(w).map(|(&a, &b)| a - b).collect())
        .collect();
    ErrorProcess {
        grid: driver.grid,
        delta: driver.delta,
        hurst: driver.hurst,
        values,
    }
}

/// `E|Z|^p = 2^{p/2} Γ((p+1)/2) / √π` for a standard normal `Z`.
pub fn gaussian_abs_moment<T: Scalar>(p: T) -> Result<T> {
    if !(p.is_finite() && p >= T::one()) {
        return Err(Error::domain("p", p.as_f64(), "[1, inf)"));
    }
    let two = T::lit(2.0);
    Ok(two.powf(p / two) * gamma((p + T::one()) / two) / T::PI().sqrt())
}

/// Exact `E|G_δ(t) - ω(t)|^p` for one-dimensional fBm:
/// `E|Z|^p · δ^{pH} · Θ(t/δ)^{p/2}`.
pub fn exact_lp_error<T: Scalar>(t: T, delta: T, hurst: HurstParam<T>, p: T) -> Result<T> {
    exact_lp_error_with(t, delta, hurst, p, ThetaMethod::ClosedForm)
}

pub fn exact_lp_error_with<T: Scalar>(
    t: T,
    delta: T,
    hurst: HurstParam<T>,
    p: T,
    method: ThetaMethod,
) -> Result<T> {
    if !(t.is_finite() && t > T::zero()) {
        return Err(Error::domain("t", t.as_f64(), "(0, inf)"));
    }
    if !(delta.is_finite() && delta > T::zero()) {
        return Err(Error::domain("delta", delta.as_f64(), "(0, inf)"));
    }
    let moment = gaussian_abs_moment(p)?;
    let th = theta(t / delta, hurst, method)?;
    let two = T::lit(2.0);
    Ok(moment * delta.powf(p * hurst.value()) * th.powf(p / two))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HurstParam<f64> {
        HurstParam::new(x).unwrap()
    }

    fn deterministic(grid: TimeGrid<f64>, f: impl Fn(f64) -> f64) -> SamplePath<f64> {
        let v = (0..grid.len()).map(|k| f(grid.time(k))).collect();
        SamplePath::new(grid, h(0.5), vec![v], 0, 0).unwrap()
    }

    #[test]
    fn linear_path_is_reproduced_exactly() {
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let base = deterministic(grid.extended(50), |t| 3.0 * t);
        for delta in [0.005, 0.05, 0.25] {
            let d = build_driver(&base, delta, &grid).unwrap();
            for k in 0..grid.len() {
                assert!((d.values()[0][k] - 3.0 * grid.time(k)).abs() < 1e-12);
            }
            let e = error_process(&d);
            assert!(e.values()[0].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn zero_path_gives_zero_driver() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let base = deterministic(grid.extended(5), |_| 0.0);
        let d = build_driver(&base, 0.5, &grid).unwrap();
        assert!(d.values()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_path_against_analytic_integral() {
        // G_δ(t) = t² + δt, so G_{0.5}(1) = 1.5
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let base = deterministic(grid.extended(500), |t| t * t);
        let d = build_driver(&base, 0.5, &grid).unwrap();
        assert_eq!(d.values()[0][0], 0.0);
        // trapezoid error for t² is step²·(length)/6 per integral
        assert!((d.values()[0][1000] - 1.5).abs() < 1e-6);
        for k in (0..=1000).step_by(97) {
            let t = grid.time(k);
            assert!((d.values()[0][k] - (t * t + 0.5 * t)).abs() < 1e-6);
        }
    }

    #[test]
    fn driver_rejects_bad_delta_and_short_base() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let base = deterministic(grid.extended(10), |t| t);
        assert!(matches!(
            build_driver(&base, 0.015, &grid),
            Err(Error::NotGridMultiple { .. })
        ));
        assert!(matches!(
            build_driver(&base, 0.2, &grid),
            Err(Error::PathTooShort { .. })
        ));
        let other = TimeGrid::new(1.0, 50).unwrap();
        assert!(matches!(
            build_driver(&base, 0.1, &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn gaussian_moments() {
        assert!((gaussian_abs_moment(2.0_f64).unwrap() - 1.0).abs() < 1e-14);
        assert!(
            (gaussian_abs_moment(1.0_f64).unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs()
                < 1e-14
        );
        assert!((gaussian_abs_moment(4.0_f64).unwrap() - 3.0).abs() < 1e-13);
        assert!(gaussian_abs_moment(0.5_f64).is_err());
    }

    #[test]
    fn exact_error_in_brownian_regime() {
        for delta in [0.25, 0.125, 0.01] {
            let v = exact_lp_error(1.0, delta, h(0.5), 2.0).unwrap();
            assert!((v - 2.0 / 3.0 * delta).abs() < 1e-13);
        }
        let a = exact_lp_error(1.0, 0.1, h(0.7), 2.0).unwrap();
        let b = 0.1_f64.powf(1.4) * theta(10.0, h(0.7), ThetaMethod::ClosedForm).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(exact_lp_error(0.0, 0.1, h(0.7), 2.0).is_err());
        assert!(exact_lp_error(1.0, 0.0, h(0.7), 2.0).is_err());
    }
}
