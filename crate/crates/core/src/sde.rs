//! Euler scheme for `du = f(t, u) dt + σ(t, u) dw` driven by a gridded signal
//! `w`, which is either an fBm path or one of its Wong–Zakai smoothings.
//!
//! For `H > 1/2` the Young/GLS integral coincides with the limit of the
//! left-point sums, so the plain Euler step converges pathwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{GridPath, SamplePath, TimeGrid};
use crate::norms::{vector_norm_1_1mb, vector_norm_beta_inf, BesovExponent};
use crate::scalar::Scalar;
use crate::wong_zakai::WongZakaiDriver;

/// Drift and diffusion of an `n`-dimensional equation with `m` noise
/// components. Implementations must be re-entrant; solves run in parallel.
pub trait Coefficients<T>: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn drift(&self, t: T, x: &[T], out: &mut [T]);
    /// Row-major `n × m` matrix.
    fn diffusion(&self, t: T, x: &[T], out: &mut [T]);
}

/// Constants of the standing assumptions on `f` and `σ`. They are declared by
/// the caller and carried along; nothing here checks them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientConditions {
    /// Lipschitz constant of `σ` in space and time.
    pub m: f64,
    /// Growth constant in `|σ(t,x)| <= K0 (1 + |x|^ζ)`.
    pub k0: f64,
    pub zeta: f64,
    /// Linear growth constant of the drift.
    pub l0: f64,
    /// Integrability exponent of `b0`.
    pub rho: f64,
    /// Declared bound on `b0` in `L^ρ`.
    pub b0_bound: f64,
}

pub struct SdeProblem<T> {
    coefficients: Box<dyn Coefficients<T>>,
    x0: Vec<T>,
    conditions: Option<CoefficientConditions>,
}

impl<T: Scalar> SdeProblem<T> {
    pub fn new(coefficients: Box<dyn Coefficients<T>>, x0: Vec<T>) -> Result<Self> {
        if x0.len() != coefficients.state_dim() {
            return Err(Error::Config(format!(
                "initial state has {} entries, equation has dimension {}",
                x0.len(),
                coefficients.state_dim()
            )));
        }
        if coefficients.noise_dim() == 0 {
            return Err(Error::Config("noise dimension must be positive".into()));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial state is not finite".into()));
        }
        Ok(SdeProblem {
            coefficients,
            x0,
            conditions: None,
        })
    }

    pub fn with_conditions(mut self, conditions: CoefficientConditions) -> Self {
        self.conditions = Some(conditions);
        self
    }

    pub fn x0(&self) -> &[T] {
        &self.x0
    }

    pub fn state_dim(&self) -> usize {
        self.coefficients.state_dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.coefficients.noise_dim()
    }

    pub fn conditions(&self) -> Option<&CoefficientConditions> {
        self.conditions.as_ref()
    }
}

/// Which signal drove a solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriverId {
    Raw { seed: u64, replicate: u64 },
    WongZakai { seed: u64, replicate: u64, delta: f64 },
    External,
}

/// A gridded signal that can drive the Euler scheme.
pub trait Driver<T: Scalar>: GridPath<T> {
    fn driver_id(&self) -> DriverId;
}

impl<T: Scalar> Driver<T> for SamplePath<T> {
    fn driver_id(&self) -> DriverId {
        DriverId::Raw {
            seed: self.seed(),
            replicate: self.replicate(),
        }
    }
}

impl<T: Scalar> Driver<T> for WongZakaiDriver<T> {
    fn driver_id(&self) -> DriverId {
        let (seed, replicate) = self.source_id();
        DriverId::WongZakai {
            seed,
            replicate,
            delta: self.delta().as_f64(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPath<T> {
    grid: TimeGrid<T>,
    /// `n` components, each with one value per grid point.
    values: Vec<Vec<T>>,
    driver: DriverId,
}

impl<T: Scalar> SolutionPath<T> {
    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn driver_id(&self) -> DriverId {
        self.driver
    }

    /// State vector at grid index `k`.
    pub fn state(&self, k: usize) -> Vec<T> {
        self.values.iter().map(|c| c[k]).collect()
    }
}

impl<T: Scalar> GridPath<T> for SolutionPath<T> {
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

/// Solves on `grid` using the first `grid.len()` points of `driver`.
pub fn solve_euler<T: Scalar, D: Driver<T> + ?Sized>(
    problem: &SdeProblem<T>,
    driver: &D,
    grid: &TimeGrid<T>,
) -> Result<SolutionPath<T>> {
    let values = euler_segment(problem, problem.x0(), driver, 0, grid.steps(), grid)?;
    Ok(SolutionPath {
        grid: *grid,
        values,
        driver: driver.driver_id(),
    })
}

/// Runs the scheme from `start` at grid index `from` to index `to`, returning
/// the states at indices `from..=to` component by component.
pub fn euler_segment<T: Scalar, D: GridPath<T> + ?Sized>(
    problem: &SdeProblem<T>,
    start: &[T],
    driver: &D,
    from: usize,
    to: usize,
    grid: &TimeGrid<T>,
) -> Result<Vec<Vec<T>>> {
    let coef = &problem.coefficients;
    let (n, m) = (coef.state_dim(), coef.noise_dim());
    if start.len() != n {
        return Err(Error::Config(format!(
            "start state has {} entries, equation has dimension {n}",
            start.len()
        )));
    }
    if driver.dims() != m {
        return Err(Error::GridMismatch(format!(
            "driver has {} components, equation expects {m}",
            driver.dims()
        )));
    }
    if !grid.same_step(driver.grid()) {
        return Err(Error::GridMismatch(format!(
            "solver step {} differs from driver step {}",
            grid.step(),
            driver.grid().step()
        )));
    }
    if from > to || to > grid.steps() || to > driver.grid().steps() {
        return Err(Error::Grid(format!(
            "segment {from}..={to} outside a grid of {} steps (driver {})",
            grid.steps(),
            driver.grid().steps()
        )));
    }

    let step = grid.step();
    let noise: Vec<&[T]> = (0..m).map(|j| driver.component(j)).collect();
    let mut out: Vec<Vec<T>> = (0..n)
        .map(|_| Vec::with_capacity(to - from + 1))
        .collect();
    let mut x = start.to_vec();
    let mut drift = vec![T::zero(); n];
    let mut sigma = vec![T::zero(); n * m];
    let mut dw = vec![T::zero(); m];
    for (c, &v) in out.iter_mut().zip(&x) {
        c.push(v);
    }
    for k in from..to {
        let t = grid.time(k);
        coef.drift(t, &x, &mut drift);
        coef.diffusion(t, &x, &mut sigma);
        for (j, w) in noise.iter().enumerate() {
            dw[j] = w[k + 1] - w[k];
        }
        for i in 0..n {
            let row = &sigma[i * m..(i + 1) * m];
            let kick = row.iter().zip(&dw).fold(T::zero(), |s, (&a, &b)| s + a * b);
            x[i] = x[i] + drift[i] * step + kick;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: k + 1 });
        }
        for (c, &v) in out.iter_mut().zip(&x) {
            c.push(v);
        }
    }
    Ok(out)
}

/// Exponent of the a priori growth bound `‖u‖_{β,∞} <= C1 exp(C2 ‖ω‖^κ_{1,1-β})`.
pub fn kappa<T: Scalar>(zeta: T, beta: BesovExponent<T>) -> Result<T> {
    if !(zeta.is_finite() && zeta >= T::zero() && zeta <= T::one()) {
        return Err(Error::domain("zeta", zeta.as_f64(), "[0, 1]"));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let b = beta.value();
    let threshold = (one - two * b) / (one - b);
    // the threshold is rarely representable exactly
    let slack = T::epsilon() * T::lit(16.0);
    Ok(if zeta == one {
        one / (one - two * b)
    } else if zeta >= threshold - slack {
        zeta / (two - two * b)
    } else {
        one / (one - b)
    })
}

/// `‖u_δ - u‖_{β,∞}`, the largest over state components.
pub fn solution_error<T: Scalar>(
    u_delta: &SolutionPath<T>,
    u: &SolutionPath<T>,
    beta: BesovExponent<T>,
) -> Result<T> {
    if u_delta.grid != u.grid || u_delta.values.len() != u.values.len() {
        return Err(Error::GridMismatch(
            "solutions live on different grids or dimensions".into(),
        ));
    }
    let diff: Vec<Vec<T>> = u_delta
        .values
        .iter()
        .zip(&u.values)
        .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
        .collect();
    vector_norm_beta_inf(&diff, u.grid.step(), beta)
}

/// Quantities entering the a priori bound for one solve. `log_shape` is
/// `‖ω‖^κ_{1,1-β}`, the logarithm of the bound with both constants set to
/// one; the exponential itself overflows for typical paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AprioriDiagnostic {
    pub solution_norm: f64,
    pub driver_norm: f64,
    pub kappa: f64,
    pub log_shape: f64,
}

pub fn apriori_diagnostic<T: Scalar, D: GridPath<T> + ?Sized>(
    solution: &SolutionPath<T>,
    driver: &D,
    zeta: T,
    beta: BesovExponent<T>,
) -> Result<AprioriDiagnostic> {
    let step = solution.grid.step();
    let len = solution.grid.len();
    let comps: Vec<&[T]> = (0..driver.dims())
        .map(|j| &driver.component(j)[..len])
        .collect();
    let driver_norm = vector_norm_1_1mb(&comps, step, beta)?.as_f64();
    let k = kappa(zeta, beta)?.as_f64();
    Ok(AprioriDiagnostic {
        solution_norm: vector_norm_beta_inf(&solution.values, step, beta)?.as_f64(),
        driver_norm,
        kappa: k,
        log_shape: driver_norm.powf(k),
    })
}

/// Coefficients given by closures.
pub struct FnCoefficients<F, G> {
    pub state_dim: usize,
    pub noise_dim: usize,
    pub drift: F,
    pub diffusion: G,
}

impl<T, F, G> Coefficients<T> for FnCoefficients<F, G>
where
    F: Fn(T, &[T], &mut [T]) + Send + Sync,
    G: Fn(T, &[T], &mut [T]) + Send + Sync,
{
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    fn drift(&self, t: T, x: &[T], out: &mut [T]) {
        (self.drift)(t, x, out)
    }
    fn diffusion(&self, t: T, x: &[T], out: &mut [T]) {
        (self.diffusion)(t, x, out)
    }
}

/// Built-in diagonal test equations in `d` dimensions with `d` noises.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BuiltinProblem {
    /// `du = u dw`, solved by `exp(w)` started at one.
    Linear,
    /// `du = dw`.
    Additive,
    /// Fractional Ornstein–Uhlenbeck, `du = -λ u dt + σ0 dw`.
    Fou { lambda: f64, sigma0: f64 },
}

impl std::str::FromStr for BuiltinProblem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(BuiltinProblem::Linear),
            "additive" => Ok(BuiltinProblem::Additive),
            "fou" => Ok(BuiltinProblem::Fou {
                lambda: 1.0,
                sigma0: 1.0,
            }),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

struct Diagonal<T> {
    dims: usize,
    lambda: T,
    sigma0: T,
    multiplicative: bool,
}

impl<T: Scalar> Coefficients<T> for Diagonal<T> {
    fn state_dim(&self) -> usize {
        self.dims
    }
    fn noise_dim(&self) -> usize {
        self.dims
    }
    fn drift(&self, _t: T, x: &[T], out: &mut [T]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = -self.lambda * v;
        }
    }
    fn diffusion(&self, _t: T, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.dims {
            out[i * self.dims + i] = if self.multiplicative {
                x[i]
            } else {
                self.sigma0
            };
        }
    }
}

impl BuiltinProblem {
    /// Every component starts at one.
    pub fn build<T: Scalar>(&self, dims: usize) -> Result<SdeProblem<T>> {
        if dims == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        let (lambda, sigma0, multiplicative, conditions) = match *self {
            BuiltinProblem::Linear => (0.0, 1.0, true, conditions(1.0, 1.0, 1.0, 0.0)),
            BuiltinProblem::Additive => (0.0, 1.0, false, conditions(1.0, 1.0, 0.0, 0.0)),
            BuiltinProblem::Fou { lambda, sigma0 } => {
                if !(lambda.is_finite() && sigma0.is_finite()) {
                    return Err(Error::Config("fou parameters must be finite".into()));
                }
                (lambda, sigma0, false, conditions(1.0, sigma0.abs(), 0.0, lambda.abs()))
            }
        };
        let coefficients = Diagonal {
            dims,
            lambda: T::lit(lambda),
            sigma0: T::lit(sigma0),
            multiplicative,
        };
        Ok(SdeProblem::new(Box::new(coefficients), vec![T::one(); dims])?.with_conditions(conditions))
    }
}

fn conditions(m: f64, k0: f64, zeta: f64, l0: f64) -> CoefficientConditions {
    CoefficientConditions {
        m,
        k0,
        zeta,
        l0,
        // b0 vanishes, so any ρ > 2 qualifies
        rho: 10.0,
        b0_bound: 0.0,
    }
}
