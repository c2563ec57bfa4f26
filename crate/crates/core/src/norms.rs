//! Discrete estimators of the Besov-type norms on gridded paths.
//!
//! ```text
//! ‖f‖_{1,1-β} = sup_{s<t} [ |f(t)-f(s)|/(t-s)^{1-β} + ∫_s^t |f(y)-f(s)|/(y-s)^{2-β} dy ]
//! ‖f‖_{β,∞}   = sup_t [ |f(t)| + ∫_0^t |f(t)-f(s)|/(t-s)^{1+β} ds ]
//! ‖f‖_{2,β}   = ∫_0^T |f(s)|/s^β ds + ∫_0^T ∫_0^t |f(t)-f(s)|/(t-s)^{1+β} ds dt
//! ```
//!
//! Suprema run over grid points. The singular inner integrals use
//! product integration: the absolute increments are interpolated linearly
//! between nodes and integrated exactly against the kernel, which keeps the
//! cell adjacent to the singularity and is exact for linear `f`. The
//! `(s, t)` sup is `O(n^2)`: for each `s` the inner integral is accumulated
//! as `t` moves right.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::SingularWeights;
use crate::scalar::{pairwise_sum, Scalar};

/// Besov exponent `β ∈ (0, 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct BesovExponent<T>(T);

impl<T: Scalar> BesovExponent<T> {
    pub fn new(beta: T) -> Result<Self> {
        if beta.is_finite() && beta > T::zero() && beta < T::lit(0.5) {
            Ok(BesovExponent(beta))
        } else {
            Err(Error::domain("beta", beta.as_f64(), "(0, 1/2)"))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovReport<T> {
    pub norm_1_1mb: T,
    pub norm_beta_inf: T,
    pub norm_2_beta: T,
    pub holder: T,
    pub beta: BesovExponent<T>,
    /// Hölder order used for `holder`.
    pub alpha: T,
}

fn check_input<T: Scalar>(f: &[T], step: T) -> Result<()> {
    if f.len() < 2 {
        return Err(Error::Grid(format!(
            "need at least 2 grid points, got {}",
            f.len()
        )));
    }
    if !(step.is_finite() && step > T::zero()) {
        return Err(Error::domain("step", step.as_f64(), "(0, inf)"));
    }
    Ok(())
}

/// `(d h)^{-exponent}` for `d = 0..=n` (entry 0 unused).
fn inverse_lag_powers<T: Scalar>(step: T, exponent: T, n: usize) -> Vec<T> {
    (0..=n)
        .map(|d| (step * T::from_count(d)).powf(-exponent))
        .collect()
}

fn par_max<T: Scalar, F: Fn(usize) -> T + Sync + Send>(range: std::ops::Range<usize>, f: F) -> T {
    range
        .into_par_iter()
        .map(f)
        .reduce(T::zero, |a, b| a.max(b))
}

pub fn norm_1_1mb<T: Scalar>(f: &[T], step: T, beta: BesovExponent<T>) -> Result<T> {
    check_input(f, step)?;
    let n = f.len() - 1;
    let one = T::one();
    let b = beta.value();
    let quotient = inverse_lag_powers(step, one - b, n);
    let w = SingularWeights::new(step, T::lit(2.0) - b, n);
    let interior: Vec<T> = (0..n)
        .map(|d| if d == 0 { T::zero() } else { w.interior(d) })
        .collect();
    let last: Vec<T> = (0..n).map(|d| w.far(d)).collect();

    Ok(par_max(0..n, |i| {
        let fs = f[i];
        let mut inner = T::zero();
        let mut best = T::zero();
        for (d, &ft) in f[i + 1..].iter().enumerate().map(|(k, v)| (k + 1, v)) {
            let g = (ft - fs).abs();
            let value = g * quotient[d] + inner + last[d - 1] * g;
            best = best.max(value);
            if d < n {
                inner = inner + interior[d] * g;
            }
        }
        best
    }))
}

/// `∫_0^{t_j} |f(t_j) - f(s)| / (t_j - s)^{1+β} ds` for every node `j`.
fn left_singular_integrals<T: Scalar>(f: &[T], w: &SingularWeights<T>) -> Vec<T> {
    let n = f.len() - 1;
    (0..=n)
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                return T::zero();
            }
            let ft = f[j];
            let mut acc = w.far(j - 1) * (ft - f[0]).abs();
            for d in 1..j {
                acc = acc + w.interior(d) * (ft - f[j - d]).abs();
            }
            acc
        })
        .collect()
}

pub fn norm_beta_inf<T: Scalar>(f: &[T], step: T, beta: BesovExponent<T>) -> Result<T> {
    check_input(f, step)?;
    let n = f.len() - 1;
    let w = SingularWeights::new(step, T::one() + beta.value(), n);
    let inner = left_singular_integrals(f, &w);
    Ok(f.iter()
        .zip(&inner)
        .fold(T::zero(), |m, (&v, &i)| m.max(v.abs() + i)))
}

pub fn norm_2_beta<T: Scalar>(f: &[T], step: T, beta: BesovExponent<T>) -> Result<T> {
    check_input(f, step)?;
    let n = f.len() - 1;
    let b = beta.value();

    let origin = SingularWeights::new(step, b, n);
    let first_terms: Vec<T> = (0..n)
        .map(|m| origin.near(m) * f[m].abs() + origin.far(m) * f[m + 1].abs())
        .collect();
    let first = pairwise_sum(&first_terms);

    let w = SingularWeights::new(step, T::one() + b, n);
    let mut inner = left_singular_integrals(f, &w);
    let half = T::lit(0.5);
    inner[0] = inner[0] * half;
    inner[n] = inner[n] * half;
    let second = step * pairwise_sum(&inner);
    Ok(first + second)
}

/// `max_{i<j} |f_j - f_i| / (t_j - t_i)^α`.
pub fn holder_norm<T: Scalar>(f: &[T], step: T, alpha: T) -> Result<T> {
    check_input(f, step)?;
    if !(alpha.is_finite() && alpha > T::zero() && alpha < T::one()) {
        return Err(Error::domain("alpha", alpha.as_f64(), "(0, 1)"));
    }
    let n = f.len() - 1;
    let quotient = inverse_lag_powers(step, alpha, n);
    Ok(par_max(0..n, |i| {
        let fs = f[i];
        f[i + 1..]
            .iter()
            .enumerate()
            .fold(T::zero(), |m, (k, &ft)| m.max((ft - fs).abs() * quotient[k + 1]))
    }))
}

/// Maximum of the component `‖·‖_{β,∞}` norms.
pub fn vector_norm_beta_inf<T: Scalar, C: AsRef<[T]>>(
    components: &[C],
    step: T,
    beta: BesovExponent<T>,
) -> Result<T> {
    max_over(components, |c| norm_beta_inf(c, step, beta))
}

/// Maximum of the component `‖·‖_{1,1-β}` norms.
pub fn vector_norm_1_1mb<T: Scalar, C: AsRef<[T]>>(
    components: &[C],
    step: T,
    beta: BesovExponent<T>,
) -> Result<T> {
    max_over(components, |c| norm_1_1mb(c, step, beta))
}

fn max_over<T: Scalar, C: AsRef<[T]>>(
    components: &[C],
    norm: impl Fn(&[T]) -> Result<T>,
) -> Result<T> {
    if components.is_empty() {
        return Err(Error::Empty("components"));
    }
    components
        .iter()
        .try_fold(T::zero(), |m, c| Ok(m.max(norm(c.as_ref())?)))
}

pub fn besov_report<T: Scalar>(
    f: &[T],
    step: T,
    beta: BesovExponent<T>,
    alpha: T,
) -> Result<BesovReport<T>> {
    Ok(BesovReport {
        norm_1_1mb: norm_1_1mb(f, step, beta)?,
        norm_beta_inf: norm_beta_inf(f, step, beta)?,
        norm_2_beta: norm_2_beta(f, step, beta)?,
        holder: holder_norm(f, step, alpha)?,
        beta,
        alpha,
    })
}
