//! The function governing the mean-square Wong–Zakai error,
//!
//! ```text
//! Θ(x) = ∫_0^1 ∫_0^1 x^{2H} + 2u^{2H} + |s-u+x|^{2H} - (u+x)^{2H} - |u-x|^{2H} - |u-s|^{2H} ds du
//! ```
//!
//! so that `E|G_δ(t) - ω(t)|^2 = δ^{2H} Θ(t/δ)` for one-dimensional fBm.
//!
//! Integrating each power over the unit square term by term gives, with
//! `a = 2H`, `b = a + 2` and `c = 1/((a+1)(a+2))`,
//!
//! ```text
//! Θ(x) = x^a + 2/(a+1) - 2c + c[(x+1)^b + |x-1|^b - 2x^b]
//!        - [(x+1)^{a+1} - x^{a+1}]/(a+1) - [x^{a+1} + sgn(1-x)|1-x|^{a+1}]/(a+1)
//! ```
//!
//! The big powers cancel almost completely at both ends of `(0, ∞)`, so the
//! closed form is evaluated through `expm1`/`ln_1p` differences near `x = 1`
//! and through its binomial expansion in `1/x` for `x >= 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::HurstParam;
use crate::quadrature;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    Quadrature,
    #[default]
    ClosedForm,
}

impl std::str::FromStr for ThetaMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(ThetaMethod::Quadrature),
            "closed_form" | "closed-form" => Ok(ThetaMethod::ClosedForm),
            other => Err(Error::Config(format!("unknown theta method '{other}'"))),
        }
    }
}

pub fn theta<T: Scalar>(x: T, hurst: HurstParam<T>, method: ThetaMethod) -> Result<T> {
    if !(x.is_finite() && x > T::zero()) {
        return Err(Error::domain("x", x.as_f64(), "(0, inf)"));
    }
    match method {
        ThetaMethod::ClosedForm => Ok(theta_closed_form(x, hurst)),
        ThetaMethod::Quadrature => theta_quadrature(x, hurst),
    }
}

/// `(1+y)^p + (1-y)^p - 2` for `0 < y <= 1` without cancellation.
fn second_difference<T: Scalar>(p: T, y: T) -> T {
    (p * y.ln_1p()).exp_m1() + (p * (-y).ln_1p()).exp_m1()
}

fn theta_closed_form<T: Scalar>(x: T, hurst: HurstParam<T>) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let a = two * hurst.value();
    let a1 = a + one;
    let b = a + two;
    let c = one / (a1 * b);
    if x < one {
        x.powf(a) * (one - two * c * x * x) + c * second_difference(b, x)
            - second_difference(a1, x) / a1
    } else if x >= two {
        large_argument_series(x, a)
    } else {
        let y = one / x;
        let spread = (a1 * y.ln_1p()).exp_m1() - (a1 * (-y).ln_1p()).exp_m1();
        x.powf(a) + two / a1 - two * c + c * x.powf(b) * second_difference(b, y)
            - x.powf(a1) * spread / a1
    }
}

/// Binomial expansion of the closed form in `1/x`. The `x^{2H}` terms cancel
/// exactly, leaving
/// `2/(a+1) - 2c + Σ_{j>=1} [2c C(b, 2j+2) - 2 C(a+1, 2j+1)/(a+1)] x^{a-2j}`.
fn large_argument_series<T: Scalar>(x: T, a: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let a1 = a + one;
    let b = a + two;
    let c = one / (a1 * b);
    let inv_sq = (x * x).recip();
    // C(b, 4) and C(a+1, 3)
    let mut cb = b * (b - one) * (b - two) * (b - T::lit(3.0)) / T::lit(24.0);
    let mut ca = a1 * (a1 - one) * (a1 - two) / T::lit(6.0);
    let mut power = x.powf(a) * inv_sq;
    let mut sum = T::zero();
    for j in 1..200usize {
        let term = (two * c * cb - two * ca / a1) * power;
        sum = sum + term;
        if term.abs() <= T::epsilon() * T::lit(0.01) * sum.abs().max(T::epsilon()) {
            break;
        }
        let k = T::from_count(2 * j + 2);
        cb = cb * (b - k) * (b - k - one) / ((k + one) * (k + two));
        let k = T::from_count(2 * j + 1);
        ca = ca * (a1 - k) * (a1 - k - one) / ((k + one) * (k + two));
        power = power * inv_sq;
    }
    two / a1 - two * c + sum
}

/// Absolute tolerance of the quadrature route, shrunk with `x^{2H}` so the
/// relative accuracy holds near the origin where Θ vanishes.
pub fn quadrature_tolerance<T: Scalar>(x: T, hurst: HurstParam<T>) -> T {
    let scale = x.powf(T::lit(2.0) * hurst.value()).min(T::one());
    (T::lit(1e-10) * scale).max(T::epsilon() * T::lit(100.0))
}

fn theta_quadrature<T: Scalar>(x: T, hurst: HurstParam<T>) -> Result<T> {
    let a = T::lit(2.0) * hurst.value();
    let tol = quadrature_tolerance(x, hurst);
    let inner_tol = tol * T::lit(0.1);
    let xa = x.powf(a);
    let mut inner_failure: Option<Error> = None;

    let outer = |u: T| -> T {
        // Terms that do not depend on s integrate to themselves.
        let flat = xa + T::lit(2.0) * u.powf(a) - (u + x).powf(a) - (u - x).abs().powf(a);
        let kinks = [u, u - x];
        let inner = quadrature::integrate(
            |s: T| (s - u + x).abs().powf(a) - (u - s).abs().powf(a),
            T::zero(),
            T::one(),
            &kinks,
            inner_tol,
        );
        match inner {
            Ok(r) => flat + r.value,
            Err(e) => {
                inner_failure.get_or_insert(e);
                T::nan()
            }
        }
    };
    let result = quadrature::integrate(outer, T::zero(), T::one(), &[x], tol * T::lit(0.5));
    if let Some(e) = inner_failure {
        return Err(e);
    }
    Ok(result?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HurstParam<f64> {
        HurstParam::new(x).unwrap()
    }

    #[test]
    fn rejects_non_positive_argument() {
        assert!(theta(0.0, h(0.5), ThetaMethod::ClosedForm).is_err());
        assert!(theta(-1.0, h(0.5), ThetaMethod::Quadrature).is_err());
    }

    #[test]
    fn brownian_value_beyond_one() {
        for x in [1.0, 1.5, 2.0, 10.0, 1e3] {
            let cf = theta(x, h(0.5), ThetaMethod::ClosedForm).unwrap();
            assert!((cf - 2.0 / 3.0).abs() < 1e-13, "x={x}: {cf}");
            let q = theta(x, h(0.5), ThetaMethod::Quadrature).unwrap();
            assert!((q - 2.0 / 3.0).abs() < 1e-9, "x={x}: {q}");
        }
    }

    // Frozen from a 30-digit mpmath evaluation of the double integral.
    #[test]
    fn matches_high_precision_reference() {
        let cases = [
            (0.25, 0.001, 0.031_623_259_736_150_855_743_580_410),
            (0.25, 2.0, 0.823_378_285_671_376_528_769_064_649),
            (0.5, 0.5, 0.458_333_333_333_333_333_333_333_333),
            (0.75, 0.001, 0.000_031_122_769_467_370_575_546_730_376),
            (0.75, 0.5, 0.214_300_967_456_279_677_018_166_920),
            (0.75, 100.0, 0.552_678_493_301_862_383_768_896_232),
        ];
        for (hh, x, want) in cases {
            for m in [ThetaMethod::ClosedForm, ThetaMethod::Quadrature] {
                let got = theta(x, h(hh), m).unwrap();
                assert!(
                    ((got - want) / want).abs() < 1e-9,
                    "H={hh} x={x} {m:?}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn single_precision_closed_form() {
        let v = theta(2.0_f32, HurstParam::new(0.5_f32).unwrap(), ThetaMethod::ClosedForm).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-5);
    }
}
