//! Pathwise integrals of gridded signals: left-point Young sums and the
//! fractional-derivative representation
//!
//! ```text
//! ∫_a^b f dg = -∫_a^b D^α_{a+}(f - f(a))(t) · D̃^{1-α}_{b-}(g - g(b))(t) dt + f(a)(g(b) - g(a))
//! ```
//!
//! where `D̃` is the right-sided Weyl–Marchaud derivative written without its
//! `(-1)^{1-α}` factor. The sign in front absorbs `(-1)^α (-1)^{1-α}`.
//! Singular integrals use the same product-integration weights as the norms.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::SingularWeights;
use crate::scalar::{gamma, pairwise_sum, Scalar};

/// Running left-point sums `Σ_{i<k} f(t_i)(g(t_{i+1}) - g(t_i))`.
pub fn young_integral<T: Scalar>(f: &[T], g: &[T]) -> Result<Vec<T>> {
    check_pair(f, g)?;
    let mut out = Vec::with_capacity(f.len());
    let mut acc = T::zero();
    out.push(acc);
    for (fi, w) in f.iter().zip(g.windows(2)) {
        acc = acc + *fi * (w[1] - w[0]);
        out.push(acc);
    }
    Ok(out)
}

fn check_pair<T>(f: &[T], g: &[T]) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::GridMismatch(format!(
            "integrand has {} points, integrator {}",
            f.len(),
            g.len()
        )));
    }
    if f.len() < 2 {
        return Err(Error::Grid(format!(
            "need at least 2 grid points, got {}",
            f.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `D^α_{a+}`, singular integral over `[a, t]`.
    Left,
    /// `D̃^α_{b-}`, singular integral over `[t, b]`.
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FracDerivative<T> {
    pub alpha: T,
    pub side: Side,
    pub step: T,
    /// One value per grid point of the input.
    pub values: Vec<T>,
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha.is_finite() && alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::domain("alpha", alpha.as_f64(), "(0, 1)"))
    }
}

/// Weyl–Marchaud derivative of order `alpha` on the whole grid, with `a` the
/// first and `b` the last grid point.
///
/// At the base point itself the value is the limit `0` when `f` vanishes
/// there and infinite otherwise.
pub fn weyl_marchaud<T: Scalar>(f: &[T], step: T, alpha: T, side: Side) -> Result<FracDerivative<T>> {
    check_alpha(alpha)?;
    if f.len() < 2 {
        return Err(Error::Grid(format!(
            "need at least 2 grid points, got {}",
            f.len()
        )));
    }
    if !(step.is_finite() && step > T::zero()) {
        return Err(Error::domain("step", step.as_f64(), "(0, inf)"));
    }
    let oriented: Vec<T> = match side {
        Side::Left => f.to_vec(),
        Side::Right => f.iter().rev().copied().collect(),
    };
    let mut values = left_derivative(&oriented, step, alpha);
    if side == Side::Right {
        values.reverse();
    }
    Ok(FracDerivative {
        alpha,
        side,
        step,
        values,
    })
}

fn left_derivative<T: Scalar>(f: &[T], step: T, alpha: T) -> Vec<T> {
    let n = f.len() - 1;
    let w = SingularWeights::new(step, T::one() + alpha, n);
    let scale = gamma(T::one() - alpha).recip();
    (0..=n)
        .into_par_iter()
        .map(|j| {
            let fj = f[j];
            if j == 0 {
                return if fj == T::zero() {
                    T::zero()
                } else {
                    fj.signum() * T::infinity()
                };
            }
            let mut acc = w.far(j - 1) * (fj - f[0]);
            for d in 1..j {
                acc = acc + w.interior(d) * (fj - f[j - d]);
            }
            let t = step * T::from_count(j);
            scale * (fj / t.powf(alpha) + alpha * acc)
        })
        .collect()
}

/// Generalised Lebesgue–Stieltjes integral `∫_0^T f dg` over the whole grid.
/// The outer integral uses the trapezoid rule.
pub fn gls_integral<T: Scalar>(f: &[T], g: &[T], step: T, alpha: T) -> Result<T> {
    check_pair(f, g)?;
    check_alpha(alpha)?;
    let f0 = f[0];
    let gn = *g.last().expect("checked length");
    let fc: Vec<T> = f.iter().map(|&v| v - f0).collect();
    let gc: Vec<T> = g.iter().map(|&v| v - gn).collect();
    let df = weyl_marchaud(&fc, step, alpha, Side::Left)?;
    let dg = weyl_marchaud(&gc, step, T::one() - alpha, Side::Right)?;
    let n = f.len() - 1;
    let half = T::lit(0.5);
    let products: Vec<T> = (0..=n)
        .map(|j| {
            let p = df.values[j] * dg.values[j];
            if j == 0 || j == n {
                half * p
            } else {
                p
            }
        })
        .collect();
    Ok(-step * pairwise_sum(&products) + f0 * (gn - g[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{FbmSampler, HurstParam, SamplerMethod, TimeGrid};
    use crate::norms::{norm_1_1mb, norm_2_beta, norm_beta_inf, BesovExponent};

    fn sampled(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let h = 1.0 / n as f64;
        ((0..=n).map(|k| f(k as f64 * h)).collect(), h)
    }

    fn fbm_pairs(n: usize, hurst: f64, count: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let grid = TimeGrid::new(1.0, n).unwrap();
        let sampler =
            FbmSampler::new(grid, HurstParam::new(hurst).unwrap(), SamplerMethod::Auto).unwrap();
        sampler
            .sample_batch(2, 41, 0..count)
            .into_iter()
            .map(|p| (p.component(0).to_vec(), p.component(1).to_vec()))
            .collect()
    }

    #[test]
    fn young_with_unit_integrand_telescopes() {
        let (g, _) = sampled(50, |t| (3.0 * t).sin());
        let one = vec![1.0; g.len()];
        let y = young_integral(&one, &g).unwrap();
        for k in 0..g.len() {
            assert!((y[k] - (g[k] - g[0])).abs() < 1e-14);
        }
    }

    #[test]
    fn young_polynomial_pair() {
        for n in [100, 1000] {
            let (f, _) = sampled(n, |t| t);
            let (g, _) = sampled(n, |t| t * t);
            let v = *young_integral(&f, &g).unwrap().last().unwrap();
            assert!((v - 2.0 / 3.0).abs() < 2.0 / n as f64);
        }
        // f = g: ∫ g dg = g²/2
        let (g, h) = sampled(2000, |t| t.exp());
        let v = *young_integral(&g, &g).unwrap().last().unwrap();
        let want = (1f64.exp().powi(2) - 1.0) / 2.0;
        assert!((v - want).abs() < 10.0 * h);
    }

    #[test]
    fn young_is_additive_over_intervals() {
        let (f, _) = sampled(300, |t| (5.0 * t).cos());
        let (g, _) = sampled(300, |t| t.sqrt());
        let whole = young_integral(&f, &g).unwrap();
        for s in [0, 1, 77, 150, 299] {
            let tail = young_integral(&f[s..], &g[s..]).unwrap();
            assert!((whole[s] + tail.last().unwrap() - whole[300]).abs() < 1e-13);
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(matches!(
            young_integral(&[0.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(Error::GridMismatch(_))
        ));
        assert!(gls_integral(&[0.0, 1.0], &[0.0], 0.5, 0.5).is_err());
        assert!(weyl_marchaud(&[0.0, 1.0], 0.5, 1.0, Side::Left).is_err());
    }

    #[test]
    fn derivative_of_constant() {
        let alpha = 0.3;
        let (f, h) = sampled(64, |_| 2.5);
        let d = weyl_marchaud(&f, h, alpha, Side::Left).unwrap();
        assert!(d.values[0].is_infinite());
        for j in 1..f.len() {
            let t = j as f64 * h;
            let want = 2.5 / (gamma(1.0 - alpha) * t.powf(alpha));
            assert!((d.values[j] - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn fractional_power_rule() {
        // D^α t = t^{1-α}/Γ(2-α), exact for the linear interpolant
        for alpha in [0.2, 0.5, 0.8] {
            let (f, h) = sampled(128, |t| t);
            let d = weyl_marchaud(&f, h, alpha, Side::Left).unwrap();
            assert_eq!(d.values[0], 0.0);
            for j in [1, 5, 64, 128] {
                let t = j as f64 * h;
                let want = t.powf(1.0 - alpha) / gamma(2.0 - alpha);
                assert!((d.values[j] - want).abs() < 1e-11, "α={alpha} j={j}");
            }
        }
    }

    #[test]
    fn right_derivative_mirrors_left() {
        let (f, h) = sampled(40, |t| (1.0 - t).powi(2));
        let rev: Vec<f64> = f.iter().rev().copied().collect();
        let r = weyl_marchaud(&f, h, 0.4, Side::Right).unwrap();
        let l = weyl_marchaud(&rev, h, 0.4, Side::Left).unwrap();
        for j in 0..f.len() {
            assert_eq!(r.values[j], l.values[f.len() - 1 - j]);
        }
    }

    #[test]
    fn gls_unit_integrand() {
        let (g, h) = sampled(200, |t| (2.0 * t).sin() + t);
        let one = vec![1.0; g.len()];
        for alpha in [0.2, 0.5, 0.7] {
            let v = gls_integral(&one, &g, h, alpha).unwrap();
            assert!((v - (g[200] - g[0])).abs() < 1e-14);
        }
    }

    #[test]
    fn gls_polynomial_pair_and_alpha_independence() {
        let (f, h) = sampled(1 << 12, |t| t);
        let (g, _) = sampled(1 << 12, |t| t * t);
        let values: Vec<f64> = [0.3, 0.5, 0.7]
            .iter()
            .map(|&a| gls_integral(&f, &g, h, a).unwrap())
            .collect();
        for v in &values {
            assert!((v - 2.0 / 3.0).abs() < 1e-3, "{v}");
        }
        assert!((values[0] - values[2]).abs() < 1e-3);
    }

    #[test]
    fn gls_agrees_with_young_on_fbm() {
        for (f, g) in fbm_pairs(1 << 10, 0.75, 4) {
            let h = 1.0 / 1024.0;
            let y = *young_integral(&f, &g).unwrap().last().unwrap();
            let z = gls_integral(&f, &g, h, 0.5).unwrap();
            let scale = y.abs().max(0.1);
            assert!((y - z).abs() < 2e-2 * scale, "young {y} gls {z}");
        }
    }

    #[test]
    fn integral_bounds_on_fbm() {
        let beta = BesovExponent::new(0.4).unwrap();
        let constant = 1.0 / (gamma(0.6_f64) * gamma(0.4_f64));
        let h = 1.0 / 512.0;
        let mut worst = 0.0_f64;
        for (f, g) in fbm_pairs(512, 0.75, 20) {
            let integral = young_integral(&f, &g).unwrap()[512].abs();
            let ng = norm_1_1mb(&g, h, beta).unwrap();
            let hol = constant * ng * norm_beta_inf(&f, h, beta).unwrap();
            assert!(integral <= 1.01 * hol, "{integral} > {hol}");
            worst = worst.max(integral / (ng * norm_2_beta(&f, h, beta).unwrap()));
        }
        assert!(worst.is_finite() && worst < 1.0, "{worst}");
    }
}
