//! Product-integration weights for weakly and strongly singular kernels.
//!
//! For a kernel `y^{-γ}` centred on a grid node and a function `g` sampled at
//! the nodes `y_m = m h`, replacing `g` by its piecewise-linear interpolant
//! and integrating each cell exactly gives
//!
//! ```text
//! ∫_0^{Mh} g(y) y^{-γ} dy ≈ Σ_{m<M} near[m] g_m + far[m] g_{m+1}
//! near[m] = h^{1-γ} ∫_0^1 (1-θ)(m+θ)^{-γ} dθ
//! far[m]  = h^{1-γ} ∫_0^1 θ (m+θ)^{-γ} dθ
//! ```
//!
//! For `1 <= γ < 2` the near weight of the first cell diverges; it is only
//! ever applied to a node where `g` vanishes, and is reported as infinite.
//! The rule is exact whenever `g` is linear.

use crate::scalar::Scalar;

// 8-point Gauss–Legendre on [0, 1].
const GL_NODES: [f64; 8] = [
    0.019_855_071_751_231_912,
    0.101_666_761_293_186_64,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_824_8,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_1,
];
const GL_WEIGHTS: [f64; 8] = [
    0.050_614_268_145_188_344,
    0.111_190_517_226_687_17,
    0.156_853_322_938_943_52,
    0.181_341_891_689_180_88,
    0.181_341_891_689_180_88,
    0.156_853_322_938_943_52,
    0.111_190_517_226_687_17,
    0.050_614_268_145_188_344,
];

// Below this distance the closed form has little cancellation; above it the
// integrand is smooth enough for Gauss–Legendre to be exact to rounding.
const CLOSED_FORM_CELLS: usize = 8;

#[derive(Clone, Debug)]
pub(crate) struct SingularWeights<T> {
    near: Vec<T>,
    far: Vec<T>,
}

/// `((1+1/m)^z - 1) / z · m^z`, i.e. `∫_m^{m+1} y^{z-1} dy`, stable as `z → 0`.
fn power_step<T: Scalar>(m: T, z: T) -> T {
    let l = m.recip().ln_1p();
    let ratio = if z == T::zero() {
        l
    } else {
        (z * l).exp_m1() / z
    };
    m.powf(z) * ratio
}

impl<T: Scalar> SingularWeights<T> {
    /// Weights for cells `0..cells` of width `step`, kernel exponent `gamma < 2`.
    pub(crate) fn new(step: T, gamma: T, cells: usize) -> Self {
        let one = T::one();
        let two = T::lit(2.0);
        debug_assert!(gamma < two);
        let scale = step.powf(one - gamma);
        let mut near = Vec::with_capacity(cells);
        let mut far = Vec::with_capacity(cells);
        for m in 0..cells {
            let (a, b) = if m == 0 {
                let b = one / (two - gamma);
                let a = if gamma < one {
                    one / (one - gamma) - b
                } else {
                    T::infinity()
                };
                (a, b)
            } else if m < CLOSED_FORM_CELLS {
                let mf = T::from_count(m);
                // ∫ (m+θ)^{-γ} and ∫ θ (m+θ)^{-γ}
                let p1 = power_step(mf, one - gamma);
                let p2 = power_step(mf, two - gamma) - mf * p1;
                (p1 - p2, p2)
            } else {
                let mf = T::from_count(m);
                GL_NODES
                    .iter()
                    .zip(GL_WEIGHTS.iter())
                    .fold((T::zero(), T::zero()), |(a, b), (&x, &w)| {
                        let x = T::lit(x);
                        let k = T::lit(w) * (mf + x).powf(-gamma);
                        (a + (one - x) * k, b + x * k)
                    })
            };
            near.push(scale * a);
            far.push(scale * b);
        }
        SingularWeights { near, far }
    }

    #[inline]
    pub(crate) fn near(&self, m: usize) -> T {
        self.near[m]
    }

    #[inline]
    pub(crate) fn far(&self, m: usize) -> T {
        self.far[m]
    }

    /// Weight of a node at distance `m >= 1` that is not the last node.
    #[inline]
    pub(crate) fn interior(&self, m: usize) -> T {
        self.near[m] + self.far[m - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    #[test]
    fn weights_match_direct_quadrature() {
        let h = 0.01_f64;
        for gamma in [0.3, 1.2, 1.6, 1.9] {
            let w = SingularWeights::new(h, gamma, 20);
            for m in [1usize, 3, 7, 8, 15, 19] {
                let a = m as f64 * h;
                let b = a + h;
                let near = quadrature::integrate(|y: f64| (b - y) / h * y.powf(-gamma), a, b, &[], 1e-14)
                    .unwrap()
                    .value;
                let far = quadrature::integrate(|y: f64| (y - a) / h * y.powf(-gamma), a, b, &[], 1e-14)
                    .unwrap()
                    .value;
                assert!(((w.near(m) - near) / near).abs() < 1e-11, "γ={gamma} m={m}");
                assert!(((w.far(m) - far) / far).abs() < 1e-11, "γ={gamma} m={m}");
            }
        }
    }

    #[test]
    fn linear_function_is_integrated_exactly() {
        // ∫_0^1 y · y^{-1.5} dy = 2
        let n = 64;
        let h = 1.0 / n as f64;
        let w = SingularWeights::new(h, 1.5, n);
        let g = |m: usize| m as f64 * h;
        let total: f64 = (0..n).map(|m| if m == 0 { 0.0 } else { w.near(m) * g(m) } + w.far(m) * g(m + 1)).sum();
        assert!((total - 2.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn first_cell_near_weight() {
        let w = SingularWeights::new(0.5_f64, 0.5, 2);
        // h^{1/2} (1/(1/2) - 1/(3/2))
        assert!((w.near(0) - 0.5_f64.sqrt() * (2.0 - 2.0 / 3.0)).abs() < 1e-15);
        assert!(SingularWeights::new(0.5_f64, 1.5, 2).near(0).is_infinite());
    }
}
