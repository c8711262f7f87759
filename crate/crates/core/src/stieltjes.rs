//! Stieltjes transforms `S(F, z) = ∫ (z − x)^{-1} F(dx)` of laws on `[-1, 1]`.
//!
//! The power-semicircle family `P_n` (uniform at `n = 2`, Wigner semicircle at
//! `n = 3`) has transform
//!
//! ```text
//! S_n(z) = (n − 1)/2 · ∫_0^1 (1 − t)^{(n−3)/2} (z² − t)^{−1/2} dt
//! ```
//!
//! and satisfies `(−1)^{n−1}/(n−1)! · S_n^{(n−1)}(z) = (z² − 1)^{−n/2}`, the
//! `n`-th power of the arcsine transform. Derivatives are taken with the Cauchy
//! integral formula on a circle, discretized by the trapezoid rule.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod, tanh_sinh};
use crate::special::ln_factorial;

/// Minimum distance between grid points and the support.
pub const SUPPORT_STANDOFF: f64 = 0.25;
pub const QUAD_ABS_TOL: f64 = 1e-12;
pub const QUAD_REL_TOL: f64 = 1e-13;
pub const CONTOUR_REL_TOL: f64 = 1e-9;
pub const MAX_CONTOUR_NODES: usize = 1 << 14;

/// A Stieltjes transform with its support.
pub trait StieltjesFn: Sync {
    fn evaluate(&self, z: Complex64) -> Result<Complex64>;

    fn support(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
}

fn check_off_support(z: Complex64, (lo, hi): (f64, f64)) -> Result<()> {
    if z.im == 0.0 && z.re >= lo && z.re <= hi {
        return Err(Error::BranchCut { re: z.re, im: z.im });
    }
    Ok(())
}

/// `(z² − t)^{1/2}` on the branch that behaves like `z` at infinity, given
/// `w = z² − t` computed by the caller.
fn branch_sqrt(z: Complex64, w: Complex64) -> Complex64 {
    z * (w / (z * z)).sqrt()
}

/// Arcsine law on `[-1, 1]`: `S(z) = (z² − 1)^{−1/2}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Arcsine;

impl StieltjesFn for Arcsine {
    fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        check_off_support(z, self.support())?;
        Ok(branch_sqrt(z, z * z - 1.0).inv())
    }
}

pub fn arcsine_transform(z: Complex64) -> Result<Complex64> {
    Arcsine.evaluate(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PowerSemicircleParams {
    n: u32,
}

impl PowerSemicircleParams {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "power semicircle needs n >= 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `(n − 1)/2`; fixed by `z·S(z) → 1`.
    pub fn coefficient(&self) -> f64 {
        f64::from(self.n - 1) / 2.0
    }
}

/// Power-semicircle transform via `u = √(1 − t)`, which turns the integrand into
/// the smooth `2 u^{n−2} (z² − 1 + u²)^{−1/2}` and is integrated by adaptive
/// Gauss–Kronrod.
#[derive(Debug, Clone, Copy)]
pub struct PowerSemicircle {
    pub params: PowerSemicircleParams,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl PowerSemicircle {
    pub fn new(params: PowerSemicircleParams) -> Self {
        Self {
            params,
            abs_tol: QUAD_ABS_TOL,
            rel_tol: QUAD_REL_TOL,
        }
    }
}

impl StieltjesFn for PowerSemicircle {
    fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        check_off_support(z, self.support())?;
        let power = (self.params.n - 2) as i32;
        let z2m1 = z * z - 1.0;
        let integrand = |u: f64| 2.0 * u.powi(power) / branch_sqrt(z, z2m1 + u * u);
        let integral = gauss_kronrod(integrand, 0.0, 1.0, self.abs_tol, self.rel_tol)?;
        Ok(integral * self.params.coefficient())
    }
}

pub fn power_semicircle_transform(p: PowerSemicircleParams, z: Complex64) -> Result<Complex64> {
    PowerSemicircle::new(p).evaluate(z)
}

/// The same transform integrated in the original variable `t` by tanh-sinh
/// quadrature, which absorbs the `(1 − t)^{(n−3)/2}` endpoint behaviour directly.
#[derive(Debug, Clone, Copy)]
pub struct PowerSemicircleDirect {
    pub params: PowerSemicircleParams,
    pub tol: f64,
}

impl PowerSemicircleDirect {
    pub fn new(params: PowerSemicircleParams) -> Self {
        Self { params, tol: 1e-14 }
    }
}

impl StieltjesFn for PowerSemicircleDirect {
    fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        check_off_support(z, self.support())?;
        let exponent = (f64::from(self.params.n) - 3.0) / 2.0;
        let z2m1 = z * z - 1.0;
        // z² − t = (z² − 1) + (1 − t)
        let integrand =
            |_t: f64, _from_zero: f64, from_one: f64| from_one.powf(exponent) / branch_sqrt(z, z2m1 + from_one);
        let integral = tanh_sinh(integrand, 0.0, 1.0, self.tol)?;
        Ok(integral * self.params.coefficient())
    }
}

/// `order`-th derivative at real `z` by the Cauchy integral formula
/// `f^{(m)}(z) = m!/(2π r^m) ∫ f(z + r e^{iθ}) e^{−imθ} dθ`, trapezoid rule with
/// the node count doubled until successive estimates agree to `rel_tol`.
pub fn cauchy_derivative(f: &dyn StieltjesFn, z: f64, order: u32, radius: f64) -> Result<Complex64> {
    cauchy_derivative_tol(f, z, order, radius, CONTOUR_REL_TOL)
}

pub fn cauchy_derivative_tol(f: &dyn StieltjesFn, z: f64, order: u32, radius: f64, rel_tol: f64) -> Result<Complex64> {
    let (lo, hi) = f.support();
    if !(radius > 0.0) || !(z - radius > hi || z + radius < lo) {
        return Err(Error::ContourIntersectsSupport { center: z, radius });
    }
    let m = order as i32;
    let scale = (ln_factorial(order) - f64::from(order) * radius.ln()).exp();
    let point = |k: usize, nodes: usize| -> (Complex64, Complex64) {
        let theta = std::f64::consts::TAU * k as f64 / nodes as f64;
        let e = Complex64::from_polar(1.0, theta);
        (z + e * radius, Complex64::from_polar(1.0, -f64::from(m) * theta))
    };

    let mut nodes = 16usize;
    let mut weighted = Complex64::new(0.0, 0.0);
    let mut max_abs = 0.0f64;
    for k in 0..nodes {
        let (w, phase) = point(k, nodes);
        let v = f.evaluate(w)?;
        max_abs = max_abs.max(v.norm());
        weighted += v * phase;
    }
    let mut estimate = weighted * (scale / nodes as f64);
    let mut change = f64::INFINITY;
    while nodes < MAX_CONTOUR_NODES {
        let doubled = 2 * nodes;
        for k in (1..doubled).step_by(2) {
            let (w, phase) = point(k, doubled);
            let v = f.evaluate(w)?;
            max_abs = max_abs.max(v.norm());
            weighted += v * phase;
        }
        nodes = doubled;
        let next = weighted * (scale / nodes as f64);
        change = (next - estimate).norm();
        estimate = next;
        let floor = 1e-14 * scale * max_abs;
        if change <= rel_tol * estimate.norm() + floor {
            return Ok(estimate);
        }
    }
    Err(Error::ContourNonConvergence {
        achieved: change / estimate.norm(),
    })
}

/// Contour radius used at grid point `z`: half the distance to the support,
/// never closer than the standoff.
pub fn contour_radius(z: f64) -> f64 {
    ((z - 1.0) / 2.0).min(z - 1.0 - SUPPORT_STANDOFF)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub n: u32,
    pub z: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn check_grid(z_grid: &[f64]) -> Result<()> {
    if let Some(z) = z_grid
        .iter()
        .find(|&&z| !(z >= 1.0 + SUPPORT_STANDOFF && z.is_finite()))
    {
        return Err(Error::InvalidParameter(format!(
            "grid point {z} is closer than {SUPPORT_STANDOFF} to the support"
        )));
    }
    Ok(())
}

fn derivative_identity(f: &dyn StieltjesFn, n: u32, z_grid: &[f64]) -> Result<Vec<ResidualPoint>> {
    check_grid(z_grid)?;
    let order = n - 1;
    let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    let factor = sign / ln_factorial(order).exp();
    z_grid
        .iter()
        .map(|&z| {
            let d = cauchy_derivative(f, z, order, contour_radius(z))?;
            let lhs = d * factor;
            let rhs = (z * z - 1.0).powf(-f64::from(n) / 2.0);
            Ok(ResidualPoint {
                n,
                z,
                lhs: lhs.re,
                rhs,
                residual: (lhs - rhs).norm(),
            })
        })
        .collect()
}

/// `|(−1)^{n−1}/(n−1)! · d^{n−1}/dz^{n−1} S_n(z) − (z² − 1)^{−n/2}|` on the grid,
/// with `S_n` the Gauss–Kronrod power-semicircle transform.
pub fn equation3_residual(n: u32, z_grid: &[f64]) -> Result<Vec<ResidualPoint>> {
    let f = PowerSemicircle::new(PowerSemicircleParams::new(n)?);
    derivative_identity(&f, n, z_grid)
}

/// The same identity written for the raw integral `∫_0^1 (1 − t)^{(n−3)/2}(z² − t)^{−1/2} dt`
/// with prefactor `(n − 1)/2`, integrated in `t` by tanh-sinh.
pub fn equation1_check(n: u32, z_grid: &[f64]) -> Result<Vec<ResidualPoint>> {
    let f = PowerSemicircleDirect::new(PowerSemicircleParams::new(n)?);
    derivative_identity(&f, n, z_grid)
}

/// `|z·S(z) − 1|`.
pub fn normalization_error(f: &dyn StieltjesFn, z: Complex64) -> Result<f64> {
    Ok((z * f.evaluate(z)? - 1.0).norm())
}

/// Moments `∫ x^j F(dx)`, `j < count`, read off the Laurent coefficients of `S`
/// on the circle `|z| = radius` (trapezoid rule, `nodes` points).
pub fn transform_moments(f: &dyn StieltjesFn, count: usize, radius: f64, nodes: usize) -> Result<Vec<f64>> {
    let (lo, hi) = f.support();
    if !(radius > hi.abs().max(lo.abs())) {
        return Err(Error::ContourIntersectsSupport { center: 0.0, radius });
    }
    let mut sums = vec![Complex64::new(0.0, 0.0); count];
    for k in 0..nodes {
        let theta = std::f64::consts::TAU * (k as f64 + 0.5) / nodes as f64;
        let z = Complex64::from_polar(radius, theta);
        let s = f.evaluate(z)?;
        let mut zp = z;
        for sum in sums.iter_mut() {
            *sum += zp * s;
            zp *= z;
        }
    }
    Ok(sums.into_iter().map(|s| s.re / nodes as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_kronrod_real;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn arcsine_examples() {
        let v = arcsine_transform(c(2.0, 0.0)).unwrap();
        assert!((v.re - 1.0 / 3f64.sqrt()).abs() < 1e-15 && v.im == 0.0);
        let v = arcsine_transform(c(1e3, 0.0)).unwrap();
        assert!((v.re * 1e3 - 1.0).abs() < 1e-6);
        assert!(arcsine_transform(c(1.25 * 0.0, 1.25)).unwrap().im < 0.0);
        assert!(matches!(arcsine_transform(c(0.3, 0.0)), Err(Error::BranchCut { .. })));
        assert!(matches!(arcsine_transform(c(-1.0, 0.0)), Err(Error::BranchCut { .. })));
    }

    #[test]
    fn arcsine_matches_density_quadrature() {
        // With x = cos θ the arcsine density becomes dθ/π on [0, π].
        for z in [c(0.0, 1.25), c(2.0, 0.0), c(-1.5, 0.5), c(0.3, -0.2)] {
            let re = gauss_kronrod_real(
                |th| ((z - th.cos()).inv()).re / std::f64::consts::PI,
                0.0,
                std::f64::consts::PI,
                1e-13,
                1e-13,
            )
            .unwrap();
            let im = gauss_kronrod_real(
                |th| ((z - th.cos()).inv()).im / std::f64::consts::PI,
                0.0,
                std::f64::consts::PI,
                1e-13,
                1e-13,
            )
            .unwrap();
            let v = arcsine_transform(z).unwrap();
            assert!((v - c(re, im)).norm() < 1e-10, "z = {z}: {v} vs {re}+{im}i");
        }
    }

    #[test]
    fn power_semicircle_closed_forms() {
        let p3 = PowerSemicircleParams::new(3).unwrap();
        let v = power_semicircle_transform(p3, c(2.0, 0.0)).unwrap();
        assert!((v.re - 2.0 * (2.0 - 3f64.sqrt())).abs() < 1e-12, "{v}");
        let p2 = PowerSemicircleParams::new(2).unwrap();
        let v = power_semicircle_transform(p2, c(2.0, 0.0)).unwrap();
        assert!((v.re - 0.5 * 3f64.ln()).abs() < 1e-12, "{v}");
        for n in 2..=6 {
            let p = PowerSemicircleParams::new(n).unwrap();
            let v = power_semicircle_transform(p, c(1e3, 0.0)).unwrap();
            assert!((v.re * 1e3 - 1.0).abs() < 1e-5);
        }
        assert!(PowerSemicircleParams::new(1).is_err());
    }

    #[test]
    fn both_integration_routes_agree() {
        for n in 2..=5 {
            let p = PowerSemicircleParams::new(n).unwrap();
            for z in [c(1.5, 0.0), c(0.2, 0.7), c(-3.0, 0.1)] {
                let a = PowerSemicircle::new(p).evaluate(z).unwrap();
                let b = PowerSemicircleDirect::new(p).evaluate(z).unwrap();
                assert!((a - b).norm() < 1e-11, "n = {n}, z = {z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cauchy_derivative_examples() {
        let v = cauchy_derivative(&Arcsine, 2.0, 0, 0.5).unwrap();
        assert!((v.re - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        let v = cauchy_derivative(&Arcsine, 2.0, 1, 0.5).unwrap();
        assert!((v.re + 2.0 / 3f64.powf(1.5)).abs() < 1e-9, "{v}");
        let u = PowerSemicircle::new(PowerSemicircleParams::new(2).unwrap());
        let v = cauchy_derivative(&u, 2.0, 1, 0.5).unwrap();
        assert!((-v.re - 1.0 / 3.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn cauchy_derivative_rejects_disks_touching_the_support() {
        assert!(matches!(
            cauchy_derivative(&Arcsine, 1.5, 1, 0.5),
            Err(Error::ContourIntersectsSupport { .. })
        ));
        assert!(cauchy_derivative(&Arcsine, 2.0, 1, 0.0).is_err());
    }

    #[test]
    fn residual_grid_must_keep_its_distance() {
        assert!(equation3_residual(2, &[1.1]).is_err());
        assert!(equation3_residual(1, &[2.0]).is_err());
    }

    #[test]
    fn uniform_moments_from_the_transform() {
        let u = PowerSemicircle::new(PowerSemicircleParams::new(2).unwrap());
        let m = transform_moments(&u, 7, 2.0, 128).unwrap();
        for (j, mj) in m.iter().enumerate() {
            let expected = if j % 2 == 0 { 1.0 / (j as f64 + 1.0) } else { 0.0 };
            assert!((mj - expected).abs() < 1e-10, "moment {j}: {mj}");
        }
    }
}
