//! One-dimensional quadrature of complex-valued integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1]. Abscissae are
// listed from the outermost inward; odd positions are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maximum number of subintervals before adaptive Gauss–Kronrod gives up.
pub const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
    }
}

/// Adaptive Gauss–Kronrod (G7/K15) with global error control: stops once the summed
/// error estimate is at most `max(abs_tol, rel_tol · |I|)`.
pub fn gauss_kronrod<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Complex64> {
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let value: Complex64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= abs_tol.max(rel_tol * value.norm()) {
            return Ok(value);
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNonConvergence { achieved: error });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
}

pub fn gauss_kronrod_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    gauss_kronrod(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).map(|c| c.re)
}

/// Largest refinement level of the tanh-sinh rule (step `2^-level`).
pub const MAX_TANH_SINH_LEVEL: u32 = 12;

/// Tanh-sinh (double exponential) quadrature on `[a, b]`, for integrands with
/// algebraic endpoint singularities. The integrand receives `(x, x − a, b − x)`,
/// with both distances computed without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    const T_MAX: f64 = 4.0;
    let half = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |t: f64| -> Option<Complex64> {
        let u = half_pi * t.sinh();
        let cosh_u = u.cosh();
        let weight = half * half_pi * t.cosh() / (cosh_u * cosh_u);
        let left = half * u.exp() / cosh_u;
        let right = half * (-u).exp() / cosh_u;
        if left <= 0.0 || right <= 0.0 || weight == 0.0 {
            return None;
        }
        let x = if u < 0.0 { a + left } else { b - right };
        Some(f(x, left, right) * weight)
    };

    let mut h = 1.0;
    let mut sum = node(0.0).unwrap_or_default();
    let mut k = 1;
    while f64::from(k) * h <= T_MAX {
        let t = f64::from(k) * h;
        sum += node(t).unwrap_or_default() + node(-t).unwrap_or_default();
        k += 1;
    }
    let mut estimate = sum * h;
    let mut change = f64::INFINITY;
    for _ in 1..=MAX_TANH_SINH_LEVEL {
        h /= 2.0;
        // Only the odd multiples of the new step are new nodes.
        let mut k = 1;
        while f64::from(k) * h <= T_MAX {
            let t = f64::from(k) * h;
            sum += node(t).unwrap_or_default() + node(-t).unwrap_or_default();
            k += 2;
        }
        let next = sum * h;
        change = (next - estimate).norm();
        estimate = next;
        if change <= tol * estimate.norm().max(1.0) {
            return Ok(estimate);
        }
    }
    Err(Error::QuadratureNonConvergence { achieved: change })
}
