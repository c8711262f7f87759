#![allow(dead_code)]

/// Sample mean and its CLT standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Raw Beta(a, b) moment of order s: ∏_{r<s} (a + r)/(a + b + r).
pub fn beta_raw_moment(a: f64, b: f64, s: u32) -> f64 {
    (0..s).map(|r| (a + r as f64) / (a + b + r as f64)).product()
}

pub fn monomial(x: &[f64], s: &[u32]) -> f64 {
    x.iter().zip(s).map(|(xi, &si)| xi.powi(si as i32)).product()
}
