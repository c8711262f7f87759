//! Special functions and numerically careful accumulation.
//!
//! Log-gamma and the regularized incomplete beta function come from `statrs`;
//! everything that needs a gamma-function ratio goes through [`ln_gamma_ratio`]
//! so that large arguments never overflow.

use statrs::function::{beta, gamma};

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// `ln Γ(a + h) − ln Γ(a)`, the log of the rising factorial `(a)_h`.
pub fn ln_gamma_ratio(a: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    gamma::ln_gamma(a + h) - gamma::ln_gamma(a)
}

pub fn ln_factorial(n: u32) -> f64 {
    gamma::ln_gamma(f64::from(n) + 1.0)
}

/// Multinomial coefficient `total! / ∏ parts!` where `total = Σ parts`.
/// Exact in integer arithmetic for the small orders used here, log-gamma otherwise.
pub fn multinomial(parts: &[u32]) -> f64 {
    let total: u32 = parts.iter().sum();
    if total <= 20 {
        let mut num = factorial_u64(total);
        for &p in parts {
            num /= factorial_u64(p);
        }
        num as f64
    } else {
        let ln = ln_factorial(total) - parts.iter().map(|&p| ln_factorial(p)).sum::<f64>();
        ln.exp().round()
    }
}

fn factorial_u64(n: u32) -> u64 {
    (1..=u64::from(n)).product()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    multinomial(&[k, n - k])
}

/// Regularized incomplete beta `I_x(a, b)`, the Beta(a, b) CDF.
/// `x` is clamped to `[0, 1]`.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    beta::beta_reg(a, b, x)
}

/// Neumaier's variant of Kahan compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merges a partial sum computed elsewhere.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}
