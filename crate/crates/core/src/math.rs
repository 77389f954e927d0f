//! Special functions, log-space accumulation and sample moments.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Euler–Mascheroni constant at full double precision.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ζ(2) = π²/6, the variance of a standard Gumbel.
pub const PI2_OVER_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Trigamma function ψ₁(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // asymptotic series in 1/x with Bernoulli coefficients
    let tail = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + tail
}

/// `ln Γ(1+α)/α`, continuous at α = 0 where it equals −c.
pub fn ln_gamma_ratio(alpha: f64) -> f64 {
    if alpha == 0.0 {
        -EULER_GAMMA
    } else if alpha.abs() < 1e-6 {
        // ln Γ(1+α) = −cα + ζ(2)α²/2 + O(α³)
        -EULER_GAMMA + PI2_OVER_6 * alpha / 2.0
    } else {
        ln_gamma(1.0 + alpha) / alpha
    }
}

/// Numerically stable `ln Σ exp(x)`; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &x in xs {
        acc.push(x);
    }
    acc.value()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            *self = *other;
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Mean, unbiased variance and fourth central moment of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub fourth_central: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Moments {
        let count = xs.len();
        if count == 0 {
            return Moments {
                count,
                mean: f64::NAN,
                variance: f64::NAN,
                fourth_central: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut s2, mut s4) = (0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            s2 += d2;
            s4 += d2 * d2;
        }
        let variance = if count > 1 { s2 / (n - 1.0) } else { 0.0 };
        Moments {
            count,
            mean,
            variance,
            fourth_central: s4 / n,
        }
    }

    /// Standard error of the sample mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the sample variance, `sqrt((μ₄ − σ⁴)/n)`.
    pub fn variance_std_error(&self) -> f64 {
        let s2 = self.variance;
        ((self.fourth_central - s2 * s2).max(0.0) / self.count as f64).sqrt()
    }
}

/// `ln mean exp(y_m)` together with the delta-method standard error of that
/// logarithm. Entries equal to `-inf` contribute zero weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanExp {
    pub value: f64,
    pub std_error: f64,
}

pub fn log_mean_exp(ys: &[f64]) -> LogMeanExp {
    let m = ys.len();
    if m == 0 {
        return LogMeanExp {
            value: f64::NAN,
            std_error: f64::NAN,
        };
    }
    let shift = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        // all -inf (empty support) or some +inf: the mean is degenerate
        return LogMeanExp {
            value: shift,
            std_error: 0.0,
        };
    }
    let n = m as f64;
    let mut sum = 0.0;
    for &y in ys {
        sum += (y - shift).exp();
    }
    let mean = sum / n;
    let std_error = if m > 1 {
        let mut ss = 0.0;
        for &y in ys {
            let d = (y - shift).exp() - mean;
            ss += d * d;
        }
        (ss / (n - 1.0)).sqrt() / (mean * n.sqrt())
    } else {
        0.0
    };
    LogMeanExp {
        value: shift + mean.ln(),
        std_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigamma_known_values() {
        assert!((trigamma(1.0) - PI2_OVER_6).abs() < 1e-12);
        // ψ₁(1/2) = π²/2
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-11);
        // ψ₁(x) − ψ₁(x+1) = 1/x²
        for &x in &[0.3, 2.5, 10.0, 40.0] {
            assert!((trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn trigamma_matches_finite_difference_of_digamma() {
        for &x in &[1.0, 3.0, 7.5, 50.0] {
            let h = 1e-4;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((trigamma(x) - fd).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn ln_gamma_ratio_is_continuous() {
        assert_eq!(ln_gamma_ratio(0.0), -EULER_GAMMA);
        assert!((ln_gamma_ratio(1e-5) - ln_gamma_ratio(0.0)).abs() < 1e-4);
        assert!((ln_gamma_ratio(-1e-5) - ln_gamma_ratio(0.0)).abs() < 1e-4);
        assert!((ln_gamma_ratio(1.0)).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = log_sum_exp(&[0.0, f64::NEG_INFINITY, 0.0, 0.0, 0.0]);
        assert!((v - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 30.0).collect();
        let mut a = LogSumExp::new();
        let mut b = LogSumExp::new();
        xs[..20].iter().for_each(|&x| a.push(x));
        xs[20..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.value() - log_sum_exp(&xs)).abs() < 1e-12);
    }

    #[test]
    fn log_mean_exp_of_constants() {
        let r = log_mean_exp(&[2.0; 10]);
        assert!((r.value - 2.0).abs() < 1e-15);
        assert_eq!(r.std_error, 0.0);
    }
}
