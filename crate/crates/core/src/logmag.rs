//! Extended-range magnitudes carried as natural logarithms.
//!
//! Degrees such as `p^(vM+j)` overflow every machine integer long before the
//! witness shells become interesting, and `|z|^(p^e)` underflows `f64`. All
//! such quantities are handled here as logarithms; only the final, `O(1)`
//! scaled values are exponentiated.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul};

/// A nonnegative real stored as its natural logarithm (`-inf` encodes zero).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogMag(f64);

impl LogMag {
    pub const ZERO: LogMag = LogMag(f64::NEG_INFINITY);
    pub const ONE: LogMag = LogMag(0.0);

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogMag(ln)
    }

    pub fn from_value(x: f64) -> Self {
        debug_assert!(x >= 0.0, "LogMag from negative value {x}");
        LogMag(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn powf(self, e: f64) -> Self {
        if self.is_zero() {
            return if e > 0.0 { Self::ZERO } else { Self::ONE };
        }
        LogMag(self.0 * e)
    }

    /// `self - other` as an ordinary float, computed relative to the larger
    /// operand so that nearly-cancelling huge magnitudes keep their digits.
    pub fn signed_diff(self, other: LogMag) -> f64 {
        match self.0.partial_cmp(&other.0) {
            Some(Ordering::Less) => -(other.signed_diff(self)),
            _ if self.is_zero() => 0.0,
            _ => self.0.exp() * (-(other.0 - self.0).exp_m1()).max(0.0),
        }
    }

    pub fn max(self, other: LogMag) -> LogMag {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

impl Mul for LogMag {
    type Output = LogMag;
    fn mul(self, rhs: LogMag) -> LogMag {
        if self.is_zero() || rhs.is_zero() {
            return LogMag::ZERO;
        }
        LogMag(self.0 + rhs.0)
    }
}

impl Div for LogMag {
    type Output = LogMag;
    fn div(self, rhs: LogMag) -> LogMag {
        debug_assert!(!rhs.is_zero(), "LogMag division by zero");
        if self.is_zero() {
            return LogMag::ZERO;
        }
        LogMag(self.0 - rhs.0)
    }
}

impl Add for LogMag {
    type Output = LogMag;
    fn add(self, rhs: LogMag) -> LogMag {
        let (hi, lo) = if self.0 >= rhs.0 { (self, rhs) } else { (rhs, self) };
        if lo.is_zero() {
            return hi;
        }
        LogMag(hi.0 + (lo.0 - hi.0).exp().ln_1p())
    }
}

impl std::iter::Sum for LogMag {
    fn sum<I: Iterator<Item = LogMag>>(iter: I) -> LogMag {
        // Fixed left-to-right order: reproducible regardless of caller.
        iter.fold(LogMag::ZERO, |acc, x| acc + x)
    }
}

/// `ln(p^e)` for integer base and exponent.
pub fn ln_int_pow(p: u64, e: f64) -> f64 {
    e * (p as f64).ln()
}

/// `ln(-ln(1 - g))` for a gap `g = exp(ln_gap)` in `(0, 1)`, accurate for
/// gaps far below machine epsilon.
pub fn ln_neg_ln_one_minus(ln_gap: f64) -> f64 {
    let g = ln_gap.exp();
    // -ln(1-g) = g (1 + g/2 + g^2/3 + ...)
    let corr = if g < 1e-8 {
        0.5 * g
    } else {
        (-(-g).ln_1p() / g).ln()
    };
    ln_gap + corr
}

/// `|z|^N` in log form for `|z| = 1 - exp(ln_gap)` and `N = exp(ln_degree)`.
pub fn ln_pow_modulus(ln_gap: f64, ln_degree: f64) -> LogMag {
    LogMag::from_ln(-(ln_degree + ln_neg_ln_one_minus(ln_gap)).exp())
}

/// Natural log of `|z|` for `|z| = 1 - exp(ln_gap)`.
pub fn ln_modulus(ln_gap: f64) -> f64 {
    (-ln_gap.exp()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_sum() {
        let a = LogMag::from_value(3.0);
        let b = LogMag::from_value(4.5);
        assert!(((a + b).value() - 7.5).abs() < 1e-14);
        assert_eq!(a + LogMag::ZERO, a);
        let s: LogMag = [1.0, 2.0, 3.0].iter().map(|&x| LogMag::from_value(x)).sum();
        assert!((s.value() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn signed_diff_handles_order_and_zero() {
        let a = LogMag::from_value(5.0);
        let b = LogMag::from_value(2.0);
        assert!((a.signed_diff(b) - 3.0).abs() < 1e-14);
        assert!((b.signed_diff(a) + 3.0).abs() < 1e-14);
        assert_eq!(LogMag::ZERO.signed_diff(LogMag::ZERO), 0.0);
        // operands near the top of the f64 range keep their leading digits
        let big = LogMag::from_ln(700.0);
        let quarter = LogMag::from_ln(700.0 + 0.25f64.ln());
        assert!((big.signed_diff(quarter) / 700f64.exp() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn pow_modulus_small_degree_matches_powi() {
        let gap: f64 = 0.3;
        let got = ln_pow_modulus(gap.ln(), (5.0f64).ln()).value();
        assert!((got - 0.7f64.powi(5)).abs() < 1e-15);
    }

    // Reference values from 50-digit arithmetic: |z| = 1 - 0.7 p^-e raised to p^e.
    #[test]
    fn pow_modulus_matches_extended_precision() {
        let cases: [(u64, f64, f64); 5] = [
            (6, 1.0, 0.4750591805769890260631001),
            (6, 10.0, 0.4965853017793193153611256),
            (6, 20.0, 0.4965853037914094814285071),
            (6, 40.0, 0.4965853037914095147042293),
            (84, 5.0, 0.4965853037623181887276614),
        ];
        for (p, e, reference) in cases {
            let ln_gap = 0.7f64.ln() - ln_int_pow(p, e);
            let got = ln_pow_modulus(ln_gap, ln_int_pow(p, e)).value();
            assert!(
                ((got - reference) / reference).abs() < 1e-10,
                "p={p} e={e}: {got} vs {reference}"
            );
        }
    }
}
