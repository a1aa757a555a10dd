//! Signed numbers stored as `(sign, ln |v|)`.
//!
//! Hitting probabilities of the mean-field chain decay geometrically in the
//! starting state and leave the range of `f64` long before the state space
//! ends. Everything in the exact solver that can get that small is carried
//! as a [`LogValue`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A real number represented by its sign and the natural log of its magnitude.
#[derive(Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    ln_mag: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        ln_mag: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue {
        sign: 1,
        ln_mag: 0.0,
    };

    /// Positive value with the given natural log. `-inf` gives zero.
    pub fn from_ln(ln_mag: f64) -> Self {
        if ln_mag == f64::NEG_INFINITY {
            LogValue::ZERO
        } else {
            LogValue { sign: 1, ln_mag }
        }
    }

    pub fn from_parts(sign: i8, ln_mag: f64) -> Self {
        if sign == 0 || ln_mag == f64::NEG_INFINITY {
            LogValue::ZERO
        } else {
            LogValue {
                sign: sign.signum(),
                ln_mag,
            }
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            LogValue::ZERO
        } else {
            LogValue {
                sign: if v > 0.0 { 1 } else { -1 },
                ln_mag: v.abs().ln(),
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_mag.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        self.ln_mag
    }

    /// Natural log of a value known to be nonnegative.
    ///
    /// Panics in debug builds on a negative value.
    pub fn ln(self) -> f64 {
        debug_assert!(self.sign >= 0, "ln of negative LogValue");
        self.ln_mag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_finite(self) -> bool {
        self.sign == 0 || self.ln_mag.is_finite()
    }

    pub fn abs(self) -> Self {
        LogValue {
            sign: self.sign.abs(),
            ln_mag: self.ln_mag,
        }
    }

    pub fn powi(self, k: i64) -> Self {
        if k == 0 {
            return LogValue::ONE;
        }
        if self.sign == 0 {
            return LogValue::ZERO;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        LogValue {
            sign,
            ln_mag: self.ln_mag * k as f64,
        }
    }
}

impl Default for LogValue {
    fn default() -> Self {
        LogValue::ZERO
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "LogValue(0)"),
            1 => write!(f, "LogValue(+exp({}))", self.ln_mag),
            _ => write!(f, "LogValue(-exp({}))", self.ln_mag),
        }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.ln_mag.partial_cmp(&other.ln_mag),
                _ => other.ln_mag.partial_cmp(&self.ln_mag),
            },
            o => Some(o),
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue {
            sign: -self.sign,
            ln_mag: self.ln_mag,
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 || rhs.sign == 0 {
            return LogValue::ZERO;
        }
        LogValue {
            sign: self.sign * rhs.sign,
            ln_mag: self.ln_mag + rhs.ln_mag,
        }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        if rhs.sign == 0 {
            return LogValue {
                sign: if self.sign == 0 { 1 } else { self.sign },
                ln_mag: if self.sign == 0 {
                    f64::NAN
                } else {
                    f64::INFINITY
                },
            };
        }
        if self.sign == 0 {
            return LogValue::ZERO;
        }
        LogValue {
            sign: self.sign * rhs.sign,
            ln_mag: self.ln_mag - rhs.ln_mag,
        }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln_mag >= rhs.ln_mag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = small.ln_mag - big.ln_mag;
        if big.sign == small.sign {
            LogValue {
                sign: big.sign,
                ln_mag: big.ln_mag + d.exp().ln_1p(),
            }
        } else if d == 0.0 {
            LogValue::ZERO
        } else {
            LogValue {
                sign: big.sign,
                ln_mag: big.ln_mag + (-d.exp()).ln_1p(),
            }
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

impl std::iter::Sum for LogValue {
    fn sum<I: Iterator<Item = LogValue>>(iter: I) -> LogValue {
        iter.fold(LogValue::ZERO, |acc, v| acc + v)
    }
}

/// `ln(e^a + e^b)`, with `-inf` as the log of zero.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}` by the max-shift trick; `-inf` for an empty or all-zero input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    log_sum_exp_iter(xs.iter().copied())
}

pub fn log_sum_exp_iter<I>(xs: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let it = xs.into_iter();
    let max = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = it.map(|x| (x - max).exp()).sum();
    max + s.ln()
}
