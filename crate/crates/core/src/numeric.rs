//! Exact integer roots and compensated summation.

/// `base^exp` in `u64`, `None` on overflow.
pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

fn pow_le(base: u64, exp: u32, bound: u128) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = match acc.checked_mul(base as u128) {
            Some(v) if v <= bound => v,
            _ => return false,
        };
    }
    acc <= bound
}

/// Largest `r` with `r^exp <= value`. `exp` must be positive.
pub fn floor_root(value: u64, exp: u32) -> u64 {
    assert!(exp > 0, "root exponent must be positive");
    floor_root_scaled(value as u128, 1, exp)
}

/// Largest `r` with `r^exp * scale <= value`, i.e. `floor((value / scale)^(1/exp))`
/// evaluated without rounding the rational.
pub fn floor_root_scaled(value: u128, scale: u128, exp: u32) -> u64 {
    assert!(exp > 0 && scale > 0);
    let fits = |r: u64| -> bool {
        let mut acc: u128 = scale;
        for _ in 0..exp {
            acc = match acc.checked_mul(r as u128) {
                Some(v) if v <= value => v,
                _ => return false,
            };
        }
        acc <= value
    };
    let guess = ((value as f64 / scale as f64).powf(1.0 / exp as f64)).floor();
    let mut r = if guess.is_finite() && guess >= 0.0 {
        guess.min(u64::MAX as f64 / 2.0) as u64
    } else {
        0
    };
    while r > 0 && !fits(r) {
        r -= 1;
    }
    while fits(r + 1) {
        r += 1;
    }
    r
}

/// `Some(r)` iff `r^exp == value` exactly.
pub fn exact_root(value: u64, exp: u32) -> Option<u64> {
    let r = floor_root(value, exp);
    (checked_pow(r, exp) == Some(value)).then_some(r)
}

/// Largest integer `r` with `r^exp <= quota * (1 + 1e-9)`, guarding against
/// floating-point roots that land just below an integer.
pub fn floor_root_f64(quota: f64, exp: u32) -> u64 {
    if quota.is_nan() || quota < 1.0 {
        return 0;
    }
    let limit = quota + 1e-9 * quota;
    let mut r = quota.powf(1.0 / exp as f64).floor() as u64;
    while r > 0 && (r as f64).powi(exp as i32) > limit {
        r -= 1;
    }
    while ((r + 1) as f64).powi(exp as i32) <= limit {
        r += 1;
    }
    r
}

/// `true` iff `base^exp <= bound` without overflow.
pub fn pow_at_most(base: u64, exp: u32, bound: u64) -> bool {
    pow_le(base, exp, bound as u128)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}

/// Compensated sum of an iterator.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}
