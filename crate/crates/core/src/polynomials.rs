//! Two-variable Hermite and associated Laguerre polynomials.
//!
//! Both families are evaluated by direct finite summation. Binomials are
//! exact integers (u128) and factorials are `f64`, which keeps every term
//! exact for integer inputs up to `n + m <= 40`. Degrees used elsewhere in
//! the crate stay below ~12, so cancellation is not a concern.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};

/// Largest combined degree for which the summation is documented as exact.
pub const MAX_DEGREE: u32 = 40;

/// A finite complex polynomial argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyArgument(C64);

impl PolyArgument {
    pub fn new(value: C64) -> Result<Self> {
        if value.re.is_finite() && value.im.is_finite() {
            Ok(Self(value))
        } else {
            Err(invalid("polynomial argument", format!("{value} is not finite")))
        }
    }

    pub fn value(self) -> C64 {
        self.0
    }
}

impl From<f64> for PolyArgument {
    fn from(x: f64) -> Self {
        Self(C64::new(x, 0.0))
    }
}

/// Exact binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) / (i + 1);
    }
    acc as f64
}

/// Binomial coefficient with an arbitrary integer upper index,
/// `top (top-1) ... (top-k+1) / k!`.
pub fn generalized_binomial(top: i64, k: u32) -> f64 {
    if top >= 0 {
        return binomial(top as u32, k);
    }
    let mut acc = 1.0;
    for i in 0..k as i64 {
        acc *= (top - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `H_{n,m}(x, y) = sum_k C(n,k) C(m,k) (-1)^k k! x^(n-k) y^(m-k)`.
pub fn hermite2(n: u32, m: u32, x: C64, y: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..=n.min(m) {
        let weight = binomial(n, k) * binomial(m, k) * factorial(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += x.powu(n - k) * y.powu(m - k) * (sign * weight);
    }
    sum
}

/// Associated Laguerre polynomial `L_n^(a)(x)` for any integer `a`,
/// via `sum_k C(n+a, n-k) (-x)^k / k!`.
pub fn laguerre(n: u32, a: i32, x: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    let top = n as i64 + a as i64;
    for k in 0..=n {
        let c = generalized_binomial(top, n - k) / factorial(k);
        sum += (-x).powu(k) * c;
    }
    sum
}

/// Sum of the absolute values of the terms in [`laguerre`]; the rounding
/// error of the direct sum is bounded by a small multiple of this times
/// machine epsilon.
pub fn laguerre_term_scale(n: u32, a: i32, x: C64) -> f64 {
    let top = n as i64 + a as i64;
    (0..=n)
        .map(|k| (generalized_binomial(top, n - k) / factorial(k)).abs() * x.norm().powi(k as i32))
        .sum()
}
