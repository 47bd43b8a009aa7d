//! Exact integer and rational helpers shared by the probability routines.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Largest `n` for which binomial coefficients are served from the cached
/// Pascal triangle.
pub const EXACT_TABLE_MAX: u64 = 200;

fn pascal() -> &'static [Vec<BigUint>] {
    static TABLE: OnceLock<Vec<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows = EXACT_TABLE_MAX as usize + 1;
        let mut table: Vec<Vec<BigUint>> = Vec::with_capacity(rows);
        for n in 0..rows {
            let mut row = Vec::with_capacity(n + 1);
            row.push(BigUint::one());
            for r in 1..n {
                let prev = &table[n - 1];
                row.push(&prev[r - 1] + &prev[r]);
            }
            if n > 0 {
                row.push(BigUint::one());
            }
            table.push(row);
        }
        table
    })
}

/// Exact `C(n, r)`, zero when `r > n`.
pub fn binomial_exact(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    if n <= EXACT_TABLE_MAX {
        return pascal()[n as usize][r as usize].clone();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// `ln C(n, r)`; `-inf` when `r > n`.
///
/// Small `min(r, n - r)` uses a direct product of ratios, which stays accurate
/// for `n` in the billions where log-gamma differences lose digits.
pub fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    let r = r.min(n - r);
    if r <= 256 {
        let nf = n as f64;
        (0..r)
            .map(|j| ((nf - j as f64) / (j as f64 + 1.0)).ln())
            .sum()
    } else {
        use statrs::function::gamma::ln_gamma;
        ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
    }
}

/// Build `num / den` as a reduced rational.
pub fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

pub fn rational_from_u64(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational image of a finite float.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Canonical `"numerator/denominator"` rendering used in CSV output.
pub fn format_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Neumaier's compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pascal_matches_multiplicative() {
        for n in [0u64, 1, 7, 50, 200] {
            for r in 0..=n {
                let mut acc = BigUint::one();
                for i in 0..r.min(n - r) {
                    acc *= BigUint::from(n - i);
                    acc /= BigUint::from(i + 1);
                }
                assert_eq!(binomial_exact(n, r), acc, "C({n},{r})");
            }
        }
        assert_eq!(binomial_exact(201, 3), BigUint::from(1_333_300u64));
        assert!(binomial_exact(4, 5).is_zero());
    }

    #[test]
    fn ln_binomial_small_and_large() {
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-13);
        let exact = to_f64(&ratio(&binomial_exact(600, 300), &BigUint::one())).ln();
        assert!((ln_binomial(600, 300) - exact).abs() / exact < 1e-12);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-16).abs() < 1e-30);
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rational(&rational_from_u64(4, 6)), "2/3");
        assert_eq!(format_rational(&rational_from_u64(0, 6)), "0/1");
    }
}
