//! Hypergeometric law `H(n, k, s)`: the number of marked items in a uniform
//! draw of `s` items, without replacement, from `n` items of which `k` are
//! marked.

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};

use super::exact::{
    binomial_exact, ln_binomial, rational_from_u64, ratio, to_f64, CompensatedSum,
    EXACT_TABLE_MAX,
};
use super::ProbabilityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HypergeomParams {
    n_total: u64,
    marked: u64,
    draw: u64,
}

impl HypergeomParams {
    pub fn new(n_total: u64, marked: u64, draw: u64) -> Result<Self, ProbabilityError> {
        if n_total == 0 || marked > n_total || draw > n_total {
            return Err(ProbabilityError::InvalidHypergeom {
                n_total,
                marked,
                draw,
            });
        }
        Ok(Self {
            n_total,
            marked,
            draw,
        })
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn marked(&self) -> u64 {
        self.marked
    }

    pub fn draw(&self) -> u64 {
        self.draw
    }

    /// Values of `r` with non-zero probability.
    pub fn support(&self) -> RangeInclusive<u64> {
        let lo = self.draw.saturating_sub(self.n_total - self.marked);
        let hi = self.marked.min(self.draw);
        lo..=hi
    }

    /// `ks / n`, exactly.
    pub fn mean(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.marked) * BigInt::from(self.draw),
            BigInt::from(self.n_total),
        )
    }

    pub fn mean_f64(&self) -> f64 {
        self.marked as f64 * self.draw as f64 / self.n_total as f64
    }

    fn exact_path(&self) -> bool {
        self.n_total <= EXACT_TABLE_MAX
    }

    /// `C(k, r) C(n - k, s - r)`, the number of draws with exactly `r` marked.
    fn count(&self, r: u64) -> BigUint {
        if r > self.draw {
            return BigUint::zero();
        }
        binomial_exact(self.marked, r) * binomial_exact(self.n_total - self.marked, self.draw - r)
    }

    fn ln_pmf(&self, r: u64) -> f64 {
        if r > self.draw {
            return f64::NEG_INFINITY;
        }
        ln_binomial(self.marked, r) + ln_binomial(self.n_total - self.marked, self.draw - r)
            - ln_binomial(self.n_total, self.draw)
    }

    /// `pmf(r + 1) / pmf(r)` for `r` inside the support.
    fn step_up(&self, r: u64) -> f64 {
        let (n, k, s) = (self.n_total as f64, self.marked as f64, self.draw as f64);
        let r = r as f64;
        (k - r) * (s - r) / ((r + 1.0) * (n - k - s + r + 1.0))
    }
}

/// All point counts of a hypergeometric law over a common denominator
/// `C(n, s)`. Lets callers take many exact tails of one law without
/// recomputing binomials.
#[derive(Debug, Clone)]
pub struct HypergeomTable {
    lo: u64,
    counts: Vec<BigUint>,
    suffix: Vec<BigUint>,
    total: BigUint,
}

impl HypergeomTable {
    pub fn new(params: &HypergeomParams) -> Self {
        let support = params.support();
        let lo = *support.start();
        let counts: Vec<BigUint> = support.map(|r| params.count(r)).collect();
        let mut suffix = vec![BigUint::zero(); counts.len() + 1];
        for i in (0..counts.len()).rev() {
            suffix[i] = &suffix[i + 1] + &counts[i];
        }
        Self {
            lo,
            counts,
            suffix,
            total: binomial_exact(params.n_total, params.draw),
        }
    }

    /// `C(n, s)`.
    pub fn denominator(&self) -> &BigUint {
        &self.total
    }

    /// Numerator of `Pr(H = r)` over [`Self::denominator`].
    pub fn count(&self, r: u64) -> BigUint {
        match r.checked_sub(self.lo) {
            Some(i) if (i as usize) < self.counts.len() => self.counts[i as usize].clone(),
            _ => BigUint::zero(),
        }
    }

    /// Numerator of `Pr(H >= threshold)` over [`Self::denominator`].
    pub fn tail_ge_count(&self, threshold: u64) -> BigUint {
        let idx = threshold.saturating_sub(self.lo) as usize;
        if idx >= self.counts.len() {
            BigUint::zero()
        } else {
            self.suffix[idx].clone()
        }
    }

    pub fn pmf(&self, r: u64) -> BigRational {
        ratio(&self.count(r), &self.total)
    }

    pub fn tail_ge(&self, threshold: u64) -> BigRational {
        ratio(&self.tail_ge_count(threshold), &self.total)
    }

    /// `Pr(H <= x)`.
    pub fn cdf(&self, x: u64) -> BigRational {
        let above = self.tail_ge_count(x.saturating_add(1));
        ratio(&(&self.total - above), &self.total)
    }
}

/// Exact `Pr(H = r)`; zero outside the support.
pub fn hypergeom_pmf(params: &HypergeomParams, r: u64) -> BigRational {
    let count = params.count(r);
    if count.is_zero() {
        return rational_from_u64(0, 1);
    }
    ratio(&count, &binomial_exact(params.n_total, params.draw))
}

/// Exact `Pr(H >= threshold)`.
pub fn hypergeom_tail_ge(params: &HypergeomParams, threshold: u64) -> BigRational {
    HypergeomTable::new(params).tail_ge(threshold)
}

/// Exact `Pr(H <= x)`.
pub fn hypergeom_cdf(params: &HypergeomParams, x: u64) -> BigRational {
    HypergeomTable::new(params).cdf(x)
}

pub fn hypergeom_pmf_f64(params: &HypergeomParams, r: u64) -> f64 {
    if params.exact_path() {
        return to_f64(&hypergeom_pmf(params, r));
    }
    let support = params.support();
    if !support.contains(&r) {
        return 0.0;
    }
    params.ln_pmf(r).exp()
}

/// `Pr(H >= threshold)` in floating point. Small universes go through the
/// exact table; larger ones sum the lighter tail in log space, walking away
/// from the mean and stopping once terms no longer register.
pub fn hypergeom_tail_ge_f64(params: &HypergeomParams, threshold: u64) -> f64 {
    let support = params.support();
    let (lo, hi) = (*support.start(), *support.end());
    if threshold <= lo {
        return 1.0;
    }
    if threshold > hi {
        return 0.0;
    }
    if params.exact_path() {
        return to_f64(&hypergeom_tail_ge(params, threshold));
    }
    if threshold as f64 > params.mean_f64() {
        let mut term = params.ln_pmf(threshold).exp();
        let mut acc = CompensatedSum::new();
        let mut r = threshold;
        loop {
            acc.add(term);
            if r == hi || term < acc.value() * 1e-18 {
                break;
            }
            term *= params.step_up(r);
            r += 1;
        }
        acc.value().min(1.0)
    } else {
        let mut r = threshold - 1;
        let mut term = params.ln_pmf(r).exp();
        let mut acc = CompensatedSum::new();
        loop {
            acc.add(term);
            if r == lo || term < acc.value() * 1e-18 {
                break;
            }
            term /= params.step_up(r - 1);
            r -= 1;
        }
        (1.0 - acc.value()).max(0.0)
    }
}

/// One draw of `|S ∩ M|` for a uniform `s`-subset `S` against a fixed
/// `k`-subset `M`.
pub fn hypergeom_sample<R: Rng + ?Sized>(params: &HypergeomParams, rng: &mut R) -> u64 {
    if params.marked == 0 || params.draw == 0 {
        return 0;
    }
    if params.marked == params.n_total {
        return params.draw;
    }
    Hypergeometric::new(params.n_total, params.marked, params.draw)
        .expect("validated parameters")
        .sample(rng)
}
