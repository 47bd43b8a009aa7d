//! Hit probability of a random `p`-query under a `λ`-threshold oracle.
//!
//! A `p`-query includes every item independently with probability `p`, so
//! against `d` defectives it catches `Binomial(d, p)` of them and fires when
//! that count reaches `λ`.

use super::exact::CompensatedSum;

/// `P_λ(d, p)` as a value type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdHitProbability {
    pub d: u64,
    pub p: f64,
    pub lambda: u32,
}

impl ThresholdHitProbability {
    pub fn new(d: u64, p: f64, lambda: u32) -> Self {
        Self { d, p, lambda }
    }

    pub fn value(&self) -> f64 {
        p_lambda(self.d, self.p, self.lambda)
    }
}

/// `Pr[Binomial(d, p) >= λ]`.
///
/// `λ = 1` uses `-expm1(d·ln(1-p))`. Otherwise the routine sums the tail that
/// carries less mass: the upper tail directly when `dp < λ` (its terms decay
/// geometrically and are truncated once negligible), else the `λ` lower terms
/// and takes the complement. Terms are formed in log space so that very large
/// `d` neither overflows nor underflows.
pub fn p_lambda(d: u64, p: f64, lambda: u32) -> f64 {
    let lambda = u64::from(lambda.max(1));
    if lambda > d || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_q = (-p).ln_1p();
    if lambda == 1 {
        return -(d as f64 * ln_q).exp_m1();
    }
    let df = d as f64;
    let ln_odds = p.ln() - ln_q;
    // ln of the Binomial(d, p) mass at i, built incrementally.
    let ln_term_at = |i: u64| -> f64 {
        let mut acc = (df - i as f64) * ln_q + i as f64 * p.ln();
        for j in 0..i {
            acc += ((df - j as f64) / (j as f64 + 1.0)).ln();
        }
        acc
    };
    if df * p < lambda as f64 {
        let mut i = lambda;
        let mut term = ln_term_at(i).exp();
        let mut acc = CompensatedSum::new();
        loop {
            acc.add(term);
            if i == d || term <= acc.value() * 1e-18 {
                break;
            }
            term *= (df - i as f64) / (i as f64 + 1.0) * (p / (1.0 - p));
            i += 1;
        }
        acc.value().clamp(0.0, 1.0)
    } else {
        let mut acc = CompensatedSum::new();
        let mut ln_term = df * ln_q;
        for i in 0..lambda {
            acc.add(ln_term.exp());
            ln_term += ((df - i as f64) / (i as f64 + 1.0)).ln() + ln_odds;
        }
        (1.0 - acc.value()).clamp(0.0, 1.0)
    }
}

/// `lim_{x→∞} P_λ(x, λ/(c x)) = Pr[Poisson(λ/c) >= λ]`.
pub fn p_lambda_poisson_limit(lambda: u32, c: f64) -> f64 {
    let lambda = u64::from(lambda.max(1));
    if !(c > 0.0) {
        return f64::NAN;
    }
    let mu = lambda as f64 / c;
    if mu == 0.0 {
        return 0.0;
    }
    if lambda == 1 {
        return -(-mu).exp_m1();
    }
    if mu < lambda as f64 {
        let mut ln_term = -mu + lambda as f64 * mu.ln();
        for i in 1..=lambda {
            ln_term -= (i as f64).ln();
        }
        let mut term = ln_term.exp();
        let mut i = lambda;
        let mut acc = CompensatedSum::new();
        loop {
            acc.add(term);
            if term <= acc.value() * 1e-18 {
                break;
            }
            i += 1;
            term *= mu / i as f64;
        }
        acc.value().clamp(0.0, 1.0)
    } else {
        let mut acc = CompensatedSum::new();
        let mut term = (-mu).exp();
        for i in 0..lambda {
            acc.add(term);
            term *= mu / (i as f64 + 1.0);
        }
        (1.0 - acc.value()).clamp(0.0, 1.0)
    }
}
