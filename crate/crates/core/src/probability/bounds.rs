//! Closed-form tail bounds used by the estimator calibration and by the
//! lower-bound certification suites.

use num_rational::BigRational;
use num_traits::Signed;

use super::{HypergeomParams, ProbabilityError};

/// Markov: `Pr(H >= γ) <= ks / (γ n)`.
pub fn markov_tail_bound(params: &HypergeomParams, gamma: f64) -> Result<f64, ProbabilityError> {
    if !(gamma > 0.0) {
        return Err(ProbabilityError::NonPositiveGamma(gamma));
    }
    Ok(params.mean_f64() / gamma)
}

/// [`markov_tail_bound`] in exact rationals.
pub fn markov_tail_bound_exact(
    params: &HypergeomParams,
    gamma: &BigRational,
) -> Result<BigRational, ProbabilityError> {
    if !gamma.is_positive() {
        return Err(ProbabilityError::NonPositiveGamma(super::exact::to_f64(gamma)));
    }
    Ok(params.mean() / gamma)
}

/// Chernoff-type lower tail: `Pr(H <= ξ) <= exp(-(μ - ξ)² / (2μ))`, `μ = ks/n`,
/// valid only for `ξ < μ`.
pub fn chernoff_lower_tail_bound(params: &HypergeomParams, xi: f64) -> Result<f64, ProbabilityError> {
    let mu = params.mean_f64();
    // Compare against the exact mean so that ξ == μ is caught even when μ is
    // not representable.
    let below = super::exact::rational_from_f64(xi) < params.mean();
    if !below || xi.is_nan() {
        return Err(ProbabilityError::XiNotBelowMean { xi, mean: mu });
    }
    let gap = mu - xi;
    Ok((-(gap * gap) / (2.0 * mu)).exp())
}

/// The two quantities in the inequality `0 <= e^{-1/c} - (1 - 1/(cx))^x <= A/x`
/// with `A = 5 e^{-1/c} / c²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcGap {
    pub gap: f64,
    pub bound: f64,
}

/// Evaluates both sides of the `e^{-1/c}` approach inequality.
///
/// The gap is `-e^{-1/c} · expm1(x·(ln(1-u) + u))` with `u = 1/(cx)`; the
/// inner `ln(1-u) + u` comes from its series when `u` is small so that the
/// cancellation does not eat the result at large `x`.
pub fn ec_gap(c: f64, x: f64) -> Result<EcGap, ProbabilityError> {
    if !(c >= 1.0) || !(x >= 2.0) || !c.is_finite() || !x.is_finite() {
        return Err(ProbabilityError::EcDomain { c, x });
    }
    let u = 1.0 / (c * x);
    let inner = if u < 1e-3 {
        // ln(1-u) + u = -Σ_{i>=2} u^i / i
        let mut acc = 0.0;
        let mut pow = u * u;
        let mut i = 2.0;
        while pow / i > 1e-20 * (u * u / 2.0) {
            acc -= pow / i;
            pow *= u;
            i += 1.0;
        }
        acc
    } else {
        (-u).ln_1p() + u
    };
    let limit = (-1.0 / c).exp();
    let gap = -limit * (x * inner).exp_m1();
    let bound = 5.0 * limit / (c * c) / x;
    Ok(EcGap { gap, bound })
}

/// Which closed form of the averaged-Bernoulli upper tail to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChernoffForm {
    /// `(e μ / Γ)^{Γ t}`.
    #[default]
    Weak,
    /// `(e^{1 - μ/Γ} μ / Γ)^{Γ t}`.
    Sharp,
}

/// Upper bound on `Pr[X̄ >= Γ]` for the mean `X̄` of `t` independent 0/1
/// variables whose expectation is at most `mu`.
pub fn empirical_mean_upper_tail_bound(
    mu: f64,
    gamma: f64,
    t: u64,
    form: ChernoffForm,
) -> Result<f64, ProbabilityError> {
    if !(mu > 0.0) || !(gamma >= mu) || t == 0 {
        return Err(ProbabilityError::MeanTailDomain { mu, gamma, t });
    }
    let ratio = mu / gamma;
    let ln_base = match form {
        ChernoffForm::Weak => 1.0 + ratio.ln(),
        ChernoffForm::Sharp => 1.0 - ratio + ratio.ln(),
    };
    Ok((gamma * t as f64 * ln_base).exp())
}
