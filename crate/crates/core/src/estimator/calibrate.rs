use crate::probability::{ec_gap, p_lambda, p_lambda_poisson_limit};

use super::{EstimatorConfig, EstimatorError};

/// Grid levels kept below `λ/(cU)`.
pub const SLACK_LEVELS: usize = 8;
/// Doubling steps in the `d` scan used for `Δ` and `d′`.
pub const DOUBLING_STEPS: u32 = 30;
/// `Δ` is this fraction of the smallest observed gap.
pub const DELTA_SAFETY: f64 = 0.9;
/// `t = ⌈(T_FACTOR/Δ²) ln(4(G+1)/δ)⌉`: Hoeffding for error `Δ/8` at
/// confidence `δ/(2(G+1))` per level.
pub const T_FACTOR: f64 = 32.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedConstants {
    pub lambda: u32,
    pub alpha: f64,
    /// `min(α, 2)`, used for every constant except the grid step.
    pub alpha_eff: f64,
    pub c: f64,
    pub d_prime: u64,
    pub delta_alpha: f64,
    /// `P_λ(d′, λ/(cd′))`.
    pub reference: f64,
    /// `lim_x P_λ(x, λ/(cx))`.
    pub limit: f64,
    pub t: u64,
    /// `p_0 < … < p_G`; `p_i = λ α^{(i−G₀)/4} / (cU)`, clamped to 1.
    pub grid: Vec<f64>,
    pub slack_levels: usize,
    pub u: u64,
}

impl CalibratedConstants {
    /// `c′ = α_eff^{−(λ−1)/4}`.
    pub fn c_prime(&self) -> f64 {
        self.alpha_eff.powf(-(f64::from(self.lambda) - 1.0) / 4.0)
    }

    pub fn levels(&self) -> usize {
        self.grid.len()
    }

    /// `t (G + 1)`.
    pub fn main_queries(&self) -> u64 {
        self.t * self.grid.len() as u64
    }

    /// The matched scale `λ/(cd)`.
    pub fn matched_p(&self, d: f64) -> f64 {
        f64::from(self.lambda) / (self.c * d)
    }

    /// `D` reported when level `i1` is the first to pass: `λ/(c p_{i1−1})`
    /// before rounding.
    pub fn raw_estimate(&self, i1: usize) -> f64 {
        let exp = (self.slack_levels as f64 + 1.0 - i1 as f64) / 4.0;
        self.u as f64 * self.alpha.powf(exp)
    }
}

/// `c = 2λ/(1 − α_eff^{−1/4})` for `λ >= 2`, `c = α_eff` for `λ = 1`.
pub fn query_scale(lambda: u32, alpha_eff: f64) -> f64 {
    if lambda == 1 {
        alpha_eff
    } else {
        2.0 * f64::from(lambda) / (1.0 - alpha_eff.powf(-0.25))
    }
}

/// `g(d) = P_λ(d, λ/(cd)) − P_λ(d, α_eff^{−1/2} λ/(cd))`.
fn gap(lambda: u32, c: f64, alpha_eff: f64, d: u64) -> f64 {
    let p = f64::from(lambda) / (c * d as f64);
    p_lambda(d, p, lambda) - p_lambda(d, p / alpha_eff.sqrt(), lambda)
}

pub fn calibrate(config: &EstimatorConfig) -> Result<CalibratedConstants, EstimatorError> {
    config.validate()?;
    let lambda = config.lambda;
    let lf = f64::from(lambda);
    let alpha = config.alpha;
    let alpha_eff = alpha.min(2.0);
    let c = query_scale(lambda, alpha_eff);

    let d0 = u64::from(2 * lambda).max(4);
    let ds: Vec<u64> = (0..=DOUBLING_STEPS).map(|k| d0 << k).collect();
    let limit = p_lambda_poisson_limit(lambda, c);
    let limit_gap = limit - p_lambda_poisson_limit(lambda, c * alpha_eff.sqrt());
    let min_gap = ds
        .iter()
        .map(|&d| gap(lambda, c, alpha_eff, d))
        .fold(limit_gap, f64::min);
    let delta_alpha = DELTA_SAFETY * min_gap;
    if !(delta_alpha > 0.0) {
        return Err(EstimatorError::CalibrationFailure(delta_alpha));
    }

    // Smallest grid d from which every larger grid point is within Δ/16 of
    // the limit. For λ = 1 the analytic tail bound A/x must also hold at the
    // end of the scan so that it covers everything beyond it.
    let tol = delta_alpha / 16.0;
    let within: Vec<bool> = ds
        .iter()
        .map(|&d| (p_lambda(d, f64::from(lambda) / (c * d as f64), lambda) - limit).abs() <= tol)
        .collect();
    let tail_ok = lambda != 1 || {
        let last = *ds.last().unwrap() as f64;
        ec_gap(c, last).map(|g| g.bound <= tol).unwrap_or(false)
    };
    let first_from = (0..ds.len()).rev().take_while(|&k| within[k]).last();
    let d_prime = match (first_from, tail_ok) {
        (Some(k), true) => ds[k],
        _ => return Err(EstimatorError::CalibrationFailure(delta_alpha)),
    };
    let reference = p_lambda(d_prime, lf / (c * d_prime as f64), lambda);

    let u = config.u as f64;
    let target = (lf * alpha.powf(0.25) / (c * config.l as f64)).min(1.0);
    let base = lf / (c * u);
    let steps = (4.0 * (target / base).ln() / alpha.ln() - 1e-9).ceil().max(0.0) as usize;
    let g = SLACK_LEVELS + steps;
    let grid: Vec<f64> = (0..=g)
        .map(|i| (base * alpha.powf((i as f64 - SLACK_LEVELS as f64) / 4.0)).min(1.0))
        .collect();

    let levels = grid.len() as f64;
    let t = ((T_FACTOR / (delta_alpha * delta_alpha)) * (4.0 * levels / config.delta).ln()).ceil() as u64;

    Ok(CalibratedConstants {
        lambda,
        alpha,
        alpha_eff,
        c,
        d_prime,
        delta_alpha,
        reference,
        limit,
        t,
        grid,
        slack_levels: SLACK_LEVELS,
        u: config.u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: u32, alpha: f64) -> EstimatorConfig {
        EstimatorConfig::new(10_000, lambda, alpha, lambda.into(), 10_000, 0.1).unwrap()
    }

    #[test]
    fn query_scale_examples() {
        assert_eq!(calibrate(&cfg(1, 2.0)).unwrap().c, 2.0);
        let c2 = calibrate(&cfg(2, 2.0)).unwrap().c;
        assert!((c2 - 4.0 / (1.0 - 2f64.powf(-0.25))).abs() < 1e-12);
        assert!((c2 - 25.1409).abs() < 1e-4);
        // α > 2 derives constants from α_eff = 2.
        assert_eq!(calibrate(&cfg(1, 4.0)).unwrap().c, 2.0);
        assert_eq!(calibrate(&cfg(2, 7.0)).unwrap().c, c2);
        assert!((p_lambda_poisson_limit(1, 1.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn constants_invariants() {
        for lambda in 1..=3 {
            for alpha in [1.5, 2.0, 4.0] {
                let k = calibrate(&cfg(lambda, alpha)).unwrap();
                assert!(k.c >= 1.0 && k.delta_alpha > 0.0);
                assert!(k.grid.windows(2).all(|w| w[0] < w[1]));
                assert!(k.grid.iter().all(|&p| p > 0.0 && p <= 1.0));
                let lo = f64::from(lambda) / (k.c * 10_000.0 * alpha.powf(0.25));
                let hi = (f64::from(lambda) * alpha.powf(0.25) / (k.c * f64::from(lambda))).min(1.0);
                assert!(k.grid[0] <= lo && *k.grid.last().unwrap() >= hi * (1.0 - 1e-12));
                assert!(k.d_prime >= u64::from(2 * lambda).max(4));
                assert!(k.c_prime() <= 1.0);
            }
        }
    }

    #[test]
    fn reference_close_to_limit() {
        for lambda in 1..=3 {
            let k = calibrate(&cfg(lambda, 2.0)).unwrap();
            assert!((k.reference - k.limit).abs() <= k.delta_alpha / 16.0);
            for e in 0..12 {
                let d = k.d_prime << e;
                let v = p_lambda(d, k.matched_p(d as f64), lambda);
                assert!((v - k.reference).abs() <= k.delta_alpha / 8.0);
            }
        }
    }

    #[test]
    fn slack_level_lands_on_matched_scale() {
        let k = calibrate(&cfg(1, 4.0)).unwrap();
        assert!((k.grid[SLACK_LEVELS] - k.matched_p(10_000.0)).abs() < 1e-15);
        assert!((k.raw_estimate(SLACK_LEVELS + 1) - 10_000.0).abs() < 1e-9);
    }
}
