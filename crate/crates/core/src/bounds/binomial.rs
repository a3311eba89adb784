//! Exact lower tails of `Binom(n, 1/2)` in big-integer arithmetic, compared
//! against the entropy-rate forms of the affected-node and radical-region
//! probabilities.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::{entropy, BoundsError};
use crate::grid::{neighborhood_size, Intolerance};

/// Exact tail probability `count / 2^trials` and its entropy-rate reference.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityBracket {
    /// `Σ C(trials, k)` over the tail.
    pub count: BigUint,
    /// Exponent of the denominator `2^trials`.
    pub trials: u64,
    pub exact: f64,
    pub log2_exact: f64,
    /// `τ′` or `τ″`, the effective fraction in the reference exponent.
    pub tau_param: f64,
    /// log₂ of the constant-free reference expression.
    pub reference_log2: f64,
    /// `log₂(exact / reference)`; bounded in `N` when the bracket holds.
    pub log2_ratio: f64,
}

impl ProbabilityBracket {
    fn new(count: BigUint, trials: u64, tau_param: f64, reference_log2: f64) -> Self {
        let log2_exact = log2_biguint(&count) - trials as f64;
        Self {
            exact: log2_exact.exp2(),
            count,
            trials,
            log2_exact,
            tau_param,
            reference_log2,
            log2_ratio: log2_exact - reference_log2,
        }
    }
}

/// `log₂ n` for arbitrarily large `n` (`-∞` for zero).
pub fn log2_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_f64().expect("64-bit prefix fits f64");
    top.log2() + shift as f64
}

/// Row `n` of Pascal's triangle via the multiplicative recurrence.
pub fn binomial_coefficients(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * BigUint::from(n - k) / BigUint::from(k + 1);
        row.push(c.clone());
    }
    row
}

/// `Σ_{k=0}^{k_max} C(n, k)`, saturating at `2^n` when `k_max ≥ n`.
pub fn lower_tail_count(n: u64, k_max: u64) -> BigUint {
    binomial_coefficients(n)
        .into_iter()
        .take(k_max.min(n) as usize + 1)
        .fold(BigUint::zero(), |acc, c| acc + c)
}

/// Probability that a node is θ-affected in the fair Bernoulli start:
/// `P(Binom(N−1, 1/2) ≤ τN − 2)`, bracketed by `2^{−(1−H(τ′))N}/√N` with
/// `τ′ = (τN − 2)/(N − 1)`.
pub fn p_affected_exact(tau: &Intolerance) -> Result<ProbabilityBracket, BoundsError> {
    let n = tau.neighborhood_size() as u64;
    let t = tau.threshold() as u64;
    if t < 2 {
        return Err(BoundsError::Threshold(format!("τN = {t} < 2")));
    }
    let count = lower_tail_count(n - 1, t - 2);
    let tau_prime = (t as f64 - 2.0) / (n as f64 - 1.0);
    let nf = n as f64;
    let gap = 1.0 - entropy(tau_prime.min(1.0))?;
    let reference_log2 = -gap * nf - 0.5 * nf.log2();
    Ok(ProbabilityBracket::new(
        count,
        n - 1,
        tau_prime,
        reference_log2,
    ))
}

/// `P(Binom(n_s, 1/2) < threshold)` for a real threshold.
pub fn radical_tail(n_s: u64, threshold: f64) -> Result<BigUint, BoundsError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(BoundsError::Threshold(format!(
            "count threshold {threshold}"
        )));
    }
    // largest integer k with k < threshold
    let k_max = (threshold.ceil() as u64).saturating_sub(1);
    Ok(lower_tail_count(n_s, k_max))
}

/// Probability that the radius-`⌊(1+ε′)w⌋` neighborhood is a radical region:
/// fewer than `τ̂(1+ε′)²N` θ-particles among its `N_S` nodes, bracketed by
/// `2^{−(1−H(τ″))(1+ε′)²N}`.
pub fn p_radical_exact(
    w: u32,
    tau: f64,
    eps_prime: f64,
    eps: f64,
) -> Result<ProbabilityBracket, BoundsError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(BoundsError::Domain {
            what: "ε",
            value: eps,
        });
    }
    if !(eps_prime >= 0.0) {
        return Err(BoundsError::Domain {
            what: "ε′",
            value: eps_prime,
        });
    }
    let n = neighborhood_size(w) as f64;
    let radius = ((1.0 + eps_prime) * w as f64).floor() as u64;
    let n_s = (2 * radius + 1) * (2 * radius + 1);
    let tau_hat = crate::regions::tau_hat(tau, n, eps);
    let scaled = (1.0 + eps_prime).powi(2) * n;
    let threshold = tau_hat * scaled;
    let count = radical_tail(n_s, threshold)?;
    let tau_dprime = (threshold.floor() - 1.0) / scaled;
    if !(0.0..=1.0).contains(&tau_dprime) {
        return Err(BoundsError::Threshold(format!("τ″ = {tau_dprime}")));
    }
    let reference_log2 = -(1.0 - entropy(tau_dprime)?) * scaled;
    Ok(ProbabilityBracket::new(
        count,
        n_s,
        tau_dprime,
        reference_log2,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pascal(n: u64) -> Vec<BigUint> {
        let mut row = vec![BigUint::one()];
        for _ in 0..n {
            let mut next = vec![BigUint::one(); row.len() + 1];
            for k in 1..row.len() {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
        }
        row
    }

    #[test]
    fn coefficients_match_pascal_triangle() {
        for n in [0u64, 1, 7, 50, 121, 200] {
            assert_eq!(binomial_coefficients(n), pascal(n));
        }
    }

    #[test]
    fn affected_probability_small_case() {
        let tau = Intolerance::parse("4/9", 1).unwrap();
        let p = p_affected_exact(&tau).unwrap();
        assert_eq!(p.count, BigUint::from(37u32));
        assert_eq!(p.trials, 8);
        assert!((p.exact - 37.0 / 256.0).abs() < 1e-15);
        assert!(p_affected_exact(&Intolerance::parse("1/9", 1).unwrap()).is_err());
    }

    #[test]
    fn full_tail_is_one() {
        let tau = Intolerance::parse("1", 1).unwrap();
        let p = p_affected_exact(&tau).unwrap();
        // τN − 2 = 7 = N − 2 < N − 1: one term short of the full tail
        assert_eq!(p.count, BigUint::from(255u32));
        assert_eq!(lower_tail_count(8, 8), BigUint::from(256u32));
        assert_eq!(lower_tail_count(8, 100), BigUint::from(256u32));
    }

    #[test]
    fn zero_count_term_only() {
        let tail = radical_tail(25, 0.5).unwrap();
        assert_eq!(tail, BigUint::one());
        assert!(radical_tail(25, 0.0).is_err());
        assert_eq!(radical_tail(25, 1.0).unwrap(), BigUint::one());
        assert_eq!(radical_tail(25, 1.01).unwrap(), BigUint::from(26u32));
    }

    #[test]
    fn big_logs() {
        let x = BigUint::one() << 1000u32;
        assert!((log2_biguint(&x) - 1000.0).abs() < 1e-12);
        let y = BigUint::from(37u32);
        assert!((log2_biguint(&y) - 37f64.log2()).abs() < 1e-15);
    }
}
