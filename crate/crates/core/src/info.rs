//! Information-theoretic primitives over action distributions.
//!
//! Discrete entropies are measured in bits. The Gaussian differential entropy
//! is measured in nats. Transfer entropy from an opponent's history to the
//! ego action is the entropy of the marginal (opponent-blind) policy minus the
//! entropy of the full (opponent-conditioned) policy.

use smallvec::SmallVec;

use crate::error::{invalid, Result};

const SUM_TOLERANCE: f64 = 1e-9;
const ENTROPY_SUM_TOLERANCE: f64 = 1e-6;

/// A probability vector over a finite action set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: SmallVec<[f64; 4]>,
}

impl ActionDistribution {
    /// Builds a distribution, checking non-negativity and normalisation.
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("empty distribution"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(invalid(format!("probability {p} is not a finite non-negative value")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { probs: probs.into() })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform distribution over an empty set");
        Self { probs: std::iter::repeat_n(1.0 / len as f64, len).collect() }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Shannon entropy in bits. Infallible because the constructor already
    /// enforced normalisation.
    pub fn entropy(&self) -> EntropyBits {
        EntropyBits(entropy_bits(&self.probs))
    }

    /// Draws an action index by inverse-CDF sampling from a uniform variate
    /// in `[0, 1)`.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding can leave the cumulative sum a hair below 1.
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(self.probs.len() - 1)
    }
}

/// Entropy measured in bits (log base 2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntropyBits(pub f64);

impl EntropyBits {
    pub fn bits(self) -> f64 {
        self.0
    }
}

/// Transfer entropy in bits. Per-state values may be negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TransferEntropyBits(pub f64);

impl TransferEntropyBits {
    pub fn bits(self) -> f64 {
        self.0
    }
}

/// Dimension and covariance determinant of a Gaussian policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPolicyParams {
    dimension: usize,
    cov_determinant: f64,
}

impl GaussianPolicyParams {
    pub fn new(dimension: usize, cov_determinant: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("gaussian dimension must be positive"));
        }
        if !(cov_determinant.is_finite() && cov_determinant > 0.0) {
            return Err(invalid(format!(
                "covariance determinant must be positive, got {cov_determinant}"
            )));
        }
        Ok(Self { dimension, cov_determinant })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cov_determinant(&self) -> f64 {
        self.cov_determinant
    }
}

/// Softmax at temperature 1, stabilised by subtracting the maximum.
pub fn softmax(q_values: &[f64]) -> Result<ActionDistribution> {
    if q_values.is_empty() {
        return Err(invalid("softmax of an empty vector"));
    }
    if let Some(q) = q_values.iter().find(|q| !q.is_finite()) {
        return Err(invalid(format!("softmax input {q} is not finite")));
    }
    Ok(softmax_finite(q_values))
}

/// Softmax for inputs already known to be finite and non-empty.
pub(crate) fn softmax_finite(q_values: &[f64]) -> ActionDistribution {
    let max = q_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: SmallVec<[f64; 4]> = q_values.iter().map(|q| (q - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    ActionDistribution { probs }
}

fn entropy_bits(probs: &[f64]) -> f64 {
    // 0 log 0 := 0
    -probs.iter().filter(|p| **p > 0.0).map(|p| p * p.log2()).sum::<f64>()
}

/// Shannon entropy `-Σ p log2 p` of a raw probability vector.
pub fn shannon_entropy(probs: &[f64]) -> Result<EntropyBits> {
    if probs.is_empty() {
        return Err(invalid("entropy of an empty distribution"));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(invalid(format!("probability {p} is not a finite non-negative value")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > ENTROPY_SUM_TOLERANCE {
        return Err(invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(EntropyBits(entropy_bits(probs)))
}

/// `H(p_minus) - H(p_plus)`: how much conditioning on the opponent's history
/// sharpens the ego policy.
pub fn transfer_entropy(
    p_minus: &ActionDistribution,
    p_plus: &ActionDistribution,
) -> Result<TransferEntropyBits> {
    if p_minus.len() != p_plus.len() {
        return Err(invalid(format!(
            "distributions have different lengths: {} vs {}",
            p_minus.len(),
            p_plus.len()
        )));
    }
    Ok(TransferEntropyBits(p_minus.entropy().0 - p_plus.entropy().0))
}

/// Divides by the largest attainable transfer entropy, `log2(action_count)`.
/// The sign is kept, so the result lies in `[-1, 1]`.
pub fn normalized_te(te: TransferEntropyBits, action_count: usize) -> Result<f64> {
    if action_count < 2 {
        return Err(invalid(format!("action count must be at least 2, got {action_count}")));
    }
    Ok(te.0 / (action_count as f64).log2())
}

/// Differential entropy of a D-dimensional Gaussian, in nats:
/// `D/2 (1 + ln 2π) + 1/2 ln|Σ|`.
pub fn gaussian_differential_entropy(params: GaussianPolicyParams) -> f64 {
    let d = params.dimension as f64;
    0.5 * d * (1.0 + (2.0 * std::f64::consts::PI).ln()) + 0.5 * params.cov_determinant.ln()
}

/// Monte-Carlo estimate of an opponent-blind policy: the mean of the policy's
/// action distributions over `n_samples` draws of the source variable.
pub fn mc_marginal_policy<O, S, P, F>(
    policy: P,
    partial_obs: &O,
    mut source_sampler: F,
    n_samples: usize,
) -> Result<ActionDistribution>
where
    O: ?Sized,
    P: Fn(&O, &S) -> ActionDistribution,
    F: FnMut() -> S,
{
    if n_samples < 1 {
        return Err(invalid("monte-carlo marginalisation needs at least one sample"));
    }
    let mut acc: SmallVec<[f64; 4]> = SmallVec::new();
    for _ in 0..n_samples {
        let source = source_sampler();
        let dist = policy(partial_obs, &source);
        if acc.is_empty() {
            acc.resize(dist.len(), 0.0);
        } else if acc.len() != dist.len() {
            return Err(invalid("policy returned distributions of differing lengths"));
        }
        for (a, p) in acc.iter_mut().zip(dist.probs()) {
            *a += p;
        }
    }
    let n = n_samples as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    Ok(ActionDistribution { probs: acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG2_3: f64 = 1.584_962_500_721_156;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn softmax_symmetric_and_shift_invariant() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for x in p.probs() {
            assert!(close(*x, 1.0 / 3.0, 1e-15));
        }
        let a = softmax(&[5.0, 5.0, 6.0]).unwrap();
        let b = softmax(&[0.0, 0.0, 1.0]).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!(close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn softmax_matches_high_precision_values() {
        // exp(q) / Σ exp(q) evaluated with 30-digit arithmetic.
        let p = softmax(&[0.0, 0.0, 1.0]).unwrap();
        assert!(close(p.probs()[0], 0.211_941_557_617_085_45, 1e-14));
        assert!(close(p.probs()[1], 0.211_941_557_617_085_45, 1e-14));
        assert!(close(p.probs()[2], 0.576_116_884_765_829_1, 1e-14));
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(softmax(&[]).is_err());
        assert!(softmax(&[0.0, f64::NAN]).is_err());
        assert!(softmax(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn entropy_reference_points() {
        assert!(close(shannon_entropy(&[1.0 / 3.0; 3]).unwrap().bits(), 1.585, 5e-4));
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]).unwrap().bits(), 0.0);
        assert!(close(shannon_entropy(&[0.5, 0.5, 0.0]).unwrap().bits(), 1.0, 1e-15));
        assert!(shannon_entropy(&[0.5, 0.4, 0.0]).is_err());
        assert!(shannon_entropy(&[]).is_err());
    }

    #[test]
    fn transfer_entropy_cases() {
        let u = ActionDistribution::uniform(3);
        let d = ActionDistribution::new(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(transfer_entropy(&u, &u).unwrap().bits(), 0.0);
        assert!(close(transfer_entropy(&u, &d).unwrap().bits(), LOG2_3, 1e-12));
        assert!(close(transfer_entropy(&d, &u).unwrap().bits(), -LOG2_3, 1e-12));
        let two = ActionDistribution::uniform(2);
        assert!(transfer_entropy(&u, &two).is_err());
    }

    #[test]
    fn normalized_te_cases() {
        assert!(close(normalized_te(TransferEntropyBits(LOG2_3), 3).unwrap(), 1.0, 1e-12));
        assert_eq!(normalized_te(TransferEntropyBits(0.0), 3).unwrap(), 0.0);
        // -0.7925 / 1.585 evaluated directly
        assert!(close(normalized_te(TransferEntropyBits(-0.7925), 3).unwrap(), -0.5, 1e-4));
        assert!(normalized_te(TransferEntropyBits(0.1), 1).is_err());
    }

    #[test]
    fn gaussian_entropy_reference_points() {
        let h = |d, det| gaussian_differential_entropy(GaussianPolicyParams::new(d, det).unwrap());
        assert!(close(h(1, 1.0), 1.418_938_533_204_672_7, 1e-12));
        assert!(close(h(2, 1.0), 2.837_877_066_409_345_5, 1e-12));
        assert!(close(h(1, 4.0), 2.112_085_713_764_618, 1e-12));
        assert!(GaussianPolicyParams::new(1, 0.0).is_err());
        assert!(GaussianPolicyParams::new(1, -2.0).is_err());
        assert!(GaussianPolicyParams::new(0, 1.0).is_err());
    }

    #[test]
    fn gaussian_entropy_matches_numeric_integral() {
        // -∫ p ln p for N(0, σ²) by the midpoint rule; independent of the closed form.
        let var: f64 = 4.0;
        let pdf = |x: f64| (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let (lo, hi, n) = (-40.0, 40.0, 400_000);
        let dx = (hi - lo) / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let p = pdf(lo + (i as f64 + 0.5) * dx);
                if p > 0.0 {
                    -p * p.ln() * dx
                } else {
                    0.0
                }
            })
            .sum();
        let closed = gaussian_differential_entropy(GaussianPolicyParams::new(1, var).unwrap());
        assert!(close(integral, closed, 1e-8), "{integral} vs {closed}");
    }

    #[test]
    fn mc_marginal_with_source_free_policy_is_exact() {
        let fixed = ActionDistribution::new(&[0.2, 0.3, 0.5]).unwrap();
        let policy = |_: &(), _: &u8| fixed.clone();
        for n in [1, 7, 100] {
            let est = mc_marginal_policy(policy, &(), || 0u8, n).unwrap();
            for (a, b) in est.probs().iter().zip(fixed.probs()) {
                assert!(close(*a, *b, 1e-15));
            }
        }
    }

    #[test]
    fn mc_marginal_requires_samples() {
        let policy = |_: &(), _: &u8| ActionDistribution::uniform(3);
        assert!(mc_marginal_policy(policy, &(), || 0u8, 0).is_err());
    }

    #[test]
    fn sample_index_inverse_cdf() {
        let d = ActionDistribution::new(&[0.25, 0.0, 0.75]).unwrap();
        assert_eq!(d.sample_index(0.0), 0);
        assert_eq!(d.sample_index(0.2499), 0);
        assert_eq!(d.sample_index(0.25), 2);
        assert_eq!(d.sample_index(0.999_999_999), 2);
    }
}
