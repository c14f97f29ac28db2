//! Imitation rules: nondecreasing maps `q(z)` from the payoff advantage `z`
//! of the observed opponent to the probability of copying its network.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::model::NetworkParams;

/// Number of grid points used to spot-check user-supplied maps.
const PROBE_POINTS: usize = 2001;

#[derive(Clone)]
pub enum ImitationRule {
    /// `q(z) = min(1, scale·[z]₊)`. Noise-free: never copies a worse-off
    /// opponent. The clamp is inactive whenever `scale·z ≤ 1`, which holds
    /// for all payoff gaps in realistic regimes (gaps are ≪ 1).
    PairwiseProportional {
        scale: f64,
    },
    /// `q(z) = 1 / (1 + e^{−βz})`. Noisy for every finite β; `β = 0` is
    /// pure noise (`q ≡ ½`).
    Fermi {
        beta: f64,
    },
    Custom(CustomRule),
}

/// A user-supplied nondecreasing map into `[0, 1]`.
#[derive(Clone)]
pub struct CustomRule {
    name: String,
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    noise_free: bool,
}

/// How the Fermi intensity is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSpec {
    /// Dimensionless intensity relative to the payoff scale `β₀`:
    /// `β = ratio / β₀`, so the largest exponent `β·|π_P^k − π_S|` equals
    /// `ratio`.
    Ratio(f64),
    Absolute(f64),
}

impl ImitationRule {
    pub fn pairwise_proportional(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(
                "scale",
                format!("must be finite and > 0, got {scale}"),
            ));
        }
        Ok(Self::PairwiseProportional { scale })
    }

    pub fn fermi(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(invalid(
                "beta",
                format!("must be finite and >= 0, got {beta}"),
            ));
        }
        Ok(Self::Fermi { beta })
    }

    /// Fermi rule with intensity resolved against `params` and `n`.
    pub fn fermi_from_spec(spec: BetaSpec, params: &NetworkParams, n: usize) -> Result<Self> {
        Self::fermi(spec.resolve(params, n)?)
    }

    /// Wraps `map` after checking, on a grid over `[-probe_span, probe_span]`,
    /// that it is nondecreasing and stays within `[0, 1]`.
    pub fn custom<F>(name: impl Into<String>, map: F, probe_span: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(probe_span.is_finite() && probe_span > 0.0) {
            return Err(invalid("probe_span", "must be finite and > 0"));
        }
        let mut previous = f64::NEG_INFINITY;
        let mut noise_free = true;
        for i in 0..PROBE_POINTS {
            let z = -probe_span + 2.0 * probe_span * i as f64 / (PROBE_POINTS - 1) as f64;
            let q = map(z);
            if !(0.0..=1.0).contains(&q) {
                return Err(invalid(
                    "custom rule",
                    format!("q({z}) = {q} outside [0, 1]"),
                ));
            }
            if q < previous {
                return Err(invalid("custom rule", format!("decreasing at z = {z}")));
            }
            if z <= 0.0 && q > 0.0 {
                noise_free = false;
            }
            previous = q;
        }
        Ok(Self::Custom(CustomRule {
            name: name.into(),
            map: Arc::new(map),
            noise_free,
        }))
    }

    /// `q(z)`.
    pub fn imitation_probability(&self, payoff_diff: f64) -> f64 {
        match self {
            Self::PairwiseProportional { scale } => (scale * payoff_diff.max(0.0)).min(1.0),
            Self::Fermi { beta } => logistic(beta * payoff_diff),
            Self::Custom(rule) => (rule.map)(payoff_diff),
        }
    }

    /// `q(z) = 0` for all `z ≤ 0`.
    pub fn is_noise_free(&self) -> bool {
        match self {
            Self::PairwiseProportional { .. } => true,
            Self::Fermi { .. } => false,
            Self::Custom(rule) => rule.noise_free,
        }
    }
}

impl fmt::Debug for ImitationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PairwiseProportional { scale } => f
                .debug_struct("PairwiseProportional")
                .field("scale", scale)
                .finish(),
            Self::Fermi { beta } => f.debug_struct("Fermi").field("beta", beta).finish(),
            Self::Custom(rule) => f
                .debug_struct("Custom")
                .field("name", &rule.name)
                .field("noise_free", &rule.noise_free)
                .finish(),
        }
    }
}

impl fmt::Display for ImitationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PairwiseProportional { scale } => write!(f, "proportional(scale={scale})"),
            Self::Fermi { beta } => write!(f, "fermi(beta={beta})"),
            Self::Custom(rule) => write!(f, "custom({})", rule.name),
        }
    }
}

impl BetaSpec {
    pub fn resolve(&self, params: &NetworkParams, n: usize) -> Result<f64> {
        match *self {
            Self::Absolute(beta) => Ok(beta),
            Self::Ratio(ratio) => {
                if !(ratio.is_finite() && ratio >= 0.0) {
                    return Err(invalid(
                        "beta_ratio",
                        format!("must be finite and >= 0, got {ratio}"),
                    ));
                }
                if ratio == 0.0 {
                    return Ok(0.0);
                }
                let scale = beta_reference(params, n)?;
                if scale == 0.0 {
                    return Err(invalid("beta_ratio", "payoff scale beta_0 is zero"));
                }
                Ok(ratio / scale)
            }
        }
    }
}

/// `β₀ = max_k |π_P^k − π_S|` over `k ∈ 0..=n`.
pub fn beta_reference(params: &NetworkParams, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    (0..=n).try_fold(
        0.0_f64,
        |acc, k| Ok(acc.max(params.payoff_gap(k, n)?.abs())),
    )
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> NetworkParams {
        NetworkParams::calibrated(100.0, 30.0, 1.0, 0.68).unwrap()
    }

    #[test]
    fn fermi_at_origin_is_half() {
        for beta in [0.0, 0.5, 3.0, 1e4] {
            assert_eq!(
                ImitationRule::fermi(beta)
                    .unwrap()
                    .imitation_probability(0.0),
                0.5
            );
        }
        let flat = ImitationRule::fermi(0.0).unwrap();
        for z in [-1e3, -0.2, 0.7, 1e6] {
            assert_eq!(flat.imitation_probability(z), 0.5);
        }
    }

    #[test]
    fn proportional_cases() {
        let rule = ImitationRule::pairwise_proportional(1.0).unwrap();
        assert_eq!(rule.imitation_probability(-0.3), 0.0);
        assert_eq!(rule.imitation_probability(0.0), 0.0);
        assert_eq!(rule.imitation_probability(0.25), 0.25);
        assert_eq!(rule.imitation_probability(3.0), 1.0);
        assert!(rule.is_noise_free());
        assert!(ImitationRule::pairwise_proportional(0.0).is_err());
        assert!(ImitationRule::fermi(-1.0).is_err());
    }

    #[test]
    fn custom_rules_are_probed() {
        let step =
            ImitationRule::custom("step", |z: f64| if z > 0.0 { 0.8 } else { 0.0 }, 1.0).unwrap();
        assert!(step.is_noise_free());
        assert_eq!(step.imitation_probability(0.1), 0.8);

        let noisy =
            ImitationRule::custom("affine", |z: f64| (0.5 + z / 4.0).clamp(0.0, 1.0), 1.0).unwrap();
        assert!(!noisy.is_noise_free());

        assert!(ImitationRule::custom("decreasing", |z: f64| 0.5 - z / 4.0, 1.0).is_err());
        assert!(ImitationRule::custom("too big", |z: f64| 2.0 + z, 0.5).is_err());
    }

    #[test]
    fn beta_reference_matches_scan() {
        let p = params();
        for n in [1, 2, 10, 57] {
            let brute = (0..=n)
                .map(|k| (p.utility_primary(k, n).unwrap() - p.utility_secondary()).abs())
                .fold(0.0, f64::max);
            assert_eq!(beta_reference(&p, n).unwrap(), brute);
            // |π_P^k − π_S| is largest at an endpoint
            let ends = p
                .payoff_gap(0, n)
                .unwrap()
                .abs()
                .max(p.payoff_gap(n, n).unwrap().abs());
            assert_eq!(beta_reference(&p, n).unwrap(), ends);
        }
        assert!(beta_reference(&p, 10).unwrap() >= p.payoff_gap(0, 10).unwrap().abs());
    }

    #[test]
    fn ratio_spec_normalises_exponent() {
        let p = params();
        let beta = BetaSpec::Ratio(10.0).resolve(&p, 10).unwrap();
        assert!((beta * beta_reference(&p, 10).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(BetaSpec::Ratio(0.0).resolve(&p, 10).unwrap(), 0.0);
        assert_eq!(BetaSpec::Absolute(3.5).resolve(&p, 10).unwrap(), 3.5);
        assert!(BetaSpec::Ratio(-1.0).resolve(&p, 10).is_err());
    }

    proptest! {
        #[test]
        fn fermi_complement(beta in 0.0..1e3f64, z in -5.0..5.0f64) {
            let rule = ImitationRule::fermi(beta).unwrap();
            let sum = rule.imitation_probability(z) + rule.imitation_probability(-z);
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rules_are_monotone(a in -2.0..2.0f64, b in -2.0..2.0f64, beta in 0.0..50.0f64, scale in 0.01..10.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for rule in [ImitationRule::fermi(beta).unwrap(), ImitationRule::pairwise_proportional(scale).unwrap()] {
                let (qlo, qhi) = (rule.imitation_probability(lo), rule.imitation_probability(hi));
                prop_assert!(qlo <= qhi);
                prop_assert!((0.0..=1.0).contains(&qlo) && (0.0..=1.0).contains(&qhi));
            }
        }

        #[test]
        fn noise_classification(z in -3.0..3.0f64, beta in 1e-3..50.0f64) {
            let fermi = ImitationRule::fermi(beta).unwrap();
            prop_assert!(fermi.imitation_probability(z) > 0.0);
            let prop = ImitationRule::pairwise_proportional(1.0).unwrap();
            if z <= 0.0 {
                prop_assert_eq!(prop.imitation_probability(z), 0.0);
            } else {
                prop_assert!(prop.imitation_probability(z) > 0.0);
            }
        }
    }
}
