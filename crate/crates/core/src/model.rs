//! Network economics: utilities of primary and secondary users, the
//! equilibrium traffic split, total delay and Price-of-Anarchy metrics.
//!
//! Utilities are signed (`π = -cost`) throughout. A primary user pays the
//! M|M|1 delay of the primary network under its own load plus `p₁`; a
//! secondary user pays the delay at the full arrival rate plus `p₂`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on `Σψ = 1` accepted by [`NetworkParams::expected_poa`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// The queueing and pricing environment shared by all users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    capacity: f64,
    arrival: f64,
    delay_weight: f64,
    price_primary: f64,
    price_secondary: f64,
}

/// Equilibrium traffic of the primary network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumInfo {
    /// `λ_P*`, in the same rate units as the arrival rate.
    pub rate_primary: f64,
    /// `x_P* = λ_P* / λ`.
    pub share_primary: f64,
    /// Set when the interior solution fell outside `[0, λ]` and was clamped.
    pub boundary_flag: bool,
}

/// Minimiser of the total delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SocialOptimum {
    pub share: f64,
    pub total_delay: f64,
}

impl NetworkParams {
    pub fn new(
        capacity: f64,
        arrival: f64,
        delay_weight: f64,
        price_primary: f64,
        price_secondary: f64,
    ) -> Result<Self> {
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(invalid(
                "capacity",
                format!("must be finite and > 0, got {capacity}"),
            ));
        }
        if !(arrival.is_finite() && arrival > 0.0 && arrival < capacity) {
            return Err(invalid(
                "arrival",
                format!("must satisfy 0 < arrival < capacity = {capacity}, got {arrival}"),
            ));
        }
        if !(delay_weight.is_finite() && delay_weight > 0.0) {
            return Err(invalid(
                "delay_weight",
                format!("must be finite and > 0, got {delay_weight}"),
            ));
        }
        if !price_primary.is_finite() {
            return Err(invalid("price_primary", "must be finite"));
        }
        if !price_secondary.is_finite() {
            return Err(invalid("price_secondary", "must be finite"));
        }
        Ok(Self {
            capacity,
            arrival,
            delay_weight,
            price_primary,
            price_secondary,
        })
    }

    /// Parameters with `p₂ = 0` and `p₁` chosen so the equilibrium primary
    /// share equals `target_share`.
    pub fn calibrated(
        capacity: f64,
        arrival: f64,
        delay_weight: f64,
        target_share: f64,
    ) -> Result<Self> {
        // validate before calibrating so error names point at the right field
        Self::new(capacity, arrival, delay_weight, 0.0, 0.0)?;
        let gap = calibrate_price_gap(capacity, arrival, delay_weight, target_share)?;
        Self::new(capacity, arrival, delay_weight, gap, 0.0)
    }

    /// Same prices and delay weight at a different arrival rate.
    pub fn with_arrival(&self, arrival: f64) -> Result<Self> {
        Self::new(
            self.capacity,
            arrival,
            self.delay_weight,
            self.price_primary,
            self.price_secondary,
        )
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn arrival(&self) -> f64 {
        self.arrival
    }

    pub fn delay_weight(&self) -> f64 {
        self.delay_weight
    }

    pub fn price_primary(&self) -> f64 {
        self.price_primary
    }

    pub fn price_secondary(&self) -> f64 {
        self.price_secondary
    }

    /// `p₁ − p₂`; the only price quantity that affects the dynamics.
    pub fn price_gap(&self) -> f64 {
        self.price_primary - self.price_secondary
    }

    /// Utility of a primary user when `k` of `n` users are primary.
    pub fn utility_primary(&self, k: usize, n: usize) -> Result<f64> {
        if n == 0 || k > n {
            return Err(Error::Domain {
                what: "k",
                value: k as f64,
                range: format!("0..={n}"),
            });
        }
        Ok(self.utility_primary_at_share(k as f64 / n as f64))
    }

    /// Utility of a primary user at a continuous primary share `x`.
    pub fn utility_primary_at_share(&self, share: f64) -> f64 {
        -(self.delay_weight / (self.capacity - self.arrival * share) + self.price_primary)
    }

    /// Utility of a secondary user; independent of the traffic split.
    pub fn utility_secondary(&self) -> f64 {
        -(self.delay_weight / (self.capacity - self.arrival) + self.price_secondary)
    }

    /// `π_P^k − π_S`, the payoff advantage of being primary at state `k`.
    pub fn payoff_gap(&self, k: usize, n: usize) -> Result<f64> {
        Ok(self.utility_primary(k, n)? - self.utility_secondary())
    }

    /// `π_P(x) − π_S` at a continuous share.
    pub fn payoff_gap_at_share(&self, share: f64) -> f64 {
        self.utility_primary_at_share(share) - self.utility_secondary()
    }

    /// Equal-cost traffic split.
    ///
    /// A negative denominator means primary users are worse off at every
    /// load, so the equilibrium is all-secondary even though the raw formula
    /// returns a value above `λ`.
    pub fn equilibrium(&self) -> Result<EquilibriumInfo> {
        let (c, lambda, alpha) = (self.capacity, self.arrival, self.delay_weight);
        let gap = self.price_gap();
        let denominator = alpha - (c - lambda) * gap;
        if denominator == 0.0 {
            return Err(Error::DegenerateEquilibrium);
        }
        let raw = (alpha * lambda - c * (c - lambda) * gap) / denominator;
        let (rate, boundary) = if denominator < 0.0 || raw < 0.0 {
            (0.0, true)
        } else if raw > lambda {
            (lambda, true)
        } else {
            (raw, false)
        };
        Ok(EquilibriumInfo {
            rate_primary: rate,
            share_primary: rate / lambda,
            boundary_flag: boundary,
        })
    }

    /// `k* = ⌈n·x_P*⌉`.
    pub fn critical_state(&self, n: usize) -> Result<usize> {
        let eq = self.equilibrium()?;
        Ok(ceil_state(n, eq.share_primary))
    }

    /// Total delay `S(x) = λ[x/(C − λx) + (1 − x)/(C − λ)]`.
    pub fn social_welfare(&self, share: f64) -> Result<f64> {
        check_share(share)?;
        Ok(self.total_delay(share))
    }

    fn total_delay(&self, share: f64) -> f64 {
        let (c, lambda) = (self.capacity, self.arrival);
        lambda * (share / (c - lambda * share) + (1.0 - share) / (c - lambda))
    }

    /// Closed-form minimiser of `S`: `dS/dx = 0` gives
    /// `(C − λx)² = C(C − λ)`.
    pub fn social_optimum(&self) -> SocialOptimum {
        let (c, lambda) = (self.capacity, self.arrival);
        let root = (c * (c - lambda)).sqrt();
        SocialOptimum {
            share: (c - root) / lambda,
            total_delay: 2.0 * ((c / (c - lambda)).sqrt() - 1.0),
        }
    }

    /// `S(x) / S_min`.
    pub fn poa_at(&self, share: f64) -> Result<f64> {
        Ok(self.social_welfare(share)? / self.social_optimum().total_delay)
    }

    /// PoA when only the all-primary / all-secondary states are stable.
    pub fn poa_absorbing(&self) -> f64 {
        let (c, lambda) = (self.capacity, self.arrival);
        let rest = c - lambda;
        lambda / (2.0 * rest.sqrt() * (c.sqrt() - rest.sqrt()))
    }

    /// Stationary-expected total delay over states `0..=N` divided by `S_min`.
    pub fn expected_poa(&self, psi: &[f64]) -> Result<f64> {
        if psi.len() < 2 {
            return Err(invalid("psi", "needs at least two states"));
        }
        if psi.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("psi", "entries must be finite and nonnegative"));
        }
        let sum: f64 = psi.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Unnormalized { sum });
        }
        let n = (psi.len() - 1) as f64;
        let expected: f64 = psi
            .iter()
            .enumerate()
            .map(|(k, p)| self.total_delay(k as f64 / n) * p)
            .sum();
        Ok(expected / self.social_optimum().total_delay)
    }
}

/// Price gap `p₁ − p₂` whose equilibrium primary share is `target_share`.
pub fn calibrate_price_gap(
    capacity: f64,
    arrival: f64,
    delay_weight: f64,
    target_share: f64,
) -> Result<f64> {
    if !(target_share > 0.0 && target_share <= 1.0) {
        return Err(Error::Domain {
            what: "target_share",
            value: target_share,
            range: "(0, 1]".into(),
        });
    }
    // equal utilities at x: α/(C − λx) + p₁ = α/(C − λ) + p₂
    Ok(delay_weight / (capacity - arrival) - delay_weight / (capacity - arrival * target_share))
}

/// `n·x*` within this distance of an integer is treated as that integer
/// before taking the ceiling, so rounding noise in `x*` cannot bump `k*`.
pub const CRITICAL_STATE_SNAP: f64 = 1e-9;

pub(crate) fn ceil_state(n: usize, share: f64) -> usize {
    let scaled = n as f64 * share;
    let nearest = scaled.round();
    let snapped = if (scaled - nearest).abs() <= CRITICAL_STATE_SNAP {
        nearest
    } else {
        scaled.ceil()
    };
    (snapped.max(0.0) as usize).min(n)
}

fn check_share(share: f64) -> Result<()> {
    if (0.0..=1.0).contains(&share) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "share",
            value: share,
            range: "[0, 1]".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(p1: f64, p2: f64) -> NetworkParams {
        NetworkParams::new(100.0, 30.0, 1.0, p1, p2).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(NetworkParams::new(0.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(NetworkParams::new(100.0, 100.0, 1.0, 0.0, 0.0).is_err());
        assert!(NetworkParams::new(100.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(NetworkParams::new(100.0, 30.0, 0.0, 0.0, 0.0).is_err());
        assert!(NetworkParams::new(100.0, 30.0, 1.0, f64::NAN, 0.0).is_err());
        assert!(NetworkParams::new(100.0, 30.0, 1.0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn primary_utility_values() {
        let p = base(0.0, 0.0);
        assert_eq!(p.utility_primary(0, 10).unwrap(), -0.01);
        assert_eq!(p.utility_primary(10, 10).unwrap(), -(1.0 / 70.0));
        assert!(p.utility_primary(5, 10).unwrap() > p.utility_primary(6, 10).unwrap());
        assert!(p.utility_primary(11, 10).is_err());
    }

    #[test]
    fn secondary_utility_values() {
        let p = base(0.0, 0.0);
        assert!((p.utility_secondary() + 1.0 / 70.0).abs() < 1e-15);
        let shifted = base(0.0, 0.25);
        assert!((shifted.utility_secondary() - (p.utility_secondary() - 0.25)).abs() < 1e-15);
        assert_eq!(p.utility_primary(10, 10).unwrap(), p.utility_secondary());
    }

    #[test]
    fn equilibrium_cases() {
        let eq = base(0.3, 0.3).equilibrium().unwrap();
        assert_eq!(eq.rate_primary, 30.0);
        assert_eq!(eq.share_primary, 1.0);

        let eq = base(0.001_722_900_215_362_526, 0.0).equilibrium().unwrap();
        assert!((eq.share_primary - 0.68).abs() < 1e-12);
        assert!(!eq.boundary_flag);
        assert!((eq.share_primary - eq.rate_primary / 30.0).abs() < 1e-15);

        let eq = base(1.0, 0.0).equilibrium().unwrap();
        assert!(eq.boundary_flag);
        assert_eq!(eq.share_primary, 0.0);

        // primary cheaper than secondary: everybody wants to be primary
        let eq = base(0.0, 0.01).equilibrium().unwrap();
        assert!(eq.boundary_flag);
        assert_eq!(eq.share_primary, 1.0);
    }

    #[test]
    fn degenerate_denominator() {
        // α = (C − λ)(p₁ − p₂) = 70 · 0.5, exact in binary
        let p = NetworkParams::new(100.0, 30.0, 35.0, 0.5, 0.0).unwrap();
        assert_eq!(p.equilibrium(), Err(Error::DegenerateEquilibrium));
        assert!(p.critical_state(10).is_err());
    }

    #[test]
    fn critical_state_cases() {
        let p = NetworkParams::calibrated(100.0, 30.0, 1.0, 0.68).unwrap();
        assert_eq!(p.critical_state(10).unwrap(), 7);
        assert_eq!(p.critical_state(100).unwrap(), 68);
        assert_eq!(base(0.0, 0.0).critical_state(10).unwrap(), 10);
    }

    #[test]
    fn calibration() {
        assert_eq!(calibrate_price_gap(100.0, 30.0, 1.0, 1.0).unwrap(), 0.0);
        let gap = calibrate_price_gap(100.0, 30.0, 1.0, 0.68).unwrap();
        assert!((gap - 0.001_722_90).abs() < 1e-8);
        assert!(calibrate_price_gap(100.0, 30.0, 1.0, 0.0).is_err());
        assert!(calibrate_price_gap(100.0, 30.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn welfare_values() {
        let p = base(0.0, 0.0);
        assert!(rel(p.social_welfare(0.0).unwrap(), 30.0 / 70.0) < 1e-12);
        assert!(rel(p.social_welfare(1.0).unwrap(), 30.0 / 70.0) < 1e-12);
        assert!((p.social_welfare(0.68).unwrap() - 0.393_424).abs() < 1e-6);
        assert!(p.social_welfare(-0.1).is_err());
        assert!(p.social_welfare(1.1).is_err());
    }

    #[test]
    fn optimum_and_poa() {
        let p = base(0.0, 0.0);
        let opt = p.social_optimum();
        assert!((opt.total_delay - 0.390_457_2).abs() < 1e-7);
        assert!(rel(p.social_welfare(opt.share).unwrap(), opt.total_delay) < 1e-12);
        assert!((p.poa_at(opt.share).unwrap() - 1.0).abs() < 1e-12);
        assert!((p.poa_at(0.68).unwrap() - 1.007_60).abs() < 1e-5);
        assert!((p.poa_at(0.0).unwrap() - 1.097_62).abs() < 1e-5);
        assert!(rel(p.poa_absorbing(), p.poa_at(1.0).unwrap()) < 1e-12);
        assert!(rel(p.poa_absorbing(), p.poa_at(0.0).unwrap()) < 1e-12);

        let p35 = NetworkParams::new(100.0, 35.0, 1.0, 0.0, 0.0).unwrap();
        assert!((p35.poa_absorbing() - 1.120_17).abs() < 1e-5);

        let tiny = NetworkParams::new(100.0, 1e-6, 1.0, 0.0, 0.0).unwrap();
        assert!(tiny.social_optimum().total_delay < 1e-8);
        assert!((tiny.poa_absorbing() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn expected_poa_point_masses() {
        let p = base(0.0, 0.0);
        let mut psi = vec![0.0; 11];
        psi[0] = 1.0;
        assert!(rel(p.expected_poa(&psi).unwrap(), p.poa_absorbing()) < 1e-12);

        // C = 100, λ = 75 puts the optimum at √(C(C − λ)) = 50, x_opt = 2/3
        let p75 = NetworkParams::new(100.0, 75.0, 1.0, 0.0, 0.0).unwrap();
        assert!((p75.social_optimum().share - 2.0 / 3.0).abs() < 1e-15);
        assert!((p75.expected_poa(&[0.0, 0.0, 1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);

        // uniform over 0..=10, value from direct summation
        let psi_uniform = vec![1.0 / 11.0; 11];
        let value = p.expected_poa(&psi_uniform).unwrap();
        assert!((value - 1.039_153_467_319_323).abs() < 1e-12);

        let bad = vec![0.5; 11];
        assert!(matches!(
            p.expected_poa(&bad),
            Err(Error::Unnormalized { .. })
        ));
    }
}
