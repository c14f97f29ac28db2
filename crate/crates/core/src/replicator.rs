//! Deterministic two-strategy mean dynamics.
//!
//! With `x_S = 1 − x_P` and `π̄ = x_P π_P + x_S π_S`, the replicator
//! equation for the primary share reduces to
//! `dx_P/dt = 𝒦 x_P (1 − x_P)(π_P(x_P) − π_S)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::NetworkParams;
use crate::protocols::ImitationRule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicatorState {
    pub share_primary: f64,
    pub time: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// `𝒦`; only rescales time.
    pub gain: f64,
    pub horizon: f64,
    /// Stop once `|dx/dt| < rtol·𝒦`.
    pub rtol: f64,
    /// Local error tolerance of each accepted step.
    pub step_tolerance: f64,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            gain: 1.0,
            horizon: 1e7,
            rtol: 1e-8,
            step_tolerance: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<ReplicatorState>,
    pub fixed_point: f64,
}

impl Trajectory {
    pub fn last(&self) -> &ReplicatorState {
        self.samples
            .last()
            .expect("trajectory always holds the start")
    }
}

/// `𝒦 x(1 − x)(π_P(x) − π_S)` with the primary load `λx`.
pub fn replicator_rhs(params: &NetworkParams, share: f64, gain: f64) -> Result<f64> {
    check_share(share)?;
    Ok(rhs_unchecked(params, share, gain))
}

fn rhs_unchecked(params: &NetworkParams, share: f64, gain: f64) -> f64 {
    gain * share * (1.0 - share) * params.payoff_gap_at_share(share)
}

/// `dx_P/dt = x_S ρ_SP − x_P ρ_PS` with imitation protocol
/// `ρ_ij = x_j q(π_j − π_i)`.
///
/// For the pairwise proportional rule with scale `s` this is the replicator
/// equation with `𝒦 = s` (as long as the clamp at 1 is inactive).
pub fn mean_dynamics_rhs(rule: &ImitationRule, params: &NetworkParams, share: f64) -> Result<f64> {
    check_share(share)?;
    let secondary = 1.0 - share;
    let gap = params.payoff_gap_at_share(share);
    let to_primary = share * rule.imitation_probability(gap);
    let to_secondary = secondary * rule.imitation_probability(-gap);
    Ok(secondary * to_primary - share * to_secondary)
}

/// Integrates from an interior start until `|dx/dt| < rtol·𝒦`.
///
/// Returns [`Error::HorizonExhausted`] with the final state when the
/// horizon or step budget runs out first.
pub fn integrate(
    params: &NetworkParams,
    x0: f64,
    options: &IntegrationOptions,
) -> Result<Trajectory> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::Domain {
            what: "x0",
            value: x0,
            range: "(0, 1)".into(),
        });
    }
    check_options(options)?;
    let threshold = options.rtol * options.gain;
    let samples = run(params, x0, options.horizon, options, |x| {
        rhs_unchecked(params, x, options.gain).abs() < threshold
    })?;
    let last = *samples.last().expect("start sample");
    let rate = rhs_unchecked(params, last.share_primary, options.gain);
    if rate.abs() >= threshold {
        return Err(Error::HorizonExhausted {
            time: last.time,
            state: last.share_primary,
            rate,
        });
    }
    Ok(Trajectory {
        fixed_point: last.share_primary,
        samples,
    })
}

/// Integrates over exactly `duration` time units, with no convergence stop.
pub fn evolve(
    params: &NetworkParams,
    x0: f64,
    duration: f64,
    options: &IntegrationOptions,
) -> Result<Trajectory> {
    check_share(x0)?;
    check_options(options)?;
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(invalid("duration", "must be finite and >= 0"));
    }
    let samples = run(params, x0, duration, options, |_| false)?;
    let last = *samples.last().expect("start sample");
    if last.time < duration {
        return Err(Error::HorizonExhausted {
            time: last.time,
            state: last.share_primary,
            rate: rhs_unchecked(params, last.share_primary, options.gain),
        });
    }
    Ok(Trajectory {
        fixed_point: last.share_primary,
        samples,
    })
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the time nodes
// are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn run(
    params: &NetworkParams,
    x0: f64,
    t_end: f64,
    options: &IntegrationOptions,
    done: impl Fn(f64) -> bool,
) -> Result<Vec<ReplicatorState>> {
    let gain = options.gain;
    let f = |x: f64| rhs_unchecked(params, x, gain);

    let mut samples = vec![ReplicatorState {
        share_primary: x0,
        time: 0.0,
        gain,
    }];
    let (mut t, mut x) = (0.0, x0);
    let mut k1 = f(x);
    let mut h = (0.01 / k1.abs().max(1e-12)).min(t_end.max(f64::MIN_POSITIVE));
    let mut steps = 0;
    while t < t_end && !done(x) && steps < options.max_steps {
        let clipped = h >= t_end - t;
        if clipped {
            h = t_end - t;
        }
        let k2 = f(x + h * A21 * k1);
        let k3 = f(x + h * (A31 * k1 + A32 * k2));
        let k4 = f(x + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let next = x + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(next);
        let err = (h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)).abs();
        let scale = options.step_tolerance * (1.0 + x.abs().max(next.abs()));
        let ratio = err / scale;
        let inside = (0.0..=1.0).contains(&next) && next.is_finite();
        steps += 1;
        let accepted = ratio <= 1.0 && inside;
        if accepted {
            t = if clipped { t_end } else { t + h };
            x = next;
            k1 = k7;
            samples.push(ReplicatorState {
                share_primary: x,
                time: t,
                gain,
            });
        }
        let factor = if !inside {
            0.25
        } else if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if !accepted && h < f64::EPSILON * t.max(1.0) {
            return Err(Error::NoConvergence {
                iterations: steps,
                residual: err,
            });
        }
    }
    Ok(samples)
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

fn check_options(options: &IntegrationOptions) -> Result<()> {
    if !(options.gain.is_finite() && options.gain > 0.0) {
        return Err(invalid("gain", "must be finite and > 0"));
    }
    if !(options.horizon.is_finite() && options.horizon > 0.0) {
        return Err(invalid("horizon", "must be finite and > 0"));
    }
    if !(options.rtol > 0.0 && options.step_tolerance > 0.0) {
        return Err(invalid("rtol", "tolerances must be > 0"));
    }
    Ok(())
}
