//! Chain construction and the choice of analytic route shared by commands
//! and figure pipelines.

use netsel::chain::{
    absorption_table, build_kernel, classify, distribution_mode, stationary_noise_free,
    stationary_product, AbsorptionReport, ChainClass, PopulationConfig, StationaryDistribution,
    TransitionKernel,
};
use netsel::protocols::beta_reference;
use netsel::{Error, ImitationRule, NetworkParams};
use serde_json::{json, Value};

use crate::config::{RuleSpec, Setup};

#[derive(Debug, Clone)]
pub enum Analysis {
    Distribution(StationaryDistribution),
    /// Absorption report for every initial state `0..=N`.
    Absorbing(Vec<AbsorptionReport>),
}

/// Noise-free rules use the two-point law, irreducible chains the product
/// form, absorbing chains the absorption table. Anything else has no
/// analytic answer here.
pub fn analyze(
    params: &NetworkParams,
    population: &PopulationConfig,
    rule: &ImitationRule,
) -> netsel::Result<(TransitionKernel, Analysis)> {
    let kernel = build_kernel(params, population, rule);
    if rule.is_noise_free() {
        let dist = stationary_noise_free(&kernel)?;
        return Ok((kernel, Analysis::Distribution(dist)));
    }
    let analysis = match classify(&kernel) {
        ChainClass::Irreducible => Analysis::Distribution(stationary_product(&kernel)?),
        ChainClass::Absorbing => Analysis::Absorbing(absorption_table(&kernel)),
        other => {
            return Err(Error::WrongChainClass {
                expected: "irreducible or absorbing",
                found: other.to_string(),
            })
        }
    };
    Ok((kernel, analysis))
}

/// `poa_expected` for a stationary law, `poa_absorbing` for an absorbing
/// chain.
pub fn headline_metric(
    params: &NetworkParams,
    analysis: &Analysis,
) -> netsel::Result<(&'static str, f64)> {
    match analysis {
        Analysis::Distribution(dist) => Ok(("poa_expected", params.expected_poa(dist.psi())?)),
        Analysis::Absorbing(_) => Ok(("poa_absorbing", params.poa_absorbing())),
    }
}

/// Headline metric plus PoA at the equilibrium share.
pub fn point_metrics(setup: &Setup) -> netsel::Result<Vec<(&'static str, f64)>> {
    let rule = setup.rule.build(&setup.params, setup.population.n())?;
    let (_, analysis) = analyze(&setup.params, &setup.population, &rule)?;
    let headline = headline_metric(&setup.params, &analysis)?;
    let share = setup.params.equilibrium()?.share_primary;
    Ok(vec![headline, ("poa_nash", setup.params.poa_at(share)?)])
}

/// Discretised normal density on `0..=n`, normalised to sum 1.
pub fn gaussian_overlay(n: usize, center: f64, variance: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..=n)
        .map(|k| (-(k as f64 - center).powi(2) / (2.0 * variance)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

pub fn distribution_summary(
    params: &NetworkParams,
    dist: &StationaryDistribution,
) -> netsel::Result<Value> {
    let n = dist.n();
    let share = params.equilibrium()?.share_primary;
    Ok(json!({
        "distribution_kind": dist.kind().to_string(),
        "mode": distribution_mode(dist),
        "mean": dist.mean(),
        "variance": dist.variance(),
        "poa_expected": params.expected_poa(dist.psi())?,
        "poa_nash": params.poa_at(share)?,
        "k_star": params.critical_state(n)?,
        "n_x_star": n as f64 * share,
    }))
}

/// Full parameter provenance for metadata sidecars.
pub fn provenance(setup: &Setup) -> Value {
    let p = &setup.params;
    let n = setup.population.n();
    let rule = match setup.rule {
        RuleSpec::Fermi(spec) => {
            let beta0 = beta_reference(p, n).ok();
            let beta = spec.resolve(p, n).ok();
            json!({
                "type": "fermi",
                "beta_spec": format!("{spec:?}"),
                "beta": beta,
                "beta_0": beta0,
                "beta_ratio": match (beta, beta0) {
                    (Some(b), Some(b0)) if b0 > 0.0 => Some(b * b0),
                    _ => None,
                },
            })
        }
        RuleSpec::Proportional { scale } => json!({"type": "proportional", "scale": scale}),
    };
    json!({
        "tool": "netsel",
        "version": env!("CARGO_PKG_VERSION"),
        "network": {
            "capacity": p.capacity(),
            "arrival": p.arrival(),
            "delay_weight": p.delay_weight(),
            "price_primary": p.price_primary(),
            "price_secondary": p.price_secondary(),
            "price_gap": p.price_gap(),
            "calibration_target_share": setup.calibration_target,
            "calibration": setup.calibration_target.map(|_| {
                "price_secondary = 0, price_primary chosen so the equilibrium primary share equals the target"
            }),
        },
        "population": {
            "n": n,
            "anchored_primary": setup.population.anchored_primary(),
            "anchored_secondary": setup.population.anchored_secondary(),
        },
        "rule": rule,
    })
}

/// Merges the entries of `extra` into the object `base`.
pub fn merged(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}
