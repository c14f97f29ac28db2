//! TOML experiment configuration.
//!
//! Every section is optional; missing sections fall back to the reference
//! setup (C = 100, λ = 30, α = 1, x_P* = 0.68, N = 10, one anchored user per
//! network, Fermi rule with β/β₀ = 1). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use netsel::chain::PopulationConfig;
use netsel::{BetaSpec, ImitationRule, InitialState, NetworkParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const REFERENCE_TARGET_SHARE: f64 = 0.68;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub rule: RuleConfig,
    pub sweep: Option<SweepConfig>,
    pub simulation: Option<SimulationConfig>,
    pub replicator: Option<ReplicatorConfig>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default = "defaults::capacity")]
    pub capacity: f64,
    #[serde(default = "defaults::arrival")]
    pub arrival: f64,
    #[serde(default = "defaults::delay_weight")]
    pub delay_weight: f64,
    pub price_primary: Option<f64>,
    pub price_secondary: Option<f64>,
    /// Calibrate `p₁` (with `p₂ = 0`) so that `x_P*` equals this share.
    pub target_share: Option<f64>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            capacity: defaults::capacity(),
            arrival: defaults::arrival(),
            delay_weight: defaults::delay_weight(),
            price_primary: None,
            price_secondary: None,
            target_share: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::anchors")]
    pub anchored_primary: usize,
    #[serde(default = "defaults::anchors")]
    pub anchored_secondary: usize,
}

impl Default for PopulationSection {
    fn default() -> Self {
        Self {
            n: defaults::n(),
            anchored_primary: defaults::anchors(),
            anchored_secondary: defaults::anchors(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RuleConfig {
    Fermi(FermiConfig),
    Proportional(ProportionalConfig),
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::Fermi(FermiConfig {
            beta_ratio: None,
            beta_absolute: None,
        })
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FermiConfig {
    pub beta_ratio: Option<f64>,
    pub beta_absolute: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProportionalConfig {
    #[serde(default = "defaults::scale")]
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Lambda,
    BetaRatio,
    N,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::BetaRatio => "beta_ratio",
            Self::N => "n",
        }
    }
}

/// Either an explicit `values` list or an inclusive `start..=stop` range.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub steps: u64,
    /// Defaults to `10·N²`.
    pub burn_in: Option<u64>,
    #[serde(default = "defaults::replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    pub seed: Option<u64>,
    /// Trajectory decimation; defaults to keeping about 10⁴ points.
    pub decimation: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum InitialStateConfig {
    State(usize),
    Named(String),
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self::Named("uniform".into())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicatorConfig {
    #[serde(default = "defaults::initial_shares")]
    pub initial_shares: Vec<f64>,
    #[serde(default = "defaults::gain")]
    pub gain: f64,
    #[serde(default = "defaults::rtol")]
    pub rtol: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    /// Integrate over a fixed time span instead of stopping at the fixed point.
    pub duration: Option<f64>,
}

impl Default for ReplicatorConfig {
    fn default() -> Self {
        Self {
            initial_shares: defaults::initial_shares(),
            gain: defaults::gain(),
            rtol: defaults::rtol(),
            horizon: defaults::horizon(),
            duration: None,
        }
    }
}

mod defaults {
    pub fn capacity() -> f64 {
        100.0
    }
    pub fn arrival() -> f64 {
        30.0
    }
    pub fn delay_weight() -> f64 {
        1.0
    }
    pub fn n() -> usize {
        10
    }
    pub fn anchors() -> usize {
        1
    }
    pub fn scale() -> f64 {
        1.0
    }
    pub fn replicas() -> usize {
        1
    }
    pub fn initial_shares() -> Vec<f64> {
        vec![0.1, 0.5, 0.9]
    }
    pub fn gain() -> f64 {
        1.0
    }
    pub fn rtol() -> f64 {
        1e-10
    }
    pub fn horizon() -> f64 {
        1e7
    }
}

/// How the imitation rule is parameterised, before `β₀` is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleSpec {
    Fermi(BetaSpec),
    Proportional { scale: f64 },
}

impl RuleSpec {
    /// Concrete rule for a population of `n` in environment `params`.
    pub fn build(&self, params: &NetworkParams, n: usize) -> netsel::Result<ImitationRule> {
        match *self {
            Self::Fermi(spec) => ImitationRule::fermi_from_spec(spec, params, n),
            Self::Proportional { scale } => ImitationRule::pairwise_proportional(scale),
        }
    }

    pub fn with_beta_ratio(&self, ratio: f64) -> Result<Self, CliError> {
        match self {
            Self::Fermi(_) => Ok(Self::Fermi(BetaSpec::Ratio(ratio))),
            Self::Proportional { .. } => Err(CliError::Config(
                "sweep over beta_ratio needs rule type \"fermi\"".into(),
            )),
        }
    }
}

/// Validated configuration with the environment and population built.
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: NetworkParams,
    pub calibration_target: Option<f64>,
    pub population: PopulationConfig,
    pub rule: RuleSpec,
}

impl Setup {
    pub fn imitation_rule(&self) -> Result<ImitationRule, CliError> {
        self.rule
            .build(&self.params, self.population.n())
            .map_err(CliError::config)
    }

    pub fn with_population(&self, n: usize) -> Result<Self, CliError> {
        let population = PopulationConfig::new(
            n,
            self.population.anchored_primary(),
            self.population.anchored_secondary(),
        )
        .map_err(CliError::config)?;
        Ok(Self {
            population,
            ..self.clone()
        })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let net = &self.network;
        let (params, calibration_target) = match (net.target_share, net.price_primary) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "network: set either target_share or price_primary, not both".into(),
                ))
            }
            (Some(_), None) | (None, None) if net.price_secondary.is_some() => {
                return Err(CliError::Config(
                    "network: price_secondary needs price_primary".into(),
                ))
            }
            (None, Some(p1)) => (
                NetworkParams::new(
                    net.capacity,
                    net.arrival,
                    net.delay_weight,
                    p1,
                    net.price_secondary.unwrap_or(0.0),
                ),
                None,
            ),
            (target, None) => {
                let target = target.unwrap_or(REFERENCE_TARGET_SHARE);
                (
                    NetworkParams::calibrated(net.capacity, net.arrival, net.delay_weight, target),
                    Some(target),
                )
            }
        };
        let params = params.map_err(CliError::config)?;

        let pop = &self.population;
        let population = PopulationConfig::new(pop.n, pop.anchored_primary, pop.anchored_secondary)
            .map_err(CliError::config)?;

        let rule = match &self.rule {
            RuleConfig::Fermi(f) => match (f.beta_ratio, f.beta_absolute) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config(
                        "rule: set either beta_ratio or beta_absolute, not both".into(),
                    ))
                }
                (None, Some(beta)) => RuleSpec::Fermi(BetaSpec::Absolute(beta)),
                (ratio, None) => RuleSpec::Fermi(BetaSpec::Ratio(ratio.unwrap_or(1.0))),
            },
            RuleConfig::Proportional(p) => RuleSpec::Proportional { scale: p.scale },
        };
        // surface invalid β or scale as configuration errors
        rule.build(&params, population.n())
            .map_err(CliError::config)?;

        Ok(Setup {
            params,
            calibration_target,
            population,
            rule,
        })
    }
}

impl SweepConfig {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let points = match (&self.values, self.start, self.stop, self.step) {
            (Some(values), None, None, None) => values.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if !(step.is_finite() && step > 0.0) || !(start.is_finite() && stop.is_finite()) {
                    return Err(CliError::Config(
                        "sweep: step must be > 0 and bounds finite".into(),
                    ));
                }
                if stop < start {
                    return Err(CliError::Config("sweep: stop must be >= start".into()));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=count).map(|i| start + i as f64 * step).collect()
            }
            _ => {
                return Err(CliError::Config(
                    "sweep: give either `values` or all of `start`, `stop`, `step`".into(),
                ))
            }
        };
        if points.is_empty() {
            return Err(CliError::Config("sweep: no points".into()));
        }
        if self.variable == SweepVariable::N && points.iter().any(|v| v.fract() != 0.0 || *v < 2.0)
        {
            return Err(CliError::Config(
                "sweep: n values must be integers >= 2".into(),
            ));
        }
        Ok(points)
    }
}

impl SimulationConfig {
    pub fn initial_state(&self) -> Result<InitialState, CliError> {
        match &self.initial_state {
            InitialStateConfig::State(k) => Ok(InitialState::State(*k)),
            InitialStateConfig::Named(name) if name == "uniform" => {
                Ok(InitialState::UniformInterior)
            }
            InitialStateConfig::Named(other) => Err(CliError::Config(format!(
                "simulation.initial_state: expected an integer or \"uniform\", got {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_reference_setup() {
        let setup = ExperimentConfig::parse("").unwrap().setup().unwrap();
        assert_eq!(setup.params.critical_state(10).unwrap(), 7);
        assert_eq!(setup.calibration_target, Some(0.68));
        assert_eq!(setup.rule, RuleSpec::Fermi(BetaSpec::Ratio(1.0)));
    }

    #[test]
    fn unknown_keys_are_named() {
        for (text, key) in [
            ("bogus = 1", "bogus"),
            ("[network]\ncapcity = 100", "capcity"),
            ("[rule]\ntype = \"fermi\"\nbeta = 2", "beta"),
            (
                "[rule]\ntype = \"proportional\"\nbeta_ratio = 2",
                "beta_ratio",
            ),
            ("[sweep]\nvariable = \"n\"\nvalue = [1]", "value"),
        ] {
            let err = ExperimentConfig::parse(text).unwrap_err().to_string();
            assert!(err.contains(&format!("`{key}`")), "{err}");
        }
    }

    #[test]
    fn beta_options_are_exclusive() {
        let both = "[rule]\ntype = \"fermi\"\nbeta_ratio = 1\nbeta_absolute = 2";
        assert!(ExperimentConfig::parse(both).unwrap().setup().is_err());
        let abs = "[rule]\ntype = \"fermi\"\nbeta_absolute = 2.5";
        let setup = ExperimentConfig::parse(abs).unwrap().setup().unwrap();
        assert_eq!(setup.rule, RuleSpec::Fermi(BetaSpec::Absolute(2.5)));
        let prop = "[rule]\ntype = \"proportional\"\nscale = 3";
        let setup = ExperimentConfig::parse(prop).unwrap().setup().unwrap();
        assert_eq!(setup.rule, RuleSpec::Proportional { scale: 3.0 });
    }

    #[test]
    fn prices_and_target_are_exclusive() {
        let both = "[network]\ntarget_share = 0.5\nprice_primary = 0.1";
        assert!(ExperimentConfig::parse(both).unwrap().setup().is_err());
        let prices = "[network]\nprice_primary = 0.1\nprice_secondary = 0.1";
        let setup = ExperimentConfig::parse(prices).unwrap().setup().unwrap();
        assert_eq!(setup.params.equilibrium().unwrap().share_primary, 1.0);
        assert_eq!(setup.calibration_target, None);
        assert!(ExperimentConfig::parse("[network]\narrival = 120")
            .unwrap()
            .setup()
            .is_err());
    }

    #[test]
    fn sweep_points() {
        let range = SweepConfig {
            variable: SweepVariable::Lambda,
            values: None,
            start: Some(10.0),
            stop: Some(40.0),
            step: Some(10.0),
        };
        assert_eq!(range.points().unwrap(), vec![10.0, 20.0, 30.0, 40.0]);
        let bad_n = SweepConfig {
            variable: SweepVariable::N,
            values: Some(vec![10.0, 2.5]),
            start: None,
            stop: None,
            step: None,
        };
        assert!(bad_n.points().is_err());
        let mixed = SweepConfig {
            start: Some(1.0),
            ..bad_n
        };
        assert!(mixed.points().is_err());
    }

    #[test]
    fn initial_state_forms() {
        let cfg = ExperimentConfig::parse("[simulation]\nsteps = 100\ninitial_state = 3").unwrap();
        assert_eq!(
            cfg.simulation.unwrap().initial_state().unwrap(),
            InitialState::State(3)
        );
        let cfg = ExperimentConfig::parse("[simulation]\nsteps = 100\ninitial_state = \"middle\"")
            .unwrap();
        assert!(cfg.simulation.unwrap().initial_state().is_err());
    }
}
