//! Subcommand implementations.

use netsel::chain::{absorption_analysis, build_kernel, distribution_mode};
use netsel::montecarlo::{default_burn_in, run, RNG_ALGORITHM};
use netsel::protocols::beta_reference;
use netsel::replicator::{evolve, integrate};
use netsel::{InitialState, IntegrationOptions, SimulationSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::analysis::{analyze, distribution_summary, merged, point_metrics, provenance, Analysis};
use crate::config::{ExperimentConfig, Setup, SweepVariable};
use crate::error::CliError;
use crate::output::{distribution_rows, num, OutputDir, Schema};

pub const DEFAULT_SEED: u64 = 1;

/// Roughly how many trajectory points `simulate` keeps by default.
const TRAJECTORY_POINTS: u64 = 10_000;

pub struct Context {
    pub config: ExperimentConfig,
    pub out: OutputDir,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

pub fn equilibrium(ctx: &mut Context) -> Result<(), CliError> {
    let setup = ctx.config.setup()?;
    let p = &setup.params;
    let n = setup.population.n();
    let eq = p.equilibrium()?;
    let k_star = p.critical_state(n)?;
    let welfare = p.social_welfare(eq.share_primary)?;
    let optimum = p.social_optimum();
    let poa = p.poa_at(eq.share_primary)?;
    // an unclamped solution can still sit exactly on 0 or 1
    let on_boundary = eq.boundary_flag || eq.share_primary == 0.0 || eq.share_primary == 1.0;

    let report = merged(
        provenance(&setup),
        json!({
            "command": "equilibrium",
            "share_primary": eq.share_primary,
            "rate_primary": eq.rate_primary,
            "boundary_flag": eq.boundary_flag,
            "boundary_equilibrium": on_boundary,
            "k_star": k_star,
            "n_x_star": n as f64 * eq.share_primary,
            "total_delay_at_equilibrium": welfare,
            "total_delay_min": optimum.total_delay,
            "optimal_share": optimum.share,
            "poa_at_equilibrium": poa,
            "poa_absorbing": p.poa_absorbing(),
            "beta_0": beta_reference(p, n)?,
        }),
    );
    ctx.out.write_json("equilibrium.json", &report)?;

    ctx.say(format!("x_P*        = {}", eq.share_primary));
    ctx.say(format!("lambda_P*   = {}", eq.rate_primary));
    if on_boundary {
        let how = if eq.boundary_flag { " (clamped)" } else { "" };
        ctx.say(format!("equilibrium on the boundary{how}"));
    }
    ctx.say(format!("k* (N={n})   = {k_star}"));
    ctx.say(format!("N x_P*      = {}", n as f64 * eq.share_primary));
    ctx.say(format!("S(x_P*)     = {welfare}"));
    ctx.say(format!(
        "S_min       = {} at x = {}",
        optimum.total_delay, optimum.share
    ));
    ctx.say(format!("PoA         = {poa}"));
    Ok(())
}

pub fn stationary(ctx: &mut Context) -> Result<(), CliError> {
    let setup = ctx.config.setup()?;
    let rule = setup.imitation_rule()?;
    let (_, analysis) = analyze(&setup.params, &setup.population, &rule)?;
    let base = merged(provenance(&setup), json!({"command": "stationary"}));
    match analysis {
        Analysis::Distribution(dist) => {
            let summary = distribution_summary(&setup.params, &dist)?;
            ctx.out.write_table(
                "stationary",
                Schema::Distribution,
                &distribution_rows(dist.psi()),
                merged(base, summary.clone()),
            )?;
            ctx.say(format!("law         = {}", dist.kind()));
            ctx.say(format!("mode        = {:?}", distribution_mode(&dist)));
            ctx.say(format!("PoA_E       = {}", summary["poa_expected"]));
        }
        Analysis::Absorbing(table) => {
            ctx.say("notice: chain is absorbing (no anchored users), so it has no unique");
            ctx.say("        stationary law; writing absorption probabilities instead");
            let rows: Vec<Vec<String>> = table
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    vec![
                        k.to_string(),
                        num(r.prob_absorb_at_0),
                        num(r.prob_absorb_at_n),
                        num(r.expected_steps),
                    ]
                })
                .collect();
            let extra = json!({
                "notice": "absorbing chain: stationary law is a mixture of the point masses at 0 and N",
                "poa_absorbing": setup.params.poa_absorbing(),
            });
            ctx.out
                .write_table("absorption", Schema::Absorption, &rows, merged(base, extra))?;
            ctx.say(format!(
                "PoA         = {} (absorbing states)",
                setup.params.poa_absorbing()
            ));
        }
    }
    Ok(())
}

/// Rows and per-point failures of a sweep.
pub struct SweepResult {
    pub rows: Vec<Vec<String>>,
    pub errors: Vec<Value>,
    pub succeeded: usize,
}

/// Setup for one sweep point.
pub fn sweep_setup(base: &Setup, variable: SweepVariable, value: f64) -> Result<Setup, CliError> {
    match variable {
        SweepVariable::Lambda => Ok(Setup {
            params: base.params.with_arrival(value).map_err(CliError::config)?,
            ..base.clone()
        }),
        SweepVariable::BetaRatio => Ok(Setup {
            rule: base.rule.with_beta_ratio(value)?,
            ..base.clone()
        }),
        SweepVariable::N => base.with_population(value as usize),
    }
}

/// Evaluates every point in parallel; rows come back in input order.
pub fn run_sweep(
    base: &Setup,
    variable: SweepVariable,
    points: &[f64],
    metric: impl Fn(&Setup) -> netsel::Result<Vec<(&'static str, f64)>> + Sync,
) -> SweepResult {
    let outcomes: Vec<Result<Vec<(&'static str, f64)>, String>> = points
        .par_iter()
        .map(|&v| {
            let setup = sweep_setup(base, variable, v).map_err(|e| e.to_string())?;
            metric(&setup).map_err(|e| e.to_string())
        })
        .collect();
    let mut result = SweepResult {
        rows: Vec::new(),
        errors: Vec::new(),
        succeeded: 0,
    };
    for (&v, outcome) in points.iter().zip(outcomes) {
        match outcome {
            Ok(metrics) => {
                result.succeeded += 1;
                for (name, value) in metrics {
                    result.rows.push(vec![num(v), name.to_string(), num(value)]);
                }
            }
            Err(message) => {
                log::warn!("{} = {v}: {message}", variable.name());
                result.rows.push(vec![num(v), "error".into(), "NaN".into()]);
                result
                    .errors
                    .push(json!({"sweep_value": v, "message": message}));
            }
        }
    }
    result
}

pub fn sweep(ctx: &mut Context) -> Result<(), CliError> {
    let setup = ctx.config.setup()?;
    let sweep = ctx
        .config
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let points = sweep.points()?;
    if sweep.variable == SweepVariable::BetaRatio {
        setup.rule.with_beta_ratio(1.0)?;
    }
    let result = run_sweep(&setup, sweep.variable, &points, point_metrics);
    let meta = merged(
        provenance(&setup),
        json!({
            "command": "sweep",
            "sweep_variable": sweep.variable.name(),
            "sweep_points": points,
            "prices_fixed_across_lambda": sweep.variable == SweepVariable::Lambda,
            "errors": result.errors,
            "error_marker": "metric = error, value = NaN",
        }),
    );
    ctx.out
        .write_table("sweep", Schema::Sweep, &result.rows, meta)?;
    ctx.say(format!(
        "{} of {} points evaluated; wrote {}",
        result.succeeded,
        points.len(),
        ctx.out.root().join("sweep.csv").display()
    ));
    if result.succeeded == 0 {
        return Err(all_points_failed(&result));
    }
    Ok(())
}

fn all_points_failed(result: &SweepResult) -> CliError {
    let first = result.errors[0]["message"].as_str().unwrap_or_default();
    CliError::EmptySweep(first.to_string())
}

pub fn simulate(ctx: &mut Context) -> Result<(), CliError> {
    let setup = ctx.config.setup()?;
    let sim = ctx
        .config
        .simulation
        .clone()
        .ok_or_else(|| CliError::Config("simulate needs a [simulation] section".into()))?;
    let n = setup.population.n();
    let seed = ctx.seed.or(sim.seed).unwrap_or(DEFAULT_SEED);
    let spec = SimulationSpec {
        seed,
        steps: sim.steps,
        burn_in: sim
            .burn_in
            .unwrap_or_else(|| default_burn_in(n).min(sim.steps / 10)),
        replicas: sim.replicas,
        initial_state: sim.initial_state()?,
        decimation: Some(
            sim.decimation
                .unwrap_or((sim.steps / TRAJECTORY_POINTS).max(1)),
        ),
    };
    spec.validate(n).map_err(CliError::config)?;

    let rule = setup.imitation_rule()?;
    let kernel = build_kernel(&setup.params, &setup.population, &rule);
    let output = run(&spec, &kernel)?;

    let trajectory: Vec<Vec<String>> = output.paths[0]
        .points
        .iter()
        .map(|(event, k)| vec![event.to_string(), k.to_string()])
        .collect();
    let frequencies = output.histogram.frequencies();

    let at_boundary = output
        .final_states
        .iter()
        .filter(|&&k| k == 0 || k == n)
        .count();
    let mut comparison = json!({
        "final_states_at_0": output.final_states.iter().filter(|&&k| k == 0).count(),
        "final_states_at_n": output.final_states.iter().filter(|&&k| k == n).count(),
        "final_states_in_boundary_fraction": at_boundary as f64 / spec.replicas as f64,
    });
    match analyze(&setup.params, &setup.population, &rule) {
        Ok((_, Analysis::Distribution(dist))) => {
            let tv = output.histogram.total_variation(dist.psi());
            comparison["analytic_law"] = json!(dist.kind().to_string());
            comparison["total_variation"] = json!(tv);
            ctx.say(format!("TV distance to {} law = {tv}", dist.kind()));
        }
        Ok((_, Analysis::Absorbing(table))) => {
            let exact_at_n = match spec.initial_state {
                InitialState::State(k) => absorption_analysis(&kernel, k)?.prob_absorb_at_n,
                InitialState::UniformInterior => {
                    table[1..n].iter().map(|r| r.prob_absorb_at_n).sum::<f64>() / (n - 1) as f64
                }
            };
            comparison["analytic_law"] = json!("absorbing");
            comparison["exact_prob_absorb_at_n"] = json!(exact_at_n);
            ctx.say(format!(
                "{at_boundary} of {} replicas absorbed; exact P(absorb at N) = {exact_at_n}",
                spec.replicas
            ));
        }
        Err(e) => {
            comparison["analytic_law"] = json!(null);
            comparison["analytic_note"] = json!(e.to_string());
        }
    }

    let meta = merged(
        provenance(&setup),
        json!({
            "command": "simulate",
            "seed": seed,
            "rng": RNG_ALGORITHM,
            "simulation": spec,
            "comparison": comparison,
        }),
    );
    ctx.out.write_table(
        "trajectory",
        Schema::Trajectory,
        &trajectory,
        merged(meta.clone(), json!({"replica": 0})),
    )?;
    ctx.out.write_table(
        "histogram",
        Schema::Distribution,
        &distribution_rows(&frequencies),
        merged(
            meta,
            json!({"empirical": true, "events_counted": output.histogram.total}),
        ),
    )?;
    Ok(())
}

pub fn replicator(ctx: &mut Context) -> Result<(), CliError> {
    let setup = ctx.config.setup()?;
    let cfg = ctx.config.replicator.clone().unwrap_or_default();
    if let Some(x0) = cfg
        .initial_shares
        .iter()
        .find(|x| !(**x > 0.0 && **x < 1.0))
    {
        return Err(CliError::Config(format!(
            "replicator.initial_shares: {x0} outside (0, 1)"
        )));
    }
    let options = IntegrationOptions {
        gain: cfg.gain,
        rtol: cfg.rtol,
        horizon: cfg.horizon,
        ..IntegrationOptions::default()
    };
    let target = setup.params.equilibrium()?.share_primary;
    let mut rows = Vec::new();
    let mut endpoints = Vec::new();
    for &x0 in &cfg.initial_shares {
        let traj = match cfg.duration {
            Some(duration) => evolve(&setup.params, x0, duration, &options),
            None => integrate(&setup.params, x0, &options),
        }
        .map_err(|e| match e {
            netsel::Error::InvalidParameter { .. } => CliError::config(e),
            other => CliError::Analysis(other),
        })?;
        for s in &traj.samples {
            rows.push(vec![num(x0), num(s.time), num(s.share_primary)]);
        }
        endpoints.push(
            json!({"x0": x0, "final_share": traj.fixed_point, "final_time": traj.last().time}),
        );
        ctx.say(format!(
            "x0 = {x0}: x(T) = {} at T = {}",
            traj.fixed_point,
            traj.last().time
        ));
    }
    ctx.say(format!("x_P* = {target}"));
    let meta = merged(
        provenance(&setup),
        json!({
            "command": "replicator",
            "gain": cfg.gain,
            "rtol": cfg.rtol,
            "horizon": cfg.horizon,
            "duration": cfg.duration,
            "equilibrium_share": target,
            "endpoints": endpoints,
        }),
    );
    ctx.out
        .write_table("replicator", Schema::Replicator, &rows, meta)?;
    Ok(())
}
