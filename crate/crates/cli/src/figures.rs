//! Built-in datasets behind each figure. All pipelines are deterministic.

use std::fmt;

use clap::ValueEnum;
use netsel::chain::{absorption_table, build_kernel, stationary_noise_free, PopulationConfig};
use netsel::{BetaSpec, NetworkParams};
use serde_json::json;

use crate::analysis::{
    analyze, distribution_summary, gaussian_overlay, merged, provenance, Analysis,
};
use crate::commands::{run_sweep, sweep_setup};
use crate::config::{RuleSpec, Setup, SweepVariable, REFERENCE_TARGET_SHARE};
use crate::error::CliError;
use crate::output::{distribution_rows, num, OutputDir, Schema};

pub const CAPACITY: f64 = 100.0;
pub const DELAY_WEIGHT: f64 = 1.0;
pub const ARRIVAL: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    All,
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.to_possible_value().expect("no skipped variants");
        f.write_str(name.get_name())
    }
}

impl Figure {
    pub const EACH: [Figure; 6] = [
        Self::Fig1a,
        Self::Fig1b,
        Self::Fig2a,
        Self::Fig2b,
        Self::Fig3a,
        Self::Fig3b,
    ];
}

/// Reference setup with the calibrated price gap.
fn reference(n: usize, anchors: usize, rule: RuleSpec) -> Setup {
    Setup {
        params: NetworkParams::calibrated(CAPACITY, ARRIVAL, DELAY_WEIGHT, REFERENCE_TARGET_SHARE)
            .expect("reference parameters are valid"),
        calibration_target: Some(REFERENCE_TARGET_SHARE),
        population: PopulationConfig::new(n, anchors, anchors).expect("n >= 2"),
        rule,
    }
}

fn noise_free() -> RuleSpec {
    RuleSpec::Proportional { scale: 1.0 }
}

fn fermi(ratio: f64) -> RuleSpec {
    RuleSpec::Fermi(BetaSpec::Ratio(ratio))
}

/// λ = 1, 2, …, 99.
fn arrival_grid() -> Vec<f64> {
    (1..100).map(f64::from).collect()
}

pub fn reproduce(figure: Figure, out: &mut OutputDir) -> Result<(), CliError> {
    match figure {
        Figure::Fig1a => fig1a(out),
        Figure::Fig1b => fig1b(out),
        Figure::Fig2a => fig2a(out),
        Figure::Fig2b => fig2b(out),
        Figure::Fig3a => fig3a(out),
        Figure::Fig3b => fig3b(out),
        Figure::All => Figure::EACH.iter().try_for_each(|&f| reproduce(f, out)),
    }
}

fn figure_meta(setup: &Setup, figure: Figure, extra: serde_json::Value) -> serde_json::Value {
    merged(
        merged(
            provenance(setup),
            json!({"command": "reproduce", "figure": figure.to_string()}),
        ),
        extra,
    )
}

fn fig1a(out: &mut OutputDir) -> Result<(), CliError> {
    let setup = reference(10, 0, noise_free());
    let rule = setup.imitation_rule()?;
    let (_, analysis) = analyze(&setup.params, &setup.population, &rule)?;
    let Analysis::Distribution(dist) = analysis else {
        unreachable!("noise-free rules always yield a distribution")
    };
    let summary = distribution_summary(&setup.params, &dist)?;
    let meta = figure_meta(
        &setup,
        Figure::Fig1a,
        merged(
            summary,
            json!({"series": "noise-free stationary law from an interior start"}),
        ),
    );
    out.write_table(
        "fig1a",
        Schema::Distribution,
        &distribution_rows(dist.psi()),
        meta,
    )?;
    Ok(())
}

/// Long-run law of noise-free imitation from an interior start. With `k*`
/// on the boundary every interior state drifts the same way, so the law is
/// the point mass at `0` or `N`.
fn noise_free_law(setup: &Setup) -> netsel::Result<(Vec<f64>, bool)> {
    let n = setup.population.n();
    let k_star = setup.params.critical_state(n)?;
    if k_star == 0 || k_star >= n {
        let mut psi = vec![0.0; n + 1];
        psi[k_star.min(n)] = 1.0;
        return Ok((psi, true));
    }
    let rule = setup.rule.build(&setup.params, n)?;
    let kernel = build_kernel(&setup.params, &setup.population, &rule);
    Ok((stationary_noise_free(&kernel)?.psi().to_vec(), false))
}

fn fig1b(out: &mut OutputDir) -> Result<(), CliError> {
    let grid = arrival_grid();
    let mut rows = Vec::new();
    let mut boundary_points = Vec::new();
    for (n, metric) in [(10, "poa_expected_n10"), (100, "poa_expected_n100")] {
        let setup = reference(n, 0, noise_free());
        let result = run_sweep(&setup, SweepVariable::Lambda, &grid, |s| {
            let (psi, _) = noise_free_law(s)?;
            Ok(vec![(metric, s.params.expected_poa(&psi)?)])
        });
        for &arrival in &grid {
            let s = sweep_setup(&setup, SweepVariable::Lambda, arrival)?;
            if noise_free_law(&s)?.1 {
                boundary_points.push(json!({"n": n, "lambda": arrival}));
            }
        }
        rows.extend(result.rows);
    }
    let setup = reference(10, 0, noise_free());
    let nash = run_sweep(&setup, SweepVariable::Lambda, &grid, |s| {
        let share = s.params.equilibrium()?.share_primary;
        Ok(vec![("poa_nash", s.params.poa_at(share)?)])
    });
    rows.extend(nash.rows);
    let meta = figure_meta(
        &setup,
        Figure::Fig1b,
        json!({
            "sweep_variable": "lambda",
            "prices_fixed_across_lambda": true,
            "population_sizes": [10, 100],
            "reference_line": 1.1,
            "boundary_points": boundary_points,
            "boundary_note": "k* at 0 or N: every interior state drifts one way, law is the point mass at that boundary",
        }),
    );
    out.write_table("fig1b", Schema::Sweep, &rows, meta)?;
    Ok(())
}

fn fig2a(out: &mut OutputDir) -> Result<(), CliError> {
    let ratio = 1.0;
    let setup = reference(10, 0, fermi(ratio));
    let rule = setup.imitation_rule()?;
    let kernel = build_kernel(&setup.params, &setup.population, &rule);
    let table = absorption_table(&kernel);
    let k_star = setup.params.critical_state(10)?;
    let mut rows = Vec::new();
    for (k, r) in table.iter().enumerate() {
        let k = num(k as f64);
        rows.push(vec![
            k.clone(),
            "prob_absorb_at_n".into(),
            num(r.prob_absorb_at_n),
        ]);
        rows.push(vec![
            k.clone(),
            "prob_absorb_at_0".into(),
            num(r.prob_absorb_at_0),
        ]);
        rows.push(vec![k, "expected_steps".into(), num(r.expected_steps)]);
    }
    let meta = figure_meta(
        &setup,
        Figure::Fig2a,
        json!({
            "sweep_variable": "initial_state",
            "beta_ratio_note": "intensity behind this figure is unstated; beta/beta_0 = 1 is used",
            "highlighted_initial_state": k_star,
            "prob_absorb_at_n_from_k_star": table[k_star].prob_absorb_at_n,
        }),
    );
    out.write_table("fig2a", Schema::Sweep, &rows, meta)?;
    Ok(())
}

fn fig2b(out: &mut OutputDir) -> Result<(), CliError> {
    let setup = reference(10, 0, fermi(1.0));
    let result = run_sweep(&setup, SweepVariable::Lambda, &arrival_grid(), |s| {
        Ok(vec![("poa_absorbing", s.params.poa_absorbing())])
    });
    let meta = figure_meta(
        &setup,
        Figure::Fig2b,
        json!({
            "sweep_variable": "lambda",
            "series": "closed-form PoA when only all-primary and all-secondary states are stable",
            "reference_line": 1.1,
        }),
    );
    out.write_table("fig2b", Schema::Sweep, &result.rows, meta)?;
    Ok(())
}

fn fig3a(out: &mut OutputDir) -> Result<(), CliError> {
    let mut poa_rows = Vec::new();
    for ratio in [0.0, 1.0, 10.0] {
        let setup = reference(10, 1, fermi(ratio));
        let rule = setup.imitation_rule()?;
        let (_, analysis) = analyze(&setup.params, &setup.population, &rule)?;
        let Analysis::Distribution(dist) = analysis else {
            unreachable!("anchored chains are irreducible")
        };
        let summary = distribution_summary(&setup.params, &dist)?;
        poa_rows.push(vec![
            num(ratio),
            "poa_expected".into(),
            num(summary["poa_expected"].as_f64().unwrap()),
        ]);
        poa_rows.push(vec![
            num(ratio),
            "poa_nash".into(),
            num(summary["poa_nash"].as_f64().unwrap()),
        ]);
        let meta = figure_meta(
            &setup,
            Figure::Fig3a,
            merged(summary, json!({"beta_ratio": ratio})),
        );
        out.write_table(
            &format!("fig3a_beta_ratio_{ratio}"),
            Schema::Distribution,
            &distribution_rows(dist.psi()),
            meta,
        )?;
    }
    let setup = reference(10, 1, fermi(1.0));
    let meta = figure_meta(
        &setup,
        Figure::Fig3a,
        json!({"sweep_variable": "beta_ratio"}),
    );
    out.write_table("fig3a_poa", Schema::Sweep, &poa_rows, meta)?;
    Ok(())
}

fn fig3b(out: &mut OutputDir) -> Result<(), CliError> {
    let mut poa_rows = Vec::new();
    for n in [10usize, 100, 1000] {
        let setup = reference(n, 1, fermi(1.0));
        let rule = setup.imitation_rule()?;
        let (_, analysis) = analyze(&setup.params, &setup.population, &rule)?;
        let Analysis::Distribution(dist) = analysis else {
            unreachable!("anchored chains are irreducible")
        };
        let summary = distribution_summary(&setup.params, &dist)?;
        let center = summary["n_x_star"].as_f64().unwrap();
        let variance = dist.variance();
        poa_rows.push(vec![
            n.to_string(),
            "poa_expected".into(),
            num(summary["poa_expected"].as_f64().unwrap()),
        ]);
        poa_rows.push(vec![
            n.to_string(),
            "poa_nash".into(),
            num(summary["poa_nash"].as_f64().unwrap()),
        ]);
        let meta = figure_meta(&setup, Figure::Fig3b, summary);
        out.write_table(
            &format!("fig3b_n{n}"),
            Schema::Distribution,
            &distribution_rows(dist.psi()),
            meta,
        )?;

        let overlay = gaussian_overlay(n, center, variance);
        let meta = figure_meta(
            &setup,
            Figure::Fig3b,
            json!({
                "series": "normal density centred at N x*, variance of the stationary law, normalised on 0..=N",
                "center": center,
                "variance": variance,
            }),
        );
        out.write_table(
            &format!("fig3b_n{n}_gaussian"),
            Schema::Distribution,
            &distribution_rows(&overlay),
            meta,
        )?;
    }
    let setup = reference(10, 1, fermi(1.0));
    let meta = figure_meta(
        &setup,
        Figure::Fig3b,
        json!({"sweep_variable": "n", "beta_ratio": 1.0}),
    );
    out.write_table("fig3b_poa", Schema::Sweep, &poa_rows, meta)?;
    Ok(())
}
