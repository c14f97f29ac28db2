//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

// `!(a < b)` is deliberate: NaN must fail a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use netsel::chain::{
    absorption_analysis, build_kernel, distribution_mode, stationary_eigen, stationary_noise_free,
    stationary_product, EigenMethod, PopulationConfig, TransitionKernel,
};
use netsel::montecarlo::{absorption_frequency, run};
use netsel::replicator::{integrate, mean_dynamics_rhs, replicator_rhs};
use netsel::{ImitationRule, InitialState, IntegrationOptions, NetworkParams, SimulationSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ac1() -> Outcome {
    let params = reference_params();
    let gap = params.price_gap();
    ensure!(
        (gap - 0.0017229002153625259).abs() < 1e-15,
        "calibrated gap {gap}"
    );
    let k_star = params.critical_state(10).map_err(|e| e.to_string())?;
    let scaled = 10.0
        * params
            .equilibrium()
            .map_err(|e| e.to_string())?
            .share_primary;
    ensure!(k_star == 7, "k* = {k_star}");
    ensure!((scaled - 6.8).abs() <= 1e-9, "N x* = {scaled}");
    Ok(format!("k* = {k_star}, N x* = {scaled:.12}, d = {gap:.8}"))
}

fn ac2() -> Outcome {
    let params = reference_params();
    let kernel = build_kernel(
        &params,
        &PopulationConfig::without_anchors(10).unwrap(),
        &ImitationRule::pairwise_proportional(1.0).unwrap(),
    );
    let dist = stationary_noise_free(&kernel).map_err(|e| e.to_string())?;
    let sum: f64 = dist.psi().iter().sum();
    ensure!(dist.support() == vec![6, 7], "support {:?}", dist.support());
    ensure!(sum == 1.0, "sum = {sum:e}");
    Ok(format!(
        "support {{6,7}}, psi_6 = {:.6}, psi_7 = {:.6}, sum = 1 exactly",
        dist.psi()[6],
        dist.psi()[7]
    ))
}

fn ac3() -> Outcome {
    let poa = |arrival: f64| {
        NetworkParams::calibrated(100.0, arrival, 1.0, 0.68)
            .unwrap()
            .poa_absorbing()
    };
    let (p30, p35) = (poa(30.0), poa(35.0));
    ensure!((p30 - 1.0976).abs() <= 1e-3, "PoA(30) = {p30}");
    ensure!((p35 - 1.1202).abs() <= 1e-3, "PoA(35) = {p35}");
    ensure!(
        (p30 - 1.1) * (p35 - 1.1) < 0.0,
        "no sign change of PoA - 1.1"
    );
    Ok(format!("PoA(30) = {p30:.6}, PoA(35) = {p35:.6}"))
}

/// Prices that make `|Δπ^{k−1}| = |Δπ^{k}|` at population size `n`.
fn tied_params(capacity: f64, arrival: f64, alpha: f64, n: usize, k: usize) -> NetworkParams {
    let delay = |j: usize| alpha / (capacity - arrival * j as f64 / n as f64);
    let p1 = alpha / (capacity - arrival) - (delay(k - 1) + delay(k)) / 2.0;
    NetworkParams::new(capacity, arrival, alpha, p1, 0.0).unwrap()
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut checked = 0;
    let mut violations = Vec::new();
    while checked < 500 {
        let n = rng.random_range(4..=200);
        let Some((params, k_star)) = random_interior_setup(&mut rng, n) else {
            continue;
        };
        let ratio = rng.random_range(0.01..30.0);
        let kernel = anchored_fermi(&params, n, ratio, (1, 1));
        let dist = stationary_product(&kernel).map_err(|e| e.to_string())?;
        let mode = distribution_mode(&dist);
        if !mode.iter().all(|&k| k + 1 == k_star || k == k_star) {
            violations.push(format!("N={n} k*={k_star} mode={mode:?}"));
        }
        checked += 1;
    }
    ensure!(
        violations.is_empty(),
        "{} violations, first {}",
        violations.len(),
        violations[0]
    );

    // one instance per branch of the case split
    let mut branches = 0;
    for (n, ratio) in [(10, 1.0), (10, 10.0), (40, 3.0), (200, 0.5)] {
        // N x* a fifth of a state below k or above k − 1
        let k = (0.65 * n as f64).round() as usize;
        let share = |offset: f64| (k as f64 - offset) / n as f64;
        let cases = [
            (
                NetworkParams::calibrated(100.0, 30.0, 1.0, share(0.2)).unwrap(),
                "upper",
            ),
            (
                NetworkParams::calibrated(100.0, 30.0, 1.0, share(0.8)).unwrap(),
                "lower",
            ),
            (tied_params(100.0, 30.0, 1.0, n, k), "tie"),
        ];
        for (params, branch) in cases {
            let k_star = params.critical_state(n).unwrap();
            let below = params.payoff_gap(k_star - 1, n).unwrap().abs();
            let at = params.payoff_gap(k_star, n).unwrap().abs();
            let expected = match branch {
                "upper" => {
                    ensure!(below > at, "upper branch not constructed at N={n}");
                    vec![k_star]
                }
                "lower" => {
                    ensure!(below < at, "lower branch not constructed at N={n}");
                    vec![k_star - 1]
                }
                _ => {
                    ensure!(
                        (below - at).abs() <= 1e-12 * at,
                        "tie not constructed at N={n}"
                    );
                    vec![k_star - 1, k_star]
                }
            };
            let kernel = anchored_fermi(&params, n, ratio, (1, 1));
            let mode = distribution_mode(&stationary_product(&kernel).unwrap());
            ensure!(
                mode == expected,
                "{branch} branch N={n}: mode {mode:?}, expected {expected:?}"
            );
            branches += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed <= Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "{checked} random setups, 0 violations; {branches} case-split instances; {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn ac5() -> Outcome {
    let params = reference_params();
    let mut worst: f64 = 0.0;
    for n in [10, 100, 1000] {
        let pop = PopulationConfig::new(n, 1, 1).unwrap();
        let kernel = build_kernel(&params, &pop, &ImitationRule::fermi(0.0).unwrap());
        let dist = stationary_product(&kernel).map_err(|e| e.to_string())?;
        let uniform = 1.0 / (n + 1) as f64;
        let err = dist
            .psi()
            .iter()
            .map(|p| (p - uniform).abs())
            .fold(0.0, f64::max);
        ensure!(err <= 1e-12, "N={n}: max deviation {err:e}");
        worst = worst.max(err);
    }
    Ok(format!(
        "max |psi_k - 1/(N+1)| = {worst:.2e} over N in {{10,100,1000}}"
    ))
}

fn random_rates<R: Rng>(rng: &mut R, n: usize) -> TransitionKernel {
    let mut up = vec![0.0; n + 1];
    let mut down = vec![0.0; n + 1];
    for k in 0..n {
        up[k] = rng.random_range(0.05..0.45);
        down[k + 1] = rng.random_range(0.05..0.45);
    }
    TransitionKernel::from_rates(up, down).unwrap()
}

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    let mut checked = 0;
    while checked < 100 {
        let n = match checked % 10 {
            0 => 1000,
            1 => rng.random_range(200..=1000),
            _ => rng.random_range(2..200),
        };
        let kernel = if checked % 5 == 4 {
            random_rates(&mut rng, n)
        } else {
            let Some((params, _)) = random_interior_setup(&mut rng, n) else {
                continue;
            };
            let ratio = rng.random_range(0.0..20.0);
            let anchors = (rng.random_range(1..4), rng.random_range(1..4));
            anchored_fermi(&params, n, ratio, anchors)
        };
        let product = stationary_product(&kernel).map_err(|e| e.to_string())?;
        let balance = stationary_eigen(&kernel, EigenMethod::Balance).map_err(|e| e.to_string())?;
        let oracle = detailed_balance_oracle(&kernel);
        let err = sup_norm(product.psi(), balance.psi()).max(sup_norm(product.psi(), &oracle));
        ensure!(err <= 1e-10, "N={n}: sup-norm {err:e}");
        worst = worst.max(err);
        largest = largest.max(n);
        checked += 1;
    }
    Ok(format!(
        "{checked} kernels up to N={largest}, worst sup-norm {worst:.2e}"
    ))
}

fn binomial_sigma(p: f64, trials: f64) -> f64 {
    (p * (1.0 - p) / trials).sqrt()
}

fn ac7() -> Outcome {
    let start = Instant::now();
    let params = reference_params();
    let kernel = anchored_fermi(&params, 10, 1.0, (1, 1));
    let psi = stationary_product(&kernel).map_err(|e| e.to_string())?;
    let spec = SimulationSpec {
        seed: 7,
        steps: 10_000_000,
        burn_in: 100_000,
        replicas: 1,
        initial_state: InitialState::State(7),
        decimation: None,
    };
    let tv = run(&spec, &kernel)
        .map_err(|e| e.to_string())?
        .histogram
        .total_variation(psi.psi());
    ensure!(tv < 0.02, "TV = {tv}");

    let absorbing = anchored_fermi(&params, 10, 1.0, (0, 0));
    let exact = absorption_analysis(&absorbing, 7).map_err(|e| e.to_string())?;
    let spec = SimulationSpec {
        seed: 77,
        steps: 100_000_000,
        burn_in: 0,
        replicas: 10_000,
        initial_state: InitialState::State(7),
        decimation: None,
    };
    let freq = absorption_frequency(&spec, &absorbing).map_err(|e| e.to_string())?;
    ensure!(
        freq.absorbed == freq.replicas,
        "{} of {} absorbed",
        freq.absorbed,
        freq.replicas
    );
    let bound = 4.0 * binomial_sigma(exact.prob_absorb_at_n, 1e4);
    let miss = (freq.fraction_at_n - exact.prob_absorb_at_n).abs();
    ensure!(
        miss <= bound,
        "split {} vs {} (4 sigma = {bound})",
        freq.fraction_at_n,
        exact.prob_absorb_at_n
    );
    let elapsed = start.elapsed();
    ensure!(elapsed <= Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "TV = {tv:.4}; 10000/10000 absorbed, P(N) {:.4} vs exact {:.4} (4 sigma {bound:.4}); {:.2}s",
        freq.fraction_at_n,
        exact.prob_absorb_at_n,
        elapsed.as_secs_f64()
    ))
}

fn ac8() -> Outcome {
    let params = reference_params();
    let target = params.equilibrium().unwrap().share_primary;
    let options = IntegrationOptions {
        rtol: 1e-12,
        ..IntegrationOptions::default()
    };
    let mut worst_fixed: f64 = 0.0;
    for x0 in [0.1, 0.5, 0.9] {
        let traj = integrate(&params, x0, &options).map_err(|e| e.to_string())?;
        let err = (traj.last().share_primary - target).abs();
        ensure!(err <= 1e-6, "from {x0}: |x - x*| = {err:e}");
        worst_fixed = worst_fixed.max(err);
    }
    let rule = ImitationRule::pairwise_proportional(1.0).unwrap();
    let mut worst_rhs: f64 = 0.0;
    for i in 0..=1000 {
        let x = i as f64 / 1000.0;
        let a = mean_dynamics_rhs(&rule, &params, x).map_err(|e| e.to_string())?;
        let b = replicator_rhs(&params, x, 1.0).map_err(|e| e.to_string())?;
        worst_rhs = worst_rhs.max((a - b).abs());
    }
    ensure!(worst_rhs <= 1e-12, "rhs mismatch {worst_rhs:e}");
    Ok(format!(
        "max |x(T) - x*| = {worst_fixed:.2e}; max rhs mismatch {worst_rhs:.2e}"
    ))
}

fn expected_poa(params: &NetworkParams, n: usize, ratio: f64) -> Result<(f64, Vec<usize>), String> {
    let kernel = anchored_fermi(params, n, ratio, (1, 1));
    let dist = stationary_product(&kernel).map_err(|e| e.to_string())?;
    let poa = params.expected_poa(dist.psi()).map_err(|e| e.to_string())?;
    Ok((poa, distribution_mode(&dist)))
}

fn ac9() -> Outcome {
    let params = reference_params();
    let x_star = params.equilibrium().unwrap().share_primary;
    let by_ratio = [0.0, 1.0, 10.0]
        .iter()
        .map(|&r| expected_poa(&params, 10, r).map(|v| v.0))
        .collect::<Result<Vec<_>, _>>()?;
    ensure!(
        by_ratio.windows(2).all(|w| w[1] <= w[0]),
        "not nonincreasing in noise: {by_ratio:?}"
    );
    let mut by_size = Vec::new();
    for n in [10, 100, 1000] {
        let (poa, mode) = expected_poa(&params, n, 1.0)?;
        for &k in &mode {
            let dist = (k as f64 / n as f64 - x_star).abs();
            ensure!(
                dist <= 1.0 / n as f64 + 1e-12,
                "N={n}: mode {k} is {dist} from x*"
            );
        }
        by_size.push(poa);
    }
    ensure!(
        by_size.windows(2).all(|w| w[1] <= w[0]),
        "not nonincreasing in N: {by_size:?}"
    );
    Ok(format!(
        "PoA_E over ratio 0/1/10: {:.5}/{:.5}/{:.5}; over N 10/100/1000: {:.5}/{:.5}/{:.5}",
        by_ratio[0], by_ratio[1], by_ratio[2], by_size[0], by_size[1], by_size[2]
    ))
}

fn ac10() -> Outcome {
    let mut tested = 0;
    for (capacity, arrival) in [(100.0, 30.0), (100.0, 35.0), (50.0, 45.0), (1000.0, 10.0)] {
        let params = NetworkParams::calibrated(capacity, arrival, 1.0, 0.68).unwrap();
        let boundary = arrival / (capacity - arrival);
        let s0 = params.social_welfare(0.0).unwrap();
        let s1 = params.social_welfare(1.0).unwrap();
        ensure!(
            (s0 - boundary).abs() <= 1e-12 && (s1 - boundary).abs() <= 1e-12,
            "S(0)={s0} S(1)={s1}"
        );

        let grid_min = (0..=100_000)
            .map(|i| params.social_welfare(i as f64 * 1e-5).unwrap())
            .fold(f64::INFINITY, f64::min);
        let s_min = params.social_optimum().total_delay;
        ensure!(
            (grid_min - s_min).abs() <= 1e-6,
            "grid min {grid_min} vs S_min {s_min}"
        );

        // PoA_E on uniform, point masses, noisy and noise-free laws
        let n = 20;
        let mut laws = vec![vec![1.0 / (n + 1) as f64; n + 1]];
        for k in [0, n / 3, n] {
            let mut point = vec![0.0; n + 1];
            point[k] = 1.0;
            laws.push(point);
        }
        for ratio in [0.5, 5.0, 50.0] {
            laws.push(
                stationary_product(&anchored_fermi(&params, n, ratio, (1, 1)))
                    .unwrap()
                    .psi()
                    .to_vec(),
            );
        }
        let noise_free = build_kernel(
            &params,
            &PopulationConfig::without_anchors(n).unwrap(),
            &ImitationRule::pairwise_proportional(1.0).unwrap(),
        );
        laws.push(stationary_noise_free(&noise_free).unwrap().psi().to_vec());
        for psi in &laws {
            let poa = params.expected_poa(psi).map_err(|e| e.to_string())?;
            ensure!(poa >= 1.0, "PoA_E = {poa}");
            tested += 1;
        }
    }
    Ok(format!(
        "S(0) = S(1) = lambda/(C-lambda), grid minimum within 1e-6, PoA_E >= 1 on {tested} laws"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1 equilibrium and critical state", ac1),
        ("AC2 noise-free stationary law", ac2),
        ("AC3 absorbing-case PoA", ac3),
        ("AC4 mode location and case split", ac4),
        ("AC5 uniform law at zero intensity", ac5),
        ("AC6 stationary solver agreement", ac6),
        ("AC7 Monte Carlo convergence", ac7),
        ("AC8 replicator consistency", ac8),
        ("AC9 noise and size trends", ac9),
        ("AC10 welfare identities", ac10),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
