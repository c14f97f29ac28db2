#![allow(dead_code)]

use netsel::chain::{build_kernel, PopulationConfig, TransitionKernel};
use netsel::{BetaSpec, ImitationRule, NetworkParams};
use rand::Rng;

/// Random environment with an interior equilibrium at `N`, or `None` when
/// `k*` lands on the boundary.
pub fn random_interior_setup<R: Rng>(rng: &mut R, n: usize) -> Option<(NetworkParams, usize)> {
    let capacity = rng.random_range(10.0..1000.0);
    let load = rng.random_range(0.05..0.95);
    let alpha = rng.random_range(0.1..10.0);
    let target = rng.random_range(0.02..0.98);
    let params = NetworkParams::calibrated(capacity, capacity * load, alpha, target).ok()?;
    let k_star = params.critical_state(n).ok()?;
    (1..n).contains(&k_star).then_some((params, k_star))
}

pub fn anchored_fermi(
    params: &NetworkParams,
    n: usize,
    ratio: f64,
    anchors: (usize, usize),
) -> TransitionKernel {
    let pop = PopulationConfig::new(n, anchors.0, anchors.1).unwrap();
    let rule = ImitationRule::fermi_from_spec(BetaSpec::Ratio(ratio), params, n).unwrap();
    build_kernel(params, &pop, &rule)
}

/// Detailed-balance reconstruction in the linear domain, rescaling the whole
/// vector whenever an entry grows past 1e200.
pub fn detailed_balance_oracle(kernel: &TransitionKernel) -> Vec<f64> {
    let n = kernel.n();
    let mut psi = vec![0.0; n + 1];
    psi[0] = 1.0;
    for k in 0..n {
        psi[k + 1] = psi[k] * kernel.up()[k] / kernel.down()[k + 1];
        if psi[k + 1] > 1e200 {
            for v in psi.iter_mut().take(k + 2) {
                *v *= 1e-200;
            }
        }
    }
    let total: f64 = psi.iter().sum();
    psi.iter().map(|v| v / total).collect()
}

pub fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Calibrated reference setup: C = 100, λ = 30, α = 1, x_P* = 0.68.
pub fn reference_params() -> NetworkParams {
    NetworkParams::calibrated(100.0, 30.0, 1.0, 0.68).unwrap()
}
