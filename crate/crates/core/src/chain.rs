//! Birth-death chain over the number of primary users `k ∈ 0..=N`.
//!
//! One chain step is one revision event: a focal genuine user is sampled,
//! meets a random opponent (genuine or anchored) and copies the opponent's
//! network with probability `q(π_opponent − π_own)`.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::NetworkParams;
use crate::protocols::ImitationRule;

/// Tolerance for row sums and for normalisation of distributions.
pub const ROW_TOLERANCE: f64 = 1e-12;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Relative gap below which two probabilities count as tied for the mode.
pub const MODE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PopulationConfig {
    n: usize,
    anchored_primary: usize,
    anchored_secondary: usize,
}

impl PopulationConfig {
    /// `n` counts genuine users only; anchored users never switch and are
    /// not part of the state.
    pub fn new(n: usize, anchored_primary: usize, anchored_secondary: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(
                "n",
                format!("needs at least two genuine users, got {n}"),
            ));
        }
        Ok(Self {
            n,
            anchored_primary,
            anchored_secondary,
        })
    }

    pub fn without_anchors(n: usize) -> Result<Self> {
        Self::new(n, 0, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn anchored_primary(&self) -> usize {
        self.anchored_primary
    }

    pub fn anchored_secondary(&self) -> usize {
        self.anchored_secondary
    }
}

/// The inputs a kernel was built from.
#[derive(Debug, Clone)]
pub struct KernelProvenance {
    pub params: NetworkParams,
    pub population: PopulationConfig,
    pub rule: ImitationRule,
}

/// Per-state transition probabilities of a birth-death chain.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    up: Vec<f64>,
    down: Vec<f64>,
    stay: Vec<f64>,
    provenance: Option<KernelProvenance>,
}

impl TransitionKernel {
    /// Kernel from raw `T_k^+` / `T_k^-` arrays over `0..=N`.
    pub fn from_rates(up: Vec<f64>, down: Vec<f64>) -> Result<Self> {
        if up.len() != down.len() {
            return Err(invalid("down", "length differs from up"));
        }
        if up.len() < 3 {
            return Err(invalid("up", "needs at least three states"));
        }
        let n = up.len() - 1;
        if up[n] != 0.0 {
            return Err(invalid("up", "up[N] must be zero"));
        }
        if down[0] != 0.0 {
            return Err(invalid("down", "down[0] must be zero"));
        }
        let mut stay = Vec::with_capacity(up.len());
        for (k, (&u, &d)) in up.iter().zip(&down).enumerate() {
            if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&d) {
                return Err(invalid(
                    "rates",
                    format!("state {k}: up={u}, down={d} not in [0,1]"),
                ));
            }
            let s = 1.0 - u - d;
            if s < -ROW_TOLERANCE {
                return Err(invalid(
                    "rates",
                    format!("state {k}: up + down = {} > 1", u + d),
                ));
            }
            stay.push(s.max(0.0));
        }
        Ok(Self {
            up,
            down,
            stay,
            provenance: None,
        })
    }

    /// `N`, the largest state.
    pub fn n(&self) -> usize {
        self.up.len() - 1
    }

    pub fn up(&self) -> &[f64] {
        &self.up
    }

    pub fn down(&self) -> &[f64] {
        &self.down
    }

    pub fn stay(&self) -> &[f64] {
        &self.stay
    }

    pub fn provenance(&self) -> Option<&KernelProvenance> {
        self.provenance.as_ref()
    }
}

/// Transition probabilities with anchored users:
///
/// `T_k^+ = (N−k)/N · (k+A_P)/(N−1+A_P+A_S) · q(π_P^k − π_S)`
/// `T_k^- = k/N · (N−k+A_S)/(N−1+A_P+A_S) · q(π_S − π_P^k)`
///
/// With `A_P = A_S = 0` these are the plain two-strategy imitation forms.
pub fn build_kernel(
    params: &NetworkParams,
    pop: &PopulationConfig,
    rule: &ImitationRule,
) -> TransitionKernel {
    let n = pop.n;
    let nf = n as f64;
    let (ap, asec) = (pop.anchored_primary as f64, pop.anchored_secondary as f64);
    let opponents = nf - 1.0 + ap + asec;
    let secondary_utility = params.utility_secondary();

    let mut up = Vec::with_capacity(n + 1);
    let mut down = Vec::with_capacity(n + 1);
    let mut stay = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let kf = k as f64;
        let gap = params.utility_primary_at_share(kf / nf) - secondary_utility;
        let u = (nf - kf) / nf * ((kf + ap) / opponents) * rule.imitation_probability(gap);
        let d = kf / nf * ((nf - kf + asec) / opponents) * rule.imitation_probability(-gap);
        up.push(u);
        down.push(d);
        stay.push(1.0 - u - d);
    }
    TransitionKernel {
        up,
        down,
        stay,
        provenance: Some(KernelProvenance {
            params: *params,
            population: *pop,
            rule: rule.clone(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ChainClass {
    /// `0` and `N` absorb; every interior state reaches one of them.
    Absorbing,
    /// Every state reaches every other state.
    Irreducible,
    /// Neither pattern, e.g. the one-way flow of noise-free imitation.
    Other { diagnostics: String },
}

impl fmt::Display for ChainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Absorbing => f.write_str("absorbing"),
            Self::Irreducible => f.write_str("irreducible"),
            Self::Other { diagnostics } => write!(f, "other ({diagnostics})"),
        }
    }
}

/// Classification from the strict-positivity pattern of `up` / `down`.
pub fn classify(kernel: &TransitionKernel) -> ChainClass {
    let n = kernel.n();
    let (up, down) = (&kernel.up, &kernel.down);
    if (0..n).all(|k| up[k] > 0.0) && (1..=n).all(|k| down[k] > 0.0) {
        return ChainClass::Irreducible;
    }
    if up[0] == 0.0 && down[n] == 0.0 {
        // k reaches 0 iff down > 0 on 1..=k; reaches N iff up > 0 on k..N
        let mut reaches_zero = vec![false; n + 1];
        reaches_zero[0] = true;
        for k in 1..=n {
            reaches_zero[k] = reaches_zero[k - 1] && down[k] > 0.0;
        }
        let mut reaches_top = vec![false; n + 1];
        reaches_top[n] = true;
        for k in (0..n).rev() {
            reaches_top[k] = reaches_top[k + 1] && up[k] > 0.0;
        }
        let stuck: Vec<usize> = (1..n)
            .filter(|&k| !reaches_zero[k] && !reaches_top[k])
            .collect();
        if stuck.is_empty() {
            return ChainClass::Absorbing;
        }
        return ChainClass::Other {
            diagnostics: format!("interior states {stuck:?} cannot reach 0 or N"),
        };
    }
    let zero_up: Vec<usize> = (0..n).filter(|&k| up[k] == 0.0).collect();
    let zero_down: Vec<usize> = (1..=n).filter(|&k| down[k] == 0.0).collect();
    ChainClass::Other {
        diagnostics: format!("up = 0 at {zero_up:?}, down = 0 at {zero_down:?}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    TwoPointNoiseFree,
    ProductForm,
    Eigenvector,
    Empirical,
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TwoPointNoiseFree => "two_point_noise_free",
            Self::ProductForm => "product_form",
            Self::Eigenvector => "eigenvector",
            Self::Empirical => "empirical",
        })
    }
}

/// Probability vector over states `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    psi: Vec<f64>,
    kind: DistributionKind,
}

impl StationaryDistribution {
    pub fn new(psi: Vec<f64>, kind: DistributionKind) -> Result<Self> {
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
        Ok(Self { psi, kind })
    }

    /// Normalises nonnegative weights.
    pub fn from_weights(weights: Vec<f64>, kind: DistributionKind) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(invalid(
                "weights",
                format!("total weight {total} is not positive"),
            ));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect(), kind)
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.psi.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.psi.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.psi
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(2) * p)
            .sum()
    }

    /// States with nonzero probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.psi.len()).filter(|&k| self.psi[k] > 0.0).collect()
    }

    /// Half the L1 distance.
    pub fn total_variation(&self, other: &[f64]) -> f64 {
        0.5 * self
            .psi
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Two-point law on `{k*−1, k*}` of noise-free imitation started in the
/// interior. Flow is one-way towards `k*` from both sides, so the chain
/// ends up cycling between the two states adjacent to the equilibrium.
pub fn stationary_noise_free(kernel: &TransitionKernel) -> Result<StationaryDistribution> {
    let prov = kernel
        .provenance
        .as_ref()
        .ok_or_else(|| invalid("kernel", "noise-free law needs a kernel built from params"))?;
    if !prov.rule.is_noise_free() {
        return Err(Error::NotNoiseFree);
    }
    let n = kernel.n();
    let k_star = prov.params.critical_state(n)?;
    if k_star == 0 || k_star >= n {
        return Err(Error::BoundaryCriticalState { k_star, n });
    }
    let into_upper = kernel.up[k_star - 1];
    let into_lower = kernel.down[k_star];
    let total = into_upper + into_lower;
    if total <= 0.0 {
        return Err(invalid(
            "kernel",
            format!("no flow between {} and {k_star}", k_star - 1),
        ));
    }
    let mut psi = vec![0.0; n + 1];
    // ψ_{k*} = T^+_{k*−1} / (T^+_{k*−1} + T^-_{k*}), written as the
    // complement so the two entries sum to exactly 1
    psi[k_star - 1] = into_lower / total;
    psi[k_star] = 1.0 - psi[k_star - 1];
    StationaryDistribution::new(psi, DistributionKind::TwoPointNoiseFree)
}

/// Product form `ψ_k ∝ Π_{m=1}^{k} T_{m−1}^+ / T_m^-`, accumulated in log
/// space so that `N` in the thousands neither overflows nor underflows.
pub fn stationary_product(kernel: &TransitionKernel) -> Result<StationaryDistribution> {
    require_class(kernel, ChainClass::Irreducible, "irreducible")?;
    let n = kernel.n();
    let mut log_psi = Vec::with_capacity(n + 1);
    log_psi.push(0.0);
    let mut acc = 0.0;
    for m in 1..=n {
        acc += kernel.up[m - 1].ln() - kernel.down[m].ln();
        log_psi.push(acc);
    }
    let peak = log_psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = log_psi.into_iter().map(|l| (l - peak).exp()).collect();
    StationaryDistribution::from_weights(weights, DistributionKind::ProductForm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EigenMethod {
    #[default]
    /// Null vector of the global balance equations `ψ(P − I) = 0`, solved by
    /// a twisted tridiagonal factorisation.
    Balance,
    /// `ψ ← ψP` from the uniform vector. Slow mixing makes this practical
    /// only for small chains.
    PowerIteration {
        max_iterations: usize,
        tolerance: f64,
    },
}

/// Left fixed vector of the transition matrix.
pub fn stationary_eigen(
    kernel: &TransitionKernel,
    method: EigenMethod,
) -> Result<StationaryDistribution> {
    require_class(kernel, ChainClass::Irreducible, "irreducible")?;
    let weights = match method {
        EigenMethod::Balance => balance_null_vector(kernel)?,
        EigenMethod::PowerIteration {
            max_iterations,
            tolerance,
        } => power_iteration(kernel, max_iterations, tolerance)?,
    };
    StationaryDistribution::from_weights(weights, DistributionKind::Eigenvector)
}

/// Row `j` of `(P − I)ᵀ` reads
/// `T_{j−1}^+ ψ_{j−1} − (T_j^+ + T_j^-) ψ_j + T_{j+1}^- ψ_{j+1} = 0`.
///
/// Top-down elimination loses accuracy where `T^- > T^+` and bottom-up
/// elimination where `T^+ > T^-`, so both sweeps are run and joined at the
/// row whose twisted pivot is closest to zero.
fn balance_null_vector(kernel: &TransitionKernel) -> Result<Vec<f64>> {
    let n = kernel.n();
    let (up, down) = (&kernel.up, &kernel.down);
    let sub = |j: usize| if j == 0 { 0.0 } else { up[j - 1] };
    let diag = |j: usize| -(up[j] + down[j]);
    let sup = |j: usize| if j == n { 0.0 } else { down[j + 1] };

    let mut forward = vec![0.0; n + 1];
    forward[0] = diag(0);
    for j in 1..=n {
        forward[j] = diag(j) - sub(j) * sup(j - 1) / forward[j - 1];
    }
    let mut backward = vec![0.0; n + 1];
    backward[n] = diag(n);
    for j in (0..n).rev() {
        backward[j] = diag(j) - sup(j) * sub(j + 1) / backward[j + 1];
    }

    let mut twist = 0;
    let mut best = f64::INFINITY;
    for m in 0..=n {
        let mut gamma = diag(m);
        if m > 0 {
            gamma -= sub(m) * sup(m - 1) / forward[m - 1];
        }
        if m < n {
            gamma -= sup(m) * sub(m + 1) / backward[m + 1];
        }
        let score = (gamma / diag(m)).abs();
        if score.is_finite() && score < best {
            best = score;
            twist = m;
        }
    }
    if !best.is_finite() {
        return Err(Error::NoConvergence {
            iterations: n + 1,
            residual: best,
        });
    }

    let mut z = vec![0.0; n + 1];
    z[twist] = 1.0;
    for j in (0..twist).rev() {
        z[j] = -sup(j) / forward[j] * z[j + 1];
    }
    for j in twist + 1..=n {
        z[j] = -sub(j) / backward[j] * z[j - 1];
    }
    if z.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NoConvergence {
            iterations: n + 1,
            residual: f64::NAN,
        });
    }
    Ok(z)
}

fn power_iteration(
    kernel: &TransitionKernel,
    max_iterations: usize,
    tolerance: f64,
) -> Result<Vec<f64>> {
    let n = kernel.n();
    let mut psi = vec![1.0 / (n + 1) as f64; n + 1];
    let mut next = vec![0.0; n + 1];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        for j in 0..=n {
            let mut v = psi[j] * kernel.stay[j];
            if j > 0 {
                v += psi[j - 1] * kernel.up[j - 1];
            }
            if j < n {
                v += psi[j + 1] * kernel.down[j + 1];
            }
            next[j] = v;
        }
        let total: f64 = next.iter().sum();
        residual = 0.0;
        for j in 0..=n {
            let v = next[j] / total;
            residual = residual.max((v - psi[j]).abs());
            psi[j] = v;
        }
        if residual < tolerance {
            return Ok(psi);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorptionReport {
    pub prob_absorb_at_0: f64,
    pub prob_absorb_at_n: f64,
    /// Expected number of revision events until absorption.
    pub expected_steps: f64,
}

/// Exact absorption probabilities and hitting time from `initial`, by
/// first-step analysis on the interior states.
pub fn absorption_analysis(kernel: &TransitionKernel, initial: usize) -> Result<AbsorptionReport> {
    require_class(kernel, ChainClass::Absorbing, "absorbing")?;
    let n = kernel.n();
    if initial > n {
        return Err(Error::Domain {
            what: "initial state",
            value: initial as f64,
            range: format!("0..={n}"),
        });
    }
    let solution = absorption_table(kernel);
    Ok(solution[initial])
}

/// [`absorption_analysis`] for every initial state at once.
pub fn absorption_table(kernel: &TransitionKernel) -> Vec<AbsorptionReport> {
    let n = kernel.n();
    let solver = FirstStepSolver::new(kernel);
    let mut to_top = vec![0.0; n + 1];
    to_top[n - 1] = kernel.up[n - 1];
    let mut to_zero = vec![0.0; n + 1];
    to_zero[1] = kernel.down[1];
    let mut steps = vec![1.0; n + 1];
    steps[0] = 0.0;
    steps[n] = 0.0;
    let (h_top, h_zero, t) = (
        solver.solve(&to_top),
        solver.solve(&to_zero),
        solver.solve(&steps),
    );

    let mut table = Vec::with_capacity(n + 1);
    table.push(AbsorptionReport {
        prob_absorb_at_0: 1.0,
        prob_absorb_at_n: 0.0,
        expected_steps: 0.0,
    });
    for k in 1..n {
        table.push(AbsorptionReport {
            prob_absorb_at_0: h_zero[k],
            prob_absorb_at_n: h_top[k],
            expected_steps: t[k],
        });
    }
    table.push(AbsorptionReport {
        prob_absorb_at_0: 0.0,
        prob_absorb_at_n: 1.0,
        expected_steps: 0.0,
    });
    table
}

/// Solves `(T_k^+ + T_k^-) x_k − T_k^+ x_{k+1} − T_k^- x_{k−1} = b_k` on the
/// interior states with `x_0 = x_N = 0` and `b ≥ 0`.
///
/// Gaussian elimination with the pivots rewritten as `T_k^+ + s_k`,
/// `s_k = T_k^- s_{k−1} / pivot_{k−1}`, so that every operation adds
/// nonnegative terms. Metastable chains (escape times ≫ 1e6) keep full
/// relative accuracy this way; plain elimination cancels in the pivots.
struct FirstStepSolver<'a> {
    kernel: &'a TransitionKernel,
    pivots: Vec<f64>,
}

impl<'a> FirstStepSolver<'a> {
    fn new(kernel: &'a TransitionKernel) -> Self {
        let n = kernel.n();
        let (up, down) = (&kernel.up, &kernel.down);
        let mut pivots = vec![0.0; n + 1];
        let mut excess = down[1];
        pivots[1] = up[1] + excess;
        for k in 2..n {
            excess = down[k] * excess / pivots[k - 1];
            pivots[k] = up[k] + excess;
        }
        Self { kernel, pivots }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.kernel.n();
        let (up, down) = (&self.kernel.up, &self.kernel.down);
        let mut x = vec![0.0; n + 1];
        x[1] = rhs[1] / self.pivots[1];
        for k in 2..n {
            x[k] = (rhs[k] + down[k] * x[k - 1]) / self.pivots[k];
        }
        for k in (1..n - 1).rev() {
            x[k] += up[k] / self.pivots[k] * x[k + 1];
        }
        x
    }
}

/// All states attaining the maximum of `ψ`, ties within a relative
/// [`MODE_TIE_TOLERANCE`].
pub fn distribution_mode(dist: &StationaryDistribution) -> Vec<usize> {
    distribution_mode_with_tolerance(dist, MODE_TIE_TOLERANCE)
}

pub fn distribution_mode_with_tolerance(dist: &StationaryDistribution, rel_tol: f64) -> Vec<usize> {
    let peak = dist.psi.iter().copied().fold(0.0, f64::max);
    (0..dist.psi.len())
        .filter(|&k| peak - dist.psi[k] <= rel_tol * peak)
        .collect()
}

fn require_class(kernel: &TransitionKernel, wanted: ChainClass, label: &'static str) -> Result<()> {
    let class = classify(kernel);
    if class == wanted {
        Ok(())
    } else {
        Err(Error::WrongChainClass {
            expected: label,
            found: class.to_string(),
        })
    }
}
