//! Seeded simulation of the imitation chain.
//!
//! Every replica draws from its own ChaCha20 stream (`seed`, stream =
//! replica index), so replicas never share random numbers and results do not
//! depend on how rayon schedules them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{classify, ChainClass, TransitionKernel};
use crate::error::{invalid, Error, Result};

/// Recorded in output metadata.
pub const RNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = replica index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    State(usize),
    /// Uniform over `1..N`, drawn from the replica's own stream.
    UniformInterior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSpec {
    pub seed: u64,
    /// Revision events per replica.
    pub steps: u64,
    /// Events discarded before occupancy counting starts.
    pub burn_in: u64,
    pub replicas: usize,
    pub initial_state: InitialState,
    /// Keep every `decimation`-th state of each replica's path; `None` keeps
    /// no path.
    pub decimation: Option<u64>,
}

impl SimulationSpec {
    /// Spec with the default burn-in of `10·N²` events.
    pub fn with_default_burn_in(
        seed: u64,
        steps: u64,
        replicas: usize,
        initial_state: InitialState,
        n: usize,
    ) -> Self {
        Self {
            seed,
            steps,
            burn_in: default_burn_in(n),
            replicas,
            initial_state,
            decimation: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.replicas == 0 {
            return Err(invalid("replicas", "must be >= 1"));
        }
        if self.burn_in >= self.steps {
            return Err(invalid(
                "burn_in",
                format!("must be < steps ({} >= {})", self.burn_in, self.steps),
            ));
        }
        if let InitialState::State(k) = self.initial_state {
            if k > n {
                return Err(invalid("initial_state", format!("{k} outside 0..={n}")));
            }
        }
        if self.decimation == Some(0) {
            return Err(invalid("decimation", "must be >= 1"));
        }
        Ok(())
    }
}

pub fn default_burn_in(n: usize) -> u64 {
    10 * (n as u64) * (n as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccupancyHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl OccupancyHistogram {
    fn empty(n: usize) -> Self {
        Self {
            counts: vec![0; n + 1],
            total: 0,
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Half the L1 distance between the normalised histogram and `psi`.
    pub fn total_variation(&self, psi: &[f64]) -> f64 {
        0.5 * self
            .frequencies()
            .iter()
            .zip(psi)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaPath {
    /// `(event, k)` pairs; event 0 is the initial state.
    pub points: Vec<(u64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationOutput {
    pub histogram: OccupancyHistogram,
    pub final_states: Vec<usize>,
    /// One path per replica when decimation is set, else empty.
    pub paths: Vec<ReplicaPath>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorptionFrequency {
    pub fraction_at_0: f64,
    pub fraction_at_n: f64,
    /// Mean events to absorption over absorbed replicas.
    pub mean_steps: f64,
    pub absorbed: usize,
    pub replicas: usize,
}

impl AbsorptionFrequency {
    pub fn unabsorbed_fraction(&self) -> f64 {
        1.0 - self.absorbed as f64 / self.replicas as f64
    }
}

/// Random stream of replica `index`.
pub fn replica_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One revision event from state `k`, consuming exactly one uniform draw.
pub fn step<R: Rng + ?Sized>(k: usize, kernel: &TransitionKernel, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let up = kernel.up()[k];
    if u < up {
        k + 1
    } else if u < up + kernel.down()[k] {
        k - 1
    } else {
        k
    }
}

fn initial_state<R: Rng + ?Sized>(initial: InitialState, n: usize, rng: &mut R) -> usize {
    match initial {
        InitialState::State(k) => k,
        InitialState::UniformInterior => rng.random_range(1..n),
    }
}

struct ReplicaResult {
    histogram: OccupancyHistogram,
    final_state: usize,
    path: Option<ReplicaPath>,
}

fn run_replica(spec: &SimulationSpec, kernel: &TransitionKernel, index: usize) -> ReplicaResult {
    let n = kernel.n();
    let mut rng = replica_rng(spec.seed, index);
    let mut k = initial_state(spec.initial_state, n, &mut rng);
    let mut histogram = OccupancyHistogram::empty(n);
    let mut path = spec.decimation.map(|_| ReplicaPath {
        points: vec![(0, k)],
    });
    for event in 1..=spec.steps {
        k = step(k, kernel, &mut rng);
        if event > spec.burn_in {
            histogram.counts[k] += 1;
        }
        if let (Some(every), Some(path)) = (spec.decimation, path.as_mut()) {
            if event % every == 0 {
                path.points.push((event, k));
            }
        }
    }
    histogram.total = spec.steps - spec.burn_in;
    ReplicaResult {
        histogram,
        final_state: k,
        path,
    }
}

/// Runs all replicas and merges their post-burn-in occupancy.
pub fn run(spec: &SimulationSpec, kernel: &TransitionKernel) -> Result<SimulationOutput> {
    let n = kernel.n();
    spec.validate(n)?;
    let results: Vec<ReplicaResult> = (0..spec.replicas)
        .into_par_iter()
        .map(|index| run_replica(spec, kernel, index))
        .collect();
    let histogram = results.iter().fold(OccupancyHistogram::empty(n), |acc, r| {
        acc.merge(&r.histogram)
    });
    let final_states = results.iter().map(|r| r.final_state).collect();
    let paths = results.into_iter().filter_map(|r| r.path).collect();
    Ok(SimulationOutput {
        histogram,
        final_states,
        paths,
    })
}

/// Runs each replica until it hits `0` or `N`, or `spec.steps` events.
pub fn absorption_frequency(
    spec: &SimulationSpec,
    kernel: &TransitionKernel,
) -> Result<AbsorptionFrequency> {
    let n = kernel.n();
    let class = classify(kernel);
    if class != ChainClass::Absorbing {
        return Err(Error::WrongChainClass {
            expected: "absorbing",
            found: class.to_string(),
        });
    }
    if spec.replicas == 0 {
        return Err(invalid("replicas", "must be >= 1"));
    }
    if let InitialState::State(k) = spec.initial_state {
        if k > n {
            return Err(invalid("initial_state", format!("{k} outside 0..={n}")));
        }
    }
    let outcomes: Vec<(usize, u64)> = (0..spec.replicas)
        .into_par_iter()
        .map(|index| {
            let mut rng = replica_rng(spec.seed, index);
            let mut k = initial_state(spec.initial_state, n, &mut rng);
            let mut events = 0;
            while k != 0 && k != n && events < spec.steps {
                k = step(k, kernel, &mut rng);
                events += 1;
            }
            (k, events)
        })
        .collect();

    let mut at_zero = 0usize;
    let mut at_top = 0usize;
    let mut absorbed_steps = 0u64;
    for &(k, events) in &outcomes {
        if k == 0 || k == n {
            absorbed_steps += events;
            if k == 0 {
                at_zero += 1;
            } else {
                at_top += 1;
            }
        }
    }
    let absorbed = at_zero + at_top;
    let replicas = spec.replicas;
    let report = AbsorptionFrequency {
        fraction_at_0: at_zero as f64 / replicas as f64,
        fraction_at_n: at_top as f64 / replicas as f64,
        mean_steps: if absorbed > 0 {
            absorbed_steps as f64 / absorbed as f64
        } else {
            f64::NAN
        },
        absorbed,
        replicas,
    };
    if report.unabsorbed_fraction() > 0.01 {
        log::warn!(
            "{} of {} replicas unabsorbed after {} events",
            replicas - absorbed,
            replicas,
            spec.steps
        );
    }
    Ok(report)
}
