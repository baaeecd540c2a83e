//! Trajectory sampling of the measurement protocol.
//!
//! Sampling is bit-reproducible: trajectory `t` always uses stream `t`
//! of a counter-based generator keyed by the master seed, trajectories
//! are aggregated in fixed blocks, and block partials are folded in
//! block order. The result is identical bytes for identical
//! `(spec, trajectories, seed)` regardless of how many worker threads
//! run the blocks. Within a trajectory the draw order is fixed:
//! initial level, then wait atom and outcome per measurement, then the
//! final level.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{self, HeatDistribution};
use crate::protocol::{InitialStateMode, ProtocolSpec, StochasticMatrix};
use crate::tol;

/// Trajectories per aggregation block.
const BLOCK: u64 = 4096;

/// Compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Aggregated sampling results. Counts use the row-major layout
/// `index = m * N + n` for final level `m` and initial level `n`; the
/// heat histogram is aligned with `support`, the exact distribution's
/// atoms, by nearest-atom binning.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStatistics {
    pub trajectories: u64,
    pub seed: u64,
    /// Support of the exact heat distribution used for binning.
    pub support: Vec<f64>,
    /// Exact probabilities of the support atoms.
    pub exact_probabilities: Vec<f64>,
    /// Sampled counts per support atom.
    pub heat_counts: Vec<u64>,
    /// Counts of `(final level m, initial level n)` pairs.
    pub conditional_counts: Vec<u64>,
    /// Counts of initial levels.
    pub initial_counts: Vec<u64>,
    /// Sample mean of the heat.
    pub mean_heat: f64,
    /// Sample mean of the squared heat.
    pub mean_heat_sq: f64,
    /// Mean of `exp(-beta Q)` for a thermal initial state.
    pub jarzynski_mean: Option<f64>,
    /// Standard error of the `exp(-beta Q)` mean.
    pub jarzynski_std_error: Option<f64>,
}

struct BlockPartial {
    heat_counts: Vec<u64>,
    conditional_counts: Vec<u64>,
    initial_counts: Vec<u64>,
    q: Kahan,
    q_sq: Kahan,
    w: Kahan,
    w_sq: Kahan,
}

struct Tables {
    energies: Vec<f64>,
    weights: Vec<f64>,
    atom_probs: Vec<f64>,
    first: Vec<StochasticMatrix>,
    step: Vec<StochasticMatrix>,
    last: StochasticMatrix,
    m: usize,
    beta: Option<f64>,
    dist: HeatDistribution,
}

fn pick(r: f64, probs: impl Iterator<Item = f64>, len: usize) -> usize {
    let mut acc = 0.0;
    for (idx, p) in probs.enumerate() {
        acc += p;
        if r < acc {
            return idx;
        }
    }
    len - 1
}

fn run_block(block: usize, total: u64, seed: u64, tables: &Tables) -> BlockPartial {
    let n = tables.energies.len();
    let mut partial = BlockPartial {
        heat_counts: vec![0; tables.dist.len()],
        conditional_counts: vec![0; n * n],
        initial_counts: vec![0; n],
        q: Kahan::default(),
        q_sq: Kahan::default(),
        w: Kahan::default(),
        w_sq: Kahan::default(),
    };
    let lo = block as u64 * BLOCK;
    let hi = (lo + BLOCK).min(total);
    for trajectory in lo..hi {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);

        let level0 = pick(rng.random::<f64>(), tables.weights.iter().copied(), n);
        let mut k = {
            let atom = pick(
                rng.random::<f64>(),
                tables.atom_probs.iter().copied(),
                tables.atom_probs.len(),
            );
            let a = &tables.first[atom];
            pick(rng.random::<f64>(), (0..n).map(|i| a.get(i, level0)), n)
        };
        for _ in 1..tables.m {
            let atom = pick(
                rng.random::<f64>(),
                tables.atom_probs.iter().copied(),
                tables.atom_probs.len(),
            );
            let l = &tables.step[atom];
            k = pick(rng.random::<f64>(), (0..n).map(|i| l.get(i, k)), n);
        }
        let level1 = pick(rng.random::<f64>(), (0..n).map(|i| tables.last.get(i, k)), n);

        let q = tables.energies[level1] - tables.energies[level0];
        partial.initial_counts[level0] += 1;
        partial.conditional_counts[level1 * n + level0] += 1;
        partial.heat_counts[tables.dist.nearest_atom(q)] += 1;
        partial.q.add(q);
        partial.q_sq.add(q * q);
        if let Some(beta) = tables.beta {
            let x = (-beta * q).exp();
            partial.w.add(x);
            partial.w_sq.add(x * x);
        }
    }
    partial
}

/// Sample `trajectories` runs of the protocol with the given master
/// seed. Blocks of trajectories may execute on any number of threads;
/// the statistics are identical either way.
pub fn sample(spec: &ProtocolSpec, trajectories: u64, seed: u64) -> Result<SampleStatistics> {
    if trajectories == 0 {
        return Err(Error::InvalidInput("need at least one trajectory".into()));
    }
    let n = spec.dim();
    let beta = match *spec.initial().mode() {
        InitialStateMode::Gibbs { beta } => {
            let reach = beta.abs() * spec.energy_span();
            if reach > tol::EXP_CLAMP {
                return Err(Error::RangeExceeded {
                    exponent: reach,
                    limit: tol::EXP_CLAMP,
                });
            }
            Some(beta)
        }
        _ => None,
    };

    let atoms = spec.waits().atoms();
    let mut first = Vec::with_capacity(atoms.len());
    let mut step = Vec::with_capacity(atoms.len());
    for atom in atoms {
        first.push(crate::protocol::boundary_matrix_a(
            spec.energies(),
            spec.observable(),
            atom.tau,
        )?);
        step.push(crate::protocol::transition_matrix_l(
            spec.energies(),
            spec.observable(),
            atom.tau,
        )?);
    }
    let tables = Tables {
        energies: spec.energies().to_vec(),
        weights: spec.initial().weights().to_vec(),
        atom_probs: atoms.iter().map(|a| a.prob).collect(),
        first,
        step,
        last: spec.boundary_b(),
        m: spec.measurements(),
        beta,
        dist: exact::heat_distribution(spec)?,
    };

    let blocks = trajectories.div_ceil(BLOCK) as usize;
    let partials: Vec<BlockPartial> = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(b, trajectories, seed, &tables))
        .collect();

    let mut heat_counts = vec![0u64; tables.dist.len()];
    let mut conditional_counts = vec![0u64; n * n];
    let mut initial_counts = vec![0u64; n];
    let mut q = Kahan::default();
    let mut q_sq = Kahan::default();
    let mut w = Kahan::default();
    let mut w_sq = Kahan::default();
    for partial in &partials {
        for (total, part) in heat_counts.iter_mut().zip(&partial.heat_counts) {
            *total += part;
        }
        for (total, part) in conditional_counts.iter_mut().zip(&partial.conditional_counts) {
            *total += part;
        }
        for (total, part) in initial_counts.iter_mut().zip(&partial.initial_counts) {
            *total += part;
        }
        q.add(partial.q.value());
        q_sq.add(partial.q_sq.value());
        w.add(partial.w.value());
        w_sq.add(partial.w_sq.value());
    }

    let t = trajectories as f64;
    let (jarzynski_mean, jarzynski_std_error) = if beta.is_some() {
        let mean = w.value() / t;
        let se = if trajectories >= 2 {
            let variance = ((w_sq.value() - t * mean * mean) / (t - 1.0)).max(0.0);
            Some((variance / t).sqrt())
        } else {
            None
        };
        (Some(mean), se)
    } else {
        (None, None)
    };

    Ok(SampleStatistics {
        trajectories,
        seed,
        support: tables.dist.support().to_vec(),
        exact_probabilities: tables.dist.probabilities().to_vec(),
        heat_counts,
        conditional_counts,
        initial_counts,
        mean_heat: q.value() / t,
        mean_heat_sq: q_sq.value() / t,
        jarzynski_mean,
        jarzynski_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{InitialState, Observable, WaitingTimeDistribution};
    use crate::qcore::{C64, haar_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qubit_spec(m: usize) -> ProtocolSpec {
        let obs = Observable::qubit(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let init = InitialState::gibbs(0.9, &[-1.0, 1.0]).unwrap();
        let waits = WaitingTimeDistribution::from_atoms(&[(0.5, 0.4), (1.3, 0.6)]).unwrap();
        ProtocolSpec::new(vec![-1.0, 1.0], obs, init, waits, m).unwrap()
    }

    #[test]
    fn identical_seeds_give_identical_bytes() {
        let spec = qubit_spec(3);
        let one = sample(&spec, 10_000, 42).unwrap();
        let two = sample(&spec, 10_000, 42).unwrap();
        assert_eq!(one, two);
        assert_eq!(one.mean_heat.to_bits(), two.mean_heat.to_bits());
        assert_eq!(
            one.jarzynski_mean.unwrap().to_bits(),
            two.jarzynski_mean.unwrap().to_bits()
        );
        let three = sample(&spec, 10_000, 43).unwrap();
        assert_ne!(one.heat_counts, three.heat_counts);
    }

    #[test]
    fn counts_are_consistent() {
        let spec = qubit_spec(4);
        let stats = sample(&spec, 5_000, 7).unwrap();
        assert_eq!(stats.heat_counts.iter().sum::<u64>(), 5_000);
        assert_eq!(stats.conditional_counts.iter().sum::<u64>(), 5_000);
        assert_eq!(stats.initial_counts.iter().sum::<u64>(), 5_000);
        // Column sums of the conditional counts reproduce the initial
        // counts.
        for n in 0..2 {
            let col: u64 = (0..2).map(|m| stats.conditional_counts[m * 2 + n]).sum();
            assert_eq!(col, stats.initial_counts[n]);
        }
    }

    #[test]
    fn frequencies_match_exact_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let obs = Observable::from_basis(haar_unitary(3, &mut rng)).unwrap();
        let energies = [-1.0, 0.2, 1.1];
        let init = InitialState::gibbs(1.1, &energies).unwrap();
        let waits = WaitingTimeDistribution::from_atoms(&[(0.6, 0.5), (1.9, 0.5)]).unwrap();
        let spec = ProtocolSpec::new(energies.to_vec(), obs, init, waits, 3).unwrap();

        let trajectories = 200_000u64;
        let stats = sample(&spec, trajectories, 11).unwrap();
        let table = exact::conditional_table(&spec).unwrap();
        let weights = spec.initial().weights();
        for n in 0..3 {
            for m in 0..3 {
                let expected = weights[n] * table.get(m, n);
                let observed = stats.conditional_counts[m * 3 + n] as f64 / trajectories as f64;
                let sigma = (expected * (1.0 - expected) / trajectories as f64)
                    .sqrt()
                    .max(1e-12);
                assert!(
                    (observed - expected).abs() <= 5.0 * sigma,
                    "joint ({m}, {n}): observed {observed:.5}, expected {expected:.5}"
                );
            }
        }
        // Histogram frequencies against exact atom probabilities.
        for (idx, &p) in stats.exact_probabilities.iter().enumerate() {
            let observed = stats.heat_counts[idx] as f64 / trajectories as f64;
            let sigma = (p * (1.0 - p) / trajectories as f64).sqrt().max(1e-12);
            assert!(
                (observed - p).abs() <= 5.0 * sigma,
                "atom {idx}: observed {observed:.5}, expected {p:.5}"
            );
        }
    }

    #[test]
    fn jarzynski_estimator_within_three_sigma() {
        let spec = qubit_spec(5);
        let stats = sample(&spec, 100_000, 2024).unwrap();
        let mean = stats.jarzynski_mean.unwrap();
        let se = stats.jarzynski_std_error.unwrap();
        assert!(
            (mean - 1.0).abs() <= 3.0 * se,
            "mean {mean:.6} +- {se:.6} is not within 3 sigma of 1"
        );
    }

    #[test]
    fn mean_heat_matches_exact_moment() {
        let spec = qubit_spec(3);
        let trajectories = 100_000u64;
        let stats = sample(&spec, trajectories, 5).unwrap();
        let moments = exact::heat_moments(&spec, 2).unwrap();
        let variance = stats.mean_heat_sq - stats.mean_heat * stats.mean_heat;
        let se = (variance / trajectories as f64).sqrt();
        assert!(
            (stats.mean_heat - moments[0]).abs() <= 5.0 * se,
            "mean {} vs exact {}",
            stats.mean_heat,
            moments[0]
        );
    }

    #[test]
    fn non_thermal_states_have_no_jarzynski_estimate() {
        let obs = Observable::qubit(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let init = InitialState::explicit(vec![0.3, 0.7]).unwrap();
        let waits = WaitingTimeDistribution::deterministic(0.8).unwrap();
        let spec = ProtocolSpec::new(vec![-1.0, 1.0], obs, init, waits, 2).unwrap();
        let stats = sample(&spec, 1_000, 1).unwrap();
        assert!(stats.jarzynski_mean.is_none());
        assert!(stats.jarzynski_std_error.is_none());
    }

    #[test]
    fn zero_trajectories_rejected() {
        let spec = qubit_spec(2);
        assert!(sample(&spec, 0, 1).is_err());
    }
}
