//! Behavior of the protocol as the number of measurements grows.
//!
//! Powers of the wait-averaged transition matrix converge to a
//! block-uniform projection: outcomes split into groups that the
//! evolution never connects, and within each group the chain forgets
//! everything except the group itself. The groups are the connected
//! components of the Hamiltonian rewritten in the observable
//! eigenbasis. A fully connected observable drives the conditional
//! outcome table to the uniform (infinite-temperature) limit; an
//! observable commuting with the Hamiltonian freezes the dynamics
//! entirely; block structure in between thermalizes each sector
//! separately.
//!
//! The opposite regime appears when a fixed total time is divided among
//! ever more measurements: the per-step evolution shrinks
//! quadratically, the chain stops moving, and the total escape
//! probability decays like one over the number of measurements.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::{Observable, ProtocolSpec, StochasticMatrix, transition_matrix_l};
use crate::qcore::{C64, ComplexMatrix};
use crate::tol;

/// `mean wait * spectral span` below this marks the frozen regime.
pub const ZENO_PRODUCT_THRESHOLD: f64 = 0.05;

/// Energy levels count as members of an outcome block when they carry
/// more than this fraction of their weight inside it.
const LEVEL_LOCALIZATION: f64 = 0.5;

/// Hamiltonian rewritten in the observable eigenbasis:
/// entry `(i, j) = <alpha_i|H|alpha_j>`.
pub fn observable_hamiltonian(energies: &[f64], observable: &Observable) -> Result<ComplexMatrix> {
    let n = energies.len();
    if observable.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "observable_hamiltonian",
            expected: n,
            found: observable.dim(),
        });
    }
    let w = observable.basis();
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for level in 0..n {
                acc += w.get(level, i).conj() * energies[level] * w.get(level, j);
            }
            h.set(i, j, acc);
        }
    }
    Ok(h)
}

/// Partition of observable outcomes into groups never connected by the
/// evolution, together with the assignment of energy levels to groups.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    blocks: Vec<Vec<usize>>,
    block_of_outcome: Vec<usize>,
    block_of_level: Vec<usize>,
}

impl BlockDecomposition {
    /// Outcome indices of each block, blocks ordered by smallest member.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of_outcome(&self, k: usize) -> usize {
        self.block_of_outcome[k]
    }

    pub fn block_of_level(&self, n: usize) -> usize {
        self.block_of_level[n]
    }

    pub fn dim(&self) -> usize {
        self.block_of_outcome.len()
    }
}

/// Group observable outcomes by connectivity of the Hamiltonian in the
/// observable eigenbasis, then localize each energy level in a group.
/// Levels split across groups (possible only for degenerate energies)
/// are rejected.
pub fn block_decomposition(
    energies: &[f64],
    observable: &Observable,
) -> Result<BlockDecomposition> {
    let n = energies.len();
    let h = observable_hamiltonian(energies, observable)?;
    let scale = energies.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let threshold = tol::BLOCK_EDGE * scale;

    let mut block_of_outcome = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if block_of_outcome[seed] != usize::MAX {
            continue;
        }
        let r = blocks.len();
        let mut members = vec![seed];
        block_of_outcome[seed] = r;
        let mut queue = vec![seed];
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if block_of_outcome[j] == usize::MAX && h.get(i, j).norm() > threshold {
                    block_of_outcome[j] = r;
                    members.push(j);
                    queue.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }

    let w = observable.basis();
    let mut block_of_level = vec![usize::MAX; n];
    for level in 0..n {
        let mut best = (0usize, -1.0f64);
        for (r, members) in blocks.iter().enumerate() {
            let mass: f64 = members.iter().map(|&k| w.get(level, k).norm_sqr()).sum();
            if mass > best.1 {
                best = (r, mass);
            }
        }
        if best.1 <= LEVEL_LOCALIZATION {
            return Err(Error::InvalidInput(format!(
                "energy level {level} is not localized in a single outcome block \
                 (largest block weight {:.3})",
                best.1
            )));
        }
        block_of_level[level] = best.0;
    }

    // Each invariant subspace must host exactly as many levels as
    // outcomes.
    for (r, members) in blocks.iter().enumerate() {
        let levels = block_of_level.iter().filter(|&&b| b == r).count();
        if levels != members.len() {
            return Err(Error::InvalidInput(format!(
                "block {r} has {} outcomes but {} localized levels",
                members.len(),
                levels
            )));
        }
    }

    Ok(BlockDecomposition {
        blocks,
        block_of_outcome,
        block_of_level,
    })
}

/// Limit of the powers of the wait-averaged transition matrix: uniform
/// mixing inside each block, zero across blocks.
pub fn limiting_transition_matrix(decomp: &BlockDecomposition) -> StochasticMatrix {
    let n = decomp.dim();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if decomp.block_of_outcome[i] == decomp.block_of_outcome[j] {
                let size = decomp.blocks[decomp.block_of_outcome[i]].len();
                data[i * n + j] = 1.0 / size as f64;
            }
        }
    }
    StochasticMatrix::from_parts_unchecked(n, data)
}

/// Limit of the conditional outcome table: starting level `n` ends
/// uniformly over the levels of its own block.
pub fn limiting_conditional_table(decomp: &BlockDecomposition) -> StochasticMatrix {
    let n = decomp.dim();
    let mut data = vec![0.0; n * n];
    for m in 0..n {
        for level in 0..n {
            if decomp.block_of_level[m] == decomp.block_of_level[level] {
                let size = decomp.blocks[decomp.block_of_level[level]].len();
                data[m * n + level] = 1.0 / size as f64;
            }
        }
    }
    StochasticMatrix::from_parts_unchecked(n, data)
}

/// Limiting final-level distribution: each block keeps its initial
/// weight and spreads it uniformly over its own levels.
pub fn limiting_level_weights(decomp: &BlockDecomposition, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != decomp.dim() {
        return Err(Error::DimensionMismatch {
            context: "limiting_level_weights",
            expected: decomp.dim(),
            found: weights.len(),
        });
    }
    let mut block_mass = vec![0.0; decomp.block_count()];
    for (level, &c) in weights.iter().enumerate() {
        block_mass[decomp.block_of_level[level]] += c;
    }
    Ok((0..decomp.dim())
        .map(|m| {
            let r = decomp.block_of_level[m];
            block_mass[r] / decomp.blocks[r].len() as f64
        })
        .collect())
}

/// Limiting characteristic function of the heat:
/// `G(u) = sum_r (1/|S_r|) (sum_{n in r} c_n e^{-iuE_n})
///                         (sum_{m in r} e^{iuE_m})`.
/// With a single block this is the infinite-temperature form
/// `(1/N) Tr[rho exp(-iHu)] Tr[exp(iHu)]`.
pub fn limiting_char_fn(spec: &ProtocolSpec, u: C64) -> Result<C64> {
    if !u.re.is_finite() || !u.im.is_finite() {
        return Err(Error::InvalidInput("u is not finite".into()));
    }
    let reach = u.im.abs() * spec.energy_span();
    if reach > tol::EXP_CLAMP {
        return Err(Error::RangeExceeded {
            exponent: reach,
            limit: tol::EXP_CLAMP,
        });
    }
    let decomp = block_decomposition(spec.energies(), spec.observable())?;
    let energies = spec.energies();
    let weights = spec.initial().weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, members) in decomp.blocks().iter().enumerate() {
        let mut forward = Complex64::new(0.0, 0.0);
        let mut backward = Complex64::new(0.0, 0.0);
        for level in 0..spec.dim() {
            if decomp.block_of_level(level) == r {
                backward += weights[level] * (-Complex64::i() * u * energies[level]).exp();
                forward += (Complex64::i() * u * energies[level]).exp();
            }
        }
        acc += backward * forward / members.len() as f64;
    }
    Ok(acc)
}

/// Modulus of the slowest decaying mode of `L - limit`, estimated by
/// norm growth under repeated application. This is the geometric
/// convergence rate of the matrix powers toward their limit.
pub fn mixing_rate(l: &StochasticMatrix, limit: &StochasticMatrix) -> Result<f64> {
    let n = l.dim();
    if limit.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "mixing_rate",
            expected: n,
            found: limit.dim(),
        });
    }
    let d: Vec<f64> = (0..n * n)
        .map(|idx| l.get(idx / n, idx % n) - limit.get(idx / n, idx % n))
        .collect();
    // Fixed generic start vector; no special symmetry.
    let mut v: Vec<f64> = (0..n).map(|k| (1.3 * (k as f64 + 1.0)).cos()).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    for x in &mut v {
        *x /= nv;
    }

    let mut log_window: Vec<f64> = Vec::new();
    let mut previous_mean = f64::INFINITY;
    for iter in 0..20_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += d[i * n + j] * v[j];
            }
            next[i] = acc;
        }
        let g = norm(&next);
        if g < 1e-300 {
            return Ok(0.0);
        }
        for x in &mut next {
            *x /= g;
        }
        v = next;
        log_window.push(g.ln());
        if log_window.len() > 64 {
            log_window.remove(0);
        }
        if iter >= 128 && iter % 64 == 0 {
            let mean = log_window.iter().sum::<f64>() / log_window.len() as f64;
            if (mean - previous_mean).abs() < 1e-12 {
                return Ok(mean.exp());
            }
            previous_mean = mean;
        }
    }
    let mean = log_window.iter().sum::<f64>() / log_window.len() as f64;
    Ok(mean.exp())
}

/// Qualitative regime of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingRegime {
    /// Mean wait times spectral span is so small the chain barely moves.
    ZenoFrozen,
    /// One block: the conditional table tends to the uniform limit.
    InfiniteTemperature,
    /// Several blocks thermalize separately.
    Partial { blocks: usize },
}

/// Classify the protocol: frozen when `mean wait * span` is below
/// [`ZENO_PRODUCT_THRESHOLD`], otherwise by the number of outcome
/// blocks.
pub fn classify_regime(spec: &ProtocolSpec) -> Result<MixingRegime> {
    if spec.waits().mean_tau() * spec.energy_span() < ZENO_PRODUCT_THRESHOLD {
        return Ok(MixingRegime::ZenoFrozen);
    }
    let decomp = block_decomposition(spec.energies(), spec.observable())?;
    Ok(match decomp.block_count() {
        1 => MixingRegime::InfiniteTemperature,
        r => MixingRegime::Partial { blocks: r },
    })
}

/// Convergence summary of the matrix powers toward their limit.
#[derive(Debug, Clone)]
pub struct ThermalizationReport {
    pub block_count: usize,
    /// Geometric decay rate of the deviation from the limit.
    pub rate: f64,
    /// `(M, max |L^(M-1) - limit|)` for each requested M.
    pub deviations: Vec<(usize, f64)>,
    /// Limiting final-level distribution.
    pub limiting_weights: Vec<f64>,
}

/// Track how fast the averaged transition matrix powers approach their
/// block-uniform limit for the given measurement counts.
pub fn thermalization_report(spec: &ProtocolSpec, ms: &[usize]) -> Result<ThermalizationReport> {
    if ms.is_empty() {
        return Err(Error::InvalidInput("no measurement counts given".into()));
    }
    if ms.iter().any(|&m| m < 1) {
        return Err(Error::InvalidInput(
            "measurement counts must be at least 1".into(),
        ));
    }
    let decomp = block_decomposition(spec.energies(), spec.observable())?;
    let l = spec.averaged_l()?;
    let limit = limiting_transition_matrix(&decomp);
    let rate = mixing_rate(&l, &limit)?;
    let deviations = ms
        .iter()
        .map(|&m| (m, l.power((m - 1) as u64).max_abs_diff(&limit)))
        .collect();
    let limiting_weights = limiting_level_weights(&decomp, spec.initial().weights())?;
    Ok(ThermalizationReport {
        block_count: decomp.block_count(),
        rate,
        deviations,
        limiting_weights,
    })
}

/// Escape probability when a fixed total time is split into `m`
/// measurement intervals: one minus the mean probability of returning
/// to the initial outcome after `m - 1` steps of length `T/m`.
pub fn zeno_escape(
    energies: &[f64],
    observable: &Observable,
    total_time: f64,
    m: usize,
) -> Result<f64> {
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(Error::InvalidInput(format!(
            "total time {total_time} must be positive"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidInput(
            "escape needs at least two measurements".into(),
        ));
    }
    let n = energies.len();
    let l = transition_matrix_l(energies, observable, total_time / m as f64)?;
    let p = l.power((m - 1) as u64);
    let survival: f64 = (0..n).map(|k| p.get(k, k)).sum::<f64>() / n as f64;
    Ok(1.0 - survival)
}

/// Log-log fit of escape probability against measurement count.
#[derive(Debug, Clone)]
pub struct ZenoFit {
    pub slope: f64,
    pub intercept: f64,
    /// `(m, escape)` pairs that entered the fit.
    pub points: Vec<(usize, f64)>,
}

/// Scan escape probabilities over measurement counts and fit
/// `ln escape = slope ln m + intercept`. Points at or below the escape
/// floor are excluded; if fewer than two remain the fit is degenerate.
pub fn zeno_scan(
    energies: &[f64],
    observable: &Observable,
    total_time: f64,
    ms: &[usize],
) -> Result<ZenoFit> {
    let mut points = Vec::with_capacity(ms.len());
    for &m in ms {
        let escape = zeno_escape(energies, observable, total_time, m)?;
        if escape > tol::ZENO_ESCAPE_FLOOR {
            points.push((m, escape));
        }
    }
    if points.len() < 2 {
        return Err(Error::DegenerateFit {
            floor: tol::ZENO_ESCAPE_FLOOR,
        });
    }
    let xs: Vec<f64> = points.iter().map(|&(m, _)| (m as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    if den == 0.0 {
        return Err(Error::DegenerateFit {
            floor: tol::ZENO_ESCAPE_FLOOR,
        });
    }
    let slope = num / den;
    Ok(ZenoFit {
        slope,
        intercept: y_mean - slope * x_mean,
        points,
    })
}
