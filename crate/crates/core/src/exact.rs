//! Exact heat statistics of the measurement protocol: the conditional
//! transition table, the heat distribution, its characteristic function
//! on complex arguments, moments, the integral fluctuation relation,
//! and a brute-force unitality audit of the measurement channel.
//!
//! Heat is the difference `Q = E_m - E_n` between the final and initial
//! energy outcomes. Everything here is deterministic: probabilities
//! come from matrix products, not sampling, and summation orders are
//! fixed so repeated runs agree bit for bit.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::{InitialStateMode, ProtocolSpec, StochasticMatrix, amplitude_matrix};
use crate::qcore::{C64, ComplexMatrix, UnitaryPropagator};
use crate::tol;

/// Conditional outcome table by explicit enumeration of every
/// `(wait sequence, outcome sequence)` pair: each path's probability is
/// a product of scalar per-step factors, with no intermediate
/// marginalization and no matrix products. Exponential in the number of
/// measurements; guarded by the same budgets as [`unitality_check`].
/// This is the slow reference the fast path is checked against.
pub fn enumerate_conditional_table(spec: &ProtocolSpec) -> Result<StochasticMatrix> {
    let n = spec.dim();
    let m = spec.measurements();
    let atoms = spec.waits().atoms();
    check_budgets(n, atoms.len(), m)?;

    // Scalar per-step factors for each wait atom: squared transition
    // amplitudes between observable eigenvectors, first-step squared
    // overlaps with the energy eigenvectors, and the final overlaps.
    let mut step = Vec::with_capacity(atoms.len());
    let mut first = Vec::with_capacity(atoms.len());
    let w = spec.observable().basis();
    for atom in atoms {
        let t = amplitude_matrix(spec.energies(), spec.observable(), atom.tau)?;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                l[i * n + j] = t.get(i, j).norm_sqr();
            }
        }
        step.push(l);
        let u = UnitaryPropagator::new(spec.energies(), atom.tau)?;
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            for level in 0..n {
                a[k * n + level] = (w.get(level, k).conj() * u.phases()[level]).norm_sqr();
            }
        }
        first.push(a);
    }
    let mut final_b = vec![0.0; n * n];
    for em in 0..n {
        for k in 0..n {
            final_b[em * n + k] = w.get(em, k).norm_sqr();
        }
    }

    let mut table = vec![0.0; n * n];
    for level in 0..n {
        // Depth-first over (atom, outcome) sequences; the stack holds
        // the measurement count so far, the last outcome, and the
        // accumulated path probability.
        let mut stack: Vec<(usize, usize, f64)> = Vec::new();
        for (atom, a) in atoms.iter().zip(&first) {
            for k in 0..n {
                stack.push((1, k, atom.prob * a[k * n + level]));
            }
        }
        while let Some((depth, k, weight)) = stack.pop() {
            if depth == m {
                for em in 0..n {
                    table[em * n + level] += weight * final_b[em * n + k];
                }
                continue;
            }
            for (atom, l) in atoms.iter().zip(&step) {
                for k_next in 0..n {
                    stack.push((depth + 1, k_next, weight * atom.prob * l[k_next * n + k]));
                }
            }
        }
    }
    StochasticMatrix::new(n, table)
}

/// Conditional probability table `p(m | n)` of ending in energy level
/// `m` after starting in level `n`: columns indexed by the initial
/// level. Computed as the product of the final boundary matrix, the
/// wait-averaged transition matrix to the `M - 1`-th power, and the
/// first boundary matrix.
pub fn conditional_table(spec: &ProtocolSpec) -> Result<StochasticMatrix> {
    let a = spec.averaged_a()?;
    let l = spec.averaged_l()?;
    let b = spec.boundary_b();
    let inner = l.power((spec.measurements() - 1) as u64);
    let table = b.matmul(&inner)?.matmul(&a)?;
    for j in 0..table.dim() {
        let s = table.column_sum(j);
        if (s - 1.0).abs() > tol::CONDITIONAL_COLUMN {
            return Err(Error::InvalidInput(format!(
                "conditional table column {j} sums to {s}; numerical loss exceeds tolerance"
            )));
        }
    }
    Ok(table)
}

/// Discrete heat distribution: sorted support values and their
/// probabilities. Support points closer than a fixed fraction of the
/// spectral span are merged into one atom at their mass-weighted mean.
#[derive(Debug, Clone)]
pub struct HeatDistribution {
    support: Vec<f64>,
    probabilities: Vec<f64>,
}

impl HeatDistribution {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Raw moment `<Q^order>`.
    pub fn moment(&self, order: usize) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .map(|(&q, &p)| p * q.powi(order as i32))
            .sum()
    }

    /// Index of the support atom nearest to `q`.
    pub fn nearest_atom(&self, q: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (idx, &s) in self.support.iter().enumerate() {
            let d = (q - s).abs();
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        best
    }
}

/// Heat distribution of the protocol:
/// `P(Q) = sum_{m,n} c_n p(m|n) [E_m - E_n = Q]`.
pub fn heat_distribution(spec: &ProtocolSpec) -> Result<HeatDistribution> {
    let table = conditional_table(spec)?;
    let energies = spec.energies();
    let weights = spec.initial().weights();
    let n = spec.dim();

    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n * n);
    for level in 0..n {
        for em in 0..n {
            let p = weights[level] * table.get(em, level);
            if p > 0.0 {
                pairs.push((energies[em] - energies[level], p));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("heat values are finite"));

    let merge_tol = tol::HEAT_MERGE_REL * spec.energy_span();
    let mut support: Vec<f64> = Vec::new();
    let mut probabilities: Vec<f64> = Vec::new();
    for (q, p) in pairs {
        match support.last_mut() {
            Some(last) if (q - *last).abs() <= merge_tol => {
                let mass = probabilities.last_mut().expect("parallel arrays");
                let merged = (*last * *mass + q * p) / (*mass + p);
                *last = merged;
                *mass += p;
            }
            _ => {
                support.push(q);
                probabilities.push(p);
            }
        }
    }

    let dist = HeatDistribution {
        support,
        probabilities,
    };
    let mass = dist.total_mass();
    if (mass - 1.0).abs() > tol::HEAT_TOTAL_MASS {
        return Err(Error::InvalidInput(format!(
            "heat distribution mass {mass} deviates from 1 beyond tolerance"
        )));
    }
    Ok(dist)
}

/// Characteristic function of the heat,
/// `G(u) = sum_{n,m} c_n exp(i u (E_m - E_n)) p(m|n)`, for complex `u`.
/// Imaginary parts of `u` weigh the heat exponentially; arguments that
/// would push any exponent past the safe range are rejected.
pub fn char_fn(spec: &ProtocolSpec, u: C64) -> Result<C64> {
    let table = conditional_table(spec)?;
    char_fn_with_table(spec, &table, u)
}

/// Same as [`char_fn`] but reusing a precomputed conditional table, for
/// dense grids in `u`.
pub fn char_fn_with_table(spec: &ProtocolSpec, table: &StochasticMatrix, u: C64) -> Result<C64> {
    if !u.re.is_finite() || !u.im.is_finite() {
        return Err(Error::InvalidInput("u is not finite".into()));
    }
    if table.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            context: "char_fn_with_table",
            expected: spec.dim(),
            found: table.dim(),
        });
    }
    let reach = u.im.abs() * spec.energy_span();
    if reach > tol::EXP_CLAMP {
        return Err(Error::RangeExceeded {
            exponent: reach,
            limit: tol::EXP_CLAMP,
        });
    }
    let energies = spec.energies();
    let weights = spec.initial().weights();
    let n = spec.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for level in 0..n {
        if weights[level] == 0.0 {
            continue;
        }
        let mut inner = Complex64::new(0.0, 0.0);
        for em in 0..n {
            let q = energies[em] - energies[level];
            inner += table.get(em, level) * (Complex64::i() * u * q).exp();
        }
        acc += weights[level] * inner;
    }
    Ok(acc)
}

/// Characteristic function over a grid of complex arguments, reusing
/// one conditional table.
pub fn char_fn_grid(spec: &ProtocolSpec, us: &[C64]) -> Result<Vec<C64>> {
    let table = conditional_table(spec)?;
    us.iter()
        .map(|&u| char_fn_with_table(spec, &table, u))
        .collect()
}

/// Maximum moment order served by [`heat_moments`].
pub const MAX_MOMENT_ORDER: usize = 4;

/// Raw heat moments `<Q>, <Q^2>, ..., <Q^max_order>`.
pub fn heat_moments(spec: &ProtocolSpec, max_order: usize) -> Result<Vec<f64>> {
    if max_order > MAX_MOMENT_ORDER {
        return Err(Error::OrderTooHigh {
            order: max_order,
            max: MAX_MOMENT_ORDER,
        });
    }
    let dist = heat_distribution(spec)?;
    Ok((1..=max_order).map(|ell| dist.moment(ell)).collect())
}

/// Outcome of the integral fluctuation relation check
/// `<exp(-beta Q)> = 1` for a thermal initial state.
#[derive(Debug, Clone, Copy)]
pub struct FluctuationCheck {
    /// `G(i beta) = <exp(-beta Q)>`.
    pub g_at_i_beta: C64,
    /// `|G(i beta) - 1|`.
    pub deviation: f64,
}

/// Evaluate the integral fluctuation relation. The initial state must
/// be thermal (`Gibbs` mode); for any other ensemble the relation has
/// no reason to hold and the check refuses to run.
pub fn fluctuation_check(spec: &ProtocolSpec) -> Result<FluctuationCheck> {
    let beta = match *spec.initial().mode() {
        InitialStateMode::Gibbs { beta } => beta,
        _ => {
            return Err(Error::InvalidInput(
                "fluctuation check requires a thermal initial state".into(),
            ));
        }
    };
    let g = char_fn(spec, C64::new(0.0, beta))?;
    Ok(FluctuationCheck {
        g_at_i_beta: g,
        deviation: (g - C64::new(1.0, 0.0)).norm(),
    })
}

/// Result of the brute-force unitality audit.
#[derive(Debug, Clone)]
pub struct UnitalityCheck {
    /// `max |Sigma - I|` where `Sigma` is the channel applied to the
    /// identity.
    pub deviation: f64,
    /// Accumulated weight on each final projector; sums to the
    /// dimension when the channel preserves trace.
    pub projector_mass: Vec<f64>,
    /// Number of `(wait, outcome)` sequence pairs visited.
    pub sequences_visited: u64,
}

fn check_budgets(n: usize, atoms: usize, m: usize) -> Result<()> {
    let outcomes = (n as f64).powi(m as i32);
    if outcomes > tol::ENUMERATION_OUTCOMES {
        return Err(Error::TooLarge {
            size: outcomes,
            limit: tol::ENUMERATION_OUTCOMES,
        });
    }
    let joint = ((n * atoms) as f64).powi(m as i32);
    if joint > tol::ENUMERATION_JOINT {
        return Err(Error::TooLarge {
            size: joint,
            limit: tol::ENUMERATION_JOINT,
        });
    }
    Ok(())
}

/// Audit that the measurement channel is unital: summing
/// `V V'` over every outcome sequence and wait sequence (weighted by
/// the wait probabilities) must reproduce the identity. Each composite
/// operator `V` is rank one, which reduces its contribution to a
/// scalar weight on the final projector; the walk is depth-first over
/// sequences and makes no unitarity assumption about the propagator.
pub fn unitality_check(spec: &ProtocolSpec) -> Result<UnitalityCheck> {
    let n = spec.dim();
    let m = spec.measurements();
    let atoms = spec.waits().atoms();
    check_budgets(n, atoms.len(), m)?;

    // Squared step amplitudes |<alpha_i|U(tau_a)|alpha_j>|^2 and first
    // factors s[a][k] = p_a * |U(tau_a)' |alpha_k>|^2.
    let mut step = Vec::with_capacity(atoms.len());
    let mut start = Vec::with_capacity(atoms.len());
    let w = spec.observable().basis();
    for atom in atoms {
        let t = amplitude_matrix(spec.energies(), spec.observable(), atom.tau)?;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                l[i * n + j] = atom.prob * t.get(i, j).norm_sqr();
            }
        }
        step.push(l);
        let u = UnitaryPropagator::new(spec.energies(), atom.tau)?;
        let mut s = vec![0.0; n];
        for k in 0..n {
            let mut norm = 0.0;
            for level in 0..n {
                norm += (u.phases()[level].conj() * w.get(level, k)).norm_sqr();
            }
            s[k] = atom.prob * norm;
        }
        start.push(s);
    }

    let mut acc = vec![0.0; n];
    let mut visited: u64 = 0;
    let mut stack: Vec<(usize, usize, f64)> = Vec::new();
    for s in &start {
        for k in 0..n {
            stack.push((1, k, s[k]));
        }
    }
    while let Some((depth, k, weight)) = stack.pop() {
        if depth == m {
            acc[k] += weight;
            visited += 1;
            continue;
        }
        for l in &step {
            for k_next in 0..n {
                let w_next = weight * l[k_next * n + k];
                stack.push((depth + 1, k_next, w_next));
            }
        }
    }

    // Sigma = sum_k acc[k] |alpha_k><alpha_k| in the energy basis.
    let mut sigma = ComplexMatrix::zeros(n, n);
    for row in 0..n {
        for col in 0..n {
            let mut entry = Complex64::new(0.0, 0.0);
            for k in 0..n {
                entry += acc[k] * w.get(row, k) * w.get(col, k).conj();
            }
            sigma.set(row, col, entry);
        }
    }
    let deviation = sigma.max_abs_diff(&ComplexMatrix::identity(n));
    Ok(UnitalityCheck {
        deviation,
        projector_mass: acc,
        sequences_visited: visited,
    })
}
