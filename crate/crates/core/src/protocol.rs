//! Measurement protocol description: the measured observable, the
//! diagonal initial ensemble, the waiting-time law between
//! measurements, and the stochastic matrices the protocol induces.
//!
//! The protocol is: measure energy, then measure the observable `M`
//! times with a random wait drawn before each measurement, then measure
//! energy again. Between outcomes the only memory is the last projector
//! the state collapsed onto, so the outcome chain is Markov. Three
//! matrices capture it in the energy eigenbasis:
//!
//! - `A(tau)` with entry `(k, n) = |<alpha_k|U(tau)|E_n>|^2`, the first
//!   observable outcome given the initial energy level;
//! - `L(tau)` with entry `(i, j) = |<alpha_i|U(tau)|alpha_j>|^2`,
//!   outcome-to-outcome transitions (unistochastic, hence doubly
//!   stochastic);
//! - `B` with entry `(m, k) = |<E_m|alpha_k>|^2`, the final energy given
//!   the last observable outcome. `B = A(0)^T`.
//!
//! All stochastic matrices use the column convention: entry `(i, j)` is
//! the probability of moving to `i` from `j`, so a distribution is a
//! column vector and steps compose by left multiplication. Waiting
//! times are independent across steps, which averages each step's
//! matrix independently.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{C64, ComplexMatrix, UnitaryPropagator};
use crate::qutrit;
use crate::tol;

/// Observable measured between the two energy measurements: outcome
/// values and the unitary whose k-th column is the k-th eigenvector
/// expressed in the energy eigenbasis. Outcome values are carried for
/// reporting only; heat statistics never depend on them.
#[derive(Debug, Clone)]
pub struct Observable {
    values: Vec<f64>,
    basis: ComplexMatrix,
}

impl Observable {
    pub fn new(values: Vec<f64>, basis: ComplexMatrix) -> Result<Self> {
        if !basis.is_square() || basis.rows() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "Observable::new",
                expected: values.len(),
                found: basis.rows(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("outcome value is not finite".into()));
        }
        let dev = basis.unitarity_deviation();
        if dev > tol::UNITARITY {
            return Err(Error::InvalidInput(format!(
                "observable eigenbasis is not unitary: |W'W - I| = {dev:.3e}"
            )));
        }
        Ok(Self { values, basis })
    }

    /// Eigenbasis matrix with outcome values 0, 1, ...
    pub fn from_basis(basis: ComplexMatrix) -> Result<Self> {
        let values = (0..basis.rows()).map(|k| k as f64).collect();
        Self::new(values, basis)
    }

    /// Observable diagonal in the energy eigenbasis (commutes with H).
    pub fn diagonal(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, ComplexMatrix::identity(n))
    }

    /// Two-level observable with eigenvectors
    /// `|alpha_1> = a|E_+> - b|E_->` and `|alpha_2> = b|E_+> + a|E_->`
    /// in the ascending basis `(E_-, E_+)`. Requires `|a|^2 + |b|^2 = 1`
    /// and a real relative phase (`conj(a) b` real), otherwise the two
    /// vectors are not orthogonal.
    pub fn qubit(a: C64, b: C64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > tol::WEIGHT_SUM {
            return Err(Error::InvalidInput(format!(
                "|a|^2 + |b|^2 = {norm} must be 1"
            )));
        }
        if (a.conj() * b).im.abs() > tol::WEIGHT_SUM {
            return Err(Error::InvalidInput(
                "conj(a) b must be real for the two-level eigenbasis".into(),
            ));
        }
        let basis = ComplexMatrix::from_rows(&[vec![-b, a], vec![a, b]])?;
        Self::new(vec![1.0, -1.0], basis)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }
}

/// How the diagonal initial ensemble was specified.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStateMode {
    Explicit,
    Gibbs { beta: f64 },
    ThreeLevelAlphaBeta { alpha: f64, beta: f64 },
}

/// Initial ensemble diagonal in the energy eigenbasis: weights `c_k`
/// over energy levels, with the mode retained so downstream consumers
/// can recover `beta` (fluctuation-theorem checks) or `(alpha, beta)`.
#[derive(Debug, Clone)]
pub struct InitialState {
    weights: Vec<f64>,
    mode: InitialStateMode,
}

impl InitialState {
    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("initial state has no levels".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidInput(
                "initial weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol::WEIGHT_SUM {
            return Err(Error::InvalidInput(format!(
                "initial weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            weights,
            mode: InitialStateMode::Explicit,
        })
    }

    /// Thermal weights `c_k = exp(-beta E_k) / Z`.
    pub fn gibbs(beta: f64, energies: &[f64]) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidInput("beta is not finite".into()));
        }
        if energies.is_empty() {
            return Err(Error::InvalidInput("no energy levels".into()));
        }
        let shift = energies
            .iter()
            .map(|&e| -beta * e)
            .fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = energies.iter().map(|&e| (-beta * e - shift).exp()).collect();
        let z: f64 = raw.iter().sum();
        Ok(Self {
            weights: raw.into_iter().map(|w| w / z).collect(),
            mode: InitialStateMode::Gibbs { beta },
        })
    }

    /// Three-level family interpolating between thermal (`alpha = 0`)
    /// and gap-weighted ensembles; see the `qutrit` module for the
    /// parametrization.
    pub fn three_level_alpha_beta(alpha: f64, beta: f64, energies: &[f64]) -> Result<Self> {
        let weights = qutrit::ensemble_weights(energies, alpha, beta)?;
        Ok(Self {
            weights: weights.to_vec(),
            mode: InitialStateMode::ThreeLevelAlphaBeta { alpha, beta },
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> &InitialStateMode {
        &self.mode
    }
}

/// One atom of a finite-support waiting-time law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitAtom {
    pub tau: f64,
    pub prob: f64,
}

/// Finite-support waiting-time law, the same for every step. Continuous
/// densities are reduced to this form by Gauss-Legendre quadrature.
#[derive(Debug, Clone)]
pub struct WaitingTimeDistribution {
    atoms: Vec<WaitAtom>,
}

impl WaitingTimeDistribution {
    pub fn deterministic(tau: f64) -> Result<Self> {
        Self::from_atoms(&[(tau, 1.0)])
    }

    pub fn from_atoms(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("waiting-time law has no atoms".into()));
        }
        let mut atoms: Vec<WaitAtom> = pairs
            .iter()
            .map(|&(tau, prob)| WaitAtom { tau, prob })
            .collect();
        for atom in &atoms {
            if !atom.tau.is_finite() || atom.tau < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "waiting time {} must be finite and nonnegative",
                    atom.tau
                )));
            }
            if !atom.prob.is_finite() || atom.prob <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "atom probability {} must be positive",
                    atom.prob
                )));
            }
        }
        atoms.sort_by(|x, y| x.tau.partial_cmp(&y.tau).expect("taus are finite"));
        if atoms.windows(2).any(|w| w[0].tau == w[1].tau) {
            return Err(Error::InvalidInput(
                "waiting-time atoms must be distinct".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > tol::WEIGHT_SUM {
            return Err(Error::InvalidInput(format!(
                "atom probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Reduce a continuous density on `[lo, hi]` to quadrature atoms.
    /// The density need not be normalized; node weights are rescaled to
    /// sum to one exactly.
    pub fn from_density<F: Fn(f64) -> f64>(
        density: F,
        lo: f64,
        hi: f64,
        nodes: usize,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi <= lo {
            return Err(Error::InvalidInput(format!(
                "quadrature interval [{lo}, {hi}] must satisfy 0 <= lo < hi"
            )));
        }
        if nodes == 0 {
            return Err(Error::InvalidInput("quadrature needs at least one node".into()));
        }
        let (xs, ws) = gauss_legendre(nodes);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut pairs = Vec::with_capacity(nodes);
        for (&x, &w) in xs.iter().zip(&ws) {
            let tau = mid + half * x;
            let f = density(tau);
            if !f.is_finite() || f < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "density({tau}) = {f} must be finite and nonnegative"
                )));
            }
            pairs.push((tau, w * half * f));
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput(
                "density integrates to zero on the given interval".into(),
            ));
        }
        let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(t, p)| (t, p / total)).collect();
        Self::from_atoms(&pairs)
    }

    pub fn atoms(&self) -> &[WaitAtom] {
        &self.atoms
    }

    pub fn mean_tau(&self) -> f64 {
        self.atoms.iter().map(|a| a.tau * a.prob).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = (n as f64) * (x * p - p0) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    xs.reverse();
    ws.reverse();
    (xs, ws)
}

/// Column-stochastic real matrix: entry `(i, j)` is the probability of
/// moving to `i` from `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    data: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "StochasticMatrix::new",
                expected: n * n,
                found: data.len(),
            });
        }
        if data
            .iter()
            .any(|&p| !p.is_finite() || p < -tol::STOCHASTIC_COLUMN || p > 1.0 + tol::STOCHASTIC_COLUMN)
        {
            return Err(Error::InvalidInput(
                "stochastic matrix entry outside [0, 1]".into(),
            ));
        }
        let m = Self { n, data };
        for j in 0..n {
            let s = m.column_sum(j);
            if (s - 1.0).abs() > tol::STOCHASTIC_COLUMN {
                return Err(Error::InvalidInput(format!(
                    "column {j} sums to {s}, expected 1"
                )));
            }
        }
        Ok(m)
    }

    pub(crate) fn from_parts_unchecked(n: usize, data: Vec<f64>) -> Self {
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.n).map(|j| self.get(i, j)).sum()
    }

    /// Largest deviation of any row or column sum from 1.
    pub fn doubly_stochastic_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for k in 0..self.n {
            dev = dev.max((self.column_sum(k) - 1.0).abs());
            dev = dev.max((self.row_sum(k) - 1.0).abs());
        }
        dev
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                context: "StochasticMatrix::matmul",
                expected: self.n,
                found: other.n,
            });
        }
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Matrix power by repeated squaring; exponent 0 gives the identity.
    pub fn power(&self, exponent: u64) -> Self {
        let mut result = Self::identity(self.n);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base).expect("same dimension");
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base).expect("same dimension");
            }
        }
        result
    }

    /// Push a probability column vector one step forward.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "StochasticMatrix::apply",
                expected: self.n,
                found: p.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.get(i, j) * p[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.get(i, j);
            }
        }
        Self { n, data }
    }
}

/// Complete description of one experiment: energies (ascending, the
/// reference basis), the measured observable, the initial ensemble, the
/// waiting-time law, and the number `M >= 1` of observable measurements.
#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    energies: Vec<f64>,
    observable: Observable,
    initial: InitialState,
    waits: WaitingTimeDistribution,
    m: usize,
}

impl ProtocolSpec {
    pub fn new(
        energies: Vec<f64>,
        observable: Observable,
        initial: InitialState,
        waits: WaitingTimeDistribution,
        m: usize,
    ) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidInput("no energy levels".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("energy is not finite".into()));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(
                "energies must be sorted in ascending order".into(),
            ));
        }
        let n = energies.len();
        if observable.dim() != n {
            return Err(Error::DimensionMismatch {
                context: "ProtocolSpec observable",
                expected: n,
                found: observable.dim(),
            });
        }
        if initial.dim() != n {
            return Err(Error::DimensionMismatch {
                context: "ProtocolSpec initial state",
                expected: n,
                found: initial.dim(),
            });
        }
        if m < 1 {
            return Err(Error::InvalidInput(
                "at least one observable measurement is required".into(),
            ));
        }
        Ok(Self {
            energies,
            observable,
            initial,
            waits,
            m,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn waits(&self) -> &WaitingTimeDistribution {
        &self.waits
    }

    pub fn measurements(&self) -> usize {
        self.m
    }

    /// Spread of the spectrum, the scale for merge tolerances.
    pub fn energy_span(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }

    /// Wait-averaged outcome-to-outcome transition matrix.
    pub fn averaged_l(&self) -> Result<StochasticMatrix> {
        averaged_matrix(&self.waits, |tau| {
            transition_matrix_l(&self.energies, &self.observable, tau)
        })
    }

    /// Wait-averaged first-step boundary matrix.
    pub fn averaged_a(&self) -> Result<StochasticMatrix> {
        averaged_matrix(&self.waits, |tau| {
            boundary_matrix_a(&self.energies, &self.observable, tau)
        })
    }

    /// Final-step boundary matrix.
    pub fn boundary_b(&self) -> StochasticMatrix {
        boundary_matrix_b(&self.observable)
    }
}

/// Transition amplitudes `<alpha_i|U(tau)|alpha_j>` between observable
/// eigenvectors.
pub fn amplitude_matrix(
    energies: &[f64],
    observable: &Observable,
    tau: f64,
) -> Result<ComplexMatrix> {
    let n = energies.len();
    if observable.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "amplitude_matrix",
            expected: n,
            found: observable.dim(),
        });
    }
    let u = UnitaryPropagator::new(energies, tau)?;
    let w = observable.basis();
    let mut t = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += w.get(k, i).conj() * u.phases()[k] * w.get(k, j);
            }
            t.set(i, j, acc);
        }
    }
    Ok(t)
}

/// Outcome-to-outcome transition matrix
/// `L(tau)[i][j] = |<alpha_i|U(tau)|alpha_j>|^2`. Unistochastic by
/// construction, hence doubly stochastic; the deviation is checked.
pub fn transition_matrix_l(
    energies: &[f64],
    observable: &Observable,
    tau: f64,
) -> Result<StochasticMatrix> {
    let t = amplitude_matrix(energies, observable, tau)?;
    let n = energies.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = t.get(i, j).norm_sqr();
        }
    }
    let l = StochasticMatrix::from_parts_unchecked(n, data);
    let dev = l.doubly_stochastic_deviation();
    if dev > tol::DOUBLY_STOCHASTIC {
        return Err(Error::InvalidInput(format!(
            "transition matrix deviates from double stochasticity by {dev:.3e}"
        )));
    }
    Ok(l)
}

/// First-step boundary matrix
/// `A(tau)[k][n] = |<alpha_k|U(tau)|E_n>|^2`. An energy eigenstate only
/// picks up a phase under the evolution, so the entries do not actually
/// depend on `tau`; the general form is kept for clarity.
pub fn boundary_matrix_a(
    energies: &[f64],
    observable: &Observable,
    tau: f64,
) -> Result<StochasticMatrix> {
    let n = energies.len();
    if observable.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "boundary_matrix_a",
            expected: n,
            found: observable.dim(),
        });
    }
    let u = UnitaryPropagator::new(energies, tau)?;
    let w = observable.basis();
    let mut data = vec![0.0; n * n];
    for k in 0..n {
        for level in 0..n {
            let amp = w.get(level, k).conj() * u.phases()[level];
            data[k * n + level] = amp.norm_sqr();
        }
    }
    Ok(StochasticMatrix::from_parts_unchecked(n, data))
}

/// Final-step boundary matrix `B[m][k] = |<E_m|alpha_k>|^2`, equal to
/// `A(0)` transposed.
pub fn boundary_matrix_b(observable: &Observable) -> StochasticMatrix {
    let n = observable.dim();
    let w = observable.basis();
    let mut data = vec![0.0; n * n];
    for m in 0..n {
        for k in 0..n {
            data[m * n + k] = w.get(m, k).norm_sqr();
        }
    }
    StochasticMatrix::from_parts_unchecked(n, data)
}

/// Convex combination of per-atom matrices under the waiting-time law.
pub fn averaged_matrix<F>(waits: &WaitingTimeDistribution, build: F) -> Result<StochasticMatrix>
where
    F: Fn(f64) -> Result<StochasticMatrix>,
{
    let mut acc: Option<(usize, Vec<f64>)> = None;
    for atom in waits.atoms() {
        let m = build(atom.tau)?;
        let n = m.dim();
        let (dim, data) = acc.get_or_insert_with(|| (n, vec![0.0; n * n]));
        if *dim != n {
            return Err(Error::DimensionMismatch {
                context: "averaged_matrix",
                expected: *dim,
                found: n,
            });
        }
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] += atom.prob * m.get(i, j);
            }
        }
    }
    let (n, data) = acc.expect("waiting law has at least one atom");
    Ok(StochasticMatrix::from_parts_unchecked(n, data))
}
