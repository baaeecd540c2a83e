//! Python bindings for the heat-statistics engine.
//!
//! The module mirrors the Rust API: build an `Observable`, an
//! `InitialState`, and a `Waits` law, combine them into a
//! `ProtocolSpec`, then call the exact, sampling, or asymptotic
//! routines. Complex values cross the boundary as Python complex
//! numbers; probabilities and tables come back as plain lists.

use heatstat_core::protocol;
use heatstat_core::qcore::ComplexMatrix;
use heatstat_core::{asymptotics, exact, montecarlo, qubit, qutrit};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: heatstat_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(&rows).map_err(err)
}

/// Measured observable: an orthonormal outcome basis expressed in the
/// energy eigenbasis.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Observable {
    inner: protocol::Observable,
}

#[pymethods]
impl Observable {
    /// Two-level observable with basis vectors (-b, a) and (a, b).
    #[staticmethod]
    fn qubit(a: Complex64, b: Complex64) -> PyResult<Self> {
        Ok(Self { inner: protocol::Observable::qubit(a, b).map_err(err)? })
    }

    /// Measure the energy eigenbasis itself.
    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: protocol::Observable::from_basis(ComplexMatrix::identity(n)).map_err(err)?,
        })
    }

    /// Basis-change matrix from the energy eigenbasis, one row per
    /// energy level: entry [n][k] is the amplitude of outcome k on
    /// level n.
    #[staticmethod]
    fn from_unitary(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self {
            inner: protocol::Observable::from_basis(matrix_from_rows(rows)?).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn basis(&self) -> Vec<Vec<Complex64>> {
        let b = self.inner.basis();
        (0..b.rows())
            .map(|i| (0..b.cols()).map(|j| b.get(i, j)).collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Observable(dim={})", self.inner.dim())
    }
}

/// Diagonal initial ensemble over the energy levels.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct InitialState {
    inner: protocol::InitialState,
}

#[pymethods]
impl InitialState {
    #[staticmethod]
    fn explicit(weights: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: protocol::InitialState::explicit(weights).map_err(err)? })
    }

    /// Thermal weights exp(-beta E) / Z.
    #[staticmethod]
    fn gibbs(beta: f64, energies: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: protocol::InitialState::gibbs(beta, &energies).map_err(err)? })
    }

    /// Three-level family interpolating between thermal (alpha = 0)
    /// and gap-weighted ensembles.
    #[staticmethod]
    fn three_level(alpha: f64, beta: f64, energies: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: protocol::InitialState::three_level_alpha_beta(alpha, beta, &energies)
                .map_err(err)?,
        })
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("InitialState(weights={:?})", self.inner.weights())
    }
}

/// Waiting-time law between consecutive measurements.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Waits {
    inner: protocol::WaitingTimeDistribution,
}

#[pymethods]
impl Waits {
    #[staticmethod]
    fn deterministic(tau: f64) -> PyResult<Self> {
        Ok(Self { inner: protocol::WaitingTimeDistribution::deterministic(tau).map_err(err)? })
    }

    /// Finite-support law from (tau, probability) pairs.
    #[staticmethod]
    fn atoms(pairs: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self { inner: protocol::WaitingTimeDistribution::from_atoms(&pairs).map_err(err)? })
    }

    /// Uniform density on [lo, hi], reduced to quadrature nodes.
    #[staticmethod]
    fn uniform(lo: f64, hi: f64, nodes: usize) -> PyResult<Self> {
        Ok(Self {
            inner: protocol::WaitingTimeDistribution::from_density(|_| 1.0, lo, hi, nodes)
                .map_err(err)?,
        })
    }

    #[getter]
    fn atom_pairs(&self) -> Vec<(f64, f64)> {
        self.inner.atoms().iter().map(|a| (a.tau, a.prob)).collect()
    }

    #[getter]
    fn mean_tau(&self) -> f64 {
        self.inner.mean_tau()
    }

    fn __repr__(&self) -> String {
        format!("Waits(atoms={})", self.inner.atoms().len())
    }
}

/// Full protocol: spectrum, observable, initial ensemble, waiting law,
/// and the number of intermediate measurements.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct ProtocolSpec {
    inner: protocol::ProtocolSpec,
}

#[pymethods]
impl ProtocolSpec {
    #[new]
    fn new(
        energies: Vec<f64>,
        observable: &Observable,
        initial: &InitialState,
        waits: &Waits,
        measurements: usize,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: protocol::ProtocolSpec::new(
                energies,
                observable.inner.clone(),
                initial.inner.clone(),
                waits.inner.clone(),
                measurements,
            )
            .map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies().to_vec()
    }

    #[getter]
    fn measurements(&self) -> usize {
        self.inner.measurements()
    }

    #[getter]
    fn energy_span(&self) -> f64 {
        self.inner.energy_span()
    }

    #[getter]
    fn initial_weights(&self) -> Vec<f64> {
        self.inner.initial().weights().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "ProtocolSpec(dim={}, measurements={})",
            self.inner.dim(),
            self.inner.measurements()
        )
    }
}

fn table_rows(t: &protocol::StochasticMatrix) -> Vec<Vec<f64>> {
    let n = t.dim();
    (0..n).map(|i| (0..n).map(|j| t.get(i, j)).collect()).collect()
}

/// Support points and probabilities of the exact heat distribution.
#[pyfunction]
fn heat_distribution(spec: &ProtocolSpec) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let dist = exact::heat_distribution(&spec.inner).map_err(err)?;
    Ok((dist.support().to_vec(), dist.probabilities().to_vec()))
}

/// Conditional table with entry [m][n] = P(final level m | initial
/// level n).
#[pyfunction]
fn conditional_table(spec: &ProtocolSpec) -> PyResult<Vec<Vec<f64>>> {
    Ok(table_rows(&exact::conditional_table(&spec.inner).map_err(err)?))
}

/// Same table by brute-force path enumeration; exponential cost,
/// intended for cross-checks on small instances.
#[pyfunction]
fn enumerate_conditional_table(spec: &ProtocolSpec) -> PyResult<Vec<Vec<f64>>> {
    Ok(table_rows(&exact::enumerate_conditional_table(&spec.inner).map_err(err)?))
}

/// Characteristic function G(u) of the heat; u may be complex.
#[pyfunction]
fn char_fn(spec: &ProtocolSpec, u: Complex64) -> PyResult<Complex64> {
    exact::char_fn(&spec.inner, u).map_err(err)
}

#[pyfunction]
fn char_fn_grid(spec: &ProtocolSpec, us: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    exact::char_fn_grid(&spec.inner, &us).map_err(err)
}

/// Heat moments of orders 1..=max_order.
#[pyfunction]
fn heat_moments(spec: &ProtocolSpec, max_order: usize) -> PyResult<Vec<f64>> {
    exact::heat_moments(&spec.inner, max_order).map_err(err)
}

/// Evaluates G(i beta) for a thermal initial state; returns the value
/// and its deviation from 1.
#[pyfunction]
fn fluctuation_check(spec: &ProtocolSpec) -> PyResult<(Complex64, f64)> {
    let check = exact::fluctuation_check(&spec.inner).map_err(err)?;
    Ok((check.g_at_i_beta, check.deviation))
}

/// Brute-force audit that the measurement channel preserves the
/// identity; returns (deviation, per-outcome projector mass, sequences
/// visited).
#[pyfunction]
fn unitality_check(spec: &ProtocolSpec) -> PyResult<(f64, Vec<f64>, u64)> {
    let check = exact::unitality_check(&spec.inner).map_err(err)?;
    Ok((check.deviation, check.projector_mass, check.sequences_visited))
}

/// Monte Carlo sample of the protocol.
#[pyclass(frozen)]
struct SampleStatistics {
    inner: montecarlo::SampleStatistics,
    dim: usize,
}

#[pymethods]
impl SampleStatistics {
    #[getter]
    fn trajectories(&self) -> u64 {
        self.inner.trajectories
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn support(&self) -> Vec<f64> {
        self.inner.support.clone()
    }

    #[getter]
    fn exact_probabilities(&self) -> Vec<f64> {
        self.inner.exact_probabilities.clone()
    }

    #[getter]
    fn heat_counts(&self) -> Vec<u64> {
        self.inner.heat_counts.clone()
    }

    /// Counts reshaped to [final level][initial level].
    #[getter]
    fn conditional_counts(&self) -> Vec<Vec<u64>> {
        let n = self.dim;
        (0..n)
            .map(|m| (0..n).map(|i| self.inner.conditional_counts[m * n + i]).collect())
            .collect()
    }

    #[getter]
    fn initial_counts(&self) -> Vec<u64> {
        self.inner.initial_counts.clone()
    }

    #[getter]
    fn mean_heat(&self) -> f64 {
        self.inner.mean_heat
    }

    #[getter]
    fn mean_heat_sq(&self) -> f64 {
        self.inner.mean_heat_sq
    }

    /// Mean of exp(-beta Q); None unless the initial state is thermal.
    #[getter]
    fn jarzynski_mean(&self) -> Option<f64> {
        self.inner.jarzynski_mean
    }

    #[getter]
    fn jarzynski_std_error(&self) -> Option<f64> {
        self.inner.jarzynski_std_error
    }

    fn __repr__(&self) -> String {
        format!(
            "SampleStatistics(trajectories={}, seed={})",
            self.inner.trajectories, self.inner.seed
        )
    }
}

/// Sample trajectories with a reproducible seed; identical inputs give
/// identical statistics regardless of thread count.
#[pyfunction]
#[pyo3(signature = (spec, trajectories, seed = 0))]
fn sample(spec: &ProtocolSpec, trajectories: u64, seed: u64) -> PyResult<SampleStatistics> {
    let stats = montecarlo::sample(&spec.inner, trajectories, seed).map_err(err)?;
    Ok(SampleStatistics { inner: stats, dim: spec.inner.dim() })
}

/// Qualitative mixing regime: "zeno_frozen", "infinite_temperature",
/// or "partial".
#[pyfunction]
fn classify_regime(spec: &ProtocolSpec) -> PyResult<String> {
    Ok(match asymptotics::classify_regime(&spec.inner).map_err(err)? {
        asymptotics::MixingRegime::ZenoFrozen => "zeno_frozen".to_string(),
        asymptotics::MixingRegime::InfiniteTemperature => "infinite_temperature".to_string(),
        asymptotics::MixingRegime::Partial { .. } => "partial".to_string(),
    })
}

/// Dynamically connected outcome groups: (blocks, block of outcome,
/// block of level).
#[pyfunction]
fn block_structure(spec: &ProtocolSpec) -> PyResult<(Vec<Vec<usize>>, Vec<usize>, Vec<usize>)> {
    let decomp = asymptotics::block_decomposition(spec.inner.energies(), spec.inner.observable())
        .map_err(err)?;
    let n = spec.inner.dim();
    Ok((
        decomp.blocks().to_vec(),
        (0..n).map(|k| decomp.block_of_outcome(k)).collect(),
        (0..n).map(|k| decomp.block_of_level(k)).collect(),
    ))
}

/// Convergence of the measurement chain toward its block-uniform limit.
#[pyclass(frozen)]
struct ThermalizationReport {
    inner: asymptotics::ThermalizationReport,
}

#[pymethods]
impl ThermalizationReport {
    #[getter]
    fn block_count(&self) -> usize {
        self.inner.block_count
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    #[getter]
    fn deviations(&self) -> Vec<(usize, f64)> {
        self.inner.deviations.clone()
    }

    #[getter]
    fn limiting_weights(&self) -> Vec<f64> {
        self.inner.limiting_weights.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "ThermalizationReport(block_count={}, rate={})",
            self.inner.block_count, self.inner.rate
        )
    }
}

#[pyfunction]
fn thermalization_report(spec: &ProtocolSpec, ms: Vec<usize>) -> PyResult<ThermalizationReport> {
    Ok(ThermalizationReport {
        inner: asymptotics::thermalization_report(&spec.inner, &ms).map_err(err)?,
    })
}

/// Infinite-measurement limit of the characteristic function.
#[pyfunction]
fn limiting_char_fn(spec: &ProtocolSpec, u: Complex64) -> PyResult<Complex64> {
    asymptotics::limiting_char_fn(&spec.inner, u).map_err(err)
}

/// Probability of leaving the initial outcome when a fixed total time
/// is cut into m measurement intervals.
#[pyfunction]
fn zeno_escape(
    energies: Vec<f64>,
    observable: &Observable,
    total_time: f64,
    m: usize,
) -> PyResult<f64> {
    asymptotics::zeno_escape(&energies, &observable.inner, total_time, m).map_err(err)
}

/// Log-log fit of escape probability against measurement count:
/// (slope, intercept, fitted points).
#[pyfunction]
fn zeno_scan(
    energies: Vec<f64>,
    observable: &Observable,
    total_time: f64,
    ms: Vec<usize>,
) -> PyResult<(f64, f64, Vec<(usize, f64)>)> {
    let fit = asymptotics::zeno_scan(&energies, &observable.inner, total_time, &ms).map_err(err)?;
    Ok((fit.slope, fit.intercept, fit.points))
}

/// Closed-form two-level protocol; cross-checks the generic engine and
/// extends to arbitrarily large measurement counts.
#[pyclass(frozen)]
struct TwoLevelSystem {
    inner: qubit::TwoLevelSystem,
}

#[pymethods]
impl TwoLevelSystem {
    #[new]
    fn new(
        e: f64,
        a: Complex64,
        b: Complex64,
        initial: &InitialState,
        waits: &Waits,
        measurements: usize,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: qubit::TwoLevelSystem::new(
                e,
                a,
                b,
                initial.inner.clone(),
                waits.inner.clone(),
                measurements,
            )
            .map_err(err)?,
        })
    }

    #[getter]
    fn half_gap(&self) -> f64 {
        self.inner.half_gap()
    }

    #[getter]
    fn measurements(&self) -> usize {
        self.inner.measurements()
    }

    /// Mean outcome-flip probability per step.
    #[getter]
    fn mixing_weight(&self) -> f64 {
        self.inner.mixing_weight()
    }

    /// Memory factor (1 - 2 zeta)^(M-1) multiplying the initial
    /// coherence pattern.
    #[getter]
    fn memory_factor(&self) -> f64 {
        self.inner.lambda()
    }

    fn flip_probability(&self, tau: f64) -> f64 {
        self.inner.flip_probability(tau)
    }

    fn char_fn(&self, u: Complex64) -> PyResult<Complex64> {
        self.inner.char_fn(u).map_err(err)
    }

    fn char_fn_derivative(&self, order: usize, u: Complex64) -> PyResult<Complex64> {
        self.inner.char_fn_derivative(order, u).map_err(err)
    }

    fn moment(&self, order: usize) -> PyResult<f64> {
        self.inner.moment(order).map_err(err)
    }

    fn limiting_char_fn(&self, u: Complex64) -> PyResult<Complex64> {
        self.inner.limiting_char_fn(u).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "TwoLevelSystem(half_gap={}, measurements={})",
            self.inner.half_gap(),
            self.inner.measurements()
        )
    }
}

/// Weights of the three-level (alpha, beta) ensemble family.
#[pyfunction]
fn ensemble_weights(energies: Vec<f64>, alpha: f64, beta: f64) -> PyResult<Vec<f64>> {
    Ok(qutrit::ensemble_weights(&energies, alpha, beta).map_err(err)?.to_vec())
}

/// Effective inverse temperature solving G(i x) = 1 in the
/// large-measurement limit: (beta_eff, candidate roots, multiple-root
/// flag).
#[pyfunction]
fn solve_beta_eff(
    energies: Vec<f64>,
    alpha: f64,
    beta: f64,
) -> PyResult<(f64, Vec<f64>, bool)> {
    let ensemble = qutrit::QutritEnsemble::new(&energies, alpha, beta).map_err(err)?;
    let solution = qutrit::solve_beta_eff(&ensemble).map_err(err)?;
    Ok((solution.beta_eff, solution.candidates, solution.multiple_roots))
}

/// Large-alpha plateau value of the effective inverse temperature.
#[pyfunction]
fn asymptotic_beta_bar(energies: Vec<f64>) -> PyResult<f64> {
    qutrit::asymptotic_beta_bar(&energies).map_err(err)
}

/// Slope of beta_eff against alpha in the strongly gap-weighted limit.
#[pyfunction]
fn beta_eff_slope(energies: Vec<f64>) -> PyResult<f64> {
    qutrit::beta_eff_slope(&energies).map_err(err)
}

/// Effective temperature over a (beta, alpha) grid; failed points carry
/// beta_eff = None and a note.
#[pyfunction]
fn sweep_beta_eff(
    energies: Vec<f64>,
    betas: Vec<f64>,
    alphas: Vec<f64>,
) -> PyResult<Vec<(f64, f64, Option<f64>, Option<String>)>> {
    let points = qutrit::sweep_beta_eff(&energies, &betas, &alphas).map_err(err)?;
    Ok(points
        .into_iter()
        .map(|p| (p.beta, p.alpha, p.beta_eff, p.note))
        .collect())
}

#[pymodule]
fn heatstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Observable>()?;
    m.add_class::<InitialState>()?;
    m.add_class::<Waits>()?;
    m.add_class::<ProtocolSpec>()?;
    m.add_class::<SampleStatistics>()?;
    m.add_class::<ThermalizationReport>()?;
    m.add_class::<TwoLevelSystem>()?;
    m.add_function(wrap_pyfunction!(heat_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_table, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_conditional_table, m)?)?;
    m.add_function(wrap_pyfunction!(char_fn, m)?)?;
    m.add_function(wrap_pyfunction!(char_fn_grid, m)?)?;
    m.add_function(wrap_pyfunction!(heat_moments, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation_check, m)?)?;
    m.add_function(wrap_pyfunction!(unitality_check, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(classify_regime, m)?)?;
    m.add_function(wrap_pyfunction!(block_structure, m)?)?;
    m.add_function(wrap_pyfunction!(thermalization_report, m)?)?;
    m.add_function(wrap_pyfunction!(limiting_char_fn, m)?)?;
    m.add_function(wrap_pyfunction!(zeno_escape, m)?)?;
    m.add_function(wrap_pyfunction!(zeno_scan, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_weights, m)?)?;
    m.add_function(wrap_pyfunction!(solve_beta_eff, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_beta_bar, m)?)?;
    m.add_function(wrap_pyfunction!(beta_eff_slope, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_beta_eff, m)?)?;
    Ok(())
}
