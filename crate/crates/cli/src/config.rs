//! Experiment configuration: a single JSON document with strict
//! field checking. Unknown keys are rejected so a typo cannot silently
//! fall back to a default physics parameter.

use std::path::Path;

use heatstat_core::protocol::{
    InitialState, Observable, ProtocolSpec, WaitingTimeDistribution,
};
use heatstat_core::qcore::{jacobi_eigh, C64, ComplexMatrix, HermitianSpec};
use heatstat_core::tol;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{from_core, CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub observable: Option<ObservableConfig>,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub waits: Option<WaitsConfig>,
    #[serde(default)]
    pub measurements: Option<usize>,
    #[serde(default)]
    pub exact: Option<ExactTask>,
    #[serde(default)]
    pub sample: Option<SampleTask>,
    #[serde(default)]
    pub thermalize: Option<ThermalizeTask>,
    #[serde(default)]
    pub zeno: Option<ZenoTask>,
    #[serde(default)]
    pub fig1: Option<Fig1Task>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemConfig {
    /// Energy levels, ascending.
    Energies(Vec<f64>),
    /// Hermitian matrix as `[[re, im], ...]` rows; diagonalized on load.
    Hamiltonian(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableConfig {
    /// Measure the energy eigenbasis itself.
    Identity,
    /// Basis change from the energy eigenbasis (or from the same basis
    /// the Hamiltonian matrix was written in, when one was given).
    Unitary(Vec<Vec<[f64; 2]>>),
    /// Hermitian operator; its eigenbasis is measured.
    Hermitian(Vec<Vec<[f64; 2]>>),
    /// Two-level preset with amplitudes a, b.
    Qubit { a: [f64; 2], b: [f64; 2] },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    Weights(Vec<f64>),
    Gibbs { beta: f64 },
    Qutrit { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitsConfig {
    Deterministic(f64),
    /// `[[tau, prob], ...]`
    Atoms(Vec<(f64, f64)>),
    /// Uniform density on `[lo, hi]`, reduced by quadrature.
    Quadrature { lo: f64, hi: f64, nodes: usize },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self, field: &str) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(CliError::config(field, "points must be at least 1"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < self.lo {
            return Err(CliError::config(field, "grid needs finite lo <= hi"));
        }
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.lo + step * i as f64).collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactTask {
    pub u_grid: GridSpec,
    pub max_moment: usize,
    pub svg: bool,
}

impl Default for ExactTask {
    fn default() -> Self {
        Self {
            u_grid: GridSpec { lo: -5.0, hi: 5.0, points: 201 },
            max_moment: 2,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleTask {
    pub trajectories: u64,
    pub seed: u64,
}

impl Default for SampleTask {
    fn default() -> Self {
        Self { trajectories: 100_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalizeTask {
    pub m_list: Vec<usize>,
}

impl Default for ThermalizeTask {
    fn default() -> Self {
        Self { m_list: vec![1, 2, 5, 10, 20, 50, 100, 200, 500] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZenoTask {
    pub total_time: f64,
    pub m_list: Vec<usize>,
}

impl Default for ZenoTask {
    fn default() -> Self {
        Self {
            total_time: 1.0,
            m_list: vec![10, 16, 25, 40, 63, 100, 158, 251, 398, 631, 1000],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig1Task {
    pub betas: Vec<f64>,
    pub alpha_grid: GridSpec,
    pub svg: bool,
}

impl Default for Fig1Task {
    fn default() -> Self {
        Self {
            betas: vec![0.0, 1.0, 2.0, 3.0],
            alpha_grid: GridSpec { lo: -30.0, hi: 10.0, points: 81 },
            svg: true,
        }
    }
}

/// Diagonalized system: the spectrum plus, when the input was a
/// Hamiltonian matrix, the eigenbasis used to rotate observables.
pub struct System {
    pub energies: Vec<f64>,
    pub eigenbasis: Option<HermitianSpec>,
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], field: &str) -> Result<ComplexMatrix> {
    let converted: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(&converted).map_err(|e| from_core(field, e))
}

impl ExperimentConfig {
    /// Parse a config file; also returns the SHA-256 of its raw bytes,
    /// recorded in every output for provenance.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let raw = std::fs::read(path).map_err(|e| CliError::Io {
            message: format!("reading {}: {e}", path.display()),
        })?;
        let digest = hex(&Sha256::digest(&raw));
        let text = String::from_utf8(raw).map_err(|_| CliError::Config {
            path: None,
            message: "config file is not valid UTF-8".into(),
        })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let config: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
                path: Some(e.path().to_string()),
                message: e.inner().to_string(),
            })?;
        Ok((config, digest))
    }

    pub fn system(&self) -> Result<System> {
        match &self.system {
            SystemConfig::Energies(levels) => {
                if levels.is_empty() {
                    return Err(CliError::config("system.energies", "no levels given"));
                }
                Ok(System { energies: levels.clone(), eigenbasis: None })
            }
            SystemConfig::Hamiltonian(rows) => {
                let h = complex_matrix(rows, "system.hamiltonian")?;
                let spec = jacobi_eigh(&h, tol::UNITARITY)
                    .map_err(|e| from_core("system.hamiltonian", e))?;
                Ok(System {
                    energies: spec.eigenvalues().to_vec(),
                    eigenbasis: Some(spec),
                })
            }
        }
    }

    /// Build the observable in the energy eigenbasis. Matrices are
    /// interpreted in whatever basis the system was written in: for an
    /// energies list that is already the eigenbasis, for a Hamiltonian
    /// matrix they are rotated through its eigenvectors.
    pub fn observable(&self, system: &System) -> Result<Observable> {
        let n = system.energies.len();
        let field = "observable";
        let config = self
            .observable
            .as_ref()
            .ok_or_else(|| CliError::config(field, "missing; required by this command"))?;
        let rotate = |basis: ComplexMatrix| -> Result<ComplexMatrix> {
            match &system.eigenbasis {
                None => Ok(basis),
                Some(spec) => spec
                    .rotate_into_eigenbasis(&basis)
                    .map_err(|e| from_core(field, e)),
            }
        };
        match config {
            ObservableConfig::Identity => {
                Observable::from_basis(ComplexMatrix::identity(n))
                    .map_err(|e| from_core(field, e))
            }
            ObservableConfig::Unitary(rows) => {
                let basis = rotate(complex_matrix(rows, "observable.unitary")?)?;
                Observable::from_basis(basis).map_err(|e| from_core("observable.unitary", e))
            }
            ObservableConfig::Hermitian(rows) => {
                let h = complex_matrix(rows, "observable.hermitian")?;
                let spec = jacobi_eigh(&h, tol::UNITARITY)
                    .map_err(|e| from_core("observable.hermitian", e))?;
                let basis = rotate(spec.basis().clone())?;
                Observable::new(spec.eigenvalues().to_vec(), basis)
                    .map_err(|e| from_core("observable.hermitian", e))
            }
            ObservableConfig::Qubit { a, b } => {
                Observable::qubit(C64::new(a[0], a[1]), C64::new(b[0], b[1]))
                    .map_err(|e| from_core("observable.qubit", e))
            }
        }
    }

    pub fn initial(&self, energies: &[f64]) -> Result<InitialState> {
        let field = "initial";
        let config = self
            .initial
            .as_ref()
            .ok_or_else(|| CliError::config(field, "missing; required by this command"))?;
        match config {
            InitialConfig::Weights(w) => {
                InitialState::explicit(w.clone()).map_err(|e| from_core("initial.weights", e))
            }
            InitialConfig::Gibbs { beta } => {
                InitialState::gibbs(*beta, energies).map_err(|e| from_core("initial.gibbs", e))
            }
            InitialConfig::Qutrit { alpha, beta } => {
                InitialState::three_level_alpha_beta(*alpha, *beta, energies)
                    .map_err(|e| from_core("initial.qutrit", e))
            }
        }
    }

    pub fn waits(&self) -> Result<WaitingTimeDistribution> {
        let field = "waits";
        let config = self
            .waits
            .as_ref()
            .ok_or_else(|| CliError::config(field, "missing; required by this command"))?;
        match config {
            WaitsConfig::Deterministic(tau) => {
                WaitingTimeDistribution::deterministic(*tau)
                    .map_err(|e| from_core("waits.deterministic", e))
            }
            WaitsConfig::Atoms(pairs) => WaitingTimeDistribution::from_atoms(pairs)
                .map_err(|e| from_core("waits.atoms", e)),
            WaitsConfig::Quadrature { lo, hi, nodes } => {
                WaitingTimeDistribution::from_density(|_| 1.0, *lo, *hi, *nodes)
                    .map_err(|e| from_core("waits.quadrature", e))
            }
        }
    }

    pub fn measurements(&self) -> Result<usize> {
        self.measurements
            .ok_or_else(|| CliError::config("measurements", "missing; required by this command"))
    }

    /// Assemble the full protocol; any missing or inconsistent section
    /// is reported by field name.
    pub fn protocol_spec(&self) -> Result<ProtocolSpec> {
        let system = self.system()?;
        let observable = self.observable(&system)?;
        let initial = self.initial(&system.energies)?;
        let waits = self.waits()?;
        let m = self.measurements()?;
        ProtocolSpec::new(system.energies, observable, initial, waits, m)
            .map_err(|e| from_core("config", e))
    }

    pub fn exact_task(&self) -> ExactTask {
        self.exact.clone().unwrap_or_default()
    }

    pub fn sample_task(&self) -> SampleTask {
        self.sample.clone().unwrap_or_default()
    }

    pub fn thermalize_task(&self) -> ThermalizeTask {
        self.thermalize.clone().unwrap_or_default()
    }

    pub fn zeno_task(&self) -> ZenoTask {
        self.zeno.clone().unwrap_or_default()
    }

    pub fn fig1_task(&self) -> Fig1Task {
        self.fig1.clone().unwrap_or_default()
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            path: Some(e.path().to_string()),
            message: e.inner().to_string(),
        })
    }

    #[test]
    fn minimal_config_builds_a_spec() {
        let config = parse(
            r#"{
                "system": {"energies": [-1.0, 1.0]},
                "observable": {"qubit": {"a": [0.6, 0.0], "b": [0.8, 0.0]}},
                "initial": {"gibbs": {"beta": 1.0}},
                "waits": {"deterministic": 0.7},
                "measurements": 3
            }"#,
        )
        .unwrap();
        let spec = config.protocol_spec().unwrap();
        assert_eq!(spec.dim(), 2);
        assert_eq!(spec.measurements(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let err = parse(r#"{"system": {"energies": [0.0, 1.0]}, "measurments": 3}"#).unwrap_err();
        match err {
            CliError::Config { message, .. } => assert!(message.contains("measurments")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn hamiltonian_system_is_diagonalized() {
        let config = parse(
            r#"{
                "system": {"hamiltonian": [
                    [[0.0, 0.0], [1.0, 0.0]],
                    [[1.0, 0.0], [0.0, 0.0]]
                ]}
            }"#,
        )
        .unwrap();
        let system = config.system().unwrap();
        assert!((system.energies[0] + 1.0).abs() < 1e-12);
        assert!((system.energies[1] - 1.0).abs() < 1e-12);
        assert!(system.eigenbasis.is_some());
    }

    #[test]
    fn observable_matrix_is_rotated_through_the_eigenbasis() {
        // Measuring the Hamiltonian's own eigenbasis, written in the
        // computational basis, must reduce to the identity preset.
        let config = parse(
            r#"{
                "system": {"hamiltonian": [
                    [[0.0, 0.0], [1.0, 0.0]],
                    [[1.0, 0.0], [0.0, 0.0]]
                ]},
                "observable": {"unitary": [
                    [[-0.7071067811865475, 0.0], [0.7071067811865475, 0.0]],
                    [[0.7071067811865475, 0.0], [0.7071067811865475, 0.0]]
                ]},
                "initial": {"gibbs": {"beta": 0.5}},
                "waits": {"deterministic": 1.0},
                "measurements": 2
            }"#,
        )
        .unwrap();
        let system = config.system().unwrap();
        let obs = config.observable(&system).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((obs.basis().get(i, j).norm() - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn missing_sections_name_the_field() {
        let config = parse(r#"{"system": {"energies": [0.0, 1.0]}}"#).unwrap();
        let err = config.protocol_spec().unwrap_err();
        match err {
            CliError::Config { path, .. } => assert_eq!(path.as_deref(), Some("observable")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let grid = GridSpec { lo: -30.0, hi: 10.0, points: 81 };
        let values = grid.values("alpha_grid").unwrap();
        assert_eq!(values.len(), 81);
        assert_eq!(values[0], -30.0);
        assert_eq!(values[60], 0.0);
        assert_eq!(values[80], 10.0);
    }

    #[test]
    fn quadrature_waits_sum_to_one() {
        let config = parse(
            r#"{
                "system": {"energies": [-1.0, 1.0]},
                "waits": {"quadrature": {"lo": 0.2, "hi": 1.4, "nodes": 9}}
            }"#,
        )
        .unwrap();
        let waits = config.waits().unwrap();
        let total: f64 = waits.atoms().iter().map(|a| a.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(waits.atoms().len(), 9);
    }
}
