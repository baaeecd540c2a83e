//! Dense complex matrices, a cyclic Jacobi eigensolver for Hermitian
//! matrices, and diagonal propagators.
//!
//! The energy eigenbasis of the system Hamiltonian is the reference
//! basis for everything downstream: a system is a sorted list of
//! energies, the propagator is diagonal there, and any measured
//! observable is described by its eigenvector matrix relative to that
//! basis. All storage is dense row-major `Complex64`; the dimensions in
//! play (a handful of levels, at most ~1000 for the eigensolver) never
//! justify anything sparser.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// Largest dimension accepted by [`jacobi_eigh`].
pub const MAX_EIGH_DIM: usize = 1024;

const MAX_SWEEPS: usize = 100;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "ComplexMatrix::new",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entry is not finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                context: "trace",
                expected: self.rows,
                found: self.cols,
            });
        }
        let mut t = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            t += self.get(i, i);
        }
        Ok(t)
    }

    /// Matrix power by repeated squaring; `power(A, 0)` is the identity.
    pub fn power(&self, exponent: u64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                context: "power",
                expected: self.rows,
                found: self.cols,
            });
        }
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "apply",
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference |self - other|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max entry of |A - A'|; zero iff Hermitian.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// Max entry of |W'W - I|; zero iff unitary.
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = self
            .adjoint()
            .matmul(self)
            .expect("adjoint dimensions always compose");
        gram.max_abs_diff(&Self::identity(self.cols))
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues
/// and a unitary whose k-th column is the k-th eigenvector expressed in
/// the basis the matrix was given in.
#[derive(Debug, Clone)]
pub struct HermitianSpec {
    eigenvalues: Vec<f64>,
    basis: ComplexMatrix,
}

impl HermitianSpec {
    pub fn new(eigenvalues: Vec<f64>, basis: ComplexMatrix) -> Result<Self> {
        if !basis.is_square() || basis.rows() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                context: "HermitianSpec::new",
                expected: eigenvalues.len(),
                found: basis.rows(),
            });
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("eigenvalue is not finite".into()));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(
                "eigenvalues must be sorted in ascending order".into(),
            ));
        }
        let dev = basis.unitarity_deviation();
        if dev > tol::UNITARITY {
            return Err(Error::InvalidInput(format!(
                "eigenvector matrix is not unitary: |W'W - I| = {dev:.3e}"
            )));
        }
        Ok(Self { eigenvalues, basis })
    }

    /// Diagonal Hamiltonian given directly by its spectrum; the basis is
    /// the identity.
    pub fn from_energies(energies: &[f64]) -> Result<Self> {
        Self::new(energies.to_vec(), ComplexMatrix::identity(energies.len()))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    /// Reassemble W diag(lambda) W'.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut scaled = self.basis.clone();
        for j in 0..n {
            for i in 0..n {
                let v = scaled.get(i, j) * C64::new(self.eigenvalues[j], 0.0);
                scaled.set(i, j, v);
            }
        }
        scaled
            .matmul(&self.basis.adjoint())
            .expect("square dimensions always compose")
    }

    /// Express an operator's eigenbasis matrix in this spectrum's
    /// eigenbasis: columns of `other_basis` are rotated by W'.
    pub fn rotate_into_eigenbasis(&self, other_basis: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.basis.adjoint().matmul(other_basis)
    }
}

/// Diagonal propagator exp(-i H tau) in the energy eigenbasis.
#[derive(Debug, Clone)]
pub struct UnitaryPropagator {
    phases: Vec<C64>,
    tau: f64,
}

impl UnitaryPropagator {
    pub fn new(energies: &[f64], tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidInput("tau is not finite".into()));
        }
        let phases: Vec<C64> = energies
            .iter()
            .map(|&e| C64::new(0.0, -e * tau).exp())
            .collect();
        if phases
            .iter()
            .any(|p| (p.norm() - 1.0).abs() > tol::PROPAGATOR_UNITARITY)
        {
            return Err(Error::InvalidInput(
                "propagator phase drifted off the unit circle".into(),
            ));
        }
        Ok(Self { phases, tau })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phases(&self) -> &[C64] {
        &self.phases
    }

    pub fn as_matrix(&self) -> ComplexMatrix {
        let n = self.phases.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (k, &p) in self.phases.iter().enumerate() {
            m.set(k, k, p);
        }
        m
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// `tol` bounds the accepted Hermiticity defect of the input. The
/// returned decomposition reconstructs the symmetrized input to well
/// within 100 * tol. Eigenvector phases are fixed so the largest entry
/// of each column is real and positive, which makes results
/// reproducible across runs.
pub fn jacobi_eigh(a: &ComplexMatrix, tol_hermitian: f64) -> Result<HermitianSpec> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "jacobi_eigh",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    if n > MAX_EIGH_DIM {
        return Err(Error::TooLarge {
            size: n as f64,
            limit: MAX_EIGH_DIM as f64,
        });
    }
    let dev = a.hermiticity_deviation();
    if dev > tol_hermitian {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol: tol_hermitian,
        });
    }
    if n == 0 {
        return HermitianSpec::new(vec![], ComplexMatrix::zeros(0, 0));
    }

    // Work on the symmetrized copy so the accepted defect cannot bias
    // the rotations.
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = (a.get(i, j) + a.get(j, i).conj()) * C64::new(0.5, 0.0);
            m.set(i, j, v);
        }
    }
    let mut w = ComplexMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let target = scale * 1e-14;

    let mut converged = false;
    let mut off_max = 0.0;
    for _sweep in 0..MAX_SWEEPS {
        off_max = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off_max = off_max.max(m.get(p, q).norm());
            }
        }
        if off_max <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = m.get(p, q);
                let r = beta.norm();
                if r <= target * 1e-2 {
                    continue;
                }
                let phase = beta / C64::new(r, 0.0);
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                // Annihilation condition: s c (aqq - app) + r (c^2 - s^2) = 0,
                // i.e. t^2 - 2 theta t - 1 = 0; take the root of smaller
                // magnitude for stability.
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    -theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Two-sided rotation V'MV with
                //   V[p][p] = c, V[p][q] = -s phase, V[q][p] = s conj(phase), V[q][q] = c.
                let sp = C64::new(s, 0.0) * phase;
                let spc = sp.conj();
                for j in 0..n {
                    let mp = m.get(p, j);
                    let mq = m.get(q, j);
                    m.set(p, j, mp * c + mq * sp);
                    m.set(q, j, -spc * mp + mq * c);
                }
                for i in 0..n {
                    let mp = m.get(i, p);
                    let mq = m.get(i, q);
                    m.set(i, p, mp * c + mq * spc);
                    m.set(i, q, -sp * mp + mq * c);
                }
                for i in 0..n {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    w.set(i, p, wp * c + wq * spc);
                    w.set(i, q, -sp * wp + wq * c);
                }
                // The rotated pivot is zero by construction; store it
                // exactly and keep the diagonal real.
                m.set(p, q, C64::new(0.0, 0.0));
                m.set(q, p, C64::new(0.0, 0.0));
                let dpp = m.get(p, p).re;
                let dqq = m.get(q, q).re;
                m.set(p, p, C64::new(dpp, 0.0));
                m.set(q, q, C64::new(dqq, 0.0));
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off_max,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(i, i)
            .re
            .partial_cmp(&m.get(j, j).re)
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i).re).collect();
    let mut basis = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        let mut pivot = 0usize;
        let mut best = -1.0f64;
        for i in 0..n {
            let mag = w.get(i, old_col).norm();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        let anchor = w.get(pivot, old_col);
        let phase = if anchor.norm() > 0.0 {
            anchor.conj() / C64::new(anchor.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            basis.set(i, new_col, w.get(i, old_col) * phase);
        }
    }
    HermitianSpec::new(eigenvalues, basis)
}

/// Random unitary from Gram-Schmidt on a Gaussian complex matrix.
/// Deterministic for a given RNG state; used for randomized checks and
/// for generating generic observables.
pub fn haar_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let normal = |rng: &mut R| {
        // Box-Muller from two uniforms.
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|_| (0..n).map(|_| C64::new(normal(rng), normal(rng))).collect())
        .collect();
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = (0..n).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..n {
                let v = cols[j][i] - proj * cols[k][i];
                cols[j][i] = v;
            }
        }
        // Re-orthogonalize once; classical Gram-Schmidt alone loses
        // digits for moderate n.
        for k in 0..j {
            let proj: C64 = (0..n).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..n {
                let v = cols[j][i] - proj * cols[k][i];
                cols[j][i] = v;
            }
        }
        let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for v in cols[j].iter_mut() {
            *v /= C64::new(norm, 0.0);
        }
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let re = rng.random::<f64>() * 2.0 - 1.0;
                if i == j {
                    m.set(i, i, c(re, 0.0));
                } else {
                    let im = rng.random::<f64>() * 2.0 - 1.0;
                    m.set(i, j, c(re, im));
                    m.set(j, i, c(re, -im));
                }
            }
        }
        m
    }

    #[test]
    fn power_zero_is_identity() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 2.0), c(0.5, 0.0)],
            vec![c(0.0, -1.0), c(2.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(m.power(0).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn power_matches_repeated_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_hermitian(4, &mut rng);
        let fast = m.power(8).unwrap();
        let mut slow = m.clone();
        for _ in 0..7 {
            slow = slow.matmul(&m).unwrap();
        }
        assert!(fast.max_abs_diff(&slow) <= 1e-10 * slow.max_abs());
    }

    #[test]
    fn trace_is_cyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_hermitian(5, &mut rng);
            let b = random_hermitian(5, &mut rng);
            let ab = a.matmul(&b).unwrap().trace().unwrap();
            let ba = b.matmul(&a).unwrap().trace().unwrap();
            let scale = a.max_abs() * b.max_abs() * 5.0;
            assert!((ab - ba).norm() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn matmul_rejects_mismatched_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            a.matmul(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn propagator_has_expected_phases() {
        let u = UnitaryPropagator::new(&[-2.0, 0.0, 1.0], 0.3).unwrap();
        let expected = [c(0.0, 0.6).exp(), c(1.0, 0.0), c(0.0, -0.3).exp()];
        for (got, want) in u.phases().iter().zip(expected) {
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn propagator_is_additive_in_tau() {
        let energies = [-1.3, 0.2, 0.9, 2.4];
        let u1 = UnitaryPropagator::new(&energies, 0.7).unwrap();
        let u2 = UnitaryPropagator::new(&energies, 1.9).unwrap();
        let u12 = UnitaryPropagator::new(&energies, 2.6).unwrap();
        let prod = u1.as_matrix().matmul(&u2.as_matrix()).unwrap();
        assert!(prod.max_abs_diff(&u12.as_matrix()) <= 1e-12);
    }

    #[test]
    fn jacobi_diagonal_passthrough() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        let spec = jacobi_eigh(&m, 1e-12).unwrap();
        assert_eq!(spec.eigenvalues(), &[-1.0, 2.0]);
        assert!(spec.reconstruct().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn jacobi_pauli_x() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let spec = jacobi_eigh(&m, 1e-12).unwrap();
        assert!((spec.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((spec.eigenvalues()[1] - 1.0).abs() < 1e-14);
        assert!(spec.reconstruct().max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [2usize, 3, 4, 8, 16] {
            let m = random_hermitian(n, &mut rng);
            let spec = jacobi_eigh(&m, 1e-12).unwrap();
            let err = spec.reconstruct().max_abs_diff(&m);
            assert!(
                err <= 100.0 * 1e-12 * m.max_abs().max(1.0),
                "n = {n}: reconstruction error {err:.3e}"
            );
            assert!(spec.basis().unitarity_deviation() <= 1e-10);
            for w in spec.eigenvalues().windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn jacobi_rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.5, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            jacobi_eigh(&m, 1e-10),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn jacobi_eigenvalues_match_closed_form_2x2() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, -1.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let spec = jacobi_eigh(&m, 1e-12).unwrap();
        assert!((spec.eigenvalues()[0] - 0.0).abs() < 1e-14);
        assert!((spec.eigenvalues()[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8] {
            let u = haar_unitary(n, &mut rng);
            assert!(u.unitarity_deviation() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn hermitian_spec_rejects_unsorted_eigenvalues() {
        let err = HermitianSpec::new(vec![1.0, 0.0], ComplexMatrix::identity(2));
        assert!(err.is_err());
    }
}
