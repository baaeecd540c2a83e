//! Closed forms for the two-level system.
//!
//! With energies `(-E, +E)` and observable eigenvectors built from
//! amplitudes `(a, b)`, one wait flips the observable outcome with
//! probability `nu(tau) = 4 |a|^2 |b|^2 sin^2(tau E)`. Averaging over
//! the waiting law gives a single mixing weight
//! `zeta = sum_k p_k nu(tau_k)`, and the `M - 1` inner steps collapse
//! to one scalar `lambda = (1 - 2 zeta)^(M - 1)`. The characteristic
//! function of the heat reduces to
//!
//! `G(u) = (1 + mu)/2 + (1 - mu)/2 (c_- e^{2iuE} + c_+ e^{-2iuE})`
//!
//! with `mu = lambda (|b|^2 - |a|^2)^2` and `c_-`, `c_+` the initial
//! weights of the lower and upper level. Derivatives in `u` are
//! evaluated independently through a boundary-vector Leibniz sum, which
//! reduces to `G` itself at order zero.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::{InitialState, Observable, ProtocolSpec, WaitingTimeDistribution};
use crate::qcore::C64;
use crate::tol;

/// Highest derivative order served by [`TwoLevelSystem::char_fn_derivative`].
pub const MAX_DERIVATIVE_ORDER: usize = 30;

/// Two-level protocol in closed form: energies `(-E, +E)`, observable
/// amplitudes `(a, b)`, a diagonal initial ensemble, and `M`
/// measurements under a finite waiting law.
#[derive(Debug, Clone)]
pub struct TwoLevelSystem {
    e: f64,
    a: C64,
    b: C64,
    initial: InitialState,
    waits: WaitingTimeDistribution,
    m: usize,
    zeta: f64,
}

impl TwoLevelSystem {
    pub fn new(
        e: f64,
        a: C64,
        b: C64,
        initial: InitialState,
        waits: WaitingTimeDistribution,
        m: usize,
    ) -> Result<Self> {
        if !e.is_finite() || e <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "level half-gap {e} must be positive"
            )));
        }
        // Delegates amplitude validation (normalization, real relative
        // phase) to the observable constructor.
        Observable::qubit(a, b)?;
        if initial.dim() != 2 {
            return Err(Error::DimensionMismatch {
                context: "TwoLevelSystem initial state",
                expected: 2,
                found: initial.dim(),
            });
        }
        if m < 1 {
            return Err(Error::InvalidInput(
                "at least one observable measurement is required".into(),
            ));
        }
        let weight = 4.0 * a.norm_sqr() * b.norm_sqr();
        let zeta = waits
            .atoms()
            .iter()
            .map(|atom| atom.prob * weight * (atom.tau * e).sin().powi(2))
            .sum();
        Ok(Self {
            e,
            a,
            b,
            initial,
            waits,
            m,
            zeta,
        })
    }

    pub fn half_gap(&self) -> f64 {
        self.e
    }

    pub fn measurements(&self) -> usize {
        self.m
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    /// Probability that a single wait of length `tau` flips the
    /// observable outcome.
    pub fn flip_probability(&self, tau: f64) -> f64 {
        4.0 * self.a.norm_sqr() * self.b.norm_sqr() * (tau * self.e).sin().powi(2)
    }

    /// Wait-averaged flip probability `zeta`.
    pub fn mixing_weight(&self) -> f64 {
        self.zeta
    }

    /// Contraction factor `lambda = (1 - 2 zeta)^(M - 1)` of the inner
    /// steps.
    pub fn lambda(&self) -> f64 {
        (1.0 - 2.0 * self.zeta).powi((self.m - 1) as i32)
    }

    fn mu(&self) -> f64 {
        let d = self.b.norm_sqr() - self.a.norm_sqr();
        self.lambda() * d * d
    }

    fn check_reach(&self, u: C64) -> Result<()> {
        if !u.re.is_finite() || !u.im.is_finite() {
            return Err(Error::InvalidInput("u is not finite".into()));
        }
        let reach = u.im.abs() * 2.0 * self.e;
        if reach > tol::EXP_CLAMP {
            return Err(Error::RangeExceeded {
                exponent: reach,
                limit: tol::EXP_CLAMP,
            });
        }
        Ok(())
    }

    /// Characteristic function of the heat in closed form.
    pub fn char_fn(&self, u: C64) -> Result<C64> {
        self.check_reach(u)?;
        let mu = self.mu();
        let x2 = (Complex64::i() * u * (2.0 * self.e)).exp();
        let c = self.initial.weights();
        let osc = c[0] * x2 + c[1] / x2;
        Ok(0.5 * (1.0 + mu) + 0.5 * (1.0 - mu) * osc)
    }

    /// `u`-derivative of the characteristic function of the given
    /// order, via the Leibniz sum over the two boundary vectors with
    /// the inner steps held fixed. Order zero reproduces [`Self::char_fn`].
    pub fn char_fn_derivative(&self, order: usize, u: C64) -> Result<C64> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::OrderTooHigh {
                order,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        self.check_reach(u)?;
        let alpha_sq = self.a.norm_sqr();
        let beta_sq = self.b.norm_sqr();
        let c = self.initial.weights();
        let e_plus = (Complex64::i() * u * self.e).exp();
        let e_minus = 1.0 / e_plus;
        let ie = Complex64::i() * self.e;

        // ell-th derivative of the final boundary vector
        // a_k(u) = sum_m exp(i u E_m) |<E_m|alpha_k>|^2.
        let final_vec = |ell: usize| -> [C64; 2] {
            let up = ie.powu(ell as u32) * e_plus;
            let down = (-ie).powu(ell as u32) * e_minus;
            [beta_sq * down + alpha_sq * up, alpha_sq * down + beta_sq * up]
        };
        // ell-th derivative of the initial boundary vector
        // b_k(u) = sum_n c_n exp(-i u E_n) |<alpha_k|E_n>|^2.
        let initial_vec = |ell: usize| -> [C64; 2] {
            let up = ie.powu(ell as u32) * e_plus * c[0];
            let down = (-ie).powu(ell as u32) * e_minus * c[1];
            [beta_sq * up + alpha_sq * down, alpha_sq * up + beta_sq * down]
        };

        let lambda = self.lambda();
        let j = [
            [0.5 * (1.0 + lambda), 0.5 * (1.0 - lambda)],
            [0.5 * (1.0 - lambda), 0.5 * (1.0 + lambda)],
        ];

        let mut acc = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        for ell in 0..=order {
            let f = final_vec(ell);
            let g = initial_vec(order - ell);
            let mut term = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                for kp in 0..2 {
                    term += f[k] * j[k][kp] * g[kp];
                }
            }
            acc += binom * term;
            binom *= (order - ell) as f64 / (ell + 1) as f64;
        }
        Ok(acc)
    }

    /// Raw heat moment `<Q^order> = (d/du)^order G(0) / i^order`.
    pub fn moment(&self, order: usize) -> Result<f64> {
        let d = self.char_fn_derivative(order, C64::new(0.0, 0.0))?;
        let m = d / Complex64::i().powu(order as u32);
        if m.im.abs() > 1e-10 * (1.0 + m.re.abs()) {
            return Err(Error::InvalidInput(format!(
                "moment of order {order} has spurious imaginary part {:.3e}",
                m.im
            )));
        }
        Ok(m.re)
    }

    /// Limit of the characteristic function as the number of
    /// measurements grows: the inner chain forgets its initial outcome
    /// and `G` becomes
    /// `(1 + c_- e^{2iuE} + c_+ e^{-2iuE}) / 2`. Requires genuine
    /// mixing, `0 < zeta < 1`: at `zeta = 0` the observable never
    /// flips, at `zeta = 1` it flips deterministically and the chain
    /// oscillates forever.
    pub fn limiting_char_fn(&self, u: C64) -> Result<C64> {
        if self.zeta <= 0.0 || self.zeta >= 1.0 {
            return Err(Error::DegenerateObservable);
        }
        self.check_reach(u)?;
        let x2 = (Complex64::i() * u * (2.0 * self.e)).exp();
        let c = self.initial.weights();
        Ok(0.5 * (1.0 + c[0] * x2 + c[1] / x2))
    }

    /// Equivalent protocol for the general-dimension engine, used to
    /// cross-check the closed forms.
    pub fn protocol_spec(&self) -> Result<ProtocolSpec> {
        ProtocolSpec::new(
            vec![-self.e, self.e],
            Observable::qubit(self.a, self.b)?,
            self.initial.clone(),
            self.waits.clone(),
            self.m,
        )
    }
}
