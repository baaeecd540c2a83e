//! Three-level ensembles and the effective temperature that survives
//! many measurements.
//!
//! The ensemble family has weights
//! `c_k ~ exp(-beta E_k + (alpha/v) g_k^2)` where `g_k` is the energy
//! gap opposite level `k` (`g_1 = E_2 - E_3` and cyclic) and
//! `v = sqrt(3 (D_1^2 + D_2^2 + D_3^2))` normalizes the gap vector
//! `D_1 = E_2 - E_1`, `D_2 = E_3 - E_2`, `D_3 = E_1 - E_3`. At
//! `alpha = 0` it is the Gibbs state; elsewhere it weights levels by
//! the spectral geometry instead of the energy alone.
//!
//! After many non-commuting measurements the conditional statistics
//! turn uniform, and the characteristic function of the heat collapses
//! to `G(i eps) = Z(eps)/Z(0) * Zt(alpha, beta - eps)/Zt(alpha, beta)`
//! with `Zt` the pseudo-partition function of the family. The
//! effective inverse temperature is the nontrivial root `eps` of
//! `G(i eps) = 1`: the temperature a thermal state would need for the
//! same exponential heat average. `ln G` is convex in `eps` and
//! vanishes at 0, so there is at most one such root.

use crate::error::{Error, Result};
use crate::tol;

/// Scan points per half-axis when bracketing the nontrivial root.
const SCAN_POINTS: usize = 5_000;

/// The search interval is `|eps| <= EPS_MAX_NUMERATOR / (E_3 - E_1)`.
const EPS_MAX_NUMERATOR: f64 = 50.0;

/// Roots closer to zero than this fraction of `E_3 - E_1` are
/// indistinguishable from the trivial root.
const EXCLUSION_REL: f64 = 1e-6;

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn validate_three_level(energies: &[f64]) -> Result<[f64; 3]> {
    if energies.len() != 3 {
        return Err(Error::DimensionMismatch {
            context: "three-level ensemble",
            expected: 3,
            found: energies.len(),
        });
    }
    let e: [f64; 3] = [energies[0], energies[1], energies[2]];
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("energy is not finite".into()));
    }
    if !(e[0] < e[1] && e[1] < e[2]) {
        return Err(Error::InvalidInput(
            "three-level energies must be strictly ascending".into(),
        ));
    }
    Ok(e)
}

fn gap_exponents(centered: &[f64; 3], alpha: f64, v: f64) -> [f64; 3] {
    let g1 = centered[1] - centered[2];
    let g2 = centered[2] - centered[0];
    let g3 = centered[0] - centered[1];
    [
        (alpha / v) * g1 * g1,
        (alpha / v) * g2 * g2,
        (alpha / v) * g3 * g3,
    ]
}

/// Ensemble weights of the `(alpha, beta)` family. `energies` must be
/// three strictly ascending finite values.
pub fn ensemble_weights(energies: &[f64], alpha: f64, beta: f64) -> Result<[f64; 3]> {
    let ens = QutritEnsemble::new(energies, alpha, beta)?;
    Ok(ens.weights)
}

/// Three-level ensemble together with the derived quantities used by
/// the asymptotic characteristic function. All internal arithmetic uses
/// mean-centered energies, so results are invariant under a common
/// energy shift.
#[derive(Debug, Clone)]
pub struct QutritEnsemble {
    energies: [f64; 3],
    centered: [f64; 3],
    alpha: f64,
    beta: f64,
    weights: [f64; 3],
    deltas: [f64; 3],
    v: f64,
}

impl QutritEnsemble {
    pub fn new(energies: &[f64], alpha: f64, beta: f64) -> Result<Self> {
        let e = validate_three_level(energies)?;
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidInput("alpha and beta must be finite".into()));
        }
        let mean = (e[0] + e[1] + e[2]) / 3.0;
        let centered = [e[0] - mean, e[1] - mean, e[2] - mean];
        let d1 = e[1] - e[0];
        let d2 = e[2] - e[1];
        let d3 = -(d1 + d2);
        let v = (3.0 * (d1 * d1 + d2 * d2 + d3 * d3)).sqrt();
        let exps = gap_exponents(&centered, alpha, v);
        let raw: [f64; 3] = [
            -beta * centered[0] + exps[0],
            -beta * centered[1] + exps[1],
            -beta * centered[2] + exps[2],
        ];
        let log_z = logsumexp(&raw);
        let weights = [
            (raw[0] - log_z).exp(),
            (raw[1] - log_z).exp(),
            (raw[2] - log_z).exp(),
        ];
        Ok(Self {
            energies: e,
            centered,
            alpha,
            beta,
            weights,
            deltas: [d1, d2, d3],
            v,
        })
    }

    pub fn energies(&self) -> &[f64; 3] {
        &self.energies
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn weights(&self) -> &[f64; 3] {
        &self.weights
    }

    /// Gap differences `(D_1, D_2, D_3)`; they sum to zero exactly.
    pub fn deltas(&self) -> &[f64; 3] {
        &self.deltas
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Per-link inverse temperatures
    /// `b_k = beta + (alpha/v)(D_{k+2} - D_{k+1})` (indices cyclic):
    /// the weights satisfy `c_{k+1}/c_k = exp(-b_k D_k)`.
    pub fn link_betas(&self) -> [f64; 3] {
        let [d1, d2, d3] = self.deltas;
        let s = self.alpha / self.v;
        [
            self.beta + s * (d3 - d2),
            self.beta + s * (d1 - d3),
            self.beta + s * (d2 - d1),
        ]
    }

    /// Log pseudo-partition function `ln Zt(alpha, beta_arg)` over
    /// centered energies.
    fn log_z_tilde(&self, beta_arg: f64) -> f64 {
        let exps = gap_exponents(&self.centered, self.alpha, self.v);
        let raw = [
            -beta_arg * self.centered[0] + exps[0],
            -beta_arg * self.centered[1] + exps[1],
            -beta_arg * self.centered[2] + exps[2],
        ];
        logsumexp(&raw)
    }

    fn log_z(&self, eps: f64) -> f64 {
        let raw = [
            -eps * self.centered[0],
            -eps * self.centered[1],
            -eps * self.centered[2],
        ];
        logsumexp(&raw)
    }

    /// Large-measurement-count characteristic function at `u = i eps`,
    /// evaluated through the pseudo-partition route and cross-checked
    /// against the direct double sum
    /// `(1/3) sum_m exp(-eps E_m) sum_n c_n exp(eps E_n)`.
    pub fn asymptotic_g(&self, eps: f64) -> Result<f64> {
        if !eps.is_finite() {
            return Err(Error::InvalidInput("eps is not finite".into()));
        }
        let reach = self
            .centered
            .iter()
            .map(|&e| (eps * e).abs())
            .fold(0.0, f64::max);
        if reach > tol::EXP_CLAMP {
            return Err(Error::RangeExceeded {
                exponent: reach,
                limit: tol::EXP_CLAMP,
            });
        }
        let log_g =
            self.log_z(eps) - self.log_z(0.0) + self.log_z_tilde(self.beta - eps) - self.log_z_tilde(self.beta);
        if log_g.abs() > tol::EXP_CLAMP {
            return Err(Error::RangeExceeded {
                exponent: log_g,
                limit: tol::EXP_CLAMP,
            });
        }
        let via_z = log_g.exp();

        let s1: f64 = self.centered.iter().map(|&e| (-eps * e).exp()).sum();
        let s2: f64 = self
            .centered
            .iter()
            .zip(&self.weights)
            .map(|(&e, &c)| c * (eps * e).exp())
            .sum();
        let direct = s1 * s2 / 3.0;

        let difference = (via_z - direct).abs();
        let allowed = tol::DUAL_ROUTE * via_z.abs().max(1.0);
        if difference > allowed {
            return Err(Error::RouteMismatch {
                difference,
                tol: allowed,
            });
        }
        Ok(via_z)
    }
}

/// Result of the effective-temperature search. `candidates` lists every
/// refined nontrivial root found by the scan; when there is more than
/// one, `beta_eff` is the candidate closest to the ensemble's `beta`
/// and `multiple_roots` is set.
#[derive(Debug, Clone)]
pub struct BetaEffSolution {
    pub beta_eff: f64,
    pub candidates: Vec<f64>,
    pub multiple_roots: bool,
}

/// Bisection on a bracketed sign change. Stops early once
/// `|f| <= stop_tol`; with `stop_tol = 0` it runs until the interval
/// collapses in floating point.
fn bisect_root<F>(mut lo: f64, mut hi: f64, mut f_lo: f64, f: &F, stop_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 || f_mid.abs() <= stop_tol {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Nontrivial root of `G(i eps) = 1`: the effective inverse temperature
/// of the post-measurement heat statistics.
///
/// The trivial root at `eps = 0` is excluded by a radius
/// `1e-6 (E_3 - E_1)`. The half-axes of
/// `|eps| <= 50 / (E_3 - E_1)` are scanned on a uniform grid and every
/// sign change is refined by bisection to `|G - 1| <= 1e-12`. Negative
/// `beta` is handled by solving the mirrored ensemble
/// `{beta -> -beta, E_k -> -E_k}` and negating the root.
pub fn solve_beta_eff(ensemble: &QutritEnsemble) -> Result<BetaEffSolution> {
    if ensemble.beta < 0.0 {
        let e = ensemble.energies;
        let mirrored =
            QutritEnsemble::new(&[-e[2], -e[1], -e[0]], ensemble.alpha, -ensemble.beta)?;
        let solution = solve_beta_eff(&mirrored)?;
        return Ok(BetaEffSolution {
            beta_eff: -solution.beta_eff,
            candidates: solution.candidates.iter().map(|r| -r).collect(),
            multiple_roots: solution.multiple_roots,
        });
    }
    if ensemble.alpha == 0.0 {
        // Thermal ensemble: the fluctuation relation makes eps = beta a
        // root without any search.
        return Ok(BetaEffSolution {
            beta_eff: ensemble.beta,
            candidates: vec![ensemble.beta],
            multiple_roots: false,
        });
    }

    let span = ensemble.energies[2] - ensemble.energies[0];
    let eps_max = EPS_MAX_NUMERATOR / span;
    let delta = EXCLUSION_REL * span;
    let h = |eps: f64| ensemble.asymptotic_g(eps).map(|g| g - 1.0);

    let mut candidates: Vec<f64> = Vec::new();
    for (start, end) in [(delta, eps_max), (-delta, -eps_max)] {
        let mut prev_x = start;
        let mut prev_h = h(prev_x)?;
        if prev_h == 0.0 {
            candidates.push(prev_x);
        }
        for k in 1..=SCAN_POINTS {
            let x = start + (end - start) * (k as f64) / (SCAN_POINTS as f64);
            let hx = h(x)?;
            if hx == 0.0 {
                candidates.push(x);
            } else if (hx > 0.0) != (prev_h > 0.0) {
                let (lo, hi) = if prev_x < x { (prev_x, x) } else { (x, prev_x) };
                let f_lo = if prev_x < x { prev_h } else { hx };
                candidates.push(bisect_root(lo, hi, f_lo, &h, tol::BETA_EFF_ROOT)?);
            }
            prev_x = x;
            prev_h = hx;
        }
    }

    if candidates.is_empty() {
        let at_plus = h(delta)?;
        let at_minus = h(-delta)?;
        if at_plus >= 0.0 && at_minus >= 0.0 {
            // ln G is convex and zero at the origin; leaving the origin
            // upward on both sides means the nontrivial root merged
            // into the trivial one.
            return Err(Error::DegenerateRoot { delta });
        }
        return Err(Error::NoRootInBracket {
            lo: -eps_max,
            hi: eps_max,
        });
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
    let beta = ensemble.beta;
    let best = candidates
        .iter()
        .cloned()
        .min_by(|a, b| {
            (a - beta)
                .abs()
                .partial_cmp(&(b - beta).abs())
                .expect("roots are finite")
        })
        .expect("candidates is nonempty");
    Ok(BetaEffSolution {
        beta_eff: best,
        multiple_roots: candidates.len() > 1,
        candidates,
    })
}

/// The `alpha -> +infinity` limit of the effective inverse temperature:
/// the nontrivial root of `exp(x (E_2 - E_1)) + exp(-x (E_3 - E_2)) = 2`.
/// Equally spaced levels give exactly zero. The root always lies
/// strictly between `-ln 2 / (E_3 - E_2)` and `ln 2 / (E_2 - E_1)`.
pub fn asymptotic_beta_bar(energies: &[f64]) -> Result<f64> {
    let e = validate_three_level(energies)?;
    let d1 = e[1] - e[0];
    let d2 = e[2] - e[1];
    let span = e[2] - e[0];
    if (d1 - d2).abs() <= 1e-14 * span {
        return Ok(0.0);
    }
    let phi = |x: f64| (x * d1).exp() + (-x * d2).exp() - 2.0;
    // phi is convex with phi(0) = 0 and slope d1 - d2 there, so the
    // nontrivial root sits on the side where the slope points down, and
    // phi < 0 strictly between 0 and the root.
    let bound = if d1 > d2 {
        -std::f64::consts::LN_2 / d2
    } else {
        std::f64::consts::LN_2 / d1
    };
    let mut inner = bound;
    let mut found = false;
    for _ in 0..60 {
        inner *= 0.5;
        if phi(inner) < 0.0 {
            found = true;
            break;
        }
    }
    if !found {
        return Ok(0.0);
    }
    let wrap = |x: f64| -> Result<f64> { Ok(phi(x)) };
    let root = if bound < 0.0 {
        bisect_root(bound, inner, phi(bound), &wrap, 0.0)?
    } else {
        bisect_root(inner, bound, phi(inner), &wrap, 0.0)?
    };
    Ok(root)
}

/// The `alpha -> -infinity` slope of the effective inverse temperature:
/// `beta_eff ~ r alpha` with `r = (E_1 + E_3 - 2 E_2) / v`.
pub fn beta_eff_slope(energies: &[f64]) -> Result<f64> {
    let e = validate_three_level(energies)?;
    let d1 = e[1] - e[0];
    let d2 = e[2] - e[1];
    let d3 = -(d1 + d2);
    let v = (3.0 * (d1 * d1 + d2 * d2 + d3 * d3)).sqrt();
    Ok((d2 - d1) / v)
}

/// One point of the effective-temperature sweep. A failed solve leaves
/// a gap (`beta_eff = None`) with the failure recorded in `note`.
#[derive(Debug, Clone)]
pub struct Fig1Point {
    pub beta: f64,
    pub alpha: f64,
    pub beta_eff: Option<f64>,
    pub note: Option<String>,
}

/// Effective inverse temperature over a grid of `(beta, alpha)` pairs.
pub fn sweep_beta_eff(
    energies: &[f64],
    beta_list: &[f64],
    alphas: &[f64],
) -> Result<Vec<Fig1Point>> {
    validate_three_level(energies)?;
    let mut points = Vec::with_capacity(beta_list.len() * alphas.len());
    for &beta in beta_list {
        for &alpha in alphas {
            let solved = QutritEnsemble::new(energies, alpha, beta).and_then(|e| solve_beta_eff(&e));
            let point = match solved {
                Ok(solution) => Fig1Point {
                    beta,
                    alpha,
                    beta_eff: Some(solution.beta_eff),
                    note: solution.multiple_roots.then(|| {
                        format!("multiple roots: {:?}", solution.candidates)
                    }),
                },
                Err(err) => Fig1Point {
                    beta,
                    alpha,
                    beta_eff: None,
                    note: Some(err.to_string()),
                },
            };
            points.push(point);
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENERGIES: [f64; 3] = [-2.0, 0.0, 1.0];

    #[test]
    fn deltas_sum_to_zero_exactly() {
        let ens = QutritEnsemble::new(&[0.1, 0.2, 0.3], 1.7, 0.9).unwrap();
        let [d1, d2, d3] = *ens.deltas();
        assert_eq!(d1 + d2 + d3, 0.0);
        assert!((ens.v() - (3.0 * (d1 * d1 + d2 * d2 + d3 * d3)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn link_betas_are_orthogonal_to_deltas() {
        for (alpha, beta) in [(0.0, 1.0), (3.0, 0.5), (-20.0, 2.0), (7.3, 0.0)] {
            let ens = QutritEnsemble::new(&ENERGIES, alpha, beta).unwrap();
            let b = ens.link_betas();
            let d = ens.deltas();
            let dot: f64 = (0..3).map(|k| b[k] * d[k]).sum();
            assert!(dot.abs() <= 1e-12, "alpha {alpha} beta {beta}: {dot:.3e}");
        }
    }

    #[test]
    fn weights_satisfy_link_ratios() {
        let ens = QutritEnsemble::new(&ENERGIES, -4.0, 1.5).unwrap();
        let c = ens.weights();
        let b = ens.link_betas();
        let d = ens.deltas();
        assert!(((c[1] / c[0]).ln() + b[0] * d[0]).abs() < 1e-12);
        assert!(((c[2] / c[1]).ln() + b[1] * d[1]).abs() < 1e-12);
        assert!(((c[0] / c[2]).ln() + b[2] * d[2]).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_is_gibbs() {
        let beta = 1.1;
        let ens = QutritEnsemble::new(&ENERGIES, 0.0, beta).unwrap();
        let z: f64 = ENERGIES.iter().map(|&e| (-beta * e).exp()).sum();
        for (w, &e) in ens.weights().iter().zip(&ENERGIES) {
            assert!((w - (-beta * e).exp() / z).abs() < 1e-14);
        }
    }

    #[test]
    fn asymptotic_g_is_one_at_zero() {
        for (alpha, beta) in [(0.0, 0.7), (5.0, 1.0), (-12.0, 2.5)] {
            let ens = QutritEnsemble::new(&ENERGIES, alpha, beta).unwrap();
            assert!((ens.asymptotic_g(0.0).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn asymptotic_g_routes_agree_on_grid() {
        // The dual-route cross-check runs inside asymptotic_g; a
        // mismatch would surface as RouteMismatch.
        for alpha in [-30.0, -3.0, 0.0, 2.0, 10.0, 50.0] {
            for beta in [0.0, 1.0, 3.0] {
                let ens = QutritEnsemble::new(&ENERGIES, alpha, beta).unwrap();
                for k in -20..=20 {
                    let eps = 0.6 * k as f64;
                    let g = ens.asymptotic_g(eps).unwrap();
                    assert!(g.is_finite() && g > 0.0);
                }
            }
        }
    }

    #[test]
    fn asymptotic_g_thermal_root_at_beta() {
        let beta = 1.8;
        let ens = QutritEnsemble::new(&ENERGIES, 0.0, beta).unwrap();
        assert!((ens.asymptotic_g(beta).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn asymptotic_g_range_guard() {
        let ens = QutritEnsemble::new(&ENERGIES, 1.0, 1.0).unwrap();
        assert!(matches!(
            ens.asymptotic_g(1e4),
            Err(Error::RangeExceeded { .. })
        ));
    }

    #[test]
    fn solve_returns_beta_for_thermal_ensemble() {
        for beta in [0.0, 0.4, 2.0] {
            let ens = QutritEnsemble::new(&ENERGIES, 0.0, beta).unwrap();
            let sol = solve_beta_eff(&ens).unwrap();
            assert_eq!(sol.beta_eff, beta);
            assert!(!sol.multiple_roots);
        }
    }

    #[test]
    fn solve_finds_verified_roots() {
        for (alpha, beta) in [(2.0, 1.0), (-10.0, 0.0), (-25.0, 3.0), (8.0, 2.0)] {
            let ens = QutritEnsemble::new(&ENERGIES, alpha, beta).unwrap();
            let sol = solve_beta_eff(&ens).unwrap();
            let g = ens.asymptotic_g(sol.beta_eff).unwrap();
            assert!(
                (g - 1.0).abs() <= 1e-11,
                "alpha {alpha} beta {beta}: |G - 1| = {:.3e}",
                (g - 1.0).abs()
            );
            let span = ENERGIES[2] - ENERGIES[0];
            assert!(sol.beta_eff.abs() > 1e-6 * span);
        }
    }

    #[test]
    fn solve_handles_negative_beta_by_mirroring() {
        let alpha = 4.0;
        let ens = QutritEnsemble::new(&ENERGIES, alpha, -1.2).unwrap();
        let sol = solve_beta_eff(&ens).unwrap();
        let mirrored = QutritEnsemble::new(&[-1.0, 0.0, 2.0], alpha, 1.2).unwrap();
        let mirrored_sol = solve_beta_eff(&mirrored).unwrap();
        assert!((sol.beta_eff + mirrored_sol.beta_eff).abs() < 1e-10);
    }

    #[test]
    fn symmetric_spectrum_large_alpha_root_degenerates() {
        // E_1 = -E_3 pins the asymptotic effective temperature to zero;
        // at large alpha the root is inside the exclusion radius.
        let ens = QutritEnsemble::new(&[-1.0, 0.0, 1.0], 40.0, 1.0).unwrap();
        match solve_beta_eff(&ens) {
            Err(Error::DegenerateRoot { .. }) => {}
            Ok(sol) => assert!(sol.beta_eff.abs() < 2e-6 * 2.0),
            Err(other) => panic!("unexpected error: {other}"),
        }
        assert_eq!(asymptotic_beta_bar(&[-1.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn beta_bar_matches_golden_ratio_closed_form() {
        // For energies (-2, 0, 1) the defining equation
        // exp(2x) + exp(-x) = 2 reduces with y = exp(x) to
        // (y - 1)(y^2 + y - 1) = 0, so y is the inverse golden ratio.
        let expected = -(0.5 * (1.0 + 5.0f64.sqrt())).ln();
        let got = asymptotic_beta_bar(&ENERGIES).unwrap();
        assert!((got - expected).abs() < 1e-12, "got {got}, want {expected}");
        let check = (2.0 * got).exp() + (-got).exp();
        assert!((check - 2.0).abs() < 1e-12);
    }

    #[test]
    fn beta_bar_lies_strictly_inside_bounds() {
        for energies in [
            [-2.0, 0.0, 1.0],
            [-1.0, 0.5, 3.0],
            [0.0, 2.0, 2.5],
            [-1.0, 0.0, 50.0],
        ] {
            let d1 = energies[1] - energies[0];
            let d2 = energies[2] - energies[1];
            let root = asymptotic_beta_bar(&energies).unwrap();
            assert!(root > -std::f64::consts::LN_2 / d2);
            assert!(root < std::f64::consts::LN_2 / d1);
        }
    }

    #[test]
    fn beta_bar_approaches_upper_bound_for_wide_top_gap() {
        let root = asymptotic_beta_bar(&[-1.0, 0.0, 50.0]).unwrap();
        let upper = std::f64::consts::LN_2;
        assert!(root < upper);
        assert!((upper - root) / upper < 0.05, "root {root} vs bound {upper}");
    }

    #[test]
    fn slope_closed_form() {
        let r = beta_eff_slope(&ENERGIES).unwrap();
        assert!((r - (-1.0 / 42.0f64.sqrt())).abs() < 1e-15);
        assert_eq!(beta_eff_slope(&[-1.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn beta_eff_shift_invariance() {
        let shift = 7.0;
        let shifted: Vec<f64> = ENERGIES.iter().map(|e| e + shift).collect();
        for (alpha, beta) in [(3.0, 1.0), (-15.0, 2.0)] {
            let a = solve_beta_eff(&QutritEnsemble::new(&ENERGIES, alpha, beta).unwrap()).unwrap();
            let b = solve_beta_eff(&QutritEnsemble::new(&shifted, alpha, beta).unwrap()).unwrap();
            assert!(
                (a.beta_eff - b.beta_eff).abs() < 1e-10,
                "alpha {alpha}: {} vs {}",
                a.beta_eff,
                b.beta_eff
            );
        }
    }

    #[test]
    fn large_alpha_plateau_reaches_beta_bar() {
        let target = asymptotic_beta_bar(&ENERGIES).unwrap();
        for beta in [0.0, 1.0, 2.0, 3.0] {
            let ens = QutritEnsemble::new(&ENERGIES, 50.0, beta).unwrap();
            let sol = solve_beta_eff(&ens).unwrap();
            assert!(
                (sol.beta_eff - target).abs() < 1e-3,
                "beta {beta}: {} vs {target}",
                sol.beta_eff
            );
        }
    }

    #[test]
    fn negative_alpha_slope_matches_closed_form() {
        let r = beta_eff_slope(&ENERGIES).unwrap();
        let beta = 1.0;
        let at = |alpha: f64| {
            solve_beta_eff(&QutritEnsemble::new(&ENERGIES, alpha, beta).unwrap())
                .unwrap()
                .beta_eff
        };
        let fd = (at(-40.0) - at(-30.0)) / -10.0;
        assert!(
            ((fd - r) / r).abs() < 0.02,
            "finite-difference slope {fd} vs closed form {r}"
        );
    }

    #[test]
    fn sweep_records_gaps_instead_of_aborting() {
        let points = sweep_beta_eff(&[-1.0, 0.0, 1.0], &[1.0], &[0.0, 40.0]).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].beta_eff, Some(1.0));
        // The symmetric spectrum at large alpha may degenerate; the
        // sweep must keep going either way.
        if points[1].beta_eff.is_none() {
            assert!(points[1].note.is_some());
        }
    }

    #[test]
    fn ensemble_weights_rejects_bad_input() {
        assert!(ensemble_weights(&[0.0, 1.0], 1.0, 1.0).is_err());
        assert!(ensemble_weights(&[0.0, 0.0, 1.0], 1.0, 1.0).is_err());
        assert!(ensemble_weights(&[0.0, 1.0, 2.0], f64::NAN, 1.0).is_err());
    }
}
