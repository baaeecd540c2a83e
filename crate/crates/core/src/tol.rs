//! Numerical tolerances used across the crate.
//!
//! Each constant states the invariant it guards. Values are chosen for
//! double precision: machine epsilon is ~2.2e-16, and the quantities
//! below accumulate at most a few thousand rounding steps.

/// Max allowed |W'W - I| entry for a matrix claimed to be unitary.
pub const UNITARITY: f64 = 1e-10;

/// Max allowed deviation of |phase| from 1 in a diagonal propagator.
pub const PROPAGATOR_UNITARITY: f64 = 1e-12;

/// Column sums of a stochastic matrix must be 1 within this bound.
pub const STOCHASTIC_COLUMN: f64 = 1e-12;

/// Row and column sums of a doubly stochastic matrix, same bound.
pub const DOUBLY_STOCHASTIC: f64 = 1e-12;

/// Columns of a conditional probability table accumulate more products,
/// so they get a looser bound than raw stochastic matrices.
pub const CONDITIONAL_COLUMN: f64 = 1e-10;

/// Total mass of a heat distribution must be 1 within this bound.
pub const HEAT_TOTAL_MASS: f64 = 1e-10;

/// Two heat atoms closer than this fraction of the spectral span are
/// treated as the same energy difference and merged.
pub const HEAT_MERGE_REL: f64 = 1e-9;

/// G(0) must equal 1 within this bound.
pub const CHARFN_AT_ZERO: f64 = 1e-12;

/// The integral fluctuation relation |G(i beta) - 1| for a thermal
/// initial state, exact-engine evaluation.
pub const FLUCTUATION_THEOREM: f64 = 1e-10;

/// Probability weights (initial state, waiting atoms) must sum to 1
/// within this bound.
pub const WEIGHT_SUM: f64 = 1e-12;

/// Largest magnitude accepted for a real exponent before exp() is
/// considered out of range (f64 overflows just above 709).
pub const EXP_CLAMP: f64 = 700.0;

/// Relative threshold on |H| entries in the measured basis when
/// deciding whether two outcomes are dynamically connected.
pub const BLOCK_EDGE: f64 = 1e-10;

/// Applying the limiting conditional map twice must reproduce it
/// entrywise within this bound.
pub const LIMIT_IDEMPOTENT: f64 = 1e-10;

/// Escape probabilities below this floor are indistinguishable from
/// frozen dynamics and are excluded from scaling fits.
pub const ZENO_ESCAPE_FLOOR: f64 = 1e-14;

/// Root refinement target for |G(i eps) - 1| in the effective
/// temperature solver.
pub const BETA_EFF_ROOT: f64 = 1e-12;

/// Two independent evaluation routes for the asymptotic G must agree
/// within this relative bound.
pub const DUAL_ROUTE: f64 = 1e-12;

/// Brute-force enumeration budget: outcome sequences alone.
pub const ENUMERATION_OUTCOMES: f64 = 1e5;

/// Brute-force enumeration budget: outcome and waiting-atom sequences
/// jointly.
pub const ENUMERATION_JOINT: f64 = 1e8;
