//! Numerical tolerances shared across the crate.

/// A coefficient `c` is zero when `|c| <= COEFF_ZERO_REL * (1 + max |coeff|)`.
pub const COEFF_ZERO_REL: f64 = 1e-10;

/// Absolute distance under which a numerator root cancels a denominator root.
pub const CANCEL_ABS: f64 = 1e-8;

/// Largest radius (relative to `1 + |c|`) tried when grouping computed roots
/// into a multiple root. Candidates are accepted only after the deflation
/// check below, so distinct nearby roots are not merged.
pub const CLUSTER_RADIUS: f64 = 1e-3;

/// Relative remainder allowed when dividing a polynomial by `(x - c)^k` to
/// confirm a root of multiplicity `k` at `c`.
pub const CLUSTER_VERIFY: f64 = 1e-10;

/// Boundary margin: a discrete pole is unstable iff `|p| >= 1 - STABILITY_MARGIN`,
/// a continuous pole iff `Re p >= -STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Rank threshold relative to the largest singular value of the tested matrix.
pub const RANK_REL: f64 = 1e-8;

/// Default tolerance for identities checked at probe points.
pub const PROBE_TOL: f64 = 1e-8;

/// Pole-location tolerance when matching eigenvalue multisets.
pub const EIG_MATCH: f64 = 1e-6;
