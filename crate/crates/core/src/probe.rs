//! Deterministic probe points for checking TFM identities numerically.
//!
//! Identities between rational matrices are checked by evaluating both sides
//! at 20 fixed points away from the stable region's boundary: a circle of
//! radius 2 in discrete time, the line `Re s = 1` in continuous time.

use std::sync::OnceLock;

use nalgebra::Complex;

use crate::error::{NrfError, Result};
use crate::linalg::{self, CMatrix};
use crate::ratmat::{Domain, RationalMatrix};
use crate::tol::PROBE_TOL;

pub const PROBE_COUNT: usize = 20;

/// The 20 probe points of a domain. Angles and heights are offset so that no
/// point is real (real poles never collide with a probe point).
pub fn points(domain: Domain) -> Vec<Complex<f64>> {
    (0..PROBE_COUNT)
        .map(|k| {
            let t = (k as f64 + 0.37) / PROBE_COUNT as f64;
            match domain {
                Domain::Discrete => Complex::from_polar(2.0, std::f64::consts::TAU * t),
                Domain::Continuous => Complex::new(1.0, 8.0 * (2.0 * t - 1.0) + 0.013),
            }
        })
        .collect()
}

/// Fixed point used for pivoting decisions during symbolic elimination.
pub fn pivot_point(domain: Domain) -> Complex<f64> {
    match domain {
        Domain::Discrete => Complex::from_polar(1.7, 0.913),
        Domain::Continuous => Complex::new(0.7, 1.31),
    }
}

/// Probe tolerance, overridable through `NRFCTL_TOL` (meant for tests).
pub fn tolerance() -> f64 {
    static TOL: OnceLock<f64> = OnceLock::new();
    *TOL.get_or_init(|| {
        std::env::var("NRFCTL_TOL")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|t| t.is_finite() && *t > 0.0)
            .unwrap_or(PROBE_TOL)
    })
}

/// Max over probe points of `f(z)`, skipping points where `f` is undefined
/// (a pole). Errors if no point was usable.
pub fn max_over(domain: Domain, f: impl Fn(Complex<f64>) -> Option<f64>) -> Result<f64> {
    let mut used = 0;
    let mut worst = 0.0_f64;
    for z in points(domain) {
        if let Some(v) = f(z) {
            used += 1;
            worst = worst.max(v);
        }
    }
    if used == 0 {
        return Err(NrfError::EvaluationAtPole("every probe point hit a pole".into()));
    }
    Ok(worst)
}

/// `||A(z) - B(z)||_inf / max(1, ||A(z)||_inf)`, maximized over probe points.
pub fn deviation(a: &RationalMatrix, b: &RationalMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(NrfError::DimensionMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    max_over(a.domain(), |z| {
        let va = a.eval(z).ok()?;
        let vb = b.eval(z).ok()?;
        Some(rel_diff(&va, &vb))
    })
}

pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    linalg::inf_norm_c(&(a - b)) / linalg::inf_norm_c(a).max(1.0)
}

/// Deviation of a square matrix from the identity.
pub fn identity_residual(a: &RationalMatrix) -> Result<f64> {
    let n = a.rows();
    max_over(a.domain(), |z| {
        let v = a.eval(z).ok()?;
        Some(linalg::inf_norm_c(&(v - CMatrix::identity(n, n))))
    })
}
