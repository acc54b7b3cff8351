//! Real polynomials, rational functions and rational transfer function
//! matrices (TFMs), with tolerance-aware cancellation.

mod json;
mod matrix;
mod pattern;
mod poly;
mod ratfn;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::tol::STABILITY_MARGIN;

pub use json::{PolyPair, RationalMatrixJson};
pub use matrix::RationalMatrix;
pub use pattern::SparsityPattern;
pub use poly::{Polynomial, RootCluster};
pub use ratfn::RationalFunction;

/// Where the stable region lives: the open left half plane or the open
/// unit disc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Continuous,
    Discrete,
}

impl Domain {
    /// Points on the stability boundary count as unstable.
    pub fn is_unstable(self, p: Complex<f64>) -> bool {
        match self {
            Domain::Continuous => p.re >= -STABILITY_MARGIN,
            Domain::Discrete => p.norm() >= 1.0 - STABILITY_MARGIN,
        }
    }

    /// Like [`Domain::is_unstable`] with a caller-chosen boundary margin.
    pub fn is_unstable_within(self, p: Complex<f64>, margin: f64) -> bool {
        match self {
            Domain::Continuous => p.re >= -margin,
            Domain::Discrete => p.norm() >= 1.0 - margin,
        }
    }

    pub fn is_stable_point(self, p: Complex<f64>) -> bool {
        !self.is_unstable(p)
    }

    /// Default closed-loop pole used when placing gains.
    pub fn default_target(self) -> f64 {
        match self {
            Domain::Continuous => -1.0,
            Domain::Discrete => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Continuous => "continuous",
            Domain::Discrete => "discrete",
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
