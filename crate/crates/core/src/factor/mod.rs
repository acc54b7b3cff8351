//! Doubly coprime factorizations, the Youla parameterization and the
//! closed-loop map table.
//!
//! Convention: with `G = Mt^-1 Nt = N M^-1`,
//!
//! ```text
//! [  Y   X  ] [ M  -Xt ]   [ I 0 ]
//! [ -Nt  Mt ] [ N   Yt ] = [ 0 I ]
//! ```
//!
//! and every stabilizing controller (negative feedback `u = K (r - y)`) is
//! `K_Q = Y_Q^-1 X_Q = Xt_Q Yt_Q^-1` for a stable `Q`.

mod construct;
mod youla;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NrfError, Result};
use crate::linalg::{self, CMatrix};
use crate::probe;
use crate::ratmat::{Domain, RationalMatrix};

pub use construct::{dcf_from_ss, place_gains, place_state_feedback, stabilizing_gains};
pub use youla::{
    closed_loop_maps, controller_tfm, hinf_grid_norm, youla_shift, ClosedLoopMaps, Input, Output, YoulaShift,
};

/// The eight stable factors. `mt`, `nt`, `xt`, `yt` hold the left-coprime
/// (tilde) factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublyCoprime {
    #[serde(rename = "M")]
    pub m: RationalMatrix,
    #[serde(rename = "N")]
    pub n: RationalMatrix,
    #[serde(rename = "Mt")]
    pub mt: RationalMatrix,
    #[serde(rename = "Nt")]
    pub nt: RationalMatrix,
    #[serde(rename = "X")]
    pub x: RationalMatrix,
    #[serde(rename = "Y")]
    pub y: RationalMatrix,
    #[serde(rename = "Xt")]
    pub xt: RationalMatrix,
    #[serde(rename = "Yt")]
    pub yt: RationalMatrix,
}

/// Outcome of [`DoublyCoprime::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct DcfReport {
    pub bezout_residual: f64,
    pub plant_residual: f64,
    pub violations: Vec<String>,
}

impl DcfReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl DoublyCoprime {
    /// Plant input count.
    pub fn inputs(&self) -> usize {
        self.m.rows()
    }

    /// Plant output count.
    pub fn outputs(&self) -> usize {
        self.mt.rows()
    }

    pub fn domain(&self) -> Domain {
        self.m.domain()
    }

    fn named(&self) -> [(&'static str, &RationalMatrix); 8] {
        [
            ("M", &self.m),
            ("N", &self.n),
            ("Mt", &self.mt),
            ("Nt", &self.nt),
            ("X", &self.x),
            ("Y", &self.y),
            ("Xt", &self.xt),
            ("Yt", &self.yt),
        ]
    }

    fn check_shapes(&self) -> Result<()> {
        let (m, p) = (self.inputs(), self.outputs());
        let want = [(m, m), (p, m), (p, p), (p, m), (m, p), (m, m), (m, p), (p, p)];
        for ((name, f), shape) in self.named().iter().zip(want) {
            if f.shape() != shape {
                return Err(NrfError::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    f.rows(),
                    f.cols(),
                    shape.0,
                    shape.1
                )));
            }
            if f.domain() != self.domain() {
                return Err(NrfError::DomainMismatch);
            }
        }
        Ok(())
    }

    /// Max over probe points of the deviation of the Bezout product from
    /// the identity, evaluated numerically.
    pub fn bezout_residual(&self) -> Result<f64> {
        self.check_shapes()?;
        bezout_residual_of(&self.y, &self.x, &self.nt, &self.mt, &self.m, &self.xt, &self.n, &self.yt)
    }

    /// `N M^-1`, symbolically.
    pub fn plant(&self) -> Result<RationalMatrix> {
        self.n.mul(&self.m.invert()?)
    }

    /// Checks stability of all factors, the Bezout identity, agreement of
    /// the left and right plant descriptions (and with `plant` when given)
    /// and unit gain at infinity of `M`, `Mt`, `Y`, `Yt`.
    pub fn validate(&self, plant: Option<&RationalMatrix>) -> Result<DcfReport> {
        self.check_shapes()?;
        let tol = probe::tolerance();
        let mut violations = Vec::new();
        for (name, f) in self.named() {
            if !f.is_proper() {
                violations.push(format!("{name} is not proper"));
            } else if !f.is_stable() {
                violations.push(format!("{name} is not stable"));
            }
        }
        let bezout_residual = self.bezout_residual()?;
        if bezout_residual >= tol {
            violations.push(format!("Bezout identity residual {bezout_residual:.3e}"));
        }
        let plant_residual = probe::max_over(self.domain(), |z| {
            let right = &self.n.eval(z).ok()? * linalg::inverse_c(&self.m.eval(z).ok()?)?;
            let left = linalg::inverse_c(&self.mt.eval(z).ok()?)? * &self.nt.eval(z).ok()?;
            let mut worst = probe::rel_diff(&right, &left);
            if let Some(g) = plant {
                worst = worst.max(probe::rel_diff(&g.eval(z).ok()?, &right));
            }
            Some(worst)
        })?;
        if plant_residual >= tol {
            violations.push(format!("plant mismatch Mt^-1 Nt vs N M^-1 residual {plant_residual:.3e}"));
        }
        for (name, f) in [("M", &self.m), ("Mt", &self.mt), ("Y", &self.y), ("Yt", &self.yt)] {
            if let Ok(g) = f.gain_at_infinity() {
                let e = (&g - DMatrix::identity(g.nrows(), g.ncols())).abs().max();
                if e >= tol {
                    violations.push(format!("{name} gain at infinity differs from identity by {e:.3e}"));
                }
            }
        }
        Ok(DcfReport { bezout_residual, plant_residual, violations })
    }

    /// Rescales so that `M`, `Mt`, `Y`, `Yt` have unit gain at infinity:
    /// with `R = M(inf)^-1`, `P = Mt(inf)`, `M -> MR`, `N -> NR`,
    /// `(Y, X) -> R^-1 (Y, X)`, `(Xt, Yt) -> (Xt, Yt) P`,
    /// `(Nt, Mt) -> P^-1 (Nt, Mt)`.
    pub fn normalized(&self) -> Result<Self> {
        let d = self.domain();
        let m_inf = self.m.gain_at_infinity()?;
        let r = m_inf.clone().try_inverse().ok_or(NrfError::SingularMatrix)?;
        let p = self.mt.gain_at_infinity()?;
        let p_inv = p.clone().try_inverse().ok_or(NrfError::SingularMatrix)?;
        let k = |mat: &DMatrix<f64>| RationalMatrix::from_constant(mat, d);
        Ok(DoublyCoprime {
            m: self.m.mul(&k(&r))?,
            n: self.n.mul(&k(&r))?,
            y: k(&m_inf).mul(&self.y)?,
            x: k(&m_inf).mul(&self.x)?,
            xt: self.xt.mul(&k(&p))?,
            yt: self.yt.mul(&k(&p))?,
            nt: k(&p_inv).mul(&self.nt)?,
            mt: k(&p_inv).mul(&self.mt)?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("factorization serializes")
    }

    /// Parses and validates; the first violated invariant is named in the
    /// error.
    pub fn from_json(s: &str) -> Result<Self> {
        let dcf: DoublyCoprime = serde_json::from_str(s)?;
        let report = dcf.validate(None)?;
        if let Some(v) = report.violations.first() {
            return Err(NrfError::InvariantViolated(v.clone()));
        }
        Ok(dcf)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn bezout_residual_of(
    y: &RationalMatrix,
    x: &RationalMatrix,
    nt: &RationalMatrix,
    mt: &RationalMatrix,
    m: &RationalMatrix,
    xt: &RationalMatrix,
    n: &RationalMatrix,
    yt: &RationalMatrix,
) -> Result<f64> {
    let (mi, pi) = (m.rows(), mt.rows());
    probe::max_over(m.domain(), |z| {
        let left = block2(&y.eval(z).ok()?, &x.eval(z).ok()?, &(-nt.eval(z).ok()?), &mt.eval(z).ok()?);
        let right = block2(&m.eval(z).ok()?, &(-xt.eval(z).ok()?), &n.eval(z).ok()?, &yt.eval(z).ok()?);
        let e = left * right - CMatrix::identity(mi + pi, mi + pi);
        Some(linalg::inf_norm_c(&e))
    })
}

pub(crate) fn block2(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> CMatrix {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut out = CMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid5;

    #[test]
    fn published_factorization_is_valid() {
        let dcf = grid5::reference_dcf();
        let rep = dcf.validate(Some(&grid5::plant_tfm())).unwrap();
        assert!(rep.ok(), "{:?}", rep.violations);
        assert!(rep.bezout_residual < 1e-12);
    }

    #[test]
    fn json_round_trip_validates() {
        let dcf = grid5::reference_dcf();
        let back = DoublyCoprime::from_json(&dcf.to_json()).unwrap();
        assert_eq!(back, dcf);
    }

    #[test]
    fn loader_names_violation() {
        let mut dcf = grid5::reference_dcf();
        dcf.x = dcf.x.scale(2.0);
        let err = DoublyCoprime::from_json(&dcf.to_json()).unwrap_err();
        assert!(err.to_string().contains("Bezout"), "{err}");
    }
}
