//! Network realization function pairs `(Phi, Gamma)`, the sparsity
//! correspondence between `(Phi, Gamma)` and `(Y_Q, X_Q)`, and the two
//! alternative representations whose instability is certified by a witness
//! map.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{NrfError, Result};
use crate::factor::{self, DoublyCoprime, YoulaShift};
use crate::ratmat::{RationalFunction, RationalMatrix, SparsityPattern};
use crate::linalg::{self, CMatrix};
use crate::laurent;

/// `u = Phi u + Gamma z` with a structurally zero diagonal in `Phi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NrfPair {
    phi: RationalMatrix,
    gamma: RationalMatrix,
}

impl NrfPair {
    /// Checks shapes, the zero diagonal and well-posedness of `I - Phi`.
    pub fn new(phi: RationalMatrix, gamma: RationalMatrix) -> Result<Self> {
        if !phi.is_square() {
            return Err(NrfError::NotSquare { rows: phi.rows(), cols: phi.cols() });
        }
        if gamma.rows() != phi.rows() {
            return Err(NrfError::DimensionMismatch(format!(
                "Phi is {}x{}, Gamma has {} rows",
                phi.rows(),
                phi.cols(),
                gamma.rows()
            )));
        }
        if phi.domain() != gamma.domain() {
            return Err(NrfError::DomainMismatch);
        }
        if let Some(i) = (0..phi.rows()).find(|&i| !phi.get(i, i).is_zero()) {
            return Err(NrfError::InvariantViolated(format!("Phi({0},{0}) is not zero", i + 1)));
        }
        let m = phi.rows();
        if !RationalMatrix::identity(m, phi.domain()).sub(&phi)?.has_full_normal_rank() {
            return Err(NrfError::InvariantViolated("I - Phi is singular".into()));
        }
        Ok(NrfPair { phi, gamma })
    }

    pub fn phi(&self) -> &RationalMatrix {
        &self.phi
    }

    pub fn gamma(&self) -> &RationalMatrix {
        &self.gamma
    }

    /// Number of commands `m`.
    pub fn commands(&self) -> usize {
        self.phi.rows()
    }

    /// Number of measurements `p`.
    pub fn measurements(&self) -> usize {
        self.gamma.cols()
    }

    /// `[Phi Gamma]`
    pub fn stacked(&self) -> RationalMatrix {
        RationalMatrix::hstack(&[&self.phi, &self.gamma]).expect("row counts agree")
    }

    /// `K = (I - Phi)^-1 Gamma`
    pub fn controller(&self) -> Result<RationalMatrix> {
        let m = self.commands();
        RationalMatrix::identity(m, self.phi.domain()).sub(&self.phi)?.invert()?.mul(&self.gamma)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pair serializes")
    }

    /// Parses and enforces the zero-diagonal invariant.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawPair = serde_json::from_str(s)?;
        NrfPair::new(raw.phi, raw.gamma)
    }
}

#[derive(Deserialize)]
struct RawPair {
    phi: RationalMatrix,
    gamma: RationalMatrix,
}

impl<'de> Deserialize<'de> for NrfPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPair::deserialize(d)?;
        NrfPair::new(raw.phi, raw.gamma).map_err(serde::de::Error::custom)
    }
}

/// Sensing pattern `X` (for `Gamma` and `X_Q`), communication pattern `Y`
/// (for `Phi`, zero diagonal) and `Yplus` (for `Y_Q`, full diagonal).
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityTriple {
    pub x: SparsityPattern,
    pub y: SparsityPattern,
    pub yplus: SparsityPattern,
}

impl SparsityTriple {
    /// The diagonal of `y` is overridden.
    pub fn new(x: SparsityPattern, y: SparsityPattern) -> Self {
        let y = y.with_diagonal(false);
        let yplus = y.with_diagonal(true);
        SparsityTriple { x, y, yplus }
    }

    /// `{"X": [[0/1 or bool]], "Y": [[...]]}`; the diagonal of `Y` is ignored.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawPatterns = serde_json::from_str(s)?;
        let x = mask(&raw.x, "X")?;
        let y = mask(&raw.y, "Y")?;
        if y.rows() != y.cols() || x.rows() != y.rows() {
            return Err(NrfError::InconsistentDimensions(format!(
                "Y is {}x{}, X is {}x{}",
                y.rows(),
                y.cols(),
                x.rows(),
                x.cols()
            )));
        }
        Ok(SparsityTriple::new(x, y))
    }

    pub fn to_json(&self) -> String {
        let bits = |p: &SparsityPattern| -> Vec<Vec<u8>> {
            p.to_rows().iter().map(|r| r.iter().map(|&b| u8::from(b)).collect()).collect()
        };
        serde_json::json!({ "X": bits(&self.x), "Y": bits(&self.y) }).to_string()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Cell {
    Flag(bool),
    Bit(u8),
}

#[derive(Deserialize)]
struct RawPatterns {
    #[serde(rename = "X")]
    x: Vec<Vec<Cell>>,
    #[serde(rename = "Y")]
    y: Vec<Vec<Cell>>,
}

fn mask(rows: &[Vec<Cell>], what: &str) -> Result<SparsityPattern> {
    let rows: Vec<Vec<bool>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| match c {
                    Cell::Flag(b) => Ok(*b),
                    Cell::Bit(0) => Ok(false),
                    Cell::Bit(1) => Ok(true),
                    Cell::Bit(v) => Err(NrfError::InvalidData(format!("{what} entry {v} is not 0 or 1"))),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    SparsityPattern::from_rows(&rows).ok_or_else(|| NrfError::InvalidData(format!("{what} rows have unequal lengths")))
}

/// `Phi = I - (R^d)^-1 R`, `Gamma = (R^d)^-1 P`, computed entrywise as
/// `Phi_ij = -R_ij / R_ii` off the diagonal (diagonal literally zero) and
/// `Gamma_ij = P_ij / R_ii`.
pub fn nrf_from_left_factorization(r: &RationalMatrix, p: &RationalMatrix) -> Result<NrfPair> {
    if !r.is_square() {
        return Err(NrfError::NotSquare { rows: r.rows(), cols: r.cols() });
    }
    if p.rows() != r.rows() {
        return Err(NrfError::DimensionMismatch(format!("R has {} rows, P has {}", r.rows(), p.rows())));
    }
    let m = r.rows();
    let mut inv_diag = Vec::with_capacity(m);
    for i in 0..m {
        let rii = r.get(i, i);
        // a strictly proper diagonal entry would make (R^d)^-1 improper
        if rii.is_zero() || rii.is_strictly_proper() {
            return Err(NrfError::SingularDiagonal(i + 1));
        }
        inv_diag.push(rii.recip()?);
    }
    let phi = RationalMatrix::from_fn(m, m, r.domain(), |i, j| {
        if i == j {
            RationalFunction::zero()
        } else {
            -&(r.get(i, j) * &inv_diag[i])
        }
    });
    let gamma = RationalMatrix::from_fn(m, p.cols(), p.domain(), |i, j| p.get(i, j) * &inv_diag[i]);
    NrfPair::new(phi, gamma)
}

/// The NRF of `K_Q = Y_Q^-1 X_Q`. Fails if any closed-loop block (including
/// those driven by the command disturbance) is unstable.
pub fn nrf_from_dcf(dcf: &DoublyCoprime, shift: &YoulaShift) -> Result<NrfPair> {
    let pair = nrf_from_left_factorization(&shift.yq, &shift.xq)?;
    let maps = factor::closed_loop_maps(dcf, shift)?;
    let bad = maps.unstable_blocks();
    if !bad.is_empty() {
        return Err(NrfError::InvariantViolated(format!("unstable closed-loop blocks: {}", bad.join(", "))));
    }
    Ok(pair)
}

/// Both sides of the sparsity equivalence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Correspondence {
    pub nrf_side: bool,
    pub youla_side: bool,
}

/// `Phi in Y and Gamma in X` versus `Y_Q in Yplus and X_Q in X`; the two
/// must agree.
pub fn sparsity_correspondence(pair: &NrfPair, shift: &YoulaShift, triple: &SparsityTriple) -> Result<bool> {
    let c = sparsity_sides(pair, shift, triple)?;
    if c.nrf_side != c.youla_side {
        return Err(NrfError::CorrespondenceViolation(format!(
            "NRF side {} but Youla side {}",
            c.nrf_side, c.youla_side
        )));
    }
    Ok(c.nrf_side)
}

pub fn sparsity_sides(pair: &NrfPair, shift: &YoulaShift, triple: &SparsityTriple) -> Result<Correspondence> {
    Ok(Correspondence {
        nrf_side: pair.phi.conforms(&triple.y)? && pair.gamma.conforms(&triple.x)?,
        youla_side: shift.yq.conforms(&triple.yplus)? && shift.xq.conforms(&triple.x)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertMode {
    Mr2,
    Mr3,
}

impl std::str::FromStr for CertMode {
    type Err = NrfError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr2" => Ok(CertMode::Mr2),
            "mr3" => Ok(CertMode::Mr3),
            other => Err(NrfError::InvalidData(format!("unknown certificate mode {other:?}"))),
        }
    }
}

/// Witness map whose unstable poles show that an alternative
/// representation of `K_Q` does not stabilize the loop.
#[derive(Clone, Debug, PartialEq)]
pub struct InstabilityCertificate {
    pub mode: CertMode,
    pub omega: RationalMatrix,
    pub witness: RationalMatrix,
    pub unstable_poles: Vec<Complex<f64>>,
}

impl InstabilityCertificate {
    pub fn is_empty(&self) -> bool {
        self.unstable_poles.is_empty()
    }
}

fn invert_diagonal(omega: &RationalMatrix) -> Result<RationalMatrix> {
    let n = omega.rows();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let w = omega.get(i, i);
        if w.is_zero() || w.is_strictly_proper() {
            return Err(NrfError::SingularDiagonal(i + 1));
        }
        d.push(w.recip()?);
    }
    Ok(RationalMatrix::diagonal(&d, omega.domain()))
}

// Witness poles are audited from values of the factors, not from the
// symbolic witness, whose long denominators scatter repeated roots.
fn witness_poles(
    dcf: &DoublyCoprime,
    shift: &YoulaShift,
    g: &RationalMatrix,
    witness: &RationalMatrix,
    mode: CertMode,
) -> Result<Vec<Complex<f64>>> {
    let mut cands = witness.pole_candidates();
    cands.extend(g.pole_candidates());
    let mut singular = cands.clone();
    for f in [&dcf.n, &dcf.m, &shift.yq] {
        singular.extend(f.pole_candidates());
    }
    laurent::unstable_poles_by_evaluation(dcf.domain(), &cands, &singular, |z| {
        let n = dcf.n.eval(z).ok()?;
        let gz = &n * linalg::inverse_c(&dcf.m.eval(z).ok()?)?;
        let yq = shift.yq.eval(z).ok()?;
        let other = match mode {
            CertMode::Mr2 => {
                let myq = dcf.m.eval(z).ok()? * &yq;
                gz * CMatrix::from_diagonal(&myq.diagonal())
            }
            CertMode::Mr3 => gz,
        };
        let nyq = n * yq;
        let scale = linalg::max_abs_c(&nyq).max(linalg::max_abs_c(&other));
        Some(match mode {
            CertMode::Mr2 => (nyq - other, scale),
            CertMode::Mr3 => (other - nyq, scale),
        })
    })
}

/// `Omega = (M Y_Q)^d`, witness `N Y_Q - G Omega`: the map from the command
/// disturbance to `z` under `Phi = I - Omega^-1 M Y_Q`.
pub fn mr2_certificate(dcf: &DoublyCoprime, shift: &YoulaShift) -> Result<InstabilityCertificate> {
    let omega = dcf.m.mul(&shift.yq)?.diag_part()?;
    invert_diagonal(&omega)?;
    let g = dcf.plant()?;
    let witness = dcf.n.mul(&shift.yq)?.sub(&g.mul(&omega)?)?;
    let unstable_poles = witness_poles(dcf, shift, &g, &witness, CertMode::Mr2)?;
    Ok(InstabilityCertificate { mode: CertMode::Mr2, omega, witness, unstable_poles })
}

/// `Omega = (Yt_Q Mt)^d`, witness `G - N Y_Q`: the map from `w` to the
/// internal signal `beta`.
pub fn mr3_certificate(dcf: &DoublyCoprime, shift: &YoulaShift) -> Result<InstabilityCertificate> {
    let omega = shift.ytq.mul(&dcf.mt)?.diag_part()?;
    invert_diagonal(&omega)?;
    let g = dcf.plant()?;
    let witness = g.sub(&dcf.n.mul(&shift.yq)?)?;
    let unstable_poles = witness_poles(dcf, shift, &g, &witness, CertMode::Mr3)?;
    Ok(InstabilityCertificate { mode: CertMode::Mr3, omega, witness, unstable_poles })
}

pub fn certificate(dcf: &DoublyCoprime, shift: &YoulaShift, mode: CertMode) -> Result<InstabilityCertificate> {
    match mode {
        CertMode::Mr2 => mr2_certificate(dcf, shift),
        CertMode::Mr3 => mr3_certificate(dcf, shift),
    }
}

/// Coefficients of the beta iteration
/// `beta = beta_phi (beta + d_beta) + beta_gamma z`,
/// `u = u_beta beta + u_z z`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlsLikeRep {
    pub omega: RationalMatrix,
    pub beta_phi: RationalMatrix,
    pub beta_gamma: RationalMatrix,
    pub u_beta: RationalMatrix,
    pub u_z: RationalMatrix,
}

impl SlsLikeRep {
    /// `u_beta (I - beta_phi)^-1 beta_gamma + u_z`
    pub fn eliminate(&self) -> Result<RationalMatrix> {
        let p = self.beta_phi.rows();
        let inner = RationalMatrix::identity(p, self.beta_phi.domain()).sub(&self.beta_phi)?.invert()?;
        self.u_beta.mul(&inner)?.mul(&self.beta_gamma)?.add(&self.u_z)
    }
}

/// With `Omega = (Yt_Q Mt)^d`: `beta_phi = I - Omega^-1 Yt_Q Mt`,
/// `beta_gamma = Omega^-1 (Yt_Q Mt - I)`, `u_beta = -Xt_Q Mt`,
/// `u_z = Xt_Q Mt`.
pub fn sls_like_rep(dcf: &DoublyCoprime, shift: &YoulaShift) -> Result<SlsLikeRep> {
    let ym = shift.ytq.mul(&dcf.mt)?;
    let omega = ym.diag_part()?;
    let omega_inv = invert_diagonal(&omega)?;
    let p = ym.rows();
    let ip = RationalMatrix::identity(p, ym.domain());
    let beta_phi = ip.sub(&omega_inv.mul(&ym)?)?;
    // exact zero diagonal, as for Phi
    let beta_phi = beta_phi.off_diag_part()?;
    let beta_gamma = omega_inv.mul(&ym.sub(&ip)?)?;
    let xm = shift.xtq.mul(&dcf.mt)?;
    Ok(SlsLikeRep { omega, beta_phi, beta_gamma, u_beta: xm.neg(), u_z: xm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{controller_tfm, youla_shift};
    use crate::ratmat::Domain;
    use crate::{grid5, probe};

    const D: Domain = Domain::Discrete;

    fn rf(n: &[f64], d: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(n, d).unwrap()
    }

    fn grid_shift() -> (DoublyCoprime, YoulaShift) {
        let dcf = grid5::reference_dcf();
        let s = youla_shift(&dcf, &grid5::youla_q()).unwrap();
        (dcf, s)
    }

    fn stable_scalar() -> DoublyCoprime {
        let one = RationalMatrix::identity(1, D);
        let g = RationalMatrix::new(1, 1, vec![rf(&[0.2], &[-0.8, 1.0])], D).unwrap();
        let z = RationalMatrix::zeros(1, 1, D);
        DoublyCoprime { m: one.clone(), n: g.clone(), mt: one.clone(), nt: g, x: z.clone(), y: one.clone(), xt: z, yt: one }
    }

    #[test]
    fn identity_left_factor() {
        let p = grid5::youla_q();
        let pair = nrf_from_left_factorization(&RationalMatrix::identity(5, D), &p).unwrap();
        assert!(pair.phi().is_zero());
        assert_eq!(pair.gamma(), &p);
    }

    #[test]
    fn diagonal_left_factor() {
        let f = rf(&[-1.0, 1.0], &[-0.5, 1.0]);
        let r = RationalMatrix::diagonal(&[f.clone(), RationalFunction::constant(2.0)], D);
        let p = RationalMatrix::identity(2, D);
        let pair = nrf_from_left_factorization(&r, &p).unwrap();
        assert!(pair.phi().is_zero());
        assert!(pair.gamma().get(0, 0).max_diff(&f.recip().unwrap()) < 1e-12);
        assert!((pair.gamma().get(1, 1).num().coeff(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_pair_is_exact() {
        let (dcf, s) = grid_shift();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        assert!(pair.phi().max_coeff_diff(&grid5::expected_phi()).unwrap() <= 1e-9);
        assert!(pair.gamma().max_coeff_diff(&grid5::expected_gamma()).unwrap() <= 1e-9);
        for i in 0..5 {
            assert!(pair.phi().get(i, i).num().coeffs().is_empty());
        }
        let k = controller_tfm(&s).unwrap();
        assert!(probe::deviation(&pair.controller().unwrap(), &k).unwrap() < 1e-8);
    }

    #[test]
    fn singular_diagonal_rejected() {
        let r = RationalMatrix::from_fn(2, 2, D, |i, j| if i == 1 && j == 1 { RationalFunction::zero() } else { RationalFunction::one() });
        assert!(matches!(nrf_from_left_factorization(&r, &RationalMatrix::identity(2, D)), Err(NrfError::SingularDiagonal(2))));
        let sp = RationalMatrix::scalar_identity(1, &rf(&[1.0], &[0.0, 1.0]), D);
        assert!(matches!(nrf_from_left_factorization(&sp, &sp), Err(NrfError::SingularDiagonal(1))));
    }

    #[test]
    fn stable_plant_zero_parameter() {
        let dcf = stable_scalar();
        let s = youla_shift(&dcf, &RationalMatrix::zeros(1, 1, D)).unwrap();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        assert!(pair.phi().is_zero() && pair.gamma().is_zero());
        let triple = SparsityTriple::new(SparsityPattern::empty(1, 1), SparsityPattern::empty(1, 1));
        assert!(sparsity_correspondence(&pair, &s, &triple).unwrap());
        let cert = mr3_certificate(&dcf, &s).unwrap();
        assert!(cert.is_empty());
        let rep = sls_like_rep(&dcf, &s).unwrap();
        assert!(rep.beta_phi.is_zero() && rep.beta_gamma.is_zero());
    }

    #[test]
    fn grid_correspondence_and_dense_violation() {
        let (dcf, s) = grid_shift();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        assert!(sparsity_correspondence(&pair, &s, &grid5::patterns()).unwrap());
        let strict = SparsityTriple::new(SparsityPattern::diagonal(5), SparsityPattern::empty(5, 5));
        let sides = sparsity_sides(&pair, &s, &strict).unwrap();
        assert!(!sides.nrf_side && !sides.youla_side);
    }

    #[test]
    fn grid_mr3_finds_five_poles_at_one() {
        let (dcf, s) = grid_shift();
        let cert = mr3_certificate(&dcf, &s).unwrap();
        assert_eq!(cert.unstable_poles.len(), 5);
        assert!(cert.unstable_poles.iter().all(|p| (p - Complex::new(1.0, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn grid_mr2_witness_vanishes_for_published_factors() {
        // M Y_Q is diagonal here, so G Omega = N Y_Q exactly
        let (dcf, s) = grid_shift();
        let my = dcf.m.mul(&s.yq).unwrap();
        assert!(my.off_diag_part().unwrap().is_zero());
        let cert = mr2_certificate(&dcf, &s).unwrap();
        assert!(cert.witness.is_zero());
    }

    #[test]
    fn grid_elimination_recovers_controller() {
        let (dcf, s) = grid_shift();
        let rep = sls_like_rep(&dcf, &s).unwrap();
        let k = controller_tfm(&s).unwrap();
        assert!(probe::deviation(&rep.eliminate().unwrap(), &k).unwrap() < 1e-8);
    }

    #[test]
    fn patterns_json_accepts_bits_and_flags() {
        let t = SparsityTriple::from_json(r#"{"X": [[1, 0], [false, true]], "Y": [[1, 1], [0, 0]]}"#).unwrap();
        assert!(t.x.get(0, 0) && !t.x.get(0, 1) && t.x.get(1, 1));
        assert!(!t.y.get(0, 0) && t.y.get(0, 1) && t.yplus.get(0, 0));
        assert_eq!(SparsityTriple::from_json(&t.to_json()).unwrap(), t);
        assert!(SparsityTriple::from_json(r#"{"X": [[2]], "Y": [[0]]}"#).is_err());
        assert!(SparsityTriple::from_json(r#"{"X": [[1, 0]], "Y": [[0, 1]]}"#).is_err());
    }

    #[test]
    fn json_rejects_nonzero_diagonal() {
        let (dcf, s) = grid_shift();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        assert_eq!(NrfPair::from_json(&pair.to_json()).unwrap(), pair);
        let bad = pair.phi().with_entry(0, 0, RationalFunction::constant(0.1));
        let text = serde_json::json!({"phi": bad, "gamma": pair.gamma()}).to_string();
        assert!(NrfPair::from_json(&text).is_err());
    }
}
