//! Row-by-row realization of `[Phi Gamma]`, block-diagonal assembly of the
//! sub-controllers and the closed-loop state matrix of plant plus
//! distributed controller.

use std::io::Write;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NrfError, Result};
use crate::factor::{DoublyCoprime, YoulaShift};
use crate::linalg;
use crate::nrfsyn::NrfPair;
use crate::probe;
use crate::ratmat::{Domain, RationalMatrix};
use crate::sstate::{self, StateSpace};

/// Sub-controller for one row (or one block of rows) of `[Phi Gamma]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowRealization {
    /// 0-based rows of `[Phi Gamma]` produced by `sys`, in output order.
    pub rows: Vec<usize>,
    pub sys: StateSpace,
}

impl RowRealization {
    pub fn order(&self) -> usize {
        self.sys.order()
    }
}

fn singleton_groups(m: usize) -> Vec<Vec<usize>> {
    (0..m).map(|i| vec![i]).collect()
}

fn check_grouping(groups: &[Vec<usize>], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for &i in groups.iter().flatten() {
        if i >= m || seen[i] {
            return Err(NrfError::InconsistentDimensions(format!(
                "grouping is not a partition of rows 1..{m} (row {})",
                i + 1
            )));
        }
        seen[i] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(NrfError::InconsistentDimensions(format!("row {} missing from grouping", i + 1)));
    }
    Ok(())
}

/// Observable canonical form over the common denominator of each row, then
/// the controllable part. A group of rows is stacked and reduced to a
/// minimal realization of the block row. `grouping` uses 0-based rows and
/// defaults to singletons.
pub fn realize_rows(pair: &NrfPair, grouping: Option<&[Vec<usize>]>) -> Result<Vec<RowRealization>> {
    let m = pair.commands();
    let groups = match grouping {
        Some(g) => g.to_vec(),
        None => singleton_groups(m),
    };
    check_grouping(&groups, m)?;
    let stacked = pair.stacked();
    realize_groups(&stacked, &groups)
}

fn realize_groups(stacked: &RationalMatrix, groups: &[Vec<usize>]) -> Result<Vec<RowRealization>> {
    groups
        .par_iter()
        .map(|rows| {
            let d = stacked.domain();
            let parts = rows
                .iter()
                .map(|&i| sstate::tf_to_ss_obsv(&stacked.row(i)))
                .collect::<Result<Vec<_>>>()?;
            let sys = sstate::minimal(&StateSpace::stack_outputs(&parts, stacked.cols(), d));
            Ok(RowRealization { rows: rows.clone(), sys })
        })
        .collect()
}

/// Block-diagonal controller with inputs `[a; z]` (`m` commands, then `p`
/// measurements) and outputs `u` in original row order.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledController {
    pub sys: StateSpace,
    /// State count of each group, in group order.
    pub row_orders: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
    pub m: usize,
    pub p: usize,
}

impl AssembledController {
    pub fn order(&self) -> usize {
        self.sys.order()
    }

    /// `(B_K1, B_K2, D_K1, D_K2)`: the command and measurement columns.
    pub fn split(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let s = &self.sys;
        let (n, m, p) = (s.order(), self.m, self.p);
        (
            s.b.view((0, 0), (n, m)).into_owned(),
            s.b.view((0, m), (n, p)).into_owned(),
            s.d.view((0, 0), (m, m)).into_owned(),
            s.d.view((0, m), (m, p)).into_owned(),
        )
    }
}

/// Stacks the sub-controllers block-diagonally. Every row of the
/// controller must be produced by exactly one of `rows`.
pub fn assemble(rows: &[RowRealization]) -> Result<AssembledController> {
    let first = rows.first().ok_or_else(|| NrfError::InconsistentDimensions("no rows to assemble".into()))?;
    let width = first.sys.inputs();
    let domain = first.sys.domain;
    let m: usize = rows.iter().map(|r| r.rows.len()).sum();
    for r in rows {
        if r.sys.inputs() != width {
            return Err(NrfError::InconsistentDimensions(format!(
                "sub-controller for rows {:?} has {} inputs, expected {width}",
                r.rows,
                r.sys.inputs()
            )));
        }
        if r.sys.outputs() != r.rows.len() {
            return Err(NrfError::InconsistentDimensions(format!(
                "sub-controller for rows {:?} has {} outputs",
                r.rows,
                r.sys.outputs()
            )));
        }
        if r.sys.domain != domain {
            return Err(NrfError::DomainMismatch);
        }
    }
    if width < m {
        return Err(NrfError::InconsistentDimensions(format!("{width} inputs cannot hold {m} command signals")));
    }
    let groups: Vec<Vec<usize>> = rows.iter().map(|r| r.rows.clone()).collect();
    check_grouping(&groups, m)?;

    let a_blocks: Vec<&DMatrix<f64>> = rows.iter().map(|r| &r.sys.a).collect();
    let a = linalg::block_diag(&a_blocks);
    let n = a.nrows();
    let b = linalg::vstack(&rows.iter().map(|r| &r.sys.b).collect::<Vec<_>>(), width);
    let mut c = DMatrix::zeros(m, n);
    let mut d = DMatrix::zeros(m, width);
    let mut offset = 0;
    for r in rows {
        let k = r.order();
        for (local, &row) in r.rows.iter().enumerate() {
            c.view_mut((row, offset), (1, k)).copy_from(&r.sys.c.view((local, 0), (1, k)));
            d.row_mut(row).copy_from(&r.sys.d.row(local));
        }
        offset += k;
    }
    Ok(AssembledController {
        sys: StateSpace::new(a, b, c, d, domain)?,
        row_orders: rows.iter().map(|r| r.order()).collect(),
        groups,
        m,
        p: width - m,
    })
}

/// How `Dtilde` was certified invertible.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingCertificate {
    /// Smallest singular value of `I - D_K1 + D_K2 D`.
    pub schur_sigma_min: f64,
    /// Largest entrywise gap between the Schur-route and LU inverses.
    pub lu_agreement: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopRealization {
    pub a_cl: DMatrix<f64>,
    /// `[[I, 0, I], [0, I, -D], [D_K1, D_K2, I]]`
    pub dtilde: DMatrix<f64>,
    pub dtilde_inv: DMatrix<f64>,
    pub certificate: CouplingCertificate,
    pub plant_order: usize,
    pub controller_order: usize,
    pub domain: Domain,
}

impl ClosedLoopRealization {
    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        linalg::eigenvalues(&self.a_cl)
    }

    pub fn spectral_radius(&self) -> f64 {
        linalg::spectral_radius(&self.a_cl)
    }

    pub fn unstable_eigs(&self) -> Vec<Complex<f64>> {
        sstate::unstable_eigs(&self.a_cl, self.domain)
    }

    pub fn is_stable(&self) -> bool {
        self.unstable_eigs().is_empty()
    }

    /// Columns re, im, modulus, stable_flag.
    pub fn write_eigen_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im", "modulus", "stable_flag"])?;
        for e in self.eigenvalues() {
            let stable = self.domain.is_stable_point(e);
            w.write_record([e.re.to_string(), e.im.to_string(), e.norm().to_string(), u8::from(stable).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Inverse of `Dtilde` by eliminating the command block first:
/// `S s3 = b3 - D_K1 b1 - D_K2 b2`, `s1 = b1 - s3`, `s2 = b2 + D s3`.
fn schur_inverse(d: &DMatrix<f64>, dk1: &DMatrix<f64>, dk2: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let (p, m) = d.shape();
    let s = DMatrix::identity(m, m) - dk1 + dk2 * d;
    let sv = linalg::singular_values(&s);
    let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma_min = if m == 0 { 1.0 } else { sigma_min };
    if m > 0 && linalg::rank(&s) < m {
        return Err(NrfError::SingularCoupling(format!("Schur complement has smallest singular value {sigma_min:.3e}")));
    }
    let s_inv = s.try_inverse().ok_or_else(|| NrfError::SingularCoupling("Schur complement".into()))?;
    let k = 2 * m + p;
    let mut inv = DMatrix::zeros(k, k);
    for col in 0..k {
        let mut rhs = nalgebra::DVector::zeros(k);
        rhs[col] = 1.0;
        let b1 = rhs.rows(0, m).into_owned();
        let b2 = rhs.rows(m, p).into_owned();
        let b3 = rhs.rows(m + p, m).into_owned();
        let s3 = &s_inv * (b3 - dk1 * &b1 - dk2 * &b2);
        let s1 = b1 - &s3;
        let s2 = b2 + d * &s3;
        inv.view_mut((0, col), (m, 1)).copy_from(&s1);
        inv.view_mut((m, col), (p, 1)).copy_from(&s2);
        inv.view_mut((m + p, col), (m, 1)).copy_from(&s3);
    }
    Ok((inv, sigma_min))
}

pub(crate) fn dtilde(d: &DMatrix<f64>, dk1: &DMatrix<f64>, dk2: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, m) = d.shape();
    let k = 2 * m + p;
    let mut t = DMatrix::identity(k, k);
    t.view_mut((0, m + p), (m, m)).copy_from(&DMatrix::identity(m, m));
    t.view_mut((m, m + p), (p, m)).copy_from(&(-d));
    t.view_mut((m + p, 0), (m, m)).copy_from(dk1);
    t.view_mut((m + p, m), (m, p)).copy_from(dk2);
    t
}

/// `A_CL = blkdiag(A, A_K) + [[0, 0, B], [-B_K1, -B_K2, 0]] Dtilde^-1 [[0, 0], [C, 0], [0, C_K]]`
pub fn closed_loop_state_matrix(plant: &StateSpace, ctrl: &AssembledController) -> Result<ClosedLoopRealization> {
    let (m, p) = (plant.inputs(), plant.outputs());
    if ctrl.m != m || ctrl.p != p {
        return Err(NrfError::DimensionMismatch(format!(
            "controller expects {} commands and {} measurements, plant has {m} inputs and {p} outputs",
            ctrl.m, ctrl.p
        )));
    }
    if plant.domain != ctrl.sys.domain {
        return Err(NrfError::DomainMismatch);
    }
    let (bk1, bk2, dk1, dk2) = ctrl.split();
    let dt = dtilde(&plant.d, &dk1, &dk2);
    let (inv, schur_sigma_min) = schur_inverse(&plant.d, &dk1, &dk2)?;
    let lu_inv = dt
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| NrfError::SingularCoupling("LU factorization of the coupling matrix failed".into()))?;
    let lu_agreement = if inv.is_empty() { 0.0 } else { (&inv - &lu_inv).abs().max() };
    if !(lu_agreement <= 1e-8 * (1.0 + inv.abs().max())) {
        return Err(NrfError::SingularCoupling(format!("Schur and LU inverses differ by {lu_agreement:.3e}")));
    }

    let (n, nk) = (plant.order(), ctrl.order());
    let k = 2 * m + p;
    let mut left = DMatrix::zeros(n + nk, k);
    left.view_mut((0, m + p), (n, m)).copy_from(&plant.b);
    left.view_mut((n, 0), (nk, m)).copy_from(&(-&bk1));
    left.view_mut((n, m), (nk, p)).copy_from(&(-&bk2));
    let mut right = DMatrix::zeros(k, n + nk);
    right.view_mut((m, 0), (p, n)).copy_from(&plant.c);
    right.view_mut((m + p, n), (m, nk)).copy_from(&ctrl.sys.c);
    let a_cl = linalg::block_diag(&[&plant.a, &ctrl.sys.a]) + left * &inv * right;
    Ok(ClosedLoopRealization {
        a_cl,
        dtilde: dt,
        dtilde_inv: inv,
        certificate: CouplingCertificate { schur_sigma_min, lu_agreement },
        plant_order: n,
        controller_order: nk,
        domain: plant.domain,
    })
}

/// Internal-stability audit of the NRF loop through `Ht`, computed directly
/// and, when the factorization is supplied, in closed form.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub h_direct: RationalMatrix,
    pub h_closed: Option<RationalMatrix>,
    /// 0-based `(row, col)` of entries of the direct map with unstable poles.
    pub unstable_entries: Vec<(usize, usize)>,
    pub disagreement: Option<f64>,
}

impl StabilityReport {
    pub fn all_stable(&self) -> bool {
        self.unstable_entries.is_empty()
    }
}

/// `Ht = [I; -I; G] (I - Phi + Gamma G)^-1 [I, Phi, Gamma]`, and with a
/// factorization `[M; -M; N] [Y_Q^d, Y_Q^d - Y_Q, X_Q]`.
pub fn verify_internal_stability_tfm(
    pair: &NrfPair,
    plant: &RationalMatrix,
    factors: Option<(&DoublyCoprime, &YoulaShift)>,
) -> Result<StabilityReport> {
    let m = pair.commands();
    if plant.shape() != (pair.measurements(), m) {
        return Err(NrfError::DimensionMismatch(format!(
            "plant is {}x{}, NRF expects {}x{m}",
            plant.rows(),
            plant.cols(),
            pair.measurements()
        )));
    }
    let d = plant.domain();
    let im = RationalMatrix::identity(m, d);
    let loop_map = im.sub(pair.phi())?.add(&pair.gamma().mul(plant)?)?;
    let inv = loop_map.invert().map_err(|e| match e {
        NrfError::SingularMatrix => NrfError::IllPosedLoop,
        other => other,
    })?;
    let left = RationalMatrix::vstack(&[&im, &im.neg(), plant])?;
    let right = RationalMatrix::hstack(&[&im, pair.phi(), pair.gamma()])?;
    let h_direct = left.mul(&inv)?.mul(&right)?;
    let mut unstable_entries = Vec::new();
    for i in 0..h_direct.rows() {
        for j in 0..h_direct.cols() {
            if !h_direct.get(i, j).poles().iter().all(|&z| d.is_stable_point(z)) && !entry_is_stable(&h_direct, i, j)? {
                unstable_entries.push((i, j));
            }
        }
    }
    let (h_closed, disagreement) = match factors {
        Some((dcf, shift)) => {
            let yd = shift.yq.diag_part()?;
            let l = RationalMatrix::vstack(&[&dcf.m, &dcf.m.neg(), &dcf.n])?;
            let r = RationalMatrix::hstack(&[&yd, &yd.sub(&shift.yq)?, &shift.xq])?;
            let h = l.mul(&r)?;
            let dev = probe::deviation(&h_direct, &h)?;
            (Some(h), Some(dev))
        }
        None => (None, None),
    };
    Ok(StabilityReport { h_direct, h_closed, unstable_entries, disagreement })
}

// Poles shared with a numerically near-zero numerator can survive exact
// cancellation; a minimal realization decides.
fn entry_is_stable(h: &RationalMatrix, i: usize, j: usize) -> Result<bool> {
    let e = h.submatrix(i, j, 1, 1);
    Ok(e.unstable_poles()?.is_empty())
}

/// `{"index": group ordinal (1-based), "rows": [1-based rows], "ss": ...}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleRow {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<usize>>,
    pub ss: StateSpace,
}

/// Realization bundle; `grouping` holds 1-based row numbers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealizationBundle {
    pub rows: Vec<BundleRow>,
    pub grouping: Vec<Vec<usize>>,
}

impl RealizationBundle {
    pub fn from_rows(rows: &[RowRealization]) -> Self {
        RealizationBundle {
            rows: rows
                .iter()
                .enumerate()
                .map(|(k, r)| BundleRow {
                    index: k + 1,
                    rows: Some(r.rows.iter().map(|i| i + 1).collect()),
                    ss: r.sys.clone(),
                })
                .collect(),
            grouping: rows.iter().map(|r| r.rows.iter().map(|i| i + 1).collect()).collect(),
        }
    }

    pub fn to_rows(&self) -> Result<Vec<RowRealization>> {
        if self.rows.len() != self.grouping.len() {
            return Err(NrfError::InconsistentDimensions("bundle rows and grouping differ in length".into()));
        }
        self.rows
            .iter()
            .zip(&self.grouping)
            .map(|(r, g)| {
                let rows = g
                    .iter()
                    .map(|&i| i.checked_sub(1).ok_or_else(|| NrfError::InvalidData("row numbers start at 1".into())))
                    .collect::<Result<Vec<_>>>()?;
                Ok(RowRealization { rows, sys: r.ss.clone() })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Realizes an arbitrary rational matrix row by row and assembles it; the
/// first `m` inputs are treated as the command block.
pub fn realize_matrix(mat: &RationalMatrix, m: usize) -> Result<AssembledController> {
    let groups = singleton_groups(mat.rows());
    let mut ctrl = assemble(&realize_groups(mat, &groups)?)?;
    ctrl.m = m;
    ctrl.p = mat.cols() - m;
    Ok(ctrl)
}

/// Parses `"1;2,3;4;5"` (1-based) into 0-based groups.
pub fn parse_grouping(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(';')
        .map(|g| {
            g.split(',')
                .map(|t| {
                    let k: usize = t
                        .trim()
                        .parse()
                        .map_err(|_| NrfError::InvalidData(format!("bad row number {t:?} in grouping")))?;
                    k.checked_sub(1).ok_or_else(|| NrfError::InvalidData("row numbers start at 1".into()))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{controller_tfm, dcf_from_ss, place_gains, youla_shift};
    use crate::nrfsyn::nrf_from_dcf;
    use crate::ratmat::RationalFunction;
    use crate::grid5;

    const D: Domain = Domain::Discrete;

    fn grid_pair() -> (DoublyCoprime, YoulaShift, NrfPair) {
        let dcf = grid5::reference_dcf();
        let s = youla_shift(&dcf, &grid5::youla_q()).unwrap();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        (dcf, s, pair)
    }

    #[test]
    fn grid_row_orders() {
        let (_, _, pair) = grid_pair();
        let rows = realize_rows(&pair, None).unwrap();
        let orders: Vec<usize> = rows.iter().map(|r| r.order()).collect();
        assert_eq!(orders, vec![2, 3, 4, 3, 3]);
        let stacked = pair.stacked();
        for r in &rows {
            assert!(sstate::is_stabilizable(&r.sys) && sstate::is_detectable(&r.sys));
            let tf = sstate::ss_to_tf(&r.sys);
            assert!(probe::deviation(&tf, &stacked.row(r.rows[0])).unwrap() < 1e-8);
        }
    }

    #[test]
    fn assembled_matches_stack_and_poles() {
        let (_, _, pair) = grid_pair();
        let ctrl = assemble(&realize_rows(&pair, None).unwrap()).unwrap();
        assert_eq!((ctrl.order(), ctrl.m, ctrl.p), (15, 5, 5));
        assert!(probe::deviation(&sstate::ss_to_tf(&ctrl.sys), &pair.stacked()).unwrap() < 1e-8);
        let from_a = sstate::unstable_eigs(&ctrl.sys.a, D);
        let from_tfm = pair.stacked().unstable_poles().unwrap();
        assert_eq!(from_a.len(), from_tfm.len());
    }

    #[test]
    fn grouped_rows_do_not_grow() {
        let (_, _, pair) = grid_pair();
        let groups = parse_grouping("1;2,3;4;5").unwrap();
        let rows = realize_rows(&pair, Some(&groups)).unwrap();
        let ctrl = assemble(&rows).unwrap();
        assert!(ctrl.order() <= 15);
        assert!(probe::deviation(&sstate::ss_to_tf(&ctrl.sys), &pair.stacked()).unwrap() < 1e-8);
    }

    #[test]
    fn bad_grouping_rejected() {
        let (_, _, pair) = grid_pair();
        let g = vec![vec![0, 1], vec![1, 2, 3, 4]];
        assert!(matches!(realize_rows(&pair, Some(&g)), Err(NrfError::InconsistentDimensions(_))));
        assert!(parse_grouping("0;1").is_err());
    }

    #[test]
    fn zero_rows_have_order_zero() {
        let z = RationalMatrix::zeros(2, 2, D);
        let pair = NrfPair::new(z.clone(), z).unwrap();
        let rows = realize_rows(&pair, None).unwrap();
        assert!(rows.iter().all(|r| r.order() == 0));
    }

    #[test]
    fn grid_closed_loop_is_24_and_stable() {
        let (_, _, pair) = grid_pair();
        let ctrl = assemble(&realize_rows(&pair, None).unwrap()).unwrap();
        let cl = closed_loop_state_matrix(&grid5::plant_ss(), &ctrl).unwrap();
        assert_eq!(cl.a_cl.shape(), (24, 24));
        assert!(cl.spectral_radius() < 1.0 - 1e-6, "{}", cl.spectral_radius());
        assert!(cl.certificate.schur_sigma_min > 0.0);
        assert!(cl.certificate.lu_agreement < 1e-12);
        let mut buf = Vec::new();
        cl.write_eigen_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 25);
    }

    #[test]
    fn scalar_integrator_loop() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let plant = StateSpace::new(a.clone(), a.clone(), a, DMatrix::zeros(1, 1), D).unwrap();
        let (f, l) = place_gains(&plant, &[Complex::new(0.5, 0.0)]).unwrap();
        let dcf = dcf_from_ss(&plant, &f, &l).unwrap();
        let s = youla_shift(&dcf, &RationalMatrix::zeros(1, 1, D)).unwrap();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        let ctrl = assemble(&realize_rows(&pair, None).unwrap()).unwrap();
        let cl = closed_loop_state_matrix(&plant, &ctrl).unwrap();
        assert!(cl.spectral_radius() < 1.0);
        let k = controller_tfm(&s).unwrap();
        assert!(probe::deviation(&pair.controller().unwrap(), &k).unwrap() < 1e-8);
    }

    #[test]
    fn static_loop_has_empty_state() {
        let plant = StateSpace::static_gain(DMatrix::zeros(1, 1), D);
        let pair = NrfPair::new(RationalMatrix::zeros(1, 1, D), RationalMatrix::from_constant(&DMatrix::from_element(1, 1, 0.5), D)).unwrap();
        let ctrl = assemble(&realize_rows(&pair, None).unwrap()).unwrap();
        let cl = closed_loop_state_matrix(&plant, &ctrl).unwrap();
        assert_eq!(cl.a_cl.shape(), (0, 0));
    }

    #[test]
    fn singular_coupling_detected() {
        // D_K1 = I with D = 0 makes the Schur complement vanish
        let plant = StateSpace::static_gain(DMatrix::zeros(1, 1), D);
        let sys = StateSpace::static_gain(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), D);
        let ctrl = assemble(&[RowRealization { rows: vec![0], sys }]).unwrap();
        assert!(matches!(closed_loop_state_matrix(&plant, &ctrl), Err(NrfError::SingularCoupling(_))));
    }

    #[test]
    fn grid_tfm_verdict_agrees() {
        let (dcf, s, pair) = grid_pair();
        let rep = verify_internal_stability_tfm(&pair, &grid5::plant_tfm(), Some((&dcf, &s))).unwrap();
        assert!(rep.all_stable(), "{:?}", rep.unstable_entries);
        assert!(rep.disagreement.unwrap() < 1e-7);
    }

    #[test]
    fn open_loop_flags_plant() {
        let g = RationalMatrix::new(1, 1, vec![RationalFunction::first_order(1.0)], D).unwrap();
        let z = RationalMatrix::zeros(1, 1, D);
        let pair = NrfPair::new(z.clone(), z).unwrap();
        let rep = verify_internal_stability_tfm(&pair, &g, None).unwrap();
        assert_eq!(rep.unstable_entries, vec![(2, 0)]);
    }

    #[test]
    fn bundle_round_trip() {
        let (_, _, pair) = grid_pair();
        let rows = realize_rows(&pair, None).unwrap();
        let b = RealizationBundle::from_rows(&rows);
        let back = RealizationBundle::from_json(&b.to_json()).unwrap().to_rows().unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back[2].rows, vec![2]);
        assert_eq!(back[2].sys.order(), 4);
    }
}
