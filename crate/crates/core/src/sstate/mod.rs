//! State-space realizations `(A, B, C, D)` and conversions to and from
//! rational matrices.

mod json;
mod staircase;

use nalgebra::{Complex, DMatrix};

use crate::error::{NrfError, Result};
use crate::linalg::{self, CMatrix};
use crate::ratmat::{Domain, Polynomial, RationalFunction, RationalMatrix};
use crate::tol::STABILITY_MARGIN;

pub use json::StateSpaceJson;
pub use staircase::{
    ctrb_staircase, ctrb_staircase_transform, is_detectable, is_stabilizable, minimal, obsv_staircase,
    obsv_staircase_transform, transmission_zero_rank_test,
};

/// `sigma x = A x + B u`, `y = C x + D u`, with `sigma` the forward shift
/// (discrete) or the derivative (continuous). Order 0 encodes a static gain.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub domain: Domain,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>, domain: Domain) -> Result<Self> {
        let n = a.nrows();
        let ok = a.ncols() == n
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !ok {
            return Err(NrfError::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(StateSpace { a, b, c, d, domain })
    }

    /// Order-0 system with feedthrough `d`.
    pub fn static_gain(d: DMatrix<f64>, domain: Domain) -> Self {
        let (p, m) = d.shape();
        StateSpace {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
            domain,
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `D + C (z I - A)^-1 B`, or `None` at an eigenvalue of `A`.
    pub fn eval(&self, z: Complex<f64>) -> Option<CMatrix> {
        let n = self.order();
        let d = linalg::to_complex(&self.d);
        if n == 0 {
            return Some(d);
        }
        let pencil = CMatrix::identity(n, n) * z - linalg::to_complex(&self.a);
        let lu = pencil.clone().lu();
        let sv = linalg::singular_values_c(&pencil);
        if sv.last().copied().unwrap_or(0.0) <= 1e-13 * sv[0].max(1.0) {
            return None;
        }
        let x = lu.solve(&linalg::to_complex(&self.b))?;
        Some(d + linalg::to_complex(&self.c) * x)
    }

    /// Similarity transform `x = T xi` with orthogonal `T`.
    pub fn transform_orthogonal(&self, t: &DMatrix<f64>) -> Self {
        let tt = t.transpose();
        StateSpace {
            a: &tt * &self.a * t,
            b: &tt * &self.b,
            c: &self.c * t,
            d: self.d.clone(),
            domain: self.domain,
        }
    }

    /// Leading `k` states.
    pub fn truncate(&self, k: usize) -> Self {
        StateSpace {
            a: self.a.view((0, 0), (k, k)).into_owned(),
            b: self.b.rows(0, k).into_owned(),
            c: self.c.columns(0, k).into_owned(),
            d: self.d.clone(),
            domain: self.domain,
        }
    }

    pub fn transpose(&self) -> Self {
        StateSpace {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            d: self.d.transpose(),
            domain: self.domain,
        }
    }

    /// Systems sharing the same `m` inputs, outputs stacked; block-diagonal
    /// `A`.
    pub fn stack_outputs(rows: &[StateSpace], m: usize, domain: Domain) -> Self {
        let a: Vec<&DMatrix<f64>> = rows.iter().map(|r| &r.a).collect();
        let b: Vec<&DMatrix<f64>> = rows.iter().map(|r| &r.b).collect();
        let c: Vec<&DMatrix<f64>> = rows.iter().map(|r| &r.c).collect();
        let d: Vec<&DMatrix<f64>> = rows.iter().map(|r| &r.d).collect();
        StateSpace {
            a: linalg::block_diag(&a),
            b: linalg::vstack(&b, m),
            c: linalg::block_diag(&c),
            d: linalg::vstack(&d, m),
            domain,
        }
    }

    /// Single-input single-output channel `(i, j)`.
    pub fn channel(&self, i: usize, j: usize) -> Self {
        StateSpace {
            a: self.a.clone(),
            b: self.b.columns(j, 1).into_owned(),
            c: self.c.rows(i, 1).into_owned(),
            d: DMatrix::from_element(1, 1, self.d[(i, j)]),
            domain: self.domain,
        }
    }

    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        linalg::eigenvalues(&self.a)
    }
}

/// Characteristic polynomial `det(x I - A)`, built from the eigenvalues.
pub fn charpoly(a: &DMatrix<f64>) -> Polynomial {
    Polynomial::from_roots(&linalg::eigenvalues(a))
}

/// Unstable eigenvalues with multiplicity. Eigenvalues of defective blocks
/// are scattered around the true value, so they are grouped into verified
/// multiple roots of the characteristic polynomial before classification.
pub fn unstable_eigs(a: &DMatrix<f64>, domain: Domain) -> Vec<Complex<f64>> {
    unstable_eigs_within(a, domain, STABILITY_MARGIN)
}

/// [`unstable_eigs`] with a caller-chosen boundary margin.
pub fn unstable_eigs_within(a: &DMatrix<f64>, domain: Domain, margin: f64) -> Vec<Complex<f64>> {
    let ev = linalg::eigenvalues(a);
    let cp = Polynomial::from_roots(&ev);
    let mut out = Vec::new();
    for cl in cp.cluster_roots(&ev) {
        if domain.is_unstable_within(cl.center, margin) {
            out.extend(std::iter::repeat_n(cl.center, cl.multiplicity));
        }
    }
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    out
}

/// Observable canonical realization of a single-row TFM over the monic least
/// common denominator `L = x^n + a_{n-1} x^{n-1} + ... + a_0` of the row.
///
/// Convention: `A` has ones on the subdiagonal and `-a_k` in row `k` of the
/// last column; `C = e_n^T`. Column `j` of `B` holds the coefficients of the
/// strictly proper remainder of `P_j = p_j (L / d_j)` modulo `L`, and
/// `D_j` is the `x^n` coefficient of `P_j`.
pub fn tf_to_ss_obsv(row: &RationalMatrix) -> Result<StateSpace> {
    if row.rows() != 1 {
        return Err(NrfError::DimensionMismatch(format!("expected one row, got {}", row.rows())));
    }
    if !row.is_proper() {
        return Err(NrfError::NotProper);
    }
    let m = row.cols();
    let l = row.row_lcm_den(0);
    let n = l.degree().unwrap_or(0);
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k, k - 1)] = 1.0;
    }
    for k in 0..n {
        a[(k, n - 1)] = -l.coeff(k);
    }
    let mut b = DMatrix::zeros(n, m);
    let mut d = DMatrix::zeros(1, m);
    for j in 0..m {
        let f = row.get(0, j);
        if f.is_zero() {
            continue;
        }
        let pj = f.num() * &l.exact_div(f.den());
        let dj = pj.coeff(n);
        d[(0, j)] = dj;
        for k in 0..n {
            b[(k, j)] = pj.coeff(k) - dj * l.coeff(k);
        }
    }
    let mut c = DMatrix::zeros(1, n);
    if n > 0 {
        c[(0, n - 1)] = 1.0;
    }
    StateSpace::new(a, b, c, d, row.domain())
}

/// Rational matrix of a realization. Each entry is reduced to a minimal
/// SISO realization and then read off as
/// `d + (det(xI - A + bc) - det(xI - A)) / det(xI - A)`.
pub fn ss_to_tf(sys: &StateSpace) -> RationalMatrix {
    let (p, m) = (sys.outputs(), sys.inputs());
    RationalMatrix::from_fn(p, m, sys.domain, |i, j| siso_tf(&sys.channel(i, j)))
}

fn siso_tf(ch: &StateSpace) -> RationalFunction {
    let d = ch.d[(0, 0)];
    let min = minimal(ch);
    if min.order() == 0 {
        return RationalFunction::constant(d);
    }
    let den = charpoly(&min.a);
    let closed = &min.a - &min.b * &min.c;
    let num = &charpoly(&closed) - &den;
    let strictly = RationalFunction::new(num, den.clone()).expect("characteristic polynomial is monic");
    &strictly + &RationalFunction::constant(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe;

    const D: Domain = Domain::Discrete;

    fn rf(n: &[f64], d: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(n, d).unwrap()
    }

    fn row(fs: Vec<RationalFunction>) -> RationalMatrix {
        let n = fs.len();
        RationalMatrix::new(1, n, fs, D).unwrap()
    }

    #[test]
    fn first_order_lag_realization() {
        let s = tf_to_ss_obsv(&row(vec![rf(&[1.0], &[-1.0, 1.0])])).unwrap();
        assert_eq!(s.a, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(s.b, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(s.c, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(s.d, DMatrix::from_element(1, 1, 0.0));
    }

    #[test]
    fn static_row_has_order_zero() {
        let s = tf_to_ss_obsv(&row(vec![RationalFunction::zero(), RationalFunction::zero()])).unwrap();
        assert_eq!(s.order(), 0);
        assert_eq!(s.d, DMatrix::zeros(1, 2));
    }

    #[test]
    fn improper_row_rejected() {
        assert!(matches!(tf_to_ss_obsv(&row(vec![rf(&[0.0, 0.0, 1.0], &[1.0, 1.0])])), Err(NrfError::NotProper)));
    }

    #[test]
    fn round_trip_row() {
        let r = row(vec![
            rf(&[0.3, 1.0], &[0.64, -1.6, 1.0]),
            rf(&[-0.85, 1.05], &[-0.8, -0.2, 1.0]),
            rf(&[2.0], &[1.0]),
            rf(&[0.5, -1.0, 1.0], &[0.06, -0.5, 1.0]),
        ]);
        let s = tf_to_ss_obsv(&r).unwrap();
        let back = ss_to_tf(&s);
        assert!(probe::deviation(&r, &back).unwrap() < 1e-8);
        let direct = probe::max_over(D, |z| {
            let v = s.eval(z)?;
            Some(probe::rel_diff(&r.eval(z).ok()?, &v))
        })
        .unwrap();
        assert!(direct < 1e-10);
    }

    #[test]
    fn ss_to_tf_examples() {
        let s = StateSpace::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            D,
        )
        .unwrap();
        let g = ss_to_tf(&s);
        assert!(g.get(0, 0).max_diff(&rf(&[1.0], &[-1.0, 1.0])) < 1e-12);
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let st = ss_to_tf(&StateSpace::static_gain(k.clone(), D));
        assert_eq!(st, RationalMatrix::from_constant(&k, D));
    }

    #[test]
    fn unstable_eig_examples() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 1.0, 2.0]));
        let u = unstable_eigs(&a, D);
        assert_eq!(u.len(), 2);
        assert!((u[0].re - 1.0).abs() < 1e-12 && (u[1].re - 2.0).abs() < 1e-12);
        assert!(unstable_eigs(&(DMatrix::<f64>::identity(3, 3) * 0.9), D).is_empty());
    }

    #[test]
    fn jordan_block_at_one_counts_twice() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let u = unstable_eigs(&a, D);
        assert_eq!(u.len(), 2);
    }
}
