use std::fmt;

use nalgebra::{Complex, DMatrix};

use super::{Domain, Polynomial, RationalFunction, SparsityPattern};
use crate::error::{NrfError, Result};
use crate::linalg::CMatrix;
use crate::sstate::{self, StateSpace};
use crate::{laurent, linalg, probe};

/// Dense `rows x cols` matrix of rational functions tagged with a
/// stability domain. Values are immutable; every operation returns a fresh
/// matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalFunction>,
    domain: Domain,
}

impl RationalMatrix {
    /// Row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalFunction>, domain: Domain) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(NrfError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(RationalMatrix { rows, cols, entries, domain })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        domain: Domain,
        mut f: impl FnMut(usize, usize) -> RationalFunction,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        RationalMatrix { rows, cols, entries, domain }
    }

    pub fn zeros(rows: usize, cols: usize, domain: Domain) -> Self {
        Self::from_fn(rows, cols, domain, |_, _| RationalFunction::zero())
    }

    pub fn identity(n: usize, domain: Domain) -> Self {
        Self::scalar_identity(n, &RationalFunction::one(), domain)
    }

    /// `f * I_n`
    pub fn scalar_identity(n: usize, f: &RationalFunction, domain: Domain) -> Self {
        Self::from_fn(n, n, domain, |i, j| if i == j { f.clone() } else { RationalFunction::zero() })
    }

    pub fn diagonal(d: &[RationalFunction], domain: Domain) -> Self {
        let n = d.len();
        Self::from_fn(n, n, domain, |i, j| if i == j { d[i].clone() } else { RationalFunction::zero() })
    }

    pub fn from_constant(m: &DMatrix<f64>, domain: Domain) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), domain, |i, j| RationalFunction::constant(m[(i, j)]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFunction {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[RationalFunction] {
        &self.entries
    }

    pub fn with_entry(&self, i: usize, j: usize, f: RationalFunction) -> Self {
        let mut out = self.clone();
        out.entries[i * self.cols + j] = f;
        out
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(RationalFunction::is_zero)
    }

    pub fn is_proper(&self) -> bool {
        self.entries.iter().all(RationalFunction::is_proper)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.entries.iter().all(RationalFunction::is_strictly_proper)
    }

    pub fn map(&self, f: impl Fn(&RationalFunction) -> RationalFunction) -> Self {
        RationalMatrix { entries: self.entries.iter().map(f).collect(), ..self.clone() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.domain, |i, j| self.get(j, i).clone())
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, self.domain, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn row(&self, i: usize) -> Self {
        self.submatrix(i, 0, 1, self.cols)
    }

    /// Rows `idx`, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, self.domain, |i, j| self.get(idx[i], j).clone())
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(NrfError::DomainMismatch);
        }
        Ok(())
    }

    pub fn hstack(blocks: &[&RationalMatrix]) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| NrfError::DimensionMismatch("empty hstack".into()))?;
        let rows = first.rows;
        for b in blocks {
            first.check_domain(b)?;
            if b.rows != rows {
                return Err(NrfError::DimensionMismatch(format!("hstack rows {} vs {rows}", b.rows)));
            }
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        Ok(Self::from_fn(rows, cols, first.domain, |i, mut j| {
            for b in blocks {
                if j < b.cols {
                    return b.get(i, j).clone();
                }
                j -= b.cols;
            }
            unreachable!()
        }))
    }

    pub fn vstack(blocks: &[&RationalMatrix]) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| NrfError::DimensionMismatch("empty vstack".into()))?;
        let cols = first.cols;
        for b in blocks {
            first.check_domain(b)?;
            if b.cols != cols {
                return Err(NrfError::DimensionMismatch(format!("vstack cols {} vs {cols}", b.cols)));
            }
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        Ok(Self::from_fn(rows, cols, first.domain, |mut i, j| {
            for b in blocks {
                if i < b.rows {
                    return b.get(i, j).clone();
                }
                i -= b.rows;
            }
            unreachable!()
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(&RationalFunction, &RationalFunction) -> RationalFunction) -> Result<Self> {
        self.check_domain(other)?;
        if self.shape() != other.shape() {
            return Err(NrfError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect();
        Ok(RationalMatrix { entries, ..self.clone() })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        if self.cols != other.rows {
            return Err(NrfError::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, self.domain, |i, j| {
            let mut acc = RationalFunction::zero();
            for k in 0..self.cols {
                let a = self.get(i, k);
                let b = other.get(k, j);
                if !a.is_zero() && !b.is_zero() {
                    acc = &acc + &(a * b);
                }
            }
            acc
        }))
    }

    pub fn neg(&self) -> Self {
        self.map(|f| -f)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|f| f.scale(s))
    }

    /// Entrywise product with a scalar function.
    pub fn scale_by(&self, f: &RationalFunction) -> Self {
        self.map(|e| e * f)
    }

    /// Inverse by Gauss-Jordan elimination over the field of rational
    /// functions, cancelling after every step. Pivots are chosen by largest
    /// magnitude at a fixed probe point.
    pub fn invert(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(NrfError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if !self.has_full_normal_rank() {
            return Err(NrfError::SingularMatrix);
        }
        let at = probe::pivot_point(self.domain);
        let mut a: Vec<Vec<RationalFunction>> =
            (0..n).map(|i| (0..n).map(|j| self.get(i, j).clone()).collect()).collect();
        let mut inv: Vec<Vec<RationalFunction>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { RationalFunction::one() } else { RationalFunction::zero() }).collect())
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a[r][col].is_zero())
                .max_by(|&r1, &r2| {
                    let m = |r: usize| a[r][col].eval(at).map_or(0.0, |v| v.norm());
                    m(r1).total_cmp(&m(r2))
                })
                .ok_or(NrfError::SingularMatrix)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].recip()?;
            for j in 0..n {
                a[col][j] = &a[col][j] * &p;
                inv[col][j] = &inv[col][j] * &p;
            }
            a[col][col] = RationalFunction::one();
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for j in 0..n {
                    if !a[col][j].is_zero() {
                        a[r][j] = &a[r][j] - &(&f * &a[col][j]);
                    }
                    if !inv[col][j].is_zero() {
                        inv[r][j] = &inv[r][j] - &(&f * &inv[col][j]);
                    }
                }
                a[r][col] = RationalFunction::zero();
            }
        }
        Ok(Self::from_fn(n, n, self.domain, |i, j| inv[i][j].clone()))
    }

    /// Normal rank equals the smaller dimension, decided at probe points
    /// (full rank at any non-pole probe point suffices).
    pub fn has_full_normal_rank(&self) -> bool {
        let want = self.rows.min(self.cols);
        if want == 0 {
            return true;
        }
        probe::points(self.domain)
            .iter()
            .filter_map(|&z| self.eval(z).ok())
            .any(|m| linalg::rank_c(&m) == want)
    }

    pub fn diag_part(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(NrfError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(Self::from_fn(self.rows, self.cols, self.domain, |i, j| {
            if i == j {
                self.get(i, i).clone()
            } else {
                RationalFunction::zero()
            }
        }))
    }

    /// `self - diag_part(self)`
    pub fn off_diag_part(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(NrfError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(Self::from_fn(self.rows, self.cols, self.domain, |i, j| {
            if i == j {
                RationalFunction::zero()
            } else {
                self.get(i, j).clone()
            }
        }))
    }

    pub fn eval(&self, z: Complex<f64>) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self
                    .get(i, j)
                    .eval(z)
                    .ok_or_else(|| NrfError::EvaluationAtPole(format!("entry ({},{}) at {z}", i + 1, j + 1)))?;
            }
        }
        Ok(out)
    }

    pub fn gain_at_infinity(&self) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.get(i, j).gain_at_infinity()?;
            }
        }
        Ok(out)
    }

    /// Entrywise stability: no entry has a pole in the unstable region.
    pub fn is_stable(&self) -> bool {
        self.entries.iter().all(|f| f.is_stable(self.domain))
    }

    /// Denominator roots of every nonzero entry, repeated per entry. Any
    /// pole of the matrix is among them, with at least its multiplicity.
    pub fn pole_candidates(&self) -> Vec<Complex<f64>> {
        self.entries.iter().filter(|f| !f.is_zero()).flat_map(|f| f.poles()).collect()
    }

    /// Unstable poles with multiplicity (McMillan degree at each point);
    /// poles within `EIG_MATCH` of the boundary count.
    pub fn unstable_poles(&self) -> Result<Vec<Complex<f64>>> {
        if !self.is_proper() {
            return Err(NrfError::NotProper);
        }
        let cands = self.pole_candidates();
        laurent::unstable_poles_by_evaluation(self.domain, &cands, &cands, |z| {
            let w = self.eval(z).ok()?;
            let s = linalg::max_abs_c(&w);
            Some((w, s))
        })
    }

    /// Joint state-space realization: each row in observable canonical form,
    /// stacked. Not minimal in general.
    pub fn realize(&self) -> Result<StateSpace> {
        let rows: Vec<StateSpace> =
            (0..self.rows).map(|i| sstate::tf_to_ss_obsv(&self.row(i))).collect::<Result<_>>()?;
        Ok(StateSpace::stack_outputs(&rows, self.cols, self.domain))
    }

    pub fn conforms(&self, pattern: &SparsityPattern) -> Result<bool> {
        if (pattern.rows(), pattern.cols()) != self.shape() {
            return Err(NrfError::DimensionMismatch(format!(
                "pattern {}x{} vs matrix {}x{}",
                pattern.rows(),
                pattern.cols(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows)
            .all(|i| (0..self.cols).all(|j| pattern.get(i, j) || self.get(i, j).is_zero())))
    }

    /// Nonzero structure of the matrix.
    pub fn support(&self) -> SparsityPattern {
        SparsityPattern::from_fn(self.rows, self.cols, |i, j| !self.get(i, j).is_zero())
    }

    /// Monic least common multiple of the denominators in row `i`.
    pub fn row_lcm_den(&self, i: usize) -> Polynomial {
        (0..self.cols)
            .map(|j| self.get(i, j).den().clone())
            .fold(Polynomial::one(), |acc, d| acc.lcm(&d))
    }

    /// Largest absolute coefficient difference after normalization;
    /// `None` when some pair of entries differs in degree.
    pub fn max_coeff_diff(&self, other: &Self) -> Option<f64> {
        if self.shape() != other.shape() {
            return None;
        }
        let mut worst = 0.0_f64;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            for (p, q) in [(a.num(), b.num()), (a.den(), b.den())] {
                if p.degree() != q.degree() {
                    return None;
                }
                for k in 0..p.coeffs().len() {
                    worst = worst.max((p.coeff(k) - q.coeff(k)).abs());
                }
            }
        }
        Some(worst)
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid5;

    const D: Domain = Domain::Discrete;

    fn rf(n: &[f64], d: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(n, d).unwrap()
    }

    #[test]
    fn identity_times_uinv() {
        let uinv = grid5::u_inverse();
        let p = RationalMatrix::identity(5, D).mul(&uinv).unwrap();
        assert_eq!(p.max_coeff_diff(&uinv), Some(0.0));
    }

    #[test]
    fn u_times_uinv_is_identity() {
        let p = grid5::u_matrix().mul(&grid5::u_inverse()).unwrap();
        assert!(p.max_coeff_diff(&RationalMatrix::identity(5, D)).unwrap() < 1e-12);
    }

    #[test]
    fn inverse_of_u_matches_display() {
        let inv = grid5::u_matrix().invert().unwrap();
        // (3,1) entry is phi^2 + phi = (0.2z - 0.12)/(z - 0.8)^2
        let e = inv.get(2, 0);
        assert!((e.num().coeff(1) - 0.2).abs() < 1e-12 && (e.num().coeff(0) + 0.12).abs() < 1e-12);
        assert!((e.den().coeff(1) + 1.6).abs() < 1e-12);
        assert!(inv.max_coeff_diff(&grid5::u_inverse()).unwrap() < 1e-12);
    }

    #[test]
    fn inverse_of_identity_and_diagonal() {
        let i3 = RationalMatrix::identity(3, D);
        assert_eq!(i3.invert().unwrap(), i3);
        let f = rf(&[-1.0, 1.0], &[-0.5, 1.0]);
        let dm = RationalMatrix::diagonal(&[f.clone(), RationalFunction::one()], D);
        let inv = dm.invert().unwrap();
        assert!(inv.get(0, 0).max_diff(&f.recip().unwrap()) < 1e-12);
        assert!(inv.get(1, 0).is_zero());
    }

    #[test]
    fn singular_matrix_rejected() {
        let f = rf(&[1.0], &[-0.5, 1.0]);
        let m = RationalMatrix::from_fn(2, 2, D, |_, _| f.clone());
        assert!(matches!(m.invert(), Err(NrfError::SingularMatrix)));
    }

    #[test]
    fn diag_part_cases() {
        let i = RationalMatrix::identity(3, D);
        assert_eq!(i.diag_part().unwrap(), i);
        let low = RationalMatrix::from_fn(3, 3, D, |r, c| if r > c { rf(&[1.0], &[0.0, 1.0]) } else { RationalFunction::zero() });
        assert!(low.diag_part().unwrap().is_zero());
        let dd = grid5::u_inverse().diag_part().unwrap();
        assert_eq!(dd.diag_part().unwrap(), dd);
        assert!(matches!(RationalMatrix::zeros(2, 3, D).diag_part(), Err(NrfError::NotSquare { .. })));
    }

    #[test]
    fn unstable_poles_examples() {
        let integ = RationalMatrix::new(1, 1, vec![rf(&[1.0], &[-1.0, 1.0])], D).unwrap();
        let p = integ.unstable_poles().unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0] - Complex::new(1.0, 0.0)).norm() < 1e-9);
        let lag = RationalMatrix::new(1, 1, vec![rf(&[0.2], &[-0.8, 1.0])], D).unwrap();
        assert!(lag.unstable_poles().unwrap().is_empty());
    }

    #[test]
    fn grid_plant_has_five_poles_at_one() {
        let g = grid5::plant_tfm();
        let p = g.unstable_poles().unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn conformance() {
        let i2 = RationalMatrix::identity(2, D);
        assert!(!i2.conforms(&SparsityPattern::empty(2, 2)).unwrap());
        assert!(i2.conforms(&SparsityPattern::full(2, 2)).unwrap());
        assert!(RationalMatrix::zeros(2, 2, D).conforms(&SparsityPattern::empty(2, 2)).unwrap());
        assert!(i2.conforms(&SparsityPattern::full(2, 3)).is_err());
    }

    #[test]
    fn eval_examples() {
        let f = RationalMatrix::new(1, 1, vec![rf(&[1.0], &[-0.5, 1.0])], D).unwrap();
        assert!((f.eval(Complex::new(1.0, 0.0)).unwrap()[(0, 0)].re - 2.0).abs() < 1e-15);
        assert!(matches!(f.eval(Complex::new(0.5, 0.0)), Err(NrfError::EvaluationAtPole(_))));
        let mt = grid5::reference_dcf().mt;
        assert_eq!(mt.gain_at_infinity().unwrap(), DMatrix::identity(5, 5));
    }

    #[test]
    fn domain_mismatch() {
        let a = RationalMatrix::identity(2, D);
        let b = RationalMatrix::identity(2, Domain::Continuous);
        assert!(matches!(a.add(&b), Err(NrfError::DomainMismatch)));
        assert!(matches!(a.mul(&RationalMatrix::identity(3, D)), Err(NrfError::DimensionMismatch(_))));
    }
}
