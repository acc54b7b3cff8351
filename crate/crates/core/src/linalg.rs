//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Dyn, Schur, SVD};

use crate::tol::RANK_REL;

pub type CMatrix = DMatrix<Complex<f64>>;

/// Eigenvalues of a real square matrix, via the real Schur form.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    if a.nrows() == 0 {
        return Vec::new();
    }
    if a.nrows() == 1 {
        return vec![Complex::new(a[(0, 0)], 0.0)];
    }
    if let Some(ev) = schur_eigenvalues(a) {
        return ev;
    }
    // QR iteration can stall on exactly structured matrices; a fixed
    // Householder similarity breaks the structure without moving the spectrum
    let n = a.nrows();
    let v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.7548776662466927).fract());
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared());
    schur_eigenvalues(&(&h * a * &h)).expect("Schur iteration failed to converge")
}

fn schur_eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    [f64::EPSILON, 4.0 * f64::EPSILON, 1e-14, 1e-13, 1e-12]
        .iter()
        .find_map(|&eps| Schur::try_new(a.clone(), eps, 10_000))
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = svd_of(m, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn singular_values_c(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = svd_of(m, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD `(U, sigma, V^H)` with singular values in descending order.
pub fn svd_c(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let svd = [f64::EPSILON, 4.0 * f64::EPSILON, 1e-14, 1e-13, 1e-12]
        .iter()
        .find_map(|&eps| SVD::try_new(m.clone(), true, true, eps, 10_000))
        .expect("SVD iteration failed to converge");
    let sv = svd.singular_values.iter().copied().collect();
    (svd.u.expect("U requested"), sv, svd.v_t.expect("V requested"))
}

/// Eigenvalues of a complex square matrix, from the diagonal of its Schur
/// form. `None` if the iteration does not converge.
pub fn eigenvalues_c(a: &CMatrix) -> Option<Vec<Complex<f64>>> {
    let s = max_abs_c(a);
    if s == 0.0 {
        return Some(vec![Complex::new(0.0, 0.0); a.nrows()]);
    }
    let a = a / Complex::new(s, 0.0);
    let n = a.nrows();
    let v = DVector::from_fn(n, |i, _| Complex::new(1.0 + (i as f64 * 0.7548776662466927).fract(), 0.0));
    let h = CMatrix::identity(n, n) - (&v * v.adjoint()) * Complex::new(2.0 / v.norm_squared(), 0.0);
    let ev = schur_diagonal(&a).or_else(|| schur_diagonal(&(&h * &a * &h)))?;
    Some(ev.into_iter().map(|x| x * s).collect())
}

fn schur_diagonal(a: &CMatrix) -> Option<Vec<Complex<f64>>> {
    [f64::EPSILON, 4.0 * f64::EPSILON, 1e-14, 1e-13, 1e-12]
        .iter()
        .find_map(|&eps| Schur::try_new(a.clone(), eps, 10_000))
        .map(|t| t.unpack().1.diagonal().iter().copied().collect())
}

// nalgebra's default SVD iterates without bound; cap it and relax the
// threshold gradually instead.
fn svd_of<T: nalgebra::ComplexField<RealField = f64>>(m: &DMatrix<T>, compute_u: bool) -> SVD<T, Dyn, Dyn> {
    [f64::EPSILON, 4.0 * f64::EPSILON, 1e-14, 1e-13, 1e-12]
        .iter()
        .find_map(|&eps| SVD::try_new(m.clone(), compute_u, false, eps, 10_000))
        .expect("SVD iteration failed to converge")
}

/// Numerical rank with threshold `RANK_REL * reference`; the reference
/// defaults to the largest singular value of `m`.
pub fn rank_with(sv: &[f64], reference: Option<f64>) -> usize {
    let smax = reference.unwrap_or_else(|| sv.first().copied().unwrap_or(0.0));
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL * smax).count()
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    rank_with(&singular_values(m), None)
}

pub fn rank_c(m: &CMatrix) -> usize {
    rank_with(&singular_values_c(m), None)
}

pub fn sigma_max_c(m: &CMatrix) -> f64 {
    singular_values_c(m).first().copied().unwrap_or(0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex::new(x, 0.0))
}

/// Infinity norm (max absolute row sum) of a complex matrix.
pub fn inf_norm_c(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthogonal `U` (rows x rows) whose leading columns span the range of
/// `b`, together with the numerical rank of `b` measured against `reference`.
pub fn range_basis(b: &DMatrix<f64>, reference: f64) -> (DMatrix<f64>, usize) {
    let rows = b.nrows();
    if rows == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let cols = b.ncols().max(rows);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (rows, b.ncols())).copy_from(b);
    let svd = svd_of(&padded, true);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut sorted = DMatrix::zeros(rows, rows);
    for (k, &i) in order.iter().enumerate().take(rows) {
        sorted.set_column(k, &u.column(i));
    }
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let r = if reference <= 0.0 { 0 } else { sv.iter().filter(|&&s| s > RANK_REL * reference).count() };
    (sorted, r.min(rows))
}

/// Block-diagonal stacking of real matrices (blocks may be empty).
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn hstack(blocks: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Inverse of a complex matrix, `None` when numerically singular.
pub fn inverse_c(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    let sv = singular_values_c(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= 1e-14 * smax {
        return None;
    }
    m.clone().try_inverse()
}
