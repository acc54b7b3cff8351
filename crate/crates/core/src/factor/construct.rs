use nalgebra::{Complex, DMatrix};

use super::DoublyCoprime;
use crate::error::{NrfError, Result};
use crate::linalg;
use crate::ratmat::Polynomial;
use crate::sstate::{self, ss_to_tf, StateSpace};
use crate::tol::EIG_MATCH;

/// Factorization from a stabilizable and detectable strictly proper
/// realization, given `F` with `A + BF` stable and `L` with `A + LC` stable:
///
/// ```text
/// M  = [A+BF | B ; F | I]        N  = [A+BF | B ; C+DF | D]
/// Xt = [A+BF | L ; F | 0]        Yt = [A+BF | -L ; C+DF | I]
/// Y  = [A+LC | -(B+LD) ; F | I]  X  = [A+LC | L ; F | 0]
/// Mt = [A+LC | L ; C | I]        Nt = [A+LC | B+LD ; C | D]
/// ```
///
/// followed by the gain-at-infinity normalization.
pub fn dcf_from_ss(plant: &StateSpace, f: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<DoublyCoprime> {
    let (n, m, p) = (plant.order(), plant.inputs(), plant.outputs());
    if f.shape() != (m, n) || l.shape() != (n, p) {
        return Err(NrfError::DimensionMismatch(format!(
            "F must be {m}x{n} and L {n}x{p}, got {:?} and {:?}",
            f.shape(),
            l.shape()
        )));
    }
    if plant.d.iter().any(|&x| x != 0.0) {
        return Err(NrfError::NotStrictlyProper);
    }
    if !sstate::is_stabilizable(plant) {
        return Err(NrfError::NotStabilizable);
    }
    if !sstate::is_detectable(plant) {
        return Err(NrfError::NotDetectable);
    }
    let dom = plant.domain;
    let (a, b, c, d) = (&plant.a, &plant.b, &plant.c, &plant.d);
    let af = a + b * f;
    let cf = c + d * f;
    let al = a + l * c;
    let bl = b + l * d;
    for (name, mat) in [("A+BF", &af), ("A+LC", &al)] {
        let bad = sstate::unstable_eigs(mat, dom);
        if !bad.is_empty() {
            return Err(NrfError::GainsNotStabilizing(format!("{name} has unstable eigenvalues {bad:?}")));
        }
    }
    let im = DMatrix::identity(m, m);
    let ip = DMatrix::identity(p, p);
    let sys = |a: &DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>| {
        StateSpace::new(a.clone(), b, c, d, dom).map(|s| ss_to_tf(&s))
    };
    let dcf = DoublyCoprime {
        m: sys(&af, b.clone(), f.clone(), im.clone())?,
        n: sys(&af, b.clone(), cf.clone(), d.clone())?,
        xt: sys(&af, l.clone(), f.clone(), DMatrix::zeros(m, p))?,
        yt: sys(&af, -l, cf, ip.clone())?,
        y: sys(&al, -&bl, f.clone(), im)?,
        x: sys(&al, l.clone(), f.clone(), DMatrix::zeros(m, p))?,
        mt: sys(&al, l.clone(), c.clone(), ip)?,
        nt: sys(&al, bl, c.clone(), d.clone())?,
    };
    dcf.normalized()
}

/// Gains `(F, L)` with `eig(A + BF)` and `eig(A + LC)` both equal to
/// `targets` (conjugate-closed, length `n`, inside the stable region).
pub fn place_gains(plant: &StateSpace, targets: &[Complex<f64>]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = plant.order();
    if targets.len() != n {
        return Err(NrfError::PlacementFailed(format!("{} targets for order {n}", targets.len())));
    }
    if let Some(t) = targets.iter().find(|t| plant.domain.is_unstable(**t)) {
        return Err(NrfError::PlacementFailed(format!("target {t} is not in the stable region")));
    }
    if !sstate::is_stabilizable(plant) {
        return Err(NrfError::NotStabilizable);
    }
    if !sstate::is_detectable(plant) {
        return Err(NrfError::NotDetectable);
    }
    let f = place_state_feedback(&plant.a, &plant.b, targets)?;
    let fd = place_state_feedback(&plant.a.transpose(), &plant.c.transpose(), targets)?;
    Ok((f, fd.transpose()))
}

/// Like [`place_gains`], but modes that no input reaches (or no output
/// sees) are left where they are as long as they are stable; the surplus
/// targets are ignored. The result is checked for stability only.
pub fn stabilizing_gains(plant: &StateSpace, targets: &[Complex<f64>]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = plant.order();
    if targets.len() != n {
        return Err(NrfError::PlacementFailed(format!("{} targets for order {n}", targets.len())));
    }
    if let Some(t) = targets.iter().find(|t| plant.domain.is_unstable(**t)) {
        return Err(NrfError::PlacementFailed(format!("target {t} is not in the stable region")));
    }
    if !sstate::is_stabilizable(plant) {
        return Err(NrfError::NotStabilizable);
    }
    if !sstate::is_detectable(plant) {
        return Err(NrfError::NotDetectable);
    }
    let dom = plant.domain;
    let f = place_rec(&plant.a, &plant.b, targets, Some(dom))?;
    let fd = place_rec(&plant.a.transpose(), &plant.c.transpose(), targets, Some(dom))?;
    let l = fd.transpose();
    for (name, mat) in [("A+BF", &plant.a + &plant.b * &f), ("A+LC", &plant.a + &l * &plant.c)] {
        let bad = sstate::unstable_eigs(&mat, dom);
        if !bad.is_empty() {
            return Err(NrfError::GainsNotStabilizing(format!("{name} has unstable eigenvalues {bad:?}")));
        }
    }
    Ok((f, l))
}

/// `F` with `charpoly(A + BF) = prod (x - t)`.
///
/// Single-input Ackermann placement on the part reachable from one input
/// column, then recursion on the unreachable quotient with the remaining
/// columns. Success is judged on characteristic-polynomial coefficients,
/// since repeated targets give defective closed-loop matrices whose computed
/// eigenvalues scatter far beyond the coefficient error.
pub fn place_state_feedback(a: &DMatrix<f64>, b: &DMatrix<f64>, targets: &[Complex<f64>]) -> Result<DMatrix<f64>> {
    let f = place_rec(a, b, targets, None)?;
    let want = Polynomial::from_roots(targets);
    let got = sstate::charpoly(&(a + b * &f));
    let scale = 1.0 + want.max_abs_coeff();
    let err = (0..=a.nrows()).map(|k| (want.coeff(k) - got.coeff(k)).abs()).fold(0.0, f64::max);
    if err > EIG_MATCH * scale {
        return Err(NrfError::PlacementFailed(format!("characteristic polynomial off by {err:.3e}")));
    }
    Ok(f)
}

// With `keep_stable`, unreachable modes that are stable in that domain are
// left alone instead of failing.
fn place_rec(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    targets: &[Complex<f64>],
    keep_stable: Option<crate::ratmat::Domain>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    if n == 0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    let Some(col) = (0..m).find(|&j| b.column(j).norm() > 0.0) else {
        if let Some(dom) = keep_stable {
            if sstate::unstable_eigs(a, dom).is_empty() {
                return Ok(DMatrix::zeros(m, n));
            }
        }
        return Err(NrfError::PlacementFailed(format!("{n} modes unreachable by any input")));
    };
    let single = StateSpace::new(
        a.clone(),
        b.columns(col, 1).into_owned(),
        DMatrix::zeros(0, n),
        DMatrix::zeros(0, 1),
        crate::ratmat::Domain::Discrete,
    )?;
    let (t, nc) = sstate::ctrb_staircase_transform(&single);
    if nc == 0 {
        // this column reaches nothing; drop it
        let rest = drop_column(b, col);
        let f = place_rec(a, &rest, targets, keep_stable)?;
        return Ok(insert_zero_row(&f, col));
    }
    let (mine, others) = split_targets(targets, nc)?;
    let at = t.transpose() * a * &t;
    let bt = t.transpose() * b;
    let a11 = at.view((0, 0), (nc, nc)).into_owned();
    let b1 = bt.view((0, col), (nc, 1)).into_owned();
    let f1 = ackermann(&a11, &b1, &mine)?;

    let mut fbar = DMatrix::zeros(m, n);
    fbar.view_mut((col, 0), (1, nc)).copy_from(&f1);
    if nc < n {
        let a22 = at.view((nc, nc), (n - nc, n - nc)).into_owned();
        let b2 = drop_column(&bt.rows(nc, n - nc).into_owned(), col);
        let f2 = place_rec(&a22, &b2, &others, keep_stable)?;
        let f2 = insert_zero_row(&f2, col);
        fbar.view_mut((0, nc), (m, n - nc)).copy_from(&f2);
    }
    Ok(fbar * t.transpose())
}

fn drop_column(b: &DMatrix<f64>, col: usize) -> DMatrix<f64> {
    b.clone().remove_column(col)
}

fn insert_zero_row(f: &DMatrix<f64>, row: usize) -> DMatrix<f64> {
    f.clone().insert_row(row, 0.0)
}

/// Splits `targets` into a conjugate-closed part of size `k` and the rest.
fn split_targets(targets: &[Complex<f64>], k: usize) -> Result<(Vec<Complex<f64>>, Vec<Complex<f64>>)> {
    let mut units: Vec<Vec<Complex<f64>>> = Vec::new();
    let mut used = vec![false; targets.len()];
    for i in 0..targets.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let t = targets[i];
        if t.im.abs() <= 1e-12 * (1.0 + t.norm()) {
            units.push(vec![Complex::new(t.re, 0.0)]);
            continue;
        }
        let partner = (0..targets.len())
            .filter(|&j| !used[j])
            .min_by(|&x, &y| (targets[x] - t.conj()).norm().total_cmp(&(targets[y] - t.conj()).norm()))
            .filter(|&j| (targets[j] - t.conj()).norm() <= 1e-9 * (1.0 + t.norm()))
            .ok_or_else(|| NrfError::PlacementFailed(format!("target {t} has no conjugate partner")))?;
        used[partner] = true;
        units.push(vec![t, t.conj()]);
    }
    let mut mine = Vec::new();
    let mut rest = Vec::new();
    // pairs first, then reals fill the remainder
    units.sort_by_key(|u| std::cmp::Reverse(u.len()));
    for u in units {
        if mine.len() + u.len() <= k {
            mine.extend(u);
        } else {
            rest.extend(u);
        }
    }
    if mine.len() != k {
        return Err(NrfError::PlacementFailed(format!(
            "cannot pick a conjugate-closed subset of size {k} from the targets"
        )));
    }
    Ok((mine, rest))
}

/// Single-input Ackermann formula `f = -e_n' C^-1 p(A)`.
fn ackermann(a: &DMatrix<f64>, b: &DMatrix<f64>, targets: &[Complex<f64>]) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut ctrb = DMatrix::zeros(n, n);
    let mut v = b.clone();
    for k in 0..n {
        ctrb.set_column(k, &v.column(0));
        v = a * v;
    }
    let p = Polynomial::from_roots(targets);
    let mut pa = DMatrix::zeros(n, n);
    for k in (0..=n).rev() {
        pa = &pa * a + DMatrix::identity(n, n) * p.coeff(k);
    }
    let mut e = DMatrix::zeros(n, 1);
    e[(n - 1, 0)] = 1.0;
    let y = ctrb
        .transpose()
        .lu()
        .solve(&e)
        .ok_or_else(|| NrfError::PlacementFailed("singular controllability matrix".into()))?;
    if linalg::rank(&ctrb) < n {
        return Err(NrfError::PlacementFailed("single-input block lost controllability".into()));
    }
    Ok(-(y.transpose() * pa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::{Domain, RationalFunction};
    use crate::grid5;

    const D: Domain = Domain::Discrete;

    fn real(v: &[f64]) -> Vec<Complex<f64>> {
        v.iter().map(|&x| Complex::new(x, 0.0)).collect()
    }

    fn scalar(a: f64, b: f64, c: f64) -> StateSpace {
        let e = |x| DMatrix::from_element(1, 1, x);
        StateSpace::new(e(a), e(b), e(c), e(0.0), D).unwrap()
    }

    #[test]
    fn scalar_placement() {
        let (f, l) = place_gains(&scalar(1.0, 1.0, 1.0), &real(&[0.5])).unwrap();
        assert!((f[(0, 0)] + 0.5).abs() < 1e-12);
        assert!((l[(0, 0)] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn decoupled_placement() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let f = place_state_feedback(&a, &DMatrix::identity(2, 2), &real(&[0.4, 0.5])).unwrap();
        let mut ev: Vec<f64> = linalg::eigenvalues(&(&a + &f)).iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 0.4).abs() < 1e-9 && (ev[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn complex_targets() {
        let a = DMatrix::from_row_slice(3, 3, &[1.1, 0.3, 0.0, 0.0, 0.9, 1.0, 0.2, 0.0, 1.3]);
        let b = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
        let t = vec![Complex::new(0.3, 0.4), Complex::new(0.3, -0.4), Complex::new(-0.2, 0.0)];
        let f = place_state_feedback(&a, &b, &t).unwrap();
        assert!(linalg::spectral_radius(&(&a + &b * f)) < 0.51);
    }

    #[test]
    fn grid_plant_has_unreachable_lags() {
        // nodes 4 and 5 filter the same signal, so two modes at 0.8 cannot move
        let g = grid5::plant_ss();
        assert!(matches!(place_gains(&g, &real(&[0.5; 9])), Err(NrfError::PlacementFailed(_))));
        let (f, l) = stabilizing_gains(&g, &real(&[0.5; 9])).unwrap();
        let with_lags = Polynomial::from_roots(&real(&[0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.8, 0.8]));
        let all_half = Polynomial::from_roots(&real(&[0.5; 9]));
        for (mat, want) in [(&g.a + &g.b * &f, with_lags), (&g.a + &l * &g.c, all_half)] {
            let cp = sstate::charpoly(&mat);
            for k in 0..=9 {
                assert!((cp.coeff(k) - want.coeff(k)).abs() < 1e-6, "{cp}");
            }
        }
    }

    #[test]
    fn scalar_factorization_matches_hand_formulas() {
        let g = scalar(1.0, 1.0, 1.0);
        let (f, l) = place_gains(&g, &real(&[0.5])).unwrap();
        let dcf = dcf_from_ss(&g, &f, &l).unwrap();
        let m = RationalFunction::from_coeffs(&[-1.0, 1.0], &[-0.5, 1.0]).unwrap();
        assert!(dcf.m.get(0, 0).max_diff(&m) < 1e-12);
        assert!(dcf.mt.get(0, 0).max_diff(&m) < 1e-12);
        assert!(dcf.bezout_residual().unwrap() < 1e-10);
    }

    #[test]
    fn stable_plant_with_zero_gains() {
        let g = scalar(0.8, 1.0, 0.2);
        let z = DMatrix::zeros(1, 1);
        let dcf = dcf_from_ss(&g, &z, &z).unwrap();
        assert!(dcf.x.is_zero() && dcf.xt.is_zero());
        assert_eq!(dcf.m.get(0, 0), &RationalFunction::one());
        assert_eq!(dcf.y.get(0, 0), &RationalFunction::one());
        assert!(dcf.n.get(0, 0).max_diff(&RationalFunction::from_coeffs(&[0.2], &[-0.8, 1.0]).unwrap()) < 1e-12);
    }

    #[test]
    fn grid_factorization_from_state_space() {
        let g = grid5::plant_ss();
        let (f, l) = stabilizing_gains(&g, &real(&[0.5; 9])).unwrap();
        let dcf = dcf_from_ss(&g, &f, &l).unwrap();
        let rep = dcf.validate(Some(&grid5::plant_tfm())).unwrap();
        assert!(rep.ok(), "{:?}", rep.violations);
    }

    #[test]
    fn construction_errors() {
        let z = DMatrix::zeros(1, 1);
        assert!(matches!(dcf_from_ss(&scalar(2.0, 0.0, 1.0), &z, &z), Err(NrfError::NotStabilizable)));
        assert!(matches!(dcf_from_ss(&scalar(2.0, 1.0, 0.0), &z, &z), Err(NrfError::NotDetectable)));
        assert!(matches!(dcf_from_ss(&scalar(1.0, 1.0, 1.0), &z, &z), Err(NrfError::GainsNotStabilizing(_))));
        let mut sp = scalar(0.5, 1.0, 1.0);
        sp.d[(0, 0)] = 1.0;
        assert!(matches!(dcf_from_ss(&sp, &z, &z), Err(NrfError::NotStrictlyProper)));
    }
}
