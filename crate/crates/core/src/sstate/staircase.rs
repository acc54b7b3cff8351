use nalgebra::{Complex, DMatrix};

use super::{unstable_eigs, StateSpace};
use crate::linalg::{self, CMatrix};

/// Orthogonal `T` and controllable dimension `nc` such that in
/// `(T'AT, T'B, CT)` the leading `nc` states form the controllable
/// subsystem and the lower-left block of `T'AT` (and lower part of `T'B`)
/// vanish.
pub fn ctrb_staircase_transform(sys: &StateSpace) -> (DMatrix<f64>, usize) {
    let n = sys.order();
    let mut t = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return (t, 0);
    }
    let reference = linalg::singular_values(&linalg::hstack(&[&sys.a, &sys.b], n))
        .first()
        .copied()
        .unwrap_or(0.0);
    let mut nc = 0;
    let mut block = sys.b.clone();
    loop {
        let (u, r) = linalg::range_basis(&block, reference);
        if r == 0 {
            break;
        }
        let tail = t.columns(nc, n - nc) * &u;
        t.columns_mut(nc, n - nc).copy_from(&tail);
        let prev = nc;
        nc += r;
        if nc == n {
            break;
        }
        let at = t.transpose() * &sys.a * &t;
        block = at.view((nc, prev), (n - nc, r)).into_owned();
    }
    (t, nc)
}

/// Controllable/uncontrollable split with the uncoupled blocks set to exact
/// zeros. Returns the transformed system and the controllable order.
pub fn ctrb_staircase(sys: &StateSpace) -> (StateSpace, usize) {
    let (t, nc) = ctrb_staircase_transform(sys);
    let mut out = sys.transform_orthogonal(&t);
    let n = out.order();
    out.a.view_mut((nc, 0), (n - nc, nc)).fill(0.0);
    out.b.rows_mut(nc, n - nc).fill(0.0);
    (out, nc)
}

/// Dual of [`ctrb_staircase_transform`]: the leading `no` states of
/// `(T'AT, T'B, CT)` form the observable subsystem.
pub fn obsv_staircase_transform(sys: &StateSpace) -> (DMatrix<f64>, usize) {
    ctrb_staircase_transform(&sys.transpose())
}

pub fn obsv_staircase(sys: &StateSpace) -> (StateSpace, usize) {
    let (t, no) = obsv_staircase_transform(sys);
    let mut out = sys.transform_orthogonal(&t);
    let n = out.order();
    out.a.view_mut((0, no), (no, n - no)).fill(0.0);
    out.c.columns_mut(no, n - no).fill(0.0);
    (out, no)
}

/// Observable part first, then its controllable part.
pub fn minimal(sys: &StateSpace) -> StateSpace {
    let (o, no) = obsv_staircase(sys);
    let obs = o.truncate(no);
    let (c, nc) = ctrb_staircase(&obs);
    c.truncate(nc)
}

fn full_row_rank_at(a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: Complex<f64>) -> bool {
    let n = a.nrows();
    let mut pencil = CMatrix::zeros(n, n + b.ncols());
    pencil.view_mut((0, 0), (n, n)).copy_from(&(linalg::to_complex(a) - CMatrix::identity(n, n) * lambda));
    pencil.view_mut((0, n), (n, b.ncols())).copy_from(&linalg::to_complex(b));
    linalg::rank_c(&pencil) == n
}

/// PBH: `[A - lI, B]` has full row rank at every unstable eigenvalue.
pub fn is_stabilizable(sys: &StateSpace) -> bool {
    unstable_eigs(&sys.a, sys.domain).iter().all(|&l| full_row_rank_at(&sys.a, &sys.b, l))
}

/// PBH on the dual pair.
pub fn is_detectable(sys: &StateSpace) -> bool {
    is_stabilizable(&sys.transpose())
}

/// `[A - lI, B; C, D]` has full row rank at `point`.
pub fn transmission_zero_rank_test(sys: &StateSpace, point: Complex<f64>) -> bool {
    let (n, m, p) = (sys.order(), sys.inputs(), sys.outputs());
    let mut pencil = CMatrix::zeros(n + p, n + m);
    pencil
        .view_mut((0, 0), (n, n))
        .copy_from(&(linalg::to_complex(&sys.a) - CMatrix::identity(n, n) * point));
    pencil.view_mut((0, n), (n, m)).copy_from(&linalg::to_complex(&sys.b));
    pencil.view_mut((n, 0), (p, n)).copy_from(&linalg::to_complex(&sys.c));
    pencil.view_mut((n, n), (p, m)).copy_from(&linalg::to_complex(&sys.d));
    linalg::rank_c(&pencil) == n + p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe;
    use crate::ratmat::Domain;
    use crate::sstate::ss_to_tf;
    use nalgebra::DVector;
    use proptest::prelude::*;

    const D: Domain = Domain::Discrete;

    fn ss(a: &[f64], n: usize, b: &[f64], m: usize, c: &[f64], p: usize) -> StateSpace {
        StateSpace::new(
            DMatrix::from_row_slice(n, n, a),
            DMatrix::from_row_slice(n, m, b),
            DMatrix::from_row_slice(p, n, c),
            DMatrix::zeros(p, m),
            D,
        )
        .unwrap()
    }

    #[test]
    fn decoupled_state_is_uncontrollable() {
        let s = ss(&[0.5, 0.0, 0.0, 2.0], 2, &[1.0, 0.0], 1, &[1.0, 1.0], 1);
        let (t, nc) = ctrb_staircase(&s);
        assert_eq!(nc, 1);
        assert!((t.a[(0, 0)] - 0.5).abs() < 1e-12);
        let (_, no) = obsv_staircase(&ss(&[0.5, 0.0, 0.0, 2.0], 2, &[1.0, 1.0], 1, &[1.0, 0.0], 1));
        assert_eq!(no, 1);
    }

    #[test]
    fn static_system_orders() {
        let s = StateSpace::static_gain(DMatrix::identity(2, 2), D);
        assert_eq!(ctrb_staircase(&s).1, 0);
        assert_eq!(obsv_staircase(&s).1, 0);
        assert_eq!(minimal(&s).order(), 0);
    }

    #[test]
    fn cascade_without_cancellation_stays_order_two() {
        // 1/(z-2) in series after (z-0.1)/(z-0.5)
        let s = ss(&[0.5, 0.0, 0.4, 2.0], 2, &[1.0, 1.0], 1, &[0.0, 1.0], 1);
        let m = minimal(&s);
        assert_eq!(m.order(), 2);
        let mut ev: Vec<f64> = m.eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 0.5).abs() < 1e-10 && (ev[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn padding_with_unreachable_state_is_removed() {
        let s = ss(&[0.5, 0.0, 0.0, 0.3], 2, &[1.0, 0.0], 1, &[1.0, 1.0], 1);
        assert_eq!(minimal(&s).order(), 1);
    }

    #[test]
    fn pbh_examples() {
        let s = ss(&[2.0], 1, &[0.0], 1, &[1.0], 1);
        assert!(!is_stabilizable(&s));
        let s = ss(&[0.5], 1, &[0.0], 1, &[0.0], 1);
        assert!(is_stabilizable(&s) && is_detectable(&s));
    }

    #[test]
    fn rosenbrock_rank() {
        // 1/(z-0.5): no zeros
        let s = ss(&[0.5], 1, &[1.0], 1, &[1.0], 1);
        assert!(transmission_zero_rank_test(&s, Complex::new(2.0, 0.0)));
        // (z-2)/(z-0.5) = 1 + (-1.5)/(z-0.5)
        let mut s2 = ss(&[0.5], 1, &[1.0], 1, &[-1.5], 1);
        s2.d[(0, 0)] = 1.0;
        assert!(!transmission_zero_rank_test(&s2, Complex::new(2.0, 0.0)));
    }

    fn random_system(vals: &[f64], n: usize, m: usize, p: usize) -> StateSpace {
        let mut it = vals.iter().copied().cycle();
        let mut next = || it.next().unwrap();
        let a = DMatrix::from_fn(n, n, |_, _| next());
        let b = DMatrix::from_fn(n, m, |_, _| next());
        let c = DMatrix::from_fn(p, n, |_, _| next());
        StateSpace::new(a, b, c, DMatrix::zeros(p, m), D).unwrap()
    }

    proptest! {
        #[test]
        fn staircase_is_orthogonal(vals in proptest::collection::vec(-1.0f64..1.0, 40)) {
            let s = random_system(&vals, 4, 2, 2);
            let (t, nc) = ctrb_staircase_transform(&s);
            let e = &t.transpose() * &t - DMatrix::<f64>::identity(4, 4);
            prop_assert!(e.norm() < 1e-10);
            let ctrb_rank = {
                let mut k = DMatrix::zeros(4, 8);
                let mut ab = s.b.clone();
                for i in 0..4 {
                    k.view_mut((0, 2 * i), (4, 2)).copy_from(&ab);
                    ab = &s.a * ab;
                }
                linalg::rank(&k)
            };
            prop_assert_eq!(nc, ctrb_rank);
        }

        #[test]
        fn minimal_preserves_tfm_and_is_idempotent(vals in proptest::collection::vec(-1.0f64..1.0, 30)) {
            let base = random_system(&vals, 3, 1, 1);
            // pad with an unobservable and an uncontrollable state
            let a = linalg::block_diag(&[&base.a, &DMatrix::from_element(1, 1, 0.3), &DMatrix::from_element(1, 1, -0.2)]);
            let b = linalg::vstack(&[&base.b, &DMatrix::from_element(1, 1, 1.0), &DMatrix::zeros(1, 1)], 1);
            let c = linalg::hstack(&[&base.c, &DMatrix::zeros(1, 1), &DMatrix::from_element(1, 1, 1.0)], 1);
            let padded = StateSpace::new(a, b, c, DMatrix::zeros(1, 1), D).unwrap();
            let m1 = minimal(&padded);
            prop_assert!(m1.order() <= 3);
            prop_assert_eq!(minimal(&m1).order(), m1.order());
            let dev = probe::max_over(D, |z| {
                let x = padded.eval(z)?;
                let y = m1.eval(z)?;
                Some(probe::rel_diff(&x, &y))
            }).unwrap();
            prop_assert!(dev < 1e-8);
            let _ = ss_to_tf(&m1);
        }
    }

    #[test]
    fn diag_unstable_split() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 2.0]));
        let s = StateSpace::new(a, DMatrix::from_row_slice(2, 1, &[1.0, 0.0]), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1), D).unwrap();
        assert!(!is_stabilizable(&s));
        assert!(!is_detectable(&s));
    }
}
