//! Pole audit by evaluation. Around a candidate `c` the principal part of a
//! TFM is read off from samples on a small circle; the rank of the block
//! Hankel matrix of its coefficients is the local McMillan degree at `c`.
//! Only values of the map are needed, so no symbolic cancellation has to
//! succeed for the answer to be right.

use nalgebra::Complex;

use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::ratmat::Domain;
use crate::tol::{EIG_MATCH, RANK_REL};

const SAMPLES: usize = 128;
const MERGE_RADIUS: f64 = 1e-3;
const MAX_RADIUS: f64 = 0.05;

#[derive(Clone, Copy, Debug)]
struct Candidate {
    center: Complex<f64>,
    bound: usize,
}

fn merge(points: &[Complex<f64>]) -> Vec<Candidate> {
    let mut used = vec![false; points.len()];
    let mut out = Vec::new();
    for i in 0..points.len() {
        if used[i] {
            continue;
        }
        let r = MERGE_RADIUS * (1.0 + points[i].norm());
        let members: Vec<usize> = (i..points.len()).filter(|&j| !used[j] && (points[j] - points[i]).norm() <= r).collect();
        for &j in &members {
            used[j] = true;
        }
        let center = members.iter().map(|&j| points[j]).sum::<Complex<f64>>() / members.len() as f64;
        out.push(Candidate { center, bound: members.len() });
    }
    out
}

/// Unstable poles, with multiplicity, of the map evaluated by `eval`.
///
/// `candidates` must contain every unstable pole (extra entries are
/// harmless); `singular` lists every point where `eval` may blow up, and
/// keeps the sampling circles clear of them. `eval` returns the value and
/// the magnitude of the terms it was computed from, which sets the noise
/// floor for the rank decision.
pub fn unstable_poles_by_evaluation(
    domain: Domain,
    candidates: &[Complex<f64>],
    singular: &[Complex<f64>],
    eval: impl Fn(Complex<f64>) -> Option<(CMatrix, f64)>,
) -> Result<Vec<Complex<f64>>> {
    let band: Vec<Complex<f64>> =
        candidates.iter().copied().filter(|&c| domain.is_unstable_within(c, EIG_MATCH)).collect();
    let mut out = Vec::new();
    for cand in merge(&band) {
        let reach = MERGE_RADIUS * (1.0 + cand.center.norm());
        let clear = singular
            .iter()
            .map(|s| (s - cand.center).norm())
            .filter(|&d| d > reach)
            .fold(f64::INFINITY, f64::min);
        let rho = (0.5 * clear).min(MAX_RADIUS * (1.0 + cand.center.norm())).max(2.0 * reach);
        for mut p in local_poles(cand.center, rho, cand.bound, &eval) {
            if p.im.abs() <= 1e-9 * (1.0 + p.re.abs()) {
                p.im = 0.0;
            }
            out.push(p);
        }
    }
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(out)
}

/// Local McMillan degree at `center` and the poles it accounts for.
///
/// With scaled principal-part coefficients `c_j = rho^-j W_{-j}`, the block
/// Hankel `H0 = [c_(i+j-1)]` has the rank of the unscaled one, and the
/// shifted Hankel `H1 = [c_(i+j)]` gives the pole offsets `(p - center) /
/// rho` as eigenvalues of the balanced shift `S^-1/2 U^H H1 V S^-1/2`.
fn local_poles(
    center: Complex<f64>,
    rho: f64,
    bound: usize,
    eval: &impl Fn(Complex<f64>) -> Option<(CMatrix, f64)>,
) -> Vec<Complex<f64>> {
    let mut samples = Vec::with_capacity(SAMPLES);
    let mut scale = 1.0_f64;
    for k in 0..SAMPLES {
        // offset keeps samples off the real axis, where stable poles cluster
        let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / SAMPLES as f64;
        let e = Complex::from_polar(1.0, theta);
        match eval(center + e * rho) {
            Some((w, s)) => {
                scale = scale.max(s);
                samples.push((e, w));
            }
            None => return vec![center; bound],
        }
    }
    let (p, m) = samples[0].1.shape();
    let blocks = bound.min(SAMPLES / 4) + 1;
    let coeff = |j: usize| -> CMatrix {
        let mut c = CMatrix::zeros(p, m);
        for (e, w) in &samples {
            c += w * e.powu(j as u32);
        }
        c / Complex::new(SAMPLES as f64, 0.0)
    };
    let cs: Vec<CMatrix> = (1..=2 * blocks).map(coeff).collect();
    let hankel = |shift: usize| {
        let mut h = CMatrix::zeros(blocks * p, blocks * m);
        for i in 0..blocks {
            for j in 0..blocks {
                h.view_mut((i * p, j * m), (p, m)).copy_from(&cs[i + j + shift]);
            }
        }
        h
    };
    let (u, sv, vt) = linalg::svd_c(&hankel(0));
    let k = sv.iter().filter(|&&s| s > RANK_REL * scale).count().min(bound);
    if k == 0 {
        return Vec::new();
    }
    let w = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        k,
        sv[..k].iter().map(|s| Complex::new(1.0 / s.sqrt(), 0.0)),
    ));
    let shift = &w * u.columns(0, k).adjoint() * hankel(1) * vt.rows(0, k).adjoint() * &w;
    match linalg::eigenvalues_c(&shift) {
        Some(ev) => ev.into_iter().map(|x| center + x * rho).collect(),
        None => vec![center + shift.trace() / Complex::new(k as f64, 0.0) * rho; k],
    }
}
