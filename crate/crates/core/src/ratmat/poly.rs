use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};

use crate::linalg;
use crate::tol::{CANCEL_ABS, CLUSTER_RADIUS, CLUSTER_VERIFY, COEFF_ZERO_REL};

/// Real polynomial in the transform variable, coefficients in ascending
/// powers (`coeffs[k]` multiplies `x^k`).
///
/// The coefficient vector is kept normalized: the highest stored
/// coefficient is nonzero, and the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

/// A root together with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootCluster {
    pub center: Complex<f64>,
    pub multiplicity: usize,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `x - c`
    pub fn x_minus(c: f64) -> Self {
        Polynomial::new(vec![-c, 1.0])
    }

    /// Monic real polynomial with the given roots. Complex roots should come
    /// in conjugate pairs; the imaginary residue of each coefficient is dropped.
    pub fn from_roots(roots: &[Complex<f64>]) -> Self {
        let mut c = vec![Complex::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Polynomial::new(c.into_iter().map(|z| z.re).collect())
    }

    fn trim(&mut self) {
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let thr = COEFF_ZERO_REL * (1.0 + scale);
        while let Some(&last) = self.coeffs.last() {
            if last.abs() <= thr {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: Complex<f64>) -> Complex<f64> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `sum |c_k| |x|^k`, the natural scale for judging `|p(x)|`.
    pub fn eval_abs_scale(&self, x: Complex<f64>) -> f64 {
        let r = x.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let lead = self.leading();
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| c / lead).collect();
        *coeffs.last_mut().unwrap() = 1.0;
        Polynomial { coeffs }
    }

    /// Quotient and remainder of division by a nonzero polynomial.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let Some(nd) = self.degree() else {
            return (Polynomial::zero(), Polynomial::zero());
        };
        if nd < dd {
            return (Polynomial::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let lead = divisor.leading();
        let mut quot = vec![0.0; nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * dc;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    /// Quotient of a division known to be exact (remainder discarded).
    pub fn exact_div(&self, divisor: &Polynomial) -> Polynomial {
        self.div_rem(divisor).0
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Roots via the eigenvalues of the companion matrix, with a Newton
    /// polish for isolated roots.
    pub fn roots(&self) -> Vec<Complex<f64>> {
        let n = match self.degree() {
            None | Some(0) => return Vec::new(),
            Some(n) => n,
        };
        if n == 1 {
            return vec![Complex::new(-self.coeffs[0] / self.coeffs[1], 0.0)];
        }
        let lead = self.leading();
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let mut roots = linalg::eigenvalues(&comp);
        let snapshot = roots.clone();
        let dp = self.derivative();
        for (i, r) in roots.iter_mut().enumerate() {
            let isolated = snapshot
                .iter()
                .enumerate()
                .all(|(j, s)| j == i || (s - *r).norm() > CLUSTER_RADIUS * (1.0 + r.norm()));
            if isolated {
                *r = newton_polish(self, &dp, *r);
            }
        }
        for r in roots.iter_mut() {
            if r.im.abs() <= 1e-14 * (1.0 + r.re.abs()) {
                r.im = 0.0;
            }
        }
        roots
    }

    /// Roots grouped by multiplicity. Computed roots of a multiple root are
    /// scattered around it; a candidate group is accepted only if dividing
    /// the polynomial by `(x - c)^k` at the group mean `c` leaves a negligible
    /// relative remainder.
    pub fn root_clusters(&self) -> Vec<RootCluster> {
        self.cluster_roots(&self.roots())
    }

    /// Groups externally computed roots of `self` (for instance matrix
    /// eigenvalues when `self` is a characteristic polynomial).
    pub fn cluster_roots(&self, roots: &[Complex<f64>]) -> Vec<RootCluster> {
        let mut assigned = vec![false; roots.len()];
        let mut out = Vec::new();
        for seed in 0..roots.len() {
            if assigned[seed] {
                continue;
            }
            let mut accepted: Option<(Vec<usize>, Complex<f64>)> = None;
            let mut radius = CLUSTER_RADIUS;
            while radius >= 1e-9 {
                let members = gather(roots, &assigned, seed, radius);
                if members.len() == 1 {
                    break;
                }
                let c = members.iter().map(|&i| roots[i]).sum::<Complex<f64>>() / members.len() as f64;
                if verify_multiple_root(self, c, members.len()) {
                    accepted = Some((members, c));
                    break;
                }
                radius *= 0.1;
            }
            let (members, mut center) = accepted.unwrap_or_else(|| (vec![seed], roots[seed]));
            if center.im.abs() <= 1e-12 * (1.0 + center.re.abs()) {
                center.im = 0.0;
            }
            for &i in &members {
                assigned[i] = true;
            }
            out.push(RootCluster { center, multiplicity: members.len() });
        }
        out
    }

    /// Monic greatest common factor of two polynomials, found by matching
    /// root clusters within the cancellation tolerance.
    pub fn common_factor(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() {
            return other.monic();
        }
        if other.is_zero() {
            return self.monic();
        }
        let shared = match_clusters(&self.root_clusters(), &other.root_clusters());
        Polynomial::from_roots(&shared)
    }

    /// Monic least common multiple.
    pub fn lcm(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let g = self.common_factor(other);
        (self * &other.exact_div(&g)).monic()
    }
}

fn newton_polish(p: &Polynomial, dp: &Polynomial, mut r: Complex<f64>) -> Complex<f64> {
    let mut best = p.eval(r).norm();
    for _ in 0..4 {
        let d = dp.eval(r);
        if d.norm() == 0.0 {
            break;
        }
        let cand = r - p.eval(r) / d;
        let v = p.eval(cand).norm();
        if v < best {
            best = v;
            r = cand;
        } else {
            break;
        }
    }
    r
}

fn gather(roots: &[Complex<f64>], assigned: &[bool], seed: usize, radius: f64) -> Vec<usize> {
    let mut members = vec![seed];
    let mut grew = true;
    while grew {
        grew = false;
        for j in 0..roots.len() {
            if assigned[j] || members.contains(&j) {
                continue;
            }
            let near = members
                .iter()
                .any(|&i| (roots[i] - roots[j]).norm() <= radius * (1.0 + roots[i].norm()));
            if near {
                members.push(j);
                grew = true;
            }
        }
    }
    members
}

fn verify_multiple_root(p: &Polynomial, c: Complex<f64>, k: usize) -> bool {
    let mut q: Vec<Complex<f64>> = p.coeffs().iter().map(|&x| Complex::new(x, 0.0)).collect();
    for _ in 0..k {
        if q.len() < 2 {
            return false;
        }
        let scale = q.iter().rev().fold(0.0, |acc, z| acc * c.norm() + z.norm());
        // synthetic division by (x - c)
        let n = q.len() - 1;
        let mut quot = vec![Complex::new(0.0, 0.0); n];
        let mut acc = Complex::new(0.0, 0.0);
        for i in (0..=n).rev() {
            acc = acc * c + q[i];
            if i > 0 {
                quot[i - 1] = acc;
            }
        }
        if scale == 0.0 || acc.norm() > CLUSTER_VERIFY * scale {
            return false;
        }
        q = quot;
    }
    true
}

/// Roots (with multiplicity, conjugate-closed) shared by two cluster lists.
pub(crate) fn match_clusters(a: &[RootCluster], b: &[RootCluster]) -> Vec<Complex<f64>> {
    let mut used = vec![false; b.len()];
    let mut shared = Vec::new();
    for ca in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, cb) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (ca.center - cb.center).norm();
            if d <= CANCEL_ABS * ca.center.norm().max(1.0) && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            used[j] = true;
            let c = (ca.center + b[j].center) * 0.5;
            for _ in 0..ca.multiplicity.min(b[j].multiplicity) {
                shared.push(c);
            }
        }
    }
    shared
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 if a == 1.0 => write!(f, "x")?,
                1 => write!(f, "{a}x")?,
                _ if a == 1.0 => write!(f, "x^{k}")?,
                _ => write!(f, "{a}x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn difference_of_squares() {
        assert_eq!(&p(&[1.0, 1.0]) * &p(&[1.0, -1.0]), p(&[1.0, 0.0, -1.0]));
    }

    #[test]
    fn additive_identity() {
        assert_eq!(&p(&[0.0]) + &p(&[0.0, 3.0]), p(&[0.0, 3.0]));
    }

    #[test]
    fn double_lag_denominator() {
        let sq = &Polynomial::x_minus(0.8) * &Polynomial::x_minus(0.8);
        let want = [0.64, -1.6, 1.0];
        for (a, b) in sq.coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_polynomial_forms() {
        assert!(p(&[]).is_zero());
        assert!(p(&[0.0]).is_zero());
        assert!(p(&[1e-14, -1e-13]).is_zero());
        assert_eq!(p(&[]).degree(), None);
        assert_eq!(p(&[2.0, 0.0, 0.0]).degree(), Some(0));
    }

    #[test]
    fn clusters_detect_multiplicity() {
        let r = Complex::new(0.8, 0.0);
        let q = Polynomial::from_roots(&[r, r, r, Complex::new(0.5, 0.0)]);
        let mut cl = q.root_clusters();
        cl.sort_by(|a, b| a.center.re.total_cmp(&b.center.re));
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[1].multiplicity, 3);
        assert!((cl[1].center - r).norm() < 1e-10);
    }

    #[test]
    fn clusters_keep_close_distinct_roots_apart() {
        let q = Polynomial::from_roots(&[Complex::new(0.5, 0.0), Complex::new(0.5005, 0.0)]);
        assert_eq!(q.root_clusters().len(), 2);
    }

    #[test]
    fn lcm_of_shared_factors() {
        let a = Polynomial::from_roots(&[Complex::new(0.8, 0.0), Complex::new(0.8, 0.0)]);
        let b = &Polynomial::x_minus(0.8) * &Polynomial::x_minus(1.0);
        let l = a.lcm(&b);
        assert_eq!(l.degree(), Some(3));
        assert!(l.eval_real(1.0).abs() < 1e-12);
        assert!(l.eval_real(0.8).abs() < 1e-12);
    }

    #[test]
    fn div_rem_reconstructs() {
        let a = p(&[1.0, 2.0, 3.0, 4.0]);
        let d = p(&[-0.5, 1.0]);
        let (q, r) = a.div_rem(&d);
        let back = &(&q * &d) + &r;
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn degree_of_product_adds(
            a in proptest::collection::vec(-5.0f64..5.0, 1..6),
            b in proptest::collection::vec(-5.0f64..5.0, 1..6),
        ) {
            let pa = Polynomial::new(a);
            let pb = Polynomial::new(b);
            prop_assume!(!pa.is_zero() && !pb.is_zero());
            prop_assume!(pa.leading().abs() > 1e-3 && pb.leading().abs() > 1e-3);
            let prod = &pa * &pb;
            prop_assert_eq!(prod.degree(), Some(pa.degree().unwrap() + pb.degree().unwrap()));
        }
    }
}
