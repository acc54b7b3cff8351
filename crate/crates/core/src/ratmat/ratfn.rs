use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector};

use super::poly::Polynomial;
use super::Domain;
use crate::error::{NrfError, Result};
use crate::tol::{CANCEL_ABS, STABILITY_MARGIN};

/// Real-rational function `num / den` kept in normal form: monic
/// denominator, no common roots (within the cancellation tolerance), and the
/// zero function stored as `0 / 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(NrfError::DivisionByZeroFunction);
        }
        Ok(Self::normalized(num, den))
    }

    /// Builds from ascending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    /// Accepts `num / den` as already normalized (only the denominator is
    /// made monic). Used by parsers and by callers that know no cancellation
    /// is possible.
    pub fn from_parts_unchecked(num: Polynomial, den: Polynomial) -> Self {
        let lead = den.leading();
        RationalFunction { num: num.scale(1.0 / lead), den: den.monic() }
    }

    fn normalized(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.common_factor(&den);
        let (num, den) = if g.degree().unwrap_or(0) > 0 {
            (num.exact_div(&g), den.exact_div(&g))
        } else {
            (num, den)
        };
        Self::from_parts_unchecked(num, den)
    }

    pub fn zero() -> Self {
        RationalFunction { num: Polynomial::zero(), den: Polynomial::one() }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        RationalFunction { num: Polynomial::constant(c), den: Polynomial::one() }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction { num: p, den: Polynomial::one() }
    }

    /// `1 / (x - p)`
    pub fn first_order(p: f64) -> Self {
        RationalFunction { num: Polynomial::one(), den: Polynomial::x_minus(p) }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.num.degree().is_none_or(|n| n <= self.den.degree().unwrap_or(0))
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.degree().is_none_or(|n| n < self.den.degree().unwrap_or(0))
    }

    /// `deg den - deg num`; `None` for the zero function.
    pub fn relative_degree(&self) -> Option<isize> {
        let n = self.num.degree()? as isize;
        Some(self.den.degree().unwrap_or(0) as isize - n)
    }

    /// Limit at infinity of a proper function.
    pub fn gain_at_infinity(&self) -> Result<f64> {
        if !self.is_proper() {
            return Err(NrfError::NotProper);
        }
        if self.is_strictly_proper() {
            return Ok(0.0);
        }
        Ok(self.num.leading() / self.den.leading())
    }

    /// Value at `x`, or `None` at a pole.
    pub fn eval(&self, x: Complex<f64>) -> Option<Complex<f64>> {
        let d = self.den.eval(x);
        if d.norm() <= 1e-13 * self.den.eval_abs_scale(x) {
            return None;
        }
        Some(self.num.eval(x) / d)
    }

    pub fn poles(&self) -> Vec<Complex<f64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex<f64>> {
        self.num.roots()
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        RationalFunction { num: self.num.scale(s), den: self.den.clone() }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(NrfError::DivisionByZeroFunction);
        }
        Ok(Self::from_parts_unchecked(self.den.clone(), self.num.clone()))
    }

    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    /// Sum of the principal parts at poles that are unstable or within
    /// `margin` of the boundary, as `a / d_u` with `d_u` built from those
    /// poles. Found from `a d_s + c d_u = r`, where `r / den` is the strictly
    /// proper part and `den = d_u d_s`.
    pub fn unstable_part(&self, domain: Domain, margin: f64) -> RationalFunction {
        let clusters = self.den.root_clusters();
        let (mut unstable, mut stable) = (Vec::new(), Vec::new());
        for c in clusters {
            let bucket = if domain.is_unstable_within(c.center, margin) { &mut unstable } else { &mut stable };
            bucket.extend(std::iter::repeat_n(c.center, c.multiplicity));
        }
        if unstable.is_empty() || self.is_zero() {
            return RationalFunction::zero();
        }
        let du = Polynomial::from_roots(&unstable);
        let ds = Polynomial::from_roots(&stable);
        let (k, l) = (unstable.len(), stable.len());
        let r = self.num.div_rem(&(&du * &ds)).1;
        // columns: x^i d_s for i < k, then x^j d_u for j < l
        let n = k + l;
        let mut sys = DMatrix::zeros(n, n);
        for i in 0..k {
            for (t, &c) in ds.coeffs().iter().enumerate() {
                sys[(i + t, i)] = c;
            }
        }
        for j in 0..l {
            for (t, &c) in du.coeffs().iter().enumerate() {
                sys[(j + t, k + j)] = c;
            }
        }
        let rhs = DVector::from_fn(n, |i, _| r.coeff(i));
        let Some(sol) = sys.lu().solve(&rhs) else {
            // coprime by construction; a failure means the split is unusable
            return RationalFunction::from_parts_unchecked(r, &du * &ds);
        };
        let a = Polynomial::new(sol.rows(0, k).iter().copied().collect());
        if a.is_zero() {
            return RationalFunction::zero();
        }
        RationalFunction::from_parts_unchecked(a, du)
    }

    /// No pole in the unstable region, up to principal parts whose
    /// coefficients are below `CANCEL_ABS` relative to the function's size
    /// (remnants of cancellations missed in floating point).
    pub fn is_stable(&self, domain: Domain) -> bool {
        if !self.den.root_clusters().iter().any(|c| domain.is_unstable(c.center)) {
            return true;
        }
        let u = self.unstable_part(domain, STABILITY_MARGIN);
        let scale = 1.0 + self.num.max_abs_coeff() / self.den.max_abs_coeff();
        u.num.max_abs_coeff() <= CANCEL_ABS * scale
    }

    /// Largest coefficient difference of the normal forms; infinite when
    /// degrees differ.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for (p, q) in [(&self.num, &other.num), (&self.den, &other.den)] {
            if p.degree() != q.degree() {
                return f64::INFINITY;
            }
            for k in 0..p.coeffs().len() {
                worst = worst.max((p.coeff(k) - q.coeff(k)).abs());
            }
        }
        worst
    }

    fn add_signed(&self, rhs: &Self, sign: f64) -> Self {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.scale(sign);
        }
        if self.den == rhs.den {
            return Self::normalized(&self.num + &rhs.num.scale(sign), self.den.clone());
        }
        let g = self.den.common_factor(&rhs.den);
        let a1 = self.den.exact_div(&g);
        let a2 = rhs.den.exact_div(&g);
        let num = &(&self.num * &a2) + &(&rhs.num * &a1).scale(sign);
        let den = &(&g * &a1) * &a2;
        Self::normalized(num, den)
    }
}

impl Default for RationalFunction {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        self.add_signed(rhs, 1.0)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self.add_signed(rhs, -1.0)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        let trivial = |p: &Polynomial| p.degree().unwrap_or(0) == 0;
        if trivial(&self.den) && trivial(&rhs.den) {
            return RationalFunction::from_parts_unchecked(&self.num * &rhs.num, Polynomial::one());
        }
        // cancel across before multiplying to keep degrees low
        let g1 = self.num.common_factor(&rhs.den);
        let g2 = rhs.num.common_factor(&self.den);
        let (n1, d2) = (self.num.exact_div(&g1), rhs.den.exact_div(&g1));
        let (n2, d1) = (rhs.num.exact_div(&g2), self.den.exact_div(&g2));
        RationalFunction::from_parts_unchecked(&n1 * &n2, &d1 * &d2)
    }
}

/// Panics on division by the zero function; see [`RationalFunction::try_div`].
impl Div for &RationalFunction {
    type Output = RationalFunction;
    fn div(self, rhs: &RationalFunction) -> RationalFunction {
        self.try_div(rhs).expect("division by the zero rational function")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalFunction {
            type Output = RationalFunction;
            fn $m(self, rhs: RationalFunction) -> RationalFunction {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(n: &[f64], d: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(n, d).unwrap()
    }

    fn close(a: &Polynomial, b: &[f64], tol: f64) -> bool {
        let n = a.coeffs().len().max(b.len());
        (0..n).all(|k| (a.coeff(k) - b.get(k).copied().unwrap_or(0.0)).abs() <= tol)
    }

    #[test]
    fn youla_numerator_sum() {
        // 0.25/(z-0.5) + 0.8(z-1)/((z-0.2)(z-0.5))
        let a = rf(&[0.25], &[-0.5, 1.0]);
        let den = &Polynomial::x_minus(0.2) * &Polynomial::x_minus(0.5);
        let b = RationalFunction::new(Polynomial::new(vec![-0.8, 0.8]), den).unwrap();
        let s = &a + &b;
        assert!(close(s.num(), &[-0.85, 1.05], 1e-12));
        assert!(close(s.den(), &[0.1, -0.7, 1.0], 1e-12));
    }

    #[test]
    fn self_quotient_is_one() {
        let f = rf(&[2.0, 1.0], &[-3.0, 1.0]);
        let q = &f / &f;
        assert_eq!(q, RationalFunction::one());
    }

    #[test]
    fn exact_cancellation() {
        let a = rf(&[1.0], &[-1.0, 1.0]);
        let b = rf(&[-1.0, 1.0], &[1.0, 1.0]);
        let p = &a * &b;
        assert!(close(p.num(), &[1.0], 1e-12));
        assert!(close(p.den(), &[1.0, 1.0], 1e-12));
    }

    #[test]
    fn division_by_zero_function() {
        let f = rf(&[1.0], &[1.0]);
        assert!(matches!(f.try_div(&RationalFunction::zero()), Err(NrfError::DivisionByZeroFunction)));
        assert!(RationalFunction::from_coeffs(&[1.0], &[]).is_err());
    }

    #[test]
    fn properness_and_gain() {
        let f = rf(&[-1.0, 1.0], &[-0.5, 1.0]);
        assert!(f.is_proper() && !f.is_strictly_proper());
        assert_eq!(f.gain_at_infinity().unwrap(), 1.0);
        assert!(matches!(rf(&[0.0, 0.0, 1.0], &[1.0, 1.0]).gain_at_infinity(), Err(NrfError::NotProper)));
    }

    #[test]
    fn eval_at_pole_is_none() {
        let f = rf(&[1.0], &[-0.5, 1.0]);
        assert!(f.eval(Complex::new(0.5, 0.0)).is_none());
        assert!((f.eval(Complex::new(1.0, 0.0)).unwrap().re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_lag_difference_cancels() {
        // 0.2/(z-0.8) squared plus itself has den (z-0.8)^2
        let phi = rf(&[0.2], &[-0.8, 1.0]);
        let s = &(&phi * &phi) + &phi;
        assert!(close(s.num(), &[-0.12, 0.2], 1e-12));
        assert!(close(s.den(), &[0.64, -1.6, 1.0], 1e-12));
    }
}
