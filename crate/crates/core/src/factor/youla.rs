use nalgebra::Complex;
use rayon::prelude::*;

use super::{bezout_residual_of, DoublyCoprime};
use crate::error::{NrfError, Result};
use crate::linalg::{self, CMatrix};
use crate::probe;
use crate::ratmat::{Domain, RationalMatrix};

/// Factors shifted by a stable Youla parameter `Q`:
/// `X_Q = X + Q Mt`, `Xt_Q = Xt + M Q`, `Y_Q = Y - Q Nt`, `Yt_Q = Yt - N Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct YoulaShift {
    pub q: RationalMatrix,
    pub xq: RationalMatrix,
    pub xtq: RationalMatrix,
    pub yq: RationalMatrix,
    pub ytq: RationalMatrix,
}

impl YoulaShift {
    /// Residual of the generalized Bezout identity built from the shifted
    /// factors.
    pub fn bezout_residual(&self, dcf: &DoublyCoprime) -> Result<f64> {
        bezout_residual_of(&self.yq, &self.xq, &dcf.nt, &dcf.mt, &dcf.m, &self.xtq, &dcf.n, &self.ytq)
    }
}

pub fn youla_shift(dcf: &DoublyCoprime, q: &RationalMatrix) -> Result<YoulaShift> {
    let (m, p) = (dcf.inputs(), dcf.outputs());
    if q.shape() != (m, p) {
        return Err(NrfError::DimensionMismatch(format!("Q is {}x{}, expected {m}x{p}", q.rows(), q.cols())));
    }
    if q.domain() != dcf.domain() {
        return Err(NrfError::DomainMismatch);
    }
    if !q.is_proper() {
        return Err(NrfError::UnstableParameter("Q is not proper".into()));
    }
    if !q.is_stable() {
        let poles = q.unstable_poles().unwrap_or_default();
        return Err(NrfError::UnstableParameter(format!("Q has unstable poles {poles:?}")));
    }
    Ok(YoulaShift {
        xq: dcf.x.add(&q.mul(&dcf.mt)?)?,
        xtq: dcf.xt.add(&dcf.m.mul(q)?)?,
        yq: dcf.y.sub(&q.mul(&dcf.nt)?)?,
        ytq: dcf.yt.sub(&dcf.n.mul(q)?)?,
        q: q.clone(),
    })
}

/// `K_Q = Y_Q^-1 X_Q`, after checking that it agrees with `Xt_Q Yt_Q^-1`.
pub fn controller_tfm(shift: &YoulaShift) -> Result<RationalMatrix> {
    if !shift.yq.has_full_normal_rank() || !shift.ytq.has_full_normal_rank() {
        return Err(NrfError::SingularDenominator);
    }
    let k = shift.yq.invert().map_err(|_| NrfError::SingularDenominator)?.mul(&shift.xq)?;
    let dev = probe::max_over(k.domain(), |z| {
        let right = &shift.xtq.eval(z).ok()? * linalg::inverse_c(&shift.ytq.eval(z).ok()?)?;
        Some(probe::rel_diff(&k.eval(z).ok()?, &right))
    })?;
    if dev >= probe::tolerance() {
        return Err(NrfError::InvariantViolated(format!(
            "left and right controller forms differ by {dev:.3e}"
        )));
    }
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Output {
    Y,
    U,
    Z,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Input {
    R,
    W,
    Nu,
    Du,
}

impl Output {
    pub const ALL: [Output; 4] = [Output::Y, Output::U, Output::Z, Output::V];
    pub fn name(self) -> &'static str {
        match self {
            Output::Y => "y",
            Output::U => "u",
            Output::Z => "z",
            Output::V => "v",
        }
    }
}

impl Input {
    pub const ALL: [Input; 4] = [Input::R, Input::W, Input::Nu, Input::Du];
    pub fn name(self) -> &'static str {
        match self {
            Input::R => "r",
            Input::W => "w",
            Input::Nu => "nu",
            Input::Du => "du",
        }
    }
}

/// Closed-loop maps from `(r, w, nu)` and the command disturbance `du`
/// (injected as `u = Phi (u + du) + Gamma z`) to `(y, u, z, v)`, all affine
/// in `Q`:
///
/// ```text
///        r           w            nu           du
/// y   N X_Q       N Y_Q        I - N X_Q    -N (Y_Q - Y_Q^d)
/// u   M X_Q       M Y_Q - I    -M X_Q       -M (Y_Q - Y_Q^d)
/// z   I - N X_Q   -N Y_Q       N X_Q - I     N (Y_Q - Y_Q^d)
/// v   M X_Q       M Y_Q        -M X_Q       -M (Y_Q - Y_Q^d)
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopMaps {
    blocks: Vec<((Output, Input), RationalMatrix)>,
    pub inputs: usize,
    pub outputs: usize,
}

impl ClosedLoopMaps {
    pub fn get(&self, out: Output, inp: Input) -> &RationalMatrix {
        &self.blocks.iter().find(|(k, _)| *k == (out, inp)).expect("all blocks present").1
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Output, Input), &RationalMatrix)> {
        self.blocks.iter().map(|(k, v)| (*k, v))
    }

    pub fn domain(&self) -> Domain {
        self.blocks[0].1.domain()
    }

    /// Names of unstable blocks.
    pub fn unstable_blocks(&self) -> Vec<String> {
        self.iter()
            .filter(|(_, b)| !b.is_stable())
            .map(|((o, i), _)| format!("T^{{{}{}}}", o.name(), i.name()))
            .collect()
    }

    /// The `(y,u,z,v) x (r,w,nu)` table stacked into one matrix.
    pub fn stacked(&self) -> Result<RationalMatrix> {
        let rows: Vec<RationalMatrix> = Output::ALL
            .iter()
            .map(|&o| {
                let cols: Vec<&RationalMatrix> =
                    [Input::R, Input::W, Input::Nu].iter().map(|&i| self.get(o, i)).collect();
                RationalMatrix::hstack(&cols)
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&RationalMatrix> = rows.iter().collect();
        RationalMatrix::vstack(&refs)
    }

    /// Largest probe-point deviation from the textbook definitions built
    /// from `G` and `K` (`(I + GK)^-1` etc.), with the `du` column derived
    /// from `Phi = I - (Y_Q^d)^-1 Y_Q`.
    pub fn direct_deviation(&self, g: &RationalMatrix, k: &RationalMatrix, yq: &RationalMatrix) -> Result<f64> {
        let (m, p) = (self.inputs, self.outputs);
        probe::max_over(self.domain(), |z| {
            let gz = g.eval(z).ok()?;
            let kz = k.eval(z).ok()?;
            let yz = yq.eval(z).ok()?;
            let so = linalg::inverse_c(&(CMatrix::identity(p, p) + &gz * &kz))?;
            let si = linalg::inverse_c(&(CMatrix::identity(m, m) + &kz * &gz))?;
            let yd = CMatrix::from_diagonal(&yz.diagonal());
            // (I - Phi)^-1 Phi = Y_Q^-1 (Y_Q^d - Y_Q)
            let inj = linalg::inverse_c(&yz)? * (&yd - &yz);
            let ip = CMatrix::identity(p, p);
            let y = [&so * &gz * &kz, &so * &gz, so.clone(), &so * &gz * &inj];
            let u = [&kz * &so, -(&kz * &so * &gz), -(&kz * &so), &si * &inj];
            let zz = [&ip - &y[0], -&y[1], -&y[2], -&y[3]];
            let v = [u[0].clone(), &u[1] + CMatrix::identity(m, m), u[2].clone(), u[3].clone()];
            let mut worst = 0.0_f64;
            for (o, row) in Output::ALL.iter().zip([y, u, zz, v]) {
                for (i, want) in Input::ALL.iter().zip(row) {
                    let got = self.get(*o, *i).eval(z).ok()?;
                    worst = worst.max(probe::rel_diff(&want, &got));
                }
            }
            Some(worst)
        })
    }
}

/// All closed-loop blocks from the affine formulas; `(I + GK)^-1` is never
/// formed.
pub fn closed_loop_maps(dcf: &DoublyCoprime, shift: &YoulaShift) -> Result<ClosedLoopMaps> {
    let (m, p) = (dcf.inputs(), dcf.outputs());
    let d = dcf.domain();
    let im = RationalMatrix::identity(m, d);
    let ip = RationalMatrix::identity(p, d);
    let nx = dcf.n.mul(&shift.xq)?;
    let ny = dcf.n.mul(&shift.yq)?;
    let mx = dcf.m.mul(&shift.xq)?;
    let my = dcf.m.mul(&shift.yq)?;
    let off = shift.yq.off_diag_part()?;
    let n_off = dcf.n.mul(&off)?;
    let m_off = dcf.m.mul(&off)?;
    let blocks = vec![
        ((Output::Y, Input::R), nx.clone()),
        ((Output::Y, Input::W), ny.clone()),
        ((Output::Y, Input::Nu), ip.sub(&nx)?),
        ((Output::Y, Input::Du), n_off.neg()),
        ((Output::U, Input::R), mx.clone()),
        ((Output::U, Input::W), my.sub(&im)?),
        ((Output::U, Input::Nu), mx.neg()),
        ((Output::U, Input::Du), m_off.neg()),
        ((Output::Z, Input::R), ip.sub(&nx)?),
        ((Output::Z, Input::W), ny.neg()),
        ((Output::Z, Input::Nu), nx.sub(&ip)?),
        ((Output::Z, Input::Du), n_off),
        ((Output::V, Input::R), mx.clone()),
        ((Output::V, Input::W), my),
        ((Output::V, Input::Nu), mx.neg()),
        ((Output::V, Input::Du), m_off.neg()),
    ];
    Ok(ClosedLoopMaps { blocks, inputs: m, outputs: p })
}

/// Largest singular value of the stacked `(y,u,z,v) x (r,w,nu)` table over
/// `grid + 1` frequencies: `theta_k = pi k / grid` on the unit circle, or
/// `omega_k = tan(pi k / (2 grid))` on the imaginary axis plus the gain at
/// infinity. Grids are nested under doubling, so the estimate never
/// decreases when `grid` doubles.
pub fn hinf_grid_norm(maps: &ClosedLoopMaps, grid: usize) -> Result<f64> {
    let unstable = maps.unstable_blocks();
    if !unstable.is_empty() {
        return Err(NrfError::UnstableMap);
    }
    let h = maps.stacked()?;
    let grid = grid.max(1);
    let domain = h.domain();
    let point = |k: usize| -> Option<Complex<f64>> {
        match domain {
            Domain::Discrete => Some(Complex::from_polar(1.0, std::f64::consts::PI * k as f64 / grid as f64)),
            Domain::Continuous if k < grid => {
                Some(Complex::new(0.0, (std::f64::consts::FRAC_PI_2 * k as f64 / grid as f64).tan()))
            }
            Domain::Continuous => None,
        }
    };
    let values: Vec<Result<f64>> = (0..=grid)
        .into_par_iter()
        .map(|k| match point(k) {
            Some(z) => Ok(linalg::sigma_max_c(&h.eval(z)?)),
            None => Ok(linalg::singular_values(&h.gain_at_infinity()?).first().copied().unwrap_or(0.0)),
        })
        .collect();
    let mut best = 0.0_f64;
    for v in values {
        best = best.max(v?);
    }
    Ok(best)
}
