//! Deterministic discrete-time simulation of the plant in closed loop with
//! an assembled distributed controller.
//!
//! Loop equations at every step `n`:
//! `y = C x + D v + nu`, `z = r - y`, `a = u + du`, `v = u + w`,
//! `u = C_K x_K + D_K1 a + D_K2 z`. The static part is solved exactly
//! through the inverse of the coupling matrix `Dtilde`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dimpl::{self, AssembledController};
use crate::error::{NrfError, Result};
use crate::nrfsyn::{NrfPair, SlsLikeRep};
use crate::ratmat::{Domain, RationalMatrix};
use crate::sstate::StateSpace;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Traces whose magnitude passes this bound are reported as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e3;

/// SplitMix64 mapped to the interval `[-bound, bound]`.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    state: u64,
    bound: f64,
}

impl Iterator for NoiseStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        if self.bound == 0.0 {
            return Some(0.0);
        }
        let u = (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        Some(self.bound * (2.0 * u - 1.0))
    }
}

/// Independent substream for `channel`: the state starts at
/// `seed + (channel + 1) * 0x9E3779B97F4A7C15`.
pub fn noise_stream(seed: u64, channel: usize, bound: f64) -> NoiseStream {
    let offset = (channel as u64).wrapping_add(1).wrapping_mul(GOLDEN);
    NoiseStream { state: seed.wrapping_add(offset), bound }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SignalSpec {
    Zero,
    Step { at: usize, level: f64 },
    Uniform { bound: f64 },
}

impl SignalSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            SignalSpec::Uniform { bound } if !(bound >= 0.0 && bound.is_finite()) => {
                Err(NrfError::InvalidData(format!("noise bound {bound} must be finite and nonnegative")))
            }
            SignalSpec::Step { level, .. } if !level.is_finite() => Err(NrfError::InvalidData("step level is not finite".into())),
            _ => Ok(()),
        }
    }

    fn samples(&self, horizon: usize, seed: u64, channel: usize) -> Vec<f64> {
        match *self {
            SignalSpec::Zero => vec![0.0; horizon],
            SignalSpec::Step { at, level } => (0..horizon).map(|n| if n >= at { level } else { 0.0 }).collect(),
            SignalSpec::Uniform { bound } => noise_stream(seed, channel, bound).take(horizon).collect(),
        }
    }
}

/// One spec for every channel, or one per channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Signals {
    Same(SignalSpec),
    PerChannel(Vec<SignalSpec>),
}

impl Default for Signals {
    fn default() -> Self {
        Signals::Same(SignalSpec::Zero)
    }
}

impl Signals {
    fn channels(&self, n: usize, what: &str) -> Result<Vec<SignalSpec>> {
        let specs = match self {
            Signals::Same(s) => vec![s.clone(); n],
            Signals::PerChannel(v) if v.len() == n => v.clone(),
            Signals::PerChannel(v) => {
                return Err(NrfError::InconsistentDimensions(format!("{what} has {} channels, expected {n}", v.len())))
            }
        };
        specs.iter().try_for_each(SignalSpec::validate)?;
        Ok(specs)
    }
}

/// Exogenous signals of a run. Noise channels are numbered globally in the
/// order `r`, `w`, `nu`, `du`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub horizon: usize,
    pub seed: u64,
    #[serde(default)]
    pub reference: Signals,
    #[serde(default)]
    pub w: Signals,
    #[serde(default)]
    pub nu: Signals,
    #[serde(default)]
    pub du: Signals,
}

/// Per-step exogenous samples, `[step][channel]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Exogenous {
    pub r: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub du: Vec<Vec<f64>>,
}

fn by_step(channels: Vec<Vec<f64>>, horizon: usize) -> Vec<Vec<f64>> {
    (0..horizon).map(|n| channels.iter().map(|c| c[n]).collect()).collect()
}

impl ScenarioSpec {
    /// Samples all signals for `p` outputs and `m` inputs.
    pub fn exogenous(&self, p: usize, m: usize) -> Result<Exogenous> {
        let mut channel = 0;
        let mut gen = |sig: &Signals, n: usize, what: &str| -> Result<Vec<Vec<f64>>> {
            let specs = sig.channels(n, what)?;
            let out = specs
                .iter()
                .map(|s| {
                    let v = s.samples(self.horizon, self.seed, channel);
                    channel += 1;
                    v
                })
                .collect();
            Ok(by_step(out, self.horizon))
        };
        Ok(Exogenous {
            r: gen(&self.reference, p, "reference")?,
            w: gen(&self.w, m, "w")?,
            nu: gen(&self.nu, p, "nu")?,
            du: gen(&self.du, m, "du")?,
        })
    }
}

/// Scenario JSON: the signal fields plus `plant`, `nrf` and an optional
/// 1-based `grouping`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub spec: ScenarioSpec,
    pub plant: StateSpace,
    pub nrf: NrfPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grouping: Option<Vec<Vec<usize>>>,
}

impl ScenarioFile {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Realizes the NRF row by row and builds the runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        let grouping = match &self.grouping {
            Some(g) => Some(
                g.iter()
                    .map(|grp| {
                        grp.iter()
                            .map(|&i| i.checked_sub(1).ok_or_else(|| NrfError::InvalidData("row numbers start at 1".into())))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let rows = dimpl::realize_rows(&self.nrf, grouping.as_deref())?;
        Scenario::new(self.spec.clone(), self.plant.clone(), dimpl::assemble(&rows)?)
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub plant: StateSpace,
    pub controller: AssembledController,
}

impl Scenario {
    pub fn new(spec: ScenarioSpec, plant: StateSpace, controller: AssembledController) -> Result<Self> {
        if plant.domain != Domain::Discrete || controller.sys.domain != Domain::Discrete {
            return Err(NrfError::NonDiscrete);
        }
        if controller.m != plant.inputs() || controller.p != plant.outputs() {
            return Err(NrfError::InconsistentDimensions(format!(
                "controller is for {} inputs and {} outputs, plant has {} and {}",
                controller.m,
                controller.p,
                plant.inputs(),
                plant.outputs()
            )));
        }
        spec.exogenous(plant.outputs(), plant.inputs())?;
        Ok(Scenario { spec, plant, controller })
    }
}

/// Signals per step, `[step][channel]`, plus the state trajectories
/// (`x[n]`, `xk[n]` are the states at the start of step `n`).
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub p: usize,
    pub m: usize,
    pub r: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub du: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub xk: Vec<Vec<f64>>,
}

impl SimTrace {
    fn empty(p: usize, m: usize) -> Self {
        SimTrace {
            p,
            m,
            r: vec![],
            w: vec![],
            nu: vec![],
            du: vec![],
            z: vec![],
            u: vec![],
            v: vec![],
            y: vec![],
            x: vec![],
            xk: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["n".to_string()];
        for (name, k) in
            [("r", self.p), ("w", self.m), ("nu", self.p), ("du", self.m), ("z", self.p), ("u", self.m), ("v", self.m), ("y", self.p)]
        {
            h.extend((1..=k).map(|i| format!("{name}{i}")));
        }
        h
    }

    /// One row per step; numbers in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for n in 0..self.len() {
            let mut rec = vec![n.to_string()];
            for sig in [&self.r, &self.w, &self.nu, &self.du, &self.z, &self.u, &self.v, &self.y] {
                rec.extend(sig[n].iter().map(|x| x.to_string()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Runs the loop for `spec.horizon` steps from zero initial states.
pub fn simulate(sc: &Scenario) -> Result<SimTrace> {
    let plant = &sc.plant;
    let ctrl = &sc.controller;
    let (m, p) = (plant.inputs(), plant.outputs());
    if plant.domain != Domain::Discrete {
        return Err(NrfError::NonDiscrete);
    }
    let cl = dimpl::closed_loop_state_matrix(plant, ctrl).map_err(|e| match e {
        NrfError::SingularCoupling(_) => NrfError::IllPosedStep,
        other => other,
    })?;
    let inv = &cl.dtilde_inv;
    let (bk1, bk2, _, _) = ctrl.split();
    let ex = sc.spec.exogenous(p, m)?;

    let mut x = DVector::zeros(plant.order());
    let mut xk = DVector::zeros(ctrl.order());
    let mut tr = SimTrace::empty(p, m);
    let k = 2 * m + p;
    for n in 0..sc.spec.horizon {
        let r = DVector::from_column_slice(&ex.r[n]);
        let w = DVector::from_column_slice(&ex.w[n]);
        let nu = DVector::from_column_slice(&ex.nu[n]);
        let du = DVector::from_column_slice(&ex.du[n]);

        let mut rhs = DVector::zeros(k);
        rhs.rows_mut(0, m).copy_from(&(-&du));
        rhs.rows_mut(m, p).copy_from(&(&plant.c * &x + &plant.d * &w + &nu - &r));
        rhs.rows_mut(m + p, m).copy_from(&(&ctrl.sys.c * &xk));
        let s = inv * rhs;
        let u = s.rows(m + p, m).into_owned();
        let a = &u + &du;
        let v = &u + &w;
        let y = &plant.c * &x + &plant.d * &v + &nu;
        let z = &r - &y;

        tr.x.push(to_vec(&x));
        tr.xk.push(to_vec(&xk));
        x = &plant.a * &x + &plant.b * &v;
        xk = &ctrl.sys.a * &xk + &bk1 * &a + &bk2 * &z;
        tr.r.push(to_vec(&r));
        tr.w.push(to_vec(&w));
        tr.nu.push(to_vec(&nu));
        tr.du.push(to_vec(&du));
        tr.z.push(to_vec(&z));
        tr.u.push(to_vec(&u));
        tr.v.push(to_vec(&v));
        tr.y.push(to_vec(&y));
    }
    Ok(tr)
}

/// Run of the beta-iteration implementation
/// `beta = beta_phi (beta + d_beta) + beta_gamma z`, `u = u_beta beta + u_z z`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaTrace {
    /// Loop signals; `du` is unused and kept at zero.
    pub loop_trace: SimTrace,
    pub beta: Vec<Vec<f64>>,
    pub dbeta: Vec<Vec<f64>>,
}

impl BetaTrace {
    pub fn max_abs_beta(&self) -> f64 {
        max_abs(&self.beta)
    }

    pub fn beta_diverged(&self) -> bool {
        diverged(&self.beta)
    }
}

/// Simulates the beta iteration built from `rep`. The `du` signals of
/// `spec` drive `d_beta` (one channel per output).
pub fn simulate_beta(plant: &StateSpace, rep: &SlsLikeRep, spec: &ScenarioSpec) -> Result<BetaTrace> {
    if plant.domain != Domain::Discrete {
        return Err(NrfError::NonDiscrete);
    }
    let (m, p) = (plant.inputs(), plant.outputs());
    let top = RationalMatrix::hstack(&[&rep.beta_phi, &rep.beta_gamma])?;
    let bottom = RationalMatrix::hstack(&[&rep.u_beta, &rep.u_z])?;
    let tfm = RationalMatrix::vstack(&[&top, &bottom])?;
    let ctrl = dimpl::realize_matrix(&tfm, p)?;
    let k = &ctrl.sys;
    let nk = k.order();
    let c1 = k.c.view((0, 0), (p, nk)).into_owned();
    let c2 = k.c.view((p, 0), (m, nk)).into_owned();
    let d11 = k.d.view((0, 0), (p, p)).into_owned();
    let d12 = k.d.view((0, p), (p, p)).into_owned();
    let d21 = k.d.view((p, 0), (m, p)).into_owned();
    let d22 = k.d.view((p, p), (m, p)).into_owned();
    let bk1 = k.b.view((0, 0), (nk, p)).into_owned();
    let bk2 = k.b.view((0, p), (nk, p)).into_owned();

    // unknowns [beta; u; z]
    let dim = 2 * p + m;
    let mut l = DMatrix::identity(dim, dim);
    l.view_mut((0, 0), (p, p)).copy_from(&(DMatrix::identity(p, p) - &d11));
    l.view_mut((0, p + m), (p, p)).copy_from(&(-&d12));
    l.view_mut((p, 0), (m, p)).copy_from(&(-&d21));
    l.view_mut((p, p + m), (m, p)).copy_from(&(-&d22));
    l.view_mut((p + m, p), (p, m)).copy_from(&plant.d);
    let lu = l.lu();
    if !lu.is_invertible() {
        return Err(NrfError::IllPosedStep);
    }

    let ex = spec.exogenous(p, m)?;
    let db = ScenarioSpec { horizon: spec.horizon, seed: spec.seed, ..Default::default() };
    let dbeta = match &spec.du {
        Signals::PerChannel(v) if v.len() != p => {
            return Err(NrfError::InconsistentDimensions(format!("d_beta needs {p} channels")))
        }
        sig => ScenarioSpec { du: sig.clone(), ..db }.exogenous(0, p)?.du,
    };

    let mut x = DVector::zeros(plant.order());
    let mut xk = DVector::zeros(nk);
    let mut tr = SimTrace::empty(p, m);
    let mut beta_tr = Vec::with_capacity(spec.horizon);
    for n in 0..spec.horizon {
        let r = DVector::from_column_slice(&ex.r[n]);
        let w = DVector::from_column_slice(&ex.w[n]);
        let nu = DVector::from_column_slice(&ex.nu[n]);
        let db = DVector::from_column_slice(&dbeta[n]);
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, p).copy_from(&(&c1 * &xk + &d11 * &db));
        rhs.rows_mut(p, m).copy_from(&(&c2 * &xk + &d21 * &db));
        rhs.rows_mut(p + m, p).copy_from(&(&r - &plant.c * &x - &plant.d * &w - &nu));
        let sol = lu.solve(&rhs).ok_or(NrfError::IllPosedStep)?;
        let beta = sol.rows(0, p).into_owned();
        let u = sol.rows(p, m).into_owned();
        let v = &u + &w;
        let y = &plant.c * &x + &plant.d * &v + &nu;
        let z = &r - &y;
        let a = &beta + &db;

        tr.x.push(to_vec(&x));
        tr.xk.push(to_vec(&xk));
        x = &plant.a * &x + &plant.b * &v;
        xk = &k.a * &xk + &bk1 * &a + &bk2 * &z;
        tr.r.push(to_vec(&r));
        tr.w.push(to_vec(&w));
        tr.nu.push(to_vec(&nu));
        tr.du.push(vec![0.0; m]);
        tr.z.push(to_vec(&z));
        tr.u.push(to_vec(&u));
        tr.v.push(to_vec(&v));
        tr.y.push(to_vec(&y));
        beta_tr.push(to_vec(&beta));
    }
    Ok(BetaTrace { loop_trace: tr, beta: beta_tr, dbeta })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceMetrics {
    pub max_abs_y: Vec<f64>,
    /// Mean `|y - r|` over `settle_from..horizon`.
    pub tracking_error: Vec<f64>,
    pub max_abs_u: Vec<f64>,
    pub diverged: bool,
}

fn max_abs(sig: &[Vec<f64>]) -> f64 {
    sig.iter().flatten().fold(0.0_f64, |acc, x| if x.is_finite() { acc.max(x.abs()) } else { f64::INFINITY })
}

fn diverged(sig: &[Vec<f64>]) -> bool {
    !(max_abs(sig) <= DIVERGENCE_BOUND)
}

fn per_channel_max(sig: &[Vec<f64>], k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| sig.iter().map(|s| s[i]).fold(0.0_f64, |acc, x| if x.is_finite() { acc.max(x.abs()) } else { f64::INFINITY }))
        .collect()
}

pub fn trace_metrics(t: &SimTrace, settle_from: usize) -> TraceMetrics {
    let window = settle_from.min(t.len())..t.len();
    let count = window.len();
    let tracking_error = (0..t.p)
        .map(|i| {
            if count == 0 {
                return 0.0;
            }
            window.clone().map(|n| (t.y[n][i] - t.r[n][i]).abs()).sum::<f64>() / count as f64
        })
        .collect();
    TraceMetrics {
        max_abs_y: per_channel_max(&t.y, t.p),
        tracking_error,
        max_abs_u: per_channel_max(&t.u, t.m),
        diverged: diverged(&t.y) || diverged(&t.u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{closed_loop_maps, dcf_from_ss, place_gains, youla_shift, Input, Output};
    use crate::grid5;
    use crate::nrfsyn::{nrf_from_dcf, sls_like_rep};
    use nalgebra::Complex;

    fn grid_scenario(spec: ScenarioSpec) -> Scenario {
        let dcf = grid5::reference_dcf();
        let s = youla_shift(&dcf, &grid5::youla_q()).unwrap();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        let ctrl = dimpl::assemble(&dimpl::realize_rows(&pair, None).unwrap()).unwrap();
        Scenario::new(spec, grid5::plant_ss(), ctrl).unwrap()
    }

    #[test]
    fn splitmix_reference_value() {
        // SplitMix64 from state 0 first yields 0xE220A8397B1DCDAF
        let got = NoiseStream { state: 0, bound: 1.0 }.next().unwrap();
        let want = 2.0 * ((0xE220_A839_7B1D_CDAFu64 >> 11) as f64 / (1u64 << 53) as f64) - 1.0;
        assert_eq!(got, want);
    }

    #[test]
    fn zero_bound_is_zero() {
        assert!(noise_stream(7, 3, 0.0).take(100).all(|x| x == 0.0 && x.is_sign_positive()));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = noise_stream(42, 1, 0.05).take(50).collect();
        let b: Vec<f64> = noise_stream(42, 1, 0.05).take(50).collect();
        let c: Vec<f64> = noise_stream(42, 2, 0.05).take(50).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|x| x.abs() <= 0.05));
    }

    #[test]
    fn empirical_mean_is_small() {
        let mean = noise_stream(42, 0, 0.05).take(100_000).sum::<f64>() / 1e5;
        assert!(mean.abs() < 0.002, "{mean}");
    }

    #[test]
    fn signal_json_forms() {
        let s: Signals = serde_json::from_str(r#"{"kind":"step","at":3,"level":2.0}"#).unwrap();
        assert_eq!(s, Signals::Same(SignalSpec::Step { at: 3, level: 2.0 }));
        let s: Signals = serde_json::from_str(r#"[{"kind":"zero"},{"kind":"uniform","bound":0.1}]"#).unwrap();
        assert!(matches!(s, Signals::PerChannel(ref v) if v.len() == 2));
        let bad = Signals::Same(SignalSpec::Uniform { bound: -1.0 });
        assert!(bad.channels(1, "nu").is_err());
    }

    #[test]
    fn zero_scenario_gives_zero_trace() {
        let sc = grid_scenario(ScenarioSpec { horizon: 30, ..Default::default() });
        let t = simulate(&sc).unwrap();
        assert_eq!(t.len(), 30);
        assert!(t.y.iter().chain(&t.u).flatten().all(|&x| x == 0.0));
        let m = trace_metrics(&t, 10);
        assert!(m.max_abs_y.iter().all(|&x| x == 0.0) && !m.diverged);
    }

    #[test]
    fn loop_equations_hold() {
        let sc = grid_scenario(grid5::scenario_spec(42, 50));
        let t = simulate(&sc).unwrap();
        for n in 0..t.len() {
            for i in 0..5 {
                assert_eq!(t.z[n][i], t.r[n][i] - t.y[n][i]);
                assert_eq!(t.v[n][i], t.u[n][i] + t.w[n][i]);
            }
        }
    }

    #[test]
    fn grid_scenario_tracks() {
        let sc = grid_scenario(grid5::scenario_spec(42, 100));
        let t = simulate(&sc).unwrap();
        let m = trace_metrics(&t, 60);
        assert!(m.max_abs_y.iter().all(|&x| x <= 3.0), "{:?}", m.max_abs_y);
        assert!(m.tracking_error.iter().all(|&e| e <= 0.15), "{:?}", m.tracking_error);
        let again = simulate(&sc).unwrap();
        assert_eq!(t.to_csv_string().unwrap(), again.to_csv_string().unwrap());
        assert!(t.to_csv_string().unwrap().starts_with("n,r1,r2,r3,r4,r5,w1,"));
    }

    #[test]
    fn scalar_step_matches_dc_gain() {
        let d = Domain::Discrete;
        let one = DMatrix::from_element(1, 1, 1.0);
        let plant = StateSpace::new(one.clone() * 0.5, one.clone(), one, DMatrix::zeros(1, 1), d).unwrap();
        let (f, l) = place_gains(&plant, &[Complex::new(0.3, 0.0)]).unwrap();
        let dcf = dcf_from_ss(&plant, &f, &l).unwrap();
        let q = RationalMatrix::from_constant(&DMatrix::from_element(1, 1, 0.4), d);
        let s = youla_shift(&dcf, &q).unwrap();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        let ctrl = dimpl::assemble(&dimpl::realize_rows(&pair, None).unwrap()).unwrap();
        let spec = ScenarioSpec { horizon: 200, reference: Signals::Same(SignalSpec::Step { at: 0, level: 1.0 }), ..Default::default() };
        let t = simulate(&Scenario::new(spec, plant, ctrl).unwrap()).unwrap();
        let maps = closed_loop_maps(&dcf, &s).unwrap();
        let dc = maps.get(Output::Y, Input::R).eval(Complex::new(1.0, 0.0)).unwrap()[(0, 0)].re;
        assert!((t.y[199][0] - dc).abs() < 1e-6, "{} vs {dc}", t.y[199][0]);
    }

    #[test]
    fn continuous_plant_rejected() {
        let sc = grid_scenario(ScenarioSpec::default());
        let mut plant = sc.plant.clone();
        plant.domain = Domain::Continuous;
        assert!(matches!(Scenario::new(sc.spec.clone(), plant, sc.controller.clone()), Err(NrfError::NonDiscrete)));
    }

    #[test]
    fn beta_iteration_diverges_while_nrf_stays_bounded() {
        let dcf = grid5::reference_dcf();
        let s = youla_shift(&dcf, &grid5::youla_q()).unwrap();
        let rep = sls_like_rep(&dcf, &s).unwrap();
        let spec = grid5::scenario_spec(42, 3000);
        let bt = simulate_beta(&grid5::plant_ss(), &rep, &spec).unwrap();
        assert!(bt.beta_diverged(), "max |beta| = {}", bt.max_abs_beta());
        assert!(!trace_metrics(&bt.loop_trace, 0).diverged);
        let nrf = simulate(&grid_scenario(spec)).unwrap();
        assert!(!trace_metrics(&nrf, 0).diverged);
    }
}
