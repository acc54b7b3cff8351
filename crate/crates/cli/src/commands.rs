use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use nrf_core::dimpl::{self, RealizationBundle};
use nrf_core::factor::{self, closed_loop_maps, hinf_grid_norm, youla_shift, DoublyCoprime, YoulaShift};
use nrf_core::nalgebra::Complex;
use nrf_core::nrfsyn::{self, sparsity_sides, CertMode, NrfPair, SparsityTriple};
use nrf_core::simkit::{self, ScenarioFile};
use nrf_core::sstate::{self, StateSpace};
use nrf_core::{grid5, NrfError, RationalMatrix};

use crate::report::{clist, num, Report};

pub enum Plant {
    Ss(StateSpace),
    Tfm(RationalMatrix),
}

impl Plant {
    fn tfm(&self) -> RationalMatrix {
        match self {
            Plant::Ss(s) => sstate::ss_to_tf(s),
            Plant::Tfm(g) => g.clone(),
        }
    }

    fn realization(&self) -> Result<StateSpace> {
        match self {
            Plant::Ss(s) => Ok(s.clone()),
            Plant::Tfm(g) => Ok(sstate::minimal(&g.realize().context("realizing plant TFM")?)),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(report: &mut Report, path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    report.wrote(path);
    Ok(())
}

/// State-space if the object has an `"A"` field, rational matrix otherwise.
pub fn load_plant(path: &Path) -> Result<Plant> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing plant {}", path.display()))?;
    if value.get("A").is_some() {
        Ok(Plant::Ss(StateSpace::from_json(&text).with_context(|| format!("plant {}", path.display()))?))
    } else {
        Ok(Plant::Tfm(RationalMatrix::from_json(&text).with_context(|| format!("plant {}", path.display()))?))
    }
}

fn load_dcf(path: &Path) -> Result<DoublyCoprime> {
    DoublyCoprime::from_json(&read(path)?).with_context(|| format!("factorization {}", path.display()))
}

fn load_q(path: &Path) -> Result<RationalMatrix> {
    RationalMatrix::from_json(&read(path)?).with_context(|| format!("Youla parameter {}", path.display()))
}

fn load_nrf(path: &Path) -> Result<NrfPair> {
    NrfPair::from_json(&read(path)?).with_context(|| format!("NRF {}", path.display()))
}

/// Comma-separated, each real (`0.5`) or complex (`0.3+0.2i`).
fn parse_targets(s: &str) -> Result<Vec<Complex<f64>>> {
    s.split(',')
        .map(|t| t.trim().parse::<Complex<f64>>().map_err(|_| anyhow::anyhow!("bad target {t:?}")))
        .collect()
}

pub fn dcf(plant: &Path, targets: Option<&str>, out: &Path) -> Result<Report> {
    let mut rep = Report::default();
    let plant = load_plant(plant)?;
    let sys = plant.realization()?;
    let n = sys.order();
    let targets = match targets {
        Some(t) => parse_targets(t)?,
        None => vec![Complex::new(sys.domain.default_target(), 0.0); n],
    };
    let (f, l) = match factor::place_gains(&sys, &targets) {
        Ok(g) => g,
        Err(NrfError::PlacementFailed(why)) => {
            rep.line(format!("exact placement failed ({why}); keeping stable uncontrollable/unobservable modes"));
            factor::stabilizing_gains(&sys, &targets).context("factorization")?
        }
        Err(e) => return Err(e).context("factorization"),
    };
    let dcf = factor::dcf_from_ss(&sys, &f, &l).context("factorization")?;
    let check = dcf.validate(Some(&plant.tfm()))?;
    rep.line(format!("plant order {n}, inputs {}, outputs {}", dcf.inputs(), dcf.outputs()));
    rep.line(format!("bezout residual {}", num(check.bezout_residual)));
    rep.line(format!("plant residual {}", num(check.plant_residual)));
    for v in &check.violations {
        rep.violation(v.clone());
    }
    write(&mut rep, out, &dcf.to_json())?;
    Ok(rep)
}

pub fn nrf(dcf_path: &Path, q_path: &Path, patterns: Option<&Path>, out: &Path, grid: Option<usize>) -> Result<Report> {
    let mut rep = Report::default();
    let dcf = load_dcf(dcf_path)?;
    let q = load_q(q_path)?;
    let shift = youla_shift(&dcf, &q)?;
    rep.line(format!("shifted bezout residual {}", num(shift.bezout_residual(&dcf)?)));
    let pair = nrfsyn::nrf_from_dcf(&dcf, &shift)?;
    if let Some(p) = patterns {
        let triple = SparsityTriple::from_json(&read(p)?).with_context(|| format!("patterns {}", p.display()))?;
        report_correspondence(&mut rep, &pair, &shift, &triple)?;
    }
    if let Some(g) = grid {
        let maps = closed_loop_maps(&dcf, &shift)?;
        rep.line(format!("closed-loop grid norm ({g} points) {}", num(hinf_grid_norm(&maps, g)?)));
    }
    write(&mut rep, out, &pair.to_json())?;
    Ok(rep)
}

fn report_correspondence(rep: &mut Report, pair: &NrfPair, shift: &YoulaShift, triple: &SparsityTriple) -> Result<()> {
    let c = sparsity_sides(pair, shift, triple)?;
    rep.line(format!("conformance phi/gamma {}", c.nrf_side));
    rep.line(format!("conformance Y_Q/X_Q {}", c.youla_side));
    if c.nrf_side != c.youla_side {
        rep.violation("sparsity correspondence: the two sides disagree");
    }
    Ok(())
}

const HT_ROWS: [&str; 3] = ["u", "-u", "y"];
const HT_COLS: [&str; 3] = ["I", "Phi", "Gamma"];

pub fn check(nrf: &Path, plant: &Path) -> Result<Report> {
    let mut rep = Report::default();
    let pair = load_nrf(nrf)?;
    let plant = load_plant(plant)?;
    let g = plant.tfm();
    let audit = dimpl::verify_internal_stability_tfm(&pair, &g, None)?;
    let (m, p) = (pair.commands(), pair.measurements());
    let row_sizes = [m, m, p];
    let col_sizes = [m, m, p];
    let mut r0 = 0;
    for (bi, &rs) in row_sizes.iter().enumerate() {
        let mut c0 = 0;
        for (bj, &cs) in col_sizes.iter().enumerate() {
            let bad: Vec<(usize, usize)> = audit
                .unstable_entries
                .iter()
                .filter(|&&(i, j)| (r0..r0 + rs).contains(&i) && (c0..c0 + cs).contains(&j))
                .map(|&(i, j)| (i - r0 + 1, j - c0 + 1))
                .collect();
            let poles = if cs * rs == 0 {
                Vec::new()
            } else {
                audit.h_direct.submatrix(r0, c0, rs, cs).unstable_poles()?
            };
            let verdict = if bad.is_empty() { "stable" } else { "UNSTABLE" };
            rep.line(format!(
                "Ht[{}, {}] {verdict} unstable poles {} entries {bad:?}",
                HT_ROWS[bi],
                HT_COLS[bj],
                clist(&poles)
            ));
            c0 += cs;
        }
        r0 += rs;
    }
    if !audit.all_stable() {
        rep.violation(format!("{} entries of Ht have unstable poles", audit.unstable_entries.len()));
    }
    let sys = plant.realization()?;
    let ctrl = dimpl::assemble(&dimpl::realize_rows(&pair, None)?)?;
    let cl = dimpl::closed_loop_state_matrix(&sys, &ctrl)?;
    rep.line(format!(
        "A_CL {}x{} spectral radius {} (schur sigma_min {}, LU gap {})",
        cl.a_cl.nrows(),
        cl.a_cl.ncols(),
        num(cl.spectral_radius()),
        num(cl.certificate.schur_sigma_min),
        num(cl.certificate.lu_agreement)
    ));
    let unstable = cl.unstable_eigs();
    if !unstable.is_empty() {
        rep.violation(format!("A_CL unstable eigenvalues {}", clist(&unstable)));
    }
    Ok(rep)
}

pub fn realize(nrf: &Path, grouping: Option<&str>, out: &Path) -> Result<Report> {
    let mut rep = Report::default();
    let pair = load_nrf(nrf)?;
    let groups = grouping.map(dimpl::parse_grouping).transpose()?;
    let rows = dimpl::realize_rows(&pair, groups.as_deref())?;
    let orders: Vec<usize> = rows.iter().map(|r| r.order()).collect();
    let total: usize = orders.iter().sum();
    rep.line(format!("orders {orders:?}"));
    rep.line(format!("total order {total}"));
    if groups.is_some() {
        let rowwise: usize = dimpl::realize_rows(&pair, None)?.iter().map(|r| r.order()).sum();
        rep.line(format!("row-wise total order {rowwise}, grouping saves {}", rowwise as i64 - total as i64));
    }
    let ctrl = dimpl::assemble(&rows)?;
    let unstable = sstate::unstable_eigs(&ctrl.sys.a, ctrl.sys.domain);
    rep.line(format!("unstable controller modes {}", clist(&unstable)));
    write(&mut rep, out, &RealizationBundle::from_rows(&rows).to_json())?;
    Ok(rep)
}

pub fn cert(dcf: &Path, q: &Path, mode: CertMode) -> Result<Report> {
    let mut rep = Report::default();
    let dcf = load_dcf(dcf)?;
    let shift = youla_shift(&dcf, &load_q(q)?)?;
    let c = nrfsyn::certificate(&dcf, &shift, mode)?;
    rep.line(format!("mode {}", if mode == CertMode::Mr2 { "mr2" } else { "mr3" }));
    rep.line(format!("witness identically zero {}", c.witness.is_zero()));
    rep.line(format!("unstable poles {}", clist(&c.unstable_poles)));
    if !c.is_empty() {
        rep.violation(format!("{} unstable poles in the witness map", c.unstable_poles.len()));
    }
    Ok(rep)
}

pub fn simulate(scenario: &Path, out: &Path, seed: Option<u64>) -> Result<Report> {
    let mut rep = Report::default();
    let mut file = ScenarioFile::from_json(&read(scenario)?).with_context(|| format!("scenario {}", scenario.display()))?;
    if let Some(s) = seed {
        file.spec.seed = s;
    }
    let sc = file.build()?;
    let trace = simkit::simulate(&sc)?;
    write(&mut rep, out, &trace.to_csv_string()?)?;
    report_metrics(&mut rep, &trace, sc.spec.horizon.min(60));
    Ok(rep)
}

fn report_metrics(rep: &mut Report, trace: &simkit::SimTrace, settle: usize) {
    let m = simkit::trace_metrics(trace, settle);
    let list = |v: &[f64]| format!("[{}]", v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", "));
    rep.line(format!("steps {}", trace.len()));
    rep.line(format!("max |y| {}", list(&m.max_abs_y)));
    rep.line(format!("mean |y - r| from n={settle} {}", list(&m.tracking_error)));
    rep.line(format!("max |u| {}", list(&m.max_abs_u)));
    if m.diverged {
        rep.violation("trajectory exceeded the divergence bound");
    }
}

pub fn demo(name: &str, out: Option<&Path>, seed: u64, no_sim: bool, grid: Option<usize>) -> Result<Report> {
    if name != "grid5" {
        bail!("unknown demo {name:?} (available: grid5)");
    }
    let dir: PathBuf = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("grid5-demo"));
    let mut rep = Report::default();

    let plant = grid5::plant_ss();
    write(&mut rep, &dir.join("plant.json"), &plant.to_json())?;
    rep.line(format!("plant order {}", plant.order()));

    let dcf = grid5::reference_dcf();
    let check = dcf.validate(Some(&grid5::plant_tfm()))?;
    rep.line(format!("dcf bezout residual {}", num(check.bezout_residual)));
    for v in &check.violations {
        rep.violation(v.clone());
    }
    write(&mut rep, &dir.join("dcf.json"), &dcf.to_json())?;

    let q = grid5::youla_q();
    write(&mut rep, &dir.join("q.json"), &q.to_json())?;
    let shift = youla_shift(&dcf, &q)?;
    let pair = nrfsyn::nrf_from_dcf(&dcf, &shift)?;
    let dphi = pair.phi().max_coeff_diff(&grid5::expected_phi());
    let dgamma = pair.gamma().max_coeff_diff(&grid5::expected_gamma());
    match (dphi, dgamma) {
        (Some(a), Some(b)) if a <= 1e-9 && b <= 1e-9 => {
            rep.line(format!("nrf matches the reference pair (coefficient error {})", num(a.max(b))))
        }
        _ => rep.violation(format!("nrf differs from the reference pair ({dphi:?}, {dgamma:?})")),
    }
    let triple = grid5::patterns();
    report_correspondence(&mut rep, &pair, &shift, &triple)?;
    write(&mut rep, &dir.join("patterns.json"), &triple.to_json())?;
    write(&mut rep, &dir.join("nrf.json"), &pair.to_json())?;
    if let Some(g) = grid {
        let maps = closed_loop_maps(&dcf, &shift)?;
        rep.line(format!("closed-loop grid norm ({g} points) {}", num(hinf_grid_norm(&maps, g)?)));
    }

    let rows = dimpl::realize_rows(&pair, None)?;
    rep.line(format!("controller orders {:?}", rows.iter().map(|r| r.order()).collect::<Vec<_>>()));
    write(&mut rep, &dir.join("bundle.json"), &RealizationBundle::from_rows(&rows).to_json())?;
    let ctrl = dimpl::assemble(&rows)?;
    let cl = dimpl::closed_loop_state_matrix(&plant, &ctrl)?;
    rep.line(format!("A_CL {}x{} spectral radius {}", cl.a_cl.nrows(), cl.a_cl.ncols(), num(cl.spectral_radius())));
    let mut csv = Vec::new();
    cl.write_eigen_csv(&mut csv)?;
    write(&mut rep, &dir.join("eigenvalues.csv"), &String::from_utf8(csv)?)?;
    let unstable = cl.unstable_eigs();
    if !unstable.is_empty() {
        rep.violation(format!("A_CL unstable eigenvalues {}", clist(&unstable)));
    }
    if no_sim {
        rep.line("simulation skipped");
        return Ok(rep);
    }

    let spec = grid5::scenario_spec(seed, 100);
    let file = ScenarioFile { spec, plant, nrf: pair, grouping: None };
    write(&mut rep, &dir.join("scenario.json"), &file.to_json())?;
    let trace = simkit::simulate(&file.build()?)?;
    write(&mut rep, &dir.join("trace.csv"), &trace.to_csv_string()?)?;
    report_metrics(&mut rep, &trace, 60);
    let m = simkit::trace_metrics(&trace, 60);
    if m.max_abs_y.iter().any(|&y| y > 3.0) || m.tracking_error.iter().any(|&e| e > 0.15) {
        rep.violation("outputs left the expected envelope (max |y| <= 3, mean |y - 1| <= 0.15)");
    }
    Ok(rep)
}
