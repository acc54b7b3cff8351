use std::sync::LazyLock;

use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

use nrf_core::dimpl::{assemble, realize_rows, AssembledController};
use nrf_core::factor::{dcf_from_ss, stabilizing_gains, youla_shift};
use nrf_core::nrfsyn::{mr2_certificate, mr3_certificate, nrf_from_dcf, sparsity_correspondence};
use nrf_core::simkit::{simulate, Scenario, ScenarioSpec, SignalSpec, Signals, SimTrace};
use nrf_core::{grid5, Domain, RationalFunction, RationalMatrix, StateSpace};

const D: Domain = Domain::Discrete;

static GRID_CONTROLLER: LazyLock<AssembledController> = LazyLock::new(|| {
    let dcf = grid5::reference_dcf();
    let s = youla_shift(&dcf, &grid5::youla_q()).unwrap();
    let pair = nrf_from_dcf(&dcf, &s).unwrap();
    assemble(&realize_rows(&pair, None).unwrap()).unwrap()
});

fn run(spec: ScenarioSpec) -> SimTrace {
    simulate(&Scenario::new(spec, grid5::plant_ss(), GRID_CONTROLLER.clone()).unwrap()).unwrap()
}

fn step(at: usize, level: f64) -> Signals {
    Signals::Same(SignalSpec::Step { at, level })
}

fn scalar_q(c: f64, pole: f64) -> RationalMatrix {
    let q = RationalFunction::from_coeffs(&[c], &[-pole, 1.0]).unwrap();
    RationalMatrix::scalar_identity(5, &q, D)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loop_is_linear_in_exogenous_inputs(a in -2.0f64..2.0, b in -2.0f64..2.0, at in 0usize..30) {
        let horizon = 60;
        let base = ScenarioSpec { horizon, ..Default::default() };
        let r_only = run(ScenarioSpec { reference: step(0, a), ..base.clone() });
        let w_only = run(ScenarioSpec { w: step(at, b), ..base.clone() });
        let both = run(ScenarioSpec { reference: step(0, a), w: step(at, b), ..base });
        for n in 0..horizon {
            for i in 0..5 {
                let y = r_only.y[n][i] + w_only.y[n][i];
                prop_assert!((both.y[n][i] - y).abs() <= 1e-9 * (1.0 + y.abs()));
                let u = r_only.u[n][i] + w_only.u[n][i];
                prop_assert!((both.u[n][i] - u).abs() <= 1e-9 * (1.0 + u.abs()));
            }
        }
    }

    #[test]
    fn same_seed_same_trace(seed in any::<u64>()) {
        let spec = grid5::scenario_spec(seed, 40);
        let a = run(spec.clone()).to_csv_string().unwrap();
        let b = run(spec).to_csv_string().unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn diagonal_parameters_keep_the_grid_pattern(c in 0.1f64..1.0, pole in -0.6f64..0.6) {
        let dcf = grid5::reference_dcf();
        let s = youla_shift(&dcf, &scalar_q(c, pole)).unwrap();
        let pair = nrf_from_dcf(&dcf, &s).unwrap();
        prop_assert!(sparsity_correspondence(&pair, &s, &grid5::patterns()).unwrap());
        for i in 0..5 {
            prop_assert!(pair.phi().get(i, i).is_zero());
        }
    }

    #[test]
    fn mr3_detects_the_integrators_for_any_diagonal_parameter(c in 0.1f64..1.0, pole in -0.6f64..0.6) {
        let dcf = grid5::reference_dcf();
        let s = youla_shift(&dcf, &scalar_q(c, pole)).unwrap();
        let cert = mr3_certificate(&dcf, &s).unwrap();
        prop_assert_eq!(cert.unstable_poles.len(), 5);
        prop_assert!(cert.unstable_poles.iter().all(|p| (p - Complex::new(1.0, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn mr3_is_empty_for_stable_scalar_plants(pole in -0.9f64..0.9, gain in 0.1f64..2.0, q in -0.5f64..0.5) {
        let one = DMatrix::from_element(1, 1, 1.0);
        let plant = StateSpace::new(one.clone() * pole, one.clone() * gain, one, DMatrix::zeros(1, 1), D).unwrap();
        let (f, l) = stabilizing_gains(&plant, &[Complex::new(0.5, 0.0)]).unwrap();
        let dcf = dcf_from_ss(&plant, &f, &l).unwrap();
        let s = youla_shift(&dcf, &RationalMatrix::from_constant(&DMatrix::from_element(1, 1, q), D)).unwrap();
        prop_assert!(mr3_certificate(&dcf, &s).unwrap().is_empty());
    }
}

// Every right-coprime M of the grid plant vanishes at z = 1, so the
// first-representation witness never carries the integrators.
#[test]
fn mr2_witness_is_stable_for_state_space_factors() {
    let plant = grid5::plant_ss();
    for (lo, hi) in [(0.5, 0.5), (0.3, 0.7)] {
        let targets: Vec<Complex<f64>> = (0..9).map(|k| Complex::new(lo + (hi - lo) * k as f64 / 8.0, 0.0)).collect();
        let (f, l) = stabilizing_gains(&plant, &targets).unwrap();
        let dcf = dcf_from_ss(&plant, &f, &l).unwrap();
        let m1 = dcf.m.eval(Complex::new(1.0, 0.0)).unwrap();
        assert!(nrf_core::linalg::max_abs_c(&m1) < 1e-8);
        let s = youla_shift(&dcf, &grid5::youla_q()).unwrap();
        assert!(mr2_certificate(&dcf, &s).unwrap().is_empty());
        assert_eq!(mr3_certificate(&dcf, &s).unwrap().unstable_poles.len(), 5);
    }
}
