//! The five-node grid example: plant `G = U^-1 V` with `U = I - phi_G B`,
//! `V = gamma_G I`, `phi_G = 0.2/(z-0.8)`, `gamma_G = 1/(z-1)`, where `B`
//! is the directed interconnection graph with edges 1->2, 1->3, 2->3, 1->4
//! and 1->5.

use nalgebra::DMatrix;

use crate::factor::DoublyCoprime;
use crate::nrfsyn::SparsityTriple;
use crate::ratmat::{Domain, Polynomial, RationalFunction, RationalMatrix, SparsityPattern};
use crate::simkit::{ScenarioSpec, SignalSpec, Signals};
use crate::sstate::StateSpace;

const D: Domain = Domain::Discrete;
pub const NODES: usize = 5;

/// Incoming edges per node (0-based): `EDGES[i]` lists `j` with `B[i][j] = 1`.
pub const EDGES: [&[usize]; NODES] = [&[], &[0], &[0, 1], &[0], &[0]];

fn rf(num: &[f64], den: &[f64]) -> RationalFunction {
    RationalFunction::from_coeffs(num, den).expect("nonzero denominator")
}

/// `0.2/(z-0.8)`
pub fn phi_g() -> RationalFunction {
    rf(&[0.2], &[-0.8, 1.0])
}

/// `1/(z-1)`
pub fn gamma_g() -> RationalFunction {
    RationalFunction::first_order(1.0)
}

pub fn adjacency() -> SparsityPattern {
    SparsityPattern::from_fn(NODES, NODES, |i, j| EDGES[i].contains(&j))
}

/// `U = I - phi_G B`
pub fn u_matrix() -> RationalMatrix {
    let phi = phi_g();
    let b = adjacency();
    RationalMatrix::from_fn(NODES, NODES, D, |i, j| {
        if i == j {
            RationalFunction::one()
        } else if b.get(i, j) {
            -&phi
        } else {
            RationalFunction::zero()
        }
    })
}

/// `U^-1 = I + phi_G B + phi_G^2 B^2` (B is nilpotent of index 3).
pub fn u_inverse() -> RationalMatrix {
    let phi = phi_g();
    let phi2 = &phi * &phi;
    let b = adjacency();
    RationalMatrix::from_fn(NODES, NODES, D, |i, j| {
        if i == j {
            RationalFunction::one()
        } else if (i, j) == (2, 0) {
            &phi2 + &phi
        } else if b.get(i, j) {
            phi.clone()
        } else {
            RationalFunction::zero()
        }
    })
}

pub fn plant_tfm() -> RationalMatrix {
    u_inverse().scale_by(&gamma_g())
}

/// Order-9 realization: an integrator `xi_i` per node and one lag `eta_i`
/// for each node with incoming edges, fed by the sum of incoming outputs.
///
/// `xi_i+ = xi_i + u_i`, `eta_i+ = 0.8 eta_i + sum_{j in in(i)} y_j`,
/// `y_i = xi_i + 0.2 eta_i`.
pub fn plant_ss() -> StateSpace {
    let lag_of: Vec<Option<usize>> = (0..NODES)
        .scan(NODES, |next, i| {
            Some(if EDGES[i].is_empty() {
                None
            } else {
                *next += 1;
                Some(*next - 1)
            })
        })
        .collect();
    let n = NODES + lag_of.iter().flatten().count();
    // y = Cy x
    let mut c = DMatrix::zeros(NODES, n);
    for i in 0..NODES {
        c[(i, i)] = 1.0;
        if let Some(k) = lag_of[i] {
            c[(i, k)] = 0.2;
        }
    }
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, NODES);
    for i in 0..NODES {
        a[(i, i)] = 1.0;
        b[(i, i)] = 1.0;
        if let Some(k) = lag_of[i] {
            a[(k, k)] = 0.8;
            for &j in EDGES[i] {
                for col in 0..n {
                    a[(k, col)] += c[(j, col)];
                }
            }
        }
    }
    StateSpace::new(a, b, c, DMatrix::zeros(NODES, NODES), D).expect("consistent dimensions")
}

/// The published doubly coprime factorization.
pub fn reference_dcf() -> DoublyCoprime {
    let half = Polynomial::x_minus(0.5);
    let over = |num: &[f64]| RationalFunction::new(Polynomial::new(num.to_vec()), half.clone()).unwrap();
    let i5 = |f: &RationalFunction| RationalMatrix::scalar_identity(NODES, f, D);
    let uinv = u_inverse();
    let u = u_matrix();
    DoublyCoprime {
        m: u.scale_by(&over(&[-1.0, 1.0])),
        n: i5(&over(&[1.0])),
        mt: i5(&over(&[-1.0, 1.0])),
        nt: uinv.scale_by(&over(&[1.0])),
        x: i5(&over(&[0.25])),
        y: uinv.scale_by(&over(&[0.0, 1.0])),
        xt: u.scale_by(&over(&[0.25])),
        yt: i5(&over(&[0.0, 1.0])),
    }
}

/// `Q = 0.8/(z-0.2) I_5`
pub fn youla_q() -> RationalMatrix {
    RationalMatrix::scalar_identity(NODES, &rf(&[0.8], &[-0.2, 1.0]), D)
}

/// Sensing pattern: each node measures only its own output. Communication
/// pattern: the plant's interconnection graph.
pub fn patterns() -> SparsityTriple {
    SparsityTriple::new(SparsityPattern::diagonal(NODES), adjacency())
}

/// Expected `Phi`: `-0.2/(z-0.8)` on the graph edges except `(3,1)`, which
/// carries `(-0.2z + 0.12)/(z-0.8)^2`.
pub fn expected_phi() -> RationalMatrix {
    let lag = rf(&[-0.2], &[-0.8, 1.0]);
    let two_hop = rf(&[0.12, -0.2], &[0.64, -1.6, 1.0]);
    let b = adjacency();
    RationalMatrix::from_fn(NODES, NODES, D, |i, j| {
        if (i, j) == (2, 0) {
            two_hop.clone()
        } else if b.get(i, j) {
            lag.clone()
        } else {
            RationalFunction::zero()
        }
    })
}

/// Expected `Gamma = (1.05z - 0.85)/(z^2 - 0.2z - 0.8) I_5`.
pub fn expected_gamma() -> RationalMatrix {
    RationalMatrix::scalar_identity(NODES, &rf(&[-0.85, 1.05], &[-0.8, -0.2, 1.0]), D)
}

/// Step reference of ones, a 0.5 step input disturbance on node 1 from
/// n = 20, and uniform sensor and command noise bounded by 0.05.
pub fn scenario_spec(seed: u64, horizon: usize) -> ScenarioSpec {
    let mut w = vec![SignalSpec::Zero; NODES];
    w[0] = SignalSpec::Step { at: 20, level: 0.5 };
    ScenarioSpec {
        horizon,
        seed,
        reference: Signals::Same(SignalSpec::Step { at: 0, level: 1.0 }),
        w: Signals::PerChannel(w),
        nu: Signals::Same(SignalSpec::Uniform { bound: 0.05 }),
        du: Signals::Same(SignalSpec::Uniform { bound: 0.05 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{probe, sstate};

    #[test]
    fn realization_matches_tfm() {
        let s = plant_ss();
        assert_eq!(s.order(), 9);
        let g = plant_tfm();
        let dev = probe::max_over(D, |z| Some(probe::rel_diff(&g.eval(z).ok()?, &s.eval(z)?))).unwrap();
        assert!(dev < 1e-12);
        assert!(sstate::is_stabilizable(&s) && sstate::is_detectable(&s));
    }

    #[test]
    fn entries_of_plant() {
        let g = plant_tfm();
        assert!(g.get(0, 0).max_diff(&gamma_g()) < 1e-14);
        let want = &(&(&phi_g() * &phi_g()) + &phi_g()) * &gamma_g();
        assert!(g.get(2, 0).max_diff(&want) < 1e-12);
    }
}
