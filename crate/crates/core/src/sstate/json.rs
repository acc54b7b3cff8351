use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::StateSpace;
use crate::error::{NrfError, Result};
use crate::ratmat::Domain;

/// Wire form of a [`StateSpace`]. Matrices are lists of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceJson {
    pub domain: Domain,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_of(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(NrfError::DimensionMismatch(format!("{name} should be {nrows}x{ncols}")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(NrfError::InvalidData(format!("{name} has a non-finite entry")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<&StateSpace> for StateSpaceJson {
    fn from(s: &StateSpace) -> Self {
        StateSpaceJson { domain: s.domain, a: rows_of(&s.a), b: rows_of(&s.b), c: rows_of(&s.c), d: rows_of(&s.d) }
    }
}

impl TryFrom<StateSpaceJson> for StateSpace {
    type Error = NrfError;
    fn try_from(j: StateSpaceJson) -> Result<Self> {
        let n = j.a.len();
        // with n = 0 the input and output counts live only in D
        let p = if n > 0 { j.c.len() } else { j.d.len() };
        let m = if n > 0 {
            j.b.first().map_or(0, Vec::len)
        } else {
            j.d.first().map_or(0, Vec::len)
        };
        let a = matrix_of("A", &j.a, n, n)?;
        let b = if n == 0 { DMatrix::zeros(0, m) } else { matrix_of("B", &j.b, n, m)? };
        let c = if n == 0 { DMatrix::zeros(p, 0) } else { matrix_of("C", &j.c, p, n)? };
        let d = matrix_of("D", &j.d, p, m)?;
        StateSpace::new(a, b, c, d, j.domain)
    }
}

impl Serialize for StateSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateSpaceJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        StateSpace::try_from(StateSpaceJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl StateSpace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state space serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
