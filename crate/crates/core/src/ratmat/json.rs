use serde::{Deserialize, Serialize};

use super::{Domain, Polynomial, RationalFunction, RationalMatrix};
use crate::error::{NrfError, Result};

/// One entry on the wire: ascending numerator and denominator coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyPair {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

/// Wire form of a [`RationalMatrix`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalMatrixJson {
    pub domain: Domain,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<PolyPair>>,
}

impl From<&RationalFunction> for PolyPair {
    fn from(f: &RationalFunction) -> Self {
        let num = if f.is_zero() { vec![0.0] } else { f.num().coeffs().to_vec() };
        PolyPair { num, den: f.den().coeffs().to_vec() }
    }
}

impl TryFrom<&PolyPair> for RationalFunction {
    type Error = NrfError;
    fn try_from(p: &PolyPair) -> Result<Self> {
        if p.num.iter().chain(&p.den).any(|c| !c.is_finite()) {
            return Err(NrfError::InvalidData("non-finite coefficient".into()));
        }
        RationalFunction::new(Polynomial::new(p.num.clone()), Polynomial::new(p.den.clone()))
    }
}

impl From<RationalMatrix> for RationalMatrixJson {
    fn from(m: RationalMatrix) -> Self {
        (&m).into()
    }
}

impl From<&RationalMatrix> for RationalMatrixJson {
    fn from(m: &RationalMatrix) -> Self {
        RationalMatrixJson {
            domain: m.domain(),
            rows: m.rows(),
            cols: m.cols(),
            entries: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).into()).collect()).collect(),
        }
    }
}

impl TryFrom<RationalMatrixJson> for RationalMatrix {
    type Error = NrfError;
    fn try_from(j: RationalMatrixJson) -> Result<Self> {
        if j.entries.len() != j.rows || j.entries.iter().any(|r| r.len() != j.cols) {
            return Err(NrfError::DimensionMismatch(format!(
                "declared {}x{} but entries are shaped differently",
                j.rows, j.cols
            )));
        }
        let entries = j.entries.iter().flatten().map(RationalFunction::try_from).collect::<Result<_>>()?;
        RationalMatrix::new(j.rows, j.cols, entries, j.domain)
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalMatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = RationalMatrixJson::deserialize(d)?;
        RationalMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl RationalMatrix {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rational matrix serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
