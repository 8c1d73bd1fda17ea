//! JSON schemas for polytopes, PL functions and extremal reports.
//!
//! Rationals travel as strings (`"p/q"` or decimal); plain JSON numbers are
//! also accepted on input.

use crate::error::{Error, Result};
use crate::extremal::{AffineFunc, ExtremalData};
use crate::plfunc::{PLFunc, SimplePL};
use crate::polytope::Polytope;
use crate::rational::{self, Rational};
use num::BigInt;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub dimension: usize,
    #[serde(with = "rational::serde_int_rows")]
    pub normals: Vec<Vec<BigInt>>,
    #[serde(with = "rational::serde_vec")]
    pub offsets: Vec<Rational>,
}

impl From<&Polytope> for PolytopeJson {
    fn from(p: &Polytope) -> Self {
        Self {
            dimension: p.dim(),
            normals: p.normals().to_vec(),
            offsets: p.offsets().to_vec(),
        }
    }
}

impl TryFrom<PolytopeJson> for Polytope {
    type Error = Error;
    fn try_from(j: PolytopeJson) -> Result<Self> {
        Polytope::new(j.dimension, j.normals, j.offsets)
    }
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn parse_polytope_json(text: &str) -> Result<PolytopeJson> {
    serde_json::from_str(text).map_err(parse_err)
}

pub fn polytope_to_json(p: &Polytope) -> String {
    serde_json::to_string(&PolytopeJson::from(p)).expect("serializable")
}

/// `{"pieces": [{"A": [...], "a": "p/q"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlJson {
    pub pieces: Vec<AffineFunc>,
}

/// `{"a": [...], "c": "p/q"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplePlJson {
    #[serde(with = "rational::serde_vec")]
    pub a: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
}

impl From<&SimplePL> for SimplePlJson {
    fn from(v: &SimplePL) -> Self {
        Self {
            a: v.slope().to_vec(),
            c: v.offset().clone(),
        }
    }
}

impl From<&PLFunc> for PlJson {
    fn from(f: &PLFunc) -> Self {
        Self {
            pieces: f.pieces().to_vec(),
        }
    }
}

/// Accepts either the full PL form or the simple shorthand.
pub fn parse_pl_json(text: &str) -> Result<PLFunc> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    if value.get("pieces").is_some() {
        let j: PlJson = serde_json::from_value(value).map_err(parse_err)?;
        PLFunc::new(j.pieces)
    } else {
        let j: SimplePlJson = serde_json::from_value(value).map_err(parse_err)?;
        Ok(SimplePL::new(j.a, j.c)?.to_pl())
    }
}

/// `{"rbar": "p/q", "theta": {"A": [...], "a": "p/q"}, "positive_on_P": bool}`
/// plus the exact `s`, volume and boundary mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalReport {
    #[serde(with = "rational::serde_str")]
    pub rbar: Rational,
    pub theta: AffineFunc,
    #[serde(rename = "positive_on_P")]
    pub positive_on_p: bool,
    pub s: AffineFunc,
    #[serde(with = "rational::serde_str")]
    pub volume: Rational,
    #[serde(with = "rational::serde_str")]
    pub boundary_mass: Rational,
}

impl ExtremalReport {
    pub fn new(ext: &ExtremalData, positive: bool) -> Self {
        Self {
            rbar: ext.rbar.clone(),
            theta: ext.theta.clone(),
            positive_on_p: positive,
            s: ext.s.clone(),
            volume: ext.vol.clone(),
            boundary_mass: ext.boundary_mass.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use crate::rational::{frac, int};

    #[test]
    fn polytope_round_trip() {
        for name in library::STANDARD {
            let p = library::example(name).unwrap();
            let text = polytope_to_json(&p);
            let back = Polytope::try_from(parse_polytope_json(&text).unwrap()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn parses_mixed_rational_forms() {
        let j = parse_polytope_json(r#"{"dimension": 1, "normals": [[2], [-1]], "offsets": ["0.5", 1]}"#).unwrap();
        let p = Polytope::try_from(j).unwrap();
        assert_eq!(p.offsets(), &[frac(1, 4), int(1)]);
        assert!(parse_polytope_json("{not json").is_err());
    }

    #[test]
    fn parses_pl_forms() {
        let f = parse_pl_json(r#"{"pieces": [{"A": [0, 0], "a": "0"}, {"A": ["1", 0], "a": "-1/2"}]}"#).unwrap();
        assert_eq!(f.pieces().len(), 2);
        let g = parse_pl_json(r#"{"a": [1, 0], "c": "0"}"#).unwrap();
        assert_eq!(g.pieces()[1].gradient, vec![int(1), int(0)]);
        assert!(parse_pl_json(r#"{"a": [0, 0], "c": "1"}"#).is_err());
    }
}
