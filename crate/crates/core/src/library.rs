//! Built-in example polytopes.

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rational::{self, int, Rational};
use num::One;

/// Names accepted by [`example`]; `trapezoid(k)` takes any rational `k > 1`.
pub const NAMES: &[&str] = &["interval", "square", "simplex", "cube", "trapezoid(k)"];

/// Concrete names used when iterating over the library.
pub const STANDARD: &[&str] = &["interval", "square", "simplex", "cube", "trapezoid(2)", "trapezoid(3)"];

pub fn interval() -> Polytope {
    Polytope::from_i64(1, &[vec![1], vec![-1]], vec![int(1), int(1)]).expect("valid interval")
}

pub fn square() -> Polytope {
    Polytope::from_i64(2, &[vec![-1, 0], vec![1, 0], vec![0, -1], vec![0, 1]], vec![int(1); 4]).expect("valid square")
}

/// Vertices `(0,0), (1,0), (0,1)`.
pub fn simplex() -> Polytope {
    Polytope::from_i64(2, &[vec![-1, 0], vec![0, -1], vec![1, 1]], vec![int(0), int(0), int(1)]).expect("valid simplex")
}

pub fn cube() -> Polytope {
    let mut normals = Vec::new();
    for i in 0..3 {
        for sgn in [-1, 1] {
            let mut l = vec![0; 3];
            l[i] = sgn;
            normals.push(l);
        }
    }
    Polytope::from_i64(3, &normals, vec![int(1); 6]).expect("valid cube")
}

/// `{x >= 0, 0 <= y <= 1, x + y <= k}`.
pub fn trapezoid(k: &Rational) -> Result<Polytope> {
    if *k <= Rational::one() {
        return Err(Error::BadParameter(format!(
            "trapezoid parameter must exceed 1, got {k}"
        )));
    }
    Polytope::from_i64(
        2,
        &[vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 1]],
        vec![int(0), int(0), int(1), k.clone()],
    )
}

pub fn example(name: &str) -> Result<Polytope> {
    let name = name.trim();
    match name {
        "interval" => Ok(interval()),
        "square" => Ok(square()),
        "simplex" => Ok(simplex()),
        "cube" => Ok(cube()),
        _ => {
            let arg = name
                .strip_prefix("trapezoid(")
                .and_then(|rest| rest.strip_suffix(')'))
                .ok_or_else(|| Error::UnknownExample(name.to_string()))?;
            trapezoid(&rational::parse_rational(arg)?)
        }
    }
}
