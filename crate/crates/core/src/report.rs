//! Serialization helpers shared by the report types.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

/// `{"re": …, "im": …}` form of a complex number in JSON reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

pub(crate) fn ser_complex<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    ComplexValue::from(*z).serialize(s)
}

pub(crate) fn ser_complex_opt<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    z.map(ComplexValue::from).serialize(s)
}

pub(crate) fn ser_complex_vec<S: Serializer>(z: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<ComplexValue> = z.iter().copied().map(ComplexValue::from).collect();
    v.serialize(s)
}
