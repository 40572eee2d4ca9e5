//! Float formatting for output files: 17 significant digits, so every value
//! round-trips exactly and output bytes depend only on the value.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats `x` with 17 significant digits. Fixed notation for decimal
/// exponents in `-5..=16`, scientific otherwise. Non-finite values map to
/// `nan`, `inf`, `-inf`.
pub fn fmt_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').expect("scientific format") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..=16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        sci
    }
}

fn raw<S: Serializer>(x: f64, serializer: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        RawValue::from_string(fmt_g17(x))
            .map_err(S::Error::custom)?
            .serialize(serializer)
    } else {
        serializer.serialize_none()
    }
}

/// `serialize_with` helper for `f64` fields. Non-finite values become `null`.
pub fn ser_f64<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    raw(*x, serializer)
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => raw(*v, serializer),
        None => serializer.serialize_none(),
    }
}

struct G17(f64);

impl Serialize for G17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        raw(self.0, serializer)
    }
}

pub fn ser_vec_f64<S: Serializer>(xs: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(xs.iter().map(|&x| G17(x)))
}
