//! Shared report plumbing: trend labels, lossless float formatting, and serde
//! helpers that keep non-finite values representable in JSON.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Direction of a quantity over an increasing grid of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Inconclusive,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Inconclusive => "inconclusive",
        })
    }
}

/// Strict monotonicity of `values` in grid order. Fewer than two points, or
/// any non-finite value, is inconclusive.
pub fn trend(values: &[f64]) -> Trend {
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return Trend::Inconclusive;
    }
    let pairs = || values.windows(2);
    if pairs().all(|w| w[1] > w[0]) {
        Trend::Increasing
    } else if pairs().all(|w| w[1] < w[0]) {
        Trend::Decreasing
    } else {
        Trend::Inconclusive
    }
}

/// Like [`trend`], but missing values make the result inconclusive.
pub fn trend_opt(values: &[Option<f64>]) -> Trend {
    match values.iter().copied().collect::<Option<Vec<f64>>>() {
        Some(v) => trend(&v),
        None => Trend::Inconclusive,
    }
}

/// 17 significant digits in scientific notation, `.` as decimal separator.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Serde adapter for `f64` that writes `inf`, `-inf` and `nan` as strings.
pub mod float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_float(*x))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn from_repr<E: de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    /// Same as the parent module for `Option<f64>`.
    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<super::Repr>::deserialize(d)?
                .map(super::from_repr)
                .transpose()
        }
    }
}
