//! Serde adapters writing reals as shortest round-trip decimal strings, with
//! `"inf"`, `"-inf"` and `"NaN"` for the non-finite values.
//!
//! ```
//! #[derive(serde::Serialize, serde::Deserialize)]
//! struct R {
//!     #[serde(with = "caplab::real_string")]
//!     v: f64,
//! }
//! let s = serde_json::to_string(&R { v: 0.1 }).unwrap();
//! assert_eq!(s, r#"{"v":"0.1"}"#);
//! let inf: R = serde_json::from_str(r#"{"v":"inf"}"#).unwrap();
//! assert_eq!(inf.v, f64::INFINITY);
//! ```

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

pub fn format(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

pub fn parse(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "NaN" => Ok(f64::NAN),
        _ => s.parse::<f64>().map_err(|e| format!("bad real {s:?}: {e}")),
    }
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(*v))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let s = String::deserialize(d)?;
    parse(&s).map_err(D::Error::custom)
}

/// The same encoding for lists.
pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&super::format(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| super::parse(s).map_err(D::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for v in [0.1, 1e308, 5e-324, -2.5, 1.0 / 3.0, f64::INFINITY, f64::NEG_INFINITY] {
            assert_eq!(parse(&format(v)).unwrap().to_bits(), v.to_bits());
        }
        assert!(parse(&format(f64::NAN)).unwrap().is_nan());
        assert!(parse("eight").is_err());
    }
}
