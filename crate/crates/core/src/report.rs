//! Versioned JSON reports with every float written to 17 significant
//! digits, and CSV dumps of point samples.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::{self, Write};

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty printing with `{:.16e}` floats; non-finite values become `null`.
struct Sci17<'a>(PrettyFormatter<'a>);

impl Formatter for Sci17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Top-level envelope shared by every command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub config: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
    pub pass: bool,
    pub result: Value,
}

impl Report {
    pub fn new<T: Serialize>(command: &str, result: &T, pass: bool) -> Result<Self> {
        Ok(Report {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            config: BTreeMap::new(),
            timestamp_unix: None,
            pass,
            result: serde_json::to_value(result).map_err(|e| Error::Io(e.to_string()))?,
        })
    }

    pub fn with_config(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.config.insert(key.to_string(), value.into());
        self
    }

    pub fn stamped(mut self) -> Self {
        self.timestamp_unix =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok().map(|d| d.as_secs());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// `trial,points` with the sorted labels of each sample joined by `;`.
pub fn write_samples_csv<W: Write>(mut out: W, samples: &[Vec<usize>]) -> Result<()> {
    writeln!(out, "trial,points")?;
    for (t, s) in samples.iter().enumerate() {
        let pts: Vec<String> = s.iter().map(|p| p.to_string()).collect();
        writeln!(out, "{t},{}", pts.join(";"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&vec![0.1f64, 1.0, -2.5e-300]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("-2.5000000000000000e-300"));
    }

    #[test]
    fn non_finite_is_null() {
        let s = to_json(&[f64::NAN, f64::INFINITY]).unwrap();
        assert_eq!(s.matches("null").count(), 2);
    }

    #[test]
    fn envelope_carries_schema_and_omits_missing_timestamp() {
        let r = Report::new("bessel", &BTreeMap::from([("x", 1.5)]), true).unwrap().with_config("theta", 1.0);
        let s = r.to_json().unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], 1);
        assert!(v.get("timestamp_unix").is_none());
        assert_eq!(v["result"]["x"], 1.5);
        assert!(r.stamped().to_json().unwrap().contains("timestamp_unix"));
    }

    #[test]
    fn samples_csv_layout() {
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &[vec![], vec![1, 4]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trial,points\n0,\n1,1;4\n");
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = to_json(&x).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
