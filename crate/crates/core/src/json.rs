//! Deterministic JSON output: struct field order, two-space indentation,
//! and every float written with 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

/// Pretty formatter that prints floats as `d.dddddddddddddddde±x`.
pub struct FixedDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for FixedDigits<'_> {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

/// 17 significant digits in scientific notation, which round-trips every double.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of machine output
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

macro_rules! delegate {
    ($($name:ident $(, $arg:ident : $ty:ty)*;)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        end_object_key;
        begin_object_value;
        end_object_value;
    }
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedDigits::default());
    value.serialize(&mut ser)?;
    // serde_json only ever writes valid UTF-8
    Ok(String::from_utf8(buf).expect("serde_json produced invalid UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        b: f64,
        a: Vec<f64>,
        n: u32,
    }

    #[test]
    fn fixed_digits_and_key_order() {
        let s = to_string(&Sample {
            b: 0.1,
            a: vec![-2.0, 1e-300],
            n: 3,
        })
        .unwrap();
        assert_eq!(
            s,
            "{\n  \"b\": 1.0000000000000001e-1,\n  \"a\": [\n    -2.0000000000000000e0,\n    1.0000000000000000e-300\n  ],\n  \"n\": 3\n}"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn round_trips_exactly() {
        for v in [std::f64::consts::PI, -1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(format_f64(-0.0), format_f64(0.0));
    }
}
