//! Canonical JSON rendering and content digests.
//!
//! All documents the pipeline writes go through [`to_canonical_json`]: two-space
//! indentation, struct field order, and decimals rendered with at most six
//! fractional digits with trailing zeros stripped.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

/// Number of fractional digits kept for every decimal quantity.
pub const DECIMAL_DIGITS: usize = 6;

/// Rounds a decimal to the canonical precision.
pub fn quantize(value: f64) -> f64 {
    if !value.is_finite() {
        return value;
    }
    let rendered = format!("{:.*}", DECIMAL_DIGITS, value);
    let q: f64 = rendered.parse().unwrap_or(value);
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Renders a decimal in canonical form: `7`, `0.5`, `1.000001`.
pub fn format_decimal(value: f64) -> String {
    let mut s = format!("{:.*}", DECIMAL_DIGITS, value);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

struct CanonicalFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_decimal(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

/// Serializes `value` to canonical JSON text, newline terminated.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        CanonicalFormatter {
            pretty: PrettyFormatter::with_indent(b"  "),
        },
    );
    value
        .serialize(&mut ser)
        .expect("in-memory serialization of plain data cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_trimmed() {
        assert_eq!(format_decimal(7.0), "7");
        assert_eq!(format_decimal(0.5), "0.5");
        assert_eq!(format_decimal(1.0000004), "1");
        assert_eq!(format_decimal(-0.0), "0");
        assert_eq!(format_decimal(80000.0), "80000");
        assert_eq!(format_decimal(2.125), "2.125");
    }

    #[test]
    fn quantize_rounds_to_six_digits() {
        assert_eq!(quantize(1.23456789), 1.234568);
        assert_eq!(quantize(-0.0000001), 0.0);
    }

    #[test]
    fn canonical_json_layout() {
        let v = serde_json::json!({"a": [1.5, 2.0], "b": {}});
        assert_eq!(to_canonical_json(&v), "{\n  \"a\": [\n    1.5,\n    2\n  ],\n  \"b\": {}\n}\n");
    }
}
