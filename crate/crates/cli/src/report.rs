//! Report envelope and byte-stable JSON output.

use std::io::{self, Write};

use entclass::TolerancePolicy;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA: &str = "entclass-report/1";

#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema: &'static str,
    /// Arguments after the program name, verbatim.
    pub command: &'a [String],
    pub tolerances: TolerancePolicy,
    pub seed: Option<u64>,
    pub result: T,
}

/// Pretty printer that writes every float with 17 significant digits.
///
/// Non-finite floats never reach the formatter: `serde_json` writes them as
/// `null`.
pub struct FixedDigitsFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for FixedDigitsFormatter<'_> {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

impl Formatter for FixedDigitsFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serialize `value` as pretty JSON with fixed-digit floats and a trailing newline.
pub fn to_bytes<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigitsFormatter::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}
