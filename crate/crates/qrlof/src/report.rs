//! Machine-readable report serialization.
//!
//! Floats are printed with 17 significant digits so every emitted number
//! parses back to the exact bit pattern it came from.

use crate::bootstrap::TestReport;
use crate::error::Result;
use serde::Serialize;
use std::io::{self, Write};

struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// Serializes any report value as JSON with full-precision floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("json output is utf-8"))
}

/// Parses a test report emitted by [`to_json`].
pub fn test_report_from_json(json: &str) -> Result<TestReport> {
    Ok(serde_json::from_str(json)?)
}

/// Single-row CSV rendering of a report (header plus one record); the
/// bootstrap replicate vector is omitted.
pub fn test_report_csv(report: &TestReport) -> String {
    format!(
        "statistic,p_value,tau,B,seed,statistic_kind,n,d_null,d_alt\n{:.16e},{:.16e},{:.16e},{},{},{},{},{},{}\n",
        report.statistic,
        report.p_value,
        report.tau,
        report.replications,
        report.seed,
        report.statistic_kind,
        report.n,
        report.d_null,
        report.d_alt
    )
}
