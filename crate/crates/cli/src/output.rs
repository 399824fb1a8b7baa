//! Output formatting: JSON with fixed 17-significant-digit floats (for
//! reproducible defect comparisons) and CSV rounded to 12.

use std::io;

use serde_json::ser::Formatter;
use serde_json::Value;

struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // JSON has no non-finite numbers; degrade to null
            write!(writer, "null")
        }
    }
}

/// Serializes a JSON value with 17 significant digits on every float.
pub fn to_json_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    serde::Serialize::serialize(value, &mut ser).expect("json serialization");
    String::from_utf8(out).expect("json is utf8")
}

/// One CSV cell: scalars at 12 significant digits, vectors joined with `;`.
pub fn csv_cell(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.11e}"))
        .collect::<Vec<_>>()
        .join(";")
}
