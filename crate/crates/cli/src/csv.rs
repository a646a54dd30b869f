//! Plot-data emission: plain CSV with a header row, one row per sample,
//! floats in shortest round-trip form. Nothing here knows what the
//! columns mean; scenarios choose headers and rows.

use std::path::Path;

use contacton::{Error, Result};

/// Writes a series as CSV. Every row must match the header width.
pub fn emit_plot_data(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::BadFieldSpec(format!(
            "refusing to write empty series {}",
            path.display()
        )));
    }
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        assert_eq!(row.len(), header.len(), "row width must match the header");
        let mut first = true;
        for v in row {
            if !first {
                text.push(',');
            }
            first = false;
            text.push_str(&format!("{v}"));
        }
        text.push('\n');
    }
    Ok(std::fs::write(path, text)?)
}
