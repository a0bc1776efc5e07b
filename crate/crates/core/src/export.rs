//! CSV helpers shared by the experiment outputs.

use std::io::Write;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a dense real matrix, one row per line, no header.
pub fn write_matrix<W: Write>(mut w: W, rows: &[Vec<f64>]) -> std::io::Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
