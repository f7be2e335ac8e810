//! CSV/JSON artifact writers. Numbers are written in Rust's shortest
//! round-trip decimal form, so identical values give identical bytes.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0" leaking sign noise into diffs.
        "0".to_owned()
    } else {
        format!("{x}")
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, format!("{text}\n"))?;
    Ok(())
}
