//! Output plumbing: `#` metadata headers, CSV tables and JSON documents.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub const SWEEP_SCHEMA: &str = "kerrlattice-sweep/1";
pub const CRITICAL_SCHEMA: &str = "kerrlattice-critical/1";
pub const WIGNER_SCHEMA: &str = "kerrlattice-wigner-grid/1";
pub const OBSERVABLES_SCHEMA: &str = "kerrlattice-observables/1";
pub const SEMICLASSICS_SCHEMA: &str = "kerrlattice-semiclassics/1";

pub fn revision() -> &'static str {
    option_env!("KERRLATTICE_GIT_REVISION").unwrap_or("unknown")
}

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Writes `# key: value` lines; the schema and revision always come first.
pub fn write_metadata(w: &mut dyn Write, schema: &str, extra: &[(String, String)]) -> io::Result<()> {
    writeln!(w, "# schema: {schema}")?;
    writeln!(w, "# kerrlattice: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# revision: {}", revision())?;
    for (k, v) in extra {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// CSV body after the metadata block.
pub fn write_table(w: &mut dyn Write, header: &[String], rows: &[Vec<String>]) -> Result<(), Box<dyn std::error::Error>> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.write_record(r)?;
    }
    csv.flush()?;
    Ok(())
}

/// Shortest round-trip representation, `NaN` for missing values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

pub fn write_json<T: Serialize>(path: Option<&Path>, doc: &T) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = open(path)?;
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
