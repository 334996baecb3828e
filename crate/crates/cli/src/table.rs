use std::io::{self, Write};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

/// A CSV document: `#` metadata lines, a header row, data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: &'static str,
    /// Echo of the effective configuration, in a fixed order.
    pub config: Vec<(&'static str, String)>,
    pub notes: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &'static str, header: Vec<String>) -> Self {
        Self {
            kind,
            config: Vec::new(),
            notes: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn write<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        write_preamble(out, self.kind, &self.config, &self.notes)?;
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn write_preamble<W: Write + ?Sized>(
    out: &mut W,
    kind: &str,
    config: &[(&'static str, String)],
    notes: &[String],
) -> io::Result<()> {
    writeln!(
        out,
        "# cvqkd {} schema={SCHEMA_VERSION} table={kind}",
        env!("CARGO_PKG_VERSION")
    )?;
    let echo: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "# config {}", echo.join(" "))?;
    for n in notes {
        writeln!(out, "# {n}")?;
    }
    Ok(())
}

/// Shortest representation that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}
