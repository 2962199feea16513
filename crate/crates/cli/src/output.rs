//! CSV tables with a `#` manifest preamble.

use std::io::Write;

use crate::error::CliError;

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Key/value lines written before the header.
    pub manifest: Vec<(String, String)>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.manifest.push((key.to_string(), value.into()));
    }

    /// Writes the manifest, an echo of the configuration, then the CSV body.
    /// Contains no timestamps, so equal inputs give equal bytes.
    pub fn write<W: Write>(&self, mut out: W, config_text: &str) -> Result<(), CliError> {
        writeln!(out, "# tool: shrinkdim {}", env!("CARGO_PKG_VERSION"))?;
        for (k, v) in &self.manifest {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "# config:")?;
        for line in config_text.lines() {
            writeln!(out, "#   {line}")?;
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}
