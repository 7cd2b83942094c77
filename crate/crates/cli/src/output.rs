use crate::{io_err, CliError};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First line of every file the tool writes.
pub fn provenance(seed: Option<u64>, hash: &str) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!("# fbf {VERSION} seed={seed} config_sha256={hash}")
}

pub fn create(path: &Path, first_line: &str) -> Result<BufWriter<File>, CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(w, "{first_line}").map_err(|e| io_err(path, e))?;
    Ok(w)
}

pub fn write_text(path: &Path, first_line: &str, body: &str) -> Result<(), CliError> {
    let mut w = create(path, first_line)?;
    w.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// CSV writer over `w`, with `path` used in error messages.
pub struct Csv<W: Write> {
    inner: csv::Writer<W>,
    path: String,
}

impl<W: Write> Csv<W> {
    pub fn new(w: W, path: &Path) -> Self {
        Self {
            inner: csv::Writer::from_writer(w),
            path: path.display().to_string(),
        }
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.path)))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner
            .flush()
            .map_err(|e| CliError::Io(format!("{}: {e}", self.path)))
    }
}

/// Shortest text that parses back to `v`.
pub fn real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        v.to_string()
    }
}
