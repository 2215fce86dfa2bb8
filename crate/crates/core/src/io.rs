//! CSV helpers shared by every writer in the crate.
//!
//! Files are UTF-8 with a single header row. Floats use Rust's shortest
//! round-trip formatting. An optional preamble of `#`-prefixed lines carries
//! run metadata; readers skip it via the comment character.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, preamble: Option<&str>, header: &[String]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        if let Some(text) = preamble {
            for line in text.lines() {
                writeln!(file, "# {line}")?;
            }
        }
        let mut inner = csv::WriterBuilder::new().from_writer(file);
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}
