//! Table and summary emission.
//!
//! With an output directory every table becomes `<dir>/<name>.csv`;
//! otherwise tables are printed to stdout after a `# <name>.csv` line.
//! Summary lines always go to stdout.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use tiergrade::report::num;

use crate::fail::Outcome;

pub struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    /// Row of numbers.
    pub fn nums(&mut self, xs: &[f64]) {
        self.row(xs.iter().map(|&x| num(x)).collect());
    }

    pub fn to_bytes(&self) -> Outcome<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| crate::fail::Failure::config(format!("csv: {e}")))
    }
}

pub struct Sink {
    dir: Option<PathBuf>,
    stdout: std::io::Stdout,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Outcome<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink {
            dir,
            stdout: std::io::stdout(),
        })
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) -> Outcome<()> {
        writeln!(self.stdout.lock(), "{key}: {value}")?;
        Ok(())
    }

    pub fn table(&mut self, t: &Table) -> Outcome<()> {
        let bytes = t.to_bytes()?;
        self.raw(&t.name, &bytes)
    }

    /// Pre-rendered CSV bytes under `name`.
    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> Outcome<()> {
        let file = format!("{name}.csv");
        match &self.dir {
            Some(d) => {
                let path = d.join(&file);
                fs::write(&path, bytes)?;
                self.line("wrote", path.display())
            }
            None => {
                let mut out = self.stdout.lock();
                writeln!(out, "# {file}")?;
                out.write_all(bytes)?;
                Ok(())
            }
        }
    }
}
