//! CSV input and output.
//!
//! Rows are samples and columns are variables, except for covariance input
//! where the file is the square matrix itself. A first row containing any
//! non-numeric field is taken as a header of variable labels.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use mip_core::nalgebra::DMatrix;
use mip_core::{covariance_from_samples, GaussianSystem};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::report::InputDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Samples,
    Covariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub data: DMatrix<f64>,
}

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

pub fn read_table<R: Read>(reader: R) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut header = None;
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if line == 0 && !record.iter().all(is_numeric) {
            header = Some(record.iter().map(str::to_string).collect());
            cols = record.len();
            continue;
        }
        if rows == 0 && header.is_none() {
            cols = record.len();
        }
        if record.len() != cols {
            return Err(CliError::input(format!("line {}: expected {cols} fields, found {}", line + 1, record.len())));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::input(format!("line {}, column {}: {field:?} is not a number", line + 1, c + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::input(format!("line {}, column {}: value is not finite", line + 1, c + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::input("no numeric rows"));
    }
    Ok(Table { header, data: DMatrix::from_row_slice(rows, cols, &values) })
}

pub fn read_table_path(path: &Path) -> CliResult<Table> {
    let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    read_table(file)
}

pub fn write_table<W: Write>(writer: W, header: Option<&[String]>, data: &DMatrix<f64>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for r in 0..data.nrows() {
        w.write_record(data.row(r).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Opens `path` for writing, or stdout when no path is given.
pub fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

/// Default column labels for generated data.
pub fn column_labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Debug)]
pub struct LoadedInput {
    pub system: GaussianSystem,
    pub labels: Option<Vec<String>>,
    pub descriptor: InputDescriptor,
}

/// Reads a CSV and builds the Gaussian system it describes. `labels`
/// overrides any header row.
pub fn load_system(path: &Path, kind: InputKind, labels: Option<Vec<String>>) -> CliResult<LoadedInput> {
    let table = read_table_path(path)?;
    let (system, samples) = match kind {
        InputKind::Samples => (covariance_from_samples(&table.data)?, Some(table.data.nrows())),
        InputKind::Covariance => {
            let (r, c) = table.data.shape();
            if r != c {
                return Err(CliError::input(format!("covariance must be square, got {r}x{c}")));
            }
            (GaussianSystem::new(table.data)?, None)
        }
    };
    let n = system.n();
    if n < 2 {
        return Err(CliError::input(format!("need at least 2 variables, got {n}")));
    }
    let labels = labels.or(table.header);
    if let Some(l) = &labels {
        if l.len() != n {
            return Err(CliError::input(format!("expected {n} labels, got {}", l.len())));
        }
        let mut sorted: Vec<&String> = l.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::input("labels must be distinct"));
        }
    }
    let descriptor = InputDescriptor::File { path: PathBuf::from(path), kind, n, samples };
    Ok(LoadedInput { system, labels, descriptor })
}
