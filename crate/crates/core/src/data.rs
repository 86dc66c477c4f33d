//! Numeric CSV tables: one row per sample, one column per variable.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Column names; `None` when the file has no header row.
    pub names: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    /// A first row that does not parse as numbers is taken as the header.
    pub fn from_reader(r: impl Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let mut names = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => {
                    if let Some(first) = rows.first() {
                        if first.len() != row.len() {
                            return Err(Error::Parse {
                                line: k + 1,
                                message: format!("expected {} fields, found {}", first.len(), row.len()),
                            });
                        }
                    }
                    rows.push(row);
                }
                Err(_) if k == 0 => {
                    names = Some(rec.iter().map(str::to_owned).collect());
                }
                Err(e) => return Err(Error::Parse { line: k + 1, message: e.to_string() }),
            }
        }
        let cols = names.as_ref().map(Vec::len).or(rows.first().map(Vec::len)).unwrap_or(0);
        if rows.first().is_some_and(|r| r.len() != cols) {
            return Err(Error::Parse { line: 2, message: format!("header has {cols} names") });
        }
        let values = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
        Ok(Dataset { names, values })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_writer(&self, w: impl Write) -> Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        let names: Vec<String> = match &self.names {
            Some(n) => n.clone(),
            None => (1..=self.n_vars()).map(|k| format!("X{k}")).collect(),
        };
        writer.write_record(&names)?;
        for row in self.values.row_iter() {
            writer.write_record(row.iter().map(|x| format!("{x}")))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_writer(std::fs::File::create(path)?)
    }
}
