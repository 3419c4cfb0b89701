//! Column tables and design matrices.

use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::Treatment;
use crate::simulator::{csv_columns, Dataset};

/// Named numeric and categorical columns of equal length. Missing numeric
/// values are `NaN`; missing labels are empty strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    numeric: Vec<(String, Vec<f64>)>,
    labels: Vec<(String, Vec<String>)>,
    n_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "." | "NULL")
}

impl Table {
    pub fn new(n_rows: usize) -> Self {
        Table { numeric: Vec::new(), labels: Vec::new(), n_rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn push_numeric(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n_rows {
            return Err(Error::invalid(format!("column `{name}` has {} rows, expected {}", values.len(), self.n_rows)));
        }
        self.numeric.retain(|(n, _)| *n != name);
        self.numeric.push((name, values));
        Ok(())
    }

    pub fn push_labels(&mut self, name: impl Into<String>, values: Vec<String>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n_rows {
            return Err(Error::invalid(format!("column `{name}` has {} rows, expected {}", values.len(), self.n_rows)));
        }
        self.labels.retain(|(n, _)| *n != name);
        self.labels.push((name, values));
        Ok(())
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        self.numeric
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn labels(&self, name: &str) -> Result<&[String]> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.numeric.iter().any(|(n, _)| n == name) || self.labels.iter().any(|(n, _)| n == name)
    }

    /// Treatment arm per row; unknown or empty labels become `None`.
    pub fn treatments(&self) -> Result<Vec<Option<Treatment>>> {
        Ok(self.labels("treatment")?.iter().map(|s| s.parse().ok()).collect())
    }

    /// Rows whose mask entry is true.
    pub fn filter(&self, mask: &[bool]) -> Table {
        let keep = |i: &usize| mask[*i];
        let idx: Vec<usize> = (0..self.n_rows).filter(keep).collect();
        Table {
            numeric: self.numeric.iter().map(|(n, v)| (n.clone(), idx.iter().map(|&i| v[i]).collect())).collect(),
            labels: self.labels.iter().map(|(n, v)| (n.clone(), idx.iter().map(|&i| v[i].clone()).collect())).collect(),
            n_rows: idx.len(),
        }
    }

    pub fn from_dataset(d: &Dataset) -> Table {
        let n = d.len();
        let mut t = Table::new(n);
        let cols = csv_columns();
        let rows: Vec<[f64; 26]> = d
            .records
            .iter()
            .map(|r| {
                let c = r.covariates.values();
                let mut v = [0.0; 26];
                v[0] = r.subject_id as f64;
                v[2] = r.group_id as f64;
                v[3..18].copy_from_slice(&c);
                v[18] = r.belief;
                v[19] = r.perception_accuracy;
                v[20] = f64::from(u8::from(r.pivotal));
                v[21] = r.contribution.as_euros();
                v[22] = r.group_total.as_euros();
                v[23] = r.threshold_drawn.as_euros();
                v[24] = f64::from(u8::from(r.success));
                v[25] = r.earnings.as_euros();
                v
            })
            .collect();
        for (j, name) in cols.iter().enumerate() {
            if *name == "treatment" {
                continue;
            }
            t.numeric.push((name.to_string(), rows.iter().map(|r| r[j]).collect()));
        }
        t.labels.push(("treatment".to_string(), d.records.iter().map(|r| r.treatment.to_string()).collect()));
        t
    }

    /// Reads any comma-separated file with a header row. `#` lines are
    /// comments. A column is numeric when every non-missing cell parses as
    /// a number. `rename` maps source names onto the expected ones.
    pub fn from_csv<R: Read>(reader: R, rename: &[(String, String)]) -> Result<Table> {
        let mut rdr =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(false).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| {
                rename.iter().find(|(from, _)| from == h).map(|(_, to)| to.clone()).unwrap_or_else(|| h.to_string())
            })
            .collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for row in rdr.records() {
            let row = row?;
            for (j, cell) in row.iter().enumerate() {
                cells[j].push(cell.to_string());
            }
        }
        let n = cells.first().map(Vec::len).unwrap_or(0);
        let mut t = Table::new(n);
        for (name, col) in headers.into_iter().zip(cells) {
            let parsed: Option<Vec<f64>> =
                col.iter().map(|c| if is_missing(c) { Some(f64::NAN) } else { c.parse::<f64>().ok() }).collect();
            match parsed {
                Some(v) if name != "treatment" => t.push_numeric(name, v)?,
                _ => t.push_labels(
                    name,
                    col.into_iter().map(|c| if is_missing(&c) { String::new() } else { c }).collect(),
                )?,
            }
        }
        Ok(t)
    }
}

/// One factor of a regressor.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Numeric(String),
    /// 1 when the label column equals the level.
    Level(String, String),
}

/// A regressor: the product of its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn col(name: &str) -> Term {
        Term { name: name.to_string(), factors: vec![Factor::Numeric(name.to_string())] }
    }

    pub fn arm(t: Treatment) -> Term {
        Term { name: t.to_string(), factors: vec![Factor::Level("treatment".into(), t.to_string())] }
    }

    pub fn times(&self, other: &Term) -> Term {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Term { name: format!("{} x {}", self.name, other.name), factors }
    }
}

/// Response vector and regressor matrix (intercept first) after listwise
/// deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub response: String,
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Rows removed because a used value was missing.
    pub dropped: usize,
}

impl DesignMatrix {
    pub fn build(table: &Table, response: &str, terms: &[Term]) -> Result<Self> {
        let y_col = table.numeric(response)?;
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(terms.len());
        for term in terms {
            let mut v = vec![1.0; table.n_rows()];
            for f in &term.factors {
                match f {
                    Factor::Numeric(name) => {
                        for (a, b) in v.iter_mut().zip(table.numeric(name)?) {
                            *a *= b;
                        }
                    }
                    Factor::Level(name, level) => {
                        for (a, b) in v.iter_mut().zip(table.labels(name)?) {
                            *a *= if b.is_empty() {
                                f64::NAN
                            } else if b == level {
                                1.0
                            } else {
                                0.0
                            };
                        }
                    }
                }
            }
            cols.push(v);
        }
        let keep: Vec<usize> =
            (0..table.n_rows()).filter(|&i| y_col[i].is_finite() && cols.iter().all(|c| c[i].is_finite())).collect();
        let n = keep.len();
        let k = terms.len() + 1;
        let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { cols[j - 1][keep[i]] });
        let y = DVector::from_iterator(n, keep.iter().map(|&i| y_col[i]));
        let mut names = vec!["constant".to_string()];
        names.extend(terms.iter().map(|t| t.name.clone()));
        Ok(DesignMatrix { response: response.to_string(), names, x, y, dropped: table.n_rows() - n })
    }

    pub fn from_parts(response: &str, names: Vec<String>, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() || x.ncols() != names.len() {
            return Err(Error::invalid("design matrix dimensions do not match"));
        }
        Ok(DesignMatrix { response: response.to_string(), names, x, y, dropped: 0 })
    }
}
