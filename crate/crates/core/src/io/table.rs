use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::Dataset;
use crate::link::CovariateCase;

/// Largest departure from unit norm that a spherical block may have on input.
const UNIT_TOLERANCE: f64 = 1e-6;

/// Which CSV columns hold the response and each covariate block.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub response: Vec<String>,
    #[serde(default)]
    pub spherical: Vec<String>,
    #[serde(default)]
    pub euclidean: Vec<String>,
    /// Put a column of ones first in the Euclidean block.
    #[serde(default)]
    pub intercept: bool,
}

impl ColumnSpec {
    pub fn validate(&self) -> Result<()> {
        if self.response.len() < 2 {
            return Err(Error::Validation("the response needs at least two columns".into()));
        }
        if self.spherical.len() == 1 {
            return Err(Error::Validation("a spherical covariate needs at least two columns".into()));
        }
        let mut all: Vec<&String> = self.response.iter().chain(&self.spherical).chain(&self.euclidean).collect();
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!("column '{}' is listed twice", w[0])));
        }
        Ok(())
    }

    /// Euclidean covariate dimension including the intercept.
    pub fn q_e(&self) -> usize {
        self.euclidean.len() + usize::from(self.intercept)
    }
}

/// Affine rescaling of named Euclidean columns to mean 0 and sd 1.
/// Constant columns are never rescaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardization {
    /// Estimates means and sample sds of the non-constant Euclidean columns of `data`.
    pub fn estimate(data: &Dataset, spec: &ColumnSpec) -> Result<Self> {
        let mut s = Self {
            columns: vec![],
            mean: vec![],
            sd: vec![],
        };
        let Some(e) = data.euclidean() else { return Ok(s) };
        let off = usize::from(spec.intercept);
        let n = e.len() as f64;
        for (k, name) in spec.euclidean.iter().enumerate() {
            let col: Vec<f64> = e.iter().map(|x| x[off + k]).collect();
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            if var > 0.0 {
                s.columns.push(name.clone());
                s.mean.push(m);
                s.sd.push(var.sqrt());
            }
        }
        Ok(s)
    }

    fn positions(&self, spec: &ColumnSpec) -> Result<Vec<usize>> {
        let off = usize::from(spec.intercept);
        self.columns
            .iter()
            .map(|c| {
                spec.euclidean
                    .iter()
                    .position(|n| n == c)
                    .map(|k| off + k)
                    .ok_or_else(|| Error::Validation(format!("standardized column '{c}' is not a Euclidean covariate")))
            })
            .collect()
    }

    fn rescale(&self, idx: &[usize], x: &DVector<f64>) -> DVector<f64> {
        let mut x = x.clone();
        for (j, &k) in idx.iter().enumerate() {
            x[k] = (x[k] - self.mean[j]) / self.sd[j];
        }
        x
    }

    pub fn apply(&self, data: &Dataset, spec: &ColumnSpec) -> Result<Dataset> {
        let Some(e) = data.euclidean() else { return Ok(data.clone()) };
        let idx = self.positions(spec)?;
        Dataset::new(
            data.responses().to_vec(),
            data.spherical().map(<[_]>::to_vec),
            Some(e.iter().map(|x| self.rescale(&idx, x)).collect()),
            data.weights().map(<[_]>::to_vec),
        )
    }

    /// Maps standardized covariates back to the original units.
    pub fn invert_cases(&self, cases: &[CovariateCase], spec: &ColumnSpec) -> Result<Vec<CovariateCase>> {
        let idx = self.positions(spec)?;
        cases
            .iter()
            .map(|c| {
                let xe = c.xe.as_ref().map(|x| {
                    let mut x = x.clone();
                    for (j, &k) in idx.iter().enumerate() {
                        x[k] = x[k] * self.sd[j] + self.mean[j];
                    }
                    x
                });
                CovariateCase::new(xe, c.xs.clone())
            })
            .collect()
    }

    pub fn apply_cases(&self, cases: &[CovariateCase], spec: &ColumnSpec) -> Result<Vec<CovariateCase>> {
        let idx = self.positions(spec)?;
        cases
            .iter()
            .map(|c| CovariateCase::new(c.xe.as_ref().map(|x| self.rescale(&idx, x)), c.xs.clone()))
            .collect()
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Reads the named columns of a headed CSV. Row numbers in errors are file
/// line numbers.
pub fn read_columns<R: Read>(reader: R, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let idx = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Validation(format!("missing column '{n}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = idx
            .iter()
            .zip(names)
            .map(|(&i, name)| {
                let field = rec.get(i).unwrap_or("");
                let v: f64 = field.parse().map_err(|_| Error::Row {
                    row: line,
                    message: format!("column '{name}': '{field}' is not a number"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Row {
                        row: line,
                        message: format!("column '{name}' is not finite"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(Error::Validation("no data rows".into()));
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

pub fn write_columns<W: Write>(writer: W, names: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format_number(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// A unit vector from a row block; entries within the input tolerance of
/// unit norm are renormalized, others rejected.
fn unit_block(v: &[f64], line: usize, what: &str) -> Result<DVector<f64>> {
    let x = DVector::from_column_slice(v);
    let n = x.norm();
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Row {
            row: line,
            message: format!("{what} has norm {n}, not 1"),
        });
    }
    // leave already-unit rows untouched so that save/load cycles are exact
    Ok(if (n - 1.0).abs() <= 8.0 * f64::EPSILON { x } else { x / n })
}

pub fn read_dataset<R: Read>(reader: R, spec: &ColumnSpec) -> Result<Dataset> {
    spec.validate()?;
    let names: Vec<String> = spec.response.iter().chain(&spec.spherical).chain(&spec.euclidean).cloned().collect();
    let rows = read_columns(reader, &names)?;
    let (p, qs) = (spec.response.len(), spec.spherical.len());
    let mut y = Vec::with_capacity(rows.len());
    let mut xs = vec![];
    let mut xe = vec![];
    for (i, r) in rows.iter().enumerate() {
        // header is line 1
        let line = i + 2;
        y.push(unit_block(&r[..p], line, "response")?);
        if qs > 0 {
            xs.push(unit_block(&r[p..p + qs], line, "spherical covariate")?);
        }
        if spec.q_e() > 0 {
            let mut e = Vec::with_capacity(spec.q_e());
            if spec.intercept {
                e.push(1.0);
            }
            e.extend_from_slice(&r[p + qs..]);
            xe.push(DVector::from_vec(e));
        }
    }
    Dataset::new(y, (qs > 0).then_some(xs), (spec.q_e() > 0).then_some(xe), None)
}

/// Covariates only, for prediction; the response columns need not exist.
pub fn read_covariates<R: Read>(reader: R, spec: &ColumnSpec) -> Result<Vec<CovariateCase>> {
    spec.validate()?;
    let names: Vec<String> = spec.spherical.iter().chain(&spec.euclidean).cloned().collect();
    let qs = spec.spherical.len();
    if names.is_empty() {
        return Err(Error::Validation("the model has no covariate columns to read".into()));
    }
    let rows = read_columns(reader, &names)?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let xs = (qs > 0).then(|| unit_block(&r[..qs], i + 2, "spherical covariate")).transpose()?;
            let xe = (spec.q_e() > 0).then(|| {
                let mut e = Vec::with_capacity(spec.q_e());
                if spec.intercept {
                    e.push(1.0);
                }
                e.extend_from_slice(&r[qs..]);
                DVector::from_vec(e)
            });
            CovariateCase::new(xe, xs)
        })
        .collect()
}

/// Writes the dataset under the spec's column names; the intercept is implied, not written.
pub fn write_dataset<W: Write>(writer: W, data: &Dataset, spec: &ColumnSpec) -> Result<()> {
    spec.validate()?;
    if data.p() != spec.response.len() || data.q_s() != spec.spherical.len() || data.q_e() != spec.q_e() {
        return Err(Error::Dimension("dataset does not match the column spec".into()));
    }
    let names: Vec<String> = spec.response.iter().chain(&spec.spherical).chain(&spec.euclidean).cloned().collect();
    let off = usize::from(spec.intercept);
    let rows: Vec<Vec<f64>> = (0..data.n())
        .map(|i| {
            let mut r = data.responses()[i].as_slice().to_vec();
            if let Some(s) = data.spherical() {
                r.extend_from_slice(s[i].as_slice());
            }
            if let Some(e) = data.euclidean() {
                r.extend_from_slice(&e[i].as_slice()[off..]);
            }
            r
        })
        .collect();
    write_columns(writer, &names, &rows)
}

pub fn load_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<Dataset> {
    read_dataset(File::open(path)?, spec)
}

pub fn save_csv(path: impl AsRef<Path>, data: &Dataset, spec: &ColumnSpec) -> Result<()> {
    write_dataset(File::create(path)?, data, spec)
}
