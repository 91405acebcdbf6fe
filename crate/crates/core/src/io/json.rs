use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::table::{ColumnSpec, Standardization};
use crate::error::{Error, Result};
use crate::estimation::{ErrorModel, FitConfig, FitResult, ModelState};

pub const SCHEMA_VERSION: u32 = 1;

/// Writes every float with 17 significant digits, enough to round-trip.
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// JSON with keys in sorted order and fixed float formatting, so equal
/// values always give equal bytes.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // going through Value sorts object keys
    let v = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    v.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Validation(e.to_string()))
}

pub fn from_canonical_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// Everything needed to reuse a fit: the result, the settings that produced
/// it and how covariates were read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    pub schema_version: u32,
    pub columns: ColumnSpec,
    #[serde(default)]
    pub standardization: Option<Standardization>,
    pub config: FitConfig,
    pub fit: FitResult,
}

impl FitDocument {
    pub fn new(fit: FitResult, config: FitConfig, columns: ColumnSpec, standardization: Option<Standardization>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            columns,
            standardization,
            config,
            fit,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = from_canonical_json(text)?;
        check_version(doc.schema_version, "fit document")?;
        Ok(doc)
    }
}

fn check_version(v: u32, what: &str) -> Result<()> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} has schema version {v}, expected {SCHEMA_VERSION}")))
    }
}

/// Parameters to simulate from, with the column names of generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub schema_version: u32,
    pub model: ErrorModel,
    pub state: ModelState,
    pub columns: ColumnSpec,
}

impl ParamsDocument {
    pub fn new(model: ErrorModel, state: ModelState, columns: ColumnSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model,
            state,
            columns,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = from_canonical_json(text)?;
        check_version(doc.schema_version, "parameter document")?;
        Ok(doc)
    }
}
