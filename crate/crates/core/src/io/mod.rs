//! File formats: CSV datasets and direction tables, the moment-tensor map
//! onto `S^4`, and canonical JSON documents.

mod json;
mod moment;
mod table;

pub use json::{from_canonical_json, to_canonical_json, FitDocument, ParamsDocument, SCHEMA_VERSION};
pub use moment::{mt_to_s4, s4_to_mt, MomentTensor};
pub use table::{
    format_number, load_csv, read_columns, read_covariates, read_dataset, save_csv, write_columns, write_dataset, ColumnSpec,
    Standardization,
};
