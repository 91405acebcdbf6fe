use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::error_model::rotated_residual;
use crate::estimation::{Dataset, FitResult};

/// Per-case residual summaries of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsBundle {
    pub gamma01: Vec<f64>,
    pub predicted: Vec<Vec<f64>>,
    /// Residuals moved to the tangent space at `gamma01`; absent when the
    /// predicted mean is antipodal to `gamma01`.
    pub rotated: Vec<Option<Vec<f64>>>,
    /// Coordinates of the rotated residual along the orientation axes,
    /// divided by the estimated scales.
    pub standardized: Vec<Option<Vec<f64>>>,
    /// Norm of `standardized`.
    pub scaled_distance: Vec<Option<f64>>,
    pub flagged: Vec<usize>,
}

pub fn diagnostics(fit: &FitResult, data: &Dataset) -> Result<DiagnosticsBundle> {
    let g = fit.base.gamma01();
    let axes = fit.base.axes();
    let a = &fit.error.scales()[1..];
    let mut b = DiagnosticsBundle {
        gamma01: g.as_slice().to_vec(),
        predicted: Vec::with_capacity(data.n()),
        rotated: vec![],
        standardized: vec![],
        scaled_distance: vec![],
        flagged: vec![],
    };
    for i in 0..data.n() {
        let mu = fit.predict(&data.case(i))?;
        match rotated_residual(&data.responses()[i], &mu, g) {
            Ok(v) => {
                let z = DVector::from_iterator(a.len(), axes.tr_mul(&v).iter().zip(a).map(|(c, a)| c / a));
                b.scaled_distance.push(Some(z.norm()));
                b.standardized.push(Some(z.as_slice().to_vec()));
                b.rotated.push(Some(v.as_slice().to_vec()));
            }
            Err(_) => {
                b.flagged.push(i);
                b.rotated.push(None);
                b.standardized.push(None);
                b.scaled_distance.push(None);
            }
        }
        b.predicted.push(mu.as_slice().to_vec());
    }
    Ok(b)
}

impl DiagnosticsBundle {
    /// One row per case: predicted mean, rotated residual, standardized
    /// coordinates and scaled distance. Flagged cases leave residual fields empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let p = self.gamma01.len();
        let mut out = csv::Writer::from_writer(w);
        let mut head = vec!["case".to_string()];
        head.extend((1..=p).map(|j| format!("mu{j}")));
        head.extend((1..=p).map(|j| format!("v{j}")));
        head.extend((2..=p).map(|j| format!("z{j}")));
        head.push("scaled_distance".into());
        out.write_record(&head)?;
        let fmt = |v: Option<&Vec<f64>>, k: usize| -> Vec<String> {
            match v {
                Some(v) => v.iter().map(|x| format!("{x:e}")).collect(),
                None => vec![String::new(); k],
            }
        };
        for i in 0..self.predicted.len() {
            let mut row = vec![i.to_string()];
            row.extend(fmt(Some(&self.predicted[i]), p));
            row.extend(fmt(self.rotated[i].as_ref(), p));
            row.extend(fmt(self.standardized[i].as_ref(), p - 1));
            row.push(self.scaled_distance[i].map_or_else(String::new, |d| format!("{d:e}")));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}
