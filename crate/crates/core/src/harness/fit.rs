use serde::Serialize;

use super::ResultTable;
use crate::error::{Error, Result};
use crate::rates::ScaleBase;
use crate::stats::ols;

/// Log-log regression of MSE on the scale variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    pub rows_used: usize,
    pub warnings: Vec<String>,
}

/// Fits `log MSE = intercept + slope * log x` with `x = T` or `n`, or
/// `x = base / log base` when `strip_log` is set.
pub fn fit_exponent(table: &ResultTable, base: ScaleBase, strip_log: bool) -> Result<ExponentFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut warnings = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if !(row.mse > 0.0) {
            warnings.push(format!("row {i} excluded: mse = {}", row.mse));
            continue;
        }
        let v = match base {
            ScaleBase::Horizon => row.horizon,
            ScaleBase::Count => row.n as f64,
        };
        let x = if strip_log { v / v.ln() } else { v };
        if !(x > 0.0 && x.is_finite()) {
            warnings.push(format!("row {i} excluded: scale {v} unusable"));
            continue;
        }
        xs.push(x.ln());
        ys.push(row.mse.ln());
    }
    if xs.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 usable rows, have {}", xs.len())));
    }
    if xs.iter().all(|x| *x == xs[0]) {
        return Err(Error::Fit("all rows share one scale value".into()));
    }
    let f = ols(&xs, &ys);
    Ok(ExponentFit { slope: f.slope, intercept: f.intercept, stderr_slope: f.stderr_slope, rows_used: xs.len(), warnings })
}
