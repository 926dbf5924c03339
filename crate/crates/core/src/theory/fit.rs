use crate::error::{Error, Result};

use super::table::ErrorTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub residual: f64,
    pub rows_used: usize,
}

/// Ordinary least squares of `ln error` against `ln s` over rows with
/// `s >= s_min`. Without `s_min`, the upper half of the table is used.
/// Rows with zero error are skipped.
pub fn fit_rate(table: &ErrorTable, s_min: Option<usize>) -> Result<RateFit> {
    let rows = table.rows();
    let s_min = s_min.unwrap_or_else(|| rows.get(rows.len() / 2).map_or(0, |r| r.s));
    let mut points = Vec::new();
    for row in rows.iter().filter(|r| r.s >= s_min) {
        if row.error > 0.0 && row.s > 0 {
            points.push(((row.s as f64).ln(), row.error.ln()));
        } else {
            log::warn!(
                "skipping row s = {} with error {} in rate fit",
                row.s,
                row.error
            );
        }
    }
    if points.len() < 2 {
        return Err(Error::invalid(format!(
            "rate fit needs at least 2 rows with s >= {s_min} and positive error, found {}",
            points.len()
        )));
    }
    let (slope, intercept, residual) = least_squares(&points);
    Ok(RateFit {
        slope,
        intercept,
        residual,
        rows_used: points.len(),
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}
