//! Accuracy table for the series solution of `R(γ) = α`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::monte_carlo::csv_err;
use crate::error::{Error, Result};
use crate::rate::{rate, solve_rate_eq_bisect, solve_rate_eq_series, DEFAULT_SERIES_TERMS};

/// Published accuracy figures, one row per `(ϑ, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub theta: f64,
    pub alpha: f64,
    pub series: f64,
    pub exact: f64,
    pub residual: f64,
    /// Marked as a poor approximation in the source table.
    pub flagged: bool,
}

const REFERENCE: &str = include_str!("../../data/table1.csv");

pub fn reference_rows() -> Vec<ReferenceRow> {
    csv::Reader::from_reader(REFERENCE.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .expect("embedded table is well formed")
}

/// The `(ϑ, α)` pairs of the reference table.
pub fn default_grid() -> Vec<(f64, f64)> {
    reference_rows().iter().map(|r| (r.theta, r.alpha)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub theta: f64,
    pub alpha: f64,
    /// Series estimate; absent if the series breaks down numerically.
    pub series: Option<f64>,
    pub exact: f64,
    /// `R(series) − α`.
    pub residual: Option<f64>,
}

pub fn table1_report(grid: &[(f64, f64)], terms: usize) -> Result<Vec<Table1Row>> {
    grid.iter()
        .map(|&(theta, alpha)| {
            let exact = solve_rate_eq_bisect(alpha, theta)?;
            let series = solve_rate_eq_series(alpha, theta, terms).ok().filter(|g| g.is_finite() && *g >= 0.0);
            let residual = match series {
                Some(g) => Some(rate(g, theta)? - alpha),
                None => None,
            };
            Ok(Table1Row {
                theta,
                alpha,
                series,
                exact,
                residual,
            })
        })
        .collect()
}

/// Default table with the standard series length.
pub fn default_table1() -> Result<Vec<Table1Row>> {
    table1_report(&default_grid(), DEFAULT_SERIES_TERMS)
}

pub fn write_table1<W: Write>(out: W, rows: &[Table1Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "alpha", "series", "exact", "residual"])
        .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.theta.to_string(),
            r.alpha.to_string(),
            opt(r.series),
            r.exact.to_string(),
            opt(r.residual),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Config(format!("write failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_has_both_blocks() {
        let rows = reference_rows();
        assert_eq!(rows.len(), 250);
        assert_eq!(rows.iter().filter(|r| r.alpha == 0.0).count(), 100);
        assert_eq!(rows.iter().filter(|r| r.flagged).count(), 10);
    }

    #[test]
    fn spot_rows() {
        let rows = table1_report(&[(0.5, 0.0), (1.0, 1.0), (0.021, 0.0)], DEFAULT_SERIES_TERMS).unwrap();
        assert!((rows[0].exact - 0.429433).abs() < 5e-7);
        assert!(rows[0].residual.unwrap().abs() < 1e-9);
        assert!((rows[1].exact - 6.320107).abs() < 5e-7);
        assert!(rows[2].residual.unwrap() > 0.0);
    }
}
