//! Summary statistics and the stable summary CSV schema.
//!
//! Columns: `method,seeds,median_hv,iqr_low,iqr_high,runtime_seconds`. The
//! IQR bounds are the 25th and 75th percentiles of the final mean validation
//! hypervolume across seeds (with a single seed all three statistics
//! coincide). Floats are written with shortest round-trip formatting, so a
//! deterministic run produces byte-identical files.

use std::io::Write;
use std::path::Path;

use crate::CliError;
use hvfront_core::error::Error as CoreError;

/// Linear-interpolation quantile of pre-sorted values, q in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// One summary row: per-method statistics over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub seeds: usize,
    pub median_hv: f64,
    pub iqr_low: f64,
    pub iqr_high: f64,
    pub runtime_seconds: f64,
}

impl MethodSummary {
    pub fn from_final_hvs(method: &str, final_hvs: &[f64], runtime_seconds: f64) -> Self {
        let mut sorted = final_hvs.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            method: method.to_string(),
            seeds: sorted.len(),
            median_hv: quantile(&sorted, 0.5),
            iqr_low: quantile(&sorted, 0.25),
            iqr_high: quantile(&sorted, 0.75),
            runtime_seconds,
        }
    }
}

pub const SUMMARY_HEADER: &str = "method,seeds,median_hv,iqr_low,iqr_high,runtime_seconds";

pub fn write_summary_csv(path: &Path, rows: &[MethodSummary]) -> Result<(), CliError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{SUMMARY_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.method, row.seeds, row.median_hv, row.iqr_low, row.iqr_high, row.runtime_seconds
        )?;
    }
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<MethodSummary>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != SUMMARY_HEADER {
        return Err(CliError::Config(CoreError::Parse {
            line: 1,
            message: format!("unexpected summary header `{header}`"),
        }));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CliError::Config(CoreError::Parse {
                line: idx + 2,
                message: "summary row must have 6 fields".into(),
            }));
        }
        let num = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| {
                CliError::Config(CoreError::Parse {
                    line: idx + 2,
                    message: format!("bad number `{s}`"),
                })
            })
        };
        rows.push(MethodSummary {
            method: fields[0].to_string(),
            seeds: fields[1].parse().map_err(|_| {
                CliError::Config(CoreError::Parse {
                    line: idx + 2,
                    message: "bad seed count".into(),
                })
            })?,
            median_hv: num(fields[2])?,
            iqr_low: num(fields[3])?,
            iqr_high: num(fields[4])?,
            runtime_seconds: num(fields[5])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
    }

    #[test]
    fn single_seed_reports_one_value_everywhere() {
        let s = MethodSummary::from_final_hvs("hv_per_sample", &[398.5], 1.5);
        assert_eq!(s.median_hv, 398.5);
        assert_eq!(s.iqr_low, 398.5);
        assert_eq!(s.iqr_high, 398.5);
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        let rows = vec![
            MethodSummary::from_final_hvs("hv_per_sample", &[399.1, 399.5, 399.3], 12.25),
            MethodSummary::from_final_hvs("linear_scalarization", &[398.0], 0.0),
        ];
        write_summary_csv(&path, &rows).unwrap();
        assert_eq!(read_summary_csv(&path).unwrap(), rows);
    }
}
