//! One-parameter sweeps: a row of scalar outputs per value, optionally with
//! log-log slopes of every column against the swept parameter.

use std::fmt::Write as _;

use kgseries::fit::log_log_slope;

use crate::classical::{run_classical, ClassicalSettings};
use crate::config::RawConfig;
use crate::quantum::{run_quantum, QuantumSettings};
use crate::CliError;

pub const SWEEPABLE: [&str; 5] = ["lambda", "dt", "dtau", "order", "grid_n"];

/// A swept column with its fitted slope against the parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnFit {
    pub column: String,
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub param: String,
    pub values: Vec<String>,
    pub columns: Vec<String>,
    /// `rows[i][c]` is column `c` at `values[i]`; `None` when that run did
    /// not produce the column (e.g. a lower order).
    pub rows: Vec<Vec<Option<f64>>>,
}

enum Prepared {
    Classical(ClassicalSettings),
    Quantum(QuantumSettings),
}

/// Splits a comma-separated value list, rejecting empty entries.
pub fn parse_values(list: &str) -> Result<Vec<String>, CliError> {
    let values: Vec<String> = list.split(',').map(|v| v.trim().to_owned()).collect();
    if values.iter().all(String::is_empty) {
        return Err(CliError::config("sweep needs at least one value"));
    }
    if values.iter().any(String::is_empty) {
        return Err(CliError::config(format!(
            "empty entry in sweep values {list:?}"
        )));
    }
    Ok(values)
}

/// Validates every point before running any of them.
pub fn run_sweep(base: &RawConfig, param: &str, values: &[String]) -> Result<SweepTable, CliError> {
    let param = param.replace('-', "_");
    if !SWEEPABLE.contains(&param.as_str()) {
        return Err(CliError::config(format!(
            "{param} is not sweepable (one of {})",
            SWEEPABLE.join(", ")
        )));
    }
    if values.is_empty() {
        return Err(CliError::config("sweep needs at least one value"));
    }
    let mut prepared = Vec::new();
    let mut problems = Vec::new();
    for v in values {
        let mut raw = base.clone();
        raw.set(&param, v);
        let point = if param == "dtau" {
            // each row is its own refinement level
            raw.set("refine", 1);
            QuantumSettings::from_raw(&raw).map(Prepared::Quantum)
        } else {
            ClassicalSettings::from_raw(&raw).map(Prepared::Classical)
        };
        match point {
            Ok(p) => prepared.push(p),
            Err(CliError::Config(list)) => {
                problems.extend(list.into_iter().map(|m| format!("{param}={v}: {m}")))
            }
            Err(other) => return Err(other),
        }
    }
    if !problems.is_empty() {
        problems.dedup();
        return Err(CliError::Config(problems));
    }

    let mut columns: Vec<String> = Vec::new();
    let mut scalars = Vec::new();
    for point in &prepared {
        let row = match point {
            Prepared::Classical(s) => run_classical(s)?.scalars(),
            Prepared::Quantum(s) => run_quantum(s)?.scalars(),
        };
        for (name, _) in &row {
            if !columns.contains(name) {
                columns.push(name.clone());
            }
        }
        scalars.push(row);
    }
    let rows = scalars
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|c| row.iter().find(|(n, _)| n == c).map(|(_, v)| *v))
                .collect()
        })
        .collect();
    Ok(SweepTable {
        param,
        values: values.to_vec(),
        columns,
        rows,
    })
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.param.clone();
        for c in &self.columns {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for (v, row) in self.values.iter().zip(&self.rows) {
            out.push_str(v);
            for cell in row {
                match cell {
                    Some(x) => write!(out, ",{x:e}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Slope of `ln |column|` against `ln param` over the rows where both
    /// are positive; columns with fewer than two such rows are skipped.
    pub fn fits(&self) -> Vec<ColumnFit> {
        let xs: Vec<Option<f64>> = self.values.iter().map(|v| v.parse::<f64>().ok()).collect();
        let mut out = Vec::new();
        for (c, name) in self.columns.iter().enumerate() {
            let (x, y): (Vec<f64>, Vec<f64>) = xs
                .iter()
                .zip(&self.rows)
                .filter_map(|(x, row)| Some((x.filter(|v| *v > 0.0)?, row[c]?.abs())))
                .filter(|(_, y)| *y > 0.0 && y.is_finite())
                .unzip();
            if let Some(fit) = log_log_slope(&x, &y) {
                out.push(ColumnFit {
                    column: name.clone(),
                    slope: fit.slope,
                    stderr: fit.stderr,
                });
            }
        }
        out
    }
}

pub fn fits_to_csv(fits: &[ColumnFit]) -> String {
    let mut out = String::from("column,slope,stderr\n");
    for f in fits {
        writeln!(out, "{},{},{}", f.column, f.slope, f.stderr).unwrap();
    }
    out
}
