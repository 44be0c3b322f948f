//! The `trees` table: planar p-tree counts against the exponential bound.

use std::fmt::Write as _;

use kgseries::ptree::{count, count_bound, enumerate};

use crate::CliError;

/// CSV `order,count,bound` for orders `0..=max_order`.
pub fn count_table(p: usize, max_order: usize) -> Result<String, CliError> {
    let mut out = String::from("order,count,bound\n");
    for n in 0..=max_order {
        let c = count(p, n).map_err(|e| CliError::config(e.to_string()))?;
        writeln!(out, "{n},{c},{}", count_bound(p, n)).unwrap();
    }
    Ok(out)
}

/// Canonical keys of every planar tree up to `max_order`, one per line.
pub fn key_list(p: usize, max_order: usize) -> Result<String, CliError> {
    let mut out = String::new();
    for n in 0..=max_order {
        for tree in enumerate(p, n).map_err(|e| CliError::config(e.to_string()))? {
            writeln!(out, "{}", tree.key()).unwrap();
        }
    }
    Ok(out)
}
