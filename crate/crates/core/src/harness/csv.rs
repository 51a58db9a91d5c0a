use std::fmt::Write as _;
use std::path::Path;

use super::sweep::SweepRow;
use super::write_atomic;
use crate::error::{Error, Result};

/// Fixed-point decimal with 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() {
            "0.00000000".to_string()
        } else {
            v.to_string()
        };
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn render_csv(rows: &[SweepRow]) -> Result<String> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Config("no rows to write".into()))?;
    let mut out = String::from("sweep_param,sweep_value");
    for o in &first.outcomes {
        write!(out, ",{p}_gain,{p}_sim_success,{p}_ci95", p = o.policy).unwrap();
    }
    out.push_str(",threshold,threshold_is_clean\n");
    for row in rows {
        write!(out, "{},{}", row.sweep_param, format_sig9(row.sweep_value)).unwrap();
        for o in &row.outcomes {
            write!(
                out,
                ",{},{},{}",
                format_sig9(o.gain),
                format_sig9(o.sim_success),
                format_sig9(o.ci95)
            )
            .unwrap();
        }
        let threshold = row
            .threshold
            .map_or_else(|| "none".to_string(), |k| k.to_string());
        writeln!(out, ",{},{}", threshold, row.threshold_is_clean).unwrap();
    }
    Ok(out)
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_atomic(path, render_csv(rows)?.as_bytes())
}
