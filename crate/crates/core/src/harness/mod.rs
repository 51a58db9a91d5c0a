//! Parameter sweeps over the arrival or departure probability, with CSV and
//! SVG output.

mod config;
mod csv;
mod svg;
mod sweep;

pub use config::{Axis, ExperimentConfig, OutputSpec, SweepSpec};
pub use csv::{emit_csv, format_sig9, render_csv};
pub use svg::{emit_plot, render_svg, PlotKind};
pub use sweep::{run_sweep, PolicyOutcome, SweepRow};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a truncated file at `path`.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
