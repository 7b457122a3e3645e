//! Trajectory CSV serialization: one header line, comma separator, 17
//! significant digits so every `f64` round-trips bit-exactly, and atomic
//! replacement on write (temp file in the target directory, then rename).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dofoc_core::Trajectory;

use crate::error::CliError;

/// Writes `bytes` to `path` atomically: the content lands in a temporary
/// file beside the target, which is renamed over it only once fully written.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("cannot rename over {}: {e}", path.display())))?;
    Ok(())
}

/// Writes a trajectory as `t,<prefix>1,...,<prefix>dim` rows. Values are
/// printed with 17 significant digits (`{:.16e}`), which is lossless for
/// `f64`.
pub fn write_trajectory(
    path: &Path,
    traj: &Trajectory,
    component_prefix: &str,
) -> Result<(), CliError> {
    let grid = traj.grid();
    let mut out = String::with_capacity(grid.len() * (traj.dim() + 1) * 26);
    out.push('t');
    for k in 0..traj.dim() {
        let _ = write!(out, ",{component_prefix}{}", k + 1);
    }
    out.push('\n');
    for i in 0..grid.len() {
        let _ = write!(out, "{:.16e}", grid.node(i));
        for k in 0..traj.dim() {
            let _ = write!(out, ",{:.16e}", traj.get(i, k));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a trajectory CSV back as `(times, dim, row-major values)`.
pub fn read_trajectory(path: &Path) -> Result<(Vec<f64>, usize, Vec<f64>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Mismatch(format!("{}: empty file", path.display())))?;
    if header != "t" && !header.starts_with("t,") {
        return Err(CliError::Mismatch(format!(
            "{}: header must start with the time column, got {header:?}",
            path.display()
        )));
    }
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(CliError::Mismatch(format!(
            "{}: need at least one component column",
            path.display()
        )));
    }
    let dim = cols - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = 0usize;
        for (j, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::Mismatch(format!(
                    "{}: row {}: cannot parse {field:?} as a number",
                    path.display(),
                    k + 1
                ))
            })?;
            if j == 0 {
                times.push(v);
            } else {
                values.push(v);
            }
            fields += 1;
        }
        if fields != cols {
            return Err(CliError::Mismatch(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                k + 1,
                fields,
                cols
            )));
        }
    }
    if times.is_empty() {
        return Err(CliError::Mismatch(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok((times, dim, values))
}
