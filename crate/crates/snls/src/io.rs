//! Output emitters with fixed column contracts and hash-guarded overwrites.
//!
//! Every emitted file records the config hash it was produced under: JSON
//! documents in a `config_hash` field, CSV files in a leading comment line
//! `# config_hash=<hex> seed=<seed> version=<semver>`. Writing over an
//! existing file whose recorded hash differs is refused unless forced.
//!
//! CSV column orders are contracts:
//!
//! - step reports: `time,mass,lr_norm,y_norm,jump_flag` (an
//!   `exact_l2_error` column is appended -- never inserted -- when the run
//!   has a closed-form reference);
//! - trajectory: `time,kind,re0,im0,re1,im1,...`;
//! - fixed-point diagnostics: `iteration,y_distance,ratio`;
//! - ensemble paths: `path,events,max_mass_drift,blow_up,<observables...>`
//!   with observables in alphabetical order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::EnsembleSummary;
use crate::mild::PicardRun;
use crate::norms::{SnapshotKind, Trajectory};
use crate::solver::StepReport;

/// 64-bit FNV-1a over raw bytes, hex-encoded; the config fingerprint.
pub fn fnv1a64_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

fn csv_header_line(config_hash: &str, seed: u64) -> String {
    format!(
        "# config_hash={config_hash} seed={seed} version={}\n",
        env!("CARGO_PKG_VERSION")
    )
}

/// Extracts the recorded config hash from previously written output bytes.
fn recorded_hash(content: &str) -> Option<String> {
    let trimmed = content.trim_start();
    if trimmed.starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(trimmed).ok()?;
        return value
            .get("config_hash")
            .and_then(|v| v.as_str())
            .map(str::to_string);
    }
    let first = content.lines().next()?;
    first
        .strip_prefix("# config_hash=")?
        .split_whitespace()
        .next()
        .map(str::to_string)
}

/// Writes `content`, refusing to overwrite a file that records a different
/// config hash unless `force` is set.
pub fn write_guarded(path: &Path, content: &str, config_hash: &str, force: bool) -> Result<()> {
    if !force && path.exists() {
        let existing = std::fs::read_to_string(path)?;
        if let Some(found) = recorded_hash(&existing) {
            if found != config_hash {
                return Err(Error::HashMismatch {
                    path: path.display().to_string(),
                    found,
                    expected: config_hash.to_string(),
                });
            }
        }
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    Ok(())
}

fn kind_label(kind: SnapshotKind) -> &'static str {
    match kind {
        SnapshotKind::Interior => "interior",
        SnapshotKind::PreJump => "pre_jump",
        SnapshotKind::PostJump => "post_jump",
    }
}

/// Step-report CSV: `time,mass,lr_norm,y_norm,jump_flag[,exact_l2_error]`.
pub fn step_reports_csv(
    reports: &[StepReport],
    exact_error: Option<&[f64]>,
    config_hash: &str,
    seed: u64,
) -> String {
    let mut out = csv_header_line(config_hash, seed);
    out.push_str("time,mass,lr_norm,y_norm,jump_flag");
    if exact_error.is_some() {
        out.push_str(",exact_l2_error");
    }
    out.push('\n');
    for (i, r) in reports.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.time,
            r.mass,
            r.lr_norm,
            r.y_norm,
            u8::from(r.jump_applied)
        );
        if let Some(errors) = exact_error {
            let _ = write!(out, ",{}", errors[i]);
        }
        out.push('\n');
    }
    out
}

/// Full trajectory CSV: `time,kind,re0,im0,...` -- wide but exact.
pub fn trajectory_csv(traj: &Trajectory, config_hash: &str, seed: u64) -> String {
    let mut out = csv_header_line(config_hash, seed);
    out.push_str("time,kind");
    for i in 0..traj.grid().len() {
        let _ = write!(out, ",re{i},im{i}");
    }
    out.push('\n');
    for i in 0..traj.len() {
        let _ = write!(out, "{},{}", traj.times()[i], kind_label(traj.kind(i)));
        for v in traj.field(i).values() {
            let _ = write!(out, ",{},{}", v.re, v.im);
        }
        out.push('\n');
    }
    out
}

/// Fixed-point diagnostics CSV: `iteration,y_distance,ratio` (empty ratio
/// until two distances exist).
pub fn picard_csv(run: &PicardRun, config_hash: &str, seed: u64) -> String {
    let mut out = csv_header_line(config_hash, seed);
    out.push_str("iteration,y_distance,ratio\n");
    for (i, it) in run.iterates.iter().enumerate() {
        match it.ratio {
            Some(r) => {
                let _ = writeln!(out, "{},{},{}", i + 1, it.distance, r);
            }
            None => {
                let _ = writeln!(out, "{},{},", i + 1, it.distance);
            }
        }
    }
    out
}

/// Per-path ensemble CSV with observables in alphabetical order.
pub fn ensemble_paths_csv(summary: &EnsembleSummary) -> String {
    let mut out = csv_header_line(&summary.config_hash, summary.master_seed);
    let observable_names: Vec<&String> = summary.observables.keys().collect();
    out.push_str("path,events,max_mass_drift,blow_up");
    for name in &observable_names {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for record in &summary.per_path {
        let _ = write!(
            out,
            "{},{},{},{}",
            record.index,
            record.events,
            record.max_mass_drift,
            record.blow_up.map_or(String::new(), |t| t.to_string())
        );
        for name in &observable_names {
            match record.terminal.get(*name) {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline; field order is struct order, so
/// bytes are stable across runs.
pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid_config(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_is_stable_and_sensitive() {
        let a = fnv1a64_hex(b"hello");
        assert_eq!(a, fnv1a64_hex(b"hello"));
        assert_ne!(a, fnv1a64_hex(b"hellp"));
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn recorded_hash_roundtrip_csv_and_json() {
        let csv = csv_header_line("abc123", 7) + "time,mass\n0,1\n";
        assert_eq!(recorded_hash(&csv).unwrap(), "abc123");
        let json = "{\n  \"config_hash\": \"feed01\",\n  \"x\": 1\n}\n";
        assert_eq!(recorded_hash(json).unwrap(), "feed01");
        assert_eq!(recorded_hash("no header here"), None);
    }

    #[test]
    fn guarded_write_refuses_mismatched_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let first = csv_header_line("aaaa", 1) + "x\n";
        write_guarded(&path, &first, "aaaa", false).unwrap();
        // Same hash: fine.
        write_guarded(&path, &first, "aaaa", false).unwrap();
        // Different hash: refused without force.
        let second = csv_header_line("bbbb", 1) + "x\n";
        match write_guarded(&path, &second, "bbbb", false) {
            Err(Error::HashMismatch { .. }) => {}
            other => panic!("expected hash mismatch, got {other:?}"),
        }
        write_guarded(&path, &second, "bbbb", true).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().contains("bbbb"));
    }
}
