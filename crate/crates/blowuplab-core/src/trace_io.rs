//! Trace and report serialization.
//!
//! A trace directory holds `samples.csv` (t, m, dt), `snapshots/snap_NNNN.csv`
//! (r, u), and `meta.json` (config echo, stop reason, grid history, snapshot
//! index). All numeric columns are written with 17 significant digits so
//! values round-trip exactly, and nothing in the artifacts depends on wall
//! time: identical configs produce byte-identical directories.

use crate::integrate::{RegridEvent, Sample, Snapshot, SolverConfig, StopReason, Trace};
use crate::mesh::{Field, RadialGrid};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] crate::mesh::GridError),
}

fn io_err(path: &Path, source: std::io::Error) -> TraceIoError {
    TraceIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// 17 significant digits: enough for exact f64 round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a over bytes; stable across platforms and builds, used for
/// provenance hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn hash_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnapshotMeta {
    file: String,
    t: f64,
    m: f64,
    dt_used: f64,
    nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceMeta {
    schema: u32,
    config: SolverConfig,
    stop_reason: StopReason,
    grid_history: Vec<RegridEvent>,
    monotonicity_violation: f64,
    steps: u64,
    t_final: f64,
    m_final: f64,
    snapshots: Vec<SnapshotMeta>,
    /// Which sufficient type-I condition (if any) the configuration meets.
    type1_condition: String,
}

fn type1_condition_note(cfg: &SolverConfig) -> String {
    use crate::integrate::Domain;
    match cfg.domain {
        Domain::TruncatedWholeSpace { .. } if cfg.n == 1 => {
            "whole_space_n1_radial_decreasing".into()
        }
        Domain::Ball { .. } if (3..=9).contains(&cfg.n) => "ball_3_le_n_le_9".into(),
        _ => "unverified".into(),
    }
}

pub fn samples_csv(samples: &[Sample]) -> String {
    let mut out = String::with_capacity(samples.len() * 72 + 16);
    out.push_str("t,m,dt\n");
    for s in samples {
        out.push_str(&fmt_f64(s.t));
        out.push(',');
        out.push_str(&fmt_f64(s.m));
        out.push(',');
        out.push_str(&fmt_f64(s.dt));
        out.push('\n');
    }
    out
}

fn snapshot_csv(f: &Field) -> String {
    let mut out = String::with_capacity(f.values.len() * 48 + 8);
    out.push_str("r,u\n");
    for (&r, &u) in f.grid.nodes().iter().zip(&f.values) {
        out.push_str(&fmt_f64(r));
        out.push(',');
        out.push_str(&fmt_f64(u));
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), TraceIoError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))
}

/// Writes the trace directory (samples.csv, snapshots/, meta.json).
pub fn write_trace(dir: &Path, tr: &Trace) -> Result<(), TraceIoError> {
    fs::create_dir_all(dir.join("snapshots")).map_err(|e| io_err(dir, e))?;
    write_file(&dir.join("samples.csv"), &samples_csv(&tr.samples))?;
    let mut snap_meta = Vec::with_capacity(tr.snapshots.len());
    for (i, snap) in tr.snapshots.iter().enumerate() {
        let file = format!("snapshots/snap_{i:04}.csv");
        write_file(&dir.join(&file), &snapshot_csv(&snap.field))?;
        snap_meta.push(SnapshotMeta {
            file,
            t: snap.t,
            m: snap.m,
            dt_used: snap.dt_used,
            nodes: snap.field.values.len(),
        });
    }
    let meta = TraceMeta {
        schema: 1,
        config: tr.config.clone(),
        stop_reason: tr.stop_reason,
        grid_history: tr.grid_history.clone(),
        monotonicity_violation: tr.monotonicity_violation,
        steps: tr.steps,
        t_final: tr.t_final(),
        m_final: tr.m_final(),
        snapshots: snap_meta,
        type1_condition: type1_condition_note(&tr.config),
    };
    let json = serde_json::to_string_pretty(&meta)?;
    write_file(&dir.join("meta.json"), &json)?;
    Ok(())
}

fn parse_csv_columns(path: &Path, expect_header: &str) -> Result<Vec<Vec<f64>>, TraceIoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| TraceIoError::Malformed(format!("{}: empty", path.display())))?;
    if header != expect_header {
        return Err(TraceIoError::Malformed(format!(
            "{}: header {header:?}, expected {expect_header:?}",
            path.display()
        )));
    }
    let width = expect_header.split(',').count();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let mut row = Vec::with_capacity(width);
        for part in line.split(',') {
            row.push(part.parse::<f64>().map_err(|e| {
                TraceIoError::Malformed(format!("{} line {}: {e}", path.display(), ln + 2))
            })?);
        }
        if row.len() != width {
            return Err(TraceIoError::Malformed(format!(
                "{} line {}: {} columns, expected {width}",
                path.display(),
                ln + 2,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a trace directory back into memory.
pub fn read_trace(dir: &Path) -> Result<Trace, TraceIoError> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let meta: TraceMeta = serde_json::from_str(&meta_text)?;
    if meta.schema != 1 {
        return Err(TraceIoError::Malformed(format!(
            "unsupported schema {}",
            meta.schema
        )));
    }
    let samples = parse_csv_columns(&dir.join("samples.csv"), "t,m,dt")?
        .into_iter()
        .map(|row| Sample {
            t: row[0],
            m: row[1],
            dt: row[2],
        })
        .collect();
    let mut snapshots = Vec::with_capacity(meta.snapshots.len());
    for sm in &meta.snapshots {
        let rows = parse_csv_columns(&dir.join(&sm.file), "r,u")?;
        let nodes: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let grid = RadialGrid::from_nodes(
            meta.config.n,
            meta.config.domain.truncated(),
            nodes,
            meta.config.grid.clone(),
        )?;
        let field = Field::new(grid, values, sm.t)
            .map_err(|e| TraceIoError::Malformed(e.to_string()))?;
        snapshots.push(Snapshot {
            field,
            t: sm.t,
            m: sm.m,
            dt_used: sm.dt_used,
        });
    }
    Ok(Trace {
        config: meta.config,
        samples,
        snapshots,
        stop_reason: meta.stop_reason,
        grid_history: meta.grid_history,
        monotonicity_violation: meta.monotonicity_violation,
        steps: meta.steps,
    })
}

/// Provenance hashes for a verification report: config, samples, and the
/// bound parameters actually used.
pub fn provenance(
    tr: &Trace,
    bounds_json: &str,
) -> Result<crate::verify::Provenance, TraceIoError> {
    let config_json = serde_json::to_string(&tr.config)?;
    Ok(crate::verify::Provenance {
        config_hash: hash_hex(config_json.as_bytes()),
        trace_hash: hash_hex(samples_csv(&tr.samples).as_bytes()),
        bounds_hash: hash_hex(bounds_json.as_bytes()),
    })
}
