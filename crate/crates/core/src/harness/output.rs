//! CSV writers and readers shared by the runners.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing a
//! file gives back the exact values that were logged.

use crate::mask::FeatureVector;
use crate::scene::JointState;
use crate::servo::{CouplingMatrix, PseudoJacobian, TrajectoryLog, FEATURES};

use super::HarnessError;

fn csv_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("csv: {e}"))
}

pub(crate) fn to_csv(header: &[String], rows: &[Vec<String>]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Servo steps as CSV.
///
/// Columns: `placement, episode, step, frame`, one column per joint, then
/// `s_x, s_y, e_x, e_y, area, updates, events`. `updates` counts the jacobian
/// updates applied so far and indexes the parameter trace; `events` is a
/// `;`-separated list.
pub fn trajectory_csv(segments: &[(usize, usize, &TrajectoryLog)]) -> Result<String, HarnessError> {
    let joints: Vec<String> = segments
        .iter()
        .find_map(|(_, _, log)| log.records.first())
        .map(|r| r.q.names().map(str::to_owned).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = ["placement", "episode", "step", "frame"].map(String::from).to_vec();
    header.extend(joints.iter().cloned());
    header.extend(["s_x", "s_y", "e_x", "e_y", "area", "updates", "events"].map(String::from));
    let mut rows = Vec::new();
    for (placement, episode, log) in segments {
        for r in &log.records {
            let mut row = vec![placement.to_string(), episode.to_string(), r.step.to_string(), r.frame.to_string()];
            for name in &joints {
                row.push(opt(r.q.get(name)));
            }
            row.push(opt(r.features.map(|s| s.x)));
            row.push(opt(r.features.map(|s| s.y)));
            row.push(opt(r.error.map(|e| e[0])));
            row.push(opt(r.error.map(|e| e[1])));
            row.push(r.area.to_string());
            row.push(r.updates.to_string());
            row.push(r.events.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";"));
            rows.push(row);
        }
    }
    to_csv(&header, &rows)
}

/// One step read back from a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub placement: usize,
    pub episode: usize,
    pub step: usize,
    pub frame: u64,
    pub q: JointState,
    pub features: Option<FeatureVector>,
    pub area: usize,
}

pub fn read_trajectory_csv(text: &str) -> Result<Vec<ReplayRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| csv_err(format!("missing column `{name}`")));
    let (frame_col, sx_col) = (col("frame")?, col("s_x")?);
    let idx = [col("placement")?, col("episode")?, col("step")?, frame_col, sx_col, col("s_y")?, col("area")?];
    let joints = &header[frame_col + 1..sx_col];

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let int = |i: usize| field(i).parse::<u64>().map_err(|e| csv_err(format!("`{}`: {e}", field(i))));
        let float = |i: usize| field(i).parse::<f64>().map_err(|e| csv_err(format!("`{}`: {e}", field(i))));
        let mut q = JointState::new();
        for (k, name) in joints.iter().enumerate() {
            q.set(name, float(frame_col + 1 + k)?).map_err(csv_err)?;
        }
        let features = if field(idx[4]).is_empty() { None } else { Some(FeatureVector::new(float(idx[4])?, float(idx[5])?)) };
        rows.push(ReplayRow {
            placement: int(idx[0])? as usize,
            episode: int(idx[1])? as usize,
            step: int(idx[2])? as usize,
            frame: int(idx[3])?,
            q,
            features,
            area: int(idx[6])? as usize,
        });
    }
    Ok(rows)
}

/// Coupled J⁺ entries after each update; row 0 is the starting matrix.
pub(crate) fn parameter_csv(coupling: &CouplingMatrix, trace: &[PseudoJacobian]) -> Result<String, HarnessError> {
    let entries: Vec<(usize, usize)> = (0..coupling.joints().len())
        .flat_map(|i| (0..coupling.features()).map(move |j| (i, j)))
        .filter(|&(i, j)| coupling.get(i, j))
        .collect();
    let mut header = vec!["update".to_string()];
    header.extend(entries.iter().map(|&(i, j)| format!("{}:{}", coupling.joints()[i], FEATURES[j])));
    let rows: Vec<Vec<String>> = trace
        .iter()
        .enumerate()
        .map(|(n, jac)| {
            let mut row = vec![n.to_string()];
            row.extend(entries.iter().map(|&(i, j)| jac.values()[(i, j)].to_string()));
            row
        })
        .collect();
    to_csv(&header, &rows)
}
