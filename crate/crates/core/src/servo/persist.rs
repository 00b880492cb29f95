//! Plain-text storage for a learned pseudoinverse jacobian.
//!
//! ```text
//! # segservo pseudo-jacobian v1
//! joints base_forward base_lateral
//! features s_x s_y
//! alpha 0.1
//! gain 1
//! target 320 240
//! coupling
//! 1 0
//! 0 1
//! values
//! -0.0012 0
//! 0 0.0012
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so load → save
//! reproduces a file byte for byte.

use std::path::Path;

use nalgebra::DMatrix;

use super::{CouplingMatrix, PseudoJacobian, ServoError, FEATURES};
use crate::mask::FeatureVector;

const MAGIC: &str = "# segservo pseudo-jacobian v1";

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianFile {
    pub jacobian: PseudoJacobian,
    pub coupling: CouplingMatrix,
    pub alpha: f64,
    pub gain: f64,
    pub target: FeatureVector,
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

impl JacobianFile {
    pub fn to_text(&self) -> String {
        let j = self.jacobian.values();
        let h = self.coupling.as_matrix();
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("joints {}\n", self.jacobian.joints().join(" ")));
        out.push_str(&format!("features {}\n", FEATURES[..j.ncols()].join(" ")));
        out.push_str(&format!("alpha {}\n", self.alpha));
        out.push_str(&format!("gain {}\n", self.gain));
        out.push_str(&format!("target {} {}\n", self.target.x, self.target.y));
        out.push_str("coupling\n");
        for row in h.row_iter() {
            out.push_str(&join(row.iter().copied()));
            out.push('\n');
        }
        out.push_str("values\n");
        for row in j.row_iter() {
            out.push_str(&join(row.iter().copied()));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ServoError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next() != Some(MAGIC) {
            return Err(parse_err("missing header line"));
        }
        let joints = next_field(&mut lines, "joints")?;
        let features = next_field(&mut lines, "features")?;
        if features.is_empty() || features.len() > FEATURES.len() || features.iter().zip(FEATURES).any(|(a, b)| a != b) {
            return Err(parse_err(format!("unsupported features {features:?}")));
        }
        let alpha = scalar(next_field(&mut lines, "alpha")?, "alpha")?;
        let gain = scalar(next_field(&mut lines, "gain")?, "gain")?;
        let target = match next_field(&mut lines, "target")?.as_slice() {
            [x, y] => FeatureVector::new(num(x)?, num(y)?),
            _ => return Err(parse_err("`target` takes two numbers")),
        };
        let (n, k) = (joints.len(), features.len());
        let h = next_matrix(&mut lines, "coupling", n, k)?;
        let values = next_matrix(&mut lines, "values", n, k)?;
        if lines.next().is_some() {
            return Err(parse_err("trailing content"));
        }
        if h.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(parse_err("coupling entries must be 0 or 1"));
        }
        let rows = (0..n).map(|i| (0..k).map(|j| h[(i, j)] == 1.0).collect()).collect();
        let coupling = CouplingMatrix::new(joints.clone(), rows)?;
        let jacobian = PseudoJacobian::new(joints, values)?;
        if !jacobian.satisfies_gating(&coupling) {
            return Err(parse_err("values are nonzero where coupling is zero"));
        }
        Ok(Self { jacobian, coupling, alpha, gain, target })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self, ServoError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServoError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

fn parse_err(msg: impl Into<String>) -> ServoError {
    ServoError::Parse(msg.into())
}

fn num(s: &str) -> Result<f64, ServoError> {
    s.parse::<f64>().map_err(|e| parse_err(format!("`{s}`: {e}")))
}

fn scalar(values: Vec<String>, key: &str) -> Result<f64, ServoError> {
    match values.as_slice() {
        [x] => num(x),
        _ => Err(parse_err(format!("`{key}` takes one number"))),
    }
}

fn next_field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<String>, ServoError> {
    let line = lines.next().ok_or_else(|| parse_err(format!("missing `{key}`")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(parse_err(format!("expected `{key}`, found `{line}`")));
    }
    Ok(parts.map(str::to_owned).collect())
}

fn next_matrix<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    key: &str,
    n: usize,
    k: usize,
) -> Result<DMatrix<f64>, ServoError> {
    if !next_field(lines, key)?.is_empty() {
        return Err(parse_err(format!("`{key}` takes no inline values")));
    }
    let mut m = DMatrix::zeros(n, k);
    for i in 0..n {
        let line = lines.next().ok_or_else(|| parse_err(format!("`{key}` is missing row {i}")))?;
        let row: Vec<f64> = line.split_whitespace().map(num).collect::<Result<_, _>>()?;
        if row.len() != k {
            return Err(parse_err(format!("`{key}` row {i} has {} entries, expected {k}", row.len())));
        }
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}
