//! CSV records written by the runners.

use std::fs;
use std::path::Path;

use anyhow::Context;
use disc_source_core::inversion::Iterate;
use disc_source_core::SourcePoint;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxRow {
    pub t: f64,
    pub theta_obs: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldRow {
    pub r: f64,
    pub theta: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterateRow {
    pub iter: usize,
    pub r: f64,
    pub theta: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub grad_r: f64,
    pub grad_theta: f64,
    pub alpha: f64,
}

impl From<&Iterate> for IterateRow {
    fn from(it: &Iterate) -> Self {
        Self {
            iter: it.iter,
            r: it.r,
            theta: it.theta,
            j: it.value,
            grad_r: it.grad_r,
            grad_theta: it.grad_theta,
            alpha: it.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub r: f64,
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub err_r: f64,
    pub err_theta: f64,
    pub err_x: f64,
    pub err_y: f64,
}

/// Per-seed outcome of a table run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub objective: String,
    pub delta: f64,
    pub seed: u64,
    pub r: f64,
    pub theta: f64,
    pub err_r: f64,
    pub err_theta: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn to_cartesian(p: SourcePoint) -> (f64, f64) {
    p.as_polar().to_cartesian()
}

impl TableRow {
    /// Row for `estimate`, with absolute errors against `truth` (wrapped in θ).
    pub fn new(label: impl Into<String>, estimate: SourcePoint, truth: SourcePoint) -> Self {
        let (x, y) = to_cartesian(estimate);
        let (xt, yt) = to_cartesian(truth);
        Self {
            label: label.into(),
            r: estimate.r,
            theta: estimate.theta,
            x,
            y,
            err_r: (estimate.r - truth.r).abs(),
            err_theta: disc_source_core::angle_distance(estimate.theta, truth.theta),
            err_x: (x - xt).abs(),
            err_y: (y - yt).abs(),
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    for row in rows {
        w.serialize(row).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// File names are built from labels; keep them portable.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
