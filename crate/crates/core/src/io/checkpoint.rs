//! Model checkpoints as a small TOML document.
//!
//! ```text
//! format = "spatial-gcn-checkpoint"
//! version = 1
//! input_channels = 9
//! hidden_units = 32
//! outputs = 1
//! seed = 7
//! epochs = 2000
//! theta0 = [
//!   [1.2345678901234567e-1, ...],
//! ]
//! theta1 = [ ... ]
//! ```
//!
//! Matrices are row-major; every value is written with 17 significant digits
//! so loading restores the exact bits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::linalg::DenseMatrix;

const FORMAT: &str = "spatial-gcn-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: GcnModel,
    pub seed: u64,
    pub epochs: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    format: String,
    version: u32,
    input_channels: usize,
    hidden_units: usize,
    outputs: usize,
    seed: u64,
    epochs: usize,
    theta0: Vec<Vec<f64>>,
    theta1: Vec<Vec<f64>>,
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_matrix(out: &mut String, name: &str, m: &DenseMatrix) {
    let _ = writeln!(out, "{name} = [");
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt17(v)).collect();
        let _ = writeln!(out, "  [{}],", row.join(", "));
    }
    out.push_str("]\n");
}

fn read_matrix(name: &str, rows: Vec<Vec<f64>>, shape: (usize, usize)) -> Result<DenseMatrix> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::Data(format!(
            "checkpoint {name}: expected {}x{} matrix",
            shape.0, shape.1
        )));
    }
    DenseMatrix::from_vec(shape.0, shape.1, rows.into_iter().flatten().collect())
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let (c, h, o) = self.model.dims();
        let mut s = String::new();
        let _ = writeln!(s, "format = \"{FORMAT}\"");
        let _ = writeln!(s, "version = {VERSION}");
        let _ = writeln!(s, "input_channels = {c}");
        let _ = writeln!(s, "hidden_units = {h}");
        let _ = writeln!(s, "outputs = {o}");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        write_matrix(&mut s, "theta0", &self.model.theta0);
        write_matrix(&mut s, "theta1", &self.model.theta1);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Data(format!("checkpoint: {e}")))?;
        if raw.format != FORMAT || raw.version != VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint format {:?} version {}",
                raw.format, raw.version
            )));
        }
        if raw.outputs != 1 {
            return Err(Error::Data(format!(
                "checkpoint outputs must be 1, found {}",
                raw.outputs
            )));
        }
        let theta0 = read_matrix("theta0", raw.theta0, (raw.input_channels, raw.hidden_units))?;
        let theta1 = read_matrix("theta1", raw.theta1, (raw.hidden_units, 1))?;
        Ok(Self {
            model: GcnModel::new(theta0, theta1)?,
            seed: raw.seed,
            epochs: raw.epochs,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
