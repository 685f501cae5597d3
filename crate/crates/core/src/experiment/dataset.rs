use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::PointSet;
use crate::io::csv::read_point_rows;
use crate::linalg::DenseMatrix;

/// The nine POI categories used by the default dataset schema.
pub const DEFAULT_TYPES: [&str; 9] = [
    "business",
    "entertainment",
    "hospital",
    "chinese_restaurant",
    "non_chinese_restaurant",
    "hotel",
    "residential",
    "snack_bar",
    "public_transport",
];

/// Ordered type labels; a label's position is its channel index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMap {
    names: Vec<String>,
}

impl TypeMap {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("type map is empty".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Config(format!("duplicate type label {n:?}")));
            }
        }
        Ok(Self { names })
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.names.iter().position(|n| n == label)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// `type0, type1, …` for `n` types, or the nine default labels when
    /// `n == 9`.
    pub fn with_count(n: usize) -> Self {
        if n == DEFAULT_TYPES.len() {
            Self::default()
        } else {
            Self {
                names: (0..n).map(|k| format!("type{k}")).collect(),
            }
        }
    }
}

impl Default for TypeMap {
    fn default() -> Self {
        Self {
            names: DEFAULT_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Points plus the model inputs derived from them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: PointSet,
    /// Row-normalized one-hot type encoding, `n × C`.
    pub features: DenseMatrix,
    /// `ln(1 + count)`; `None` for prediction-only inputs.
    pub targets_log: Option<Vec<f64>>,
    pub type_names: Vec<String>,
}

impl Dataset {
    pub fn from_points(points: PointSet, type_names: Vec<String>) -> Result<Self> {
        if type_names.len() != points.n_types() {
            return Err(Error::DimensionMismatch {
                context: "type names vs point type count",
                expected: points.n_types(),
                found: type_names.len(),
            });
        }
        let features = encode_features(points.types(), points.n_types())?;
        let targets_log = points.intensity().map(log_transform).transpose()?;
        Ok(Self {
            points,
            features,
            targets_log,
            type_names,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.features.cols()
    }

    pub fn counts(&self) -> Option<&[f64]> {
        self.points.intensity()
    }

    pub fn require_targets(&self) -> Result<(&[f64], &[f64])> {
        match (&self.targets_log, self.points.intensity()) {
            (Some(t), Some(c)) => Ok((t, c)),
            _ => Err(Error::Data("dataset has no check-in counts".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadOptions {
    /// Keep only rows with at least this many check-ins.
    pub min_checkins: Option<f64>,
}

/// Read a `id,x,y,type,checkins` CSV. Unknown labels and negative counts are
/// rejected with their line number (the header is line 1).
pub fn load_dataset(path: &Path, type_map: &TypeMap, opts: LoadOptions) -> Result<Dataset> {
    let rows = read_point_rows(path)?;
    let has_counts = rows.iter().any(|r| r.checkins.is_some());
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    let mut types = Vec::new();
    let mut counts = Vec::new();
    for r in rows {
        let t = type_map
            .index_of(&r.label)
            .ok_or_else(|| Error::UnknownLabel {
                row: r.line,
                label: r.label.clone(),
            })?;
        let count = match (has_counts, r.checkins) {
            (true, Some(c)) if c < 0.0 || !c.is_finite() => {
                return Err(Error::NegativeCount {
                    row: r.line,
                    value: c,
                })
            }
            (true, Some(c)) => Some(c),
            (true, None) => {
                return Err(Error::Data(format!(
                    "line {}: missing checkins value",
                    r.line
                )))
            }
            (false, _) => None,
        };
        if let (Some(min), Some(c)) = (opts.min_checkins, count) {
            if c < min {
                continue;
            }
        }
        ids.push(r.id);
        coords.push([r.x, r.y]);
        types.push(t);
        if let Some(c) = count {
            counts.push(c);
        }
    }
    if ids.is_empty() {
        return Err(Error::Data(format!("{}: no rows retained", path.display())));
    }
    let points = PointSet::new(
        ids,
        coords,
        types,
        type_map.len(),
        has_counts.then_some(counts),
    )?;
    Dataset::from_points(points, type_map.names().to_vec())
}

/// One-hot rows, scaled to sum to one.
pub fn encode_features(types: &[usize], channels: usize) -> Result<DenseMatrix> {
    if let Some(&t) = types.iter().find(|&&t| t >= channels) {
        return Err(Error::DimensionMismatch {
            context: "type index vs channel count",
            expected: channels,
            found: t,
        });
    }
    let one_hot =
        DenseMatrix::from_fn(
            types.len(),
            channels,
            |i, c| {
                if types[i] == c {
                    1.0
                } else {
                    0.0
                }
            },
        );
    Ok(row_normalize(&one_hot))
}

/// Scale each row to unit sum; all-zero rows are left as they are.
pub fn row_normalize(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    for i in 0..m.rows() {
        let s: f64 = m.row(i).iter().sum();
        if s != 0.0 {
            out.row_mut(i).iter_mut().for_each(|v| *v /= s);
        }
    }
    out
}

/// `ln(1 + c)`
pub fn log_transform(counts: &[f64]) -> Result<Vec<f64>> {
    counts
        .iter()
        .enumerate()
        .map(|(row, &c)| {
            if c >= 0.0 {
                Ok(c.ln_1p())
            } else {
                Err(Error::NegativeCount { row, value: c })
            }
        })
        .collect()
}

/// `exp(y) − 1`
pub fn inverse_log_transform(values: &[f64]) -> Vec<f64> {
    values.iter().map(|y| y.exp_m1()).collect()
}

/// Count-scale predictions from log-scale outputs, clamped at zero.
pub fn predicted_counts(log_outputs: &[f64]) -> Vec<f64> {
    log_outputs.iter().map(|y| y.exp_m1().max(0.0)).collect()
}
