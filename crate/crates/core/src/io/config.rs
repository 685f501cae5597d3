//! Flat `key = value` documents: run configuration and metric reports.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiment::TrainConfig;
use crate::graph::DecayScheme;

/// Everything a command-line run needs. Unset keys take the defaults of
/// [`TrainConfig`] and the 600 m buffer graph.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub dataset: Option<PathBuf>,
    /// Edge-list CSV; when absent the graph is built from `scheme`.
    pub graph: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Optional comma-free list of type labels; defaults to the nine POI types.
    pub types: Option<Vec<String>>,
    pub min_checkins: Option<f64>,

    /// `binary`, `power`, `exponential` or `gaussian`.
    pub scheme: String,
    pub exponent: f64,
    pub rate: f64,
    pub k: usize,

    pub epochs: usize,
    pub learning_rate: f64,
    pub l2_weight: f64,
    pub dropout_p: f64,
    pub hidden_units: usize,
    pub train_fraction: f64,
    pub buffer_radius: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,

    pub cell_size: f64,
    pub bandwidth: f64,
}

impl Default for CliConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            dataset: None,
            graph: None,
            checkpoint: None,
            output_dir: None,
            types: None,
            min_checkins: None,
            scheme: "binary".into(),
            exponent: 1.0,
            rate: 1e-3,
            k: 7,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            l2_weight: t.l2_weight,
            dropout_p: t.dropout_p,
            hidden_units: t.hidden_units,
            train_fraction: t.train_fraction,
            buffer_radius: t.buffer_radius,
            seed: t.seed,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            cell_size: 200.0,
            bandwidth: 300.0,
        }
    }
}

impl CliConfig {
    /// Parse a document; relative paths are resolved against `base_dir`.
    pub fn from_text(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: CliConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in [
            &mut c.dataset,
            &mut c.graph,
            &mut c.checkpoint,
            &mut c.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_text(&text, base)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            l2_weight: self.l2_weight,
            dropout_p: self.dropout_p,
            hidden_units: self.hidden_units,
            train_fraction: self.train_fraction,
            buffer_radius: self.buffer_radius,
            seed: self.seed,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn decay_scheme(&self) -> Result<DecayScheme> {
        parse_scheme(
            &self.scheme,
            self.buffer_radius,
            self.exponent,
            self.rate,
            self.k,
        )
    }

    /// Check that every configured input path exists.
    pub fn check_inputs(&self) -> Result<()> {
        for p in [&self.dataset, &self.graph].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "input path does not exist: {}",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_scheme(
    name: &str,
    radius: f64,
    exponent: f64,
    rate: f64,
    k: usize,
) -> Result<DecayScheme> {
    Ok(match name {
        "binary" | "buffer" => DecayScheme::Binary { radius },
        "power" => DecayScheme::Power { exponent },
        "exponential" => DecayScheme::Exponential { rate },
        "gaussian" => DecayScheme::Gaussian { k },
        other => {
            return Err(Error::Config(format!(
                "unknown weighting scheme {other:?} (binary, power, exponential, gaussian)"
            )))
        }
    })
}

/// Ordered `key = value` lines; strings are quoted, numbers use shortest
/// round-trip formatting. The output parses as TOML.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValueDoc {
    entries: Vec<(String, String)>,
}

impl KeyValueDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        let s = if v.is_finite() {
            let t = super::fmt_f64(v);
            if t.contains(['.', 'e', 'E']) {
                t
            } else {
                format!("{t}.0")
            }
        } else if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
        self.entries.push((key.into(), s));
        self
    }

    pub fn int(&mut self, key: &str, v: i64) -> &mut Self {
        self.entries.push((key.into(), v.to_string()));
        self
    }

    pub fn array(&mut self, key: &str, v: &[f64]) -> &mut Self {
        let items: Vec<String> = v
            .iter()
            .map(|&x| {
                let mut d = KeyValueDoc::new();
                d.num("", x);
                d.entries.pop().map(|e| e.1).unwrap_or_default()
            })
            .collect();
        self.entries
            .push((key.into(), format!("[{}]", items.join(", "))));
        self
    }

    pub fn text(&mut self, key: &str, v: &str) -> &mut Self {
        self.entries.push((
            key.into(),
            format!("\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\"")),
        ));
        self
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Parse a rendered document back into `(key, value)` pairs with numbers
    /// as `f64`.
    pub fn parse_numbers(text: &str) -> Result<Vec<(String, f64)>> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Data(e.to_string()))?;
        Ok(table
            .into_iter()
            .filter_map(|(k, v)| match v {
                toml::Value::Float(f) => Some((k, f)),
                toml::Value::Integer(i) => Some((k, i as f64)),
                _ => None,
            })
            .collect())
    }
}
