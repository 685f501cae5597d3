//! CSV formats. Floats are written with Rust's shortest round-trip
//! formatting, so every reader recovers the written value bit for bit.

use std::collections::HashMap;
use std::path::Path;

use super::{fmt_f64, write_atomic};
use crate::error::{Error, Result};
use crate::experiment::{RunEnvelope, TrainHistory};
use crate::graph::{PointSet, SpatialGraph};

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file))
}

fn header_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Data(format!("{}: missing column {name:?}", path.display())))
}

fn parse_f64(s: &str, what: &str, line: u64) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Data(format!("line {line}: cannot parse {what} {s:?}")))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner()
        .map_err(|e| Error::Data(format!("csv buffer: {e}")))
}

/// One data row of a point CSV, before type labels are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    /// Line number in the file (header is line 1).
    pub line: usize,
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub checkins: Option<f64>,
}

/// Read `id,x,y,type[,checkins]`.
pub fn read_point_rows(path: &Path) -> Result<Vec<PointRow>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let id = header_index(&headers, "id", path)?;
    let x = header_index(&headers, "x", path)?;
    let y = header_index(&headers, "y", path)?;
    let ty = header_index(&headers, "type", path)?;
    let checkins = headers.iter().position(|h| h.trim() == "checkins");
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| {
            rec.get(k)
                .ok_or_else(|| Error::Data(format!("line {line}: missing field {k}")))
        };
        let count = match checkins {
            Some(k) => {
                let s = field(k)?.trim();
                if s.is_empty() {
                    None
                } else {
                    Some(parse_f64(s, "checkins", line)?)
                }
            }
            None => None,
        };
        rows.push(PointRow {
            line: line as usize,
            id: field(id)?.trim().to_string(),
            x: parse_f64(field(x)?, "x", line)?,
            y: parse_f64(field(y)?, "y", line)?,
            label: field(ty)?.trim().to_string(),
            checkins: count,
        });
    }
    Ok(rows)
}

pub fn write_points(path: &Path, points: &PointSet, type_names: &[String]) -> Result<()> {
    write_atomic(path, &points_csv(points, type_names)?)
}

pub fn points_csv(points: &PointSet, type_names: &[String]) -> Result<Vec<u8>> {
    let counts = points.intensity();
    let header: &[&str] = if counts.is_some() {
        &["id", "x", "y", "type", "checkins"]
    } else {
        &["id", "x", "y", "type"]
    };
    let rows = (0..points.len()).map(|i| {
        let c = points.coords()[i];
        let mut r = vec![
            points.ids()[i].clone(),
            fmt_f64(c[0]),
            fmt_f64(c[1]),
            type_names[points.types()[i]].clone(),
        ];
        if let Some(v) = counts {
            r.push(fmt_f64(v[i]));
        }
        r
    });
    csv_bytes(header, rows)
}

/// `src,dst,weight`, one row per undirected edge with `src < dst` compared
/// as strings, rows sorted.
pub fn edge_list_csv(graph: &SpatialGraph, ids: &[String]) -> Result<Vec<u8>> {
    let mut rows: Vec<(&str, &str, f64)> = graph
        .edges()
        .map(|(i, j, w)| {
            let (a, b) = (ids[i].as_str(), ids[j].as_str());
            if a < b {
                (a, b, w)
            } else {
                (b, a, w)
            }
        })
        .collect();
    rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    csv_bytes(
        &["src", "dst", "weight"],
        rows.into_iter()
            .map(|(a, b, w)| vec![a.to_string(), b.to_string(), fmt_f64(w)]),
    )
}

pub fn write_edge_list(path: &Path, graph: &SpatialGraph, ids: &[String]) -> Result<()> {
    write_atomic(path, &edge_list_csv(graph, ids)?)
}

pub fn read_edge_list(path: &Path, ids: &[String]) -> Result<SpatialGraph> {
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let (s, d, w) = (
        header_index(&headers, "src", path)?,
        header_index(&headers, "dst", path)?,
        header_index(&headers, "weight", path)?,
    );
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let lookup = |k: usize| -> Result<usize> {
            let id = rec.get(k).unwrap_or("").trim();
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Data(format!("line {line}: unknown node id {id:?}")))
        };
        edges.push((
            lookup(s)?,
            lookup(d)?,
            parse_f64(rec.get(w).unwrap_or(""), "weight", line)?,
        ));
    }
    SpatialGraph::from_edges(ids.len(), edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub predicted: f64,
    pub actual: Option<f64>,
}

pub fn predictions_csv(rows: &[PredictionRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["id", "predicted_checkins", "actual_checkins"],
        rows.iter().map(|r| {
            vec![
                r.id.clone(),
                fmt_f64(r.predicted),
                r.actual.map(fmt_f64).unwrap_or_default(),
            ]
        }),
    )
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let id = header_index(&headers, "id", path)?;
    let p = header_index(&headers, "predicted_checkins", path)?;
    let a = header_index(&headers, "actual_checkins", path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let actual = rec.get(a).unwrap_or("").trim();
        out.push(PredictionRow {
            id: rec.get(id).unwrap_or("").trim().to_string(),
            predicted: parse_f64(rec.get(p).unwrap_or(""), "predicted_checkins", line)?,
            actual: if actual.is_empty() {
                None
            } else {
                Some(parse_f64(actual, "actual_checkins", line)?)
            },
        });
    }
    Ok(out)
}

/// `epoch,loss,abs_error` with 1-based epochs.
pub fn history_csv(h: &TrainHistory) -> Result<Vec<u8>> {
    csv_bytes(
        &["epoch", "loss", "abs_error"],
        h.loss
            .iter()
            .zip(&h.abs_error)
            .enumerate()
            .map(|(e, (l, a))| vec![(e + 1).to_string(), fmt_f64(*l), fmt_f64(*a)]),
    )
}

pub fn read_history(path: &Path, seed: u64) -> Result<TrainHistory> {
    let cols = read_numeric(path, &["epoch", "loss", "abs_error"])?;
    Ok(TrainHistory {
        seed,
        loss: cols[1].clone(),
        abs_error: cols[2].clone(),
    })
}

/// `epoch,mean,std,min,max` with 1-based epochs.
pub fn envelope_csv(env: &RunEnvelope) -> Result<Vec<u8>> {
    csv_bytes(
        &["epoch", "mean", "std", "min", "max"],
        (0..env.epochs()).map(|e| {
            vec![
                (e + 1).to_string(),
                fmt_f64(env.mean[e]),
                fmt_f64(env.std[e]),
                fmt_f64(env.min[e]),
                fmt_f64(env.max[e]),
            ]
        }),
    )
}

pub fn read_envelope(path: &Path, seeds: Vec<u64>) -> Result<RunEnvelope> {
    let mut cols = read_numeric(path, &["epoch", "mean", "std", "min", "max"])?;
    Ok(RunEnvelope {
        seeds,
        max: cols.pop().unwrap(),
        min: cols.pop().unwrap(),
        std: cols.pop().unwrap(),
        mean: cols.pop().unwrap(),
    })
}

fn read_numeric(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| header_index(&headers, n, path))
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        for (c, (&k, name)) in idx.iter().zip(names).enumerate() {
            cols[c].push(parse_f64(rec.get(k).unwrap_or(""), name, line)?);
        }
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmp(bytes: &[u8]) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), bytes).unwrap();
        f
    }

    #[test]
    fn edge_list_orders_ids_as_strings() {
        let ids: Vec<String> = ["b", "a", "c"].iter().map(|s| s.to_string()).collect();
        let g = SpatialGraph::from_edges(3, [(0, 1, 0.5), (0, 2, 1.0)]).unwrap();
        let text = String::from_utf8(edge_list_csv(&g, &ids).unwrap()).unwrap();
        assert_eq!(text, "src,dst,weight\na,b,0.5\nb,c,1\n");
        let f = tmp(text.as_bytes());
        assert_eq!(read_edge_list(f.path(), &ids).unwrap(), g);
        let f = tmp(b"src,dst,weight\na,zz,1\n");
        assert!(read_edge_list(f.path(), &ids).is_err());
    }

    #[test]
    fn prediction_blank_actuals() {
        let rows = vec![
            PredictionRow {
                id: "x".into(),
                predicted: 1.5,
                actual: None,
            },
            PredictionRow {
                id: "y".into(),
                predicted: 0.0,
                actual: Some(3.0),
            },
        ];
        let bytes = predictions_csv(&rows).unwrap();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "id,predicted_checkins,actual_checkins\nx,1.5,\ny,0,3\n"
        );
        assert_eq!(read_predictions(tmp(&bytes).path()).unwrap(), rows);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
    }

    proptest! {
        #[test]
        fn history_and_envelope_round_trip(
            loss in prop::collection::vec(finite(), 1..20),
            seed in any::<u64>(),
        ) {
            let h = TrainHistory { seed, abs_error: loss.iter().map(|v| v.abs()).collect(), loss };
            let f = tmp(&history_csv(&h).unwrap());
            prop_assert_eq!(read_history(f.path(), seed).unwrap(), h.clone());

            let env = RunEnvelope::from_histories(std::slice::from_ref(&h)).unwrap();
            let f = tmp(&envelope_csv(&env).unwrap());
            prop_assert_eq!(read_envelope(f.path(), vec![seed]).unwrap(), env);
        }

        #[test]
        fn points_round_trip(xs in prop::collection::vec((finite(), finite(), 0usize..3, 0u32..100000), 1..15)) {
            let names: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
            let p = PointSet::new(
                (0..xs.len()).map(|i| format!("id{i}")).collect(),
                xs.iter().map(|t| [t.0, t.1]).collect(),
                xs.iter().map(|t| t.2).collect(),
                3,
                Some(xs.iter().map(|t| t.3 as f64).collect()),
            ).unwrap();
            let f = tmp(&points_csv(&p, &names).unwrap());
            let rows = read_point_rows(f.path()).unwrap();
            for (i, r) in rows.iter().enumerate() {
                prop_assert_eq!(r.x.to_bits(), p.coords()[i][0].to_bits());
                prop_assert_eq!(r.y.to_bits(), p.coords()[i][1].to_bits());
                prop_assert_eq!(&r.label, &names[p.types()[i]]);
                prop_assert_eq!(r.checkins, Some(p.intensity().unwrap()[i]));
                prop_assert_eq!(r.line, i + 2);
            }
        }
    }
}
