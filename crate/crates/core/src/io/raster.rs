//! Gaussian kernel-density rasters of per-point values, exported as a CSV
//! grid, a binary 8-bit graymap and a metadata sidecar.

use std::path::Path;

use super::config::KeyValueDoc;
use super::{fmt_f64, write_atomic};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    /// Lower-left corner `(min x, min y)` of the grid.
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major; row 0 is the southernmost row.
    pub values: Vec<f64>,
}

impl RasterGrid {
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn cell_center(&self, col: usize, row: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (row as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let c = ((p[0] - self.origin[0]) / self.cell_size).floor();
        let r = ((p[1] - self.origin[1]) / self.cell_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            return None;
        }
        Some((c as usize, r as usize))
    }

    /// `(min, max)` over all cells.
    pub fn value_range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            })
    }

    /// One line per row, row 0 first.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str, origin: [f64; 2], cell_size: f64) -> Result<Self> {
        let mut values = Vec::new();
        let mut width = None;
        let mut height = 0;
        for (i, line) in text.lines().enumerate() {
            let row = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Data(format!("raster line {}: {e}", i + 1)))?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::DimensionMismatch {
                        context: "raster row length",
                        expected: w,
                        found: row.len(),
                    })
                }
                _ => {}
            }
            values.extend(row);
            height += 1;
        }
        Ok(Self {
            origin,
            cell_size,
            width: width.unwrap_or(0),
            height,
            values,
        })
    }

    /// Binary P5 graymap, north up. Values are mapped linearly from
    /// `scale = (lo, hi)` to 0..=255; a flat scale maps everything to 0.
    pub fn to_pgm(&self, scale: (f64, f64)) -> Vec<u8> {
        let (lo, hi) = scale;
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for r in (0..self.height).rev() {
            for &v in &self.values[r * self.width..(r + 1) * self.width] {
                let g = if hi > lo {
                    ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0)
                } else {
                    0.0
                };
                out.push(g as u8);
            }
        }
        out
    }

    pub fn metadata(&self, scale: (f64, f64)) -> KeyValueDoc {
        let mut d = KeyValueDoc::new();
        d.num("origin_x", self.origin[0])
            .num("origin_y", self.origin[1])
            .num("cell_size", self.cell_size)
            .int("width", self.width as i64)
            .int("height", self.height as i64)
            .num("value_min", scale.0)
            .num("value_max", scale.1)
            .text(
                "orientation",
                "graymap rows north-up; csv row 0 at origin_y",
            );
        d
    }

    /// Writes `<stem>.csv`, `<stem>.pgm` and `<stem>.meta.toml`. Without an
    /// explicit scale the grid's own min and max are used.
    pub fn export(&self, dir: &Path, stem: &str, scale: Option<(f64, f64)>) -> Result<()> {
        let scale = scale.unwrap_or_else(|| self.value_range());
        write_atomic(&dir.join(format!("{stem}.csv")), self.to_csv().as_bytes())?;
        write_atomic(&dir.join(format!("{stem}.pgm")), &self.to_pgm(scale))?;
        write_atomic(
            &dir.join(format!("{stem}.meta.toml")),
            self.metadata(scale).render().as_bytes(),
        )
    }
}

/// Kernel-density surface `Σ vᵢ exp(−d²/(2b²))` sampled at cell centres.
///
/// The grid is centred on the bounding box padded by `2·bandwidth` on every
/// side, with odd width and height so a lone point sits at a cell centre.
pub fn raster_heatmap(
    points: &PointSet,
    values: &[f64],
    cell_size: f64,
    bandwidth: f64,
) -> Result<RasterGrid> {
    raster_heatmap_with(points, values, cell_size, bandwidth, Execution::default())
}

pub fn raster_heatmap_with(
    points: &PointSet,
    values: &[f64],
    cell_size: f64,
    bandwidth: f64,
    exec: Execution,
) -> Result<RasterGrid> {
    if points.is_empty() {
        return Err(Error::EmptyIndexSet("raster points"));
    }
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cell size must be > 0, got {cell_size}"
        )));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    if values.len() != points.len() {
        return Err(Error::DimensionMismatch {
            context: "raster values",
            expected: points.len(),
            found: values.len(),
        });
    }
    let (x0, y0, x1, y1) = points.bounds();
    let pad = 2.0 * bandwidth;
    let cells = |span: f64| {
        let n = ((span + 2.0 * pad) / cell_size).ceil().max(1.0) as usize;
        n | 1
    };
    let width = cells(x1 - x0);
    let height = cells(y1 - y0);
    let origin = [
        0.5 * (x0 + x1) - 0.5 * width as f64 * cell_size,
        0.5 * (y0 + y1) - 0.5 * height as f64 * cell_size,
    ];
    let coords = points.coords();
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut grid = vec![0.0; width * height];
    exec.for_each_chunk(&mut grid, width, |r, row| {
        let cy = origin[1] + (r as f64 + 0.5) * cell_size;
        for (c, out) in row.iter_mut().enumerate() {
            let cx = origin[0] + (c as f64 + 0.5) * cell_size;
            let mut acc = 0.0;
            for (p, &v) in coords.iter().zip(values) {
                let dx = p[0] - cx;
                let dy = p[1] - cy;
                acc += v * (-(dx * dx + dy * dy) * inv).exp();
            }
            *out = acc;
        }
    });
    Ok(RasterGrid {
        origin,
        cell_size,
        width,
        height,
        values: grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_point_peaks_at_its_cell() {
        let p = PointSet::from_coords(vec![[1234.5, -87.0]]).unwrap();
        let g = raster_heatmap(&p, &[7.5], 50.0, 120.0).unwrap();
        assert!(g.width as f64 * g.cell_size >= 4.0 * 120.0);
        assert_eq!(g.width % 2, 1);
        let (c, r) = g.cell_of([1234.5, -87.0]).unwrap();
        let (best, _) =
            g.values.iter().enumerate().fold(
                (0, f64::MIN),
                |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
            );
        assert_eq!(best, r * g.width + c);
        assert!((g.get(c, r) - 7.5).abs() < 1e-12);
    }

    #[test]
    fn zero_values_give_zero_grid() {
        let p = PointSet::from_coords(vec![[0.0, 0.0], [500.0, 300.0]]).unwrap();
        let g = raster_heatmap(&p, &[0.0, 0.0], 100.0, 100.0).unwrap();
        assert!(g.values.iter().all(|v| *v == 0.0));
        let pgm = g.to_pgm(g.value_range());
        let header = format!("P5\n{} {}\n255\n", g.width, g.height);
        assert_eq!(&pgm[..header.len()], header.as_bytes());
        assert!(pgm[header.len()..].iter().all(|b| *b == 0));
    }

    #[test]
    fn symmetric_pair_doubles_contribution() {
        let b = 100.0;
        let pair = PointSet::from_coords(vec![[-30.0, 0.0], [30.0, 0.0]]).unwrap();
        let g = raster_heatmap(&pair, &[1.0, 1.0], 10.0, b).unwrap();
        let (c, r) = g.cell_of([0.0, 0.0]).unwrap();
        let center = g.cell_center(c, r);
        assert!(center[0].abs() < 1e-9 && center[1].abs() < 1e-9);
        let single = (-(30.0f64 * 30.0) / (2.0 * b * b)).exp();
        assert!((g.get(c, r) - 2.0 * single).abs() < 1e-12);
    }

    #[test]
    fn parameter_errors() {
        let p = PointSet::from_coords(vec![[0.0, 0.0]]).unwrap();
        assert!(raster_heatmap(&p, &[1.0], 0.0, 1.0).is_err());
        assert!(raster_heatmap(&p, &[1.0], 1.0, -1.0).is_err());
        assert!(raster_heatmap(&p, &[1.0, 2.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn pgm_is_north_up_and_csv_round_trips() {
        let p = PointSet::from_coords(vec![[0.0, 1000.0], [0.0, 0.0]]).unwrap();
        let g = raster_heatmap(&p, &[10.0, 0.0], 100.0, 100.0).unwrap();
        let pgm = g.to_pgm(g.value_range());
        let header = format!("P5\n{} {}\n255\n", g.width, g.height);
        let body = &pgm[header.len()..];
        let (c, r) = g.cell_of([0.0, 1000.0]).unwrap();
        assert_eq!(body[(g.height - 1 - r) * g.width + c], 255);
        let back = RasterGrid::from_csv(&g.to_csv(), g.origin, g.cell_size).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn sequential_matches_parallel() {
        let p = PointSet::from_coords((0..30).map(|i| [i as f64 * 37.0, (i * i) as f64]).collect())
            .unwrap();
        let v: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let a = raster_heatmap_with(&p, &v, 40.0, 90.0, Execution::Sequential).unwrap();
        let b = raster_heatmap_with(&p, &v, 40.0, 90.0, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn linear_in_values(
            pts in prop::collection::vec((-2000.0..2000.0f64, -2000.0..2000.0f64, 0.0..100.0f64, 0.0..100.0f64), 1..12),
        ) {
            let p = PointSet::from_coords(pts.iter().map(|t| [t.0, t.1]).collect()).unwrap();
            let v1: Vec<f64> = pts.iter().map(|t| t.2).collect();
            let v2: Vec<f64> = pts.iter().map(|t| t.3).collect();
            let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
            let g1 = raster_heatmap(&p, &v1, 150.0, 200.0).unwrap();
            let g2 = raster_heatmap(&p, &v2, 150.0, 200.0).unwrap();
            let gs = raster_heatmap(&p, &sum, 150.0, 200.0).unwrap();
            for k in 0..gs.values.len() {
                prop_assert!((gs.values[k] - g1.values[k] - g2.values[k]).abs() <= 1e-9);
            }
        }
    }
}
