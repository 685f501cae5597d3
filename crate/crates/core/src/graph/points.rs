use crate::error::{Error, Result};

/// Typed locations with optional observed intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
    types: Vec<usize>,
    n_types: usize,
    intensity: Option<Vec<f64>>,
}

impl PointSet {
    pub fn new(
        ids: Vec<String>,
        coords: Vec<[f64; 2]>,
        types: Vec<usize>,
        n_types: usize,
        intensity: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::Data("point set is empty".into()));
        }
        if ids.len() != n {
            return Err(Error::DimensionMismatch {
                context: "point ids",
                expected: n,
                found: ids.len(),
            });
        }
        if types.len() != n {
            return Err(Error::DimensionMismatch {
                context: "point types",
                expected: n,
                found: types.len(),
            });
        }
        if let Some((row, c)) = coords
            .iter()
            .enumerate()
            .find(|(_, c)| !c[0].is_finite() || !c[1].is_finite())
        {
            return Err(Error::Data(format!(
                "point {row}: non-finite coordinate ({}, {})",
                c[0], c[1]
            )));
        }
        if let Some((row, &t)) = types.iter().enumerate().find(|(_, &t)| t >= n_types) {
            return Err(Error::Data(format!(
                "point {row}: type index {t} out of range for {n_types} types"
            )));
        }
        if let Some(v) = &intensity {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "point intensities",
                    expected: n,
                    found: v.len(),
                });
            }
            if let Some((row, &value)) = v.iter().enumerate().find(|(_, &c)| !(c >= 0.0)) {
                return Err(Error::NegativeCount { row, value });
            }
        }
        Ok(Self {
            ids,
            coords,
            types,
            n_types,
            intensity,
        })
    }

    /// Points with generated ids `0..n`, a single type and no intensities.
    pub fn from_coords(coords: Vec<[f64; 2]>) -> Result<Self> {
        let n = coords.len();
        Self::new(
            (0..n).map(|i| i.to_string()).collect(),
            coords,
            vec![0; n],
            1,
            None,
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn types(&self) -> &[usize] {
        &self.types
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn intensity(&self) -> Option<&[f64]> {
        self.intensity.as_deref()
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.coords[i], self.coords[j])
    }

    /// Keep the points whose index satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> Result<PointSet> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        PointSet::new(
            idx.iter().map(|&i| self.ids[i].clone()).collect(),
            idx.iter().map(|&i| self.coords[i]).collect(),
            idx.iter().map(|&i| self.types[i]).collect(),
            self.n_types,
            self.intensity
                .as_ref()
                .map(|v| idx.iter().map(|&i| v[i]).collect()),
        )
    }

    /// `(min_x, min_y, max_x, max_y)`
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.coords.iter().fold(
            (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ),
            |(a, b, c, d), p| (a.min(p[0]), b.min(p[1]), c.max(p[0]), d.max(p[1])),
        )
    }
}

#[inline]
pub fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_enforced() {
        let ok = PointSet::new(
            vec!["a".into()],
            vec![[0.0, 0.0]],
            vec![0],
            1,
            Some(vec![3.0]),
        );
        assert!(ok.is_ok());
        assert!(PointSet::from_coords(vec![]).is_err());
        assert!(PointSet::from_coords(vec![[f64::NAN, 0.0]]).is_err());
        assert!(PointSet::new(vec!["a".into()], vec![[0.0, 0.0]], vec![1], 1, None).is_err());
        let neg = PointSet::new(
            vec!["a".into()],
            vec![[0.0, 0.0]],
            vec![0],
            1,
            Some(vec![-1.0]),
        );
        assert!(matches!(neg, Err(Error::NegativeCount { row: 0, .. })));
    }
}
