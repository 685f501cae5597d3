use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` ascending bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub log_x: bool,
}

/// Histogram and sample moments of a value vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionStats {
    pub n: usize,
    pub histogram: Histogram,
    pub mean: f64,
    /// Unbiased (`n − 1`) sample variance; 0 for a single value.
    pub variance: f64,
    /// `m₃ / m₂^{3/2}` from central moments; `None` when `m₂ = 0`.
    pub skewness: Option<f64>,
    /// `m₄ / m₂² − 3`; `None` when `m₂ = 0`.
    pub excess_kurtosis: Option<f64>,
}

/// Streaming central moments up to order four.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        let n1 = self.n;
        self.n += 1.0;
        let n = self.n;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }
}

pub fn distribution_stats(values: &[f64], bins: usize, log_x: bool) -> Result<DistributionStats> {
    if values.is_empty() {
        return Err(Error::Data(
            "distribution statistics of an empty vector".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite value {v}")));
    }
    if log_x {
        if let Some(&v) = values.iter().find(|&&v| v <= 0.0) {
            return Err(Error::NonPositive(v));
        }
    }

    let mut m = Moments::default();
    values.iter().for_each(|&v| m.push(v));
    let n = values.len();
    let variance = if n > 1 { m.m2 / (n as f64 - 1.0) } else { 0.0 };
    let (skewness, excess_kurtosis) = if m.m2 > 0.0 {
        let nf = n as f64;
        (
            Some(nf.sqrt() * m.m3 / m.m2.powf(1.5)),
            Some(nf * m.m4 / (m.m2 * m.m2) - 3.0),
        )
    } else {
        (None, None)
    };

    Ok(DistributionStats {
        n,
        histogram: histogram(values, bins, log_x),
        mean: m.mean,
        variance,
        skewness,
        excess_kurtosis,
    })
}

fn histogram(values: &[f64], bins: usize, log_x: bool) -> Histogram {
    let tr = |v: f64| if log_x { v.ln() } else { v };
    let lo = values.iter().copied().map(tr).fold(f64::INFINITY, f64::min);
    let hi = values
        .iter()
        .copied()
        .map(tr)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|k| {
            let e = if k == bins { hi } else { lo + k as f64 * width };
            if log_x {
                e.exp()
            } else {
                e
            }
        })
        .collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = if width > 0.0 {
            (((tr(v) - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    Histogram {
        edges,
        counts,
        log_x,
    }
}
