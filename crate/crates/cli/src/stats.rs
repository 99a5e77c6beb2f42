//! Correlation and distribution summaries.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::{Data, OrderStatistics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub rows: usize,
    pub r: f64,
    /// Two-sided, from a t distribution with `rows - 2` degrees of freedom.
    pub p_value: f64,
}

/// Sample Pearson correlation. `None` with fewer than three pairs or when
/// either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<Correlation> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Some(Correlation { rows: n, r, p_value })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub p05: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut d = Data::new(values.to_vec());
        Some(Summary {
            min: d.quantile(0.0),
            p05: d.quantile(0.05),
            p25: d.quantile(0.25),
            median: d.quantile(0.5),
            p75: d.quantile(0.75),
            p95: d.quantile(0.95),
            max: d.quantile(1.0),
            mean,
        })
    }
}

/// Counts over `bins` equal-width bins of [0, 1]; 1.0 falls in the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<u64> {
    let mut out = vec![0; bins];
    for &v in values {
        let i = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        out[i] += 1;
    }
    out
}
