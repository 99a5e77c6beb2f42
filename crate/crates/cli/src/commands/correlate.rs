use std::collections::BTreeMap;
use std::path::Path;

use crate::stats::{pearson, Correlation};
use crate::{read_input, CliError};

/// Reads `scene_id -> value` from the named column, or from the first column
/// other than `scene_id` when `column` is `None`.
fn read_column(path: &Path, column: Option<&str>) -> Result<BTreeMap<String, f64>, CliError> {
    let text = read_input(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let headers = r.headers().map_err(bad)?.clone();
    let id_col = headers
        .iter()
        .position(|h| h == "scene_id")
        .ok_or_else(|| CliError::Usage(format!("{}: no `scene_id` column", path.display())))?;
    let value_col = match column {
        Some(c) => headers.iter().position(|h| h == c),
        None => headers.iter().position(|h| h != "scene_id"),
    }
    .ok_or_else(|| {
        CliError::Usage(format!(
            "{}: no value column{}",
            path.display(),
            column.map(|c| format!(" `{c}`")).unwrap_or_default()
        ))
    })?;
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(bad)?;
        let id = rec.get(id_col).unwrap_or_default();
        let raw = rec.get(value_col).unwrap_or_default();
        let v: f64 = raw.trim().parse().map_err(|_| {
            CliError::Data(format!("{}: row {}: `{raw}` is not a number", path.display(), i + 2))
        })?;
        if out.insert(id.to_owned(), v).is_some() {
            return Err(CliError::Data(format!("{}: duplicate scene id `{id}`", path.display())));
        }
    }
    Ok(out)
}

/// Joins the two files on `scene_id` and correlates the chosen columns.
pub fn correlate(
    report: &Path,
    metric: &Path,
    column: &str,
    metric_column: Option<&str>,
) -> Result<Correlation, CliError> {
    let scores = read_column(report, Some(column))?;
    let metrics = read_column(metric, metric_column)?;
    let (x, y): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .filter_map(|(id, &s)| metrics.get(id).map(|&m| (s, m)))
        .unzip();
    if x.len() < 3 {
        return Err(CliError::Data(format!(
            "insufficient overlap: {} scene(s) joined, at least 3 needed",
            x.len()
        )));
    }
    pearson(&x, &y).ok_or_else(|| CliError::Data("correlation undefined: a column is constant".into()))
}
