use std::path::Path;

use rayon::prelude::*;
use scenekg::metrics::{CompetenceReport, CoverageIndex, Model, NPolicy};
use serde_json::json;

use super::{csv_bytes, scan_corpus, RunManifest};
use crate::config::LoadedConfig;
use crate::stats::{histogram, Summary};
use crate::{fmt_sig, read_input, write_json, write_output, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSummary {
    pub scenes: usize,
    pub mean_competence: f64,
}

pub const HISTOGRAM_BINS: usize = 10;

/// Writes `scores.csv`, `complexity_summary.json` and `score_run.json` into
/// `out`. The model's catalog hash must match the configured catalog.
pub fn score(
    corpus: &Path,
    model_path: &Path,
    out: &Path,
    config: &LoadedConfig,
    n: Option<u64>,
) -> Result<ScoreSummary, CliError> {
    let text = read_input(model_path)?;
    let mut model: Model =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    let catalog = config.catalog()?;
    if catalog.hash() != model.catalog_hash {
        return Err(CliError::Data(format!(
            "catalog mismatch: the model was built with catalog {} but the configured catalog is {}",
            model.catalog_hash,
            catalog.hash()
        )));
    }
    if let Some(n) = n {
        model.coverage = CoverageIndex::from_counts(model.coverage.counts.clone(), NPolicy::Fixed(n))
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let scenes = scan_corpus(corpus, &catalog, &model.calibration.params)?;
    if scenes.is_empty() {
        return Err(CliError::Data(format!("{}: empty corpus", corpus.display())));
    }
    let reports: Vec<CompetenceReport> = scenes
        .par_iter()
        .map(|s| model.score(&s.scene_id, &s.signature, &s.raw))
        .collect();

    let rows = reports.iter().map(|r| {
        [
            r.scene_id.clone(),
            r.signature.clone(),
            fmt_sig(r.coverage),
            fmt_sig(r.c1),
            fmt_sig(r.c2),
            fmt_sig(r.c3),
            fmt_sig(r.complexity),
            fmt_sig(r.competence),
        ]
    });
    write_output(
        &out.join("scores.csv"),
        &csv_bytes(
            &["scene_id", "signature", "coverage", "c1", "c2", "c3", "complexity", "competence"],
            rows,
        ),
    )?;

    let column = |f: fn(&CompetenceReport) -> f64| reports.iter().map(f).collect::<Vec<f64>>();
    let complexity = column(|r| r.complexity);
    let competence = column(|r| r.competence);
    let unknown = scenes.iter().filter(|s| s.signature.is_unknown()).count();
    let unseen = scenes.iter().filter(|s| model.coverage.count(&s.signature) == 0).count();
    let summary = json!({
        "scenes": reports.len(),
        "unknown_scenes": unknown,
        "unseen_signature_scenes": unseen,
        "n": model.coverage.n,
        "components": {
            "coverage": Summary::of(&column(|r| r.coverage)),
            "c1": Summary::of(&column(|r| r.c1)),
            "c2": Summary::of(&column(|r| r.c2)),
            "c3": Summary::of(&column(|r| r.c3)),
            "complexity": Summary::of(&complexity),
            "competence": Summary::of(&competence),
        },
        "complexity_histogram": {
            "bins": HISTOGRAM_BINS,
            "counts": histogram(&complexity, HISTOGRAM_BINS),
        },
    });
    write_json(&out.join("complexity_summary.json"), &summary)?;

    let mut run = RunManifest::new("score", config, &catalog);
    run.input("eval", corpus)?;
    run.input("model", model_path)?;
    run.artifact("scores.csv");
    run.artifact("complexity_summary.json");
    run.details(json!({ "scenes": reports.len(), "n": model.coverage.n }));
    write_json(&out.join("score_run.json"), &run)?;

    Ok(ScoreSummary {
        scenes: reports.len(),
        mean_competence: competence.iter().sum::<f64>() / competence.len() as f64,
    })
}
