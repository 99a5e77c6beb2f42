use std::path::Path;

use scenekg::catalog::{SubsceneSignature, UNKNOWN};
use scenekg::metrics::{calibrate, coverage_fraction, CoverageIndex, Model};
use serde_json::json;

use super::{csv_bytes, scan_corpus, RunManifest};
use crate::config::LoadedConfig;
use crate::{fmt_sig, write_json, write_output, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSummary {
    pub scenes: usize,
    pub signatures: usize,
    pub unknown: u64,
    pub n: u64,
}

/// Writes `model.json`, `counts.csv`, `coverage_vs_n.csv` and
/// `analyze_run.json` into `out`.
pub fn analyze(corpus: &Path, out: &Path, config: &LoadedConfig, n: Option<u64>) -> Result<AnalyzeSummary, CliError> {
    let catalog = config.catalog()?;
    let params = config.config.params();
    let scenes = scan_corpus(corpus, &catalog, &params)?;
    if scenes.is_empty() {
        return Err(CliError::Data(format!("{}: empty corpus", corpus.display())));
    }
    let index = CoverageIndex::from_signatures(scenes.iter().map(|s| &s.signature), config.config.n_policy(n))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let calibration =
        calibrate(scenes.iter().map(|s| &s.raw), params).map_err(|e| CliError::Data(e.to_string()))?;
    let model = Model {
        coverage: index,
        calibration,
        catalog_hash: catalog.hash(),
    };
    let index = &model.coverage;

    write_json(&out.join("model.json"), &model)?;

    let totals = index.pattern_totals();
    let mut rows: Vec<[String; 3]> = catalog
        .names()
        .into_iter()
        .chain([UNKNOWN])
        .map(|name| ["pattern".into(), name.into(), totals.get(name).copied().unwrap_or(0).to_string()])
        .collect();
    rows.extend(index.counts.iter().map(|(k, c)| ["composite".into(), k.clone(), c.to_string()]));
    write_output(&out.join("counts.csv"), &csv_bytes(&["kind", "name", "count"], rows))?;

    let grid = config.config.grid();
    let curve = index.counts.iter().flat_map(|(k, &c)| {
        grid.iter()
            .map(move |&g| [k.clone(), c.to_string(), g.to_string(), fmt_sig(coverage_fraction(c, g))])
    });
    write_output(
        &out.join("coverage_vs_n.csv"),
        &csv_bytes(&["signature", "count", "n", "coverage"], curve),
    )?;

    let unknown = index.count(&SubsceneSignature::unknown());
    let mut run = RunManifest::new("analyze", config, &catalog);
    run.input("train", corpus)?;
    for a in ["model.json", "counts.csv", "coverage_vs_n.csv"] {
        run.artifact(a);
    }
    run.details(json!({
        "scenes": scenes.len(),
        "signatures": index.counts.len(),
        "unknown_scenes": unknown,
        "n": index.n,
        "n_policy": index.n_policy,
    }));
    write_json(&out.join("analyze_run.json"), &run)?;

    Ok(AnalyzeSummary {
        scenes: scenes.len(),
        signatures: index.counts.len(),
        unknown,
        n: index.n,
    })
}
