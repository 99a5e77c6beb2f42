use std::path::{Path, PathBuf};

use rayon::prelude::*;
use scenekg::builder::{build_scene, BuildConfig, PlacementReport, WorldSnapshot};
use scenekg::corpus::generator::{self, GeneratorError, GeneratorSpec};
use scenekg::corpus::to_line;

use crate::config::LoadedConfig;
use crate::{read_input, write_json, write_output, CliError};

/// `corpus.ndjson` becomes `corpus.manifest.json`.
pub fn manifest_path(corpus: &Path) -> PathBuf {
    corpus.with_extension("manifest.json")
}

/// Writes the corpus, manifest and optionally the snapshots. Returns the
/// number of scenes.
pub fn generate(
    spec_path: &Path,
    out: &Path,
    manifest: &Path,
    snapshots: Option<&Path>,
    config: &LoadedConfig,
) -> Result<usize, CliError> {
    let text = read_input(spec_path)?;
    let spec: GeneratorSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", spec_path.display())))?;
    if config.config.build_config() != BuildConfig::default() {
        eprintln!("warning: generated layouts assume the default radius, segment length and lane width");
    }
    let generated = generator::generate(&spec, &config.config.catalog).map_err(|e| match e {
        GeneratorError::InvalidSpec(_) => CliError::Usage(e.to_string()),
        GeneratorError::Build { .. } => CliError::Data(e.to_string()),
    })?;
    let mut corpus = String::new();
    for s in &generated.scenes {
        corpus.push_str(&to_line(&s.graph));
        corpus.push('\n');
    }
    write_output(out, corpus.as_bytes())?;
    write_json(manifest, &generated.manifest)?;
    if let Some(path) = snapshots {
        let mut text = String::new();
        for s in &generated.scenes {
            text.push_str(&serde_json::to_string(&s.snapshot).expect("snapshots serialize"));
            text.push('\n');
        }
        write_output(path, text.as_bytes())?;
    }
    Ok(generated.scenes.len())
}

/// Snapshots from a JSON document, an array of them, or NDJSON.
pub fn parse_snapshots(text: &str, origin: &Path) -> Result<Vec<WorldSnapshot>, CliError> {
    let mut values = Vec::new();
    for (i, v) in serde_json::Deserializer::from_str(text)
        .into_iter::<serde_json::Value>()
        .enumerate()
    {
        let v = v.map_err(|e| CliError::Data(format!("{}: document {}: {e}", origin.display(), i + 1)))?;
        match v {
            serde_json::Value::Array(items) => values.extend(items),
            other => values.push(other),
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v)
                .map_err(|e| CliError::Data(format!("{}: snapshot {}: {e}", origin.display(), i + 1)))
        })
        .collect()
}

/// Returns the number of scenes written and of actors dropped.
pub fn build(input: &Path, out: &Path, report: Option<&Path>, config: &LoadedConfig) -> Result<(usize, usize), CliError> {
    let text = read_input(input)?;
    let snapshots = parse_snapshots(&text, input)?;
    let build_config = config.config.build_config();
    let built: Vec<_> = snapshots
        .par_iter()
        .map(|s| {
            build_scene(s, &build_config).map_err(|e| CliError::Data(format!("snapshot `{}`: {e}", s.scene_id)))
        })
        .collect::<Result<_, _>>()?;
    let mut corpus = String::new();
    for b in &built {
        corpus.push_str(&to_line(&b.graph));
        corpus.push('\n');
    }
    write_output(out, corpus.as_bytes())?;
    let reports: Vec<&PlacementReport> = built.iter().map(|b| &b.report).collect();
    if let Some(path) = report {
        write_json(path, &reports)?;
    }
    Ok((built.len(), reports.iter().map(|r| r.dropped_actors.len()).sum()))
}
