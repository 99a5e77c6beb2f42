//! Subcommand implementations.

mod analyze;
mod correlate;
mod generate;
mod score;

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use scenekg::catalog::{Catalog, SubsceneSignature};
use scenekg::corpus::open_corpus;
use scenekg::metrics::{ComplexityParams, RawComplexity};
use scenekg::model::SceneGraph;
use serde::Serialize;

pub use analyze::{analyze, AnalyzeSummary};
pub use correlate::correlate;
pub use generate::{build, generate, manifest_path};
pub use score::{score, ScoreSummary};

use crate::config::LoadedConfig;
use crate::{sha256_hex, Cli, CliError, Command, PatternsCommand};

pub fn dispatch(cli: &Cli, config: &LoadedConfig) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate {
            spec,
            out,
            manifest,
            snapshots,
        } => {
            let manifest = manifest.clone().unwrap_or_else(|| manifest_path(out));
            let n = generate(spec, out, &manifest, snapshots.as_deref(), config)?;
            println!("{n} scenes written to {} (manifest {})", out.display(), manifest.display());
        }
        Command::Build { input, out, report } => {
            let (scenes, dropped) = build(input, out, report.as_deref(), config)?;
            println!("{scenes} scenes written to {}, {dropped} actors dropped", out.display());
        }
        Command::Analyze { corpus, out } => {
            let s = analyze(corpus, out, config, cli.n)?;
            println!(
                "{} scenes, {} signatures ({} Unknown scenes), n = {}",
                s.scenes, s.signatures, s.unknown, s.n
            );
        }
        Command::Score { corpus, model, out } => {
            let s = score(corpus, model, out, config, cli.n)?;
            println!("{} scenes scored, mean competence {}", s.scenes, crate::fmt_sig(s.mean_competence));
        }
        Command::Correlate {
            report,
            metric,
            column,
            metric_column,
            out,
        } => {
            let c = correlate(report, metric, column, metric_column.as_deref())?;
            let text = serde_json::to_string_pretty(&c).expect("serializes");
            println!("{text}");
            if let Some(dir) = out {
                crate::write_json(&dir.join("correlation.json"), &c)?;
            }
        }
        Command::Patterns {
            action: PatternsCommand::Check { files },
        } => {
            let catalog = if files.is_empty() {
                config.catalog()?
            } else {
                Catalog::from_files(files).map_err(|e| CliError::Data(e.to_string()))?
            };
            for name in catalog.names() {
                println!("ok {name}");
            }
            println!("{} patterns, catalog hash {}", catalog.len(), catalog.hash());
        }
    }
    Ok(())
}

/// Per-scene values that analysis and scoring need.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneStats {
    pub scene_id: String,
    pub signature: SubsceneSignature,
    pub raw: RawComplexity,
}

impl SceneStats {
    pub fn of(graph: &SceneGraph, catalog: &Catalog, params: &ComplexityParams) -> Self {
        SceneStats {
            scene_id: graph.scene_id().to_owned(),
            signature: catalog.signature(graph),
            raw: RawComplexity::of(graph, params),
        }
    }
}

const BATCH: usize = 512;
const MAX_REPORTED: usize = 20;

/// Streams a corpus in batches, computing [`SceneStats`] in parallel. Results
/// are sorted by scene id. Every invalid line is reported.
pub fn scan_corpus(path: &Path, catalog: &Catalog, params: &ComplexityParams) -> Result<Vec<SceneStats>, CliError> {
    let reader = open_corpus(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut batch = Vec::with_capacity(BATCH);
    let flush = |batch: &mut Vec<SceneGraph>, out: &mut Vec<SceneStats>| {
        out.par_extend(batch.par_iter().map(|g| SceneStats::of(g, catalog, params)));
        batch.clear();
    };
    for item in reader {
        match item {
            Ok(g) => batch.push(g),
            Err(e) => errors.push(e.to_string()),
        }
        if batch.len() == BATCH {
            flush(&mut batch, &mut out);
        }
    }
    flush(&mut batch, &mut out);
    if !errors.is_empty() {
        let mut msg = format!("{}: {} invalid scene(s)", path.display(), errors.len());
        for e in errors.iter().take(MAX_REPORTED) {
            msg.push_str("\n  ");
            msg.push_str(e);
        }
        if errors.len() > MAX_REPORTED {
            msg.push_str(&format!("\n  ... and {} more", errors.len() - MAX_REPORTED));
        }
        return Err(CliError::Data(msg));
    }
    out.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    let mut seen = BTreeSet::new();
    let dups: Vec<&str> = out
        .iter()
        .filter(|s| !seen.insert(s.scene_id.as_str()))
        .map(|s| s.scene_id.as_str())
        .collect();
    if !dups.is_empty() {
        return Err(CliError::Data(format!(
            "{}: duplicate scene ids: {}",
            path.display(),
            dups.iter().take(MAX_REPORTED).copied().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct InputDigest {
    role: &'static str,
    file: String,
    bytes: u64,
    sha256: String,
}

/// Reproducibility record written next to every command's artifacts. Holds
/// content hashes rather than paths so that identical runs in different
/// directories produce identical records.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    inputs: Vec<InputDigest>,
    config_sha256: String,
    catalog_sha256: String,
    artifacts: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    details: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &'static str, config: &LoadedConfig, catalog: &Catalog) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: Vec::new(),
            config_sha256: config.hash(),
            catalog_sha256: catalog.hash(),
            artifacts: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, role: &'static str, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            role,
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_owned());
    }

    pub fn details(&mut self, value: serde_json::Value) {
        self.details = value;
    }
}

/// Serializes rows with the `csv` crate into a byte buffer.
pub(crate) fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
