//! Scene corpora: newline-delimited JSON, one [`SceneDocument`] per line.

pub mod generator;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Attributes, EdgeKind, ModelError, Node, NodeKind, SceneGraph, SceneGraphBuilder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub attrs: Attributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub src: String,
    pub kind: EdgeKind,
    pub dst: String,
    #[serde(default)]
    pub attrs: Attributes,
}

/// Serialized form of a [`SceneGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub scene_id: String,
    pub timestamp_us: i64,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<EdgeDocument>,
    pub root_id: String,
}

impl SceneDocument {
    pub fn from_graph(g: &SceneGraph) -> Self {
        SceneDocument {
            scene_id: g.scene_id().to_owned(),
            timestamp_us: g.timestamp_us(),
            nodes: g
                .nodes()
                .iter()
                .map(|n| NodeDocument {
                    id: n.id.clone(),
                    kind: n.kind,
                    attrs: n.attrs.clone(),
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeDocument {
                    src: g.node(e.source).id.clone(),
                    kind: e.kind,
                    dst: g.node(e.target).id.clone(),
                    attrs: e.attrs.clone(),
                })
                .collect(),
            root_id: g.root_id().to_owned(),
        }
    }

    /// Rebuilds and validates the graph.
    pub fn into_graph(self) -> Result<SceneGraph, ModelError> {
        let mut b = SceneGraphBuilder::new();
        for n in self.nodes {
            b.add_node(Node {
                id: n.id,
                kind: n.kind,
                attrs: n.attrs,
            })?;
        }
        for e in self.edges {
            b.add_edge(&e.src, e.kind, &e.dst, e.attrs)?;
        }
        let g = b.build(self.scene_id, self.timestamp_us)?;
        g.check_root(&self.root_id)?;
        Ok(g)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}{}: {message}", scene_id.as_ref().map(|s| format!(" (scene `{s}`)")).unwrap_or_default())]
    SchemaViolation {
        line: usize,
        scene_id: Option<String>,
        message: String,
    },
}

/// One JSON line for `graph`, without the trailing newline.
pub fn to_line(graph: &SceneGraph) -> String {
    serde_json::to_string(&SceneDocument::from_graph(graph)).expect("scene documents serialize")
}

pub fn write_scene(mut out: impl Write, graph: &SceneGraph) -> io::Result<()> {
    out.write_all(to_line(graph).as_bytes())?;
    out.write_all(b"\n")
}

pub fn save_corpus<'a>(path: &Path, graphs: impl IntoIterator<Item = &'a SceneGraph>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for g in graphs {
        write_scene(&mut w, g)?;
    }
    w.flush()
}

/// Streams scenes from NDJSON, one line at a time. Blank lines are skipped.
pub struct CorpusReader<R> {
    input: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(input: R) -> Self {
        CorpusReader {
            input,
            line: 0,
            buf: String::new(),
        }
    }
}

pub fn open_corpus(path: &Path) -> io::Result<CorpusReader<BufReader<File>>> {
    Ok(CorpusReader::new(BufReader::new(File::open(path)?)))
}

/// Reads a whole corpus into memory.
pub fn load_corpus(path: &Path) -> Result<Vec<SceneGraph>, CorpusError> {
    open_corpus(path)?.collect()
}

pub fn parse_line(text: &str, line: usize) -> Result<SceneGraph, CorpusError> {
    let doc: SceneDocument = serde_json::from_str(text).map_err(|e| CorpusError::SchemaViolation {
        line,
        // a line that is valid JSON but the wrong shape may still name its scene
        scene_id: serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v.get("scene_id")?.as_str().map(str::to_owned)),
        message: e.to_string(),
    })?;
    let scene_id = doc.scene_id.clone();
    doc.into_graph().map_err(|e| CorpusError::SchemaViolation {
        line,
        scene_id: Some(scene_id),
        message: e.to_string(),
    })
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<SceneGraph, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let text = self.buf.trim();
            if !text.is_empty() {
                return Some(parse_line(text, self.line));
            }
        }
    }
}
