//! The nine sub-scene patterns and scene signatures.
//!
//! Patterns that look a bounded number of `Next` hops away from the root are
//! expanded into one `match` per hop count and per Lane/Connector combination
//! of the nodes on the path, since the pattern language has no variable-length
//! paths. Every such statement starts from the ego's `On` edge, so any match
//! marks the root.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{NodeKind, SceneGraph};
use crate::pattern::{self, Matcher, PatternError, PatternQuery};

pub const PATTERN_NAMES: [&str; 9] = [
    "approach_crossing",
    "approach_intersection",
    "enter_roundabout",
    "leave_roundabout",
    "on_intersection",
    "on_roundabout",
    "straight_road",
    "vehicle_ahead",
    "vehicle_behind",
];

pub const UNKNOWN: &str = "Unknown";
pub const ROUNDABOUT_TURN: &str = "roundabout";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hops {
    pub approach_intersection: usize,
    pub approach_crossing: usize,
    pub vehicle_ahead: usize,
    pub vehicle_behind: usize,
}

impl Default for Hops {
    fn default() -> Self {
        Hops {
            approach_intersection: 2,
            approach_crossing: 2,
            vehicle_ahead: 3,
            vehicle_behind: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub hops: Hops,
    pub vehicle_types: Vec<String>,
    /// Pattern files replacing the built-in set. Relative paths resolve against
    /// the directory of the config file.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pattern_files: Vec<PathBuf>,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            hops: Hops::default(),
            vehicle_types: vec!["vehicle".into()],
            pattern_files: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Pattern {
        path: PathBuf,
        #[source]
        source: PatternError,
    },
    #[error("invalid catalog: {0}")]
    Invalid(String),
}

/// Pattern names matched in one scene.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsceneSignature {
    pub matched: BTreeSet<String>,
}

impl SubsceneSignature {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        SubsceneSignature {
            matched: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn unknown() -> Self {
        Self::default()
    }

    pub fn is_unknown(&self) -> bool {
        self.matched.is_empty()
    }

    /// Sorted names joined by `+`, or `Unknown`.
    pub fn key(&self) -> String {
        if self.is_unknown() {
            UNKNOWN.to_owned()
        } else {
            self.matched.iter().map(String::as_str).collect::<Vec<_>>().join("+")
        }
    }

    pub fn from_key(key: &str) -> Self {
        if key == UNKNOWN || key.is_empty() {
            Self::unknown()
        } else {
            Self::new(key.split('+'))
        }
    }
}

impl std::fmt::Display for SubsceneSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.key())
    }
}

const DRIVABLE: [NodeKind; 2] = [NodeKind::Lane, NodeKind::Connector];

/// All Lane/Connector assignments for `len` path positions.
fn kind_paths(len: usize) -> Vec<Vec<NodeKind>> {
    (0..1usize << len)
        .map(|bits| (0..len).map(|i| DRIVABLE[(bits >> (len - 1 - i)) & 1]).collect())
        .collect()
}

fn string_set(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("{s:?}")).collect();
    format!("{{{}}}", quoted.join(", "))
}

/// `(n0:K0)-[NEXT]->(n1:K1)...`
fn chain(names: &[String], kinds: &[NodeKind]) -> String {
    let mut out = String::new();
    for (i, (n, k)) in names.iter().zip(kinds).enumerate() {
        if i > 0 {
            out.push_str("-[NEXT]->");
        }
        write!(out, "({n}:{})", k.as_str()).unwrap();
    }
    out
}

fn header(name: &str, comment: &str) -> String {
    format!("// {comment}\npattern {name} {{\n")
}

fn straight_road() -> String {
    let mut s = header("straight_road", "two consecutive lane segments");
    s.push_str("  match (a:Lane)-[NEXT]->(b:Lane);\n  mark straight(a, b);\n  count(root);\n}\n");
    s
}

fn on_intersection() -> String {
    let mut s = header("on_intersection", "ego is on a connector");
    s.push_str("  match (e:Ego)-[ON]->(r:Connector);\n  mark intersection(r);\n  count(root);\n}\n");
    s
}

fn roundabout(name: &str, comment: &str, from: &str, from_ring: bool, to: &str, to_ring: bool) -> String {
    let mut s = header(name, comment);
    let mut preds = Vec::new();
    if from_ring {
        preds.push(format!("r.turn_type = {ROUNDABOUT_TURN:?}"));
    }
    if to_ring {
        preds.push(format!("s.turn_type = {ROUNDABOUT_TURN:?}"));
    }
    writeln!(
        s,
        "  match (e:Ego)-[ON]->(r:{from})-[NEXT]->(s:{to}) where {};",
        preds.join(" and ")
    )
    .unwrap();
    writeln!(s, "  mark {name}(r, s);\n  count(root);\n}}").unwrap();
    s
}

/// Root followed by a chain of `hops` successors whose last node is a connector.
fn approach_intersection(hops: usize) -> String {
    let mut s = header(
        "approach_intersection",
        &format!("a connector within {hops} hops ahead of a lane root"),
    );
    for h in 1..=hops {
        for mid in kind_paths(h - 1) {
            let mut names = vec!["r".to_owned()];
            names.extend((1..=h).map(|i| format!("s{i}")));
            let mut kinds = vec![NodeKind::Lane];
            kinds.extend(mid);
            kinds.push(NodeKind::Connector);
            writeln!(s, "  match (e:Ego)-[ON]->{};", chain(&names, &kinds)).unwrap();
            writeln!(s, "  mark approach({});", names.join(", ")).unwrap();
        }
    }
    s.push_str("  count(root);\n}\n");
    s
}

fn approach_crossing(hops: usize) -> String {
    let mut s = header(
        "approach_crossing",
        &format!("a crosswalk on the root or up to {hops} hops ahead"),
    );
    for h in 0..=hops {
        for kinds in kind_paths(h + 1) {
            let mut names = vec!["r".to_owned()];
            names.extend((1..=h).map(|i| format!("s{i}")));
            writeln!(s, "  match (e:Ego)-[ON]->{}-[ON]-(w:Crosswalk);", chain(&names, &kinds)).unwrap();
            writeln!(s, "  mark crossing({}, w);", names.join(", ")).unwrap();
        }
    }
    s.push_str("  count(root);\n}\n");
    s
}

fn vehicle(name: &str, hops: usize, ahead: bool, types: &[String]) -> String {
    let direction = if ahead { "ahead" } else { "behind" };
    let mut s = header(
        name,
        &format!("a vehicle on the root or up to {hops} hops {direction}"),
    );
    let filter = format!("o.object_type in {}", string_set(types));
    for h in 0..=hops {
        for kinds in kind_paths(h + 1) {
            if ahead {
                let mut names = vec!["r".to_owned()];
                names.extend((1..=h).map(|i| format!("s{i}")));
                writeln!(
                    s,
                    "  match (e:Ego)-[ON]->{}-[ON]-(o:Object) where {filter};",
                    chain(&names, &kinds)
                )
                .unwrap();
                writeln!(s, "  mark {direction}({}, o);", names.join(", ")).unwrap();
            } else {
                // farthest predecessor first, so every NEXT edge points forward
                let mut names: Vec<String> = (1..=h).rev().map(|i| format!("p{i}")).collect();
                names.push("r".to_owned());
                writeln!(
                    s,
                    "  match (o:Object)-[ON]->{}-[ON]-(e:Ego) where {filter};",
                    chain(&names, &kinds)
                )
                .unwrap();
                writeln!(s, "  mark {direction}({}, o);", names.join(", ")).unwrap();
            }
        }
    }
    s.push_str("  count(root);\n}\n");
    s
}

/// Source text of the nine patterns for `config`, keyed by pattern name.
pub fn pattern_sources(config: &CatalogConfig) -> Vec<(&'static str, String)> {
    let hops = &config.hops;
    let types = &config.vehicle_types;
    vec![
        ("approach_crossing", approach_crossing(hops.approach_crossing)),
        ("approach_intersection", approach_intersection(hops.approach_intersection)),
        (
            "enter_roundabout",
            roundabout("enter_roundabout", "lane root leading into the roundabout ring", "Lane", false, "Connector", true),
        ),
        (
            "leave_roundabout",
            roundabout("leave_roundabout", "ring connector root leading out to a lane", "Connector", true, "Lane", false),
        ),
        ("on_intersection", on_intersection()),
        (
            "on_roundabout",
            roundabout("on_roundabout", "ring connector root followed by more ring", "Connector", true, "Connector", true),
        ),
        ("straight_road", straight_road()),
        ("vehicle_ahead", vehicle("vehicle_ahead", hops.vehicle_ahead, true, types)),
        ("vehicle_behind", vehicle("vehicle_behind", hops.vehicle_behind, false, types)),
    ]
}

/// A parsed, compiled pattern set.
#[derive(Debug, Clone)]
pub struct Catalog {
    queries: Vec<PatternQuery>,
    matchers: Vec<Matcher>,
}

impl Catalog {
    /// The built-in nine patterns for `config`, ignoring `pattern_files`.
    pub fn builtin(config: &CatalogConfig) -> Self {
        let sources = pattern_sources(config);
        Self::from_sources(sources.iter().map(|(_, s)| s.as_str())).expect("built-in patterns are valid")
    }

    pub fn from_sources<'a>(sources: impl IntoIterator<Item = &'a str>) -> Result<Self, PatternError> {
        let mut queries = pattern::parse_all(sources)?;
        queries.sort_by(|a, b| a.name.node.cmp(&b.name.node));
        let matchers = queries.iter().map(Matcher::new).collect::<Result<_, _>>()?;
        Ok(Catalog { queries, matchers })
    }

    /// Reads `.ssq` files; pattern names must be unique across them.
    pub fn from_files(paths: &[PathBuf]) -> Result<Self, CatalogError> {
        let mut sources = Vec::with_capacity(paths.len());
        for p in paths {
            let text = std::fs::read_to_string(p).map_err(|source| CatalogError::Io {
                path: p.clone(),
                source,
            })?;
            sources.push((p.clone(), text));
        }
        let mut queries: Vec<PatternQuery> = Vec::new();
        for (path, text) in &sources {
            let q = pattern::parse(text).map_err(|source| CatalogError::Pattern {
                path: path.clone(),
                source,
            })?;
            if queries.iter().any(|x| x.name.node == q.name.node) {
                return Err(CatalogError::Pattern {
                    path: path.clone(),
                    source: PatternError::DuplicatePatternName(q.name.node),
                });
            }
            Matcher::new(&q).map_err(|source| CatalogError::Pattern {
                path: path.clone(),
                source,
            })?;
            queries.push(q);
        }
        if queries.is_empty() {
            return Err(CatalogError::Invalid("no pattern files".into()));
        }
        queries.sort_by(|a, b| a.name.node.cmp(&b.name.node));
        let matchers = queries.iter().map(|q| Matcher::new(q).expect("checked above")).collect();
        Ok(Catalog { queries, matchers })
    }

    /// Pattern files from the config when present, the built-in set otherwise.
    /// `base` resolves relative pattern file paths.
    pub fn from_config(config: &CatalogConfig, base: &Path) -> Result<Self, CatalogError> {
        if config.pattern_files.is_empty() {
            return Ok(Self::builtin(config));
        }
        let paths: Vec<PathBuf> = config.pattern_files.iter().map(|p| base.join(p)).collect();
        Self::from_files(&paths)
    }

    pub fn queries(&self) -> &[PatternQuery] {
        &self.queries
    }

    pub fn names(&self) -> Vec<&str> {
        self.queries.iter().map(|q| q.name.node.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Hex SHA-256 over the canonical text of every pattern, in name order.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for q in &self.queries {
            h.update(pattern::unparse(q).as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Patterns whose marks include the root.
    pub fn signature(&self, graph: &SceneGraph) -> SubsceneSignature {
        SubsceneSignature {
            matched: self
                .matchers
                .iter()
                .filter(|m| m.evaluate(graph).root_involved)
                .map(|m| m.name().to_owned())
                .collect(),
        }
    }
}

/// Reads a catalog config file (TOML).
pub fn load_config(path: &Path) -> Result<CatalogConfig, CatalogError> {
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_owned(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CatalogError::Config {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Text of the shipped `catalog.conf` for `config`, listing the nine files.
pub fn render_config(config: &CatalogConfig) -> String {
    let mut out = String::from("# Sub-scene catalog: hop limits, vehicle types and pattern files.\n");
    writeln!(out, "vehicle_types = {}", toml_list(&config.vehicle_types)).unwrap();
    let files: Vec<String> = PATTERN_NAMES.iter().map(|n| format!("{n}.ssq")).collect();
    writeln!(out, "pattern_files = {}", toml_list(&files)).unwrap();
    let h = &config.hops;
    writeln!(out, "\n[hops]").unwrap();
    writeln!(out, "approach_intersection = {}", h.approach_intersection).unwrap();
    writeln!(out, "approach_crossing = {}", h.approach_crossing).unwrap();
    writeln!(out, "vehicle_ahead = {}", h.vehicle_ahead).unwrap();
    writeln!(out, "vehicle_behind = {}", h.vehicle_behind).unwrap();
    out
}

fn toml_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("{s:?}")).collect();
    format!("[{}]", quoted.join(", "))
}
