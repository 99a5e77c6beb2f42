//! Property-graph model of a single driving scene.
//!
//! A [`SceneGraph`] is assembled through a [`SceneGraphBuilder`], which checks
//! per-kind attribute schemas and edge endpoint constraints on every insert.
//! Once built, the graph is immutable: node and edge order is id-sorted and the
//! root (the segment the ego vehicle stands on) is fixed.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node labels a scene may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Lane,
    Connector,
    LaneMarker,
    Crosswalk,
    Ego,
    Object,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Lane,
        NodeKind::Connector,
        NodeKind::LaneMarker,
        NodeKind::Crosswalk,
        NodeKind::Ego,
        NodeKind::Object,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Lane => "Lane",
            NodeKind::Connector => "Connector",
            NodeKind::LaneMarker => "LaneMarker",
            NodeKind::Crosswalk => "Crosswalk",
            NodeKind::Ego => "Ego",
            NodeKind::Object => "Object",
        }
    }

    /// Lane or Connector: the kinds that make up drivable infrastructure.
    pub fn is_drivable(self) -> bool {
        matches!(self, NodeKind::Lane | NodeKind::Connector)
    }

    fn required_attributes(self) -> &'static [(&'static str, AttrShape)] {
        use AttrShape::*;
        match self {
            NodeKind::Lane => &[("speed_limit", NonNegative), ("length", Positive)],
            NodeKind::Connector => &[("turn_type", Text), ("length", Positive)],
            NodeKind::LaneMarker => &[("boundary_type", Text)],
            NodeKind::Crosswalk => &[],
            NodeKind::Ego => &[("velocity", NonNegative), ("dimensions", PositivePair)],
            NodeKind::Object => &[
                ("object_type", Text),
                ("distance", AnyPair),
                ("velocity", NonNegative),
                ("dimensions", PositivePair),
            ],
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(())
    }
}

/// Relationship labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    Next,
    ConnectedTo,
    On,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 3] = [EdgeKind::Next, EdgeKind::ConnectedTo, EdgeKind::On];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Next => "Next",
            EdgeKind::ConnectedTo => "ConnectedTo",
            EdgeKind::On => "On",
        }
    }

    /// Whether `(source, self, target)` is an allowed triple.
    pub fn allows(self, source: NodeKind, target: NodeKind) -> bool {
        use NodeKind::*;
        match self {
            EdgeKind::Next => source.is_drivable() && target.is_drivable(),
            EdgeKind::ConnectedTo => source.is_drivable() && target == LaneMarker,
            EdgeKind::On => matches!(source, Crosswalk | Ego | Object) && target.is_drivable(),
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar attribute value. Pairs hold (longitudinal, lateral) distances or
/// (length, width) dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Num(f64),
    Pair(f64, f64),
    Text(String),
}

impl AttrValue {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            AttrValue::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_pair(&self) -> Option<(f64, f64)> {
        match self {
            AttrValue::Pair(a, b) => Some((*a, *b)),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Num(v)
    }
}

impl From<(f64, f64)> for AttrValue {
    fn from((a, b): (f64, f64)) -> Self {
        AttrValue::Pair(a, b)
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Text(s.to_owned())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Text(s)
    }
}

pub type Attributes = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, Copy)]
enum AttrShape {
    Text,
    NonNegative,
    Positive,
    AnyPair,
    PositivePair,
}

impl AttrShape {
    fn accepts(self, value: &AttrValue) -> bool {
        match (self, value) {
            (AttrShape::Text, AttrValue::Text(_)) => true,
            (AttrShape::NonNegative, AttrValue::Num(v)) => v.is_finite() && *v >= 0.0,
            (AttrShape::Positive, AttrValue::Num(v)) => v.is_finite() && *v > 0.0,
            (AttrShape::AnyPair, AttrValue::Pair(a, b)) => a.is_finite() && b.is_finite(),
            (AttrShape::PositivePair, AttrValue::Pair(a, b)) => {
                a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub attrs: Attributes,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Node {
            id: id.into(),
            kind,
            attrs: Attributes::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<AttrValue>) -> Self {
        self.attrs.insert(key.to_owned(), value.into());
        self
    }

    pub fn attr(&self, key: &str) -> Option<&AttrValue> {
        self.attrs.get(key)
    }
}

/// A stored edge. Endpoints are node indices into [`SceneGraph::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub kind: EdgeKind,
    pub target: usize,
    pub attrs: Attributes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Any,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("{kind} node `{id}` is missing required attribute `{attribute}`")]
    MissingRequiredAttribute {
        id: String,
        kind: NodeKind,
        attribute: String,
    },
    #[error("{kind} node `{id}` has an invalid value for attribute `{attribute}`")]
    InvalidAttribute {
        id: String,
        kind: NodeKind,
        attribute: String,
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{kind} edge cannot connect {source_kind} to {target_kind}")]
    IllegalEndpointKinds {
        kind: EdgeKind,
        source_kind: NodeKind,
        target_kind: NodeKind,
    },
    #[error("{kind} edge is missing attribute `{attribute}`")]
    MissingEdgeAttribute { kind: EdgeKind, attribute: String },
    #[error("duplicate {kind} edge from `{source_id}` to `{target_id}`")]
    DuplicateEdge {
        source_id: String,
        kind: EdgeKind,
        target_id: String,
    },
    #[error("scene must contain exactly one Ego node, found {0}")]
    EgoCount(usize),
    #[error("Ego must have exactly one outgoing On edge, found {0}")]
    EgoPlacement(usize),
    #[error("declared root `{declared}` differs from the ego's segment `{actual}`")]
    RootMismatch { declared: String, actual: String },
}

/// Incrementally assembles a [`SceneGraph`].
#[derive(Debug, Default, Clone)]
pub struct SceneGraphBuilder {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, EdgeKind, usize, Attributes)>,
}

impl SceneGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: Node) -> Result<String, ModelError> {
        if self.index.contains_key(&node.id) {
            return Err(ModelError::DuplicateId(node.id));
        }
        for (attribute, shape) in node.kind.required_attributes() {
            match node.attrs.get(*attribute) {
                None => {
                    return Err(ModelError::MissingRequiredAttribute {
                        id: node.id.clone(),
                        kind: node.kind,
                        attribute: (*attribute).to_owned(),
                    })
                }
                Some(value) if !shape.accepts(value) => {
                    return Err(ModelError::InvalidAttribute {
                        id: node.id.clone(),
                        kind: node.kind,
                        attribute: (*attribute).to_owned(),
                    })
                }
                Some(_) => {}
            }
        }
        let id = node.id.clone();
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(id)
    }

    /// Adds an edge and returns its insertion index.
    pub fn add_edge(
        &mut self,
        source: &str,
        kind: EdgeKind,
        target: &str,
        attrs: Attributes,
    ) -> Result<usize, ModelError> {
        let s = *self
            .index
            .get(source)
            .ok_or_else(|| ModelError::UnknownNode(source.to_owned()))?;
        let t = *self
            .index
            .get(target)
            .ok_or_else(|| ModelError::UnknownNode(target.to_owned()))?;
        let (source_kind, target_kind) = (self.nodes[s].kind, self.nodes[t].kind);
        if !kind.allows(source_kind, target_kind) {
            return Err(ModelError::IllegalEndpointKinds {
                kind,
                source_kind,
                target_kind,
            });
        }
        if kind == EdgeKind::ConnectedTo {
            match attrs.get("side").and_then(AttrValue::as_text) {
                Some("left") | Some("right") => {}
                _ => {
                    return Err(ModelError::MissingEdgeAttribute {
                        kind,
                        attribute: "side".to_owned(),
                    })
                }
            }
        }
        if self
            .edges
            .iter()
            .any(|(es, ek, et, _)| *es == s && *ek == kind && *et == t)
        {
            return Err(ModelError::DuplicateEdge {
                source_id: source.to_owned(),
                kind,
                target_id: target.to_owned(),
            });
        }
        self.edges.push((s, kind, t, attrs));
        Ok(self.edges.len() - 1)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn kind_of(&self, id: &str) -> Option<NodeKind> {
        self.index.get(id).map(|&i| self.nodes[i].kind)
    }

    /// Validates the scene-level invariants and freezes the graph.
    pub fn build(self, scene_id: impl Into<String>, timestamp_us: i64) -> Result<SceneGraph, ModelError> {
        let egos: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].kind == NodeKind::Ego)
            .collect();
        if egos.len() != 1 {
            return Err(ModelError::EgoCount(egos.len()));
        }
        let ego = egos[0];
        let ego_on: Vec<usize> = self
            .edges
            .iter()
            .filter(|(s, k, _, _)| *s == ego && *k == EdgeKind::On)
            .map(|(_, _, t, _)| *t)
            .collect();
        if ego_on.len() != 1 {
            return Err(ModelError::EgoPlacement(ego_on.len()));
        }

        // Re-index nodes in id order.
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].id.cmp(&self.nodes[b].id));
        let mut remap = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut old_nodes: Vec<Option<Node>> = self.nodes.into_iter().map(Some).collect();
        let nodes: Vec<Node> = order
            .iter()
            .map(|&old| old_nodes[old].take().expect("each node moved once"))
            .collect();

        let mut edges: Vec<Edge> = self
            .edges
            .into_iter()
            .map(|(s, kind, t, attrs)| Edge {
                source: remap[s],
                kind,
                target: remap[t],
                attrs,
            })
            .collect();
        edges.sort_by(|a, b| {
            (a.source, a.kind, a.target).cmp(&(b.source, b.kind, b.target))
        });

        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        for (e, edge) in edges.iter().enumerate() {
            outgoing[edge.source].push(e);
            incoming[edge.target].push(e);
        }
        // Adjacency is ordered by neighbour id, then edge kind.
        for list in &mut outgoing {
            list.sort_by_key(|&e| (edges[e].target, edges[e].kind));
        }
        for list in &mut incoming {
            list.sort_by_key(|&e| (edges[e].source, edges[e].kind));
        }

        let mut by_kind: BTreeMap<NodeKind, Vec<usize>> = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            by_kind.entry(node.kind).or_default().push(i);
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();

        Ok(SceneGraph {
            scene_id: scene_id.into(),
            timestamp_us,
            root: remap[ego_on[0]],
            ego: remap[ego],
            nodes,
            edges,
            index,
            outgoing,
            incoming,
            by_kind,
        })
    }
}

/// One validated, immutable scene.
#[derive(Debug, Clone)]
pub struct SceneGraph {
    scene_id: String,
    timestamp_us: i64,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    root: usize,
    ego: usize,
    index: HashMap<String, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    by_kind: BTreeMap<NodeKind, Vec<usize>>,
}

impl PartialEq for SceneGraph {
    fn eq(&self, other: &Self) -> bool {
        self.scene_id == other.scene_id
            && self.timestamp_us == other.timestamp_us
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.root == other.root
    }
}

impl SceneGraph {
    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn timestamp_us(&self) -> i64 {
        self.timestamp_us
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Edges ordered by (source, kind, target).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Node> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    pub fn root_index(&self) -> usize {
        self.root
    }

    pub fn root_id(&self) -> &str {
        &self.nodes[self.root].id
    }

    pub fn ego_index(&self) -> usize {
        self.ego
    }

    pub fn ego(&self) -> &Node {
        &self.nodes[self.ego]
    }

    /// Node indices of one kind, ascending by id.
    pub fn nodes_of_kind(&self, kind: NodeKind) -> &[usize] {
        self.by_kind.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edge indices leaving `node`, ordered by target id.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    /// Edge indices entering `node`, ordered by source id.
    pub fn incoming(&self, node: usize) -> &[usize] {
        &self.incoming[node]
    }

    /// Neighbours of `id` reached through edges of the requested direction and
    /// (optionally) kind, ordered by neighbour id.
    pub fn neighbors(
        &self,
        id: &str,
        direction: Direction,
        kind: Option<EdgeKind>,
    ) -> Result<Vec<(&Edge, &Node)>, ModelError> {
        let node = self
            .index_of(id)
            .ok_or_else(|| ModelError::UnknownNode(id.to_owned()))?;
        let mut found: Vec<(&Edge, &Node)> = Vec::new();
        if matches!(direction, Direction::Out | Direction::Any) {
            for &e in &self.outgoing[node] {
                found.push((&self.edges[e], &self.nodes[self.edges[e].target]));
            }
        }
        if matches!(direction, Direction::In | Direction::Any) {
            for &e in &self.incoming[node] {
                found.push((&self.edges[e], &self.nodes[self.edges[e].source]));
            }
        }
        found.retain(|(edge, _)| kind.is_none_or(|k| edge.kind == k));
        found.sort_by(|a, b| (&a.1.id, a.0.kind).cmp(&(&b.1.id, b.0.kind)));
        Ok(found)
    }

    /// Checks that a declared root id agrees with the ego's placement.
    pub fn check_root(&self, declared: &str) -> Result<(), ModelError> {
        if declared != self.root_id() {
            return Err(ModelError::RootMismatch {
                declared: declared.to_owned(),
                actual: self.root_id().to_owned(),
            });
        }
        Ok(())
    }
}
