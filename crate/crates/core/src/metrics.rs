//! Coverage, static complexity and competence.
//!
//! Coverage of a scene is `min(n, c(s)) / n` where `c(s)` counts training
//! scenes with exactly the same signature. Complexity is the mean of three
//! min-max normalised components: distinct element types (c1), road obstacles
//! (c2) and nearby dynamic entities weighted by ego speed (c3). Competence is
//! `coverage * (1 - complexity)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::SubsceneSignature;
use crate::model::{NodeKind, SceneGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("n must be at least 1")]
    InvalidN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NPolicy {
    Fixed(u64),
    MeanOfComposites,
}

/// `min(n, c) / n`.
pub fn coverage_fraction(c: u64, n: u64) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    c.min(n) as f64 / n as f64
}

/// Mean of the counts of all non-Unknown signatures, rounded half up, at least 1.
pub fn mean_of_composites(counts: &BTreeMap<String, u64>) -> u64 {
    let known: Vec<u64> = counts
        .iter()
        .filter(|(k, _)| !SubsceneSignature::from_key(k).is_unknown())
        .map(|(_, &c)| c)
        .collect();
    if known.is_empty() {
        return 1;
    }
    let (sum, k) = (known.iter().sum::<u64>(), known.len() as u64);
    ((2 * sum + k) / (2 * k)).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageIndex {
    pub counts: BTreeMap<String, u64>,
    pub n: u64,
    pub n_policy: NPolicy,
}

impl CoverageIndex {
    pub fn from_counts(counts: BTreeMap<String, u64>, policy: NPolicy) -> Result<Self, MetricsError> {
        let n = match policy {
            NPolicy::Fixed(0) => return Err(MetricsError::InvalidN),
            NPolicy::Fixed(n) => n,
            NPolicy::MeanOfComposites => mean_of_composites(&counts),
        };
        Ok(CoverageIndex {
            counts,
            n,
            n_policy: policy,
        })
    }

    pub fn from_signatures<'a>(
        signatures: impl IntoIterator<Item = &'a SubsceneSignature>,
        policy: NPolicy,
    ) -> Result<Self, MetricsError> {
        let mut counts = BTreeMap::new();
        for s in signatures {
            *counts.entry(s.key()).or_insert(0) += 1;
        }
        Self::from_counts(counts, policy)
    }

    pub fn count(&self, signature: &SubsceneSignature) -> u64 {
        self.counts.get(&signature.key()).copied().unwrap_or(0)
    }

    pub fn coverage(&self, signature: &SubsceneSignature) -> f64 {
        coverage_fraction(self.count(signature), self.n)
    }

    /// Per-pattern totals: how many scenes each single pattern occurs in,
    /// alone or inside a composite. Unknown is reported under its own key.
    pub fn pattern_totals(&self) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for (key, &c) in &self.counts {
            let sig = SubsceneSignature::from_key(key);
            if sig.is_unknown() {
                *out.entry(key.clone()).or_insert(0) += c;
            }
            for name in sig.matched {
                *out.entry(name).or_insert(0) += c;
            }
        }
        out
    }
}

/// Constants feeding the raw complexity components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityParams {
    pub type_constants: BTreeMap<String, f64>,
    pub default_type_constant: f64,
    pub obstacle_types: BTreeSet<String>,
}

impl Default for ComplexityParams {
    fn default() -> Self {
        ComplexityParams {
            type_constants: [("vehicle", 0.5), ("bicycle", 0.8), ("pedestrian", 1.0)]
                .into_iter()
                .map(|(k, v)| (k.to_owned(), v))
                .collect(),
            default_type_constant: 0.5,
            obstacle_types: ["generic_object", "traffic_cone", "barrier"]
                .into_iter()
                .map(str::to_owned)
                .collect(),
        }
    }
}

impl ComplexityParams {
    pub fn type_constant(&self, object_type: &str) -> f64 {
        self.type_constants
            .get(object_type)
            .copied()
            .unwrap_or(self.default_type_constant)
    }
}

fn object_type(graph: &SceneGraph, i: usize) -> Option<&str> {
    graph.node(i).attr("object_type").and_then(|v| v.as_text())
}

/// Number of distinct strings among node kind names and object types.
pub fn raw_c1(graph: &SceneGraph) -> usize {
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for k in NodeKind::ALL {
        if !graph.nodes_of_kind(k).is_empty() {
            names.insert(k.as_str());
        }
    }
    for &i in graph.nodes_of_kind(NodeKind::Object) {
        names.extend(object_type(graph, i));
    }
    names.len()
}

/// Number of objects whose type is an obstacle type.
pub fn raw_c2(graph: &SceneGraph, obstacle_types: &BTreeSet<String>) -> usize {
    graph
        .nodes_of_kind(NodeKind::Object)
        .iter()
        .filter(|&&i| object_type(graph, i).is_some_and(|t| obstacle_types.contains(t)))
        .count()
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// One object's contribution before the ego-speed factor.
pub fn entity_term(longitudinal: f64, lateral: f64, type_constant: f64) -> f64 {
    (0.5 * libm::exp(-longitudinal.abs()) + 0.5 * libm::exp(-lateral.abs())) * softplus(type_constant)
}

/// Ego speed times the summed entity terms of every object.
pub fn raw_c3(graph: &SceneGraph, params: &ComplexityParams) -> f64 {
    let v_ego = graph.ego().attr("velocity").and_then(|v| v.as_num()).unwrap_or(0.0);
    let sum: f64 = graph
        .nodes_of_kind(NodeKind::Object)
        .iter()
        .map(|&i| {
            let node = graph.node(i);
            let (x, z) = node.attr("distance").and_then(|v| v.as_pair()).unwrap_or((0.0, 0.0));
            let t = params.type_constant(object_type(graph, i).unwrap_or(""));
            entity_term(x, z, t)
        })
        .sum();
    v_ego * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawComplexity {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl RawComplexity {
    pub fn of(graph: &SceneGraph, params: &ComplexityParams) -> Self {
        RawComplexity {
            c1: raw_c1(graph) as f64,
            c2: raw_c2(graph, &params.obstacle_types) as f64,
            c3: raw_c3(graph, params),
        }
    }

    pub fn get(&self, component: Component) -> f64 {
        match component {
            Component::C1 => self.c1,
            Component::C2 => self.c2,
            Component::C3 => self.c3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    C1,
    C2,
    C3,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::C1, Component::C2, Component::C3];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    /// Min-max scaling clamped to [0, 1]; 0 when the range is empty.
    pub fn normalize(&self, raw: f64) -> f64 {
        if self.max <= self.min {
            return 0.0;
        }
        ((raw - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCalibration {
    pub c1: Bounds,
    pub c2: Bounds,
    pub c3: Bounds,
    #[serde(flatten)]
    pub params: ComplexityParams,
}

impl ComplexityCalibration {
    pub fn bounds(&self, component: Component) -> Bounds {
        match component {
            Component::C1 => self.c1,
            Component::C2 => self.c2,
            Component::C3 => self.c3,
        }
    }
}

pub fn calibrate<'a>(
    raws: impl IntoIterator<Item = &'a RawComplexity>,
    params: ComplexityParams,
) -> Result<ComplexityCalibration, MetricsError> {
    let mut it = raws.into_iter();
    let first = it.next().ok_or(MetricsError::EmptyCorpus)?;
    let start = |v: f64| Bounds { min: v, max: v };
    let (mut c1, mut c2, mut c3) = (start(first.c1), start(first.c2), start(first.c3));
    for r in it {
        for (b, v) in [(&mut c1, r.c1), (&mut c2, r.c2), (&mut c3, r.c3)] {
            b.min = b.min.min(v);
            b.max = b.max.max(v);
        }
    }
    Ok(ComplexityCalibration { c1, c2, c3, params })
}

pub fn normalize(raw: f64, component: Component, calibration: &ComplexityCalibration) -> f64 {
    calibration.bounds(component).normalize(raw)
}

pub fn complexity(c1: f64, c2: f64, c3: f64) -> f64 {
    (c1 + c2 + c3) / 3.0
}

pub fn competence(coverage: f64, complexity: f64) -> f64 {
    coverage * (1.0 - complexity)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetenceReport {
    pub scene_id: String,
    pub signature: String,
    pub coverage: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub complexity: f64,
    pub competence: f64,
}

/// Training statistics reused when scoring held-out scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    #[serde(flatten)]
    pub coverage: CoverageIndex,
    #[serde(flatten)]
    pub calibration: ComplexityCalibration,
    pub catalog_hash: String,
}

impl Model {
    pub fn score(&self, scene_id: &str, signature: &SubsceneSignature, raw: &RawComplexity) -> CompetenceReport {
        let cov = self.coverage.coverage(signature);
        let [c1, c2, c3] = Component::ALL.map(|c| normalize(raw.get(c), c, &self.calibration));
        let cx = complexity(c1, c2, c3);
        CompetenceReport {
            scene_id: scene_id.to_owned(),
            signature: signature.key(),
            coverage: cov,
            c1,
            c2,
            c3,
            complexity: cx,
            competence: competence(cov, cx),
        }
    }
}
