//! Pattern evaluation over a [`SceneGraph`].
//!
//! Matching is edge-injective and node-repetition-allowed: each edge pattern of
//! a `match` must be realised by a different graph edge, while two variables may
//! bind the same node. A match is one (node assignment, edge realisation) pair,
//! so an undirected pattern over a single edge matches twice.
//!
//! The search binds the variable with the fewest candidates first, then grows
//! along edge patterns, always picking the most constrained neighbour of the
//! already-bound set.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::{parser, PatternError};
use crate::model::{AttrValue, EdgeKind, Node, NodeKind, SceneGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// Matches found by all `match` statements together.
    pub match_count: u64,
    /// Node ids per mark label.
    pub marks: BTreeMap<String, BTreeSet<String>>,
    /// Results of `count` statements, in statement order.
    pub counts: Vec<(CountTarget, usize)>,
    /// Whether the scene root carries any mark.
    pub root_involved: bool,
}

#[derive(Debug, Clone)]
struct VarSpec {
    kinds: Vec<NodeKind>,
    marks: Vec<String>,
    predicates: Vec<(String, Test)>,
}

#[derive(Debug, Clone, Copy)]
struct EdgeSpec {
    from: usize,
    kind: EdgeKind,
    directed: bool,
    to: usize,
}

#[derive(Debug, Clone)]
struct CompiledMatch {
    vars: Vec<VarSpec>,
    edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone)]
enum Step {
    Match(CompiledMatch),
    Mark { label: String, slots: Vec<usize> },
    Count(CountTarget),
}

/// A query prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Matcher {
    name: String,
    steps: Vec<Step>,
}

fn unknown_label(label: &str, span: Span) -> PatternError {
    PatternError::UnknownMarkLabel {
        label: label.to_owned(),
        line: span.start.line,
        column: span.start.column,
    }
}

impl Matcher {
    pub fn new(query: &PatternQuery) -> Result<Self, PatternError> {
        parser::validate(query)?;
        let mut produced: BTreeSet<&str> = BTreeSet::new();
        let mut steps = Vec::new();
        let mut scope: Vec<String> = Vec::new();
        for stmt in &query.statements {
            match stmt {
                Statement::Match(m) => {
                    let mut names: Vec<String> = Vec::new();
                    let mut vars: Vec<VarSpec> = Vec::new();
                    let slot = |name: &str, names: &mut Vec<String>, vars: &mut Vec<VarSpec>| {
                        names.iter().position(|n| n == name).unwrap_or_else(|| {
                            names.push(name.to_owned());
                            vars.push(VarSpec {
                                kinds: Vec::new(),
                                marks: Vec::new(),
                                predicates: Vec::new(),
                            });
                            names.len() - 1
                        })
                    };
                    for np in m.node_patterns() {
                        let s = slot(&np.var, &mut names, &mut vars);
                        match &np.label.node {
                            Label::Kind(k) => vars[s].kinds.push(*k),
                            Label::Mark(l) => {
                                if !produced.contains(l.as_str()) {
                                    return Err(unknown_label(l, np.label.span));
                                }
                                vars[s].marks.push(l.clone());
                            }
                        }
                    }
                    let edges = m
                        .edge_patterns()
                        .map(|(from, e, to)| EdgeSpec {
                            from: slot(from, &mut names, &mut vars),
                            kind: e.kind.node,
                            directed: e.directed,
                            to: slot(to, &mut names, &mut vars),
                        })
                        .collect();
                    for p in &m.predicates {
                        let s = slot(&p.var, &mut names, &mut vars);
                        vars[s].predicates.push((p.attr.node.clone(), p.test.clone()));
                    }
                    scope = names;
                    steps.push(Step::Match(CompiledMatch { vars, edges }));
                }
                Statement::Mark(mark) => {
                    let slots = mark
                        .vars
                        .iter()
                        .map(|v| scope.iter().position(|n| *n == v.node).expect("validated scope"))
                        .collect();
                    produced.insert(mark.label.node.as_str());
                    steps.push(Step::Mark {
                        label: mark.label.node.clone(),
                        slots,
                    });
                }
                Statement::Count(c) => {
                    if let CountTarget::Label(l) = &c.target.node {
                        if !produced.contains(l.as_str()) {
                            return Err(unknown_label(l, c.target.span));
                        }
                    }
                    steps.push(Step::Count(c.target.node.clone()));
                }
            }
        }
        Ok(Matcher {
            name: query.name.node.clone(),
            steps,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Runs the query. Marks live only for the duration of this call.
    pub fn evaluate(&self, graph: &SceneGraph) -> MatchResult {
        let mut marks: HashMap<&str, BTreeSet<usize>> = HashMap::new();
        let mut last: Vec<Vec<usize>> = Vec::new();
        let mut match_count = 0;
        let mut counts = Vec::new();
        for step in &self.steps {
            match step {
                Step::Match(m) => {
                    let (n, tuples) = run_match(m, graph, &marks);
                    match_count += n;
                    last = tuples;
                }
                Step::Mark { label, slots } => {
                    let set = marks.entry(label.as_str()).or_default();
                    for tuple in &last {
                        set.extend(slots.iter().map(|&s| tuple[s]));
                    }
                }
                Step::Count(target) => {
                    let n = match target {
                        CountTarget::Root => {
                            usize::from(marks.values().any(|s| s.contains(&graph.root_index())))
                        }
                        CountTarget::Label(l) => marks.get(l.as_str()).map_or(0, BTreeSet::len),
                    };
                    counts.push((target.clone(), n));
                }
            }
        }
        let root_involved = marks.values().any(|s| s.contains(&graph.root_index()));
        let marks = marks
            .into_iter()
            .map(|(label, set)| {
                (
                    label.to_owned(),
                    set.into_iter().map(|i| graph.node(i).id.clone()).collect(),
                )
            })
            .collect();
        MatchResult {
            match_count,
            marks,
            counts,
            root_involved,
        }
    }
}

/// Parses nothing; compiles and evaluates in one call.
pub fn evaluate(query: &PatternQuery, graph: &SceneGraph) -> Result<MatchResult, PatternError> {
    Ok(Matcher::new(query)?.evaluate(graph))
}

pub(crate) fn literal_matches(value: &AttrValue, op: CmpOp, lit: &Literal) -> bool {
    use std::cmp::Ordering;
    let ord: Option<Ordering> = match (value, lit) {
        (AttrValue::Num(v), Literal::Num(l)) => v.partial_cmp(l),
        (AttrValue::Text(v), Literal::Str(l)) => Some(v.as_str().cmp(l.as_str())),
        _ => None,
    };
    let Some(ord) = ord else { return false };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    }
}

pub(crate) fn test_holds(node: &Node, attr: &str, test: &Test) -> bool {
    let Some(value) = node.attr(attr) else { return false };
    match test {
        Test::Compare(op, lit) => literal_matches(value, *op, lit),
        Test::In(items) => items.iter().any(|lit| literal_matches(value, CmpOp::Eq, lit)),
    }
}

fn admissible(spec: &VarSpec, graph: &SceneGraph, marks: &HashMap<&str, BTreeSet<usize>>, i: usize) -> bool {
    let node = graph.node(i);
    spec.kinds.iter().all(|k| node.kind == *k)
        && spec
            .marks
            .iter()
            .all(|l| marks.get(l.as_str()).is_some_and(|s| s.contains(&i)))
        && spec.predicates.iter().all(|(a, t)| test_holds(node, a, t))
}

struct Search<'a> {
    graph: &'a SceneGraph,
    edges: &'a [EdgeSpec],
    allowed: Vec<Vec<bool>>,
    candidates: Vec<Vec<usize>>,
    order: Vec<usize>,
    /// Edge patterns closed when `order[depth]` is bound.
    closing: Vec<Vec<usize>>,
    /// Edge pattern used to enumerate candidates for `order[depth]`.
    anchor: Vec<Option<usize>>,
    assign: Vec<usize>,
    used: Vec<usize>,
    count: u64,
    tuples: BTreeSet<Vec<usize>>,
}

fn run_match(
    m: &CompiledMatch,
    graph: &SceneGraph,
    marks: &HashMap<&str, BTreeSet<usize>>,
) -> (u64, Vec<Vec<usize>>) {
    let n = m.vars.len();
    let mut allowed = Vec::with_capacity(n);
    let mut candidates = Vec::with_capacity(n);
    for spec in &m.vars {
        let pool: Vec<usize> = match spec.kinds.first() {
            Some(k) => graph.nodes_of_kind(*k).to_vec(),
            None => (0..graph.nodes().len()).collect(),
        };
        let mut ok = vec![false; graph.nodes().len()];
        let list: Vec<usize> = pool
            .into_iter()
            .filter(|&i| admissible(spec, graph, marks, i))
            .collect();
        if list.is_empty() {
            return (0, Vec::new());
        }
        for &i in &list {
            ok[i] = true;
        }
        allowed.push(ok);
        candidates.push(list);
    }

    // most-constrained-first ordering, preferring variables adjacent to bound ones
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut closing = Vec::with_capacity(n);
    let mut anchor = Vec::with_capacity(n);
    let mut edge_done = vec![false; m.edges.len()];
    for _ in 0..n {
        let connected = |v: usize| {
            m.edges.iter().any(|e| {
                (e.from == v && e.to != v && placed[e.to]) || (e.to == v && e.from != v && placed[e.from])
            })
        };
        let pick = (0..n)
            .filter(|&v| !placed[v])
            .min_by_key(|&v| (!connected(v), candidates[v].len(), v))
            .expect("unplaced variable remains");
        placed[pick] = true;
        order.push(pick);
        let mut closes = Vec::new();
        let mut anchor_edge = None;
        for (i, e) in m.edges.iter().enumerate() {
            if edge_done[i] || !(e.from == pick || e.to == pick) || !placed[e.from] || !placed[e.to] {
                continue;
            }
            edge_done[i] = true;
            closes.push(i);
            if anchor_edge.is_none() && e.from != e.to {
                anchor_edge = Some(i);
            }
        }
        closing.push(closes);
        anchor.push(anchor_edge);
    }

    let mut search = Search {
        graph,
        edges: &m.edges,
        allowed,
        candidates,
        order,
        closing,
        anchor,
        assign: vec![usize::MAX; n],
        used: Vec::new(),
        count: 0,
        tuples: BTreeSet::new(),
    };
    search.bind(0);
    (search.count, search.tuples.into_iter().collect())
}

impl Search<'_> {
    fn bind(&mut self, depth: usize) {
        if depth == self.order.len() {
            self.count += 1;
            self.tuples.insert(self.assign.clone());
            return;
        }
        let v = self.order[depth];
        let pool: Vec<usize> = match self.anchor[depth] {
            Some(ei) => {
                let e = self.edges[ei];
                let v_is_target = e.to == v;
                let other = self.assign[if v_is_target { e.from } else { e.to }];
                let mut found = Vec::new();
                let forward = v_is_target || !e.directed;
                let backward = !v_is_target || !e.directed;
                if forward {
                    for &ge in self.graph.outgoing(other) {
                        let edge = &self.graph.edges()[ge];
                        if edge.kind == e.kind && self.allowed[v][edge.target] {
                            found.push(edge.target);
                        }
                    }
                }
                if backward {
                    for &ge in self.graph.incoming(other) {
                        let edge = &self.graph.edges()[ge];
                        if edge.kind == e.kind && self.allowed[v][edge.source] {
                            found.push(edge.source);
                        }
                    }
                }
                found.sort_unstable();
                found.dedup();
                found
            }
            None => self.candidates[v].clone(),
        };
        for c in pool {
            self.assign[v] = c;
            self.realize(depth, 0);
        }
        self.assign[v] = usize::MAX;
    }

    /// Chooses distinct graph edges for the edge patterns closed at `depth`.
    fn realize(&mut self, depth: usize, k: usize) {
        if k == self.closing[depth].len() {
            self.bind(depth + 1);
            return;
        }
        let e = self.edges[self.closing[depth][k]];
        let (a, b) = (self.assign[e.from], self.assign[e.to]);
        let mut options: Vec<usize> = Vec::new();
        for &ge in self.graph.outgoing(a) {
            let edge = &self.graph.edges()[ge];
            if edge.kind == e.kind && edge.target == b {
                options.push(ge);
            }
        }
        if !e.directed && a != b {
            for &ge in self.graph.outgoing(b) {
                let edge = &self.graph.edges()[ge];
                if edge.kind == e.kind && edge.target == a {
                    options.push(ge);
                }
            }
        }
        for ge in options {
            if self.used.contains(&ge) {
                continue;
            }
            self.used.push(ge);
            self.realize(depth, k + 1);
            self.used.pop();
        }
    }
}
