//! Brute-force reference for the pattern matcher.
//!
//! Works directly on the AST: every variable ranges over all nodes passing its
//! kind, mark and predicate filters, the full cartesian product of those
//! candidate lists is tried, and for each assignment the number of injective
//! maps from edge patterns to graph edges is counted by scanning the edge list.

use std::collections::{BTreeMap, BTreeSet};

use scenekg::model::{AttrValue, SceneGraph};
use scenekg::pattern::{CmpOp, Label, Literal, MatchStmt, PatternQuery, Statement, Test};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub match_count: u64,
    pub marks: BTreeMap<String, BTreeSet<usize>>,
    pub root_involved: bool,
}

fn compare(value: &AttrValue, op: CmpOp, lit: &Literal) -> bool {
    let (a, b) = match (value, lit) {
        (AttrValue::Num(v), Literal::Num(l)) => {
            if v.is_nan() || l.is_nan() {
                return false;
            }
            return match op {
                CmpOp::Eq => v == l,
                CmpOp::Ne => v != l,
                CmpOp::Lt => v < l,
                CmpOp::Le => v <= l,
                CmpOp::Gt => v > l,
                CmpOp::Ge => v >= l,
            };
        }
        (AttrValue::Text(v), Literal::Str(l)) => (v.as_str(), l.as_str()),
        _ => return false,
    };
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

fn holds(graph: &SceneGraph, node: usize, attr: &str, test: &Test) -> bool {
    let Some(v) = graph.node(node).attrs.get(attr) else {
        return false;
    };
    match test {
        Test::Compare(op, lit) => compare(v, *op, lit),
        Test::In(items) => items.iter().any(|l| compare(v, CmpOp::Eq, l)),
    }
}

/// Variables of `m` in order of first appearance.
fn variables(m: &MatchStmt) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in m.node_patterns() {
        if !out.contains(&n.var.node) {
            out.push(n.var.node.clone());
        }
    }
    out
}

fn candidates(
    m: &MatchStmt,
    var: &str,
    graph: &SceneGraph,
    marks: &BTreeMap<String, BTreeSet<usize>>,
) -> Vec<usize> {
    (0..graph.nodes().len())
        .filter(|&i| {
            m.node_patterns().filter(|n| n.var.node == var).all(|n| match &n.label.node {
                Label::Kind(k) => graph.node(i).kind == *k,
                Label::Mark(l) => marks.get(l).is_some_and(|s| s.contains(&i)),
            }) && m
                .predicates
                .iter()
                .filter(|p| p.var.node == var)
                .all(|p| holds(graph, i, &p.attr.node, &p.test))
        })
        .collect()
}

/// Injective realizations of `patterns[k..]` avoiding `used`.
fn realizations(
    graph: &SceneGraph,
    patterns: &[(usize, scenekg::model::EdgeKind, bool, usize)],
    k: usize,
    used: &mut Vec<bool>,
) -> u64 {
    if k == patterns.len() {
        return 1;
    }
    let (a, kind, directed, b) = patterns[k];
    let mut total = 0;
    for (ei, e) in graph.edges().iter().enumerate() {
        if used[ei] || e.kind != kind {
            continue;
        }
        let fits = (e.source == a && e.target == b) || (!directed && e.source == b && e.target == a);
        if fits {
            used[ei] = true;
            total += realizations(graph, patterns, k + 1, used);
            used[ei] = false;
        }
    }
    total
}

fn run_match(
    m: &MatchStmt,
    graph: &SceneGraph,
    marks: &BTreeMap<String, BTreeSet<usize>>,
) -> (u64, Vec<BTreeMap<String, usize>>) {
    let vars = variables(m);
    let cands: Vec<Vec<usize>> = vars.iter().map(|v| candidates(m, v, graph, marks)).collect();
    if cands.iter().any(Vec::is_empty) {
        return (0, Vec::new());
    }
    let mut total = 0;
    let mut matched = Vec::new();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let assign: BTreeMap<String, usize> =
            vars.iter().zip(&idx).zip(&cands).map(|((v, &i), c)| (v.clone(), c[i])).collect();
        let patterns: Vec<_> = m
            .edge_patterns()
            .map(|(f, e, t)| (assign[f], e.kind.node, e.directed, assign[t]))
            .collect();
        let n = realizations(graph, &patterns, 0, &mut vec![false; graph.edges().len()]);
        if n > 0 {
            total += n;
            matched.push(assign);
        }
        // odometer step over the cartesian product
        let mut d = 0;
        loop {
            if d == idx.len() {
                return (total, matched);
            }
            idx[d] += 1;
            if idx[d] < cands[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

pub fn evaluate(query: &PatternQuery, graph: &SceneGraph) -> OracleResult {
    let mut marks: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    let mut last: Vec<BTreeMap<String, usize>> = Vec::new();
    let mut match_count = 0;
    for s in &query.statements {
        match s {
            Statement::Match(m) => {
                let (n, tuples) = run_match(m, graph, &marks);
                match_count += n;
                last = tuples;
            }
            Statement::Mark(mk) => {
                let set = marks.entry(mk.label.node.clone()).or_default();
                for t in &last {
                    set.extend(mk.vars.iter().map(|v| t[&v.node]));
                }
            }
            Statement::Count(_) => {}
        }
    }
    let root = graph.root_index();
    let root_involved = marks.values().any(|s| s.contains(&root));
    OracleResult {
        match_count,
        marks,
        root_involved,
    }
}
