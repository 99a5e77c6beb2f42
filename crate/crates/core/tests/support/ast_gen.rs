//! Random well-formed pattern ASTs.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use scenekg::model::{EdgeKind, NodeKind};
use scenekg::pattern::{
    CmpOp, CountStmt, CountTarget, EdgePattern, Label, Literal, MarkStmt, MatchStmt, NodePattern, PatternQuery,
    Predicate, Spanned, Statement, Test,
};

const RESERVED: [&str; 8] = ["pattern", "match", "where", "and", "mark", "count", "in", "root"];

pub fn ident(rng: &mut ChaCha8Rng) -> String {
    const FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789";
    loop {
        let len = rng.random_range(1..=9);
        let mut s = String::new();
        s.push(FIRST[rng.random_range(0..FIRST.len())] as char);
        for _ in 1..len {
            s.push(REST[rng.random_range(0..REST.len())] as char);
        }
        if !RESERVED.contains(&s.as_str()) {
            return s;
        }
    }
}

fn number(rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = match rng.random_range(0..6) {
        0 => rng.random_range(-100..=100) as f64,
        1 => rng.random_range(-50.0..50.0),
        2 => rng.random::<f64>() * 1e-7,
        3 => rng.random::<f64>() * 1e15,
        4 => f64::from_bits(rng.random_range(0x3000_0000_0000_0000u64..0x4f00_0000_0000_0000)),
        _ => [0.0, 0.5, 13.9, 1e21, 2.5e-8][rng.random_range(0..5)],
    };
    if rng.random_bool(0.3) {
        -v
    } else {
        v
    }
}

fn text(rng: &mut ChaCha8Rng) -> String {
    const PARTS: [&str; 12] = ["a", "Lane", " ", "\"", "\\", "\n", "\t", "é", "→", "{", "}", ";"];
    (0..rng.random_range(0..8))
        .map(|_| PARTS[rng.random_range(0..PARTS.len())])
        .collect()
}

fn literal(rng: &mut ChaCha8Rng) -> Literal {
    if rng.random_bool(0.5) {
        Literal::Num(number(rng))
    } else {
        Literal::Str(text(rng))
    }
}

fn edge_kind(rng: &mut ChaCha8Rng) -> EdgeKind {
    [EdgeKind::Next, EdgeKind::ConnectedTo, EdgeKind::On][rng.random_range(0..3)]
}

fn label(rng: &mut ChaCha8Rng, labels: &[String]) -> Label {
    if !labels.is_empty() && rng.random_bool(0.25) {
        Label::Mark(labels[rng.random_range(0..labels.len())].clone())
    } else {
        Label::Kind(NodeKind::ALL[rng.random_range(0..NodeKind::ALL.len())])
    }
}

fn match_stmt(rng: &mut ChaCha8Rng, labels: &[String]) -> MatchStmt {
    let pool: Vec<String> = (0..rng.random_range(1..=4)).map(|_| ident(rng)).collect();
    let node = |rng: &mut ChaCha8Rng| NodePattern {
        var: Spanned::bare(pool[rng.random_range(0..pool.len())].clone()),
        label: Spanned::bare(label(rng, labels)),
    };
    let start = node(rng);
    let steps = (0..rng.random_range(0..=3))
        .map(|_| {
            let e = EdgePattern {
                kind: Spanned::bare(edge_kind(rng)),
                directed: rng.random_bool(0.7),
            };
            (e, node(rng))
        })
        .collect();
    let mut m = MatchStmt {
        start,
        steps,
        predicates: Vec::new(),
    };
    let bound: Vec<String> = m.node_patterns().map(|n| n.var.node.clone()).collect();
    for _ in 0..rng.random_range(0..=3) {
        let test = if rng.random_bool(0.7) {
            Test::Compare(CmpOp::ALL[rng.random_range(0..6)], literal(rng))
        } else {
            Test::In((0..rng.random_range(1..=3)).map(|_| literal(rng)).collect())
        };
        m.predicates.push(Predicate {
            var: Spanned::bare(bound[rng.random_range(0..bound.len())].clone()),
            attr: Spanned::bare(ident(rng)),
            test,
        });
    }
    m
}

/// A query that passes validation: every `mark` names variables of the
/// preceding `match` and every `@label` was produced earlier.
pub fn random_query(rng: &mut ChaCha8Rng) -> PatternQuery {
    let mut labels: Vec<String> = Vec::new();
    let mut statements = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let m = match_stmt(rng, &labels);
        let bound: Vec<String> = m.node_patterns().map(|n| n.var.node.clone()).collect();
        statements.push(Statement::Match(m));
        for _ in 0..rng.random_range(0..=2) {
            let name = ident(rng);
            let vars = (0..rng.random_range(1..=3))
                .map(|_| Spanned::bare(bound[rng.random_range(0..bound.len())].clone()))
                .collect();
            statements.push(Statement::Mark(MarkStmt {
                label: Spanned::bare(name.clone()),
                vars,
            }));
            labels.push(name);
        }
        if rng.random_bool(0.3) {
            let target = if labels.is_empty() || rng.random_bool(0.5) {
                CountTarget::Root
            } else {
                CountTarget::Label(labels[rng.random_range(0..labels.len())].clone())
            };
            statements.push(Statement::Count(CountStmt {
                target: Spanned::bare(target),
            }));
        }
    }
    PatternQuery {
        name: Spanned::bare(ident(rng)),
        statements,
    }
}
