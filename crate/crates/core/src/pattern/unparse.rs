use std::fmt::Write;

use super::ast::*;

/// Canonical source text for a query. `parse(&unparse(q)) == q` for every
/// valid query.
pub fn unparse(query: &PatternQuery) -> String {
    let mut out = String::new();
    writeln!(out, "pattern {} {{", query.name.node).unwrap();
    for stmt in &query.statements {
        out.push_str("  ");
        match stmt {
            Statement::Match(m) => write_match(&mut out, m),
            Statement::Mark(m) => {
                let vars: Vec<&str> = m.vars.iter().map(|v| v.node.as_str()).collect();
                write!(out, "mark {}({});", m.label.node, vars.join(", ")).unwrap();
            }
            Statement::Count(c) => match &c.target.node {
                CountTarget::Root => out.push_str("count(root);"),
                CountTarget::Label(l) => write!(out, "count({l});").unwrap(),
            },
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

fn write_node(out: &mut String, n: &NodePattern) {
    match &n.label.node {
        Label::Kind(k) => write!(out, "({}:{})", n.var.node, k.as_str()).unwrap(),
        Label::Mark(m) => write!(out, "({}:@{})", n.var.node, m).unwrap(),
    }
}

fn write_match(out: &mut String, m: &MatchStmt) {
    out.push_str("match ");
    write_node(out, &m.start);
    for (edge, node) in &m.steps {
        let arrow = if edge.directed { "->" } else { "-" };
        write!(out, "-[{}]{}", edge_keyword(edge.kind.node), arrow).unwrap();
        write_node(out, node);
    }
    for (i, p) in m.predicates.iter().enumerate() {
        out.push_str(if i == 0 { " where " } else { " and " });
        write!(out, "{}.{} ", p.var.node, p.attr.node).unwrap();
        match &p.test {
            Test::Compare(op, lit) => {
                write!(out, "{} ", op.as_str()).unwrap();
                write_literal(out, lit);
            }
            Test::In(items) => {
                out.push_str("in {");
                for (j, lit) in items.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    write_literal(out, lit);
                }
                out.push('}');
            }
        }
    }
    out.push(';');
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        // Display for f64 is the shortest text that reads back to the same value
        Literal::Num(v) => write!(out, "{v}").unwrap(),
        Literal::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
    }
}
