//! Deterministic DOT export: terminals as boxes, non-terminals as circles,
//! tree edges bold with their capacities as labels.

use crate::model::Instance;
use crate::tree::TreeSolution;
use std::fmt::Write;

fn quote(label: &str) -> String {
    format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn export_dot(instance: &Instance, solution: Option<&TreeSolution>) -> String {
    let net = instance.network();
    let mut out = String::from("graph {\n");
    for v in 0..net.node_count() {
        let name = quote(net.label(v));
        match instance.bound(v) {
            Some(1) => writeln!(out, "  {name} [shape=box];").unwrap(),
            Some(b) => writeln!(
                out,
                "  {name} [shape=box, label={}];",
                quote(&format!("{} (b={})", net.label(v), b))
            )
            .unwrap(),
            None => writeln!(out, "  {name} [shape=circle];").unwrap(),
        }
    }
    for e in 0..net.edge_count() {
        let (u, v) = net.endpoints(e);
        let lhs = quote(net.label(u));
        let rhs = quote(net.label(v));
        let capacity = solution.and_then(|s| {
            let c = s.capacity_of(e);
            s.edges().contains(&e).then_some(c)
        });
        match capacity {
            Some(cap) => writeln!(out, "  {lhs} -- {rhs} [style=bold, label=\"{cap}\"];").unwrap(),
            None => writeln!(out, "  {lhs} -- {rhs};").unwrap(),
        }
    }
    out.push_str("}\n");
    out
}
