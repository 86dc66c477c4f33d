//! Plain-text graph files.
//!
//! ```text
//! vertices: 4
//! 0 -> 1
//! 1 <-> 2
//! 2 o-> 3
//! ```
//!
//! Edge operators are `->`, `<->`, `--`, `o->`, `o-o` and `o--`; the left
//! token gives the mark at the left vertex. Blank lines and lines starting
//! with `#` are skipped. [`write_graph`] lists edges by ascending endpoint
//! pair, so parsing and writing a file it produced returns identical bytes.

use crate::error::{Error, Result};
use crate::graph::{GraphKind, Mark, MixedGraph};

fn operator(left: Mark, right: Mark) -> Option<&'static str> {
    use Mark::*;
    Some(match (left, right) {
        (Tail, Arrow) => "->",
        (Arrow, Arrow) => "<->",
        (Tail, Tail) => "--",
        (Circle, Arrow) => "o->",
        (Circle, Circle) => "o-o",
        (Circle, Tail) => "o--",
        _ => return None,
    })
}

fn parse_operator(op: &str) -> Option<(Mark, Mark)> {
    use Mark::*;
    Some(match op {
        "->" => (Tail, Arrow),
        "<-" => (Arrow, Tail),
        "<->" => (Arrow, Arrow),
        "--" => (Tail, Tail),
        "o->" => (Circle, Arrow),
        "<-o" => (Arrow, Circle),
        "o-o" => (Circle, Circle),
        "o--" => (Circle, Tail),
        "--o" => (Tail, Circle),
        _ => return None,
    })
}

pub fn write_graph(g: &MixedGraph) -> String {
    let mut out = format!("vertices: {}\n", g.n());
    for e in g.edges() {
        let (l, r, ml, mr) = match operator(e.mark_a, e.mark_b) {
            Some(_) => (e.a, e.b, e.mark_a, e.mark_b),
            None => (e.b, e.a, e.mark_b, e.mark_a),
        };
        let op = operator(ml, mr).expect("every mark pair has an operator in one direction");
        out.push_str(&format!("{l} {op} {r}\n"));
    }
    out
}

/// Parses a graph, inferring the kind: any circle makes it a PAG, otherwise it
/// is a MAG when ancestral and maximal and an ADMG when not.
pub fn parse_graph(text: &str) -> Result<MixedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty graph file".into() })?;
    let n: usize = header
        .strip_prefix("vertices:")
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| Error::Parse { line: hline, message: format!("expected `vertices: <n>`, got `{header}`") })?;
    let mut g = MixedGraph::new(n, GraphKind::Pmg)?;
    for (line, text) in lines {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let bad = |message: String| Error::Parse { line, message };
        if parts.len() != 3 {
            return Err(bad(format!("expected `<a> <op> <b>`, got `{text}`")));
        }
        let a: usize = parts[0].parse().map_err(|_| bad(format!("bad vertex `{}`", parts[0])))?;
        let b: usize = parts[2].parse().map_err(|_| bad(format!("bad vertex `{}`", parts[2])))?;
        let (ma, mb) = parse_operator(parts[1]).ok_or_else(|| bad(format!("unknown edge operator `{}`", parts[1])))?;
        g.add_edge(a, b, ma, mb).map_err(|e| bad(e.to_string()))?;
    }
    let kind = if g.has_circle() {
        GraphKind::Pag
    } else if crate::graph::is_ancestral(&g).unwrap_or(false) && crate::graph::is_maximal(&g).unwrap_or(false) {
        GraphKind::Mag
    } else {
        GraphKind::Admg
    };
    g.set_kind(kind)?;
    Ok(g)
}
