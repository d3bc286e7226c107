//! Graphviz and SVG renderings of the automata, the transducer and the
//! fractal layout of the representation tree.

use std::collections::BTreeSet;
use std::fmt::Write;

use num_traits::ToPrimitive;
use ratbase::automata::{tree_t, tree_that};
use ratbase::{DerivedTransducer, RationalBase, State};

fn header(name: &str) -> String {
    format!("digraph {name} {{\n  rankdir=LR;\n  node [shape=circle];\n")
}

fn node_lines(out: &mut String, nodes: &BTreeSet<State>) {
    for n in nodes {
        let _ = writeln!(out, "  {n} [label=\"{n}\"];");
    }
}

/// `T` (`hat == false`) or `T̂` with edges between states `<= max_state`.
pub fn automaton_dot(
    base: RationalBase,
    hat: bool,
    max_state: &State,
    max_depth: Option<usize>,
    root_loop: bool,
) -> String {
    let (aut, name) = if hat {
        (tree_that(base), format!("That_{}_{}", base.p(), base.q()))
    } else {
        (tree_t(base), format!("T_{}_{}", base.p(), base.q()))
    };
    let mut edges = Vec::new();
    aut.edges(max_state, max_depth, root_loop, |e| edges.push(e.clone()));

    let mut out = header(&name);
    let nodes: BTreeSet<State> = edges
        .iter()
        .flat_map(|e| [e.source.clone(), e.target.clone()])
        .collect();
    node_lines(&mut out, &nodes);
    for e in &edges {
        let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", e.source, e.target, e.digit);
    }
    out.push_str("}\n");
    out
}

/// `D` with one edge per (source, target), labelled by its `b|c` pairs.
pub fn transducer_dot(base: RationalBase, max_state: &State) -> String {
    let d = DerivedTransducer::new(base);
    let mut lines = Vec::new();
    let mut nodes = BTreeSet::new();
    let mut n = State::from(0);
    while &n <= max_state {
        for t in d.transitions(&n) {
            if &t.target > max_state {
                continue;
            }
            let label: Vec<String> = t.pairs.iter().map(|(b, c)| format!("{b}|{c}")).collect();
            lines.push(format!("  {} -> {} [label=\"{}\"];", n, t.target, label.join(", ")));
            nodes.insert(n.clone());
            nodes.insert(t.target.clone());
        }
        n += 1;
    }
    let mut out = header(&format!("D_{}_{}", base.p(), base.q()));
    node_lines(&mut out, &nodes);
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Representation tree drawn with node `n` at depth `d = |<n>|` and abscissa
/// `pi(<n>) (q/p)^d`.
pub fn fractal_svg(base: RationalBase, max_state: u64) -> String {
    const WIDTH: f64 = 1000.0;
    const ROW: f64 = 60.0;
    const MARGIN: f64 = 30.0;

    let ratio = base.q() as f64 / base.p() as f64;
    let layout: Vec<(u64, usize, f64)> = (1..=max_state)
        .map(|n| {
            let depth = base.represent(&State::from(n)).len();
            let x = n as f64 * ratio.powi(depth as i32);
            (n, depth, x)
        })
        .collect();
    let max_x = layout.iter().map(|l| l.2).fold(1.0, f64::max);
    let max_depth = layout.iter().map(|l| l.1).max().unwrap_or(0);
    let px = |x: f64| MARGIN + x / max_x * WIDTH;
    let py = |d: usize| MARGIN + d as f64 * ROW;
    let position = |n: u64| -> (f64, f64) {
        if n == 0 {
            return (px(0.0), py(0));
        }
        let (_, d, x) = layout[(n - 1) as usize];
        (px(x), py(d))
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="10">"#,
        WIDTH + 2.0 * MARGIN,
        py(max_depth) + MARGIN
    );
    for &(n, _, _) in &layout {
        // parent of n is floor(qn/p), reached by digit qn mod p
        let parent = n * base.q() as u64 / base.p() as u64;
        let digit = n * base.q() as u64 % base.p() as u64;
        let (x1, y1) = position(parent);
        let (x2, y2) = position(n);
        let _ = writeln!(
            out,
            r#"  <line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="gray"><title>{digit}</title></line>"#
        );
    }
    for n in 0..=max_state {
        let (x, y) = position(n);
        let _ = writeln!(out, r#"  <circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
        let _ = writeln!(out, r#"  <text x="{:.2}" y="{:.2}">{n}</text>"#, x + 4.0, y - 4.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Converts a state bound for the SVG layout, which works in machine integers.
pub fn small_bound(n: &State) -> Option<u64> {
    n.to_u64()
}
