use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use sha2::{Digest, Sha256};

use super::{ColorTag, VisualState, NODE_RADIUS};
use crate::graph::NodeId;

const STYLE: &str = "\
.edge{stroke:#9aa0a6;stroke-width:2}\
.edge-focus{stroke:#d93025;stroke-width:4}\
.edge-frontier{stroke:#f9ab00;stroke-width:4}\
.edge-path{stroke:#1a73e8;stroke-width:6}\
.node circle{fill:#ffffff;stroke:#3c4043;stroke-width:2}\
.node-focus circle{fill:#fce8e6;stroke:#d93025;stroke-width:3}\
.node-frontier circle{fill:#fef7e0;stroke:#f9ab00;stroke-width:3}\
.node-path circle{fill:#e8f0fe;stroke:#1a73e8;stroke-width:3}\
.node text{font-family:sans-serif;font-size:12px;text-anchor:middle;dominant-baseline:central;fill:#202124}";

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x:.2}")
    }
}

/// SVG 1.1 document for `state`; identical states give identical bytes.
pub fn render_svg(state: &VisualState) -> Vec<u8> {
    let g = &state.subgraph.graph;
    let l = &state.layout;
    let h = &state.highlights;
    let path_edges: BTreeSet<(NodeId, NodeId)> = h.path_edges().into_iter().collect();
    let mut out = String::with_capacity(256 + 160 * (g.node_count() + g.edge_count()));
    let (w, ht) = (fmt_num(l.width), fmt_num(l.height));
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{ht}" viewBox="0 0 {w} {ht}">"#
    );
    let _ = writeln!(out, "<style>{STYLE}</style>");
    let _ = writeln!(out, r##"<rect width="{w}" height="{ht}" fill="#ffffff"/>"##);
    out.push_str("<g id=\"edges\">\n");
    for (u, v, _) in g.edges() {
        let (a, b) = (g.id(u), g.id(v));
        let key = (a.clone(), b.clone());
        let class = if path_edges.contains(&key) {
            "edge edge-path".to_string()
        } else {
            match h.edges.get(&key) {
                Some(ColorTag::Default) | None => "edge".to_string(),
                Some(c) => format!("edge edge-{}", c.name()),
            }
        };
        let (p, q) = (l.positions[a], l.positions[b]);
        let _ = writeln!(
            out,
            r#"<line id="edge-{a}-{b}" class="{class}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            fmt_num(p.0),
            fmt_num(p.1),
            fmt_num(q.0),
            fmt_num(q.1)
        );
    }
    out.push_str("</g>\n<g id=\"nodes\">\n");
    for v in g.nodes() {
        let class = match h.nodes.get(v) {
            Some(ColorTag::Default) | None => "node".to_string(),
            Some(c) => format!("node node-{}", c.name()),
        };
        let p = l.positions[v];
        let (x, y) = (fmt_num(p.0), fmt_num(p.1));
        let _ = writeln!(
            out,
            r#"<g id="node-{v}" class="{class}"><circle cx="{x}" cy="{y}" r="{}"/><text x="{x}" y="{y}">{v}</text></g>"#,
            fmt_num(NODE_RADIUS)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out.into_bytes()
}

pub fn svg_hash(svg: &[u8]) -> String {
    hex::encode(Sha256::digest(svg))
}

/// Glyphs recovered from an emitted document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvgStructure {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
    /// Edge ids carrying the path stroke.
    pub path_edges: BTreeSet<(String, String)>,
}

static NODE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"<g id="node-(\w+)"[^>]*><circle "#).unwrap());
static EDGE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"<line id="edge-(\w+)-(\w+)" class="([^"]*)""#).unwrap());

pub fn parse_svg_structure(svg: &str) -> SvgStructure {
    let nodes = NODE_RE.captures_iter(svg).map(|c| c[1].to_string()).collect();
    let mut edges = BTreeSet::new();
    let mut path_edges = BTreeSet::new();
    for c in EDGE_RE.captures_iter(svg) {
        let e = (c[1].to_string(), c[2].to_string());
        if c[3].split(' ').any(|x| x == "edge-path") {
            path_edges.insert(e.clone());
        }
        edges.insert(e);
    }
    SvgStructure { nodes, edges, path_edges }
}
