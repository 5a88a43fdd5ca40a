//! Byte-level snapshot of one drawing. Set `UPDATE_GOLDEN=1` to rewrite it after
//! an intended change to layout or styling.

use std::path::PathBuf;

use graphvista::graph::{Graph, NodeId};
use graphvista::render::{HighlightAction, VisualState};
use graphvista::subgraph::Subgraph;

fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

#[test]
fn highlighted_path_matches_snapshot() {
    let g = Graph::from_edges(&["A"], &[("A", "B"), ("B", "C"), ("B", "D"), ("C", "F"), ("D", "E"), ("E", "F"), ("A", "C")])
        .unwrap();
    let s = VisualState::new(Subgraph::whole(g), 42).unwrap();
    let s = s.apply_action(&HighlightAction::nodes(vec![id("A")])).unwrap();
    let s = s.apply_action(&HighlightAction::path(vec![id("A"), id("C"), id("F")])).unwrap();
    let svg = s.render();
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/path_highlight.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &svg).unwrap();
    }
    let want = std::fs::read(&path).expect("snapshot present; run with UPDATE_GOLDEN=1 to create it");
    assert!(svg == want, "drawing differs from {}", path.display());
}
