//! Deterministic layout, SVG output and highlight state for subgraph images.

mod layout;
mod svg;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::{edge_key, NodeId};
use crate::subgraph::Subgraph;

pub use layout::{layout, Layout, CANVAS, MARGIN, MAX_LAYOUT_NODES, MIN_SEPARATION, NODE_RADIUS};
pub use svg::{parse_svg_structure, render_svg, svg_hash, SvgStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorTag {
    Default,
    Focus,
    Frontier,
    Path,
}

impl ColorTag {
    pub fn name(self) -> &'static str {
        match self {
            ColorTag::Default => "default",
            ColorTag::Focus => "focus",
            ColorTag::Frontier => "frontier",
            ColorTag::Path => "path",
        }
    }

    pub fn parse(s: &str) -> Option<ColorTag> {
        [ColorTag::Default, ColorTag::Focus, ColorTag::Frontier, ColorTag::Path].into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HighlightAction {
    HighlightNodes { nodes: Vec<NodeId>, color: ColorTag },
    HighlightEdges { edges: Vec<(NodeId, NodeId)>, color: ColorTag },
    HighlightPath { path: Vec<NodeId>, color: ColorTag },
    Clear,
}

impl HighlightAction {
    pub fn nodes(nodes: Vec<NodeId>) -> Self {
        HighlightAction::HighlightNodes { nodes, color: ColorTag::Focus }
    }

    pub fn edges(edges: Vec<(NodeId, NodeId)>) -> Self {
        HighlightAction::HighlightEdges { edges, color: ColorTag::Frontier }
    }

    pub fn path(path: Vec<NodeId>) -> Self {
        HighlightAction::HighlightPath { path, color: ColorTag::Path }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            HighlightAction::HighlightNodes { .. } => "highlight_nodes",
            HighlightAction::HighlightEdges { .. } => "highlight_edges",
            HighlightAction::HighlightPath { .. } => "highlight_path",
            HighlightAction::Clear => "clear",
        }
    }

    /// Colour used when an action line carries no explicit tag.
    pub fn default_color(kind: &str) -> ColorTag {
        match kind {
            "highlight_nodes" => ColorTag::Focus,
            "highlight_edges" => ColorTag::Frontier,
            _ => ColorTag::Path,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            HighlightAction::HighlightNodes { nodes, .. } => nodes.is_empty(),
            HighlightAction::HighlightEdges { edges, .. } => edges.is_empty(),
            HighlightAction::HighlightPath { path, .. } => path.is_empty(),
            HighlightAction::Clear => false,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("subgraph has {0} nodes, layout supports at most {MAX_LAYOUT_NODES}")]
    Oversize(usize),
    #[error("action refers to unknown node {0}")]
    UnknownNode(String),
    #[error("action refers to missing edge ({0}, {1})")]
    UnknownEdge(String, String),
    #[error("action payload is empty")]
    EmptyPayload,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Highlights {
    pub nodes: BTreeMap<NodeId, ColorTag>,
    pub edges: BTreeMap<(NodeId, NodeId), ColorTag>,
    pub path: Option<Vec<NodeId>>,
}

impl Highlights {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty() && self.path.is_none()
    }

    /// Canonical edges of the current path.
    pub fn path_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.path.as_ref().map(|p| p.windows(2).map(|w| edge_key(&w[0], &w[1])).collect()).unwrap_or_default()
    }
}

/// One frame of the visual reasoning state.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualState {
    pub subgraph: Arc<Subgraph>,
    pub layout: Arc<Layout>,
    pub highlights: Highlights,
    pub revision: u64,
}

impl VisualState {
    pub fn new(subgraph: Subgraph, seed: u64) -> Result<Self, RenderError> {
        let layout = layout(&subgraph.graph, seed)?;
        Ok(Self { subgraph: Arc::new(subgraph), layout: Arc::new(layout), highlights: Highlights::default(), revision: 0 })
    }

    fn check_node(&self, v: &NodeId) -> Result<usize, RenderError> {
        self.subgraph.graph.index(v).ok_or_else(|| RenderError::UnknownNode(v.to_string()))
    }

    fn check_edge(&self, a: &NodeId, b: &NodeId) -> Result<(NodeId, NodeId), RenderError> {
        let (i, j) = (self.check_node(a)?, self.check_node(b)?);
        if !self.subgraph.graph.has_edge(i, j) {
            return Err(RenderError::UnknownEdge(a.to_string(), b.to_string()));
        }
        Ok(edge_key(a, b))
    }

    /// Next state after `a`; the input state is left untouched.
    pub fn apply_action(&self, a: &HighlightAction) -> Result<VisualState, RenderError> {
        if a.is_empty() {
            return Err(RenderError::EmptyPayload);
        }
        let mut h = self.highlights.clone();
        match a {
            HighlightAction::HighlightNodes { nodes, color } => {
                for v in nodes {
                    self.check_node(v)?;
                }
                for v in nodes {
                    h.nodes.insert(v.clone(), *color);
                }
            }
            HighlightAction::HighlightEdges { edges, color } => {
                let keys = edges.iter().map(|(u, v)| self.check_edge(u, v)).collect::<Result<Vec<_>, _>>()?;
                for k in keys {
                    h.edges.insert(k, *color);
                }
            }
            HighlightAction::HighlightPath { path, color } => {
                for v in path {
                    self.check_node(v)?;
                }
                for w in path.windows(2) {
                    self.check_edge(&w[0], &w[1])?;
                }
                // an earlier path stays visible as ordinary highlights
                if let Some(old) = h.path.take() {
                    for v in &old {
                        h.nodes.entry(v.clone()).or_insert(ColorTag::Path);
                    }
                    for w in old.windows(2) {
                        h.edges.entry(edge_key(&w[0], &w[1])).or_insert(ColorTag::Path);
                    }
                }
                for v in path {
                    h.nodes.insert(v.clone(), *color);
                }
                h.path = Some(path.clone());
            }
            HighlightAction::Clear => h = Highlights::default(),
        }
        Ok(VisualState {
            subgraph: Arc::clone(&self.subgraph),
            layout: Arc::clone(&self.layout),
            highlights: h,
            revision: self.revision + 1,
        })
    }

    pub fn render(&self) -> Vec<u8> {
        render_svg(self)
    }
}
