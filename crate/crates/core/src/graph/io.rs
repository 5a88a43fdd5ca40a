use serde::{Deserialize, Serialize};

use super::{Graph, GraphBuilder, GraphError, NodeId};

/// JSON container: `{"nodes": [...], "edges": [[u, v], [u, v, w], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeRecord {
    Weighted(NodeId, NodeId, f64),
    Plain(NodeId, NodeId),
}

impl From<&Graph> for GraphFile {
    fn from(g: &Graph) -> Self {
        let edges = g
            .edges()
            .map(|(u, v, w)| {
                let (a, b) = (g.id(u).clone(), g.id(v).clone());
                if g.is_weighted() {
                    EdgeRecord::Weighted(a, b, w)
                } else {
                    EdgeRecord::Plain(a, b)
                }
            })
            .collect();
        GraphFile { nodes: g.nodes().to_vec(), edges }
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = GraphError;

    fn try_from(file: GraphFile) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new();
        for n in file.nodes {
            b.add_node(n);
        }
        for e in file.edges {
            match e {
                EdgeRecord::Plain(u, v) => b.add_edge(u, v, None),
                EdgeRecord::Weighted(u, v, w) => b.add_edge(u, v, Some(w)),
            };
        }
        b.build()
    }
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = GraphFile::deserialize(d)?;
        Graph::try_from(file).map_err(serde::de::Error::custom)
    }
}

impl Graph {
    /// Parses the edge-list text format: one `u v [w]` edge per line.
    ///
    /// A line holding a single id declares an isolated node; blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
        let mut b = GraphBuilder::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| GraphError::Parse { line: lineno + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let id = |s: &str| NodeId::new(s).map_err(|e| err(e.to_string()));
            match fields.as_slice() {
                [n] => {
                    b.add_node(id(n)?);
                }
                [u, v] => {
                    let (u, v) = (id(u)?, id(v)?);
                    b.add_node(u.clone()).add_node(v.clone()).add_edge(u, v, None);
                }
                [u, v, w] => {
                    let (u, v) = (id(u)?, id(v)?);
                    let w: f64 = w.parse().map_err(|_| err(format!("bad weight {w:?}")))?;
                    b.add_node(u.clone()).add_node(v.clone()).add_edge(u, v, Some(w));
                }
                _ => return Err(err(format!("expected `u v [w]`, got {line:?}"))),
            }
        }
        b.build()
    }

    /// Renders the edge-list format; isolated nodes are emitted as single ids.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v, w) in self.edges() {
            if self.is_weighted() {
                out.push_str(&format!("{} {} {}\n", self.id(u), self.id(v), w));
            } else {
                out.push_str(&format!("{} {}\n", self.id(u), self.id(v)));
            }
        }
        for i in 0..self.node_count() {
            if self.degree(i) == 0 {
                out.push_str(&format!("{}\n", self.id(i)));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    /// Reads either format: JSON when the text starts with `{`, edge list otherwise.
    pub fn parse_any(text: &str) -> Result<Graph, GraphError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| GraphError::Parse {
                line: e.line(),
                message: e.to_string(),
            })
        } else {
            Graph::parse_edge_list(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip_keeps_isolated_nodes() {
        let text = "# comment\na b\nb c\n\nz\n";
        let g = Graph::parse_edge_list(text).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 2));
        let again = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn json_round_trip_weighted() {
        let g = Graph::from_weighted_edges(&[("a", "b", 1.5), ("b", "c", 2.0)]).unwrap();
        let json = g.to_json();
        assert_eq!(json, r#"{"nodes":["a","b","c"],"edges":[["a","b",1.5],["b","c",2.0]]}"#);
        assert_eq!(Graph::parse_any(&json).unwrap(), g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Graph::parse_edge_list("a b\na b c d\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let err = Graph::parse_edge_list("a b x\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
    }
}
