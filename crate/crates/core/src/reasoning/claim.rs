use serde::{Deserialize, Serialize};

use crate::graph::NodeId;
use crate::oracles::GoldAnswer;

/// What a structured claim is about. Every subject is defined on the full graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "subject", rename_all = "snake_case")]
pub enum Subject {
    /// The task's own entities.
    Endpoints,
    Neighbors { node: NodeId },
    HopLayer { node: NodeId, distance: usize },
    /// Nodes at `distance` from both `a` and `b`.
    CommonHopLayer { a: NodeId, b: NodeId, distance: usize },
    EdgesAmongNeighbors { node: NodeId },
    /// Nodes lying on at least one triangle.
    TriangleNodes,
    TriangleEdges,
    /// Nodes at even BFS depth from the smallest node of their component.
    EvenSide,
    /// Edges whose endpoints have equal BFS depth parity.
    SameSideEdges,
    DegreeAtLeast { k: usize },
    ComponentOf { node: NodeId },
    LargestComponent,
    EdgeCount,
    NodeCount,
    ComponentCount,
    /// `|E| - |V| + components`.
    CycleRank,
}

/// A machine-checkable statement carried by a reasoning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "claim", rename_all = "snake_case")]
pub enum Claim {
    Nodes { subject: Subject, nodes: Vec<NodeId> },
    Edges { subject: Subject, edges: Vec<(NodeId, NodeId)> },
    Count { subject: Subject, value: i64 },
    /// `path` starts at `source` and is a prefix of some shortest path to `target`.
    PathPrefix { source: NodeId, target: NodeId, path: Vec<NodeId> },
    Verdict { answer: GoldAnswer },
}
