//! Oracle-driven gold reasoning traces for the complex task types.

use std::collections::BTreeSet;

use crate::graph::{bfs_distances, edge_key, shortest_path, Graph, NodeId};
use crate::oracles::{
    count_triangles, critical_nodes, solve_task, ComponentOfQuery, GoldAnswer, OracleError, TaskInstance, TaskType,
};
use crate::rag::TieredBase;
use crate::reasoning::{Claim, FinalAnswer, ReasoningStep, Subject};
use crate::render::{ColorTag, HighlightAction, RenderError, VisualState};
use crate::router::{make_plan, Category, ExecutionPlan, ParsedTask, RouterError, RoutingTable};
use crate::subgraph::{extract_ego, extract_for_entities, ExtractionConfig, Subgraph, SubgraphError};

/// Sentence prefix marking a step's reference to the drawing.
pub const VISUAL_MARK: &str = "Highlighted in the image:";

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("no trace template for {0}")]
    TemplateMissing(TaskType),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Subgraph(#[from] SubgraphError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Router(#[from] RouterError),
}

/// A chosen reasoning path: plan, steps with claims, visual states, answer.
#[derive(Debug, Clone)]
pub struct GoldTrace {
    pub task: TaskInstance,
    pub question: String,
    pub plan: ExecutionPlan,
    pub steps: Vec<ReasoningStep>,
    pub answer: FinalAnswer,
    /// `states[0]` is the initial drawing; one more per applied action.
    pub states: Vec<VisualState>,
}

impl GoldTrace {
    pub fn subgraph(&self) -> &Subgraph {
        &self.states[0].subgraph
    }
}

pub(crate) fn list(ids: &[NodeId]) -> String {
    if ids.is_empty() {
        "none".into()
    } else {
        ids.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
    }
}

pub(crate) fn edge_list(edges: &[(NodeId, NodeId)]) -> String {
    if edges.is_empty() {
        "none".into()
    } else {
        edges.iter().map(|(u, v)| format!("{u}-{v}")).collect::<Vec<_>>().join(", ")
    }
}

fn arrow(path: &[NodeId]) -> String {
    path.iter().map(NodeId::as_str).collect::<Vec<_>>().join(" -> ")
}

/// Closing sentence stating `a` as the answer to `t`.
pub fn conclusion(t: &TaskInstance, a: &GoldAnswer) -> String {
    use TaskType::*;
    let focus = t.entities.first().map(NodeId::as_str);
    match (t.task_type, a) {
        (TriangleCounting, GoldAnswer::Boolean { value: true, witness }) => {
            format!("Triangle confirmed: {}.", list(witness.as_deref().unwrap_or_default()))
        }
        (TriangleCounting, GoldAnswer::Boolean { value: false, .. }) => match focus {
            Some(v) => format!("No triangle involves node {v}."),
            None => "The graph contains no triangle.".into(),
        },
        (TriangleCounting, GoldAnswer::Integer { value, .. }) => match focus {
            Some(v) => format!("Node {v} lies on {value} triangles."),
            None => format!("The graph contains {value} triangles."),
        },
        (NeighborConnections, GoldAnswer::Integer { value, .. }) => {
            format!("There are {value} edges among the neighbors of node {}.", focus.unwrap_or("?"))
        }
        (BipartiteDetection, GoldAnswer::Boolean { value, .. }) => {
            format!("The graph is {}bipartite.", if *value { "" } else { "not " })
        }
        (PlanarityTesting, GoldAnswer::Boolean { value, .. }) => {
            format!("The graph is {}planar.", if *value { "" } else { "not " })
        }
        (CliqueDetection, GoldAnswer::Boolean { value, witness }) => {
            let k = t.params.get("k").copied().unwrap_or(0);
            match (value, witness) {
                (true, Some(w)) => format!("A clique of size {k} exists: {}.", list(w)),
                (true, None) => format!("A clique of size {k} exists."),
                (false, _) => format!("No clique of size {k} exists."),
            }
        }
        (CycleDetection, GoldAnswer::Boolean { value, witness }) => match (value, witness) {
            (true, Some(w)) => format!("A cycle exists: {}.", list(w)),
            (true, None) => "A cycle exists.".into(),
            (false, _) => "The graph is acyclic.".into(),
        },
        (_, GoldAnswer::Boolean { value, .. }) => format!("Answer: {}.", if *value { "yes" } else { "no" }),
        (_, GoldAnswer::Integer { value, .. }) => format!("Answer: {value}."),
        (_, GoldAnswer::Real { value }) => format!("Answer: {value}."),
        (_, GoldAnswer::Node { value }) => format!("Answer: node {value}."),
        (_, GoldAnswer::NodeSet { value }) => format!("Found {} nodes: {}.", value.len(), list(value)),
        (_, GoldAnswer::EdgeSet { value }) => format!("Found {} edges: {}.", value.len(), edge_list(value)),
        (_, GoldAnswer::NodeSequence { value, length }) => format!(
            "Shortest path found: {} (length {}).",
            arrow(value),
            length.map(|l| l.to_string()).unwrap_or_else(|| (value.len().saturating_sub(1)).to_string())
        ),
        (_, GoldAnswer::AnalysisRecord { component_count, sizes_desc, component_of_query }) => {
            let sizes = sizes_desc.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ");
            let mut s = if *component_count == 1 {
                format!("There is 1 connected component with size {sizes}.")
            } else {
                format!("There are {component_count} connected components with sizes {sizes}.")
            };
            if let Some(ComponentOfQuery { node, component, size }) = component_of_query {
                s.push_str(&format!(" Node {node} lies in component {component} of size {size}."));
            }
            s
        }
    }
}

struct Draft {
    text: String,
    action: Option<HighlightAction>,
    claims: Vec<Claim>,
}

/// Keeps only the parts of an action that exist in the drawing.
struct Visible<'a>(&'a Graph);

impl Visible<'_> {
    fn nodes(&self, ids: &[NodeId], color: ColorTag) -> Option<HighlightAction> {
        let nodes: Vec<NodeId> = ids.iter().filter(|v| self.0.contains(v)).cloned().collect();
        (!nodes.is_empty()).then_some(HighlightAction::HighlightNodes { nodes, color })
    }

    fn edges(&self, es: &[(NodeId, NodeId)], color: ColorTag) -> Option<HighlightAction> {
        let g = self.0;
        let edges: Vec<(NodeId, NodeId)> = es
            .iter()
            .filter(|(u, v)| matches!((g.index(u), g.index(v)), (Some(a), Some(b)) if g.has_edge(a, b)))
            .cloned()
            .collect();
        (!edges.is_empty()).then_some(HighlightAction::HighlightEdges { edges, color })
    }

    fn path(&self, p: &[NodeId]) -> Option<HighlightAction> {
        let g = self.0;
        let idx: Option<Vec<usize>> = p.iter().map(|v| g.index(v)).collect();
        let idx = idx?;
        (!p.is_empty() && idx.windows(2).all(|w| g.has_edge(w[0], w[1]))).then(|| HighlightAction::path(p.to_vec()))
    }
}

fn describe(a: &HighlightAction) -> String {
    match a {
        HighlightAction::HighlightNodes { nodes, .. } => list(nodes),
        HighlightAction::HighlightEdges { edges, .. } => edge_list(edges),
        HighlightAction::HighlightPath { path, .. } => arrow(path),
        HighlightAction::Clear => "nothing".into(),
    }
}

impl Draft {
    fn new(text: impl Into<String>, action: Option<HighlightAction>, claims: Vec<Claim>) -> Self {
        let mut text = text.into();
        if let Some(a) = &action {
            text.push_str(&format!(" {VISUAL_MARK} {}.", describe(a)));
        }
        Self { text, action, claims }
    }
}

fn ids(g: &Graph, idx: impl IntoIterator<Item = usize>) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = idx.into_iter().map(|i| g.id(i).clone()).collect();
    v.sort();
    v
}

fn neighbors(g: &Graph, v: usize) -> Vec<NodeId> {
    ids(g, g.neighbors(v).iter().copied())
}

fn edges_among_neighbors(g: &Graph, v: usize) -> Vec<(NodeId, NodeId)> {
    let nb = g.neighbors(v);
    let mut out = vec![];
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if g.has_edge(a, b) {
                out.push(edge_key(g.id(a), g.id(b)));
            }
        }
    }
    out.sort();
    out
}

fn layer(g: &Graph, v: usize, d: usize) -> Vec<NodeId> {
    ids(g, bfs_distances(g, v).into_iter().enumerate().filter(|&(_, x)| x == Some(d)).map(|(i, _)| i))
}

fn triangle_edges(w: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    vec![edge_key(&w[0], &w[1]), edge_key(&w[0], &w[2]), edge_key(&w[1], &w[2])]
}

fn cycle_closed(w: &[NodeId]) -> Vec<NodeId> {
    let mut p = w.to_vec();
    if let Some(f) = w.first() {
        p.push(f.clone());
    }
    p
}

fn verdict(t: &TaskInstance, a: &GoldAnswer, lead: &str, action: Option<HighlightAction>, mut claims: Vec<Claim>) -> Draft {
    claims.push(Claim::Verdict { answer: a.clone() });
    let text = if lead.is_empty() { conclusion(t, a) } else { format!("{lead} {}", conclusion(t, a)) };
    Draft::new(text, action, claims)
}

fn parity_sides(g: &Graph) -> (Vec<NodeId>, Vec<(NodeId, NodeId)>) {
    let n = g.node_count();
    let mut depth = vec![usize::MAX; n];
    for s in 0..n {
        if depth[s] != usize::MAX {
            continue;
        }
        for (i, d) in bfs_distances(g, s).into_iter().enumerate() {
            if let Some(d) = d {
                depth[i] = d;
            }
        }
    }
    let even = ids(g, (0..n).filter(|&i| depth[i] % 2 == 0));
    let mut same: Vec<(NodeId, NodeId)> =
        g.edges().filter(|&(u, v, _)| depth[u] % 2 == depth[v] % 2).map(|(u, v, _)| edge_key(g.id(u), g.id(v))).collect();
    same.sort();
    (even, same)
}

fn drafts(g: &Graph, sub: &Graph, t: &TaskInstance, gold: &GoldAnswer) -> Result<Vec<Draft>, TraceError> {
    use TaskType::*;
    let vis = Visible(sub);
    let ent = |i: usize| g.require(&t.entities[i]).expect("validated");
    let name = |i: usize| t.entities[i].clone();
    let out = match t.task_type {
        TriangleCounting if !t.entities.is_empty() => {
            let (a, an) = (ent(0), name(0));
            let nb = neighbors(g, a);
            let among = edges_among_neighbors(g, a);
            let witness = match gold {
                GoldAnswer::Boolean { witness, .. } | GoldAnswer::Integer { witness, .. } => witness.clone(),
                _ => None,
            };
            vec![
                Draft::new(
                    format!("Node {an} has {} neighbors: {}.", nb.len(), list(&nb)),
                    vis.nodes(&nb, ColorTag::Focus),
                    vec![Claim::Nodes { subject: Subject::Neighbors { node: an.clone() }, nodes: nb.clone() }],
                ),
                Draft::new(
                    format!("There are {} edges among the neighbors of node {an}: {}.", among.len(), edge_list(&among)),
                    vis.edges(&among, ColorTag::Frontier),
                    vec![
                        Claim::Edges { subject: Subject::EdgesAmongNeighbors { node: an.clone() }, edges: among.clone() },
                        Claim::Count { subject: Subject::EdgesAmongNeighbors { node: an.clone() }, value: among.len() as i64 },
                    ],
                ),
                verdict(
                    t,
                    gold,
                    "Each edge among the neighbors closes one triangle.",
                    witness.as_deref().and_then(|w| vis.edges(&triangle_edges(w), ColorTag::Path)),
                    vec![],
                ),
            ]
        }
        TriangleCounting => {
            let tc = count_triangles(g, None, true);
            let triples = tc.triples.unwrap_or_default();
            let nodes: Vec<NodeId> =
                triples.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            let edges: Vec<(NodeId, NodeId)> =
                triples.iter().flat_map(|w| triangle_edges(w)).collect::<BTreeSet<_>>().into_iter().collect();
            let witness = tc.first.map(|w| w.to_vec());
            vec![
                Draft::new(
                    format!("{} nodes lie on a triangle: {}.", nodes.len(), list(&nodes)),
                    vis.nodes(&nodes, ColorTag::Focus),
                    vec![Claim::Nodes { subject: Subject::TriangleNodes, nodes: nodes.clone() }],
                ),
                Draft::new(
                    format!("{} edges close a triangle: {}.", edges.len(), edge_list(&edges)),
                    vis.edges(&edges, ColorTag::Frontier),
                    vec![
                        Claim::Edges { subject: Subject::TriangleEdges, edges: edges.clone() },
                        Claim::Count { subject: Subject::TriangleEdges, value: edges.len() as i64 },
                    ],
                ),
                verdict(
                    t,
                    gold,
                    "Every triangle uses three of these edges.",
                    witness.as_deref().and_then(|w| vis.edges(&triangle_edges(w), ColorTag::Path)),
                    vec![],
                ),
            ]
        }
        ShortestPath => {
            let (an, bn) = (name(0), name(1));
            let GoldAnswer::NodeSequence { value: gold_path, length } = gold else { unreachable!("path answer") };
            // prefer an optimal path that is fully drawn
            let path = match vis.path(gold_path) {
                Some(_) => gold_path.clone(),
                None => match shortest_path(sub, &an, &bn).ok().flatten() {
                    Some(p) if length.is_some_and(|l| (p.length - l).abs() <= 1e-9 * l.max(1.0)) => p.path,
                    _ => gold_path.clone(),
                },
            };
            let hops = path.len() - 1;
            let answer = GoldAnswer::NodeSequence { value: path.clone(), length: *length };
            let mut out = vec![Draft::new(
                format!("The start node is {an} and the target node is {bn}."),
                vis.nodes(&[an.clone(), bn.clone()], ColorTag::Focus),
                vec![Claim::Nodes { subject: Subject::Endpoints, nodes: vec![an.clone(), bn.clone()] }],
            )];
            let dist = (!g.is_weighted()).then(|| bfs_distances(g, ent(0)));
            for j in 1..=3 {
                let e = (j * hops).div_ceil(4).max(1);
                let prefix = path[..=e].to_vec();
                let mut claims = vec![];
                let mut text = String::new();
                if let Some(dist) = &dist {
                    let layer = ids(g, dist.iter().enumerate().filter(|&(_, &x)| x == Some(e)).map(|(i, _)| i));
                    let shown: Vec<NodeId> = layer.iter().filter(|v| sub.contains(v)).cloned().collect();
                    text.push_str(&format!(
                        "Layer {e} from node {an} holds {} nodes, {} of them drawn: {}. ",
                        layer.len(),
                        shown.len(),
                        list(&shown)
                    ));
                    claims.push(Claim::Nodes { subject: Subject::HopLayer { node: an.clone(), distance: e }, nodes: layer });
                }
                text.push_str(&format!("The path so far is {}.", arrow(&prefix)));
                claims.push(Claim::PathPrefix { source: an.clone(), target: bn.clone(), path: prefix.clone() });
                out.push(Draft::new(text, vis.path(&prefix), claims));
            }
            out.push(verdict(t, &answer, "The target is reached.", vis.path(&path), vec![]));
            out
        }
        NeighborConnections => {
            let (a, an) = (ent(0), name(0));
            let nb = neighbors(g, a);
            let among = edges_among_neighbors(g, a);
            vec![
                Draft::new(
                    format!("The target node is {an}."),
                    vis.nodes(std::slice::from_ref(&an), ColorTag::Focus),
                    vec![Claim::Nodes { subject: Subject::Endpoints, nodes: vec![an.clone()] }],
                ),
                verdict(
                    t,
                    gold,
                    &format!(
                        "Node {an} is directly connected to {} nodes: {}. The edges among them are {}.",
                        nb.len(),
                        list(&nb),
                        edge_list(&among)
                    ),
                    vis.nodes(&nb, ColorTag::Frontier),
                    vec![
                        Claim::Nodes { subject: Subject::Neighbors { node: an.clone() }, nodes: nb.clone() },
                        Claim::Edges { subject: Subject::EdgesAmongNeighbors { node: an.clone() }, edges: among },
                    ],
                ),
            ]
        }
        ThirdOrderNeighbors => {
            let (a, an) = (ent(0), name(0));
            let mut out = vec![Draft::new(
                format!("The target node is {an}."),
                vis.nodes(std::slice::from_ref(&an), ColorTag::Focus),
                vec![Claim::Nodes { subject: Subject::Endpoints, nodes: vec![an.clone()] }],
            )];
            for d in 1..=3 {
                let l = layer(g, a, d);
                let claim = Claim::Nodes { subject: Subject::HopLayer { node: an.clone(), distance: d }, nodes: l.clone() };
                let text = format!("Nodes at distance {d} from node {an}: {}.", list(&l));
                let color = if d == 3 { ColorTag::Path } else { ColorTag::Frontier };
                if d < 3 {
                    out.push(Draft::new(text, vis.nodes(&l, color), vec![claim]));
                } else {
                    out.push(verdict(t, gold, &text, vis.nodes(&l, color), vec![claim]));
                }
            }
            out
        }
        CommonThirdOrderNeighbors => {
            let (an, bn) = (name(0), name(1));
            let la = layer(g, ent(0), 3);
            let lb = layer(g, ent(1), 3);
            let common: Vec<NodeId> = la.iter().filter(|v| lb.binary_search(v).is_ok()).cloned().collect();
            vec![
                Draft::new(
                    format!("The two query nodes are {an} and {bn}."),
                    vis.nodes(&[an.clone(), bn.clone()], ColorTag::Focus),
                    vec![Claim::Nodes { subject: Subject::Endpoints, nodes: vec![an.clone(), bn.clone()] }],
                ),
                Draft::new(
                    format!("Third-order neighbors of node {an}: {}.", list(&la)),
                    vis.nodes(&la, ColorTag::Frontier),
                    vec![Claim::Nodes { subject: Subject::HopLayer { node: an.clone(), distance: 3 }, nodes: la.clone() }],
                ),
                verdict(
                    t,
                    gold,
                    &format!("Third-order neighbors of node {bn}: {}.", list(&lb)),
                    vis.nodes(&common, ColorTag::Path),
                    vec![
                        Claim::Nodes { subject: Subject::HopLayer { node: bn.clone(), distance: 3 }, nodes: lb.clone() },
                        Claim::Nodes {
                            subject: Subject::CommonHopLayer { a: an.clone(), b: bn.clone(), distance: 3 },
                            nodes: common,
                        },
                    ],
                ),
            ]
        }
        BipartiteDetection => {
            let (even, same) = parity_sides(g);
            vec![
                Draft::new(
                    format!("Coloring by breadth-first layers puts {} nodes on the even side: {}.", even.len(), list(&even)),
                    vis.nodes(&even, ColorTag::Focus),
                    vec![Claim::Nodes { subject: Subject::EvenSide, nodes: even }],
                ),
                Draft::new(
                    format!("{} edges join two nodes of the same color: {}.", same.len(), edge_list(&same)),
                    vis.edges(&same, ColorTag::Path),
                    vec![
                        Claim::Edges { subject: Subject::SameSideEdges, edges: same.clone() },
                        Claim::Count { subject: Subject::SameSideEdges, value: same.len() as i64 },
                    ],
                ),
                verdict(t, gold, "", None, vec![]),
            ]
        }
        CliqueDetection => {
            let k = t.params["k"] as usize;
            let cand = ids(g, (0..g.node_count()).filter(|&v| g.degree(v) + 1 >= k));
            let witness = match gold {
                GoldAnswer::Boolean { witness: Some(w), .. } => Some(w.clone()),
                _ => None,
            };
            vec![
                Draft::new(
                    format!("{} nodes have degree at least {}: {}.", cand.len(), k - 1, list(&cand)),
                    vis.nodes(&cand, ColorTag::Frontier),
                    vec![
                        Claim::Nodes { subject: Subject::DegreeAtLeast { k: k - 1 }, nodes: cand.clone() },
                        Claim::Count { subject: Subject::DegreeAtLeast { k: k - 1 }, value: cand.len() as i64 },
                    ],
                ),
                verdict(t, gold, "", witness.as_deref().and_then(|w| vis.nodes(w, ColorTag::Path)), vec![]),
            ]
        }
        ConnectivityAnalysis => {
            let comps = g.components();
            let (subject, members) = match t.entities.first() {
                Some(q) => {
                    let qi = ent(0);
                    let c = comps.iter().find(|c| c.contains(&qi)).expect("every node has a component");
                    (Subject::ComponentOf { node: q.clone() }, ids(g, c.iter().copied()))
                }
                None => {
                    let best = comps.iter().max_by(|a, b| a.len().cmp(&b.len()).then(g.id(b[0]).cmp(g.id(a[0]))));
                    (Subject::LargestComponent, ids(g, best.into_iter().flatten().copied()))
                }
            };
            let lead = match &subject {
                Subject::ComponentOf { node } => format!("The component of node {node} has {} nodes", members.len()),
                _ => format!("The largest component has {} nodes", members.len()),
            };
            vec![
                Draft::new(
                    format!("{lead}: {}.", list(&members)),
                    vis.nodes(&members, ColorTag::Focus),
                    vec![Claim::Nodes { subject, nodes: members }],
                ),
                verdict(
                    t,
                    gold,
                    &format!("Counting the components gives {}.", comps.len()),
                    None,
                    vec![Claim::Count { subject: Subject::ComponentCount, value: comps.len() as i64 }],
                ),
            ]
        }
        CriticalNodeDetection => {
            let cand = ids(g, (0..g.node_count()).filter(|&v| g.degree(v) >= 2));
            let crit = critical_nodes(g);
            vec![
                Draft::new(
                    format!("{} nodes have degree at least 2 and may separate the graph: {}.", cand.len(), list(&cand)),
                    vis.nodes(&cand, ColorTag::Frontier),
                    vec![
                        Claim::Nodes { subject: Subject::DegreeAtLeast { k: 2 }, nodes: cand.clone() },
                        Claim::Count { subject: Subject::DegreeAtLeast { k: 2 }, value: cand.len() as i64 },
                    ],
                ),
                verdict(t, gold, "Removing each candidate and recounting components:", vis.nodes(&crit, ColorTag::Path), vec![]),
            ]
        }
        CycleDetection => {
            let rank = g.edge_count() as i64 - g.node_count() as i64 + g.components().len() as i64;
            let witness = match gold {
                GoldAnswer::Boolean { witness: Some(w), .. } => Some(w.clone()),
                _ => None,
            };
            vec![
                Draft::new(
                    format!(
                        "The graph has {} edges, {} nodes and {} connected parts, so its cycle rank is {rank}.",
                        g.edge_count(),
                        g.node_count(),
                        g.components().len()
                    ),
                    None,
                    vec![Claim::Count { subject: Subject::CycleRank, value: rank }],
                ),
                verdict(t, gold, "", witness.as_deref().and_then(|w| vis.path(&cycle_closed(w))), vec![]),
            ]
        }
        PlanarityTesting => {
            let (n, m) = (g.node_count(), g.edge_count());
            vec![
                Draft::new(
                    format!("The graph has {n} nodes and {m} edges; a planar graph on n >= 3 nodes has at most 3n - 6 edges."),
                    None,
                    vec![
                        Claim::Count { subject: Subject::NodeCount, value: n as i64 },
                        Claim::Count { subject: Subject::EdgeCount, value: m as i64 },
                    ],
                ),
                verdict(t, gold, "Searching for a planar embedding:", None, vec![]),
            ]
        }
        other => return Err(TraceError::TemplateMissing(other)),
    };
    Ok(out)
}

/// Subgraph shown to the reasoner; pairs that cannot be drawn together fall
/// back to the ego view of the first entity.
pub fn trace_subgraph(
    g: &Graph,
    base: &TieredBase,
    t: &TaskInstance,
    cfg: &ExtractionConfig,
) -> Result<Subgraph, SubgraphError> {
    match extract_for_entities(g, base, &t.entities, cfg) {
        Err(SubgraphError::Disconnected { .. } | SubgraphError::InfeasibleCap { .. }) if !t.entities.is_empty() => {
            extract_ego(g, base, &t.entities[0], cfg)
        }
        other => other,
    }
}

/// Deterministic chosen trace for a complex task, with claims about `g`.
pub fn make_gold_trace(
    g: &Graph,
    base: &TieredBase,
    t: &TaskInstance,
    cfg: &ExtractionConfig,
    layout_seed: u64,
) -> Result<GoldTrace, TraceError> {
    let table = RoutingTable::default();
    if table.categorize(t.task_type) != Category::Complex {
        return Err(TraceError::TemplateMissing(t.task_type));
    }
    let gold = solve_task(g, t)?;
    let parsed = ParsedTask::from_instance(t, &table);
    let plan = make_plan(&parsed)?;
    let sub = trace_subgraph(g, base, t, cfg)?;
    let drafts = drafts(g, &sub.graph, t, &gold)?;
    debug_assert_eq!(drafts.len(), plan.len());
    let mut states = vec![VisualState::new(sub, layout_seed)?];
    let mut steps = Vec::with_capacity(drafts.len());
    for (d, p) in drafts.into_iter().zip(&plan.steps) {
        if let Some(a) = &d.action {
            let next = states.last().unwrap().apply_action(a)?;
            states.push(next);
        }
        steps.push(ReasoningStep {
            index: p.index,
            instruction: p.instruction.clone(),
            observation: d.text,
            action: d.action,
            state_revision_after: states.last().unwrap().revision,
            action_error: None,
            claims: d.claims,
        });
    }
    let answer = steps
        .last()
        .and_then(|s| {
            s.claims.iter().find_map(|c| match c {
                Claim::Verdict { answer } => Some(answer.clone()),
                _ => None,
            })
        })
        .expect("every template ends in a verdict");
    let rationale = steps.last().map(|s| s.observation.clone()).unwrap_or_default();
    Ok(GoldTrace {
        task: t.clone(),
        question: parsed.question,
        plan,
        steps,
        answer: FinalAnswer { answer, rationale, warnings: vec![] },
        states,
    })
}
