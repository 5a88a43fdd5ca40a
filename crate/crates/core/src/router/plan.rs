use serde::{Deserialize, Serialize};

use super::{Category, ParsedTask, RouterError};
use crate::oracles::TaskType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedAction {
    None,
    HighlightNodes,
    HighlightEdges,
    HighlightPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStage {
    Explore,
    /// The concluding step whose output the summarizer aggregates.
    Summarize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: usize,
    pub instruction: String,
    pub expected_action: ExpectedAction,
    pub stage: StepStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Visual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub task_type: TaskType,
    pub modality: Modality,
    pub steps: Vec<PlanStep>,
}

impl ExecutionPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Number of steps in the visual plan of each complex type.
pub fn visual_step_count(t: TaskType) -> Option<usize> {
    use TaskType::*;
    Some(match t {
        ShortestPath => 5,
        ThirdOrderNeighbors => 4,
        TriangleCounting | CommonThirdOrderNeighbors | BipartiteDetection => 3,
        NeighborConnections | CliqueDetection | ConnectivityAnalysis | CriticalNodeDetection | CycleDetection
        | PlanarityTesting => 2,
        _ => return None,
    })
}

/// Deterministic plan for a parsed task.
pub fn make_plan(t: &ParsedTask) -> Result<ExecutionPlan, RouterError> {
    use ExpectedAction::*;
    use TaskType::*;
    let ents = t.entity_list();
    let a = ents.first().map(|v| v.to_string()).unwrap_or_default();
    let b = ents.get(1).map(|v| v.to_string()).unwrap_or_default();
    if t.category == Category::Simple {
        let steps = vec![PlanStep {
            index: 1,
            instruction: "Answer the question from the retrieved graph context.".into(),
            expected_action: None,
            stage: StepStage::Summarize,
        }];
        return Ok(ExecutionPlan { task_type: t.task_type, modality: Modality::Text, steps });
    }
    let k = t.params.get("k").copied().unwrap_or(0);
    let raw: Vec<(String, ExpectedAction)> = match t.task_type {
        TriangleCounting if !ents.is_empty() => vec![
            (format!("Identify the neighbors of node {a}."), HighlightNodes),
            (format!("Check for edges between the neighbors of node {a}."), HighlightEdges),
            (format!("Confirm the triangles through node {a}."), HighlightEdges),
        ],
        TriangleCounting => vec![
            ("Identify the nodes that lie on a triangle.".into(), HighlightNodes),
            ("Check which edges close a triangle.".into(), HighlightEdges),
            ("Confirm the triangles found.".into(), HighlightEdges),
        ],
        ShortestPath => vec![
            (format!("Identify the start node {a} and the end node {b}."), HighlightNodes),
            (format!("Explore the neighbors of node {a}."), HighlightPath),
            ("Extend the path by one layer toward the target.".into(), HighlightPath),
            ("Extend the path by another layer toward the target.".into(), HighlightPath),
            (format!("Trace the shortest path to node {b}."), HighlightPath),
        ],
        NeighborConnections => vec![
            (format!("Identify the target node {a}."), HighlightNodes),
            (format!("Highlight the direct neighbors of node {a} and the edges among them."), HighlightNodes),
        ],
        ThirdOrderNeighbors => vec![
            (format!("Identify the target node {a}."), HighlightNodes),
            (format!("Highlight the nodes at distance 1 from node {a}."), HighlightNodes),
            (format!("Highlight the nodes at distance 2 from node {a}."), HighlightNodes),
            (format!("Highlight the nodes at distance 3 from node {a}."), HighlightNodes),
        ],
        CommonThirdOrderNeighbors => vec![
            (format!("Identify nodes {a} and {b}."), HighlightNodes),
            (format!("Highlight the third-order neighbors of node {a}."), HighlightNodes),
            (format!("Highlight the third-order neighbors of node {b} and keep the shared ones."), HighlightNodes),
        ],
        BipartiteDetection => vec![
            ("Two-color the nodes by breadth-first layers.".into(), HighlightNodes),
            ("Check for edges joining two nodes of the same color.".into(), HighlightEdges),
            ("Conclude whether the graph is bipartite.".into(), None),
        ],
        CliqueDetection => vec![
            (format!("Highlight the nodes with degree at least {}.", k.saturating_sub(1)), HighlightNodes),
            (format!("Search those nodes for a clique of size {k}."), HighlightNodes),
        ],
        ConnectivityAnalysis => vec![
            ("Count the connected components.".into(), HighlightNodes),
            ("Report the component sizes.".into(), None),
        ],
        CriticalNodeDetection => vec![
            ("Highlight the nodes with degree at least 2.".into(), HighlightNodes),
            ("Identify the nodes whose removal disconnects the graph.".into(), HighlightNodes),
        ],
        CycleDetection => vec![
            ("Compare the edge count with a spanning forest.".into(), None),
            ("Trace a cycle if one exists.".into(), HighlightPath),
        ],
        PlanarityTesting => vec![
            ("Compare the edge count with the planar bound.".into(), None),
            ("Decide whether the graph can be drawn without crossings.".into(), None),
        ],
        other => return Err(RouterError::Plan(format!("no visual plan for {other}"))),
    };
    debug_assert_eq!(Some(raw.len()), visual_step_count(t.task_type));
    let n = raw.len();
    let steps = raw
        .into_iter()
        .enumerate()
        .map(|(i, (instruction, expected_action))| PlanStep {
            index: i + 1,
            instruction,
            expected_action,
            stage: if i + 1 == n { StepStage::Summarize } else { StepStage::Explore },
        })
        .collect();
    Ok(ExecutionPlan { task_type: t.task_type, modality: Modality::Visual, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::router::{parse_question, RoutingTable};

    fn plan(q: &str) -> ExecutionPlan {
        let g = Graph::from_edges(&["A"], &[("A", "B"), ("B", "D"), ("D", "E"), ("E", "F")]).unwrap();
        make_plan(&parse_question(q, &g, None, &RoutingTable::default()).unwrap()).unwrap()
    }

    #[test]
    fn triangle_plan_has_three_steps_ending_in_summarize() {
        let p = plan("Does a 3-cycle (triangle) involving node A exist? If so, list the nodes of one such triangle.");
        assert_eq!(p.modality, Modality::Visual);
        assert_eq!(p.len(), 3);
        assert_eq!(p.steps.last().unwrap().stage, StepStage::Summarize);
    }

    #[test]
    fn shortest_path_middle_steps_highlight_path() {
        let p = plan("Find the shortest path between nodes B and F.");
        assert_eq!(p.len(), 5);
        assert!(p.steps[1..4].iter().all(|s| s.expected_action == ExpectedAction::HighlightPath));
    }

    #[test]
    fn simple_tasks_get_one_text_step() {
        let p = plan("What is the total number of nodes in this graph?");
        assert_eq!((p.modality, p.len()), (Modality::Text, 1));
    }

    #[test]
    fn indices_strictly_increase_for_every_type() {
        for t in TaskType::ALL {
            if let Some(n) = visual_step_count(t) {
                let task = ParsedTask {
                    question: String::new(),
                    task_type: t,
                    entities: [None, None],
                    params: Default::default(),
                    category: Category::Complex,
                    parse_source: crate::router::ParseSource::Template,
                };
                let p = make_plan(&task).unwrap();
                assert_eq!(p.len(), n);
                assert!(p.steps.iter().enumerate().all(|(i, s)| s.index == i + 1));
            }
        }
    }
}
