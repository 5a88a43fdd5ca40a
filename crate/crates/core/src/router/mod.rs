//! Question parsing, simple/complex routing and execution plans.

mod plan;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, GraphError, NodeId};
use crate::llm::{Reasoner, ReasonerRequest, RequestMeta, Slot};
use crate::oracles::{OracleError, TaskInstance, TaskType};

pub use plan::{make_plan, ExecutionPlan, ExpectedAction, Modality, PlanStep, StepStage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Simple,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseSource {
    Template,
    SemanticFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedTask {
    pub question: String,
    pub task_type: TaskType,
    /// `(e1, e2)`; absent entities are the null placeholder.
    pub entities: [Option<NodeId>; 2],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, u64>,
    pub category: Category,
    pub parse_source: ParseSource,
}

impl ParsedTask {
    pub fn entity_list(&self) -> Vec<NodeId> {
        self.entities.iter().flatten().cloned().collect()
    }

    /// Parsed form of a generated instance, with its canonical question.
    pub fn from_instance(t: &TaskInstance, table: &RoutingTable) -> Self {
        let mut entities = [None, None];
        for (slot, e) in entities.iter_mut().zip(&t.entities) {
            *slot = Some(e.clone());
        }
        Self {
            question: render_question(t),
            task_type: t.task_type,
            entities,
            params: t.params.clone(),
            category: table.categorize(t.task_type),
            parse_source: ParseSource::Template,
        }
    }

    pub fn to_instance(&self) -> TaskInstance {
        TaskInstance { task_type: self.task_type, entities: self.entity_list(), params: self.params.clone() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RouterError {
    #[error("no template matches question {0:?}")]
    Unparseable(String),
    #[error("semantic fallback failed: {0}")]
    Fallback(String),
    #[error(transparent)]
    Lookup(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),
    #[error("invalid routing table: {0}")]
    Table(String),
    #[error("cannot plan: {0}")]
    Plan(String),
}

/// Which task types go to the text branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub simple: BTreeSet<TaskType>,
}

impl Default for RoutingTable {
    fn default() -> Self {
        use TaskType::*;
        Self {
            simple: [
                NodeCount,
                EdgeCount,
                NodeDegree,
                EdgeExistence,
                ConnectivityCheck,
                HighestDegreeNeighbor,
                FindConnectedEdges,
            ]
            .into(),
        }
    }
}

impl RoutingTable {
    /// Reads `simple = ["node_count", ...]`; every other type is complex.
    pub fn from_toml(text: &str) -> Result<Self, RouterError> {
        toml::from_str(text).map_err(|e| RouterError::Table(e.to_string()))
    }

    pub fn categorize(&self, t: TaskType) -> Category {
        if self.simple.contains(&t) {
            Category::Simple
        } else {
            Category::Complex
        }
    }
}

/// Category under the default routing table.
pub fn categorize(t: TaskType) -> Category {
    RoutingTable::default().categorize(t)
}

/// Canonical question text for a task instance.
pub fn render_question(t: &TaskInstance) -> String {
    use TaskType::*;
    let a = t.entities.first().map(NodeId::as_str).unwrap_or("");
    let b = t.entities.get(1).map(NodeId::as_str).unwrap_or("");
    let focused = !t.entities.is_empty();
    match t.task_type {
        BipartiteDetection => "Is this graph bipartite?".into(),
        CliqueDetection => format!("Does this graph contain a clique of size {}?", t.params.get("k").copied().unwrap_or(0)),
        CommonThirdOrderNeighbors => {
            format!("Do nodes {a} and {b} share any third-order neighbors? List the common third-order neighbors.")
        }
        ConnectivityCheck => "Is this graph connected?".into(),
        ConnectivityAnalysis if focused => format!(
            "Analyze the connected components of this graph: report their number and sizes, and the component containing node {a}."
        ),
        ConnectivityAnalysis => "Analyze the connected components of this graph: report their number and sizes.".into(),
        CriticalNodeDetection => "Which nodes are critical nodes (articulation points) of this graph?".into(),
        CycleDetection => "Does this graph contain a cycle?".into(),
        EdgeCount => "How many edges are in this graph?".into(),
        EdgeExistence => format!("Is there a direct edge between node {a} and node {b}?"),
        FindConnectedEdges => format!("List all edges connected to node {a}."),
        HighestDegreeNeighbor => format!("Which neighbor of node {a} has the highest degree?"),
        NeighborConnections => format!("How many edges exist between the neighbors of node {a}?"),
        NodeCount => "What is the total number of nodes in this graph?".into(),
        NodeDegree => format!("Return the degree of node {a}."),
        PlanarityTesting => "Is this graph planar?".into(),
        ShortestPath => format!("Find the shortest path between nodes {a} and {b}."),
        ThirdOrderNeighbors => format!("List the third-order neighbors of node {a}."),
        TriangleCounting if t.is_triangle_existence() && focused => format!(
            "Does a 3-cycle (triangle) involving node {a} exist? If so, list the nodes of one such triangle."
        ),
        TriangleCounting if t.is_triangle_existence() => {
            "Does this graph contain a 3-cycle (triangle)? If so, list the nodes of one such triangle.".into()
        }
        TriangleCounting if focused => format!("How many triangles contain node {a}?"),
        TriangleCounting => "How many triangles are in this graph?".into(),
    }
}

type Build = fn(&Captures) -> (Vec<String>, Vec<(&'static str, u64)>);

fn none(_: &Captures) -> (Vec<String>, Vec<(&'static str, u64)>) {
    (vec![], vec![])
}
fn one(c: &Captures) -> (Vec<String>, Vec<(&'static str, u64)>) {
    (vec![c["a"].to_string()], vec![])
}
fn two(c: &Captures) -> (Vec<String>, Vec<(&'static str, u64)>) {
    (vec![c["a"].to_string(), c["b"].to_string()], vec![])
}
fn exists_one(c: &Captures) -> (Vec<String>, Vec<(&'static str, u64)>) {
    (vec![c["a"].to_string()], vec![("exists", 1)])
}
fn exists_none(_: &Captures) -> (Vec<String>, Vec<(&'static str, u64)>) {
    (vec![], vec![("exists", 1)])
}
fn clique(c: &Captures) -> (Vec<String>, Vec<(&'static str, u64)>) {
    (vec![], vec![("k", c["k"].parse().unwrap_or(0))])
}

/// Ordered from specific to general; the first match wins.
static PATTERNS: LazyLock<Vec<(TaskType, Regex, Build)>> = LazyLock::new(|| {
    use TaskType::*;
    let raw: Vec<(TaskType, &str, Build)> = vec![
        (TriangleCounting, r"does a 3-cycle \(triangle\) involving node (?P<a>\w+) exist", exists_one),
        (TriangleCounting, r"is node (?P<a>\w+) (?:part of|in) (?:a|any) (?:triangle|3-cycle)", exists_one),
        (TriangleCounting, r"does (?:this|the) graph contain (?:a|any) (?:3-cycle|triangle)", exists_none),
        (TriangleCounting, r"how many triangles (?:contain|involve|include) node (?P<a>\w+)", one),
        (TriangleCounting, r"count (?:all )?(?:the )?triangles (?:containing|involving|through) node (?P<a>\w+)", one),
        (TriangleCounting, r"how many triangles|count (?:all )?(?:the )?triangles", none),
        (CliqueDetection, r"clique of size (?P<k>\d+)", clique),
        (
            CommonThirdOrderNeighbors,
            r"do nodes (?P<a>\w+) and (?P<b>\w+) share any third-order neighbou?rs",
            two,
        ),
        (
            CommonThirdOrderNeighbors,
            r"common third-order neighbou?rs (?:of|between) nodes? (?P<a>\w+) and (?:node )?(?P<b>\w+)",
            two,
        ),
        (ThirdOrderNeighbors, r"third-order neighbou?rs of node (?P<a>\w+)", one),
        (ThirdOrderNeighbors, r"nodes at (?:distance|exactly) (?:exactly )?3 (?:hops )?from node (?P<a>\w+)", one),
        (ShortestPath, r"shortest path between nodes? (?P<a>\w+) and (?:node )?(?P<b>\w+)", two),
        (ShortestPath, r"shortest path from node (?P<a>\w+) to node (?P<b>\w+)", two),
        (EdgeExistence, r"is there (?:a |an )?(?:direct )?edge between nodes? (?P<a>\w+) and (?:node )?(?P<b>\w+)", two),
        (EdgeExistence, r"are nodes (?P<a>\w+) and (?P<b>\w+) (?:directly )?(?:connected|adjacent)", two),
        (
            NeighborConnections,
            r"how many edges (?:exist|are there) (?:between|among) the neighbou?rs of node (?P<a>\w+)",
            one,
        ),
        (NeighborConnections, r"connections among the neighbou?rs of node (?P<a>\w+)", one),
        (FindConnectedEdges, r"(?:list|find|return) (?:all )?(?:the )?edges (?:connected|incident) to node (?P<a>\w+)", one),
        (HighestDegreeNeighbor, r"which neighbou?r of node (?P<a>\w+) has the highest degree", one),
        (HighestDegreeNeighbor, r"highest-degree neighbou?r of node (?P<a>\w+)", one),
        (NodeDegree, r"determine if node (?P<a>\w+) exists in the graph\. if so, what is its degree", one),
        (NodeDegree, r"degree of node (?P<a>\w+)", one),
        (CriticalNodeDetection, r"critical nodes|articulation points|cut vertices", none),
        (
            ConnectivityAnalysis,
            r"analy[sz]e the connected components of (?:this|the) graph.*component containing node (?P<a>\w+)",
            one,
        ),
        (ConnectivityAnalysis, r"analy[sz]e the connected components|how many connected components", none),
        (ConnectivityCheck, r"is (?:this|the) graph connected", none),
        (BipartiteDetection, r"bipartite", none),
        (CycleDetection, r"contain (?:a|any) cycles?|is (?:this|the) graph acyclic", none),
        (PlanarityTesting, r"planar", none),
        (NodeCount, r"number of nodes|how many nodes", none),
        (EdgeCount, r"number of edges|how many edges", none),
    ];
    raw.into_iter().map(|(t, p, b)| (t, Regex::new(&format!("(?i){p}")).unwrap(), b)).collect()
});

/// Template match without graph lookups.
pub fn match_template(q: &str) -> Option<TaskInstance> {
    for (t, re, build) in PATTERNS.iter() {
        if let Some(c) = re.captures(q) {
            let (ents, params) = build(&c);
            let entities = ents.iter().map(NodeId::new).collect::<Result<Vec<_>, _>>().ok()?;
            let mut inst = TaskInstance::new(*t, entities);
            for (k, v) in params {
                inst = inst.with_param(k, v);
            }
            return Some(inst);
        }
    }
    None
}

fn finish(
    q: &str,
    inst: TaskInstance,
    g: &Graph,
    table: &RoutingTable,
    source: ParseSource,
) -> Result<ParsedTask, RouterError> {
    for e in &inst.entities {
        g.require(e)?;
    }
    inst.validate(g)?;
    let mut entities = [None, None];
    for (slot, e) in entities.iter_mut().zip(inst.entities.iter()) {
        *slot = Some(e.clone());
    }
    Ok(ParsedTask {
        question: q.to_string(),
        task_type: inst.task_type,
        entities,
        params: inst.params,
        category: table.categorize(inst.task_type),
        parse_source: source,
    })
}

pub const FALLBACK_SYSTEM_PROMPT: &str = "You map graph questions to a task type and the node ids they mention. \
Reply with a single JSON object {\"task_type\": <type>, \"entities\": [<ids>], \"params\": {<name>: <int>}} and nothing else.";

fn fallback_prompt(q: &str) -> String {
    let mut s = String::from("Task types: ");
    s.push_str(&TaskType::ALL.iter().map(|t| t.name()).collect::<Vec<_>>().join(", "));
    s.push_str(".\nclique_detection needs params {\"k\": size}; triangle_counting takes {\"exists\": 1} for yes/no questions.\n\n");
    let shots = [
        ("Determine if node 12 exists in the graph. If so, what is its degree?", r#"{"task_type": "node_degree", "entities": ["12"], "params": {}}"#),
        ("Is there a direct edge between node 3 and node 8? If yes, provide its weight.", r#"{"task_type": "edge_existence", "entities": ["3", "8"], "params": {}}"#),
        ("Find and list the sequence of nodes that form the shortest path between node 4 and node 9.", r#"{"task_type": "shortest_path", "entities": ["4", "9"], "params": {}}"#),
        ("Does a 3-cycle (triangle) involving node 5 exist? If so, list the nodes of one such triangle.", r#"{"task_type": "triangle_counting", "entities": ["5"], "params": {"exists": 1}}"#),
    ];
    for (q, a) in shots {
        s.push_str(&format!("Question: {q}\nAnswer: {a}\n\n"));
    }
    s.push_str(&format!("Question: {q}\nAnswer:"));
    s
}

#[derive(Deserialize)]
struct FallbackReply {
    task_type: String,
    #[serde(default)]
    entities: Vec<serde_json::Value>,
    #[serde(default)]
    params: BTreeMap<String, u64>,
}

fn parse_fallback_reply(text: &str) -> Result<TaskInstance, RouterError> {
    let json = crate::llm::extract_json_object(text).ok_or_else(|| RouterError::Fallback("reply holds no JSON object".into()))?;
    let reply: FallbackReply = serde_json::from_str(json).map_err(|e| RouterError::Fallback(e.to_string()))?;
    let task_type: TaskType = reply.task_type.parse().map_err(|_| RouterError::Fallback(format!("unknown task type {:?}", reply.task_type)))?;
    let entities = reply
        .entities
        .iter()
        .map(|v| {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(RouterError::Fallback(format!("entity {other} is not an id"))),
            };
            NodeId::new(&s).map_err(|e| RouterError::Fallback(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (lo, hi) = task_type.arity();
    if entities.len() < lo || entities.len() > hi {
        return Err(RouterError::Fallback(format!("{task_type} takes {lo}..={hi} entities, got {}", entities.len())));
    }
    for k in reply.params.keys() {
        let allowed = matches!((task_type, k.as_str()), (TaskType::CliqueDetection, "k") | (TaskType::TriangleCounting, "exists"));
        if !allowed {
            return Err(RouterError::Fallback(format!("unexpected parameter {k} for {task_type}")));
        }
    }
    Ok(TaskInstance { task_type, entities, params: reply.params })
}

/// Template parse, then one fallback round trip when a reasoner is supplied.
pub fn parse_question(
    q: &str,
    g: &Graph,
    fallback: Option<&dyn Reasoner>,
    table: &RoutingTable,
) -> Result<ParsedTask, RouterError> {
    if let Some(inst) = match_template(q) {
        return finish(q, inst, g, table, ParseSource::Template);
    }
    let Some(reasoner) = fallback else {
        return Err(RouterError::Unparseable(q.to_string()));
    };
    let req = ReasonerRequest::new(FALLBACK_SYSTEM_PROMPT, fallback_prompt(q))
        .with_meta(RequestMeta { tag: None, task_type: None, slot: Slot::Parse });
    let reply = reasoner.complete(&req)?;
    let inst = parse_fallback_reply(&reply.text)?;
    finish(q, inst, g, table, ParseSource::SemanticFallback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ScriptedReasoner, ScriptKey};

    fn graph() -> Graph {
        Graph::from_edges(&["A"], &[("A", "B"), ("B", "C"), ("C", "D"), ("D", "E"), ("E", "F")]).unwrap()
    }

    fn parse(q: &str) -> ParsedTask {
        parse_question(q, &graph(), None, &RoutingTable::default()).unwrap()
    }

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    #[test]
    fn example_box_questions() {
        let p = parse("What is the total number of nodes in this Graph?");
        assert_eq!((p.task_type, p.entities.clone(), p.category), (TaskType::NodeCount, [None, None], Category::Simple));
        let p = parse("Return the degree of node A.");
        assert_eq!((p.task_type, p.entities.clone(), p.category), (TaskType::NodeDegree, [Some(id("A")), None], Category::Simple));
        let p = parse("Find the shortest path between nodes A and B.");
        assert_eq!((p.task_type, p.entities.clone(), p.category), (TaskType::ShortestPath, [Some(id("A")), Some(id("B"))], Category::Complex));
        let p = parse("Do nodes A and B share any third-order neighbors?");
        assert_eq!(p.task_type, TaskType::CommonThirdOrderNeighbors);
        assert_eq!(p.entities, [Some(id("A")), Some(id("B"))]);
        assert_eq!(p.parse_source, ParseSource::Template);
    }

    #[test]
    fn prompt_template_wordings() {
        assert_eq!(parse("Determine if node C exists in the graph. If so, what is its degree?").task_type, TaskType::NodeDegree);
        let p = parse("Is there a direct edge between node A and node B? If yes, provide its weight.");
        assert_eq!(p.task_type, TaskType::EdgeExistence);
        let p = parse("Find and list the sequence of nodes that form the shortest path between node A and node F.");
        assert_eq!((p.task_type, p.entities[1].clone()), (TaskType::ShortestPath, Some(id("F"))));
        let p = parse("Does a 3-cycle (triangle) involving node D exist? If so, list the nodes of one such triangle.");
        assert_eq!(p.to_instance(), TaskInstance::new(TaskType::TriangleCounting, vec![id("D")]).with_param("exists", 1));
    }

    #[test]
    fn rendered_questions_round_trip() {
        let g = graph();
        for t in TaskType::ALL {
            let ents: Vec<NodeId> = ["A", "C"][..t.arity().1].iter().map(|s| id(s)).collect();
            let mut insts = vec![TaskInstance::new(t, ents.clone())];
            if t.arity().0 < t.arity().1 {
                insts.push(TaskInstance::new(t, vec![]));
            }
            if t == TaskType::CliqueDetection {
                insts = vec![TaskInstance::new(t, vec![]).with_param("k", 4)];
            }
            if t == TaskType::TriangleCounting {
                insts.push(TaskInstance::new(t, ents.clone()).with_param("exists", 1));
                insts.push(TaskInstance::new(t, vec![]).with_param("exists", 1));
            }
            for inst in insts {
                let q = render_question(&inst);
                let p = parse_question(&q, &g, None, &RoutingTable::default()).unwrap();
                assert_eq!(p.to_instance(), inst, "{q}");
            }
        }
    }

    #[test]
    fn categorize_is_seven_plus_eleven() {
        let simple = TaskType::ALL.iter().filter(|t| categorize(**t) == Category::Simple).count();
        assert_eq!((simple, 18 - simple), (7, 11));
        assert_eq!(categorize(TaskType::TriangleCounting), Category::Complex);
        let table = RoutingTable::from_toml("simple = [\"node_count\", \"triangle_counting\"]").unwrap();
        assert_eq!(table.categorize(TaskType::TriangleCounting), Category::Simple);
        assert_eq!(table.categorize(TaskType::EdgeCount), Category::Complex);
        assert!(RoutingTable::from_toml("simple = [\"nope\"]").is_err());
    }

    #[test]
    fn errors() {
        let g = graph();
        let t = RoutingTable::default();
        assert!(matches!(parse_question("Tell me a joke", &g, None, &t), Err(RouterError::Unparseable(_))));
        assert!(matches!(parse_question("Return the degree of node Z.", &g, None, &t), Err(RouterError::Lookup(_))));
    }

    #[test]
    fn fallback_is_one_call_and_validated() {
        let g = graph();
        let t = RoutingTable::default();
        let key = ScriptKey { tag: None, task_type: None, slot: Slot::Parse };
        let ok = ScriptedReasoner::new().with(key.clone(), r#"{"task_type": "node_degree", "entities": ["B"], "params": {}}"#);
        let p = parse_question("How connected is B, in degree terms?", &g, Some(&ok), &t).unwrap();
        assert_eq!((p.task_type, p.parse_source), (TaskType::NodeDegree, ParseSource::SemanticFallback));
        assert_eq!(ok.calls(), 1);

        for bad in [
            r#"{"task_type": "node_weight", "entities": ["B"]}"#,
            r#"{"task_type": "node_degree", "entities": []}"#,
            r#"{"task_type": "node_degree", "entities": ["B"], "params": {"k": 3}}"#,
            "no json here",
        ] {
            let r = ScriptedReasoner::new().with(key.clone(), bad);
            assert!(matches!(parse_question("gibberish", &g, Some(&r), &t), Err(RouterError::Fallback(_))), "{bad}");
        }
    }
}
