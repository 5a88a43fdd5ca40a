//! Centrality-tiered neighbourhood store and text retrieval.
//!
//! Tier 1 holds the top PageRank nodes with their 2-hop neighbourhoods, tier 2
//! the next nodes by betweenness with 1-hop neighbourhoods, tier 3 everything
//! else, stored only when no tier-1/2 neighbour already covers it.

mod entry;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::graph::centrality::{betweenness_values, pagerank_values};
use crate::graph::paths::bfs_within;
use crate::graph::{CentralityKind, CentralityScores, Graph, GraphError, NodeId, PageRankParams};
use crate::oracles::TaskType;
use crate::router::ParsedTask;

pub use entry::{parse_entry, parse_full_graph, parse_summary, serialize_entry, EntryShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub struct Tier(u8);

impl Tier {
    pub const CORE: Tier = Tier(1);
    pub const BACKBONE: Tier = Tier(2);
    pub const PERIPHERAL: Tier = Tier(3);

    pub fn new(t: u8) -> Option<Tier> {
        (1..=3).contains(&t).then_some(Tier(t))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Sort rank where less important tiers come first (tier 3 = 0, tier 1 = 2).
    pub fn importance(self) -> u8 {
        3 - self.0
    }

    pub fn radius(self) -> usize {
        if self.0 == 1 {
            2
        } else {
            1
        }
    }
}

impl From<Tier> for u8 {
    fn from(t: Tier) -> u8 {
        t.0
    }
}

impl TryFrom<u8> for Tier {
    type Error = String;
    fn try_from(t: u8) -> Result<Self, String> {
        Tier::new(t).ok_or_else(|| format!("tier must be 1, 2 or 3, got {t}"))
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseConfig {
    pub k1_percent: f64,
    pub k2_percent: f64,
    pub store_tier3: bool,
    pub bypass_threshold: usize,
}

impl Default for BaseConfig {
    fn default() -> Self {
        Self { k1_percent: 10.0, k2_percent: 20.0, store_tier3: true, bypass_threshold: 15 }
    }
}

impl BaseConfig {
    pub fn validate(&self) -> Result<(), RagError> {
        if !(self.k1_percent > 0.0 && self.k1_percent <= 100.0) {
            return Err(RagError::Config(format!("k1_percent {} outside (0, 100]", self.k1_percent)));
        }
        if !(0.0..=100.0).contains(&self.k2_percent) {
            return Err(RagError::Config(format!("k2_percent {} outside [0, 100]", self.k2_percent)));
        }
        if self.k1_percent + self.k2_percent > 100.0 + 1e-9 {
            return Err(RagError::Config("k1_percent + k2_percent exceeds 100".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RagError {
    #[error("invalid base config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("malformed base file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodEntry {
    pub anchor: NodeId,
    pub tier: Tier,
    pub radius: usize,
    /// Neighbourhood nodes including the anchor, sorted.
    pub nodes: Vec<NodeId>,
    /// Induced edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Edge weights parallel to `edges`, for weighted graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub text: String,
}

/// Number of nodes a percentage selects: `ceil(pct / 100 * n)`.
pub fn tier_size(pct: f64, n: usize) -> usize {
    // guard against 10% of 30 landing on 3.0000000000000004
    let x = pct / 100.0 * n as f64 - 1e-9;
    (x.ceil().max(0.0) as usize).min(n)
}

/// Integer sort key for a centrality score, so ties that differ only by
/// floating-point noise are broken by node id rather than by rounding error.
pub(crate) fn score_key(x: f64) -> i64 {
    (x * 1e12).round() as i64
}

/// Tier label for every node; ties in either ranking go to the smaller id.
pub fn assign_tiers(g: &Graph, cfg: &BaseConfig) -> Result<BTreeMap<NodeId, Tier>, RagError> {
    let (pr, bc) = centralities(g)?;
    Ok(tiers_from_scores(g, cfg, &pr, &bc).into_iter().enumerate().map(|(i, t)| (g.id(i).clone(), t)).collect())
}

fn centralities(g: &Graph) -> Result<(Vec<f64>, Vec<f64>), RagError> {
    if g.node_count() == 0 {
        return Err(RagError::Config("graph has no nodes".into()));
    }
    let pr = pagerank_values(g, PageRankParams::default())?;
    let bc = betweenness_values(g);
    Ok((pr, bc))
}

fn tiers_from_scores(g: &Graph, cfg: &BaseConfig, pr: &[f64], bc: &[f64]) -> Vec<Tier> {
    let n = g.node_count();
    let mut by_pr: Vec<usize> = (0..n).collect();
    by_pr.sort_by_key(|&i| (std::cmp::Reverse(score_key(pr[i])), i));
    let n1 = tier_size(cfg.k1_percent, n);
    let mut tiers = vec![Tier::PERIPHERAL; n];
    for &i in &by_pr[..n1] {
        tiers[i] = Tier::CORE;
    }
    let mut rest: Vec<usize> = by_pr[n1..].to_vec();
    rest.sort_by_key(|&i| (std::cmp::Reverse(score_key(bc[i])), i));
    let n2 = tier_size(cfg.k2_percent, n).min(rest.len());
    for &i in &rest[..n2] {
        tiers[i] = Tier::BACKBONE;
    }
    tiers
}

/// Index rebuilt after construction or loading.
#[derive(Debug, Default)]
struct Lookup {
    by_anchor: HashMap<NodeId, usize>,
    /// node -> (entry position, hop distance from that entry's anchor)
    containing: HashMap<NodeId, Vec<(usize, usize)>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TieredBase {
    pub config: BaseConfig,
    pub tiers: BTreeMap<NodeId, Tier>,
    pub pagerank: CentralityScores,
    pub betweenness: CentralityScores,
    /// Entries sorted by anchor.
    pub entries: Vec<NeighborhoodEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bypass: Option<Graph>,
    pub summary: String,
    #[serde(skip)]
    lookup: OnceLock<Lookup>,
}

impl Clone for TieredBase {
    fn clone(&self) -> Self {
        Self {
            config: self.config,
            tiers: self.tiers.clone(),
            pagerank: self.pagerank.clone(),
            betweenness: self.betweenness.clone(),
            entries: self.entries.clone(),
            bypass: self.bypass.clone(),
            summary: self.summary.clone(),
            lookup: OnceLock::new(),
        }
    }
}

impl PartialEq for TieredBase {
    fn eq(&self, o: &Self) -> bool {
        self.config == o.config
            && self.tiers == o.tiers
            && self.pagerank == o.pagerank
            && self.betweenness == o.betweenness
            && self.entries == o.entries
            && self.bypass == o.bypass
            && self.summary == o.summary
    }
}

pub fn summary_text(g: &Graph) -> String {
    format!(
        "Graph summary: |V|={}, |E|={}, components={}.",
        g.node_count(),
        g.edge_count(),
        g.components().len()
    )
}

fn make_entry(g: &Graph, anchor: usize, tier: Tier) -> NeighborhoodEntry {
    let radius = tier.radius();
    let ball = bfs_within(g, anchor, radius);
    let mut dist: HashMap<usize, usize> = HashMap::with_capacity(ball.len());
    for &(v, d) in &ball {
        dist.insert(v, d);
    }
    let mut members: Vec<usize> = ball.iter().map(|&(v, _)| v).collect();
    members.sort_unstable();
    let mut edges = Vec::new();
    for &u in &members {
        for (v, w) in g.weighted_neighbors(u) {
            if u < v && dist.contains_key(&v) {
                edges.push((u, v, w));
            }
        }
    }
    let shape = EntryShape {
        anchor: g.id(anchor).clone(),
        tier,
        radius,
        nodes: members.iter().map(|&i| g.id(i).clone()).collect(),
        edges: edges
            .iter()
            .map(|&(u, v, w)| (g.id(u).clone(), g.id(v).clone(), g.is_weighted().then_some(w)))
            .collect(),
    };
    let text = serialize_entry(&shape);
    NeighborhoodEntry {
        anchor: shape.anchor,
        tier,
        radius,
        nodes: shape.nodes,
        weights: g.is_weighted().then(|| edges.iter().map(|e| e.2).collect()),
        edges: edges.iter().map(|&(u, v, _)| (g.id(u).clone(), g.id(v).clone())).collect(),
        text,
    }
}

/// Builds the tiered base; graphs at or below the bypass threshold are kept whole.
pub fn build_base(g: &Graph, cfg: &BaseConfig) -> Result<TieredBase, RagError> {
    cfg.validate()?;
    let (pr, bc) = centralities(g)?;
    let tiers = tiers_from_scores(g, cfg, &pr, &bc);
    let bypass = (g.node_count() <= cfg.bypass_threshold).then(|| g.clone());
    let mut entries = Vec::new();
    if bypass.is_none() {
        let covered = |v: usize| g.neighbors(v).iter().any(|&w| tiers[w] != Tier::PERIPHERAL);
        let anchors: Vec<usize> = (0..g.node_count())
            .filter(|&v| tiers[v] != Tier::PERIPHERAL || (cfg.store_tier3 && !covered(v)))
            .collect();
        entries = if anchors.len() > 64 {
            use rayon::prelude::*;
            anchors.par_iter().map(|&v| make_entry(g, v, tiers[v])).collect()
        } else {
            anchors.iter().map(|&v| make_entry(g, v, tiers[v])).collect()
        };
    }
    Ok(TieredBase {
        config: *cfg,
        tiers: tiers.iter().enumerate().map(|(i, &t)| (g.id(i).clone(), t)).collect(),
        pagerank: CentralityScores {
            kind: CentralityKind::Pagerank,
            values: g.nodes().iter().cloned().zip(pr).collect(),
        },
        betweenness: CentralityScores {
            kind: CentralityKind::Betweenness,
            values: g.nodes().iter().cloned().zip(bc).collect(),
        },
        entries,
        bypass,
        summary: summary_text(g),
        lookup: OnceLock::new(),
    })
}

/// Where a piece of retrieved context came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ContextSource {
    Entry { anchor: NodeId, tier: Tier },
    Summary,
    FullGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextItem {
    #[serde(flatten)]
    pub source: ContextSource,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedContext {
    pub entries: Vec<ContextItem>,
    /// Entry texts in order, each followed by a newline.
    pub assembled_text: String,
    pub truncated: bool,
}

/// Tasks answered from the graph-level summary record.
pub fn is_global_task(t: TaskType) -> bool {
    matches!(t, TaskType::NodeCount | TaskType::EdgeCount | TaskType::ConnectivityCheck)
}

/// Render of the whole graph used in bypass mode.
pub fn full_graph_text(g: &Graph) -> String {
    let nodes: Vec<&str> = g.nodes().iter().map(NodeId::as_str).collect();
    let edges: Vec<String> = g
        .edges()
        .map(|(u, v, w)| {
            if g.is_weighted() {
                format!("({},{}:{})", g.id(u), g.id(v), w)
            } else {
                format!("({},{})", g.id(u), g.id(v))
            }
        })
        .collect();
    format!(
        "Full graph: nodes {}; edges {}.",
        if nodes.is_empty() { "none".to_string() } else { nodes.join(", ") },
        if edges.is_empty() { "none".to_string() } else { edges.join(", ") }
    )
}

impl TieredBase {
    fn lookup(&self) -> &Lookup {
        self.lookup.get_or_init(|| {
            let mut l = Lookup::default();
            for (i, e) in self.entries.iter().enumerate() {
                l.by_anchor.insert(e.anchor.clone(), i);
                let adjacent: BTreeSet<&NodeId> = e
                    .edges
                    .iter()
                    .filter_map(|(u, v)| {
                        if *u == e.anchor {
                            Some(v)
                        } else if *v == e.anchor {
                            Some(u)
                        } else {
                            None
                        }
                    })
                    .collect();
                for n in &e.nodes {
                    let d = if *n == e.anchor {
                        0
                    } else if adjacent.contains(n) {
                        1
                    } else {
                        2
                    };
                    l.containing.entry(n.clone()).or_default().push((i, d));
                }
            }
            l
        })
    }

    pub fn node_count(&self) -> usize {
        self.tiers.len()
    }

    pub fn tier(&self, v: &NodeId) -> Option<Tier> {
        self.tiers.get(v).copied()
    }

    pub fn entry(&self, anchor: &NodeId) -> Option<&NeighborhoodEntry> {
        self.lookup().by_anchor.get(anchor).map(|&i| &self.entries[i])
    }

    /// Entries whose neighbourhood contains `v`, nearest anchor first
    /// (then more important tier, then anchor id).
    pub fn entries_containing(&self, v: &NodeId) -> Vec<(&NeighborhoodEntry, usize)> {
        let mut hits: Vec<(&NeighborhoodEntry, usize)> = self
            .lookup()
            .containing
            .get(v)
            .map(|list| list.iter().map(|&(i, d)| (&self.entries[i], d)).collect())
            .unwrap_or_default();
        hits.sort_by(|a, b| (a.1, a.0.tier, &a.0.anchor).cmp(&(b.1, b.0.tier, &b.0.anchor)));
        hits
    }

    /// Context for `task` within `budget` characters.
    pub fn retrieve(&self, task: &ParsedTask, budget: usize) -> Result<RetrievedContext, RagError> {
        self.retrieve_for(task.task_type, &task.entity_list(), budget)
    }

    pub fn retrieve_for<'a>(
        &'a self,
        task_type: TaskType,
        entities: &[NodeId],
        budget: usize,
    ) -> Result<RetrievedContext, RagError> {
        for e in entities {
            if !self.tiers.contains_key(e) {
                return Err(RagError::Graph(GraphError::UnknownNode(e.to_string())));
            }
        }
        let mut items: Vec<ContextItem> = Vec::new();
        if is_global_task(task_type) {
            items.push(ContextItem { source: ContextSource::Summary, text: self.summary.clone() });
        }
        if let Some(g) = &self.bypass {
            items.push(ContextItem { source: ContextSource::FullGraph, text: full_graph_text(g) });
        } else {
            let mut taken: BTreeSet<&NodeId> = BTreeSet::new();
            let mut push = |e: &'a NeighborhoodEntry, items: &mut Vec<ContextItem>| {
                if taken.insert(&e.anchor) {
                    items.push(ContextItem {
                        source: ContextSource::Entry { anchor: e.anchor.clone(), tier: e.tier },
                        text: e.text.clone(),
                    });
                }
            };
            // (1) own entries, then (2) covering entries
            for v in entities {
                if let Some(e) = self.entry(v) {
                    push(e, &mut items);
                }
            }
            for v in entities {
                for (e, _) in self.entries_containing(v) {
                    push(e, &mut items);
                }
            }
        }
        let mut assembled = String::new();
        let mut used = 0;
        let mut kept = Vec::with_capacity(items.len());
        let mut truncated = false;
        for item in items {
            let cost = item.text.chars().count() + 1;
            if used + cost > budget {
                truncated = true;
                break;
            }
            used += cost;
            assembled.push_str(&item.text);
            assembled.push('\n');
            kept.push(item);
        }
        Ok(RetrievedContext { entries: kept, assembled_text: assembled, truncated })
    }

    /// Every edge recoverable from the stored records.
    pub fn recoverable_edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        if let Some(g) = &self.bypass {
            return g.edge_ids().into_iter().collect();
        }
        self.entries.iter().flat_map(|e| e.edges.iter().cloned()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("base serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RagError> {
        let base: TieredBase = serde_json::from_str(text).map_err(|e| RagError::Format(e.to_string()))?;
        for e in &base.entries {
            if !base.tiers.contains_key(&e.anchor) {
                return Err(RagError::Format(format!("entry anchor {} has no tier", e.anchor)));
            }
        }
        Ok(base)
    }

    /// Coverage accounting against the source graph.
    pub fn coverage(&self, g: &Graph) -> CoverageReport {
        let mut report = CoverageReport::default();
        let total_edges = g.edge_count();
        let recovered = self.recoverable_edges().len();
        report.edge_coverage = if total_edges == 0 { 1.0 } else { recovered as f64 / total_edges as f64 };
        if self.bypass.is_some() {
            report.anchors = g.node_count();
            return report;
        }
        let lookup = self.lookup();
        for (i, v) in g.nodes().iter().enumerate() {
            if lookup.by_anchor.contains_key(v) {
                report.anchors += 1;
            } else if lookup.containing.contains_key(v) {
                report.contained += 1;
            } else if self.tiers[v] == Tier::PERIPHERAL
                && g.neighbors(i).iter().any(|&w| self.tiers[g.id(w)] != Tier::PERIPHERAL)
            {
                report.suppressed += 1;
            } else {
                report.uncovered.push(v.clone());
            }
        }
        report
    }
}

/// Per-node coverage classes; `uncovered` is empty whenever the conditional
/// tier-3 policy is on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub anchors: usize,
    pub contained: usize,
    pub suppressed: usize,
    pub uncovered: Vec<NodeId>,
    /// Fraction of graph edges recoverable from stored records.
    pub edge_coverage: f64,
}

impl CoverageReport {
    pub fn trichotomy_holds(&self) -> bool {
        self.uncovered.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        let e: Vec<(usize, usize)> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_index_edges(leaves + 1, &e).unwrap()
    }

    fn cfg(k1: f64, k2: f64) -> BaseConfig {
        BaseConfig { k1_percent: k1, k2_percent: k2, store_tier3: true, bypass_threshold: 0 }
    }

    #[test]
    fn tier_sizes_round_up() {
        assert_eq!(tier_size(10.0, 11), 2);
        assert_eq!(tier_size(10.0, 30), 3);
        assert_eq!(tier_size(100.0, 7), 7);
        assert_eq!(tier_size(0.0, 7), 0);
    }

    #[test]
    fn star_core_is_hub_and_smallest_leaf() {
        let t = assign_tiers(&star(10), &cfg(10.0, 0.0)).unwrap();
        let core: Vec<&NodeId> = t.iter().filter(|(_, &t)| t == Tier::CORE).map(|(v, _)| v).collect();
        assert_eq!(core, vec![&id("0"), &id("1")]);
    }

    #[test]
    fn barbell_bridge_lands_in_tier_two() {
        // two K5s (0-4, 6-10) joined through 5
        let mut e = Vec::new();
        for base in [0, 6] {
            for i in 0..5 {
                for j in i + 1..5 {
                    e.push((base + i, base + j));
                }
            }
        }
        e.extend([(4, 5), (5, 6)]);
        let g = Graph::from_index_edges(11, &e).unwrap();
        let t = assign_tiers(&g, &cfg(10.0, 10.0)).unwrap();
        let tier2: Vec<&NodeId> = t.iter().filter(|(_, &t)| t == Tier::BACKBONE).map(|(v, _)| v).collect();
        // core takes 4 and 6 (highest pagerank); the bridge 5 has the top remaining betweenness
        assert!(tier2.contains(&&id("5")), "{t:?}");
    }

    #[test]
    fn conditional_tier3_policy_on_p4() {
        let g = Graph::from_edges(&["a"], &[("a", "b"), ("b", "c"), ("c", "d")]).unwrap();
        let base = build_base(&g, &cfg(25.0, 0.0)).unwrap();
        // core is the smallest-id node of highest pagerank among b, c: b
        assert_eq!(base.tier(&id("b")), Some(Tier::CORE));
        assert!(base.entry(&id("a")).is_none(), "a is adjacent to core b");
        assert!(base.entry(&id("c")).is_none());
        assert!(base.entry(&id("d")).is_some(), "d has only tier-3 neighbours");
        assert!(base.coverage(&g).trichotomy_holds());
    }

    #[test]
    fn small_graphs_bypass() {
        let g = crate::graph::generate_er(12, 0.3, 1).unwrap();
        let base = build_base(&g, &BaseConfig::default()).unwrap();
        assert_eq!(base.bypass.as_ref(), Some(&g));
        assert!(base.entries.is_empty());
        assert_eq!(base.recoverable_edges().len(), g.edge_count());
    }

    #[test]
    fn full_core_is_lossless() {
        let g = crate::graph::generate_ba(60, 2, 4).unwrap();
        let base = build_base(&g, &cfg(100.0, 0.0)).unwrap();
        let want: BTreeSet<_> = g.edge_ids().into_iter().collect();
        assert_eq!(base.recoverable_edges(), want);
    }

    #[test]
    fn retrieval_priorities_and_budget() {
        let g = crate::graph::generate_ba(40, 2, 9).unwrap();
        let base = build_base(&g, &cfg(10.0, 20.0)).unwrap();
        let core = base.tiers.iter().find(|(_, &t)| t == Tier::CORE).unwrap().0.clone();
        let ctx = base.retrieve_for(TaskType::NodeDegree, std::slice::from_ref(&core), 1_000_000).unwrap();
        assert_eq!(ctx.entries[0].source, ContextSource::Entry { anchor: core.clone(), tier: Tier::CORE });
        let joined: String = ctx.entries.iter().map(|e| format!("{}\n", e.text)).collect();
        assert_eq!(joined, ctx.assembled_text);

        let suppressed = g
            .nodes()
            .iter()
            .find(|v| base.entry(v).is_none())
            .expect("some tier-3 node is covered by a neighbour");
        let ctx = base.retrieve_for(TaskType::NodeDegree, std::slice::from_ref(suppressed), 1_000_000).unwrap();
        let ContextSource::Entry { anchor, .. } = &ctx.entries[0].source else { panic!() };
        assert!(base.entry(anchor).unwrap().nodes.contains(suppressed));

        let ctx = base.retrieve_for(TaskType::NodeCount, &[], 1000).unwrap();
        assert!(ctx.assembled_text.contains("|V|=40, |E|=76"));

        for budget in [0, 10, 100, 500, 5000] {
            let ctx = base.retrieve_for(TaskType::NodeDegree, std::slice::from_ref(&core), budget).unwrap();
            assert!(ctx.assembled_text.chars().count() <= budget);
        }
        assert!(base.retrieve_for(TaskType::NodeDegree, &[core], 10).unwrap().truncated);
        assert!(base.retrieve_for(TaskType::NodeDegree, &[id("zz")], 10).is_err());
    }

    #[test]
    fn base_json_round_trip() {
        let g = crate::graph::generate_er(30, 0.1, 2).unwrap();
        let base = build_base(&g, &cfg(10.0, 20.0)).unwrap();
        let back = TieredBase::from_json(&base.to_json()).unwrap();
        assert_eq!(back, base);
        assert_eq!(back.entries_containing(&id("3")).len(), base.entries_containing(&id("3")).len());
    }
}
