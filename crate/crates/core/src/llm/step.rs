use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::graph::NodeId;
use crate::render::{ColorTag, HighlightAction};

/// Observation text plus the optional visual action of one reasoning step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedStep {
    pub observation: String,
    pub action: Option<HighlightAction>,
}

static ACTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*ACTION:\s*(\w+)\s*(.*?)\s*$").unwrap());
static FENCE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*```\w*\s*$").unwrap());

fn parse_action(kind: &str, rest: &str) -> Option<Option<HighlightAction>> {
    let mut color = None;
    let mut elems = Vec::new();
    for tok in rest.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
        if let Some(c) = tok.strip_prefix("color=") {
            color = Some(ColorTag::parse(c)?);
        } else {
            elems.push(tok);
        }
    }
    let color = color.unwrap_or(HighlightAction::default_color(kind));
    let ids = |xs: &[&str]| xs.iter().map(|s| NodeId::new(s).ok()).collect::<Option<Vec<_>>>();
    let action = match kind {
        "none" if elems.is_empty() => return Some(None),
        "clear" if elems.is_empty() => HighlightAction::Clear,
        "highlight_nodes" => HighlightAction::HighlightNodes { nodes: ids(&elems)?, color },
        "highlight_path" => HighlightAction::HighlightPath { path: ids(&elems)?, color },
        "highlight_edges" => {
            let edges = elems
                .iter()
                .map(|e| {
                    let (a, b) = e.split_once('-')?;
                    Some((NodeId::new(a).ok()?, NodeId::new(b).ok()?))
                })
                .collect::<Option<Vec<_>>>()?;
            HighlightAction::HighlightEdges { edges, color }
        }
        _ => return None,
    };
    if action.is_empty() {
        return None;
    }
    Some(Some(action))
}

/// Splits a reply into its observation and action; `None` when the reply has
/// no well-formed action line.
pub(crate) fn parse_structured(text: &str) -> Option<ParsedStep> {
    let lines: Vec<&str> = text.lines().collect();
    let (pos, caps) = lines.iter().enumerate().find_map(|(i, l)| ACTION_RE.captures(l).map(|c| (i, c)))?;
    let action = parse_action(&caps[1], &caps[2])?;
    let observation = lines
        .iter()
        .enumerate()
        .filter(|&(i, l)| i != pos && !FENCE_RE.is_match(l))
        .map(|(_, l)| *l)
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string();
    Some(ParsedStep { observation, action })
}

/// Total parse: malformed or missing action lines yield no action and keep
/// the whole reply as the observation.
pub fn parse_step_reply(text: &str) -> ParsedStep {
    parse_structured(text).unwrap_or_else(|| ParsedStep { observation: text.trim().to_string(), action: None })
}

/// Action line understood by [`parse_step_reply`].
pub fn render_action(a: Option<&HighlightAction>) -> String {
    let Some(a) = a else { return "ACTION: none".into() };
    let join = |xs: &[NodeId]| xs.iter().map(NodeId::as_str).collect::<Vec<_>>().join(",");
    let (body, color) = match a {
        HighlightAction::HighlightNodes { nodes, color } => (join(nodes), *color),
        HighlightAction::HighlightPath { path, color } => (join(path), *color),
        HighlightAction::HighlightEdges { edges, color } => {
            (edges.iter().map(|(u, v)| format!("{u}-{v}")).collect::<Vec<_>>().join(","), *color)
        }
        HighlightAction::Clear => return "ACTION: clear".into(),
    };
    let mut line = format!("ACTION: {} {body}", a.kind_name());
    if color != HighlightAction::default_color(a.kind_name()) {
        line.push_str(&format!(" color={}", color.name()));
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    #[test]
    fn node_action_with_observation() {
        let p = parse_step_reply("Neighbors of A are B, C, D.\nACTION: highlight_nodes B,C,D");
        assert_eq!(p.observation, "Neighbors of A are B, C, D.");
        assert_eq!(p.action, Some(HighlightAction::nodes(vec![id("B"), id("C"), id("D")])));
    }

    #[test]
    fn fenced_block() {
        let p = parse_step_reply("Path so far.\n```\nACTION: highlight_path B,D,E,F\n```");
        assert_eq!(p.observation, "Path so far.");
        let Some(HighlightAction::HighlightPath { path, .. }) = p.action else { panic!() };
        assert_eq!(path.len(), 4);
    }

    #[test]
    fn missing_or_malformed_actions() {
        for text in ["Just thinking.", "ACTION: highlight_nodes", "ACTION: explode A", "ACTION: highlight_edges A+B", "ACTION: highlight_nodes A color=pink"] {
            let p = parse_step_reply(text);
            assert_eq!(p.action, None, "{text}");
            assert_eq!(p.observation, text);
        }
    }

    #[test]
    fn render_round_trip() {
        let actions = [
            HighlightAction::nodes(vec![id("1"), id("x")]),
            HighlightAction::HighlightNodes { nodes: vec![id("q")], color: ColorTag::Frontier },
            HighlightAction::edges(vec![(id("a"), id("b")), (id("c"), id("d"))]),
            HighlightAction::path(vec![id("B"), id("D")]),
            HighlightAction::Clear,
        ];
        for a in actions {
            let line = render_action(Some(&a));
            let p = parse_step_reply(&line);
            assert_eq!(p.action.as_ref(), Some(&a));
            assert_eq!(render_action(p.action.as_ref()), line);
        }
        assert_eq!(parse_structured("ok\nACTION: none").unwrap().action, None);
    }
}
