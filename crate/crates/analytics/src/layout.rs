//! Chronological layout of a project's link graph.

use std::collections::BTreeMap;

use protobooth_core::{CaptureId, CaptureRecord, Chronology, Link, LinkGraph, NodeClass};
use serde::{Deserialize, Serialize};

use crate::error::AnalyticsError;
use crate::jitter::jitter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionedNode {
    pub capture_id: CaptureId,
    /// Chronological rank, starting at 1.
    pub x: usize,
    pub y: f64,
    pub class: NodeClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphLayout {
    pub nodes: Vec<PositionedNode>,
    pub edges: Vec<Link>,
}

impl GraphLayout {
    pub fn position(&self, id: &CaptureId) -> Option<&PositionedNode> {
        self.nodes.iter().find(|n| n.capture_id == *id)
    }
}

/// Every capture becomes a node at its rank; edges keep their graph order.
pub fn layout_graph(
    graph: &LinkGraph,
    captures: &[CaptureRecord],
    seed: u64,
) -> Result<GraphLayout, AnalyticsError> {
    let chronology = Chronology::from_captures(captures);
    if let Some(unknown) = graph.nodes().into_iter().find(|n| !chronology.contains(n)) {
        return Err(AnalyticsError::UnknownCapture(unknown.clone()));
    }
    let rank: BTreeMap<&CaptureId, usize> = chronology
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id, i + 1))
        .collect();
    for e in &graph.edges {
        if rank[&e.from] >= rank[&e.to] {
            return Err(AnalyticsError::BackwardEdge {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        }
    }
    let nodes = chronology
        .ids()
        .iter()
        .map(|id| PositionedNode {
            capture_id: id.clone(),
            x: rank[id],
            y: jitter(seed, id),
            class: graph.class_of(id),
        })
        .collect();
    Ok(GraphLayout {
        nodes,
        edges: graph.edges.iter().cloned().collect(),
    })
}
