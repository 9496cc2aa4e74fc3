//! Directed links between prototypes of one project.
//!
//! Edges always point forward in canonical order, so every graph is acyclic.
//! Nodes default to [`NodeClass::Internal`]; only non-default classes need to
//! be stored, and at most one node may be the final concept.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{CaptureId, ProjectId};
use crate::order::Chronology;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    #[default]
    Internal,
    /// Shown to people outside the project, e.g. for user feedback.
    ExternalTest,
    FinalConcept,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Internal => "internal",
            NodeClass::ExternalTest => "external_test",
            NodeClass::FinalConcept => "final_concept",
        }
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub from: CaptureId,
    pub to: CaptureId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("capture {0} is not a member of the project")]
    NotMember(CaptureId),
    #[error("edge must point forward in time: {from} -> {to}")]
    Chronology { from: CaptureId, to: CaptureId },
    #[error("project already has a final concept: {existing}")]
    DuplicateFinal { existing: CaptureId },
    #[error("link graph contains a cycle")]
    Cycle,
}

/// Problem found by [`LinkGraph::check`] on a stored graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphViolation {
    NonMember { capture_id: CaptureId },
    Chronology { from: CaptureId, to: CaptureId },
    MultipleFinal { final_nodes: Vec<CaptureId> },
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphViolation::NonMember { capture_id } => {
                write!(f, "graph node {capture_id} is not a project member")
            }
            GraphViolation::Chronology { from, to } => {
                write!(f, "edge {from} -> {to} does not point forward in time")
            }
            GraphViolation::MultipleFinal { final_nodes } => {
                write!(f, "{} final concept nodes", final_nodes.len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkGraph {
    pub project_id: ProjectId,
    #[serde(default)]
    pub node_classes: BTreeMap<CaptureId, NodeClass>,
    #[serde(default)]
    pub edges: BTreeSet<Link>,
}

impl LinkGraph {
    pub fn new(project_id: ProjectId) -> Self {
        Self {
            project_id,
            node_classes: BTreeMap::new(),
            edges: BTreeSet::new(),
        }
    }

    /// Add `from -> to`; both must be members and `from` must come first in
    /// canonical order. `chronology` is built from the project's members.
    pub fn add_link(
        &mut self,
        chronology: &Chronology,
        from: &CaptureId,
        to: &CaptureId,
    ) -> Result<(), GraphError> {
        let rank_from = chronology
            .rank(from)
            .ok_or_else(|| GraphError::NotMember(from.clone()))?;
        let rank_to = chronology
            .rank(to)
            .ok_or_else(|| GraphError::NotMember(to.clone()))?;
        if rank_from >= rank_to {
            return Err(GraphError::Chronology {
                from: from.clone(),
                to: to.clone(),
            });
        }
        self.edges.insert(Link {
            from: from.clone(),
            to: to.clone(),
        });
        Ok(())
    }

    pub fn remove_link(&mut self, from: &CaptureId, to: &CaptureId) -> bool {
        self.edges.remove(&Link {
            from: from.clone(),
            to: to.clone(),
        })
    }

    pub fn set_class(
        &mut self,
        chronology: &Chronology,
        id: &CaptureId,
        class: NodeClass,
    ) -> Result<(), GraphError> {
        if !chronology.contains(id) {
            return Err(GraphError::NotMember(id.clone()));
        }
        if class == NodeClass::FinalConcept {
            if let Some(existing) = self.final_concept() {
                if existing != id {
                    return Err(GraphError::DuplicateFinal {
                        existing: existing.clone(),
                    });
                }
            }
        }
        if class == NodeClass::Internal {
            self.node_classes.remove(id);
        } else {
            self.node_classes.insert(id.clone(), class);
        }
        Ok(())
    }

    pub fn class_of(&self, id: &CaptureId) -> NodeClass {
        self.node_classes.get(id).copied().unwrap_or_default()
    }

    pub fn final_concept(&self) -> Option<&CaptureId> {
        self.node_classes
            .iter()
            .find(|(_, c)| **c == NodeClass::FinalConcept)
            .map(|(id, _)| id)
    }

    /// Classified nodes plus every edge endpoint.
    pub fn nodes(&self) -> BTreeSet<&CaptureId> {
        self.node_classes
            .keys()
            .chain(self.edges.iter().flat_map(|l| [&l.from, &l.to]))
            .collect()
    }

    /// Re-validate a graph against its project's members.
    pub fn check(&self, chronology: &Chronology) -> Vec<GraphViolation> {
        let mut out = Vec::new();
        for id in self.nodes() {
            if !chronology.contains(id) {
                out.push(GraphViolation::NonMember {
                    capture_id: id.clone(),
                });
            }
        }
        for link in &self.edges {
            if let (Some(a), Some(b)) = (chronology.rank(&link.from), chronology.rank(&link.to)) {
                if a >= b {
                    out.push(GraphViolation::Chronology {
                        from: link.from.clone(),
                        to: link.to.clone(),
                    });
                }
            }
        }
        let finals: Vec<_> = self
            .node_classes
            .iter()
            .filter(|(_, c)| **c == NodeClass::FinalConcept)
            .map(|(id, _)| id.clone())
            .collect();
        if finals.len() > 1 {
            out.push(GraphViolation::MultipleFinal { final_nodes: finals });
        }
        out
    }

    /// Kahn's algorithm over [`Self::nodes`], taking the earliest ready node
    /// in canonical order at each step. Nodes missing from `chronology` sort
    /// last by id.
    pub fn topological_order(&self, chronology: &Chronology) -> Result<Vec<CaptureId>, GraphError> {
        let nodes = self.nodes();
        let key = |id: &CaptureId| (chronology.rank(id).unwrap_or(usize::MAX), id.clone());
        let mut indegree: BTreeMap<&CaptureId, usize> = nodes.iter().map(|n| (*n, 0)).collect();
        let mut succ: BTreeMap<&CaptureId, Vec<&CaptureId>> = BTreeMap::new();
        for l in &self.edges {
            *indegree.get_mut(&l.to).expect("endpoint is a node") += 1;
            succ.entry(&l.from).or_default().push(&l.to);
        }
        let mut ready: BTreeSet<(usize, CaptureId)> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| key(n))
            .collect();
        let mut out = Vec::with_capacity(nodes.len());
        while let Some(next) = ready.pop_first() {
            let id = next.1;
            if let Some(children) = succ.get(&id) {
                for c in children {
                    let d = indegree.get_mut(c).expect("endpoint is a node");
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(key(c));
                    }
                }
            }
            out.push(id);
        }
        if out.len() == nodes.len() {
            Ok(out)
        } else {
            Err(GraphError::Cycle)
        }
    }
}

/// For every node, whether a directed path leads to the final concept.
///
/// Walks edges backwards from the final node. Without a final node every
/// entry is `false`.
pub fn reachability(graph: &LinkGraph) -> BTreeMap<CaptureId, bool> {
    let mut out: BTreeMap<CaptureId, bool> =
        graph.nodes().into_iter().map(|n| (n.clone(), false)).collect();
    let Some(target) = graph.final_concept() else {
        return out;
    };
    let mut pred: BTreeMap<&CaptureId, Vec<&CaptureId>> = BTreeMap::new();
    for l in &graph.edges {
        pred.entry(&l.to).or_default().push(&l.from);
    }
    let mut queue = VecDeque::from([target]);
    out.insert(target.clone(), true);
    while let Some(n) = queue.pop_front() {
        for p in pred.get(n).into_iter().flatten() {
            let seen = out.get_mut(*p).expect("endpoint is a node");
            if !*seen {
                *seen = true;
                queue.push_back(p);
            }
        }
    }
    out
}
