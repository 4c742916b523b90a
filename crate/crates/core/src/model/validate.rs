use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{format_weight, is_positive, Edge, FaultSet, Mcn, NodeId, RadioGraph, Schedule, Side};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum ValidationIssue {
    Cycle { side: Side, nodes: Vec<NodeId> },
    NonPositiveWeight { side: Side, edge: Edge, weight: String },
    DuplicateScheduling { side: Side, edge: Edge },
    UnknownNode { side: Side, node: NodeId },
    UnknownEdge { side: Side, edge: Edge },
    SourceIsSink { side: Side },
    EmptyPeriod { side: Side },
    PeriodMismatch { actuation: usize, sensing: usize },
    SlotDurationMismatch { actuation: f64, sensing: f64 },
    NonPositiveSlotDuration { side: Side, value: f64 },
    UnknownFaultEdge { fault: String, edge: Edge },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue::*;
        match self {
            Cycle { side, nodes } => {
                write!(f, "{side} graph has a cycle through {}", nodes.join(" -> "))
            }
            NonPositiveWeight { side, edge, weight } => {
                write!(f, "{side} edge {edge} has non-positive weight {weight}")
            }
            DuplicateScheduling { side, edge } => {
                write!(f, "{side} edge {edge} is scheduled more than once per period")
            }
            UnknownNode { side, node } => {
                write!(f, "{side} graph references unknown node `{node}`")
            }
            UnknownEdge { side, edge } => write!(f, "{side} schedule references edge {edge} absent from the graph"),
            SourceIsSink { side } => write!(f, "{side} graph has the same node as source and sink"),
            EmptyPeriod { side } => write!(f, "{side} schedule has no slots"),
            PeriodMismatch { actuation, sensing } => {
                write!(f, "schedule periods differ: actuation {actuation}, sensing {sensing}")
            }
            SlotDurationMismatch { actuation, sensing } => {
                write!(f, "slot durations differ: actuation {actuation}, sensing {sensing}")
            }
            NonPositiveSlotDuration { side, value } => {
                write!(f, "{side} slot duration {value} is not positive")
            }
            UnknownFaultEdge { fault, edge } => {
                write!(f, "fault {fault} lists edge {edge} absent from both graphs")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("valid");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

pub fn validate(mcn: &Mcn) -> ValidationReport {
    let mut issues = Vec::new();
    for side in [Side::Actuation, Side::Sensing] {
        check_graph(side, mcn.graph(side), &mut issues);
        check_schedule(side, mcn.graph(side), mcn.schedule(side), &mut issues);
    }
    let (pa, ps) = (mcn.ctrl_schedule.period(), mcn.obs_schedule.period());
    if pa != ps {
        issues.push(ValidationIssue::PeriodMismatch { actuation: pa, sensing: ps });
    }
    let (da, ds) = (mcn.ctrl_schedule.slot_duration(), mcn.obs_schedule.slot_duration());
    if da != ds {
        issues.push(ValidationIssue::SlotDurationMismatch { actuation: da, sensing: ds });
    }
    ValidationReport { issues }
}

/// Fault configurations may only name links of one of the two graphs.
pub fn validate_faults(mcn: &Mcn, faults: &FaultSet) -> ValidationReport {
    let mut issues = Vec::new();
    for config in faults {
        for edge in config.edges() {
            if !mcn.ctrl_graph.contains_edge(edge) && !mcn.obs_graph.contains_edge(edge) {
                issues.push(ValidationIssue::UnknownFaultEdge { fault: config.label().into(), edge: edge.clone() });
            }
        }
    }
    ValidationReport { issues }
}

fn check_graph(side: Side, graph: &RadioGraph, issues: &mut Vec<ValidationIssue>) {
    let mut unknown = BTreeSet::new();
    for node in [graph.source(), graph.sink()] {
        if !graph.nodes().contains(node) {
            unknown.insert(node.to_string());
        }
    }
    for (edge, weight) in graph.weights() {
        for node in [&edge.from, &edge.to] {
            if !graph.nodes().contains(node) {
                unknown.insert(node.clone());
            }
        }
        if !is_positive(weight) {
            issues.push(ValidationIssue::NonPositiveWeight { side, edge: edge.clone(), weight: format_weight(weight) });
        }
    }
    issues.extend(unknown.into_iter().map(|node| ValidationIssue::UnknownNode { side, node }));
    if graph.source() == graph.sink() {
        issues.push(ValidationIssue::SourceIsSink { side });
    }
    if let Some(nodes) = find_cycle(graph) {
        issues.push(ValidationIssue::Cycle { side, nodes });
    }
}

fn check_schedule(side: Side, graph: &RadioGraph, schedule: &Schedule, issues: &mut Vec<ValidationIssue>) {
    if schedule.period() == 0 {
        issues.push(ValidationIssue::EmptyPeriod { side });
    }
    let delta = schedule.slot_duration();
    if !(delta > 0.0 && delta.is_finite()) {
        issues.push(ValidationIssue::NonPositiveSlotDuration { side, value: delta });
    }
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for edge in schedule.scheduled_edges() {
        if !graph.contains_edge(edge) {
            if reported.insert(edge) {
                issues.push(ValidationIssue::UnknownEdge { side, edge: edge.clone() });
            }
        } else if !seen.insert(edge) && reported.insert(edge) {
            issues.push(ValidationIssue::DuplicateScheduling { side, edge: edge.clone() });
        }
    }
}

/// Returns the nodes of one directed cycle (first node repeated at the end),
/// searching from nodes in lexicographic order.
fn find_cycle(graph: &RadioGraph) -> Option<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in graph.edges() {
        succ.entry(e.from.as_str()).or_default().push(e.to.as_str());
    }
    let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
    let starts: BTreeSet<&str> = graph.edges().map(|e| e.from.as_str()).collect();
    for start in starts {
        if marks.contains_key(start) {
            continue;
        }
        // Iterative DFS: (node, next child index).
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some((node, child)) = stack.pop() {
            let children = succ.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if child < children.len() {
                stack.push((node, child + 1));
                let next = children[child];
                match marks.get(next) {
                    Some(Mark::Open) => {
                        let pos = stack.iter().position(|(n, _)| *n == next).unwrap_or(0);
                        let mut cycle: Vec<NodeId> = stack[pos..].iter().map(|(n, _)| n.to_string()).collect();
                        cycle.push(next.to_string());
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(next, Mark::Open);
                        stack.push((next, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
    }
    None
}
