use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::NetworkError;
use crate::model::{format_weight, Edge, NodeId, RadioGraph, Schedule};

/// The graph restricted to the links that transmit at some point of the
/// period, with each kept link's slot.
#[derive(Debug, Clone)]
pub struct InducedGraph<'g> {
    base: &'g RadioGraph,
    slot_of: BTreeMap<Edge, usize>,
}

pub fn induced_graph<'g>(graph: &'g RadioGraph, schedule: &Schedule) -> InducedGraph<'g> {
    let mut slot_of = BTreeMap::new();
    for (k, slot) in schedule.slots().iter().enumerate() {
        for edge in slot {
            if graph.contains_edge(edge) {
                slot_of.entry(edge.clone()).or_insert(k + 1);
            }
        }
    }
    InducedGraph { base: graph, slot_of }
}

impl<'g> InducedGraph<'g> {
    pub fn base(&self) -> &'g RadioGraph {
        self.base
    }

    pub fn kept_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.slot_of.keys()
    }

    pub fn slot_of(&self, edge: &Edge) -> Option<usize> {
        self.slot_of.get(edge).copied()
    }

    /// Kept edges leaving `node`, in lexicographic order.
    pub fn successors<'a>(&'a self, node: &'a str) -> impl Iterator<Item = (&'a Edge, usize)> + 'a {
        self.slot_of.iter().filter(move |(e, _)| e.from == node).map(|(e, &s)| (e, s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub connected: bool,
    /// Longest source-to-sink path length over kept edges.
    pub longest_path: Option<usize>,
}

/// Source-to-sink reachability over kept edges and the longest such path.
pub fn jointly_connected(ig: &InducedGraph<'_>) -> Connectivity {
    let (source, sink) = (ig.base.source(), ig.base.sink());
    let order = topological_order(ig);
    // Longest distance from each node to the sink, processed in reverse
    // topological order.
    let mut to_sink: BTreeMap<&str, usize> = BTreeMap::new();
    to_sink.insert(sink, 0);
    for &node in order.iter().rev() {
        if node == sink {
            continue;
        }
        let best = ig.successors(node).filter_map(|(e, _)| to_sink.get(e.to.as_str()).map(|d| d + 1)).max();
        if let Some(d) = best {
            to_sink.insert(node, d);
        }
    }
    let longest_path = if source == sink { None } else { to_sink.get(source).copied() };
    Connectivity { connected: longest_path.is_some(), longest_path }
}

/// Kahn order of the nodes touched by kept edges; nodes on cycles are left
/// out.
fn topological_order<'a>(ig: &'a InducedGraph<'_>) -> Vec<&'a str> {
    let mut indeg: BTreeMap<&str, usize> = BTreeMap::new();
    for e in ig.kept_edges() {
        indeg.entry(e.from.as_str()).or_default();
        *indeg.entry(e.to.as_str()).or_default() += 1;
    }
    let mut queue: VecDeque<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
    let mut order = Vec::new();
    while let Some(node) = queue.pop_front() {
        order.push(node);
        for (e, _) in ig.successors(node) {
            let d = indeg.get_mut(e.to.as_str()).expect("endpoint registered");
            *d -= 1;
            if *d == 0 {
                queue.push_back(e.to.as_str());
            }
        }
    }
    order
}

/// `δ = 1 + #{j : t(e_{j+1}) ≤ t(e_j)}`: data moves on within the same
/// period only when the next hop transmits in a strictly later slot.
pub fn path_delay(slots: &[usize]) -> usize {
    1 + slots.windows(2).filter(|w| w[1] <= w[0]).count()
}

/// A simple source-to-sink path with its slot sequence, weight product and
/// delay in periods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedPath {
    pub nodes: Vec<NodeId>,
    pub slots: Vec<usize>,
    pub weight: BigRational,
    pub delay: usize,
}

impl RoutedPath {
    /// Number of edges.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes.windows(2).map(|w| Edge::new(w[0].clone(), w[1].clone()))
    }

    pub fn contains_edge(&self, edge: &Edge) -> bool {
        self.nodes.windows(2).any(|w| w[0] == edge.from && w[1] == edge.to)
    }
}

impl Serialize for RoutedPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row<'a> {
            nodes: &'a [NodeId],
            slots: &'a [usize],
            weight: String,
            delay: usize,
        }
        Row { nodes: &self.nodes, slots: &self.slots, weight: format_weight(&self.weight), delay: self.delay }
            .serialize(serializer)
    }
}

pub const DEFAULT_PATH_LIMIT: usize = 1_000_000;

pub fn enumerate_paths(ig: &InducedGraph<'_>) -> Result<Vec<RoutedPath>, NetworkError> {
    enumerate_paths_with_limit(ig, DEFAULT_PATH_LIMIT)
}

/// Depth-first enumeration of every simple source-to-sink path over kept
/// edges, successors visited in lexicographic order. More than `limit` paths
/// is an error.
pub fn enumerate_paths_with_limit(ig: &InducedGraph<'_>, limit: usize) -> Result<Vec<RoutedPath>, NetworkError> {
    let (source, sink) = (ig.base.source(), ig.base.sink());
    let mut out = Vec::new();
    if source == sink {
        return Ok(out);
    }
    let mut nodes: Vec<&str> = vec![source];
    let mut on_path: BTreeSet<&str> = BTreeSet::from([source]);
    let mut slots: Vec<usize> = Vec::new();
    let mut weights: Vec<BigRational> = vec![BigRational::one()];
    // Per depth, the remaining successor edges to try.
    let mut frontier: Vec<Vec<(&Edge, usize)>> = vec![ig.successors(source).collect()];
    while let Some(choices) = frontier.last_mut() {
        if choices.is_empty() {
            frontier.pop();
            if let Some(node) = nodes.pop() {
                on_path.remove(node);
            }
            slots.pop();
            weights.pop();
            continue;
        }
        let (edge, slot) = choices.remove(0);
        let next = edge.to.as_str();
        if on_path.contains(next) {
            continue;
        }
        let w = weights.last().expect("root weight") * ig.base.weight(edge).expect("kept edge has a weight");
        if next == sink {
            if out.len() == limit {
                return Err(NetworkError::TooManyPaths { limit });
            }
            let mut path_slots = slots.clone();
            path_slots.push(slot);
            let mut path_nodes: Vec<NodeId> = nodes.iter().map(|s| s.to_string()).collect();
            path_nodes.push(next.to_string());
            let delay = path_delay(&path_slots);
            out.push(RoutedPath { nodes: path_nodes, slots: path_slots, weight: w, delay });
            continue;
        }
        nodes.push(next);
        on_path.insert(next);
        slots.push(slot);
        weights.push(w);
        frontier.push(ig.successors(next).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Edge {
        s.parse().unwrap()
    }

    fn chain() -> RadioGraph {
        RadioGraph::unweighted(["v1", "v2", "v3"], [e("v1->v2"), e("v2->v3")], "v1", "v3")
    }

    #[test]
    fn delays() {
        assert_eq!(path_delay(&[1, 2]), 1);
        assert_eq!(path_delay(&[2, 1]), 2);
        assert_eq!(path_delay(&[1, 1, 1]), 3);
        assert_eq!(path_delay(&[1, 2, 1]), 2);
        assert_eq!(path_delay(&[3]), 1);
    }

    #[test]
    fn chain_in_order() {
        let g = chain();
        let s = Schedule::new(vec![vec![e("v1->v2")], vec![e("v2->v3")]], 0.01);
        let ig = induced_graph(&g, &s);
        assert_eq!(ig.slot_of(&e("v1->v2")), Some(1));
        assert_eq!(ig.slot_of(&e("v2->v3")), Some(2));
        assert_eq!(jointly_connected(&ig), Connectivity { connected: true, longest_path: Some(2) });
        let paths = enumerate_paths(&ig).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, ["v1", "v2", "v3"]);
        assert_eq!(paths[0].weight, BigRational::one());
        assert_eq!(paths[0].delay, 1);
    }

    #[test]
    fn empty_schedule_keeps_nothing() {
        let g = chain();
        let s = Schedule::new(vec![vec![], vec![]], 0.01);
        let ig = induced_graph(&g, &s);
        assert_eq!(ig.kept_edges().count(), 0);
        assert_eq!(jointly_connected(&ig), Connectivity { connected: false, longest_path: None });
        assert!(enumerate_paths(&ig).unwrap().is_empty());
    }

    #[test]
    fn path_cap_is_enforced() {
        // Two parallel two-hop routes.
        let g = RadioGraph::unweighted(["s", "a", "b", "t"], [e("s->a"), e("s->b"), e("a->t"), e("b->t")], "s", "t");
        let s = Schedule::new(vec![g.edges().cloned().collect()], 0.01);
        let ig = induced_graph(&g, &s);
        assert_eq!(enumerate_paths_with_limit(&ig, 2).unwrap().len(), 2);
        assert_eq!(enumerate_paths_with_limit(&ig, 1), Err(NetworkError::TooManyPaths { limit: 1 }));
    }

    #[test]
    fn longest_path_ignores_dead_ends() {
        let g = RadioGraph::unweighted(
            ["s", "a", "b", "c", "t"],
            [e("s->a"), e("a->b"), e("b->c"), e("s->t"), e("a->t")],
            "s",
            "t",
        );
        let s = Schedule::new(vec![g.edges().cloned().collect()], 0.01);
        let c = jointly_connected(&induced_graph(&g, &s));
        assert_eq!(c.longest_path, Some(2));
    }
}
