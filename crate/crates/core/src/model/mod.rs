//! The network-closed control loop: plant, the two scheduled radio graphs and
//! the fault configurations considered against them.

mod description;
mod validate;
mod weight;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use description::{DescriptionError, McnDescription};
pub use validate::{validate, validate_faults, ValidationIssue, ValidationReport};
pub use weight::{format_weight, parse_weight, weight_from_f64, weight_to_f64, WeightParseError};

pub type NodeId = String;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("edge reference `{0}` is not of the form `from->to`")]
    BadEdgeRef(String),
    #[error("plant has dimension 0")]
    EmptyPlant,
    #[error("plant dimension mismatch: {0}")]
    PlantShape(String),
    #[error("plant contains a non-finite entry")]
    NonFinitePlant,
}

/// A directed link `from -> to`. Ordering is lexicographic on `(from, to)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
}

impl Edge {
    pub fn new(from: impl Into<NodeId>, to: impl Into<NodeId>) -> Self {
        Self { from: from.into(), to: to.into() }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for Edge {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (from, to) = s.split_once("->").ok_or_else(|| ModelError::BadEdgeRef(s.into()))?;
        let (from, to) = (from.trim(), to.trim());
        if from.is_empty() || to.is_empty() || to.contains("->") {
            return Err(ModelError::BadEdgeRef(s.into()));
        }
        Ok(Edge::new(from, to))
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Continuous-time SISO plant `dx/dt = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPlant {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
}

impl ContinuousPlant {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>) -> Result<Self, ModelError> {
        let n = a.nrows();
        if n == 0 {
            return Err(ModelError::EmptyPlant);
        }
        if a.ncols() != n {
            return Err(ModelError::PlantShape(format!("A is {}x{}", n, a.ncols())));
        }
        if b.len() != n {
            return Err(ModelError::PlantShape(format!("B has {} entries, expected {n}", b.len())));
        }
        if c.len() != n {
            return Err(ModelError::PlantShape(format!("C has {} entries, expected {n}", c.len())));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinitePlant);
        }
        Ok(Self { a, b, c })
    }

    pub fn from_rows(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Self, ModelError> {
        let n = a.len();
        if let Some(row) = a.iter().position(|r| r.len() != n) {
            return Err(ModelError::PlantShape(format!("row {row} of A has {} entries, expected {n}", a[row].len())));
        }
        let a = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        Self::new(a, DVector::from_column_slice(b), RowDVector::from_row_slice(c))
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }
}

/// Weighted radio connectivity graph with a designated source and sink.
///
/// Construction is permissive; structural constraints (acyclicity, positive
/// weights, known endpoints) are reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadioGraph {
    nodes: BTreeSet<NodeId>,
    weights: BTreeMap<Edge, BigRational>,
    source: NodeId,
    sink: NodeId,
}

impl RadioGraph {
    pub fn new<N, E>(nodes: N, edges: E, source: impl Into<NodeId>, sink: impl Into<NodeId>) -> Self
    where
        N: IntoIterator,
        N::Item: Into<NodeId>,
        E: IntoIterator<Item = (Edge, BigRational)>,
    {
        Self {
            nodes: nodes.into_iter().map(Into::into).collect(),
            weights: edges.into_iter().collect(),
            source: source.into(),
            sink: sink.into(),
        }
    }

    /// All listed edges with unit weight.
    pub fn unweighted<N, E>(nodes: N, edges: E, source: impl Into<NodeId>, sink: impl Into<NodeId>) -> Self
    where
        N: IntoIterator,
        N::Item: Into<NodeId>,
        E: IntoIterator<Item = Edge>,
    {
        Self::new(nodes, edges.into_iter().map(|e| (e, BigRational::one())), source, sink)
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.weights.keys()
    }

    pub fn weights(&self) -> &BTreeMap<Edge, BigRational> {
        &self.weights
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn contains_edge(&self, edge: &Edge) -> bool {
        self.weights.contains_key(edge)
    }

    pub fn weight(&self, edge: &Edge) -> Option<&BigRational> {
        self.weights.get(edge)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn sink(&self) -> &str {
        &self.sink
    }

    pub fn incoming<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.weights.keys().filter(move |e| e.to == node)
    }

    pub fn outgoing<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.weights.keys().filter(move |e| e.from == node)
    }

    /// Replaces the weight of an existing edge. Returns the previous weight,
    /// or `None` (and changes nothing) when the edge is absent.
    pub fn set_weight(&mut self, edge: &Edge, weight: BigRational) -> Option<BigRational> {
        self.weights.get_mut(edge).map(|w| std::mem::replace(w, weight))
    }

    pub fn with_weight(&self, edge: &Edge, weight: BigRational) -> Self {
        let mut out = self.clone();
        out.set_weight(edge, weight);
        out
    }
}

/// Every edge into `v` gets weight `1/|inc(v)|`.
pub fn equal_incoming_weights(graph: &RadioGraph) -> RadioGraph {
    let mut in_degree: BTreeMap<&str, usize> = BTreeMap::new();
    for e in graph.edges() {
        *in_degree.entry(e.to.as_str()).or_default() += 1;
    }
    let weights = graph
        .edges()
        .map(|e| {
            let k = in_degree[e.to.as_str()];
            (e.clone(), BigRational::new(1.into(), k.into()))
        })
        .collect::<Vec<_>>();
    RadioGraph::new(graph.nodes.iter().cloned(), weights, graph.source.clone(), graph.sink.clone())
}

/// Period-`Π` slot assignment. Slot indices are 1-based in the public API.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    slots: Vec<Vec<Edge>>,
    slot_duration: f64,
}

impl Schedule {
    pub fn new(slots: Vec<Vec<Edge>>, slot_duration: f64) -> Self {
        Self { slots, slot_duration }
    }

    pub fn period(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    /// `T = Π·Δ`.
    pub fn sampling_period(&self) -> f64 {
        self.slots.len() as f64 * self.slot_duration
    }

    pub fn slots(&self) -> &[Vec<Edge>] {
        &self.slots
    }

    /// Edges transmitting in slot `k` (1-based).
    pub fn slot(&self, k: usize) -> &[Edge] {
        &self.slots[k - 1]
    }

    /// First slot (1-based) in which `edge` is scheduled.
    pub fn slot_of(&self, edge: &Edge) -> Option<usize> {
        self.slots.iter().position(|s| s.contains(edge)).map(|i| i + 1)
    }

    pub fn scheduled_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.slots.iter().flatten()
    }

    /// Same period with the given edges removed from every slot.
    pub fn without<'a>(&self, removed: impl IntoIterator<Item = &'a Edge>) -> Schedule {
        let removed: BTreeSet<&Edge> = removed.into_iter().collect();
        let slots = self.slots.iter().map(|s| s.iter().filter(|e| !removed.contains(e)).cloned().collect()).collect();
        Schedule::new(slots, self.slot_duration)
    }
}

/// Which half of the loop a graph/schedule pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Controller node to actuator.
    Actuation,
    /// Sensor to controller node.
    Sensing,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Actuation => "actuation",
            Side::Sensing => "sensing",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mcn {
    pub plant: ContinuousPlant,
    pub ctrl_graph: RadioGraph,
    pub ctrl_schedule: Schedule,
    pub obs_graph: RadioGraph,
    pub obs_schedule: Schedule,
}

impl Mcn {
    pub fn slot_duration(&self) -> f64 {
        self.ctrl_schedule.slot_duration()
    }

    pub fn sampling_period(&self) -> f64 {
        self.ctrl_schedule.sampling_period()
    }

    pub fn graph(&self, side: Side) -> &RadioGraph {
        match side {
            Side::Actuation => &self.ctrl_graph,
            Side::Sensing => &self.obs_graph,
        }
    }

    pub fn schedule(&self, side: Side) -> &Schedule {
        match side {
            Side::Actuation => &self.ctrl_schedule,
            Side::Sensing => &self.obs_schedule,
        }
    }

    pub fn graph_mut(&mut self, side: Side) -> &mut RadioGraph {
        match side {
            Side::Actuation => &mut self.ctrl_graph,
            Side::Sensing => &mut self.obs_graph,
        }
    }

    /// Copy with both schedules stripped of the faulty links. Graphs and
    /// weights are kept.
    pub fn faulty(&self, fault: &FaultConfiguration) -> Mcn {
        Mcn {
            plant: self.plant.clone(),
            ctrl_graph: self.ctrl_graph.clone(),
            ctrl_schedule: self.ctrl_schedule.without(fault.edges()),
            obs_graph: self.obs_graph.clone(),
            obs_schedule: self.obs_schedule.without(fault.edges()),
        }
    }

    pub fn with_equal_weights(&self) -> Mcn {
        Mcn {
            ctrl_graph: equal_incoming_weights(&self.ctrl_graph),
            obs_graph: equal_incoming_weights(&self.obs_graph),
            ..self.clone()
        }
    }
}

/// A set of failed links, labelled for reports.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaultConfiguration {
    label: String,
    edges: BTreeSet<Edge>,
}

pub const NOMINAL_LABEL: &str = "nominal";

impl FaultConfiguration {
    pub fn nominal() -> Self {
        Self { label: NOMINAL_LABEL.into(), edges: BTreeSet::new() }
    }

    pub fn new(label: impl Into<String>, edges: impl IntoIterator<Item = Edge>) -> Self {
        Self { label: label.into(), edges: edges.into_iter().collect() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, edge: &Edge) -> bool {
        self.edges.contains(edge)
    }
}

impl fmt::Display for FaultConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges.iter().map(Edge::to_string).collect();
        write!(f, "{} {{{}}}", self.label, edges.join(", "))
    }
}

/// Ordered fault configurations; the empty configuration is always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSet {
    configurations: Vec<FaultConfiguration>,
}

impl FaultSet {
    /// Keeps the given order, dropping configurations whose edge set repeats
    /// an earlier one, and prepends the empty configuration if missing.
    pub fn new(configurations: impl IntoIterator<Item = FaultConfiguration>) -> Self {
        let mut seen = BTreeSet::new();
        let mut out: Vec<FaultConfiguration> = Vec::new();
        for c in configurations {
            if seen.insert(c.edges.clone()) {
                out.push(c);
            }
        }
        if !out.iter().any(FaultConfiguration::is_empty) {
            out.insert(0, FaultConfiguration::nominal());
        }
        Self { configurations: out }
    }

    /// Labels empty sets `nominal` and the others `f1, f2, ...` in order.
    pub fn from_edge_sets(sets: impl IntoIterator<Item = Vec<Edge>>) -> Self {
        let mut index = 0;
        Self::new(sets.into_iter().map(|edges| {
            if edges.is_empty() {
                FaultConfiguration::nominal()
            } else {
                index += 1;
                FaultConfiguration::new(format!("f{index}"), edges)
            }
        }))
    }

    pub fn nominal_only() -> Self {
        Self::new([])
    }

    pub fn configurations(&self) -> &[FaultConfiguration] {
        &self.configurations
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FaultConfiguration> {
        self.configurations.iter()
    }

    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&FaultConfiguration> {
        self.configurations.iter().find(|c| c.label == label)
    }

    /// Subset by position, always keeping the empty configuration.
    pub fn select(&self, indices: &[usize]) -> Option<FaultSet> {
        let picked: Option<Vec<_>> = indices.iter().map(|&i| self.configurations.get(i).cloned()).collect();
        picked.map(FaultSet::new)
    }
}

impl<'a> IntoIterator for &'a FaultSet {
    type Item = &'a FaultConfiguration;
    type IntoIter = std::slice::Iter<'a, FaultConfiguration>;

    fn into_iter(self) -> Self::IntoIter {
        self.configurations.iter()
    }
}

pub(crate) fn is_positive(w: &BigRational) -> bool {
    w > &BigRational::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn e(s: &str) -> Edge {
        s.parse().unwrap()
    }

    #[test]
    fn edge_refs_parse_and_print() {
        let edge = e("v1->v2");
        assert_eq!(edge, Edge::new("v1", "v2"));
        assert_eq!(edge.to_string(), "v1->v2");
        assert_eq!(e(" a -> b "), Edge::new("a", "b"));
        for bad in ["v1", "->v2", "v1->", "a->b->c"] {
            assert!(bad.parse::<Edge>().is_err(), "{bad}");
        }
    }

    #[test]
    fn equal_weights_on_diamond() {
        let edges = ["v1->v2", "v1->v3", "v2->v4", "v3->v4"].map(e);
        let g = RadioGraph::new(["v1", "v2", "v3", "v4"], edges.iter().map(|x| (x.clone(), r(7, 1))), "v1", "v4");
        let eq = equal_incoming_weights(&g);
        assert_eq!(eq.weight(&e("v1->v2")), Some(&r(1, 1)));
        assert_eq!(eq.weight(&e("v2->v4")), Some(&r(1, 2)));
        assert_eq!(eq.weight(&e("v3->v4")), Some(&r(1, 2)));
        assert_eq!(eq.edge_count(), 4);
    }

    #[test]
    fn schedule_without_removes_everywhere() {
        let s = Schedule::new(vec![vec![e("a->b"), e("b->c")], vec![e("c->d")]], 0.01);
        let f = FaultConfiguration::new("f", [e("b->c"), e("c->d")]);
        let t = s.without(f.edges());
        assert_eq!(t.slots(), &[vec![e("a->b")], vec![]]);
        assert_eq!(t.period(), 2);
        assert!((s.sampling_period() - 0.02).abs() < 1e-15);
        assert_eq!(s.slot_of(&e("c->d")), Some(2));
        assert_eq!(t.slot_of(&e("c->d")), None);
    }

    #[test]
    fn fault_set_always_has_nominal() {
        let fs = FaultSet::from_edge_sets([vec![e("a->b")], vec![e("a->b")], vec![e("b->c")]]);
        let labels: Vec<&str> = fs.iter().map(|c| c.label()).collect();
        assert_eq!(labels, ["nominal", "f1", "f3"]);
        let fs = FaultSet::from_edge_sets([vec![], vec![e("a->b")]]);
        assert_eq!(fs.len(), 2);
        assert_eq!(fs.get("f1").unwrap().edges().len(), 1);
        assert_eq!(fs.select(&[1]).unwrap().len(), 2);
        assert!(fs.select(&[5]).is_none());
    }

    #[test]
    fn plant_shape_checks() {
        assert!(ContinuousPlant::from_rows(&[vec![0.0]], &[1.0], &[1.0]).is_ok());
        assert_eq!(ContinuousPlant::from_rows(&[], &[], &[]), Err(ModelError::EmptyPlant));
        assert!(matches!(
            ContinuousPlant::from_rows(&[vec![0.0, 1.0], vec![0.0]], &[1.0, 0.0], &[1.0, 0.0]),
            Err(ModelError::PlantShape(_))
        ));
        assert!(matches!(
            ContinuousPlant::from_rows(&[vec![0.0]], &[1.0, 2.0], &[1.0]),
            Err(ModelError::PlantShape(_))
        ));
        assert_eq!(ContinuousPlant::from_rows(&[vec![f64::NAN]], &[1.0], &[1.0]), Err(ModelError::NonFinitePlant));
    }
}
