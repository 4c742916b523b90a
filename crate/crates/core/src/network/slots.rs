//! Slot-by-slot execution of one side of the network.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::NetScalar;
use crate::model::{Edge, NodeId, RadioGraph, Schedule};

/// Register state of one network side. Each edge `(i, j)` holds the last
/// value it delivered; a node's value is the sum of its incoming registers,
/// plus the loaded input for the source.
#[derive(Debug, Clone)]
pub struct SlotSimulator<'g, T> {
    graph: &'g RadioGraph,
    weights: BTreeMap<Edge, T>,
    incoming: BTreeMap<NodeId, Vec<Edge>>,
    registers: BTreeMap<Edge, T>,
    source_value: T,
}

impl<'g, T: NetScalar> SlotSimulator<'g, T> {
    /// All registers start at zero.
    pub fn new(graph: &'g RadioGraph) -> Self {
        let weights = graph.weights().iter().map(|(e, w)| (e.clone(), T::from_weight(w))).collect();
        let mut incoming: BTreeMap<NodeId, Vec<Edge>> = BTreeMap::new();
        for e in graph.edges() {
            incoming.entry(e.to.clone()).or_default().push(e.clone());
        }
        let registers = graph.edges().map(|e| (e.clone(), T::zero())).collect();
        Self { graph, weights, incoming, registers, source_value: T::zero() }
    }

    pub fn graph(&self) -> &'g RadioGraph {
        self.graph
    }

    pub fn node_value(&self, node: &str) -> T {
        let mut v = if node == self.graph.source() { self.source_value.clone() } else { T::zero() };
        if let Some(edges) = self.incoming.get(node) {
            for e in edges {
                v = v + self.registers[e].clone();
            }
        }
        v
    }

    pub fn register(&self, edge: &Edge) -> Option<&T> {
        self.registers.get(edge)
    }

    /// Runs one period: the source loads `input`, the sink value is sampled
    /// as this period's output, then the `Π` slots execute. Within a slot all
    /// scheduled edges latch `W·μ_from` from pre-slot values. Edges not
    /// scheduled hold their registers.
    pub fn step(&mut self, input: T, schedule: &Schedule) -> T {
        self.step_observed(input, schedule, |_, _| {})
    }

    /// As [`step`](Self::step), calling `observe(slot, self)` before each
    /// slot executes.
    pub fn step_observed(&mut self, input: T, schedule: &Schedule, mut observe: impl FnMut(usize, &Self)) -> T {
        self.source_value = input;
        let output = self.node_value(self.graph.sink());
        for (h, slot) in schedule.slots().iter().enumerate() {
            observe(h + 1, self);
            let latched: Vec<(&Edge, T)> = slot
                .iter()
                .filter_map(|e| {
                    let w = self.weights.get(e)?;
                    Some((e, w.clone() * self.node_value(&e.from)))
                })
                .collect();
            for (e, v) in latched {
                if let Some(r) = self.registers.get_mut(e) {
                    *r = v;
                }
            }
        }
        output
    }

    /// Zeroes the registers of the given edges.
    pub fn clear_edges<'a>(&mut self, edges: impl IntoIterator<Item = &'a Edge>) {
        for e in edges {
            if let Some(r) = self.registers.get_mut(e) {
                *r = T::zero();
            }
        }
    }

    pub fn reset(&mut self) {
        for r in self.registers.values_mut() {
            *r = T::zero();
        }
        self.source_value = T::zero();
    }
}

/// Feeds `inputs` one per period from zero registers; returns the outputs.
pub fn slot_simulate<T: NetScalar>(graph: &RadioGraph, schedule: &Schedule, inputs: &[T]) -> Vec<T> {
    let mut sim = SlotSimulator::new(graph);
    inputs.iter().map(|u| sim.step(u.clone(), schedule)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSample {
    pub period: usize,
    pub slot: usize,
    pub node: NodeId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySample {
    pub period: usize,
    pub input: f64,
    pub output: f64,
}

/// Node values before every slot, and the input/output at every period
/// boundary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotTrace {
    pub nodes: Vec<NodeSample>,
    pub boundaries: Vec<BoundarySample>,
}

impl SlotTrace {
    /// Columns `period,slot,node,value`.
    pub fn write_nodes_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        write_rows(writer, &self.nodes)
    }

    /// Columns `period,input,output`.
    pub fn write_boundaries_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        write_rows(writer, &self.boundaries)
    }
}

fn write_rows<W: Write, R: Serialize>(writer: W, rows: &[R]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn slot_simulate_traced(graph: &RadioGraph, schedule: &Schedule, inputs: &[f64]) -> (Vec<f64>, SlotTrace) {
    let mut sim = SlotSimulator::<f64>::new(graph);
    let mut trace = SlotTrace::default();
    let mut outputs = Vec::with_capacity(inputs.len());
    for (k, &u) in inputs.iter().enumerate() {
        let nodes = &mut trace.nodes;
        let y = sim.step_observed(u, schedule, |slot, s| {
            for node in s.graph().nodes() {
                nodes.push(NodeSample { period: k, slot, node: node.clone(), value: s.node_value(node) });
            }
        });
        trace.boundaries.push(BoundarySample { period: k, input: u, output: y });
        outputs.push(y);
    }
    (outputs, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn e(s: &str) -> Edge {
        s.parse().unwrap()
    }

    fn chain() -> RadioGraph {
        RadioGraph::unweighted(["v1", "v2", "v3"], [e("v1->v2"), e("v2->v3")], "v1", "v3")
    }

    fn impulse(n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n];
        u[0] = 1.0;
        u
    }

    #[test]
    fn chain_impulse_responses() {
        let g = chain();
        let fwd = Schedule::new(vec![vec![e("v1->v2")], vec![e("v2->v3")]], 0.01);
        assert_eq!(slot_simulate(&g, &fwd, &impulse(4)), [0.0, 1.0, 0.0, 0.0]);
        let bwd = Schedule::new(vec![vec![e("v2->v3")], vec![e("v1->v2")]], 0.01);
        assert_eq!(slot_simulate(&g, &bwd, &impulse(4)), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn same_slot_reads_pre_slot_values() {
        let g = chain();
        let single = Schedule::new(vec![vec![e("v1->v2"), e("v2->v3")]], 0.01);
        assert_eq!(slot_simulate(&g, &single, &impulse(4)), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn unscheduled_edges_hold() {
        let g = chain();
        let s = Schedule::new(vec![vec![e("v1->v2")], vec![e("v2->v3")]], 0.01);
        let mut sim = SlotSimulator::<f64>::new(&g);
        sim.step(2.0, &s);
        let cut = Schedule::new(vec![vec![e("v1->v2")], vec![]], 0.01);
        let outs: Vec<f64> = (0..3).map(|_| sim.step(0.0, &cut)).collect();
        assert_eq!(outs, [2.0, 2.0, 2.0]);
        sim.clear_edges([&e("v2->v3")]);
        assert_eq!(sim.step(0.0, &cut), 0.0);
    }

    #[test]
    fn exact_rational_mode() {
        let g = RadioGraph::new(["a", "b"], [(e("a->b"), BigRational::new(1.into(), 3.into()))], "a", "b");
        let s = Schedule::new(vec![vec![e("a->b")]], 0.01);
        let one = BigRational::from_integer(1.into());
        let out = slot_simulate(&g, &s, &[one.clone(), BigRational::from_integer(0.into())]);
        assert_eq!(out[1], BigRational::new(1.into(), 3.into()));
    }

    #[test]
    fn trace_csv_layout() {
        let g = chain();
        let s = Schedule::new(vec![vec![e("v1->v2")], vec![e("v2->v3")]], 0.01);
        let (out, trace) = slot_simulate_traced(&g, &s, &impulse(2));
        assert_eq!(out, [0.0, 1.0]);
        assert_eq!(trace.nodes.len(), 2 * 2 * 3);
        assert_eq!(trace.boundaries.len(), 2);
        let mut buf = Vec::new();
        trace.write_nodes_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("period,slot,node,value\n0,1,v1,1.0\n"));
        let mut buf = Vec::new();
        trace.write_boundaries_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "period,input,output\n0,1.0,0.0\n1,0.0,1.0\n");
    }
}
