//! JSON form of an MCN plus its fault set.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{
    format_weight, parse_weight, weight_from_f64, ContinuousPlant, Edge, FaultConfiguration, FaultSet, Mcn, NodeId,
    RadioGraph, Schedule,
};

#[derive(Debug, Error)]
pub enum DescriptionError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("at `{path}`: {message}")]
    Field { path: String, message: String },
}

impl DescriptionError {
    fn field(path: impl Into<String>, message: impl ToString) -> Self {
        DescriptionError::Field { path: path.into(), message: message.to_string() }
    }

    /// JSON path of the offending field, when known.
    pub fn path(&self) -> Option<&str> {
        match self {
            DescriptionError::Field { path, .. } => Some(path),
            DescriptionError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlant {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    #[serde(rename = "C")]
    c: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: NodeId,
    to: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    nodes: Vec<NodeId>,
    edges: Vec<RawEdge>,
    source: NodeId,
    sink: NodeId,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMcn {
    plant: RawPlant,
    delta: f64,
    ctrl_graph: RawGraph,
    ctrl_schedule: Vec<Vec<String>>,
    obs_graph: RawGraph,
    obs_schedule: Vec<Vec<String>>,
    #[serde(default)]
    fault_set: Vec<RawFault>,
}

/// A fault configuration: a bare edge list, labelled `f1, f2, ...` by
/// position among the non-empty entries, or an explicitly labelled one.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawFault {
    Edges(Vec<String>),
    Labelled { label: String, edges: Vec<String> },
}

/// A loaded description: the MCN and the fault set listed with it.
#[derive(Debug, Clone, PartialEq)]
pub struct McnDescription {
    pub mcn: Mcn,
    pub faults: FaultSet,
}

impl McnDescription {
    pub fn from_json_str(text: &str) -> Result<Self, DescriptionError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawMcn = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            DescriptionError::field(path, err.into_inner())
        })?;
        raw.into_description()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DescriptionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| DescriptionError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_value(&self) -> Value {
        let mcn = &self.mcn;
        let n = mcn.plant.order();
        let raw = RawMcn {
            plant: RawPlant {
                a: (0..n).map(|i| (0..n).map(|j| mcn.plant.a()[(i, j)]).collect()).collect(),
                b: mcn.plant.b().iter().copied().collect(),
                c: mcn.plant.c().iter().copied().collect(),
            },
            delta: mcn.slot_duration(),
            ctrl_graph: raw_graph(&mcn.ctrl_graph),
            ctrl_schedule: raw_schedule(&mcn.ctrl_schedule),
            obs_graph: raw_graph(&mcn.obs_graph),
            obs_schedule: raw_schedule(&mcn.obs_schedule),
            fault_set: raw_faults(&self.faults),
        };
        serde_json::to_value(raw).expect("description serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("description serializes")
    }
}

fn raw_graph(graph: &RadioGraph) -> RawGraph {
    RawGraph {
        nodes: graph.nodes().iter().cloned().collect(),
        edges: graph
            .weights()
            .iter()
            .map(|(e, w)| RawEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                weight: Some(Value::String(format_weight(w))),
            })
            .collect(),
        source: graph.source().to_string(),
        sink: graph.sink().to_string(),
    }
}

fn raw_faults(faults: &FaultSet) -> Vec<RawFault> {
    let mut index = 0;
    faults
        .iter()
        .map(|c| {
            let edges = c.edges().iter().map(Edge::to_string).collect();
            if c.is_empty() {
                return RawFault::Edges(edges);
            }
            index += 1;
            if c.label() == format!("f{index}") {
                RawFault::Edges(edges)
            } else {
                RawFault::Labelled { label: c.label().to_string(), edges }
            }
        })
        .collect()
}

fn raw_schedule(schedule: &Schedule) -> Vec<Vec<String>> {
    schedule.slots().iter().map(|s| s.iter().map(Edge::to_string).collect()).collect()
}

impl RawMcn {
    fn into_description(self) -> Result<McnDescription, DescriptionError> {
        let plant = ContinuousPlant::from_rows(&self.plant.a, &self.plant.b, &self.plant.c)
            .map_err(|e| DescriptionError::field("plant", e))?;
        let ctrl_graph = convert_graph(self.ctrl_graph, "ctrl_graph")?;
        let obs_graph = convert_graph(self.obs_graph, "obs_graph")?;
        let ctrl_schedule = Schedule::new(convert_slots(&self.ctrl_schedule, "ctrl_schedule")?, self.delta);
        let obs_schedule = Schedule::new(convert_slots(&self.obs_schedule, "obs_schedule")?, self.delta);
        let faults = convert_faults(&self.fault_set)?;
        Ok(McnDescription { mcn: Mcn { plant, ctrl_graph, ctrl_schedule, obs_graph, obs_schedule }, faults })
    }
}

fn convert_graph(raw: RawGraph, path: &str) -> Result<RadioGraph, DescriptionError> {
    let mut edges = Vec::with_capacity(raw.edges.len());
    let mut seen = std::collections::BTreeSet::new();
    for (i, edge) in raw.edges.into_iter().enumerate() {
        let at = format!("{path}.edges[{i}]");
        let weight = match &edge.weight {
            None => num_rational::BigRational::from_integer(1.into()),
            Some(Value::String(s)) => {
                parse_weight(s).map_err(|e| DescriptionError::field(format!("{at}.weight"), e))?
            }
            Some(Value::Number(n)) => {
                let v =
                    n.as_f64().ok_or_else(|| DescriptionError::field(format!("{at}.weight"), "not a finite number"))?;
                weight_from_f64(v).map_err(|e| DescriptionError::field(format!("{at}.weight"), e))?
            }
            Some(other) => {
                return Err(DescriptionError::field(
                    format!("{at}.weight"),
                    format!("expected a number or a \"p/q\" string, found {other}"),
                ))
            }
        };
        let e = Edge::new(edge.from, edge.to);
        if !seen.insert(e.clone()) {
            return Err(DescriptionError::field(at, format!("duplicate edge {e}")));
        }
        edges.push((e, weight));
    }
    Ok(RadioGraph::new(raw.nodes, edges, raw.source, raw.sink))
}

fn convert_faults(raw: &[RawFault]) -> Result<FaultSet, DescriptionError> {
    let mut index = 0;
    let mut labels = std::collections::BTreeSet::new();
    let mut configs = Vec::with_capacity(raw.len());
    for (i, fault) in raw.iter().enumerate() {
        let (label, edges, at) = match fault {
            RawFault::Edges(edges) => (None, edges, format!("fault_set[{i}]")),
            RawFault::Labelled { label, edges } => (Some(label.clone()), edges, format!("fault_set[{i}].edges")),
        };
        let edges: Vec<Edge> = edges
            .iter()
            .enumerate()
            .map(|(j, r)| r.parse::<Edge>().map_err(|e| DescriptionError::field(format!("{at}[{j}]"), e)))
            .collect::<Result<_, _>>()?;
        let config = if edges.is_empty() {
            FaultConfiguration::nominal()
        } else {
            index += 1;
            FaultConfiguration::new(label.unwrap_or_else(|| format!("f{index}")), edges)
        };
        if !config.is_empty() && config.label() == super::NOMINAL_LABEL {
            return Err(DescriptionError::field(
                format!("fault_set[{i}].label"),
                "reserved for the empty configuration",
            ));
        }
        if config.is_empty() || labels.insert(config.label().to_string()) {
            configs.push(config);
        } else {
            return Err(DescriptionError::field(
                format!("fault_set[{i}]"),
                format!("duplicate label {}", config.label()),
            ));
        }
    }
    Ok(FaultSet::new(configs))
}

fn convert_slots(raw: &[Vec<String>], path: &str) -> Result<Vec<Vec<Edge>>, DescriptionError> {
    raw.iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.iter()
                .enumerate()
                .map(|(j, r)| r.parse::<Edge>().map_err(|e| DescriptionError::field(format!("{path}[{i}][{j}]"), e)))
                .collect()
        })
        .collect()
}
