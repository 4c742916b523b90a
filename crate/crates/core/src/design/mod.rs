//! Constructive routing-weight design.
//!
//! Picks perturbation edges `ē₁…ē_m` and partitions the fault set into
//! classes `ℱ₁…ℱ_m` such that every fault in a later class contains every
//! earlier edge. Then, from class `m` down to 1, adds to `w(ēᵢ)` the first
//! `εᵢ ∈ {0.1, 0.2, …}` that keeps each fault of `ℱᵢ` clear of every pole
//! cancellation. Faults in `ℱᵢ` do not see earlier edges (they are faulty),
//! so earlier choices never undo later ones.

use std::collections::BTreeSet;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    check_fault_tolerance_with, check_with_plant, AnalysisError, Condition, FaultToleranceReport, PlantData, Property,
    Tolerances,
};
use crate::model::{
    equal_incoming_weights, format_weight, Edge, FaultConfiguration, FaultSet, Mcn, RadioGraph, Schedule,
};
use crate::network::{apply_fault, enumerate_paths, induced_graph, NetScalar, NetworkError, RoutedPath};
use crate::report::{ser_complex, ser_complex_opt};

/// Largest multiple of 0.1 tried for a single perturbation.
pub const MAX_EPSILON_STEPS: u32 = 1000;
/// Cap on edge re-selections before giving up.
pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasibility {
    /// Condition on the plant itself fails.
    Plant {
        detail: String,
    },
    Disconnected {
        fault: String,
    },
    ZeroAtOrigin {
        #[serde(serialize_with = "ser_complex")]
        zero: Complex64,
    },
    NoAdmissibleEdge {
        fault: String,
    },
    /// Neither the current weights nor any perturbation of the chosen edge
    /// can clear this pole for this fault.
    Degenerate {
        fault: String,
        edge: Edge,
        #[serde(serialize_with = "ser_complex")]
        pole: Complex64,
    },
    NoEpsilon {
        class: usize,
        edge: Edge,
    },
    VerificationFailed {
        fault: String,
    },
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::Plant { detail } => write!(f, "plant condition violated: {detail}"),
            Infeasibility::Disconnected { fault } => write!(f, "joint connectivity violated for fault {fault}"),
            Infeasibility::ZeroAtOrigin { zero } => write!(f, "discrete plant has a zero at the origin ({zero})"),
            Infeasibility::NoAdmissibleEdge { fault } => {
                write!(f, "no admissible perturbation edge for fault {fault}")
            }
            Infeasibility::Degenerate { fault, edge, pole } => write!(
                f,
                "fault {fault}: pole {pole} stays cancelled for every perturbation of {edge} and no other edge helps"
            ),
            Infeasibility::NoEpsilon { class, edge } => {
                write!(f, "no admissible perturbation of {edge} found for class {class}")
            }
            Infeasibility::VerificationFailed { fault } => {
                write!(f, "designed weights fail the check for fault {fault}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),
    #[error("edge {0} belongs to the fault configuration")]
    EdgeInFault(Edge),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

impl DesignError {
    pub fn infeasibility(&self) -> Option<&Infeasibility> {
        match self {
            DesignError::Infeasible(i) => Some(i),
            _ => None,
        }
    }
}

/// Chosen edges and the fault partition they induce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerturbationPlan {
    pub edges: Vec<Edge>,
    /// Fault labels per class, parallel to `edges`.
    pub classes: Vec<Vec<String>>,
}

impl PerturbationPlan {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// `(a, b)` such that the pole condition value at `p` under the faulty
/// schedule is `a + b·ε` when `ε` is added to `w(ē)`.
pub fn condition_coefficients<T: NetScalar>(
    graph: &RadioGraph,
    schedule: &Schedule,
    fault: &FaultConfiguration,
    edge: &Edge,
    p: &T,
) -> Result<(T, T), DesignError> {
    if fault.contains(edge) {
        return Err(DesignError::EdgeInFault(edge.clone()));
    }
    let faulty = apply_fault(schedule, fault);
    let paths = enumerate_paths(&induced_graph(graph, &faulty))?;
    Ok(coefficients_from_paths(&paths, graph, edge, p))
}

/// `a = Σ W(ρ) p^{d−δ(ρ)}`, `b = Σ_{ρ ∋ ē} W(ρ)/w(ē) · p^{d−δ(ρ)}`, with `d`
/// the largest delay among `paths`.
pub fn coefficients_from_paths<T: NetScalar>(paths: &[RoutedPath], graph: &RadioGraph, edge: &Edge, p: &T) -> (T, T) {
    let d = paths.iter().map(|r| r.delay).max().unwrap_or(0);
    let w_edge = graph.weight(edge).cloned().unwrap_or_else(BigRational::one);
    let mut a = T::zero();
    let mut b = T::zero();
    for path in paths {
        let power = pow(p, d - path.delay);
        a = a + T::from_weight(&path.weight) * power.clone();
        if path.contains_edge(edge) {
            b = b + T::from_weight(&(&path.weight / &w_edge)) * power;
        }
    }
    (a, b)
}

fn pow<T: NetScalar>(p: &T, k: usize) -> T {
    let mut out = T::from_weight(&BigRational::one());
    for _ in 0..k {
        out = out * p.clone();
    }
    out
}

/// Greedy edge selection. At each step the first unprocessed fault `f`
/// needs an edge outside `f` and outside the edges already chosen; the class
/// of that edge is every unprocessed fault not containing it. Candidates lie
/// on a surviving route for `f`, and are ranked by: lying on a surviving
/// route for every fault of their class, number of faults covered, position
/// in `preferred`, then lexicographic order.
pub fn select_perturbation_edges(
    graph: &RadioGraph,
    schedule: &Schedule,
    faults: &FaultSet,
    preferred: &[Edge],
) -> Result<PerturbationPlan, DesignError> {
    let ctx = SelectionContext::new(graph, schedule, faults)?.with_preferred(preferred);
    let (plan, _) = ctx.select(&[])?;
    Ok(plan)
}

struct SelectionContext<'a> {
    graph: &'a RadioGraph,
    faults: &'a FaultSet,
    /// Per fault, the edges lying on some surviving source-to-sink route.
    on_route: Vec<BTreeSet<Edge>>,
    preferred: Vec<Edge>,
}

impl<'a> SelectionContext<'a> {
    fn new(graph: &'a RadioGraph, schedule: &Schedule, faults: &'a FaultSet) -> Result<Self, DesignError> {
        let mut on_route = Vec::with_capacity(faults.len());
        for f in faults {
            let paths = enumerate_paths(&induced_graph(graph, &apply_fault(schedule, f)))?;
            on_route.push(paths.iter().flat_map(|p| p.edges()).collect());
        }
        Ok(Self { graph, faults, on_route, preferred: Vec::new() })
    }

    fn with_preferred(mut self, preferred: &[Edge]) -> Self {
        self.preferred = preferred.to_vec();
        self
    }

    /// Runs the greedy construction taking, at step `k`, the candidate at
    /// position `offsets[k]` (0 when absent). Also returns the candidate
    /// count per step.
    fn select(&self, offsets: &[usize]) -> Result<(PerturbationPlan, Vec<usize>), DesignError> {
        let configs = self.faults.configurations();
        let mut unprocessed: Vec<usize> = (0..configs.len()).collect();
        let mut chosen: Vec<Edge> = Vec::new();
        let mut classes: Vec<Vec<String>> = Vec::new();
        let mut counts = Vec::new();
        while let Some(&first) = unprocessed.first() {
            let f = &configs[first];
            let mut ranked: Vec<(bool, usize, usize, &Edge)> = self
                .graph
                .edges()
                .filter(|e| !f.contains(e) && !chosen.contains(e) && self.on_route[first].contains(*e))
                .map(|e| {
                    let class: Vec<usize> = unprocessed.iter().copied().filter(|&g| !configs[g].contains(e)).collect();
                    let sensitive = class.iter().all(|&g| self.on_route[g].contains(e));
                    let pref = self.preferred.iter().position(|p| p == e).unwrap_or(usize::MAX);
                    (sensitive, class.len(), pref, e)
                })
                .collect();
            ranked.sort_by(|x, y| y.0.cmp(&x.0).then(y.1.cmp(&x.1)).then(x.2.cmp(&y.2)).then(x.3.cmp(y.3)));
            let step = chosen.len();
            let pick = offsets.get(step).copied().unwrap_or(0);
            counts.push(ranked.len());
            let Some(&(_, _, _, edge)) = ranked.get(pick) else {
                return Err(DesignError::Infeasible(Infeasibility::NoAdmissibleEdge { fault: f.label().into() }));
            };
            let (class, rest): (Vec<usize>, Vec<usize>) =
                unprocessed.iter().partition(|&&g| !configs[g].contains(edge));
            classes.push(class.iter().map(|&g| configs[g].label().to_string()).collect());
            chosen.push(edge.clone());
            unprocessed = rest;
        }
        Ok((PerturbationPlan { edges: chosen, classes }, counts))
    }
}

#[derive(Debug, Clone, Default)]
pub struct DesignOptions {
    /// Start from `1/|inc(v)|` weights instead of the given ones.
    pub equal_weights: bool,
    /// Edges to favour when several candidates tie.
    pub preferred_edges: Vec<Edge>,
}

/// One `(class, fault, pole)` constraint on `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForbiddenValue {
    pub class: usize,
    pub fault: String,
    #[serde(serialize_with = "ser_complex")]
    pub pole: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub a: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub b: Complex64,
    /// `−a/b`; absent when `b = 0`.
    #[serde(serialize_with = "ser_complex_opt")]
    pub value: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightChange {
    pub edge: Edge,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub property: Property,
    pub plan: PerturbationPlan,
    /// `ε̄ᵢ` per class, parallel to `plan.edges`.
    pub epsilons: Vec<String>,
    pub forbidden: Vec<ForbiddenValue>,
    pub changes: Vec<WeightChange>,
    /// Edge re-selections made before success.
    pub reselections: usize,
    pub verification: FaultToleranceReport,
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    /// The input MCN with the redesigned graph on the designed side.
    pub mcn: Mcn,
    pub report: DesignReport,
}

/// Designs weights so that `property` holds for every configuration of
/// `faults`. Works on the side `property` refers to.
pub fn design_weights(
    mcn: &Mcn,
    faults: &FaultSet,
    property: Property,
    tol: &Tolerances,
    options: &DesignOptions,
) -> Result<DesignOutcome, DesignError> {
    let side = property.side();
    let mut base = mcn.clone();
    if options.equal_weights {
        *base.graph_mut(side) = equal_incoming_weights(mcn.graph(side));
    }
    let plant = PlantData::new(&base).map_err(DesignError::from)?;
    check_preconditions(&plant, &base, faults, property, tol)?;

    let poles: Vec<Complex64> = if property.is_relaxed() {
        let domain = plant.discrete.domain();
        plant.poles.iter().copied().filter(|p| domain.is_unstable_mode(*p, tol.unit_circle)).collect()
    } else {
        plant.poles.clone()
    };
    let schedule = base.schedule(side).clone();
    let ctx = SelectionContext::new(base.graph(side), &schedule, faults)?.with_preferred(&options.preferred_edges);

    let mut offsets: Vec<usize> = Vec::new();
    for attempt in 0..MAX_ATTEMPTS {
        let (plan, counts) = ctx.select(&offsets)?;
        match substitute(&plant, &base, faults, &schedule, property, tol, &poles, &plan)? {
            Ok((graph, epsilons, forbidden)) => {
                let mut designed = base.clone();
                *designed.graph_mut(side) = graph;
                let verification = check_fault_tolerance_with(&plant, &designed, faults, property, tol)?;
                if let Some(bad) = verification.reports.iter().find(|r| !r.verdict) {
                    return Err(DesignError::Infeasible(Infeasibility::VerificationFailed {
                        fault: bad.fault.clone(),
                    }));
                }
                let changes = plan
                    .edges
                    .iter()
                    .map(|e| WeightChange {
                        edge: e.clone(),
                        before: format_weight(mcn.graph(side).weight(e).expect("edge exists")),
                        after: format_weight(designed.graph(side).weight(e).expect("edge exists")),
                    })
                    .collect();
                let report = DesignReport {
                    property,
                    plan,
                    epsilons: epsilons.iter().map(format_weight).collect(),
                    forbidden,
                    changes,
                    reselections: attempt,
                    verification,
                };
                return Ok(DesignOutcome { mcn: designed, report });
            }
            Err((class, failure)) => {
                // Advance the choice for the blocked class; later steps
                // restart from their first candidate.
                offsets.resize(class + 1, 0);
                offsets[class] += 1;
                while offsets.last().is_some_and(|&o| {
                    let step = offsets.len() - 1;
                    o >= counts.get(step).copied().unwrap_or(0)
                }) {
                    offsets.pop();
                    match offsets.last_mut() {
                        Some(o) => *o += 1,
                        None => return Err(DesignError::Infeasible(failure)),
                    }
                }
            }
        }
    }
    Err(DesignError::Infeasible(Infeasibility::NoAdmissibleEdge { fault: "attempt limit reached".into() }))
}

fn check_preconditions(
    plant: &PlantData,
    mcn: &Mcn,
    faults: &FaultSet,
    property: Property,
    tol: &Tolerances,
) -> Result<(), DesignError> {
    let side = property.side();
    for f in faults {
        let schedule = apply_fault(mcn.schedule(side), f);
        let report = check_with_plant(plant, mcn.graph(side), &schedule, property, tol, f.label())?;
        for c in report.failed() {
            match c.condition {
                Condition::Plant => {
                    let detail = c.witness.note.clone().unwrap_or_default();
                    return Err(DesignError::Infeasible(Infeasibility::Plant {
                        detail: format!("plant is not {property}: {detail}"),
                    }));
                }
                Condition::JointConnectivity => {
                    return Err(DesignError::Infeasible(Infeasibility::Disconnected { fault: f.label().into() }))
                }
                Condition::ZeroCondition => {
                    let zero = c.witness.zero.unwrap_or_default();
                    return Err(DesignError::Infeasible(Infeasibility::ZeroAtOrigin { zero }));
                }
                Condition::PoleCondition => {}
            }
        }
    }
    Ok(())
}

type Substitution = (RadioGraph, Vec<BigRational>, Vec<ForbiddenValue>);

/// Back-substitution from the last class to the first. The inner error
/// names the class whose edge must be re-selected.
#[allow(clippy::too_many_arguments)]
fn substitute(
    plant: &PlantData,
    mcn: &Mcn,
    faults: &FaultSet,
    schedule: &Schedule,
    property: Property,
    tol: &Tolerances,
    poles: &[Complex64],
    plan: &PerturbationPlan,
) -> Result<Result<Substitution, (usize, Infeasibility)>, DesignError> {
    let side = property.side();
    let mut graph = mcn.graph(side).clone();
    let mut epsilons = vec![BigRational::zero(); plan.len()];
    let mut forbidden = Vec::new();
    for k in (0..plan.len()).rev() {
        let edge = &plan.edges[k];
        let class: Vec<&FaultConfiguration> =
            plan.classes[k].iter().map(|l| faults.get(l).expect("class label from fault set")).collect();
        let mut values: Vec<Complex64> = Vec::new();
        for f in &class {
            let paths = enumerate_paths(&induced_graph(&graph, &apply_fault(schedule, f)))?;
            for &p in poles {
                let (a, b) = coefficients_from_paths(&paths, &graph, edge, &p);
                let (scale_a, scale_b) = coefficient_scales(&paths, &graph, edge, p);
                let a_zero = a.norm() <= tol.eval * scale_a;
                let b_zero = b.norm() <= tol.eval * scale_b || scale_b == 0.0;
                if a_zero && b_zero {
                    return Ok(Err((
                        k,
                        Infeasibility::Degenerate { fault: f.label().into(), edge: edge.clone(), pole: p },
                    )));
                }
                let value = (!b_zero).then(|| -a / b);
                if let Some(v) = value {
                    values.push(v);
                }
                forbidden.push(ForbiddenValue { class: k + 1, fault: f.label().into(), pole: p, a, b, value });
            }
        }
        let base_weight = graph.weight(edge).expect("plan edge exists").clone();
        let mut found = None;
        for step in 1..=MAX_EPSILON_STEPS {
            let eps = BigRational::new(step.into(), 10.into());
            let e = crate::model::weight_to_f64(&eps);
            let clear =
                values.iter().all(|v| (Complex64::new(e, 0.0) - v).norm() > 10.0 * tol.cancel * (1.0 + v.norm()));
            if !clear {
                continue;
            }
            let trial = graph.with_weight(edge, &base_weight + &eps);
            let mut ok = true;
            for f in &class {
                let r = check_with_plant(plant, &trial, &apply_fault(schedule, f), property, tol, f.label())?;
                if !r.verdict {
                    ok = false;
                    break;
                }
            }
            if ok {
                found = Some((eps, trial));
                break;
            }
        }
        match found {
            Some((eps, trial)) => {
                epsilons[k] = eps;
                graph = trial;
            }
            None => return Ok(Err((k, Infeasibility::NoEpsilon { class: k + 1, edge: edge.clone() }))),
        }
    }
    Ok(Ok((graph, epsilons, forbidden)))
}

/// Magnitude scales of the sums behind `a` and `b`, for relative zero tests.
fn coefficient_scales(paths: &[RoutedPath], graph: &RadioGraph, edge: &Edge, p: Complex64) -> (f64, f64) {
    let abs_p = p.norm();
    let (a, b) = coefficients_from_paths(paths, graph, edge, &abs_p);
    (a, b)
}
