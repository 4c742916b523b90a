//! Controllability, observability, stabilizability and detectability of the
//! network-closed loop, per fault configuration and across a fault set.
//!
//! For the actuation side (the sensing side is the dual) the loop is
//! controllable iff
//! 1. the continuous plant `(A, B)` is controllable,
//! 2. the source reaches the sink through scheduled links,
//! 3. no discrete plant pole `p` is a root of `Σ γ(i) p^{d−i}`, and
//! 4. no zero of the discrete plant sits at the origin.
//!
//! The stabilizable variant asks for a stabilizable plant, restricts 3 to
//! poles on or outside the unit circle and drops 4.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::lti::{
    c2d_zoh, coincide, ctrb_rank, detectability_witness, obsv_rank, stabilizability_witness, tf_from_ss, Domain,
    LtiError, RationalTF, StateSpace, PBH_TOLERANCE, UNIT_CIRCLE_TOLERANCE,
};
use crate::model::{FaultConfiguration, FaultSet, Mcn, RadioGraph, Schedule, Side};
use crate::network::{apply_fault, gamma_sequence, GammaSequence, NetworkError};
use crate::report::{ser_complex_opt, ser_complex_vec};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Controllable,
    Stabilizable,
    Observable,
    Detectable,
}

impl Property {
    pub const ALL: [Property; 4] =
        [Property::Controllable, Property::Stabilizable, Property::Observable, Property::Detectable];

    pub fn side(self) -> Side {
        match self {
            Property::Controllable | Property::Stabilizable => Side::Actuation,
            Property::Observable | Property::Detectable => Side::Sensing,
        }
    }

    /// Stabilizable and detectable only look at modes that are not
    /// asymptotically stable.
    pub fn is_relaxed(self) -> bool {
        matches!(self, Property::Stabilizable | Property::Detectable)
    }

    pub fn name(self) -> &'static str {
        match self {
            Property::Controllable => "controllable",
            Property::Stabilizable => "stabilizable",
            Property::Observable => "observable",
            Property::Detectable => "detectable",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown property `{s}`"))
    }
}

/// Numerical thresholds used by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Root coincidence: `|r1 − r2| ≤ cancel·max(1, |r1|)`.
    pub cancel: f64,
    /// Relative residual of the pole condition polynomial.
    pub eval: f64,
    /// Margin for "on or outside the unit circle".
    pub unit_circle: f64,
    /// Relative singular-value margin of the PBH pencil.
    pub pbh: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cancel: 1e-6, eval: 1e-9, unit_circle: UNIT_CIRCLE_TOLERANCE, pbh: PBH_TOLERANCE }
    }
}

impl Tolerances {
    pub fn with_cancel(cancel: f64) -> Self {
        Self { cancel, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Rank (or PBH) property of the continuous plant.
    Plant,
    JointConnectivity,
    /// No plant pole is a root of the network numerator.
    PoleCondition,
    /// No zero of the discrete plant at the origin.
    ZeroCondition,
}

/// Evidence behind a condition outcome. On a pass it still records the
/// closest approach found, so borderline cases are visible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Witness {
    #[serde(serialize_with = "ser_complex_opt")]
    pub pole: Option<Complex64>,
    #[serde(serialize_with = "ser_complex_opt")]
    pub zero: Option<Complex64>,
    pub distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub pass: bool,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub fault: String,
    pub verdict: bool,
    pub conditions: Vec<ConditionResult>,
    pub gamma: GammaSequence,
    #[serde(serialize_with = "ser_complex_vec")]
    pub network_zeros: Vec<Complex64>,
    pub tolerances: Tolerances,
}

impl PropertyReport {
    pub fn condition(&self, c: Condition) -> Option<&ConditionResult> {
        self.conditions.iter().find(|r| r.condition == c)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionResult> {
        self.conditions.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaultToleranceReport {
    pub property: Property,
    pub verdict: bool,
    pub reports: Vec<PropertyReport>,
}

impl FaultToleranceReport {
    pub fn get(&self, fault: &str) -> Option<&PropertyReport> {
        self.reports.iter().find(|r| r.fault == fault)
    }
}

/// Continuous and discretized plant with the quantities every check reuses.
#[derive(Debug, Clone)]
pub struct PlantData {
    pub continuous: StateSpace,
    pub discrete: StateSpace,
    /// Eigenvalues of the discrete state matrix.
    pub poles: Vec<Complex64>,
    /// Zeros of the discrete transfer function.
    pub zeros: Vec<Complex64>,
    pub tf: RationalTF,
}

impl PlantData {
    pub fn new(mcn: &Mcn) -> Result<Self, AnalysisError> {
        let continuous = StateSpace::continuous(&mcn.plant);
        let discrete = c2d_zoh(&mcn.plant, mcn.sampling_period())?;
        let poles = discrete.poles()?;
        let tf = tf_from_ss(&discrete)?;
        let zeros = tf.zeros()?;
        Ok(Self { continuous, discrete, poles, zeros, tf })
    }
}

pub fn check_controllability(mcn: &Mcn, tol: &Tolerances) -> Result<PropertyReport, AnalysisError> {
    check_property(mcn, Property::Controllable, tol)
}

pub fn check_stabilizability(mcn: &Mcn, tol: &Tolerances) -> Result<PropertyReport, AnalysisError> {
    check_property(mcn, Property::Stabilizable, tol)
}

pub fn check_observability(mcn: &Mcn, tol: &Tolerances) -> Result<PropertyReport, AnalysisError> {
    check_property(mcn, Property::Observable, tol)
}

pub fn check_detectability(mcn: &Mcn, tol: &Tolerances) -> Result<PropertyReport, AnalysisError> {
    check_property(mcn, Property::Detectable, tol)
}

pub fn check_property(mcn: &Mcn, property: Property, tol: &Tolerances) -> Result<PropertyReport, AnalysisError> {
    let plant = PlantData::new(mcn)?;
    let side = property.side();
    check_with_plant(&plant, mcn.graph(side), mcn.schedule(side), property, tol, crate::model::NOMINAL_LABEL)
}

/// Runs `property` for every configuration, removing the faulty links from
/// both schedules first.
pub fn check_fault_tolerance(
    mcn: &Mcn,
    faults: &FaultSet,
    property: Property,
    tol: &Tolerances,
) -> Result<FaultToleranceReport, AnalysisError> {
    let plant = PlantData::new(mcn)?;
    check_fault_tolerance_with(&plant, mcn, faults, property, tol)
}

pub fn check_fault_tolerance_with(
    plant: &PlantData,
    mcn: &Mcn,
    faults: &FaultSet,
    property: Property,
    tol: &Tolerances,
) -> Result<FaultToleranceReport, AnalysisError> {
    let side = property.side();
    let reports =
        faults.iter().map(|f| check_fault(plant, mcn, f, side, property, tol)).collect::<Result<Vec<_>, _>>()?;
    let verdict = reports.iter().all(|r| r.verdict);
    Ok(FaultToleranceReport { property, verdict, reports })
}

fn check_fault(
    plant: &PlantData,
    mcn: &Mcn,
    fault: &FaultConfiguration,
    side: Side,
    property: Property,
    tol: &Tolerances,
) -> Result<PropertyReport, AnalysisError> {
    let schedule = apply_fault(mcn.schedule(side), fault);
    check_with_plant(plant, mcn.graph(side), &schedule, property, tol, fault.label())
}

/// The four conditions for one side given an already discretized plant.
pub fn check_with_plant(
    plant: &PlantData,
    graph: &RadioGraph,
    schedule: &Schedule,
    property: Property,
    tol: &Tolerances,
    label: &str,
) -> Result<PropertyReport, AnalysisError> {
    let gamma = gamma_sequence(graph, schedule)?;
    let network_zeros = if gamma.is_zero() { Vec::new() } else { gamma.numerator_polynomial().roots()? };
    let mut conditions = vec![plant_condition(plant, property, tol)?];

    conditions.push(ConditionResult {
        condition: Condition::JointConnectivity,
        pass: gamma.connected(),
        witness: Witness {
            note: (!gamma.connected())
                .then(|| format!("no scheduled path from {} to {}", graph.source(), graph.sink())),
            ..Witness::default()
        },
    });

    let poles: Vec<Complex64> = if property.is_relaxed() {
        plant.poles.iter().copied().filter(|p| plant.discrete.domain().is_unstable_mode(*p, tol.unit_circle)).collect()
    } else {
        plant.poles.clone()
    };
    conditions.push(pole_condition(&gamma, &network_zeros, &poles, tol));

    if !property.is_relaxed() {
        conditions.push(zero_condition(&plant.zeros, tol));
    }
    let verdict = conditions.iter().all(|c| c.pass);
    Ok(PropertyReport {
        property,
        fault: label.to_string(),
        verdict,
        conditions,
        gamma,
        network_zeros,
        tolerances: *tol,
    })
}

fn plant_condition(plant: &PlantData, property: Property, tol: &Tolerances) -> Result<ConditionResult, AnalysisError> {
    let ss = &plant.continuous;
    let n = ss.order();
    let (pass, witness) = match property {
        Property::Controllable | Property::Observable => {
            let rank =
                if property == Property::Controllable { ctrb_rank(ss.a(), ss.b()) } else { obsv_rank(ss.a(), ss.c()) };
            let note = (rank < n).then(|| format!("rank {rank} of {n}"));
            (rank == n, Witness { note, ..Witness::default() })
        }
        Property::Stabilizable | Property::Detectable => {
            let w = if property == Property::Stabilizable {
                stabilizability_witness(ss.a(), ss.b(), Domain::Continuous, tol.unit_circle, tol.pbh)?
            } else {
                detectability_witness(ss.a(), ss.c(), Domain::Continuous, tol.unit_circle, tol.pbh)?
            };
            let note = w.map(|_| "mode not reachable by the PBH test".to_string());
            (w.is_none(), Witness { pole: w, note, ..Witness::default() })
        }
    };
    Ok(ConditionResult { condition: Condition::Plant, pass, witness })
}

/// Flags a pole when the relative residual `|Σ γ(i) p^{d−i}| / Σ |γ(i)||p|^{d−i}`
/// is at most `tol.eval`, or when a root of the network numerator coincides
/// with it at `tol.cancel`. Either test suffices to fail.
fn pole_condition(
    gamma: &GammaSequence,
    network_zeros: &[Complex64],
    poles: &[Complex64],
    tol: &Tolerances,
) -> ConditionResult {
    if gamma.is_zero() {
        return ConditionResult {
            condition: Condition::PoleCondition,
            pass: poles.is_empty(),
            witness: Witness {
                pole: poles.first().copied(),
                note: Some("network transfer function is zero".into()),
                ..Witness::default()
            },
        };
    }
    let coeffs = gamma.to_f64();
    let d = gamma.realized_delay().expect("nonzero sequence");
    let mut worst: Option<(bool, f64, Witness)> = None;
    for &p in poles {
        let mut value = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (i, g) in coeffs[..d].iter().enumerate() {
            let power = (d - 1 - i) as i32;
            value += p.powi(power) * *g;
            scale += g.abs() * p.norm().powi(power);
        }
        let residual = if scale > 0.0 { value.norm() / scale } else { 0.0 };
        let nearest = network_zeros.iter().map(|z| (*z, (p - z).norm())).min_by(|a, b| a.1.total_cmp(&b.1));
        let matched = nearest.is_some_and(|(z, _)| coincide(p, z, tol.cancel));
        let flagged = residual <= tol.eval || matched;
        let distance = nearest.map(|(_, dist)| dist);
        let witness =
            Witness { pole: Some(p), zero: nearest.map(|(z, _)| z), distance, residual: Some(residual), note: None };
        let key = distance.unwrap_or(f64::INFINITY);
        let replace = match &worst {
            None => true,
            Some((wf, wd, _)) => (flagged && !wf) || (flagged == *wf && key < *wd),
        };
        if replace {
            worst = Some((flagged, key, witness));
        }
    }
    match worst {
        None => ConditionResult {
            condition: Condition::PoleCondition,
            pass: true,
            witness: Witness { note: Some("no poles to check".into()), ..Witness::default() },
        },
        Some((flagged, _, witness)) => ConditionResult { condition: Condition::PoleCondition, pass: !flagged, witness },
    }
}

fn zero_condition(zeros: &[Complex64], tol: &Tolerances) -> ConditionResult {
    let origin = Complex64::new(0.0, 0.0);
    let nearest = zeros.iter().copied().min_by(|a, b| a.norm().total_cmp(&b.norm()));
    let pass = !nearest.is_some_and(|z| coincide(origin, z, tol.cancel));
    ConditionResult {
        condition: Condition::ZeroCondition,
        pass,
        witness: Witness { zero: nearest, distance: nearest.map(|z| z.norm()), ..Witness::default() },
    }
}
