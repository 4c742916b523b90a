//! Per-configuration models and controllers, and residual-based detection
//! of the active configuration.

use std::io::Write;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{check_with_plant, AnalysisError, Condition, PlantData, Property, PropertyReport, Tolerances};
use crate::lti::{
    circle_targets, ctrb_rank, detectability_witness, eigenvalues, obsv_rank, place_poles, stabilizability_witness,
    LtiError, Polynomial, RationalTF, StateSpace, PBH_TOLERANCE, UNIT_CIRCLE_TOLERANCE,
};
use crate::model::{weight_to_f64, FaultConfiguration, Mcn, Side};
use crate::network::{apply_fault, gamma_sequence, GammaSequence, NetworkError};

#[derive(Debug, Error)]
pub enum AdaptiveError {
    #[error("fault {fault}: {side:?} side is disconnected")]
    Disconnected { fault: String, side: Side },
    #[error("fault {fault}: mode {eigenvalue} is not stabilizable")]
    NotStabilizable { fault: String, eigenvalue: Complex64 },
    #[error("fault {fault}: mode {eigenvalue} is not detectable")]
    NotDetectable { fault: String, eigenvalue: Complex64 },
    #[error("fault {fault}: closed loop has spectral radius {radius}")]
    Unstable { fault: String, radius: f64 },
    #[error("residual bank needs at least one mode")]
    EmptyBank,
    #[error("forgetting factor must lie in (0, 1), got {0}")]
    BadLambda(f64),
    #[error("unknown mode {0}")]
    UnknownMode(String),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Discrete model of `G_R^f(z) P_T(z) G_O^f(z)` for one configuration.
///
/// State layout: the last `d_R` controller outputs (newest first), the plant
/// state, then the last `d_O` plant outputs (newest first).
#[derive(Debug, Clone)]
pub struct ModeModel {
    pub fault: String,
    pub system: StateSpace,
    pub actuation_delay: usize,
    pub sensing_delay: usize,
    pub minimal: bool,
    /// Actuation-side pole cancellation found by the structural check.
    pub uncontrollable_pole: Option<Complex64>,
    /// Sensing-side pole cancellation found by the structural check.
    pub undetectable_pole: Option<Complex64>,
    transfer: RationalTF,
}

impl ModeModel {
    pub fn order(&self) -> usize {
        self.system.order()
    }

    /// The cascade transfer function, unreduced.
    pub fn transfer_function(&self) -> &RationalTF {
        &self.transfer
    }
}

pub fn realize_mode(mcn: &Mcn, fault: &FaultConfiguration, tol: &Tolerances) -> Result<ModeModel, AdaptiveError> {
    let plant = PlantData::new(mcn)?;
    realize_mode_with(&plant, mcn, fault, tol)
}

pub fn realize_mode_with(
    plant: &PlantData,
    mcn: &Mcn,
    fault: &FaultConfiguration,
    tol: &Tolerances,
) -> Result<ModeModel, AdaptiveError> {
    let label = fault.label().to_string();
    let side_gamma = |side: Side| -> Result<(GammaSequence, Vec<f64>), AdaptiveError> {
        let gs = gamma_sequence(mcn.graph(side), &apply_fault(mcn.schedule(side), fault))?;
        if gs.is_zero() {
            return Err(AdaptiveError::Disconnected { fault: label.clone(), side });
        }
        let g = gs.numerator().iter().map(weight_to_f64).collect();
        Ok((gs, g))
    };
    let (_, g_r) = side_gamma(Side::Actuation)?;
    let (_, g_o) = side_gamma(Side::Sensing)?;

    let d = &plant.discrete;
    let (dr, n, dobs) = (g_r.len(), d.order(), g_o.len());
    let size = dr + n + dobs;
    let mut a = DMatrix::zeros(size, size);
    let mut b = DVector::zeros(size);
    let mut c = RowDVector::zeros(size);
    b[0] = 1.0;
    for i in 1..dr {
        a[(i, i - 1)] = 1.0;
    }
    a.view_mut((dr, dr), (n, n)).copy_from(d.a());
    let g_row = RowDVector::from_row_slice(&g_r);
    a.view_mut((dr, 0), (n, dr)).copy_from(&(d.b() * g_row));
    a.view_mut((dr + n, dr), (1, n)).copy_from(d.c());
    for i in 1..dobs {
        a[(dr + n + i, dr + n + i - 1)] = 1.0;
    }
    for (i, g) in g_o.iter().enumerate() {
        c[dr + n + i] = *g;
    }
    let domain = d.domain();
    let system = StateSpace::new(a, b, c, 0.0, domain)?;
    let minimal = ctrb_rank(system.a(), system.b()) == size && obsv_rank(system.a(), system.c()) == size;

    let structural_pole = |side: Side, property: Property| -> Result<Option<Complex64>, AdaptiveError> {
        let schedule = apply_fault(mcn.schedule(side), fault);
        let report = check_with_plant(plant, mcn.graph(side), &schedule, property, tol, fault.label())?;
        Ok(failing_pole(&report))
    };
    let uncontrollable_pole = structural_pole(Side::Actuation, Property::Stabilizable)?;
    let undetectable_pole = structural_pole(Side::Sensing, Property::Detectable)?;

    let num = &(&Polynomial::new(g_r) * plant.tf.num()) * &Polynomial::new(g_o);
    let den = &(&Polynomial::monomial(dr) * plant.tf.den()) * &Polynomial::monomial(dobs);
    let transfer = RationalTF::new(num, den, domain)?;
    Ok(ModeModel {
        fault: label,
        system,
        actuation_delay: dr,
        sensing_delay: dobs,
        minimal,
        uncontrollable_pole,
        undetectable_pole,
        transfer,
    })
}

fn failing_pole(report: &PropertyReport) -> Option<Complex64> {
    report
        .failed()
        .find(|c| matches!(c.condition, Condition::Plant | Condition::PoleCondition))
        .map(|c| c.witness.pole.unwrap_or_default())
}

/// Closed-loop eigenvalue radii for state feedback and for the observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerTargets {
    pub feedback_radius: f64,
    pub observer_radius: f64,
}

impl Default for ControllerTargets {
    fn default() -> Self {
        Self { feedback_radius: 0.25, observer_radius: 0.1 }
    }
}

/// Observer-based output feedback `ũ = −K x̂`,
/// `x̂⁺ = A x̂ + B ũ + L (ỹ − C x̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeController {
    pub fault: String,
    pub k: RowDVector<f64>,
    pub l: DVector<f64>,
}

impl ModeController {
    /// `[[A − BK, BK], [0, A − LC]]` acting on `(x, x − x̂)`; similar to the
    /// loop in `(x, x̂)` coordinates but block triangular, which keeps the
    /// eigenvalue computation accurate when the gains are large.
    pub fn closed_loop_matrix(&self, model: &ModeModel) -> DMatrix<f64> {
        let s = &model.system;
        let n = s.order();
        let bk = s.b() * &self.k;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(s.a() - &bk));
        m.view_mut((0, n), (n, n)).copy_from(&bk);
        m.view_mut((n, n), (n, n)).copy_from(&(s.a() - &self.l * s.c()));
        m
    }

    /// Eigenvalues of `A − BK` followed by those of `A − LC`.
    pub fn closed_loop_poles(&self, model: &ModeModel) -> Result<Vec<Complex64>, LtiError> {
        let s = &model.system;
        let mut poles = eigenvalues(&(s.a() - s.b() * &self.k))?;
        poles.extend(eigenvalues(&(s.a() - &self.l * s.c()))?);
        Ok(poles)
    }

    pub fn control(&self, estimate: &DVector<f64>) -> f64 {
        -(&self.k * estimate)[0]
    }
}

/// Places the feedback and observer eigenvalues on circles of the target
/// radii. Fails, naming the eigenvalue, when the model is not stabilizable
/// or not detectable.
pub fn synthesize_controller(model: &ModeModel, targets: &ControllerTargets) -> Result<ModeController, AdaptiveError> {
    let fault = model.fault.clone();
    let s = &model.system;
    if let Some(eigenvalue) = model.uncontrollable_pole {
        return Err(AdaptiveError::NotStabilizable { fault, eigenvalue });
    }
    if let Some(eigenvalue) = model.undetectable_pole {
        return Err(AdaptiveError::NotDetectable { fault, eigenvalue });
    }
    if let Some(eigenvalue) = stabilizability_witness(s.a(), s.b(), s.domain(), UNIT_CIRCLE_TOLERANCE, PBH_TOLERANCE)? {
        return Err(AdaptiveError::NotStabilizable { fault, eigenvalue });
    }
    if let Some(eigenvalue) = detectability_witness(s.a(), s.c(), s.domain(), UNIT_CIRCLE_TOLERANCE, PBH_TOLERANCE)? {
        return Err(AdaptiveError::NotDetectable { fault, eigenvalue });
    }
    let n = s.order();
    let k = place_poles(s.a(), s.b(), &circle_targets(n, targets.feedback_radius))?;
    let l = observer_gain(s, targets.observer_radius)?;
    let controller = ModeController { fault: fault.clone(), k, l };
    let radius = controller.closed_loop_poles(model)?.iter().fold(0.0, |r: f64, z| r.max(z.norm()));
    if radius.is_nan() || radius >= 1.0 {
        return Err(AdaptiveError::Unstable { fault, radius });
    }
    Ok(controller)
}

fn observer_gain(s: &StateSpace, radius: f64) -> Result<DVector<f64>, LtiError> {
    let lt = place_poles(&s.a().transpose(), &s.c().transpose(), &circle_targets(s.order(), radius))?;
    Ok(lt.transpose())
}

/// One model copy of the bank, optionally corrected by an observer gain.
#[derive(Debug, Clone)]
pub struct ResidualGenerator {
    label: String,
    system: StateSpace,
    gain: Option<DVector<f64>>,
    estimate: DVector<f64>,
    residual: f64,
}

impl ResidualGenerator {
    /// Pure prediction: the copy is driven by the applied input only.
    pub fn open_loop(model: &ModeModel) -> Self {
        Self {
            label: model.fault.clone(),
            system: model.system.clone(),
            gain: None,
            estimate: DVector::zeros(model.order()),
            residual: 0.0,
        }
    }

    /// Prediction corrected by `L (ỹ − C x̂)`.
    pub fn with_observer(model: &ModeModel, gain: DVector<f64>) -> Self {
        Self { gain: Some(gain), ..Self::open_loop(model) }
    }

    /// Observer-corrected when an observer gain can be placed for the model,
    /// open loop otherwise.
    pub fn for_model(model: &ModeModel, observer_radius: f64) -> Self {
        match observer_gain(&model.system, observer_radius) {
            Ok(l) => Self::with_observer(model, l),
            Err(_) => Self::open_loop(model),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.estimate
    }

    pub fn predicted_output(&self) -> f64 {
        self.system.output(&self.estimate, 0.0)
    }

    /// Consumes one period's `(ũ, ỹ)`; returns the prediction error.
    fn update(&mut self, u: f64, y: f64, lambda: f64) -> f64 {
        let e = y - self.predicted_output();
        self.residual = lambda * self.residual + e * e;
        let mut next = self.system.next_state(&self.estimate, u);
        if let Some(l) = &self.gain {
            next += l * e;
        }
        self.estimate = next;
        e
    }
}

/// Bank of residual generators with a dwell-time switching rule.
#[derive(Debug, Clone)]
pub struct ResidualBank {
    generators: Vec<ResidualGenerator>,
    lambda: f64,
    tau: usize,
    counter: usize,
    active: usize,
}

pub const DEFAULT_LAMBDA: f64 = 0.9;
pub const DEFAULT_TAU: usize = 10;

impl ResidualBank {
    /// The first generator starts active.
    pub fn new(generators: Vec<ResidualGenerator>, lambda: f64, tau: usize) -> Result<Self, AdaptiveError> {
        if generators.is_empty() {
            return Err(AdaptiveError::EmptyBank);
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(AdaptiveError::BadLambda(lambda));
        }
        Ok(Self { generators, lambda, tau, counter: 0, active: 0 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn dwell_counter(&self) -> usize {
        self.counter
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> + '_ {
        self.generators.iter().map(|g| g.label())
    }

    pub fn generators(&self) -> &[ResidualGenerator] {
        &self.generators
    }

    pub fn generator(&self, label: &str) -> Option<&ResidualGenerator> {
        self.generators.iter().find(|g| g.label() == label)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.generators.iter().map(|g| g.residual()).collect()
    }

    pub fn active(&self) -> &ResidualGenerator {
        &self.generators[self.active]
    }

    pub fn active_label(&self) -> &str {
        self.generators[self.active].label()
    }

    pub fn set_active(&mut self, label: &str) -> Result<(), AdaptiveError> {
        self.active = self
            .generators
            .iter()
            .position(|g| g.label() == label)
            .ok_or_else(|| AdaptiveError::UnknownMode(label.to_string()))?;
        Ok(())
    }

    /// Advances every generator with `(ũ, ỹ)`, then applies the switching
    /// rule: move to the smallest residual only once the dwell counter has
    /// reached `τ`; ties keep the current mode. Returns the active label.
    pub fn step(&mut self, u: f64, y: f64) -> &str {
        for g in &mut self.generators {
            g.update(u, y, self.lambda);
        }
        let mut candidate = self.active;
        for (i, g) in self.generators.iter().enumerate() {
            if g.residual() < self.generators[candidate].residual() {
                candidate = i;
            }
        }
        if candidate != self.active && self.counter >= self.tau {
            self.active = candidate;
            self.counter = 0;
        } else {
            self.counter += 1;
        }
        self.active_label()
    }
}

/// One bank step; returns the detected mode.
pub fn detect_mode(bank: &mut ResidualBank, u: f64, y: f64) -> String {
    bank.step(u, y).to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeLogRow {
    pub period: usize,
    pub true_mode: String,
    pub detected_mode: String,
    pub residuals: Vec<f64>,
}

/// Detection events with one residual column per mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeLog {
    pub labels: Vec<String>,
    pub rows: Vec<ModeLogRow>,
}

impl ModeLog {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels, rows: Vec::new() }
    }

    /// Columns `period,true_mode,detected_mode,residual_<mode>...`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["period".to_string(), "true_mode".into(), "detected_mode".into()];
        header.extend(self.labels.iter().map(|l| format!("residual_{l}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.period.to_string(), row.true_mode.clone(), row.detected_mode.clone()];
            rec.extend(row.residuals.iter().map(|r| r.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Controller synthesis outcome per mode, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub fault: String,
    pub order: usize,
    pub minimal: bool,
    pub controller: bool,
    pub error: Option<String>,
    #[serde(serialize_with = "crate::report::ser_complex_vec")]
    pub closed_loop_poles: Vec<Complex64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContinuousPlant, Edge, RadioGraph, Schedule};

    fn e(s: &str) -> Edge {
        s.parse().unwrap()
    }

    /// First-order plant behind one-hop links on both sides.
    fn scalar_mcn(a: f64) -> Mcn {
        Mcn {
            plant: ContinuousPlant::from_rows(&[vec![a]], &[1.0], &[1.0]).unwrap(),
            ctrl_graph: RadioGraph::unweighted(["c", "u"], [e("c->u")], "c", "u"),
            ctrl_schedule: Schedule::new(vec![vec![e("c->u")]], 0.1),
            obs_graph: RadioGraph::unweighted(["y", "c"], [e("y->c")], "y", "c"),
            obs_schedule: Schedule::new(vec![vec![e("y->c")]], 0.1),
        }
    }

    #[test]
    fn scalar_cascade_is_delayed_plant() {
        let mcn = scalar_mcn(-1.0);
        let m = realize_mode(&mcn, &FaultConfiguration::nominal(), &Tolerances::default()).unwrap();
        assert_eq!((m.actuation_delay, m.sensing_delay, m.order()), (1, 1, 3));
        assert!(m.minimal);
        let h = m.system.markov(5);
        let ad = (-0.1f64).exp();
        let bd = 1.0 - ad;
        assert_eq!(h[0], 0.0);
        assert_eq!(h[1], 0.0);
        assert!((h[2] - bd).abs() < 1e-15);
        assert!((h[3] - bd * ad).abs() < 1e-15);
    }

    #[test]
    fn deadbeat_on_scalar_loop() {
        let mcn = scalar_mcn(0.5);
        let m = realize_mode(&mcn, &FaultConfiguration::nominal(), &Tolerances::default()).unwrap();
        let ctrl =
            synthesize_controller(&m, &ControllerTargets { feedback_radius: 0.0, observer_radius: 0.0 }).unwrap();
        // All closed-loop eigenvalues at 0: the loop matrix is nilpotent.
        let cl = ctrl.closed_loop_matrix(&m);
        let power = cl.pow(cl.nrows() as u32);
        assert!(power.amax() < 1e-9 * cl.amax().powi(cl.nrows() as i32).max(1.0), "{power}");
    }

    #[test]
    fn identical_models_never_switch() {
        let m = realize_mode(&scalar_mcn(-1.0), &FaultConfiguration::nominal(), &Tolerances::default()).unwrap();
        let mut other = m.clone();
        other.fault = "copy".into();
        let mut bank =
            ResidualBank::new(vec![ResidualGenerator::open_loop(&m), ResidualGenerator::open_loop(&other)], 0.9, 0)
                .unwrap();
        for k in 0..50 {
            assert_eq!(detect_mode(&mut bank, (k as f64).sin(), 1.0), "nominal");
        }
    }

    #[test]
    fn dwell_blocks_early_switch() {
        let m = realize_mode(&scalar_mcn(-1.0), &FaultConfiguration::nominal(), &Tolerances::default()).unwrap();
        let mut zero = m.clone();
        zero.fault = "zero".into();
        zero.system = StateSpace::new(
            m.system.a().clone(),
            m.system.b().clone() * 0.0,
            m.system.c().clone(),
            0.0,
            m.system.domain(),
        )
        .unwrap();
        // The true system is `zero`: output stays 0 while the input is not.
        let mut bank =
            ResidualBank::new(vec![ResidualGenerator::open_loop(&m), ResidualGenerator::open_loop(&zero)], 0.9, 5)
                .unwrap();
        let detected: Vec<String> = (0..8).map(|_| detect_mode(&mut bank, 1.0, 0.0)).collect();
        assert_eq!(&detected[..5], ["nominal"; 5]);
        assert_eq!(detected[7], "zero");
        assert!(ResidualBank::new(vec![], 0.9, 1).is_err());
        assert!(ResidualBank::new(vec![ResidualGenerator::open_loop(&m)], 1.0, 1).is_err());
    }

    #[test]
    fn mode_log_columns() {
        let mut log = ModeLog::new(vec!["nominal".into(), "f1".into()]);
        log.rows.push(ModeLogRow {
            period: 0,
            true_mode: "nominal".into(),
            detected_mode: "nominal".into(),
            residuals: vec![0.0, 0.5],
        });
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "period,true_mode,detected_mode,residual_nominal,residual_f1\n0,nominal,nominal,0,0.5\n"
        );
    }
}
