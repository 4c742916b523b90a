//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one status line; the process fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use common::{e, fault, fixture, fixture_path, r, random_side, rng, VALID_FIXTURES};
use mcn_core::analysis::{check_fault_tolerance, Property, Tolerances};
use mcn_core::closed_loop::{simulate, FaultTimeline, Reference, SimConfig};
use mcn_core::design::{design_weights, DesignOptions};
use mcn_core::lti::{c2d_zoh, eigenvalues};
use mcn_core::model::{ContinuousPlant, FaultSet};
use mcn_core::network::{apply_fault, gamma_sequence, network_tf, slot_simulate};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

type Outcome = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `γ(1..=d)` up to the largest delay carrying weight.
fn gamma_of(name: &str, label: &str) -> Result<Vec<BigRational>, String> {
    let d = fixture(name);
    let f = fault(&d.faults, label);
    let g = gamma_sequence(&d.mcn.ctrl_graph, &apply_fault(&d.mcn.ctrl_schedule, f)).map_err(|e| e.to_string())?;
    Ok(g.coefficients()[..g.realized_delay().unwrap_or(0)].to_vec())
}

fn example1() -> Outcome {
    for (name, delay) in [("example1_forward.json", 1usize), ("example1_backward.json", 2)] {
        let d = fixture(name);
        let g = gamma_sequence(&d.mcn.ctrl_graph, &d.mcn.ctrl_schedule).map_err(|e| e.to_string())?;
        let mut expected = vec![BigRational::zero(); delay];
        expected[delay - 1] = BigRational::one();
        let got = gamma_of(name, "nominal")?;
        ensure(got == expected, || format!("{name}: gamma {got:?}"))?;
        let tf = network_tf(&g, d.mcn.sampling_period()).map_err(|e| e.to_string())?;
        let mut den = vec![0.0; delay + 1];
        den[0] = 1.0;
        ensure(tf.num().coeffs() == [1.0] && tf.den().coeffs() == den.as_slice(), || format!("{name}: G(z) = {tf}"))?;
    }
    Ok(())
}

fn example2_gamma() -> Outcome {
    let cases = [
        ("example2_a.json", vec![r(0, 1), r(3, 5), r(2, 5)]),
        ("example2_b.json", vec![r(1, 1)]),
        ("example2_c.json", vec![r(3, 5), r(2, 5)]),
    ];
    for (name, expected) in cases {
        let got = gamma_of(name, "nominal")?;
        ensure(got == expected, || format!("{name}: gamma {got:?}"))?;
    }
    Ok(())
}

fn fault_zeros() -> Outcome {
    let d = fixture("example2_c.json");
    for (label, zero) in [("f1", -1.0), ("f2", -0.5), ("f3", -2.0)] {
        let f = fault(&d.faults, label);
        let g = gamma_sequence(&d.mcn.ctrl_graph, &apply_fault(&d.mcn.ctrl_schedule, f)).map_err(|e| e.to_string())?;
        let roots = g.numerator_polynomial().roots().map_err(|e| e.to_string())?;
        ensure(roots.len() == 1 && (roots[0] - Complex64::new(zero, 0.0)).norm() <= 1e-9, || {
            format!("{label}: roots {roots:?}, expected {zero}")
        })?;
        if label == "f1" {
            let value: BigRational = g.numerator_at(&r(-1, 1));
            ensure(value.is_zero(), || format!("f1 numerator at -1 is {value}"))?;
        }
    }
    Ok(())
}

fn example2_verdicts() -> Outcome {
    let d = fixture("example2_c.json");
    let tol = Tolerances::with_cancel(1e-2);
    let report = check_fault_tolerance(&d.mcn, &d.faults, Property::Controllable, &tol).map_err(|e| e.to_string())?;
    for (label, expected) in [("nominal", true), ("f1", false), ("f2", true), ("f3", false)] {
        let got = report.get(label).ok_or_else(|| format!("no report for {label}"))?.verdict;
        ensure(got == expected, || format!("{label}: controllable = {got}, expected {expected}"))?;
    }
    Ok(())
}

fn design() -> Outcome {
    let d = fixture("example2_c.json");
    let tol = Tolerances::with_cancel(1e-2);
    let faults = FaultSet::new([fault(&d.faults, "nominal").clone(), fault(&d.faults, "f3").clone()]);
    let outcome = design_weights(&d.mcn, &faults, Property::Controllable, &tol, &DesignOptions::default())
        .map_err(|e| e.to_string())?;
    let check =
        check_fault_tolerance(&outcome.mcn, &faults, Property::Controllable, &tol).map_err(|e| e.to_string())?;
    ensure(check.verdict, || "designed weights fail the checker".into())?;

    let mut fixed = d.mcn.clone();
    let edge = e("v4->v7");
    let w = fixed.ctrl_graph.weight(&edge).cloned().ok_or("v4->v7 missing")?;
    fixed.ctrl_graph.set_weight(&edge, w + r(1, 10));
    let check = check_fault_tolerance(&fixed, &faults, Property::Controllable, &tol).map_err(|e| e.to_string())?;
    ensure(check.verdict, || "W(v4,v7) + 0.1 fails the checker".into())?;

    let redesigned = fixture("redesigned.json");
    ensure(redesigned.mcn == fixed, || "redesigned fixture differs from the +0.1 fix".into())
}

fn oracle() -> Outcome {
    let mut rng = rng(0x5eed);
    let mut connected = 0;
    for instance in 0..250 {
        let (graph, schedule) = random_side(&mut rng);
        let gamma = gamma_sequence(&graph, &schedule).map_err(|e| e.to_string())?;
        let horizon = gamma.coefficients().len() + 3;
        let mut input = vec![BigRational::zero(); horizon];
        input[0] = BigRational::one();
        let out = slot_simulate(&graph, &schedule, &input);
        for (k, y) in out.iter().enumerate() {
            ensure(*y == gamma.get(k), || format!("instance {instance}: y[{k}] = {y}, gamma = {}", gamma.get(k)))?;
        }
        connected += usize::from(gamma.connected());
    }
    ensure(connected >= 50, || format!("only {connected} of 250 instances connected"))
}

fn discretization() -> Outcome {
    let d = fixture("example2_c.json");
    let ss = c2d_zoh(&d.mcn.plant, d.mcn.sampling_period()).map_err(|e| e.to_string())?;
    let poles = ss.poles().map_err(|e| e.to_string())?;
    for target in [-1.0, -2.0] {
        let close = poles.iter().filter(|p| (*p - Complex64::new(target, 0.0)).norm() <= 1e-2).count();
        ensure(close == 2, || format!("{close} poles near {target}: {poles:?}"))?;
    }

    let mut rng = rng(7);
    for instance in 0..100 {
        let n = rng.random_range(1..=5usize);
        let lambdas: Vec<f64> = (0..n).map(|i| -0.5 - 1.3 * i as f64 - rng.random_range(0.0..0.5)).collect();
        let v = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rng.random_range(-0.3..0.3) });
        let vinv = v.clone().try_inverse().ok_or("singular basis")?;
        let a = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambdas.clone())) * vinv;
        let b = vec![1.0; n];
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().copied().collect()).collect();
        let plant = ContinuousPlant::from_rows(&rows, &b, &c).map_err(|e| e.to_string())?;
        let t = rng.random_range(0.01..0.5);
        let ss = c2d_zoh(&plant, t).map_err(|e| e.to_string())?;
        let mut got: Vec<f64> = eigenvalues(ss.a()).map_err(|e| e.to_string())?.iter().map(|z| z.re).collect();
        let mut want: Vec<f64> = lambdas.iter().map(|l| (l * t).exp()).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            ensure((g - w).abs() <= 1e-9, || format!("instance {instance}: pole {g} vs {w}"))?;
        }
    }
    Ok(())
}

fn simulation() -> Outcome {
    let d = fixture("redesigned.json");
    let timeline = FaultTimeline::from_path(fixture_path("timeline_f3.json"), &d.faults).map_err(|e| e.to_string())?;
    let config = SimConfig {
        horizon: 500,
        tau: 10,
        lambda: 0.9,
        reference: Reference::Step { amplitude: 1.0, start: 0 },
        ..SimConfig::default()
    };
    let outcome = simulate(&d.mcn, &timeline, &config).map_err(|e| e.to_string())?;
    let s = &outcome.summary;
    ensure(!s.diverged && s.periods == 500, || format!("diverged at {:?}", s.divergence_period))?;
    ensure(!s.frozen(), || format!("control frozen: {:?}", s.freeze_events))?;
    for mode in ["nominal", "f3"] {
        let m = s.modes.iter().find(|m| m.fault == mode).ok_or_else(|| format!("no mode {mode}"))?;
        ensure(m.controller, || format!("no controller for {mode}: {:?}", m.error))?;
    }
    ensure(s.detection_latencies.len() == 2, || format!("switches {:?}", s.detection_latencies))?;
    ensure(s.max_latency().is_some_and(|l| l <= 25) && s.all_detected(), || {
        format!("latencies {:?}", s.detection_latencies)
    })
}

fn relaxations() -> Outcome {
    for name in VALID_FIXTURES {
        let d = fixture(name);
        for tol in [Tolerances::default(), Tolerances::with_cancel(1e-2)] {
            for (strong, weak) in
                [(Property::Controllable, Property::Stabilizable), (Property::Observable, Property::Detectable)]
            {
                let s = check_fault_tolerance(&d.mcn, &d.faults, strong, &tol).map_err(|e| e.to_string())?;
                let w = check_fault_tolerance(&d.mcn, &d.faults, weak, &tol).map_err(|e| e.to_string())?;
                for (rs, rw) in s.reports.iter().zip(&w.reports) {
                    ensure(!rs.verdict || rw.verdict, || format!("{name} [{}]: {strong} but not {weak}", rs.fault))?;
                }
            }
        }
    }
    Ok(())
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("single-path golden transfer functions 1/z and 1/z^2", Some(Duration::from_secs(1)), example1),
        ("multi-path gamma sequences for schedules a, b, c", Some(Duration::from_secs(1)), example2_gamma),
        ("fault zeros -1, -1/2, -2 and exact rational zero", None, fault_zeros),
        ("controllability verdicts at tol_cancel 1e-2", Some(Duration::from_secs(5)), example2_verdicts),
        ("weight design on {nominal, f3} and the +0.1 fix", Some(Duration::from_secs(5)), design),
        ("slot simulator matches gamma on 250 random DAGs", None, oracle),
        ("zero-order-hold poles", None, discretization),
        ("switching simulation with fault detection", Some(Duration::from_secs(30)), simulation),
        ("controllable implies stabilizable, observable implies detectable", None, relaxations),
    ];
    let total = criteria.len();
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = match (result, budget) {
            (Ok(()), Some(b)) if elapsed > b => Err(format!("took {elapsed:?}, budget {b:?}")),
            (r, _) => r,
        };
        match result {
            Ok(()) => println!("[PASS] {} {name} ({elapsed:.2?})", i + 1),
            Err(msg) => {
                failures += 1;
                println!("[FAIL] {} {name} ({elapsed:.2?}): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", total - failures, total);
    if failures > 0 {
        std::process::exit(1);
    }
}
