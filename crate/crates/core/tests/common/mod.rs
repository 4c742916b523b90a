#![allow(dead_code)]

use std::path::PathBuf;

use mcn_core::model::{ContinuousPlant, Edge, FaultConfiguration, FaultSet, Mcn, McnDescription, RadioGraph, Schedule};
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> McnDescription {
    McnDescription::from_path(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every fixture that describes a valid MCN.
pub const VALID_FIXTURES: &[&str] = &[
    "example1_forward.json",
    "example1_backward.json",
    "example2_a.json",
    "example2_b.json",
    "example2_c.json",
    "redesigned.json",
    "sensing_multipath.json",
];

pub fn e(s: &str) -> Edge {
    s.parse().unwrap()
}

pub fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

pub fn fault<'a>(faults: &'a FaultSet, label: &str) -> &'a FaultConfiguration {
    faults.get(label).unwrap_or_else(|| panic!("no fault {label}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random weighted DAG with up to 8 nodes and 14 edges and a random slot
/// schedule of period 1 to 4. Node names are shuffled so lexicographic order
/// differs from topological order. Some edges stay unscheduled.
pub fn random_side(rng: &mut impl Rng) -> (RadioGraph, Schedule) {
    let n = rng.random_range(2..=8usize);
    let mut names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    names.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if edges.len() < 14 && rng.random_bool(0.4) {
                let w = r(rng.random_range(1..=6), rng.random_range(1..=6));
                edges.push((Edge::new(names[i].clone(), names[j].clone()), w));
            }
        }
    }
    let period = rng.random_range(1..=4usize);
    let mut slots = vec![Vec::new(); period];
    for (edge, _) in &edges {
        if rng.random_bool(0.9) {
            slots[rng.random_range(0..period)].push(edge.clone());
        }
    }
    let graph = RadioGraph::new(names.clone(), edges, names[0].clone(), names[n - 1].clone());
    (graph, Schedule::new(slots, 0.01))
}

/// A random subset of the graph's edges as a fault.
pub fn random_fault(rng: &mut impl Rng, graph: &RadioGraph) -> FaultConfiguration {
    let edges: Vec<Edge> = graph.edges().filter(|_| rng.random_bool(0.3)).cloned().collect();
    FaultConfiguration::new("rand", edges)
}

/// One-hop sensing side `y -> c` matching a schedule of the given period.
pub fn trivial_sensing(period: usize) -> (RadioGraph, Schedule) {
    let g = RadioGraph::unweighted(["y", "c"], [e("y->c")], "y", "c");
    let mut slots = vec![Vec::new(); period];
    slots[0].push(e("y->c"));
    (g, Schedule::new(slots, 0.01))
}

/// A random controllable and observable plant of order 1 to 4 with
/// well-separated real modes.
pub fn random_plant(rng: &mut impl Rng) -> ContinuousPlant {
    let n = rng.random_range(1..=4usize);
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = -3.0 + 1.5 * i as f64 + rng.random_range(-0.2..0.2);
        if i + 1 < n {
            row[i + 1] = 1.0;
        }
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let mut c = vec![0.0; n];
    c[0] = 1.0;
    ContinuousPlant::from_rows(&a, &b, &c).unwrap()
}

pub fn mcn_with(plant: ContinuousPlant, ctrl: (RadioGraph, Schedule)) -> Mcn {
    let (obs_graph, obs_schedule) = trivial_sensing(ctrl.1.period());
    Mcn { plant, ctrl_graph: ctrl.0, ctrl_schedule: ctrl.1, obs_graph, obs_schedule }
}
