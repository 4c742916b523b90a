//! What a graph and its schedule do to a signal: induced graph, routed
//! paths and their delays, the per-delay weight sums, the resulting network
//! transfer function, and a slot-level simulator.

mod gamma;
mod paths;
mod slots;

use std::ops::{Add, Mul};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

pub use gamma::{gamma_sequence, network_tf, GammaSequence};
pub use paths::{
    enumerate_paths, enumerate_paths_with_limit, induced_graph, jointly_connected, path_delay, Connectivity,
    InducedGraph, RoutedPath, DEFAULT_PATH_LIMIT,
};
pub use slots::{slot_simulate, slot_simulate_traced, BoundarySample, NodeSample, SlotSimulator, SlotTrace};

use crate::model::{FaultConfiguration, Schedule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("more than {limit} source-to-sink paths")]
    TooManyPaths { limit: usize },
    #[error("network transfer function is zero")]
    ZeroTransferFunction,
}

/// Scalars the network can carry: exact rationals, reals, complex values.
pub trait NetScalar: Clone + Zero + Add<Output = Self> + Mul<Output = Self> {
    fn from_weight(w: &BigRational) -> Self;
}

impl NetScalar for BigRational {
    fn from_weight(w: &BigRational) -> Self {
        w.clone()
    }
}

impl NetScalar for f64 {
    fn from_weight(w: &BigRational) -> Self {
        crate::model::weight_to_f64(w)
    }
}

impl NetScalar for Complex64 {
    fn from_weight(w: &BigRational) -> Self {
        Complex64::new(crate::model::weight_to_f64(w), 0.0)
    }
}

/// `η^f(k) = η(k) \ f` for every slot.
pub fn apply_fault(schedule: &Schedule, fault: &FaultConfiguration) -> Schedule {
    schedule.without(fault.edges())
}
