//! Control loops closed over scheduled multi-hop radio networks.
//!
//! A controller node sends its command through a weighted multi-path radio
//! graph to the actuator, and the sensor reading travels through a second
//! graph back to the controller. Each graph follows a periodic slot
//! schedule. This crate computes the transfer function each network imposes,
//! decides controllability, observability, stabilizability and detectability
//! of the closed loop under sets of link failures, designs routing weights
//! that keep those properties under every failure of a given set, and
//! simulates the switching closed loop with residual-based failure detection.
//!
//! Modules, bottom up: [`model`], [`lti`], [`network`], [`analysis`],
//! [`design`], [`adaptive`], [`closed_loop`].

pub mod adaptive;
pub mod analysis;
pub mod closed_loop;
pub mod design;
pub mod lti;
pub mod model;
pub mod network;
pub mod report;
