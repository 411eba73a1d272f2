//! Cluster-level HVAC flexibility testbed.
//!
//! A synchronous co-simulation hub drives a fleet of physics-based office
//! building models through a common unit contract, exposes the cluster as a
//! Gym-style reinforcement-learning environment, and trains a from-scratch
//! soft actor-critic agent to keep aggregate HVAC power under a demand
//! threshold while holding zone temperatures inside a comfort band.

// Validation code writes `!(v > 0.0)` on purpose: unlike `v <= 0.0`, the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod buildings;
pub mod config;
pub mod env;
pub mod experiment;
pub mod hub;
pub mod plot;
pub mod sac;
pub mod seeds;
pub mod unit;
