//! Crater-based terrain-relative navigation for lunar orbit: catalog
//! handling, crater detection, catalog matching, a feature-augmenting EKF
//! and a Monte-Carlo closed-loop simulator.

// `!(x > 0.0)` is how validation rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod detect;
pub mod ekf;
pub mod geometry;
pub mod matching;
pub mod sim;
pub mod run;
