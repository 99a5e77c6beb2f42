//! Shared test fixtures: random inputs and independent reference computations.

#![allow(dead_code)]

pub mod ast_gen;
pub mod builder_check;
pub mod c3_oracle;
pub mod oracle;
pub mod random_graph;
pub mod random_snapshot;
