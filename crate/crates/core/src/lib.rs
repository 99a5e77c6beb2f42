//! Driving scenes as property graphs.
//!
//! A [`builder`] turns a world snapshot into a [`model::SceneGraph`], the
//! [`pattern`] language names sub-scenes inside it, and [`metrics`] turns a
//! training corpus of graphs into coverage, complexity and competence scores.

pub mod builder;
pub mod catalog;
pub mod corpus;
pub mod geometry;
pub mod metrics;
pub mod model;
pub mod pattern;
