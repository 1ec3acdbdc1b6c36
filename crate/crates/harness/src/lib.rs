//! Experiment harness: configuration, solver dispatch, metrics and rendering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod methods;
pub mod metrics;
pub mod render;
