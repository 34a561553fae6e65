//! Command-line front end for the block solvers: problem configuration,
//! convergence-history files, bound reports and SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod history;
pub mod plot;
pub mod report;
