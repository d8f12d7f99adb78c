//! Workload generation, trace replay with I/O capture, the analytical cost
//! model, and reports.

pub mod cost_model;
pub mod report;
pub mod runner;
pub mod workload;
