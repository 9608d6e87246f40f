//! Search-based stress testing for robot navigation software in a
//! deterministic 2D simulator.

pub mod cli;
pub mod generator;
pub mod geometry;
pub mod scenario;
pub mod simulator;
pub mod subjects;
pub mod testbench;
