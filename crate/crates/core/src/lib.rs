//! Deterministic tabletop pick-and-place simulator and long-horizon task harness.

pub mod control;
pub mod dataset;
pub mod env;
pub mod eval;
pub mod policy;
pub mod seed;
pub mod tasks;
pub mod tokenizer;
pub mod world;
