//! Frequency-secured market clearing.

pub mod branch;
pub mod conic;
pub mod constraints;
pub mod expr;
pub mod market;
pub mod model;
pub mod swing;
