//! Departure-time scheduling utility with departure, travel-time and
//! arrival components; closed-form and numeric optimizers; route choice;
//! randomized verification of the closed-form results.

pub mod analysis;
pub mod cli;
pub mod network;
pub mod rng;
pub mod solver;
pub mod su;
pub mod time;
