//! Exact and simulated evaluation of expected excess risk, minimax sweeps
//! and rate fitting.

pub mod budget;
pub mod compare;
pub mod exact;
pub mod mc;
pub mod minimax;
pub mod rates;
