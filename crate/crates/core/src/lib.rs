pub mod bounds;
pub mod error;
pub mod eval;
pub mod learners;
pub mod mixture;
pub mod numeric;
pub mod problem;
pub mod verify;
