//! Interior-point NLP solver with a sparse LDLᵀ backend.

mod derivatives;
mod ipm;
pub mod ldl;
mod problem;
mod types;
mod warm;

pub use derivatives::check_derivatives;
pub use ipm::solve;
pub use problem::{NlpProblem, INFINITE_BOUND};
pub use types::{IterationLog, SolveOutcome, SolveStatus, SolverOptions, StartDuals, StartPoint};
pub use warm::{warm_start, WARM_PUSH};
