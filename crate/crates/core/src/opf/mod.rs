//! Per-step optimal power flow formulation over the hybrid AC/DC network.
//!
//! Powers inside the NLP are per unit on the network's MVA base; the
//! objective is in EUR/h multiplied by [`OBJ_SCALE`].

mod build;
mod layout;
mod rows;
mod solution;

pub use build::{build_problem, objective_si, objective_sii, Objective, OpfProblem, StepInputs};
pub use layout::{DecisionLayout, ScenarioKind};
pub use solution::{extract_solution, DispatchResult, ZoneOutcome, NO_AVAILABILITY_MW};

/// Scale from EUR/h to objective units.
pub const OBJ_SCALE: f64 = 1e-4;
/// Weight on squared reactive injections (scaled objective per pu²). Reactive
/// dispatch is otherwise free at generator and converter terminals sharing a
/// node, which leaves the KKT matrix near singular.
pub const Q_REGULARIZATION: f64 = 1e-6;
/// Smoothing of `|P|` in the converter loss, per unit.
pub const LOSS_EPSILON: f64 = 1e-2;

#[cfg(test)]
mod tests;
