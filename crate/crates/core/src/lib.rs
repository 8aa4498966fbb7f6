//! Market-coupled optimal power flow for hybrid AC/DC grids with offshore
//! wind hubs.
//!
//! Each onshore price zone carries a quadratic cost of generation in its net
//! position, fitted hour by hour from day-ahead bid curves. The per-step AC/DC
//! OPF either prices zones at fixed input prices (SI) or lets the zonal
//! prices follow the net positions (SII, and SIII without wind). A sparse
//! primal-dual interior-point solver handles the resulting NLP, and the
//! scenario runner chains steps with warm starts.
//!
//! ```no_run
//! use zonal_opf::{run_range, RunConfig, ScenarioKind};
//!
//! let config = RunConfig::new(ScenarioKind::SII, 5750..6000, "net.json", "profiles.csv", "curves/");
//! let summary = run_range(&config)?;
//! println!("{} of {} steps converged", summary.indicators.converged, summary.steps.len());
//! # Ok::<(), zonal_opf::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod desk;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod market;
pub mod network;
pub mod nlp;
pub mod opf;
pub mod scenario;

pub use error::{Error, Result};
pub use io::{emit_results, load_profiles, ProfileTable};
pub use market::{fit_cost_model, parse_bid_curves, BidCurve, CurveArchive, ZoneCostModel};
pub use network::{validate_network, zone_net_position, NetworkModel, ValidationReport};
pub use nlp::{solve, NlpProblem, SolveOutcome, SolveStatus, SolverOptions, StartPoint};
pub use opf::{build_problem, extract_solution, DispatchResult, ScenarioKind};
pub use scenario::{run_range, RunConfig, RunInputs, RunOptions, RunSummary, StepStatus};
