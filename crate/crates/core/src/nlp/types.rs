use std::fmt;

use serde::{Deserialize, Serialize};

use super::problem::NlpProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Tolerance on the unscaled stationarity, feasibility and complementarity residuals.
    pub kkt_tol: f64,
    pub max_iter: usize,
    /// Barrier parameter for flat starts.
    pub mu_init: f64,
    /// Barrier parameter for warm starts.
    pub warm_mu_init: f64,
    /// Fraction-to-boundary factor.
    pub tau: f64,
    /// First nonzero Hessian regularization tried by the inertia correction.
    pub delta_min: f64,
    /// Emit the per-iteration line through `log` at info level.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kkt_tol: 1e-6,
            max_iter: 200,
            mu_init: 0.1,
            warm_mu_init: 1e-6,
            tau: 0.995,
            delta_min: 1e-8,
            verbose: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kkt_tol", self.kkt_tol),
            ("mu_init", self.mu_init),
            ("warm_mu_init", self.warm_mu_init),
            ("delta_min", self.delta_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver option {name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("solver option max_iter must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("solver option tau must lie in (0, 1), got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    InfeasibleDetected,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::InfeasibleDetected => "infeasible-detected",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of the solver trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub mu: f64,
    pub objective: f64,
    /// `||g(x)||∞`
    pub eq_violation: f64,
    /// `||max(h(x), 0)||∞`
    pub ineq_violation: f64,
    /// Primal step length that produced this iterate (0 for the start).
    pub alpha: f64,
    pub dual_infeasibility: f64,
    pub regularization: f64,
}

impl IterationLog {
    pub const HEADER: &'static str = "iter,mu,f,g_inf,h_viol_inf,alpha";

    pub fn line(&self) -> String {
        format!(
            "{},{:.3e},{:.9e},{:.3e},{:.3e},{:.3e}",
            self.iter, self.mu, self.objective, self.eq_violation, self.ineq_violation, self.alpha
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub lambda_eq: Vec<f64>,
    /// Inequality multipliers (nonnegative).
    pub lambda_ineq: Vec<f64>,
    /// Lower / upper bound multipliers (zero where the bound is absent).
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub trace: Vec<IterationLog>,
    pub layout: u64,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Initial primal point handed to the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint {
    pub x: Vec<f64>,
    /// Warm starts use a small barrier parameter and a tighter interior push.
    pub warm: bool,
    /// Multipliers to start from; least-squares estimates when absent.
    pub duals: Option<StartDuals>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartDuals {
    pub lambda_eq: Vec<f64>,
    pub lambda_ineq: Vec<f64>,
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
}

impl StartPoint {
    pub fn flat<P: NlpProblem + ?Sized>(problem: &P) -> Self {
        StartPoint { x: problem.initial_point(), warm: false, duals: None }
    }
}

impl From<Vec<f64>> for StartPoint {
    fn from(x: Vec<f64>) -> Self {
        StartPoint { x, warm: false, duals: None }
    }
}
