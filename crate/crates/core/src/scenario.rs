//! Multi-step simulation: fit, build, solve with warm starts, aggregate.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{load_profiles, FittedRow, ProfileTable};
use crate::market::{fit_cost_model, parse_bid_curves, CurveArchive, ZoneCostModel, DEFAULT_DELTA_RHO_INC};
use crate::network::{NetworkModel, ZoneKind};
use crate::nlp::{solve, warm_start, SolveOutcome, SolveStatus, SolverOptions, StartPoint};
use crate::opf::{build_problem, extract_solution, DispatchResult, ScenarioKind};

/// Relative tolerance for counting a bound or rating as binding.
pub const BINDING_REL_TOL: f64 = 1e-3;
/// Absolute floor (MW) on the binding tolerance, for bounds at zero.
pub const BINDING_ABS_FLOOR_MW: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    /// First timestep (inclusive).
    pub t_from: i64,
    /// End timestep (exclusive).
    pub t_to: i64,
    pub network: PathBuf,
    pub profiles: PathBuf,
    pub curves: PathBuf,
    pub delta_rho_inc: f64,
    pub solver: SolverOptions,
    pub out_dir: Option<PathBuf>,
    /// Contiguous chunks solved concurrently; each starts flat.
    pub chunks: usize,
}

impl RunConfig {
    pub fn new(
        scenario: ScenarioKind,
        range: Range<i64>,
        network: impl Into<PathBuf>,
        profiles: impl Into<PathBuf>,
        curves: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            scenario,
            t_from: range.start,
            t_to: range.end,
            network: network.into(),
            profiles: profiles.into(),
            curves: curves.into(),
            delta_rho_inc: DEFAULT_DELTA_RHO_INC,
            solver: SolverOptions::default(),
            out_dir: None,
            chunks: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_from >= self.t_to {
            return Err(Error::Config(format!(
                "empty timestep range: from {} is not below to {}",
                self.t_from, self.t_to
            )));
        }
        if !(self.delta_rho_inc > 0.0 && self.delta_rho_inc.is_finite()) {
            return Err(Error::Config(format!("delta_rho_inc must be positive, got {}", self.delta_rho_inc)));
        }
        if self.chunks == 0 {
            return Err(Error::Config("chunks must be at least 1".into()));
        }
        self.solver.validate()?;
        for (what, p) in [("network", &self.network), ("profiles", &self.profiles), ("curves", &self.curves)] {
            if !p.exists() {
                return Err(Error::Config(format!("{what} path {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            scenario: self.scenario,
            delta_rho_inc: self.delta_rho_inc,
            solver: self.solver.clone(),
            chunks: self.chunks,
        }
    }
}

/// Settings of a run over already loaded data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub scenario: ScenarioKind,
    pub delta_rho_inc: f64,
    pub solver: SolverOptions,
    pub chunks: usize,
}

impl RunOptions {
    pub fn new(scenario: ScenarioKind) -> Self {
        RunOptions { scenario, delta_rho_inc: DEFAULT_DELTA_RHO_INC, solver: SolverOptions::default(), chunks: 1 }
    }
}

/// Network, profiles and curves of a run.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub model: NetworkModel,
    pub profiles: ProfileTable,
    pub curves: CurveArchive,
}

impl RunInputs {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let model = NetworkModel::load(&config.network)?;
        let report = model.validate();
        if !report.is_empty() {
            return Err(Error::Data(format!("network failed validation:\n{report}")));
        }
        Ok(RunInputs { model, profiles: load_profiles(&config.profiles)?, curves: parse_bid_curves(&config.curves)? })
    }

    /// Profiles and curves every step of `range` needs.
    pub fn check_coverage(&self, range: Range<i64>) -> Result<()> {
        let m = &self.model;
        let ids = m.loads.iter().map(|l| l.profile.as_str()).chain(m.renewables.iter().map(|r| r.profile.as_str()));
        self.profiles.check_coverage(ids, range.start, range.end)?;
        for z in m.zones.iter().filter(|z| z.kind == ZoneKind::Onshore) {
            for t in range.clone() {
                if self.curves.get(&z.id, t).is_none() {
                    return Err(Error::MissingCurves { zone: z.id.clone(), timestep: t });
                }
            }
        }
        Ok(())
    }
}

/// Fits the cost model of every onshore zone at `timestep`.
pub fn fit_step_costs(
    model: &NetworkModel,
    curves: &CurveArchive,
    timestep: i64,
    delta_rho_inc: f64,
) -> Result<BTreeMap<String, ZoneCostModel>> {
    let mut out = BTreeMap::new();
    for z in model.zones.iter().filter(|z| z.kind == ZoneKind::Onshore) {
        let c = curves.get(&z.id, timestep).ok_or_else(|| Error::MissingCurves { zone: z.id.clone(), timestep })?;
        out.insert(z.id.clone(), fit_cost_model(&c.supply, &c.demand, delta_rho_inc)?);
    }
    Ok(out)
}

/// Fits every zone-hour of the archive, optionally limited to `range`.
/// Failures are kept as rows rather than aborting.
pub fn fit_archive(curves: &CurveArchive, delta_rho_inc: f64, range: Option<Range<i64>>) -> Vec<FittedRow> {
    curves
        .iter()
        .filter(|(_, t, _)| range.as_ref().is_none_or(|r| r.contains(t)))
        .map(|(zone, timestep, c)| FittedRow {
            zone: zone.to_string(),
            timestep,
            model: fit_cost_model(&c.supply, &c.demand, delta_rho_inc).map_err(|e| e.to_string()),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepStatus {
    Converged,
    IterationLimit,
    InfeasibleDetected,
    NumericalFailure,
    /// The zonal cost models could not be fitted.
    FitFailed,
}

impl StepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StepStatus::Converged => "converged",
            StepStatus::IterationLimit => "iteration-limit",
            StepStatus::InfeasibleDetected => "infeasible-detected",
            StepStatus::NumericalFailure => "numerical-failure",
            StepStatus::FitFailed => "fit-failed",
        }
    }
}

impl From<SolveStatus> for StepStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Converged => StepStatus::Converged,
            SolveStatus::IterationLimit => StepStatus::IterationLimit,
            SolveStatus::InfeasibleDetected => StepStatus::InfeasibleDetected,
            SolveStatus::NumericalFailure => StepStatus::NumericalFailure,
        }
    }
}

impl std::fmt::Display for StepStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one step. `dispatch` is present only for converged steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestepResult {
    pub timestep: i64,
    pub status: StepStatus,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub warm_started: bool,
    pub message: Option<String>,
    pub dispatch: Option<DispatchResult>,
}

impl TimestepResult {
    pub fn converged(&self) -> bool {
        self.status == StepStatus::Converged
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurtailmentStats {
    pub mean_pu: f64,
    pub max_pu: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BindingCount {
    pub at_min: usize,
    pub at_max: usize,
}

/// Run aggregates over converged steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub steps: usize,
    pub converged: usize,
    pub failed: usize,
    pub mean_wall_time_s: f64,
    pub median_wall_time_s: f64,
    pub max_wall_time_s: f64,
    pub mean_iterations: f64,
    /// Per renewable unit.
    pub curtailment: BTreeMap<String, CurtailmentStats>,
    /// Σ (1 − γ)·availability over units and steps, MWh.
    pub curtailed_energy_mwh: f64,
    /// Per zone, prices sorted from highest to lowest.
    pub price_duration: BTreeMap<String, Vec<f64>>,
    /// Per zone, steps with P_N on its fitted bound (market-coupled scenarios).
    pub pn_bound_binding: BTreeMap<String, BindingCount>,
    /// Steps with any DC line or converter at its rating.
    pub mtdc_binding_steps: usize,
}

/// Ids of the elements that results refer to, in model order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementIds {
    pub zones: Vec<String>,
    pub renewables: Vec<String>,
    pub ac_branches: Vec<String>,
    pub dc_lines: Vec<String>,
    pub converters: Vec<String>,
}

impl ElementIds {
    pub fn of(model: &NetworkModel) -> Self {
        let ids = |v: Vec<&String>| v.into_iter().cloned().collect();
        ElementIds {
            zones: ids(model.zones.iter().map(|z| &z.id).collect()),
            renewables: ids(model.renewables.iter().map(|r| &r.id).collect()),
            ac_branches: ids(model.ac_branches.iter().map(|b| &b.id).collect()),
            dc_lines: ids(model.dc_lines.iter().map(|l| &l.id).collect()),
            converters: ids(model.converters.iter().map(|c| &c.id).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: ScenarioKind,
    pub t_from: i64,
    pub t_to: i64,
    pub elements: ElementIds,
    pub steps: Vec<TimestepResult>,
    pub indicators: Indicators,
    pub config: Option<RunConfig>,
}

impl RunSummary {
    /// `100·(1 − γ)` of one renewable unit per step; `None` on failed steps.
    pub fn curtailment_percent(&self, unit: usize) -> Vec<(i64, Option<f64>)> {
        self.series(|d| 100.0 * d.curtailment[unit])
    }

    pub fn price_series(&self, zone: usize) -> Vec<(i64, Option<f64>)> {
        self.series(|d| d.zones[zone].price)
    }

    pub fn pn_series(&self, zone: usize) -> Vec<(i64, Option<f64>)> {
        self.series(|d| d.zones[zone].p_n)
    }

    fn series(&self, f: impl Fn(&DispatchResult) -> f64) -> Vec<(i64, Option<f64>)> {
        self.steps.iter().map(|s| (s.timestep, s.dispatch.as_ref().map(&f))).collect()
    }
}

/// Loads the inputs named by `config` and runs its range.
pub fn run_range(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let inputs = RunInputs::load(config)?;
    let mut summary = run_loaded(&inputs, config.t_from..config.t_to, &config.options())?;
    summary.config = Some(config.clone());
    Ok(summary)
}

/// Runs `range` over loaded inputs. Steps that fail are recorded and the run
/// continues; missing data aborts before any step is solved.
pub fn run_loaded(inputs: &RunInputs, range: Range<i64>, opts: &RunOptions) -> Result<RunSummary> {
    if range.start >= range.end {
        return Err(Error::Config(format!("empty timestep range {}..{}", range.start, range.end)));
    }
    if opts.chunks == 0 {
        return Err(Error::Config("chunks must be at least 1".into()));
    }
    opts.solver.validate()?;
    inputs.check_coverage(range.clone())?;

    let steps: Vec<i64> = range.clone().collect();
    let chunks = opts.chunks.min(steps.len());
    let results: Vec<TimestepResult> = if chunks == 1 {
        run_chunk(inputs, &steps, opts)
    } else {
        let size = steps.len().div_ceil(chunks);
        std::thread::scope(|scope| {
            let handles: Vec<_> =
                steps.chunks(size).map(|part| scope.spawn(move || run_chunk(inputs, part, opts))).collect();
            handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
        })
    };

    let indicators = compute_indicators(&inputs.model, opts.scenario, &results).unwrap_or_else(|_| Indicators {
        steps: results.len(),
        failed: results.len(),
        ..Indicators::default()
    });
    Ok(RunSummary {
        scenario: opts.scenario,
        t_from: range.start,
        t_to: range.end,
        elements: ElementIds::of(&inputs.model),
        steps: results,
        indicators,
        config: None,
    })
}

fn run_chunk(inputs: &RunInputs, steps: &[i64], opts: &RunOptions) -> Vec<TimestepResult> {
    let mut previous: Option<SolveOutcome> = None;
    let mut out = Vec::with_capacity(steps.len());
    for &t in steps {
        let (result, outcome) = run_step(inputs, t, opts, previous.as_ref());
        previous = outcome.filter(SolveOutcome::converged);
        out.push(result);
    }
    out
}

/// Solves one step, warm-starting from `previous` when given. A warm start
/// that fails is retried once from the flat point; the reported iteration
/// count covers both attempts.
pub fn run_step(
    inputs: &RunInputs,
    timestep: i64,
    opts: &RunOptions,
    previous: Option<&SolveOutcome>,
) -> (TimestepResult, Option<SolveOutcome>) {
    let started = Instant::now();
    let failed = |status: StepStatus, iterations: usize, warm: bool, message: String| {
        log::warn!("step {timestep}: {status}: {message}");
        TimestepResult {
            timestep,
            status,
            iterations,
            wall_time_s: started.elapsed().as_secs_f64(),
            warm_started: warm,
            message: Some(message),
            dispatch: None,
        }
    };

    let costs = match fit_step_costs(&inputs.model, &inputs.curves, timestep, opts.delta_rho_inc) {
        Ok(c) => c,
        Err(e) => return (failed(StepStatus::FitFailed, 0, false, e.to_string()), None),
    };
    let step_inputs = inputs.profiles.step_inputs(timestep);
    let problem = match build_problem(&inputs.model, &costs, &step_inputs, opts.scenario) {
        Ok(p) => p,
        Err(e) => return (failed(StepStatus::NumericalFailure, 0, false, e.to_string()), None),
    };
    let start = match previous {
        Some(prev) => warm_start(prev, &problem),
        None => StartPoint::flat(&problem),
    };
    let mut outcome = solve(&problem, &start, &opts.solver);
    let mut start = start;
    if !outcome.converged() && start.warm {
        log::debug!("step {timestep}: warm start {}, retrying flat", outcome.status);
        let spent = outcome.iterations;
        start = StartPoint::flat(&problem);
        outcome = solve(&problem, &start, &opts.solver);
        outcome.iterations += spent;
    }
    if !outcome.converged() {
        let msg = format!("solver stopped with KKT residual {:e}", outcome.kkt_residual);
        return (failed(outcome.status.into(), outcome.iterations, start.warm, msg), None);
    }
    match extract_solution(&problem, &outcome) {
        Ok(dispatch) => {
            let wall = started.elapsed().as_secs_f64();
            log::debug!("step {timestep}: converged in {} iterations, {wall:.3} s", outcome.iterations);
            let result = TimestepResult {
                timestep,
                status: StepStatus::Converged,
                iterations: outcome.iterations,
                wall_time_s: wall,
                warm_started: start.warm,
                message: None,
                dispatch: Some(dispatch),
            };
            (result, Some(outcome))
        }
        Err(e) => (failed(StepStatus::NumericalFailure, outcome.iterations, start.warm, e.to_string()), None),
    }
}

fn binding(value: f64, bound: f64) -> bool {
    (value - bound).abs() <= (BINDING_REL_TOL * bound.abs()).max(BINDING_ABS_FLOOR_MW)
}

/// Aggregates over converged steps. Errors with [`Error::EmptyRun`] when none converged.
pub fn compute_indicators(
    model: &NetworkModel,
    scenario: ScenarioKind,
    results: &[TimestepResult],
) -> Result<Indicators> {
    let done: Vec<&DispatchResult> = results.iter().filter_map(|r| r.dispatch.as_ref()).collect();
    if done.is_empty() {
        return Err(Error::EmptyRun);
    }
    let n = done.len() as f64;
    let mut walls: Vec<f64> = results.iter().filter(|r| r.converged()).map(|r| r.wall_time_s).collect();
    walls.sort_by(f64::total_cmp);
    let median = if walls.len() % 2 == 1 {
        walls[walls.len() / 2]
    } else {
        0.5 * (walls[walls.len() / 2 - 1] + walls[walls.len() / 2])
    };

    let mut ind = Indicators {
        steps: results.len(),
        converged: done.len(),
        failed: results.len() - done.len(),
        mean_wall_time_s: walls.iter().sum::<f64>() / n,
        median_wall_time_s: median,
        max_wall_time_s: walls.last().copied().unwrap_or(0.0),
        mean_iterations: results.iter().filter(|r| r.converged()).map(|r| r.iterations as f64).sum::<f64>() / n,
        ..Indicators::default()
    };

    for (k, unit) in model.renewables.iter().enumerate() {
        let values: Vec<f64> = done.iter().map(|d| d.curtailment[k]).collect();
        ind.curtailment.insert(
            unit.id.clone(),
            CurtailmentStats {
                mean_pu: values.iter().sum::<f64>() / n,
                max_pu: values.iter().copied().fold(0.0, f64::max),
            },
        );
    }
    ind.curtailed_energy_mwh =
        done.iter().map(|d| d.curtailment.iter().zip(&d.renewable_available).map(|(c, a)| c * a).sum::<f64>()).sum();

    for (k, z) in model.zones.iter().enumerate() {
        let mut prices: Vec<f64> = done.iter().map(|d| d.zones[k].price).collect();
        prices.sort_by(|a, b| b.total_cmp(a));
        ind.price_duration.insert(z.id.clone(), prices);
        let mut count = BindingCount::default();
        if scenario.is_market_coupled() {
            for d in &done {
                let o = &d.zones[k];
                if binding(o.p_n, o.pn_min) {
                    count.at_min += 1;
                }
                if binding(o.p_n, o.pn_max) {
                    count.at_max += 1;
                }
            }
        }
        ind.pn_bound_binding.insert(z.id.clone(), count);
    }

    ind.mtdc_binding_steps = done
        .iter()
        .filter(|d| {
            let lines = model.dc_lines.iter().enumerate().any(|(k, l)| {
                let flow = d.dc_line_p_from[k].abs().max(d.dc_line_p_to[k].abs());
                flow >= l.p_rating - (BINDING_REL_TOL * l.p_rating).max(BINDING_ABS_FLOOR_MW)
            });
            let converters = model.converters.iter().enumerate().any(|(k, c)| {
                let s = d.converter_p_ac[k].hypot(d.converter_q_ac[k]);
                s >= c.s_rating - (BINDING_REL_TOL * c.s_rating).max(BINDING_ABS_FLOOR_MW)
            });
            lines || converters
        })
        .count();
    Ok(ind)
}

#[cfg(test)]
mod tests;
