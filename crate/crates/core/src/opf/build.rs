use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::layout::{DecisionLayout, ScenarioKind};
use super::rows::{BranchEnds, Kernel, RowSet};
use super::{LOSS_EPSILON, OBJ_SCALE, Q_REGULARIZATION};
use crate::error::{Error, Result};
use crate::market::{offshore_cost_model, ZoneCostModel};
use crate::network::{AcNodeKind, NetworkModel, ZoneKind};
use crate::nlp::{NlpProblem, INFINITE_BOUND};

/// Profile values (MW) of one time step, keyed by profile id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInputs {
    pub timestep: i64,
    pub values: BTreeMap<String, f64>,
}

impl StepInputs {
    pub fn new(timestep: i64) -> Self {
        StepInputs { timestep, values: BTreeMap::new() }
    }

    pub fn with(mut self, profile: impl Into<String>, mw: f64) -> Self {
        self.values.insert(profile.into(), mw);
        self
    }

    pub fn get(&self, profile: &str) -> Result<f64> {
        self.values
            .get(profile)
            .copied()
            .ok_or_else(|| Error::MissingProfile { profile: profile.to_string(), timestep: self.timestep })
    }
}

/// Separable objective `Σ c_i x_i + Σ q_i x_i²` in scaled units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Objective {
    pub linear: Vec<(usize, f64)>,
    pub quadratic: Vec<(usize, f64)>,
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.linear.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
            + self.quadratic.iter().map(|&(i, q)| q * x[i] * x[i]).sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        for &(i, c) in &self.linear {
            g[i] += c;
        }
        for &(i, q) in &self.quadratic {
            g[i] += 2.0 * q * x[i];
        }
    }

    /// Objective in EUR/h.
    pub fn value_eur(&self, x: &[f64]) -> f64 {
        self.value(x) / OBJ_SCALE
    }
}

/// Fixed-price dispatch cost: `Σ ρ_zone·P_g + Σ ρ_zone·γ·P_rg`.
///
/// Offshore zones are priced at zero whether or not they appear in
/// `zone_prices`; every other zone hosting a generator or renewable needs a price.
pub fn objective_si(
    model: &NetworkModel,
    layout: &DecisionLayout,
    zone_prices: &BTreeMap<String, f64>,
    availability_mw: &[f64],
) -> Result<Objective> {
    let price = |zone: &str| -> Result<f64> {
        match model.zone(zone) {
            Some(z) if z.kind == ZoneKind::Offshore => Ok(0.0),
            _ => zone_prices.get(zone).copied().ok_or_else(|| Error::MissingZonePrice(zone.to_string())),
        }
    };
    let mut obj = Objective::default();
    for (k, g) in model.generators.iter().enumerate() {
        obj.linear.push((layout.pg.start + k, OBJ_SCALE * model.base_mva * price(&g.zone)?));
    }
    for (k, r) in model.renewables.iter().enumerate() {
        let rho = price(&r.zone)?;
        if rho != 0.0 {
            obj.linear.push((layout.gamma.start + k, OBJ_SCALE * rho * availability_mw[k]));
        }
    }
    Ok(obj)
}

/// Summed cost of generation `Σ α_m P_N,m² + β_m P_N,m` over the zonal net positions.
pub fn objective_sii(layout: &DecisionLayout, zone_models: &[ZoneCostModel], base_mva: f64) -> Objective {
    debug_assert_eq!(layout.zone_pn.len(), zone_models.len());
    let mut obj = Objective::default();
    for (var, m) in layout.zone_pn.clone().zip(zone_models) {
        if m.beta != 0.0 {
            obj.linear.push((var, OBJ_SCALE * m.beta * base_mva));
        }
        if m.alpha != 0.0 {
            obj.quadratic.push((var, OBJ_SCALE * m.alpha * base_mva * base_mva));
        }
    }
    obj
}

/// One time step's NLP over a network.
#[derive(Debug, Clone)]
pub struct OpfProblem<'a> {
    pub(crate) model: &'a NetworkModel,
    pub(crate) scenario: ScenarioKind,
    pub(crate) timestep: i64,
    pub(crate) layout: DecisionLayout,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    pub(crate) start: Vec<f64>,
    pub(crate) objective: Objective,
    /// The objective without the reactive regularization.
    pub(crate) market_objective: Objective,
    pub(crate) eq: RowSet,
    pub(crate) ineq: RowSet,
    hess_pattern: Vec<(usize, usize)>,
    obj_hess: Vec<(usize, usize, f64)>,
    pub(crate) load_mw: Vec<f64>,
    pub(crate) available_mw: Vec<f64>,
    /// Per zone, in model order.
    pub(crate) zone_models: Vec<ZoneCostModel>,
    pub(crate) zone_prices: Vec<f64>,
    pub(crate) zone_balance_rows: Vec<Option<usize>>,
    /// Variables under a smoothed `|·|`.
    kinks: Vec<usize>,
}

impl<'a> OpfProblem<'a> {
    pub fn layout(&self) -> &DecisionLayout {
        &self.layout
    }

    pub fn scenario(&self) -> ScenarioKind {
        self.scenario
    }

    pub fn timestep(&self) -> i64 {
        self.timestep
    }

    pub fn model(&self) -> &'a NetworkModel {
        self.model
    }

    pub fn objective_terms(&self) -> &Objective {
        &self.objective
    }

    pub fn eq_label(&self, row: usize) -> &str {
        self.eq.label(row)
    }

    pub fn ineq_label(&self, row: usize) -> &str {
        self.ineq.label(row)
    }

    /// Renewable availability (MW) used in this step, after SIII zeroing and capping.
    pub fn available_mw(&self) -> &[f64] {
        &self.available_mw
    }

    pub fn zone_models(&self) -> &[ZoneCostModel] {
        &self.zone_models
    }

    /// Index of the `P_G − P_D − P_N = 0` row of each zone (market-coupled scenarios only).
    pub fn zone_balance_rows(&self) -> &[Option<usize>] {
        &self.zone_balance_rows
    }
}

impl NlpProblem for OpfProblem<'_> {
    fn num_vars(&self) -> usize {
        self.layout.len()
    }
    fn num_eq(&self) -> usize {
        self.eq.len()
    }
    fn num_ineq(&self) -> usize {
        self.ineq.len()
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }
    /// Stops at the first sign change of a smoothed `|P|` that starts
    /// outside its smoothing band.
    fn step_limit(&self, x: &[f64], dx: &[f64]) -> f64 {
        self.kinks
            .iter()
            .filter(|&&k| x[k].abs() > LOSS_EPSILON && x[k] * (x[k] + dx[k]) < 0.0)
            .map(|&k| -x[k] / dx[k])
            .fold(1.0, f64::min)
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.objective.gradient(x, grad)
    }
    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        self.eq.values(x, out)
    }
    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        self.ineq.values(x, out)
    }
    fn eq_jacobian_structure(&self) -> Vec<(usize, usize)> {
        self.eq.jacobian_structure()
    }
    fn eq_jacobian_values(&self, x: &[f64], vals: &mut [f64]) {
        self.eq.jacobian_values(x, vals)
    }
    fn ineq_jacobian_structure(&self) -> Vec<(usize, usize)> {
        self.ineq.jacobian_structure()
    }
    fn ineq_jacobian_values(&self, x: &[f64], vals: &mut [f64]) {
        self.ineq.jacobian_values(x, vals)
    }
    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        self.hess_pattern.clone()
    }
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda_eq: &[f64], lambda_ineq: &[f64], vals: &mut [f64]) {
        vals.fill(0.0);
        for &(_, slot, q) in &self.obj_hess {
            vals[slot] += obj_factor * 2.0 * q;
        }
        self.eq.add_hessian(x, lambda_eq, vals);
        self.ineq.add_hessian(x, lambda_ineq, vals);
    }
    fn initial_point(&self) -> Vec<f64> {
        self.start.clone()
    }
    fn layout_fingerprint(&self) -> u64 {
        self.layout.fingerprint()
    }
}

/// Assembles the NLP of one time step.
///
/// `costs` holds a model for every onshore zone; SI prices each zone at the
/// model's `rho_eq`. Offshore zones always use the zero-cost model.
pub fn build_problem<'a>(
    model: &'a NetworkModel,
    costs: &BTreeMap<String, ZoneCostModel>,
    inputs: &StepInputs,
    scenario: ScenarioKind,
) -> Result<OpfProblem<'a>> {
    check_bounds(model)?;
    let report = model.validate();
    if !report.is_empty() {
        return Err(Error::Data(format!("network failed validation:\n{report}")));
    }
    let base = model.base_mva;

    let mut zone_models = Vec::with_capacity(model.zones.len());
    for z in &model.zones {
        zone_models.push(match z.kind {
            ZoneKind::Offshore => offshore_cost_model(model.zone_renewable_capacity(&z.id)),
            ZoneKind::Onshore => *costs.get(&z.id).ok_or_else(|| Error::MissingCostModel(z.id.clone()))?,
        });
        let m = zone_models.last().expect("pushed");
        if m.pn_min > m.pn_max {
            return Err(Error::InfeasibleBounds(format!(
                "zone {}: pn_min {} above pn_max {}",
                z.id, m.pn_min, m.pn_max
            )));
        }
    }
    let zone_prices: Vec<f64> = zone_models.iter().map(|m| m.rho_eq).collect();

    let load_mw = model.loads.iter().map(|l| inputs.get(&l.profile)).collect::<Result<Vec<_>>>()?;
    let mut available_mw = Vec::with_capacity(model.renewables.len());
    for r in &model.renewables {
        let v = inputs.get(&r.profile)?;
        available_mw.push(if scenario == ScenarioKind::SIII { 0.0 } else { v.clamp(0.0, r.capacity) });
    }

    let layout = DecisionLayout::new(model, scenario);
    let n = layout.len();
    let mut lower = vec![-INFINITE_BOUND; n];
    let mut upper = vec![INFINITE_BOUND; n];
    let mut start = vec![0.0; n];
    let mut set = |i: usize, lo: f64, hi: f64, x0: f64| {
        lower[i] = lo;
        upper[i] = hi;
        start[i] = x0;
    };

    for (k, node) in model.ac_nodes.iter().enumerate() {
        set(layout.vm.start + k, node.v_min, node.v_max, 1.0);
        set(layout.va.start + k, -PI, PI, 0.0);
    }
    for (k, node) in model.dc_nodes.iter().enumerate() {
        set(layout.vdc.start + k, node.v_min, node.v_max, 1.0);
    }
    for (k, g) in model.generators.iter().enumerate() {
        set(layout.pg.start + k, g.p_min / base, g.p_max / base, 0.5 * (g.p_min + g.p_max) / base);
        set(layout.qg.start + k, g.q_min / base, g.q_max / base, 0.0f64.clamp(g.q_min / base, g.q_max / base));
    }
    for k in 0..model.renewables.len() {
        set(layout.gamma.start + k, 0.0, 1.0, 1.0);
    }
    for (k, c) in model.converters.iter().enumerate() {
        let s = c.s_rating / base;
        set(layout.conv_p_ac.start + k, -s, s, 0.0);
        set(layout.conv_q_ac.start + k, -s, s, 0.0);
        set(layout.conv_p_dc.start + k, -2.0 * s, 2.0 * s, 0.0);
    }
    for (line, var) in model.dc_lines.iter().zip(&layout.dc_flow) {
        if let Some(v) = *var {
            set(v, -line.p_rating / base, line.p_rating / base, 0.0);
        }
    }
    for (k, z) in model.zones.iter().enumerate().take(layout.zone_pn.len()) {
        let m = &zone_models[k];
        set(layout.zone_pn.start + k, m.pn_min / base, m.pn_max / base, 0.0);
        let gen0: f64 = model
            .generators
            .iter()
            .filter(|g| g.zone == z.id)
            .map(|g| 0.5 * (g.p_min + g.p_max))
            .sum::<f64>()
            + model.renewables.iter().zip(&available_mw).filter(|(r, _)| r.zone == z.id).map(|(_, a)| a).sum::<f64>();
        let dem0: f64 = model.loads.iter().zip(&load_mw).filter(|(l, _)| l.zone == z.id).map(|(_, d)| d).sum();
        set(layout.zone_pg.start + k, -INFINITE_BOUND, INFINITE_BOUND, gen0 / base);
        set(layout.zone_pd.start + k, -INFINITE_BOUND, INFINITE_BOUND, dem0 / base);
    }

    let ac_index = model.ac_index();
    let dc_index = model.dc_index();
    let mut eq = RowSet::default();
    let mut ineq = RowSet::default();

    // AC nodal balances
    let mut branch_ends: Vec<Vec<(usize, bool)>> = vec![Vec::new(); model.ac_nodes.len()];
    for (k, br) in model.ac_branches.iter().enumerate() {
        branch_ends[ac_index[br.from.as_str()]].push((k, true));
        branch_ends[ac_index[br.to.as_str()]].push((k, false));
    }
    let admittances: Vec<BranchEnds> = model.ac_branches.iter().map(|b| BranchEnds::new(b.r, b.x, b.b)).collect();
    let branch_vars = |k: usize, from_end: bool| -> [usize; 4] {
        let br = &model.ac_branches[k];
        let (a, b) = if from_end {
            (ac_index[br.from.as_str()], ac_index[br.to.as_str()])
        } else {
            (ac_index[br.to.as_str()], ac_index[br.from.as_str()])
        };
        [layout.vm.start + a, layout.vm.start + b, layout.va.start + a, layout.va.start + b]
    };

    for (i, node) in model.ac_nodes.iter().enumerate() {
        let (mut pd, mut qd) = (0.0, 0.0);
        for (l, mw) in model.loads.iter().zip(&load_mw) {
            if l.node == node.id {
                pd += mw / base;
                qd += l.reactive_mvar(*mw) / base;
            }
        }
        for reactive in [false, true] {
            let kind = if reactive { "q" } else { "p" };
            eq.row(format!("{kind}_balance[{}]", node.id), if reactive { -qd } else { -pd });
            for (k, g) in model.generators.iter().enumerate() {
                if g.node == node.id {
                    eq.lin(if reactive { layout.qg.start + k } else { layout.pg.start + k }, 1.0);
                }
            }
            if !reactive {
                for (k, r) in model.renewables.iter().enumerate() {
                    if r.node == node.id {
                        eq.lin(layout.gamma.start + k, available_mw[k] / base);
                    }
                }
            }
            for (k, c) in model.converters.iter().enumerate() {
                if c.ac_node == node.id {
                    eq.lin(if reactive { layout.conv_q_ac.start + k } else { layout.conv_p_ac.start + k }, 1.0);
                }
            }
            for &(k, from_end) in &branch_ends[i] {
                let kernel = if reactive { admittances[k].q() } else { admittances[k].p() };
                eq.term(kernel, &branch_vars(k, from_end), -1.0);
            }
        }
    }

    // DC nodal balances
    for (i, node) in model.dc_nodes.iter().enumerate() {
        eq.row(format!("dc_balance[{}]", node.id), 0.0);
        for (k, r) in model.renewables.iter().enumerate() {
            if r.node == node.id {
                eq.lin(layout.gamma.start + k, available_mw[k] / base);
            }
        }
        for (k, c) in model.converters.iter().enumerate() {
            if c.dc_node == node.id {
                eq.lin(layout.conv_p_dc.start + k, 1.0);
            }
        }
        for (line, var) in model.dc_lines.iter().zip(&layout.dc_flow) {
            let (from, to) = (dc_index[line.from.as_str()], dc_index[line.to.as_str()]);
            if from != i && to != i {
                continue;
            }
            let other = if from == i { to } else { from };
            match *var {
                Some(f) => eq.lin(f, if from == i { -1.0 } else { 1.0 }),
                None => {
                    eq.term(Kernel::DcFlow { g: 1.0 / line.r }, &[layout.vdc.start + i, layout.vdc.start + other], -1.0)
                }
            }
        }
    }

    let mut kinks = Vec::new();
    // converter coupling: P_ac + P_dc + a + b·|P_ac| + c·P_ac² = 0
    for (k, c) in model.converters.iter().enumerate() {
        let p = layout.conv_p_ac.start + k;
        eq.row(format!("converter[{}]", c.id), c.loss_a / base);
        eq.lin(p, 1.0);
        eq.lin(layout.conv_p_dc.start + k, 1.0);
        if c.loss_b != 0.0 {
            eq.term(Kernel::SmoothAbs { eps: LOSS_EPSILON }, &[p], c.loss_b);
            kinks.push(p);
        }
        if c.loss_c != 0.0 {
            eq.term(Kernel::Square, &[p], c.loss_c * base);
        }
    }
    for (line, var) in model.dc_lines.iter().zip(&layout.dc_flow) {
        if var.is_some() {
            eq.row(format!("dc_voltage[{}]", line.id), 0.0);
            eq.lin(layout.vdc.start + dc_index[line.from.as_str()], 1.0);
            eq.lin(layout.vdc.start + dc_index[line.to.as_str()], -1.0);
        }
    }

    for (i, node) in model.ac_nodes.iter().enumerate() {
        if node.kind == AcNodeKind::Slack {
            eq.row(format!("slack_angle[{}]", node.id), 0.0);
            eq.lin(layout.va.start + i, 1.0);
        }
    }

    let mut zone_balance_rows = vec![None; model.zones.len()];
    if scenario.is_market_coupled() {
        for (k, z) in model.zones.iter().enumerate() {
            let (pn, pgz, pdz) = (layout.zone_pn.start + k, layout.zone_pg.start + k, layout.zone_pd.start + k);
            eq.row(format!("zone_generation[{}]", z.id), 0.0);
            eq.lin(pgz, 1.0);
            for (g, gen) in model.generators.iter().enumerate() {
                if gen.zone == z.id {
                    eq.lin(layout.pg.start + g, -1.0);
                }
            }
            for (r, unit) in model.renewables.iter().enumerate() {
                if unit.zone == z.id {
                    eq.lin(layout.gamma.start + r, -available_mw[r] / base);
                }
            }
            eq.row(format!("zone_demand[{}]", z.id), 0.0);
            eq.lin(pdz, 1.0);
            for (l, mw) in model.loads.iter().zip(&load_mw) {
                if l.zone == z.id {
                    eq.add_constant(-mw / base);
                }
            }
            zone_balance_rows[k] = Some(eq.row(format!("zone_balance[{}]", z.id), 0.0));
            eq.lin(pgz, 1.0);
            eq.lin(pdz, -1.0);
            eq.lin(pn, -1.0);
        }
    }

    // inequalities, scaled to a unit rating
    for (k, br) in model.ac_branches.iter().enumerate() {
        let s = br.s_rating / base;
        for from_end in [true, false] {
            let end = if from_end { "from" } else { "to" };
            ineq.row(format!("branch_limit[{}:{end}]", br.id), -1.0);
            ineq.term(admittances[k].s2(), &branch_vars(k, from_end), 1.0 / (s * s));
        }
    }
    for (k, c) in model.converters.iter().enumerate() {
        let s = c.s_rating / base;
        ineq.row(format!("converter_limit[{}]", c.id), -1.0);
        ineq.term(Kernel::Square, &[layout.conv_p_ac.start + k], 1.0 / (s * s));
        ineq.term(Kernel::Square, &[layout.conv_q_ac.start + k], 1.0 / (s * s));
    }
    for (line, var) in model.dc_lines.iter().zip(&layout.dc_flow) {
        if var.is_some() {
            continue;
        }
        let (from, to) = (dc_index[line.from.as_str()], dc_index[line.to.as_str()]);
        for (end, a, b) in [("from", from, to), ("to", to, from)] {
            ineq.row(format!("dc_line_limit[{}:{end}]", line.id), -1.0);
            ineq.term(
                Kernel::DcFlow { g: 1.0 / line.r },
                &[layout.vdc.start + a, layout.vdc.start + b],
                base / line.p_rating,
            );
        }
    }

    let objective = if scenario.is_market_coupled() {
        objective_sii(&layout, &zone_models, base)
    } else {
        let prices: BTreeMap<String, f64> =
            model.zones.iter().zip(&zone_prices).map(|(z, p)| (z.id.clone(), *p)).collect();
        objective_si(model, &layout, &prices, &available_mw)?
    };
    let market_objective = objective.clone();
    let mut objective = objective;
    for var in layout.qg.clone().chain(layout.conv_q_ac.clone()) {
        objective.quadratic.push((var, Q_REGULARIZATION));
    }

    let mut hess_map = BTreeMap::new();
    for &(var, _) in &objective.quadratic {
        let next = hess_map.len();
        hess_map.entry((var, var)).or_insert(next);
    }
    eq.finalize(&mut hess_map);
    ineq.finalize(&mut hess_map);
    let mut hess_pattern = vec![(0, 0); hess_map.len()];
    for (&key, &slot) in &hess_map {
        hess_pattern[slot] = key;
    }
    let obj_hess = objective.quadratic.iter().map(|&(v, q)| (v, hess_map[&(v, v)], q)).collect();

    Ok(OpfProblem {
        model,
        scenario,
        timestep: inputs.timestep,
        layout,
        lower,
        upper,
        start,
        objective,
        market_objective,
        eq,
        ineq,
        hess_pattern,
        obj_hess,
        load_mw,
        available_mw,
        zone_models,
        zone_prices,
        zone_balance_rows,
        kinks,
    })
}

fn check_bounds(model: &NetworkModel) -> Result<()> {
    let bad = |what: String| Err(Error::InfeasibleBounds(what));
    for n in &model.ac_nodes {
        if n.v_min > n.v_max {
            return bad(format!("AC node {}: v_min {} above v_max {}", n.id, n.v_min, n.v_max));
        }
    }
    for n in &model.dc_nodes {
        if n.v_min > n.v_max {
            return bad(format!("DC node {}: v_min {} above v_max {}", n.id, n.v_min, n.v_max));
        }
    }
    for g in &model.generators {
        if g.p_min > g.p_max || g.q_min > g.q_max {
            return bad(format!("generator {}: lower limit above upper limit", g.id));
        }
    }
    Ok(())
}
