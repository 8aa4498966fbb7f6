use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::build::OpfProblem;
use super::layout::ScenarioKind;
use super::rows::{BranchEnds, Kernel};
use super::OBJ_SCALE;
use crate::error::{Error, Result};
use crate::network::{zone_net_position, NetworkModel};
use crate::nlp::SolveOutcome;

/// Availability below this (MW) counts as no wind; curtailment is reported as 0.
pub const NO_AVAILABILITY_MW: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneOutcome {
    pub zone: String,
    /// EUR/MWh
    pub price: f64,
    pub p_n: f64,
    pub p_g: f64,
    pub p_d: f64,
    pub pn_min: f64,
    pub pn_max: f64,
    /// Multiplier of the zonal balance `P_G − P_D − P_N = 0` in EUR/MWh;
    /// absent in SI.
    pub balance_dual: Option<f64>,
    /// Cost of generation at the solved net position, EUR/h.
    pub cg: f64,
}

/// Solved operating point of one step. Powers in MW / MVAr, voltages in per
/// unit, angles in radians. Vectors follow the element order of the network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub timestep: i64,
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub vdc: Vec<f64>,
    pub gen_p: Vec<f64>,
    pub gen_q: Vec<f64>,
    pub gamma: Vec<f64>,
    pub renewable_available: Vec<f64>,
    /// `1 − γ` per unit; 0 when nothing was available.
    pub curtailment: Vec<f64>,
    pub load_p: Vec<f64>,
    pub branch_p_from: Vec<f64>,
    pub branch_q_from: Vec<f64>,
    pub branch_p_to: Vec<f64>,
    pub branch_q_to: Vec<f64>,
    pub dc_line_p_from: Vec<f64>,
    pub dc_line_p_to: Vec<f64>,
    /// Converter injections into the AC and DC grids and the converter loss.
    pub converter_p_ac: Vec<f64>,
    pub converter_q_ac: Vec<f64>,
    pub converter_p_dc: Vec<f64>,
    pub converter_loss: Vec<f64>,
    pub zones: Vec<ZoneOutcome>,
    pub total_losses: f64,
    /// Objective in EUR/h.
    pub objective: f64,
}

impl DispatchResult {
    pub fn zone(&self, id: &str) -> Option<&ZoneOutcome> {
        self.zones.iter().find(|z| z.zone == id)
    }
}

/// Maps a converged solver outcome back to network quantities.
pub fn extract_solution(problem: &OpfProblem<'_>, outcome: &SolveOutcome) -> Result<DispatchResult> {
    if !outcome.converged() {
        return Err(Error::NotConverged(format!("step {}: solver status {}", problem.timestep, outcome.status)));
    }
    let model = problem.model;
    let layout = &problem.layout;
    let x = &outcome.x;
    let base = model.base_mva;
    let mw = |r: std::ops::Range<usize>| -> Vec<f64> { x[r].iter().map(|v| v * base).collect() };

    let mut d = DispatchResult {
        timestep: problem.timestep,
        vm: x[layout.vm.clone()].to_vec(),
        va: x[layout.va.clone()].to_vec(),
        vdc: x[layout.vdc.clone()].to_vec(),
        gen_p: mw(layout.pg.clone()),
        gen_q: mw(layout.qg.clone()),
        gamma: x[layout.gamma.clone()].to_vec(),
        renewable_available: problem.available_mw.clone(),
        load_p: problem.load_mw.clone(),
        converter_p_ac: mw(layout.conv_p_ac.clone()),
        converter_q_ac: mw(layout.conv_q_ac.clone()),
        converter_p_dc: mw(layout.conv_p_dc.clone()),
        objective: problem.market_objective.value_eur(x),
        ..DispatchResult::default()
    };
    d.curtailment = d
        .gamma
        .iter()
        .zip(&d.renewable_available)
        .map(|(g, a)| if *a > NO_AVAILABILITY_MW { 1.0 - g } else { 0.0 })
        .collect();
    d.converter_loss = d.converter_p_ac.iter().zip(&d.converter_p_dc).map(|(a, b)| -(a + b)).collect();

    let ac_index = model.ac_index();
    for br in &model.ac_branches {
        let ends = BranchEnds::new(br.r, br.x, br.b);
        let (f, t) = (ac_index[br.from.as_str()], ac_index[br.to.as_str()]);
        let from = [d.vm[f], d.vm[t], d.va[f], d.va[t]];
        let to = [d.vm[t], d.vm[f], d.va[t], d.va[f]];
        d.branch_p_from.push(ends.p().value(&from) * base);
        d.branch_q_from.push(ends.q().value(&from) * base);
        d.branch_p_to.push(ends.p().value(&to) * base);
        d.branch_q_to.push(ends.q().value(&to) * base);
    }
    let dc_index = model.dc_index();
    for (line, var) in model.dc_lines.iter().zip(&layout.dc_flow) {
        let (i, j) = (dc_index[line.from.as_str()], dc_index[line.to.as_str()]);
        let (pij, pji) = match *var {
            Some(v) => (x[v] * base, -x[v] * base),
            None => {
                let k = Kernel::DcFlow { g: 1.0 / line.r };
                (k.value(&[d.vdc[i], d.vdc[j], 0.0, 0.0]) * base, k.value(&[d.vdc[j], d.vdc[i], 0.0, 0.0]) * base)
            }
        };
        d.dc_line_p_from.push(pij);
        d.dc_line_p_to.push(pji);
    }
    d.total_losses = d.branch_p_from.iter().zip(&d.branch_p_to).map(|(a, b)| a + b).sum::<f64>()
        + d.dc_line_p_from.iter().zip(&d.dc_line_p_to).map(|(a, b)| a + b).sum::<f64>()
        + d.converter_loss.iter().sum::<f64>();

    let price_scale = OBJ_SCALE * base;
    let internal = internal_losses(model, &d);
    for (k, z) in model.zones.iter().enumerate() {
        let m = &problem.zone_models[k];
        let np = zone_net_position(model, &z.id, &d)?;
        let (p_n, price, balance_dual) = match problem.scenario {
            ScenarioKind::SI => (np.p_n, problem.zone_prices[k], None),
            ScenarioKind::SII | ScenarioKind::SIII => {
                // an isolated zone's net position is its own losses, exactly 0 when it has none
                let p_n = internal.get(&z.id).copied().unwrap_or(x[layout.zone_pn.start + k] * base);
                let dual = problem.zone_balance_rows[k].map(|r| outcome.lambda_eq[r] / price_scale);
                (p_n, m.price_at(p_n), dual)
            }
        };
        d.zones.push(ZoneOutcome {
            zone: z.id.clone(),
            price,
            p_n,
            p_g: np.p_g,
            p_d: np.p_d,
            pn_min: m.pn_min,
            pn_max: m.pn_max,
            balance_dual,
            cg: m.cg_at(p_n),
        });
    }
    Ok(d)
}

/// Losses (MW) of every zone that no branch, DC line or converter links to
/// another zone.
fn internal_losses(model: &NetworkModel, d: &DispatchResult) -> HashMap<String, f64> {
    let zone_of: HashMap<&str, &str> = model
        .ac_nodes
        .iter()
        .map(|n| (n.id.as_str(), n.zone.as_str()))
        .chain(model.dc_nodes.iter().map(|n| (n.id.as_str(), n.zone.as_str())))
        .collect();
    let mut losses: HashMap<String, f64> = model.zones.iter().map(|z| (z.id.clone(), 0.0)).collect();
    let mut add = |a: &str, b: &str, loss: f64| {
        let (za, zb) = (zone_of[a], zone_of[b]);
        if za != zb {
            losses.remove(za);
            losses.remove(zb);
        } else if let Some(v) = losses.get_mut(za) {
            *v += loss;
        }
    };
    for (k, br) in model.ac_branches.iter().enumerate() {
        add(&br.from, &br.to, d.branch_p_from[k] + d.branch_p_to[k]);
    }
    for (k, line) in model.dc_lines.iter().enumerate() {
        add(&line.from, &line.to, d.dc_line_p_from[k] + d.dc_line_p_to[k]);
    }
    for (k, c) in model.converters.iter().enumerate() {
        add(&c.ac_node, &c.dc_node, d.converter_loss[k]);
    }
    losses
}
