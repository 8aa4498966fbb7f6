//! Small reference networks for tests, benchmarks and examples.
//!
//! Every fixture uses single-node onshore zones (so AC losses vanish unless a
//! branch is added) hanging off a DC grid through converters.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::io::ProfileTable;
use crate::market::{CurveArchive, ZoneCostModel, ZoneCurves, DEFAULT_DELTA_RHO_INC};
use crate::network::*;
use crate::opf::StepInputs;
use crate::scenario::RunInputs;

/// A network together with cost models and one step of profile values.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub model: NetworkModel,
    pub costs: BTreeMap<String, ZoneCostModel>,
    pub inputs: StepInputs,
}

impl Fixture {
    /// This fixture's step repeated over `range`.
    pub fn run_inputs(&self, range: Range<i64>) -> RunInputs {
        self.run_inputs_with(range, |_, _, v| v)
    }

    /// Profiles `shape(t, profile, value)` over `range`, with bid curves that
    /// fit back to this fixture's `α` and `β` at every step.
    pub fn run_inputs_with(&self, range: Range<i64>, shape: impl Fn(i64, &str, f64) -> f64) -> RunInputs {
        let mut profiles = ProfileTable::new();
        let mut curves = CurveArchive::new();
        for t in range {
            for (id, v) in &self.inputs.values {
                profiles.insert(id.clone(), t, shape(t, id, *v));
            }
            for (zone, m) in &self.costs {
                curves.insert(zone.clone(), t, linear_curves(m));
            }
        }
        RunInputs { model: self.model.clone(), profiles, curves }
    }
}

/// Curves whose fit reproduces `m.alpha`, `m.beta` and the untruncated bounds.
pub fn linear_curves(m: &ZoneCostModel) -> ZoneCurves {
    let span = (1.5 * m.delta_rho_inc / (2.0 * m.alpha)).max(1000.0);
    ZoneCurves::linear(m.alpha, m.beta, 2.0 * span, span, span / 200.0).expect("valid grid")
}

pub fn ac_node(id: &str, zone: &str, kind: AcNodeKind) -> AcNode {
    AcNode { id: id.into(), zone: zone.into(), kind, v_min: 0.9, v_max: 1.1, base_kv: 380.0 }
}

pub fn dc_node(id: &str, zone: &str) -> DcNode {
    DcNode { id: id.into(), zone: zone.into(), v_min: 0.9, v_max: 1.1, base_kv: 525.0 }
}

pub fn generator(id: &str, node: &str, zone: &str, p_max: f64) -> Generator {
    Generator {
        id: id.into(),
        node: node.into(),
        zone: zone.into(),
        p_min: 0.0,
        p_max,
        q_min: -0.5 * p_max,
        q_max: 0.5 * p_max,
    }
}

pub fn load(id: &str, node: &str, zone: &str, profile: &str) -> Load {
    Load {
        id: id.into(),
        node: node.into(),
        zone: zone.into(),
        profile: profile.into(),
        power_factor: DEFAULT_POWER_FACTOR,
    }
}

pub fn converter(id: &str, ac: &str, dc: &str, s_rating: f64) -> Converter {
    Converter { id: id.into(), ac_node: ac.into(), dc_node: dc.into(), s_rating, loss_a: 0.0, loss_b: 0.0, loss_c: 0.0 }
}

pub fn dc_line(id: &str, from: &str, to: &str, r: f64, p_rating: f64) -> DcLine {
    DcLine { id: id.into(), from: from.into(), to: to.into(), r, p_rating }
}

pub fn zone(id: &str, kind: ZoneKind, nodes: &[&str]) -> PriceZone {
    PriceZone { id: id.into(), kind, nodes: nodes.iter().map(|s| s.to_string()).collect() }
}

/// Adds an onshore zone `id` made of AC node `id` (slack) with a generator,
/// a load with profile `L_<id>` and, when `converter_rating > 0`, a converter
/// to DC node `dc_<id>` in the same zone.
pub fn add_onshore_zone(m: &mut NetworkModel, id: &str, gen_mw: f64, converter_rating: f64) {
    m.ac_nodes.push(ac_node(id, id, AcNodeKind::Slack));
    m.generators.push(generator(&format!("gen_{id}"), id, id, gen_mw));
    m.loads.push(load(&format!("load_{id}"), id, id, &format!("L_{id}")));
    let mut nodes = vec![id.to_string()];
    if converter_rating > 0.0 {
        let dc = format!("dc_{id}");
        m.dc_nodes.push(dc_node(&dc, id));
        m.converters.push(converter(&format!("conv_{id}"), id, &dc, converter_rating));
        nodes.push(dc);
    }
    m.zones.push(PriceZone { id: id.into(), kind: ZoneKind::Onshore, nodes });
}

/// Adds an offshore hub: DC node `id` in its own zone with a wind farm
/// (profile `W_<id>`).
pub fn add_offshore_hub(m: &mut NetworkModel, id: &str, capacity: f64) {
    m.dc_nodes.push(dc_node(id, id));
    m.renewables.push(RenewableUnit {
        id: format!("wind_{id}"),
        node: id.into(),
        zone: id.into(),
        capacity,
        profile: format!("W_{id}"),
    });
    m.zones.push(zone(id, ZoneKind::Offshore, &[id]));
}

fn cost(alpha: f64, beta: f64) -> ZoneCostModel {
    ZoneCostModel::from_coefficients(alpha, beta, DEFAULT_DELTA_RHO_INC).expect("positive alpha")
}

/// Single zone, two AC nodes, no DC grid. Load profile `L`.
pub fn two_bus() -> Fixture {
    let mut m = NetworkModel::default();
    m.ac_nodes.push(ac_node("a", "Z", AcNodeKind::Slack));
    m.ac_nodes.push(ac_node("b", "Z", AcNodeKind::LoadOnly));
    m.ac_branches.push(AcBranch {
        id: "ab".into(),
        from: "a".into(),
        to: "b".into(),
        r: 0.01,
        x: 0.1,
        b: 0.02,
        s_rating: 500.0,
    });
    m.generators.push(generator("g", "a", "Z", 300.0));
    m.loads.push(load("l", "b", "Z", "L"));
    m.zones.push(zone("Z", ZoneKind::Onshore, &["a", "b"]));
    Fixture {
        model: m,
        costs: BTreeMap::from([("Z".to_string(), cost(0.01, 40.0))]),
        inputs: StepInputs::new(0).with("L", 100.0),
    }
}

/// Zones `A` and `B` joined by one DC line of resistance `r` (pu) and rating
/// `rating` (MW). Lossless converters rated above the line.
pub fn two_zone_link(r: f64, rating: f64, a: (f64, f64), b: (f64, f64)) -> Fixture {
    let mut m = NetworkModel::default();
    add_onshore_zone(&mut m, "A", 5000.0, 2.0 * rating);
    add_onshore_zone(&mut m, "B", 5000.0, 2.0 * rating);
    m.dc_lines.push(dc_line("AB", "dc_A", "dc_B", r, rating));
    Fixture {
        model: m,
        costs: BTreeMap::from([("A".to_string(), cost(a.0, a.1)), ("B".to_string(), cost(b.0, b.1))]),
        inputs: StepInputs::new(0).with("L_A", 2000.0).with("L_B", 2000.0),
    }
}

/// Three onshore zones on a lossless DC star around an offshore hub `H`,
/// plus zone `ISO` with no DC connection. Zero-resistance lines, lossless
/// converters, generous ratings.
pub fn lossless_star(wind_mw: f64) -> Fixture {
    let mut m = NetworkModel::default();
    add_offshore_hub(&mut m, "H", 4000.0);
    let zones = [("X", 0.010, 45.0), ("Y", 0.020, 60.0), ("Z", 0.015, 35.0)];
    let mut costs = BTreeMap::new();
    let mut inputs = StepInputs::new(0).with("W_H", wind_mw);
    for (id, alpha, beta) in zones {
        add_onshore_zone(&mut m, id, 8000.0, 6000.0);
        m.dc_lines.push(dc_line(&format!("H{id}"), "H", &format!("dc_{id}"), 0.0, 6000.0));
        costs.insert(id.to_string(), cost(alpha, beta));
        inputs = inputs.with(format!("L_{id}"), 3000.0);
    }
    add_onshore_zone(&mut m, "ISO", 4000.0, 0.0);
    costs.insert("ISO".to_string(), cost(0.02, 52.5));
    inputs = inputs.with("L_ISO", 1500.0);
    Fixture { model: m, costs, inputs }
}

/// Offshore hub `H` feeding zones `P` and `Q` over resistive lines.
/// Import caps of the two zones are `β/2α` each.
pub fn hub_pair(wind_mw: f64, alpha: f64, beta: f64) -> Fixture {
    let mut m = NetworkModel::default();
    add_offshore_hub(&mut m, "H", 4000.0);
    for id in ["P", "Q"] {
        add_onshore_zone(&mut m, id, 8000.0, 3000.0);
        m.dc_lines.push(dc_line(&format!("H{id}"), "H", &format!("dc_{id}"), 0.001, 3000.0));
    }
    for c in &mut m.converters {
        c.loss_b = 0.005;
    }
    Fixture {
        model: m,
        costs: BTreeMap::from([("P".to_string(), cost(alpha, beta)), ("Q".to_string(), cost(alpha, beta))]),
        inputs: StepInputs::new(0).with("W_H", wind_mw).with("L_P", 3000.0).with("L_Q", 3000.0),
    }
}

/// SI fixture: zone `N` priced negative and zone `P` positive, both linked
/// to hub `H` by 2 GW lines behind 2.5 GW converters.
pub fn negative_price_export() -> Fixture {
    let mut m = NetworkModel::default();
    add_offshore_hub(&mut m, "H", 1000.0);
    for id in ["N", "P"] {
        add_onshore_zone(&mut m, id, 6000.0, 2500.0);
        m.dc_lines.push(dc_line(&format!("H{id}"), "H", &format!("dc_{id}"), 0.0005, 2000.0));
    }
    let mut n = cost(0.01, 5.0);
    n.rho_eq = -10.0;
    let mut p = cost(0.01, 40.0);
    p.rho_eq = 40.0;
    Fixture {
        model: m,
        costs: BTreeMap::from([("N".to_string(), n), ("P".to_string(), p)]),
        inputs: StepInputs::new(0).with("W_H", 300.0).with("L_N", 1500.0).with("L_P", 3500.0),
    }
}
