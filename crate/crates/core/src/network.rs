//! Hybrid AC/DC network description.
//!
//! A [`NetworkModel`] is immutable once loaded. Electrical parameters are in
//! per-unit on the system MVA base; powers are in MW / MVAr / MVA. Every AC
//! and DC node belongs to exactly one [`PriceZone`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opf::DispatchResult;

pub const NETWORK_FORMAT: &str = "zonal-opf-net/1";

pub const DEFAULT_POWER_FACTOR: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcNodeKind {
    Slack,
    Generation,
    LoadOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcNode {
    pub id: String,
    pub zone: String,
    pub kind: AcNodeKind,
    pub v_min: f64,
    pub v_max: f64,
    pub base_kv: f64,
}

/// Pi-model AC branch. `b` is the total line-charging susceptance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcBranch {
    #[serde(default)]
    pub id: String,
    pub from: String,
    pub to: String,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b: f64,
    pub s_rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcNode {
    pub id: String,
    pub zone: String,
    pub v_min: f64,
    pub v_max: f64,
    pub base_kv: f64,
}

/// DC line. A zero resistance models an ideal connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcLine {
    #[serde(default)]
    pub id: String,
    pub from: String,
    pub to: String,
    pub r: f64,
    pub p_rating: f64,
}

/// AC/DC converter with loss `a + b|P| + c P²` (MW) on the AC-side active power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Converter {
    #[serde(default)]
    pub id: String,
    pub ac_node: String,
    pub dc_node: String,
    pub s_rating: f64,
    #[serde(default)]
    pub loss_a: f64,
    #[serde(default)]
    pub loss_b: f64,
    #[serde(default)]
    pub loss_c: f64,
}

impl Converter {
    /// Loss in MW at AC-side active power `p` (MW), without smoothing.
    pub fn loss_mw(&self, p: f64) -> f64 {
        self.loss_a + self.loss_b * p.abs() + self.loss_c * p * p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    #[serde(default)]
    pub id: String,
    pub node: String,
    pub zone: String,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

/// Curtailable renewable plant. May sit on an AC or a DC node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableUnit {
    #[serde(default)]
    pub id: String,
    pub node: String,
    pub zone: String,
    pub capacity: f64,
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    #[serde(default)]
    pub id: String,
    pub node: String,
    pub zone: String,
    pub profile: String,
    #[serde(default = "default_power_factor")]
    pub power_factor: f64,
}

fn default_power_factor() -> f64 {
    DEFAULT_POWER_FACTOR
}

impl Load {
    /// Reactive demand (MVAr, lagging) for an active demand of `p_mw`.
    pub fn reactive_mvar(&self, p_mw: f64) -> f64 {
        let pf = self.power_factor.clamp(f64::MIN_POSITIVE, 1.0);
        p_mw * (1.0 - pf * pf).sqrt() / pf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneKind {
    Onshore,
    Offshore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceZone {
    pub id: String,
    pub kind: ZoneKind,
    /// AC and DC node ids in this zone.
    pub nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub format: String,
    pub base_mva: f64,
    #[serde(default)]
    pub ac_nodes: Vec<AcNode>,
    #[serde(default)]
    pub ac_branches: Vec<AcBranch>,
    #[serde(default)]
    pub dc_nodes: Vec<DcNode>,
    #[serde(default)]
    pub dc_lines: Vec<DcLine>,
    #[serde(default)]
    pub converters: Vec<Converter>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub renewables: Vec<RenewableUnit>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub zones: Vec<PriceZone>,
}

/// Node reference resolved against the AC and DC node lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Ac(usize),
    Dc(usize),
}

impl Default for NetworkModel {
    fn default() -> Self {
        NetworkModel {
            format: NETWORK_FORMAT.to_string(),
            base_mva: 100.0,
            ac_nodes: Vec::new(),
            ac_branches: Vec::new(),
            dc_nodes: Vec::new(),
            dc_lines: Vec::new(),
            converters: Vec::new(),
            generators: Vec::new(),
            renewables: Vec::new(),
            loads: Vec::new(),
            zones: Vec::new(),
        }
    }
}

impl NetworkModel {
    pub fn from_json_str(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let mut model: NetworkModel = serde_json::from_str(text)?;
        model.fill_default_ids();
        Ok(model)
    }

    /// Reads a network file and checks its format tag. Does not validate.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = Self::from_json_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        check_format(NETWORK_FORMAT, &model.format)?;
        Ok(model)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("network model serializes")
    }

    /// Gives every element without an explicit id a positional one.
    pub fn fill_default_ids(&mut self) {
        fn fill<T>(items: &mut [T], prefix: &str, id: impl Fn(&mut T) -> &mut String) {
            for (i, item) in items.iter_mut().enumerate() {
                let id = id(item);
                if id.is_empty() {
                    *id = format!("{prefix}{i}");
                }
            }
        }
        fill(&mut self.ac_branches, "branch", |b| &mut b.id);
        fill(&mut self.dc_lines, "dcline", |l| &mut l.id);
        fill(&mut self.converters, "conv", |c| &mut c.id);
        fill(&mut self.generators, "gen", |g| &mut g.id);
        fill(&mut self.renewables, "res", |r| &mut r.id);
        fill(&mut self.loads, "load", |l| &mut l.id);
    }

    pub fn ac_index(&self) -> HashMap<&str, usize> {
        self.ac_nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    pub fn dc_index(&self) -> HashMap<&str, usize> {
        self.dc_nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    pub fn node_ref(&self, id: &str) -> Option<NodeRef> {
        if let Some(i) = self.ac_nodes.iter().position(|n| n.id == id) {
            return Some(NodeRef::Ac(i));
        }
        self.dc_nodes.iter().position(|n| n.id == id).map(NodeRef::Dc)
    }

    pub fn zone(&self, id: &str) -> Option<&PriceZone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn zone_position(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    /// Installed renewable capacity (MW) of a zone.
    pub fn zone_renewable_capacity(&self, zone: &str) -> f64 {
        self.renewables.iter().filter(|r| r.zone == zone).map(|r| r.capacity).sum()
    }

    /// Connected components of the AC graph, as lists of AC node indices.
    pub fn ac_islands(&self) -> Vec<Vec<usize>> {
        let index = self.ac_index();
        let mut dsu = DisjointSet::new(self.ac_nodes.len());
        for br in &self.ac_branches {
            if let (Some(&f), Some(&t)) = (index.get(br.from.as_str()), index.get(br.to.as_str())) {
                dsu.union(f, t);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.ac_nodes.len() {
            groups.entry(dsu.find(i)).or_default().push(i);
        }
        let mut islands: Vec<Vec<usize>> = groups.into_values().collect();
        islands.sort_by_key(|g| g[0]);
        islands
    }

    pub fn validate(&self) -> ValidationReport {
        validate_network(self)
    }
}

pub(crate) fn check_format(expected: &str, found: &str) -> Result<()> {
    let major = |tag: &str| {
        tag.rsplit_once('/').map(|(name, v)| (name.to_string(), v.split('.').next().unwrap_or("").to_string()))
    };
    match (major(expected), major(found)) {
        (Some(e), Some(f)) if e == f => Ok(()),
        _ => Err(Error::FormatVersion { expected: expected.to_string(), found: found.to_string() }),
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Id (or ids) of the offending element.
    pub element: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, element: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { element: element.into(), message: message.into() });
    }

    /// True if any violation mentions `id`.
    pub fn mentions(&self, id: &str) -> bool {
        self.violations.iter().any(|v| v.element.split(',').any(|e| e.trim() == id) || v.message.contains(id))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of the model. Never aborts; an empty
/// report means the model is well formed.
pub fn validate_network(model: &NetworkModel) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !(model.base_mva > 0.0) {
        report.push("network", format!("base_mva must be positive (got {})", model.base_mva));
    }

    let mut node_zone: HashMap<&str, &str> = HashMap::new();
    for n in &model.ac_nodes {
        if node_zone.insert(n.id.as_str(), n.zone.as_str()).is_some() {
            report.push(&n.id, "duplicate node id");
        }
        check_voltage_bounds(&mut report, &n.id, n.v_min, n.v_max, n.base_kv);
    }
    for n in &model.dc_nodes {
        if node_zone.insert(n.id.as_str(), n.zone.as_str()).is_some() {
            report.push(&n.id, "duplicate node id");
        }
        check_voltage_bounds(&mut report, &n.id, n.v_min, n.v_max, n.base_kv);
    }

    let ac = model.ac_index();
    let dc = model.dc_index();
    let is_ac = |id: &str| ac.contains_key(id);
    let is_dc = |id: &str| dc.contains_key(id);

    for br in &model.ac_branches {
        for end in [&br.from, &br.to] {
            if !is_ac(end) {
                report.push(&br.id, format!("unresolved reference to AC node {end:?}"));
            }
        }
        if br.from == br.to {
            report.push(&br.id, "branch connects a node to itself");
        }
        if br.x == 0.0 || !br.x.is_finite() {
            report.push(&br.id, "reactance must be non-zero");
        }
        if !(br.r >= 0.0) {
            report.push(&br.id, "resistance must be non-negative");
        }
        if !(br.s_rating > 0.0) {
            report.push(&br.id, "s_rating must be positive");
        }
    }

    for line in &model.dc_lines {
        for end in [&line.from, &line.to] {
            if !is_dc(end) {
                report.push(&line.id, format!("unresolved reference to DC node {end:?}"));
            }
        }
        if line.from == line.to {
            report.push(&line.id, "DC line is a self-loop");
        }
        if !(line.r >= 0.0) {
            report.push(&line.id, "resistance must be non-negative");
        }
        if !(line.p_rating > 0.0) {
            report.push(&line.id, "p_rating must be positive");
        }
    }

    for c in &model.converters {
        if !is_ac(&c.ac_node) {
            report.push(&c.id, format!("unresolved reference to AC node {:?}", c.ac_node));
        }
        if !is_dc(&c.dc_node) {
            report.push(&c.id, format!("unresolved reference to DC node {:?}", c.dc_node));
        }
        if !(c.s_rating > 0.0) {
            report.push(&c.id, "s_rating must be positive");
        }
        if !(c.loss_a >= 0.0 && c.loss_b >= 0.0 && c.loss_c >= 0.0) {
            report.push(&c.id, "loss coefficients must be non-negative");
        }
    }

    let check_attachment = |report: &mut ValidationReport, id: &str, node: &str, zone: &str, dc_allowed: bool| {
        let resolved = is_ac(node) || (dc_allowed && is_dc(node));
        if !resolved {
            report.push(id, format!("unresolved reference to node {node:?}"));
        } else if let Some(&nz) = node_zone.get(node) {
            if nz != zone {
                report.push(id, format!("zone {zone:?} disagrees with node {node:?} zone {nz:?}"));
            }
        }
    };

    for g in &model.generators {
        check_attachment(&mut report, &g.id, &g.node, &g.zone, false);
        if !(g.p_min <= g.p_max) {
            report.push(&g.id, "p_min exceeds p_max");
        }
        if !(g.q_min <= g.q_max) {
            report.push(&g.id, "q_min exceeds q_max");
        }
    }
    for r in &model.renewables {
        check_attachment(&mut report, &r.id, &r.node, &r.zone, true);
        if !(r.capacity > 0.0) {
            report.push(&r.id, "capacity must be positive");
        }
    }
    for l in &model.loads {
        check_attachment(&mut report, &l.id, &l.node, &l.zone, false);
        if !(l.power_factor > 0.0 && l.power_factor <= 1.0) {
            report.push(&l.id, "power_factor must be in (0, 1]");
        }
    }

    // Zone partition.
    let mut seen_zone: HashMap<&str, usize> = HashMap::new();
    let mut membership: HashMap<&str, Vec<&str>> = HashMap::new();
    for z in &model.zones {
        *seen_zone.entry(z.id.as_str()).or_default() += 1;
        for n in &z.nodes {
            membership.entry(n.as_str()).or_default().push(z.id.as_str());
            match node_zone.get(n.as_str()) {
                None => report.push(&z.id, format!("unresolved reference to node {n:?}")),
                Some(&nz) if nz != z.id => {
                    report.push(n, format!("listed in zone {:?} but declares zone {nz:?}", z.id))
                }
                _ => {}
            }
        }
    }
    for (id, count) in &seen_zone {
        if *count > 1 {
            report.push(*id, "duplicate zone id");
        }
    }
    for n in model.ac_nodes.iter().map(|n| n.id.as_str()).chain(model.dc_nodes.iter().map(|n| n.id.as_str())) {
        match membership.get(n).map(Vec::len).unwrap_or(0) {
            0 => report.push(n, "node belongs to no price zone"),
            1 => {}
            k => report.push(n, format!("node belongs to {k} price zones")),
        }
    }
    for (zone_field, id) in model
        .generators
        .iter()
        .map(|g| (&g.zone, &g.id))
        .chain(model.renewables.iter().map(|r| (&r.zone, &r.id)))
        .chain(model.loads.iter().map(|l| (&l.zone, &l.id)))
    {
        if !seen_zone.contains_key(zone_field.as_str()) {
            report.push(id, format!("unknown zone {zone_field:?}"));
        }
    }
    for z in model.zones.iter().filter(|z| z.kind == ZoneKind::Offshore) {
        for l in model.loads.iter().filter(|l| l.zone == z.id) {
            report.push(&l.id, format!("offshore zone {:?} cannot contain loads", z.id));
        }
        for g in model.generators.iter().filter(|g| g.zone == z.id) {
            report.push(&g.id, format!("offshore zone {:?} cannot contain generators", z.id));
        }
    }

    // One slack per AC island.
    for island in model.ac_islands() {
        let slacks: Vec<&str> = island
            .iter()
            .filter(|&&i| model.ac_nodes[i].kind == AcNodeKind::Slack)
            .map(|&i| model.ac_nodes[i].id.as_str())
            .collect();
        match slacks.len() {
            1 => {}
            0 => report.push(
                model.ac_nodes[island[0]].id.as_str(),
                format!("AC island of {} node(s) has no slack node", island.len()),
            ),
            _ => report.push(slacks.join(", "), "multiple slack nodes in one AC island"),
        }
    }

    report
}

fn check_voltage_bounds(report: &mut ValidationReport, id: &str, v_min: f64, v_max: f64, base_kv: f64) {
    if !(v_min > 0.0) {
        report.push(id, "v_min must be positive");
    }
    if !(v_min <= v_max) {
        report.push(id, "v_min exceeds v_max");
    }
    if !(base_kv > 0.0) {
        report.push(id, "base_kv must be positive");
    }
}

/// Zonal aggregates in MW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetPosition {
    /// Σ P_g + Σ γ·P_rg over zone members.
    pub p_g: f64,
    /// Σ L_i over zone members.
    pub p_d: f64,
    /// P_G − P_D; positive for an exporter.
    pub p_n: f64,
}

/// Aggregates a dispatch over one zone.
pub fn zone_net_position(model: &NetworkModel, zone: &str, dispatch: &DispatchResult) -> Result<NetPosition> {
    if model.zone(zone).is_none() {
        return Err(Error::UnknownZone(zone.to_string()));
    }
    let short = |what: &str| Error::Data(format!("dispatch has no value for {what}"));

    let mut p_g = 0.0;
    for (i, g) in model.generators.iter().enumerate() {
        if g.zone == zone {
            p_g += *dispatch.gen_p.get(i).ok_or_else(|| short(&g.id))?;
        }
    }
    for (i, r) in model.renewables.iter().enumerate() {
        if r.zone == zone {
            let gamma = dispatch.gamma.get(i).ok_or_else(|| short(&r.id))?;
            let avail = dispatch.renewable_available.get(i).ok_or_else(|| short(&r.id))?;
            p_g += gamma * avail;
        }
    }
    let mut p_d = 0.0;
    for (i, l) in model.loads.iter().enumerate() {
        if l.zone == zone {
            p_d += *dispatch.load_p.get(i).ok_or_else(|| short(&l.id))?;
        }
    }
    Ok(NetPosition { p_g, p_d, p_n: p_g - p_d })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_bus() -> NetworkModel {
        let text = r#"{
            "format": "zonal-opf-net/1",
            "base_mva": 100,
            "ac_nodes": [
                {"id": "a", "zone": "Z", "kind": "slack", "v_min": 0.9, "v_max": 1.1, "base_kv": 220},
                {"id": "b", "zone": "Z", "kind": "load-only", "v_min": 0.9, "v_max": 1.1, "base_kv": 220}
            ],
            "ac_branches": [{"from": "a", "to": "b", "r": 0.01, "x": 0.1, "b": 0.02, "s_rating": 500}],
            "generators": [{"node": "a", "zone": "Z", "p_min": 0, "p_max": 300, "q_min": -100, "q_max": 100}],
            "loads": [{"node": "b", "zone": "Z", "profile": "L"}],
            "zones": [{"id": "Z", "kind": "onshore", "nodes": ["a", "b"]}]
        }"#;
        NetworkModel::from_json_str(text).unwrap()
    }

    #[test]
    fn well_formed_two_bus_has_empty_report() {
        let m = two_bus();
        let report = m.validate();
        assert!(report.is_empty(), "{report}");
        assert_eq!(m.loads[0].power_factor, DEFAULT_POWER_FACTOR);
        assert_eq!(m.ac_branches[0].id, "branch0");
    }

    #[test]
    fn two_slacks_in_one_island_are_both_named() {
        let mut m = two_bus();
        m.ac_nodes[1].kind = AcNodeKind::Slack;
        let report = m.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(report.mentions("a") && report.mentions("b"), "{report}");
    }

    #[test]
    fn missing_node_reference_is_reported() {
        let mut m = two_bus();
        m.ac_branches[0].to = "nowhere".into();
        let report = m.validate();
        assert!(report.violations.iter().any(|v| v.element == "branch0" && v.message.contains("unresolved")));
    }

    #[test]
    fn partition_and_offshore_rules() {
        let mut m = two_bus();
        m.zones.push(PriceZone { id: "OFF".into(), kind: ZoneKind::Offshore, nodes: vec!["b".into()] });
        let report = m.validate();
        assert!(report.violations.iter().any(|v| v.element == "b" && v.message.contains("2 price zones")));

        let mut m = two_bus();
        m.zones[0].kind = ZoneKind::Offshore;
        let report = m.validate();
        assert!(report.mentions("gen0"));
        assert!(report.mentions("load0"));
    }

    #[test]
    fn island_without_slack_and_dc_self_loop() {
        let mut m = two_bus();
        m.ac_nodes[0].kind = AcNodeKind::Generation;
        m.dc_nodes.push(DcNode { id: "d".into(), zone: "Z".into(), v_min: 0.9, v_max: 1.1, base_kv: 525.0 });
        m.zones[0].nodes.push("d".into());
        m.dc_lines.push(DcLine { id: String::new(), from: "d".into(), to: "d".into(), r: 0.01, p_rating: 100.0 });
        m.fill_default_ids();
        let report = m.validate();
        assert!(report.violations.iter().any(|v| v.message.contains("no slack")));
        assert!(report.violations.iter().any(|v| v.element == "dcline0" && v.message.contains("self-loop")));
    }

    #[test]
    fn format_tag_major_version() {
        assert!(check_format(NETWORK_FORMAT, "zonal-opf-net/1").is_ok());
        assert!(check_format(NETWORK_FORMAT, "zonal-opf-net/1.3").is_ok());
        assert!(check_format(NETWORK_FORMAT, "zonal-opf-net/2").is_err());
        assert!(check_format(NETWORK_FORMAT, "other/1").is_err());
    }

    fn dispatch_for(m: &NetworkModel, gen: &[f64], gamma: &[f64], avail: &[f64], load: &[f64]) -> DispatchResult {
        let _ = m;
        DispatchResult {
            gen_p: gen.to_vec(),
            gamma: gamma.to_vec(),
            renewable_available: avail.to_vec(),
            load_p: load.to_vec(),
            ..DispatchResult::default()
        }
    }

    #[test]
    fn net_position_balanced_zone() {
        let m = two_bus();
        let d = dispatch_for(&m, &[100.0], &[], &[], &[100.0]);
        let np = zone_net_position(&m, "Z", &d).unwrap();
        assert_eq!((np.p_g, np.p_d, np.p_n), (100.0, 100.0, 0.0));
        assert!(matches!(zone_net_position(&m, "nope", &d), Err(Error::UnknownZone(_))));
    }

    #[test]
    fn net_position_with_curtailed_renewable() {
        let mut m = two_bus();
        m.generators.clear();
        m.renewables.push(RenewableUnit {
            id: "w".into(),
            node: "a".into(),
            zone: "Z".into(),
            capacity: 300.0,
            profile: "W".into(),
        });
        let d = dispatch_for(&m, &[], &[0.75], &[200.0], &[100.0]);
        let np = zone_net_position(&m, "Z", &d).unwrap();
        assert_eq!((np.p_g, np.p_d, np.p_n), (150.0, 100.0, 50.0));
    }

    #[test]
    fn net_position_scales_linearly() {
        let m = two_bus();
        let base = zone_net_position(&m, "Z", &dispatch_for(&m, &[120.0], &[], &[], &[80.0])).unwrap();
        let k = 2.5;
        let scaled = zone_net_position(&m, "Z", &dispatch_for(&m, &[120.0 * k], &[], &[], &[80.0 * k])).unwrap();
        assert!((scaled.p_g - k * base.p_g).abs() < 1e-12);
        assert!((scaled.p_d - k * base.p_d).abs() < 1e-12);
        assert!((scaled.p_n - k * base.p_n).abs() < 1e-12);
    }

    #[test]
    fn reactive_load_from_power_factor() {
        let m = two_bus();
        let q = m.loads[0].reactive_mvar(100.0);
        assert!((q - 100.0 * (1.0f64 - 0.95 * 0.95).sqrt() / 0.95).abs() < 1e-12);
    }
}
