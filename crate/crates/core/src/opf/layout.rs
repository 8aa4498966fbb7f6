use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::network::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Fixed zonal prices, linear dispatch cost.
    SI,
    /// Fitted quadratic cost of generation per zone with net-position bounds.
    SII,
    /// SII without renewable availability.
    SIII,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::SI, ScenarioKind::SII, ScenarioKind::SIII];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::SI => "SI",
            ScenarioKind::SII => "SII",
            ScenarioKind::SIII => "SIII",
        }
    }

    /// Whether the problem carries zonal net-position variables.
    pub fn is_market_coupled(self) -> bool {
        !matches!(self, ScenarioKind::SI)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scenario {s:?} (expected one of SI, SII, SIII)"))
    }
}

/// Index map of the decision vector.
///
/// Blocks are contiguous and laid out in declaration order. Zonal blocks are
/// empty in SI. DC lines with zero resistance get an explicit flow variable;
/// `dc_flow[k]` is `None` for resistive lines.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionLayout {
    pub vm: Range<usize>,
    pub va: Range<usize>,
    pub vdc: Range<usize>,
    pub pg: Range<usize>,
    pub qg: Range<usize>,
    pub gamma: Range<usize>,
    pub conv_p_ac: Range<usize>,
    pub conv_q_ac: Range<usize>,
    pub conv_p_dc: Range<usize>,
    pub dc_flow: Vec<Option<usize>>,
    pub zone_pn: Range<usize>,
    pub zone_pg: Range<usize>,
    pub zone_pd: Range<usize>,
    names: Vec<String>,
}

impl DecisionLayout {
    pub fn new(model: &NetworkModel, scenario: ScenarioKind) -> Self {
        let mut names = Vec::new();
        let mut block = |prefix: &str, ids: Vec<&str>| {
            let start = names.len();
            names.extend(ids.into_iter().map(|id| format!("{prefix}[{id}]")));
            start..names.len()
        };
        let ac: Vec<&str> = model.ac_nodes.iter().map(|n| n.id.as_str()).collect();
        let gens: Vec<&str> = model.generators.iter().map(|g| g.id.as_str()).collect();
        let convs: Vec<&str> = model.converters.iter().map(|c| c.id.as_str()).collect();
        let vm = block("vm", ac.clone());
        let va = block("va", ac);
        let vdc = block("vdc", model.dc_nodes.iter().map(|n| n.id.as_str()).collect());
        let pg = block("pg", gens.clone());
        let qg = block("qg", gens);
        let gamma = block("gamma", model.renewables.iter().map(|r| r.id.as_str()).collect());
        let conv_p_ac = block("pac", convs.clone());
        let conv_q_ac = block("qac", convs.clone());
        let conv_p_dc = block("pdc", convs);
        let lossless: Vec<&str> = model.dc_lines.iter().filter(|l| l.r == 0.0).map(|l| l.id.as_str()).collect();
        let flows = block("fdc", lossless);
        let mut next = flows.start;
        let dc_flow = model
            .dc_lines
            .iter()
            .map(|l| {
                (l.r == 0.0).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let zones: Vec<&str> =
            if scenario.is_market_coupled() { model.zones.iter().map(|z| z.id.as_str()).collect() } else { Vec::new() };
        let zone_pn = block("pn", zones.clone());
        let zone_pg = block("pgz", zones.clone());
        let zone_pd = block("pdz", zones);
        DecisionLayout {
            vm,
            va,
            vdc,
            pg,
            qg,
            gamma,
            conv_p_ac,
            conv_q_ac,
            conv_p_dc,
            dc_flow,
            zone_pn,
            zone_pg,
            zone_pd,
            names,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// FNV-1a hash over the variable names; equal layouts hash equally.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for name in &self.names {
            for b in name.bytes().chain(std::iter::once(0)) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}
