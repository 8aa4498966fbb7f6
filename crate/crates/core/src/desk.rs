//! Synthetic North Sea study case at desk scale.
//!
//! Six onshore zones with their installed generation and peak loads, five
//! offshore wind hubs on a meshed DC grid, and seeded hourly profiles and bid
//! curves for timesteps 5750..6000. NO reaches only its own hub; GB connects
//! through a 1.4 GW link to PEI and a 2 GW link to NLH.

use std::f64::consts::PI;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixtures::{ac_node, converter, dc_line, dc_node, generator, load};
use crate::io::ProfileTable;
use crate::market::{BidCurve, CurveArchive, Side, ZoneCurves};
use crate::network::{AcBranch, AcNodeKind, NetworkModel, PriceZone, RenewableUnit, ZoneKind};
use crate::scenario::RunInputs;

pub const DESK_RANGE: Range<i64> = 5750..6000;
pub const DESK_SEED: u64 = 2024;
/// Hours with negative prices in the continental zones.
pub const NEGATIVE_PRICE_HOURS: Range<i64> = 5867..5872;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeskZone {
    pub id: &'static str,
    pub other_generation_mw: f64,
    pub peak_load_mw: f64,
    /// Curvature of the synthetic supply curve near equilibrium.
    pub alpha: f64,
    /// Mean day-ahead price, EUR/MWh.
    pub base_price: f64,
    /// Goes negative during [`NEGATIVE_PRICE_HOURS`].
    pub negative_window: bool,
}

pub const DESK_ZONES: [DeskZone; 6] = [
    DeskZone {
        id: "BE",
        other_generation_mw: 9340.0,
        peak_load_mw: 3900.0,
        alpha: 0.008,
        base_price: 75.0,
        negative_window: true,
    },
    DeskZone {
        id: "DE",
        other_generation_mw: 18680.0,
        peak_load_mw: 10000.0,
        alpha: 0.003,
        base_price: 80.0,
        negative_window: true,
    },
    DeskZone {
        id: "DK",
        other_generation_mw: 4074.0,
        peak_load_mw: 1160.0,
        alpha: 0.02,
        base_price: 65.0,
        negative_window: true,
    },
    DeskZone {
        id: "GB",
        other_generation_mw: 19225.0,
        peak_load_mw: 10900.0,
        alpha: 0.002,
        base_price: 85.0,
        negative_window: false,
    },
    DeskZone {
        id: "NL",
        other_generation_mw: 9340.0,
        peak_load_mw: 3600.0,
        alpha: 0.0125,
        base_price: 78.0,
        negative_window: true,
    },
    DeskZone {
        id: "NO",
        other_generation_mw: 4346.0,
        peak_load_mw: 1500.0,
        alpha: 0.015,
        base_price: 45.0,
        negative_window: false,
    },
];

/// Offshore hub id, host onshore zone and installed wind (MW).
pub const DESK_HUBS: [(&str, &str, f64); 5] = [
    ("PEI", "BE", 3500.0),
    ("NLH", "NL", 2000.0),
    ("GOC", "DE", 4000.0),
    ("DKEI", "DK", 3500.0),
    ("NOH", "NO", 2000.0),
];

/// DC lines: id, from, to, rating (MW), length (km).
const DESK_LINES: [(&str, &str, &str, f64, f64); 10] = [
    ("PEI-BE", "PEI", "dc_BE", 3500.0, 45.0),
    ("NLH-NL", "NLH", "dc_NL", 2000.0, 120.0),
    ("GOC-DE", "GOC", "dc_DE", 4000.0, 160.0),
    ("DKEI-DK", "DKEI", "dc_DK", 3500.0, 80.0),
    ("NOH-NO", "NOH", "dc_NO", 2000.0, 140.0),
    ("Nautilus", "dc_GB_N", "PEI", 1400.0, 200.0),
    ("LionLink", "dc_GB_L", "NLH", 2000.0, 210.0),
    ("PEI-NLH", "PEI", "NLH", 2000.0, 150.0),
    ("NLH-GOC", "NLH", "GOC", 2000.0, 180.0),
    ("GOC-DKEI", "GOC", "DKEI", 2000.0, 250.0),
];

/// Cable resistance in per unit per km (525 kV, 100 MVA base).
const R_PU_PER_KM: f64 = 3.5e-6;
/// Share of zonal load at the slack node; the rest sits at the second node.
const LOAD_SHARE_A: f64 = 0.6;

fn desk_zone(id: &str) -> &'static DeskZone {
    DESK_ZONES.iter().find(|z| z.id == id).expect("desk zone")
}

/// Onshore converters: id, AC zone, DC node, rating (MVA).
fn desk_converters() -> Vec<(&'static str, &'static str, &'static str, f64)> {
    vec![
        ("conv_BE", "BE", "dc_BE", 3500.0),
        ("conv_NL", "NL", "dc_NL", 2000.0),
        ("conv_DE", "DE", "dc_DE", 4000.0),
        ("conv_DK", "DK", "dc_DK", 3500.0),
        ("conv_NO", "NO", "dc_NO", 2000.0),
        ("conv_GB_N", "GB", "dc_GB_N", 1400.0),
        ("conv_GB_L", "GB", "dc_GB_L", 2000.0),
    ]
}

pub fn north_sea_model() -> NetworkModel {
    let mut m = NetworkModel::default();
    let convs = desk_converters();
    for z in &DESK_ZONES {
        let (a, b) = (format!("{}_a", z.id), format!("{}_b", z.id));
        m.ac_nodes.push(ac_node(&a, z.id, AcNodeKind::Slack));
        m.ac_nodes.push(ac_node(&b, z.id, AcNodeKind::LoadOnly));
        let rating = 1.5 * (1.0 - LOAD_SHARE_A) * z.peak_load_mw + 1000.0;
        m.ac_branches.push(AcBranch {
            id: format!("{}_ab", z.id),
            from: a.clone(),
            to: b.clone(),
            r: 0.0002,
            x: 0.002,
            b: 0.01,
            s_rating: rating,
        });
        m.generators.push(generator(&format!("gen_{}", z.id), &a, z.id, z.other_generation_mw));
        m.loads.push(load(&format!("load_{}_a", z.id), &a, z.id, &format!("L_{}_a", z.id)));
        m.loads.push(load(&format!("load_{}_b", z.id), &b, z.id, &format!("L_{}_b", z.id)));
        let mut nodes = vec![a.clone(), b];
        for &(cid, zone, dc, s) in convs.iter().filter(|c| c.1 == z.id) {
            m.dc_nodes.push(dc_node(dc, zone));
            let mut c = converter(cid, &a, dc, s);
            c.loss_a = 1.0;
            c.loss_b = 0.005;
            c.loss_c = 1e-6;
            m.converters.push(c);
            nodes.push(dc.to_string());
        }
        m.zones.push(PriceZone { id: z.id.into(), kind: ZoneKind::Onshore, nodes });
    }
    for &(hub, _, cap) in &DESK_HUBS {
        m.dc_nodes.push(dc_node(hub, hub));
        m.renewables.push(RenewableUnit {
            id: hub.into(),
            node: hub.into(),
            zone: hub.into(),
            capacity: cap,
            profile: format!("W_{hub}"),
        });
        m.zones.push(PriceZone { id: hub.into(), kind: ZoneKind::Offshore, nodes: vec![hub.into()] });
    }
    for &(id, from, to, rating, km) in &DESK_LINES {
        m.dc_lines.push(dc_line(id, from, to, km * R_PU_PER_KM, rating));
    }
    m
}

/// Daily load shape in [0.78, 1].
fn load_shape(t: i64) -> f64 {
    let h = (t % 24) as f64;
    0.89 + 0.11 * (2.0 * PI * (h - 7.0) / 24.0).sin().max(-1.0)
}

/// Seeded hourly series: load shape noise, wind availability per hub and
/// zonal price levels.
struct Weather {
    wind: Vec<Vec<f64>>,
    load_noise: Vec<Vec<f64>>,
    price_noise: Vec<Vec<f64>>,
}

fn weather(range: &Range<i64>, seed: u64) -> Weather {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (range.end - range.start).max(0) as usize;
    let mut common = 0.5f64;
    let mut local = [0.0f64; 5];
    let mut wind = vec![Vec::with_capacity(n); DESK_HUBS.len()];
    for k in 0..n {
        let t = range.start + k as i64;
        // a storm passes through the middle of the default window
        let storm = (-((t - 5880) as f64 / 30.0).powi(2)).exp();
        common = (0.92 * common + 0.08 * (0.45 + 0.5 * storm) + 0.06 * (rng.gen::<f64>() - 0.5)).clamp(0.02, 1.0);
        for (h, l) in local.iter_mut().enumerate() {
            *l = 0.85 * *l + 0.08 * (rng.gen::<f64>() - 0.5);
            wind[h].push((common + *l).clamp(0.0, 1.0));
        }
    }
    let mut noise = |scale: f64| -> Vec<Vec<f64>> {
        (0..DESK_ZONES.len()).map(|_| (0..n).map(|_| scale * (rng.gen::<f64>() - 0.5)).collect()).collect()
    };
    let load_noise = noise(0.04);
    let price_noise = noise(8.0);
    Weather { wind, load_noise, price_noise }
}

/// Zone load at `t` before the split between the two nodes, MW.
fn zone_load(z: usize, k: usize, t: i64, w: &Weather) -> f64 {
    let mut v = DESK_ZONES[z].peak_load_mw * (load_shape(t) + w.load_noise[z][k]).min(1.0);
    // NO runs light during a holiday stretch
    if DESK_ZONES[z].id == "NO" && (5898..5929).contains(&t) {
        v *= 0.8;
    }
    v
}

/// Equilibrium price of zone `z` at `t`, EUR/MWh.
fn zone_price(z: usize, k: usize, t: i64, w: &Weather, wind_share: f64) -> f64 {
    let d = &DESK_ZONES[z];
    let h = (t % 24) as f64;
    let daily = 12.0 * (2.0 * PI * (h - 9.0) / 24.0).sin();
    let mut p = d.base_price + daily - 35.0 * wind_share + w.price_noise[z][k];
    if d.negative_window && NEGATIVE_PRICE_HOURS.contains(&t) {
        p = -8.0 - 4.0 * ((t - NEGATIVE_PRICE_HOURS.start) as f64 - 2.0).abs().min(2.0) + 0.5 * w.price_noise[z][k];
    } else {
        p = p.max(3.0);
    }
    p
}

/// Supply and demand of one zone-hour. Supply is linear with slope `2α`
/// within 200 EUR/MWh of equilibrium and three times steeper beyond;
/// demand falls 0.2 EUR/MWh per MW. They cross at `(v_eq, price)`.
pub fn desk_curves(alpha: f64, price: f64, v_eq: f64, supply_max: f64) -> Result<ZoneCurves> {
    if !(v_eq > 0.0 && supply_max > v_eq) {
        return Err(Error::Data(format!("desk curves need 0 < v_eq < supply_max (v_eq {v_eq}, max {supply_max})")));
    }
    let step = (supply_max / 50.0).max(10.0);
    let below = (v_eq / step).floor() as i64;
    let above = ((supply_max - v_eq) / step).floor() as i64;
    let knee = 200.0;
    let supply_price = |v: f64| -> f64 {
        let lin = 2.0 * alpha * (v - v_eq);
        let shaped = if lin.abs() <= knee { lin } else { lin.signum() * (knee + 3.0 * (lin.abs() - knee)) };
        (price + shaped).clamp(-500.0, 4000.0)
    };
    let supply: Vec<(f64, f64)> = (-below..=above)
        .map(|k| {
            let v = v_eq + k as f64 * step;
            (supply_price(v), v)
        })
        .filter(|&(_, v)| v >= 0.0)
        .collect();
    let demand_price = |v: f64| (price - 0.2 * (v - v_eq)).clamp(-500.0, 4000.0);
    let mut demand: Vec<(f64, f64)> = Vec::new();
    let mut v = 0.0;
    while v < supply_max {
        demand.push((demand_price(v), v));
        v += 2.0 * step;
    }
    demand.retain(|&(_, dv)| (dv - v_eq).abs() > 1.0);
    demand.push((demand_price(v_eq), v_eq));
    demand.push((demand_price(supply_max), supply_max));
    demand.sort_by(|a, b| a.1.total_cmp(&b.1));
    demand.dedup_by(|a, b| a.1 == b.1);
    Ok(ZoneCurves {
        supply: BidCurve::from_pairs(Side::Supply, &supply)?,
        demand: BidCurve::from_pairs(Side::Demand, &demand)?,
    })
}

/// Profiles and bid curves of the desk case over `range`.
pub fn north_sea_data(range: Range<i64>, seed: u64) -> Result<(ProfileTable, CurveArchive)> {
    let w = weather(&range, seed);
    let mut profiles = ProfileTable::new();
    let mut curves = CurveArchive::new();
    let total_wind: f64 = DESK_HUBS.iter().map(|h| h.2).sum();
    for (k, t) in range.clone().enumerate() {
        let mut wind_mw = 0.0;
        for (h, &(hub, _, cap)) in DESK_HUBS.iter().enumerate() {
            let v = cap * w.wind[h][k];
            wind_mw += v;
            profiles.insert(format!("W_{hub}"), t, v);
        }
        for (z, d) in DESK_ZONES.iter().enumerate() {
            let l = zone_load(z, k, t, &w);
            profiles.insert(format!("L_{}_a", d.id), t, LOAD_SHARE_A * l);
            profiles.insert(format!("L_{}_b", d.id), t, (1.0 - LOAD_SHARE_A) * l);
            let price = zone_price(z, k, t, &w, wind_mw / total_wind);
            curves.insert(d.id, t, desk_curves(d.alpha, price, l, d.other_generation_mw)?);
        }
    }
    Ok((profiles, curves))
}

pub fn north_sea_inputs(range: Range<i64>, seed: u64) -> Result<RunInputs> {
    let (profiles, curves) = north_sea_data(range, seed)?;
    Ok(RunInputs { model: north_sea_model(), profiles, curves })
}

/// Peak load of an onshore desk zone, MW.
pub fn peak_load(zone: &str) -> f64 {
    desk_zone(zone).peak_load_mw
}

/// Paths of a written desk data set.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskFiles {
    pub network: PathBuf,
    pub profiles: PathBuf,
    pub curves: PathBuf,
}

/// Writes network.json, profiles.csv and curves.csv into `dir`.
pub fn write_north_sea(dir: impl AsRef<Path>, range: Range<i64>, seed: u64) -> Result<DeskFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let inputs = north_sea_inputs(range, seed)?;
    let files = DeskFiles {
        network: dir.join("network.json"),
        profiles: dir.join("profiles.csv"),
        curves: dir.join("curves.csv"),
    };
    std::fs::write(&files.network, inputs.model.to_json_string() + "\n").map_err(|e| Error::io(&files.network, e))?;
    inputs.profiles.write_csv(&files.profiles)?;
    inputs.curves.write_csv(&files.curves)?;
    Ok(files)
}
