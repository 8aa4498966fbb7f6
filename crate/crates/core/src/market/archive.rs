//! Hourly bid-curve archive backed by CSV files.
//!
//! Format: header `zone,timestep,side,price_eur_mwh,cum_volume_mwh`, one row
//! per curve point, points of one curve in increasing cumulative volume.
//! A path may name one file or a directory of `*.csv` files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::curve::{monotonicity_error, BidCurve, BidPoint, Side};
use crate::error::{Error, Result};

pub const CURVE_HEADER: [&str; 5] = ["zone", "timestep", "side", "price_eur_mwh", "cum_volume_mwh"];

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneCurves {
    pub supply: BidCurve,
    pub demand: BidCurve,
}

impl ZoneCurves {
    /// Supply priced `2α(v − v_eq) + β` on a grid of spacing `step` reaching
    /// `span` either side of `v_eq` (clipped at zero volume), and a steep
    /// demand curve crossing it at `(v_eq, β)`. Fitting these recovers `α`
    /// and `β` whenever the window holds two or more grid points.
    pub fn linear(alpha: f64, beta: f64, v_eq: f64, span: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && span >= step && v_eq > 1.0) {
            return Err(Error::Data(format!(
                "linear curves need step > 0, span >= step and v_eq > 1 (step {step}, span {span}, v_eq {v_eq})"
            )));
        }
        let below = ((span.min(v_eq)) / step).floor() as i64;
        let above = (span / step).floor() as i64;
        let supply: Vec<(f64, f64)> = (-below..=above)
            .map(|k| {
                let v = v_eq + k as f64 * step;
                (2.0 * alpha * (v - v_eq) + beta, v)
            })
            .collect();
        let v_max = supply.last().expect("non-empty grid").1;
        let v_min = supply[0].1;
        let demand = [
            (beta + 2000.0, v_min.min(v_eq - 1.0) - 1.0),
            (beta + 1000.0, v_eq - 1.0),
            (beta - 1000.0, v_eq + 1.0),
            (beta - 2000.0, v_max.max(v_eq + 1.0) + 1.0),
        ];
        let demand: Vec<(f64, f64)> = demand.iter().map(|&(p, v)| (p, v.max(0.0))).collect();
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(4);
        for p in demand {
            if dedup.last().is_none_or(|q| p.1 > q.1) {
                dedup.push(p);
            }
        }
        Ok(ZoneCurves {
            supply: BidCurve::from_pairs(Side::Supply, &supply)?,
            demand: BidCurve::from_pairs(Side::Demand, &dedup)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveArchive {
    entries: BTreeMap<(String, i64), ZoneCurves>,
}

impl CurveArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, zone: impl Into<String>, timestep: i64, curves: ZoneCurves) {
        self.entries.insert((zone.into(), timestep), curves);
    }

    pub fn get(&self, zone: &str, timestep: i64) -> Option<&ZoneCurves> {
        self.entries.get(&(zone.to_string(), timestep))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64, &ZoneCurves)> {
        self.entries.iter().map(|((z, t), c)| (z.as_str(), *t, c))
    }

    pub fn zones(&self) -> Vec<&str> {
        let mut zones: Vec<&str> = self.entries.keys().map(|(z, _)| z.as_str()).collect();
        zones.dedup();
        zones
    }

    /// Writes the archive as one CSV file, rows sorted by (zone, timestep, side, volume).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        writeln!(out, "{}", CURVE_HEADER.join(",")).expect("write to Vec");
        for ((zone, t), curves) in &self.entries {
            for curve in [&curves.demand, &curves.supply] {
                for p in curve.points() {
                    writeln!(out, "{zone},{t},{},{},{}", curve.side(), p.price, p.volume).expect("write to Vec");
                }
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Loads every curve under `path`, validating monotonicity row by row.
pub fn parse_bid_curves(path: impl AsRef<Path>) -> Result<CurveArchive> {
    let path = path.as_ref();
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let files: Vec<PathBuf> = if meta.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };

    let mut raw: BTreeMap<(String, i64, Side), Vec<BidPoint>> = BTreeMap::new();
    for file in &files {
        let text = std::fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
        read_rows(&file.display().to_string(), &text, &mut raw)?;
    }
    assemble(raw)
}

/// Parses curve rows from CSV text (single file).
pub fn parse_bid_curves_str(name: &str, text: &str) -> Result<CurveArchive> {
    let mut raw = BTreeMap::new();
    read_rows(name, text, &mut raw)?;
    assemble(raw)
}

fn read_rows(name: &str, text: &str, raw: &mut BTreeMap<(String, i64, Side), Vec<BidPoint>>) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::row(name, 1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(Error::row(name, 1, format!("expected header {}", CURVE_HEADER.join(","))));
    }
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::row(name, row, e.to_string()))?;
        if record.len() != 5 {
            return Err(Error::row(name, row, format!("expected 5 fields, found {}", record.len())));
        }
        let zone = record[0].to_string();
        if zone.is_empty() {
            return Err(Error::row(name, row, "empty zone"));
        }
        let timestep: i64 =
            record[1].parse().map_err(|_| Error::row(name, row, format!("bad timestep {:?}", &record[1])))?;
        let side: Side = record[2].parse().map_err(|e: String| Error::row(name, row, e))?;
        let number = |k: usize| -> Result<f64> {
            record[k].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::row(name, row, format!("bad number {:?} in column {}", &record[k], CURVE_HEADER[k]))
            })
        };
        let point = BidPoint::new(number(3)?, number(4)?);
        let points = raw.entry((zone, timestep, side)).or_default();
        if let Some(prev) = points.last() {
            if let Some(msg) = monotonicity_error(side, prev, &point) {
                return Err(Error::row(name, row, msg));
            }
        }
        points.push(point);
    }
    Ok(())
}

fn assemble(raw: BTreeMap<(String, i64, Side), Vec<BidPoint>>) -> Result<CurveArchive> {
    let mut pending: BTreeMap<(String, i64), (Option<BidCurve>, Option<BidCurve>)> = BTreeMap::new();
    for ((zone, t, side), points) in raw {
        let curve = BidCurve::new(side, points).map_err(|e| Error::Data(format!("zone {zone} timestep {t}: {e}")))?;
        let slot = pending.entry((zone, t)).or_default();
        match side {
            Side::Supply => slot.0 = Some(curve),
            Side::Demand => slot.1 = Some(curve),
        }
    }
    let mut archive = CurveArchive::new();
    for ((zone, t), (supply, demand)) in pending {
        match (supply, demand) {
            (Some(supply), Some(demand)) => archive.insert(zone, t, ZoneCurves { supply, demand }),
            (None, _) => return Err(Error::Data(format!("zone {zone} timestep {t}: missing supply curve"))),
            (_, None) => return Err(Error::Data(format!("zone {zone} timestep {t}: missing demand curve"))),
        }
    }
    Ok(archive)
}
