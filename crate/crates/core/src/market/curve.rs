use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Supply,
    Demand,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Supply => "supply",
            Side::Demand => "demand",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "supply" => Ok(Side::Supply),
            "demand" => Ok(Side::Demand),
            other => Err(format!("unknown side {other:?} (expected supply or demand)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidPoint {
    /// EUR/MWh
    pub price: f64,
    /// Cumulative volume, MWh.
    pub volume: f64,
}

impl BidPoint {
    pub fn new(price: f64, volume: f64) -> Self {
        BidPoint { price, volume }
    }
}

/// Hourly aggregated bid curve, interpolated linearly between points.
///
/// Volumes are strictly increasing. Supply prices never fall as volume grows
/// and demand prices never rise.
#[derive(Debug, Clone, PartialEq)]
pub struct BidCurve {
    side: Side,
    points: Vec<BidPoint>,
}

impl BidCurve {
    pub fn new(side: Side, points: Vec<BidPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Data(format!("{side} curve needs at least two points")));
        }
        for (i, w) in points.windows(2).enumerate() {
            if let Some(msg) = monotonicity_error(side, &w[0], &w[1]) {
                return Err(Error::Data(format!("{side} curve point {}: {msg}", i + 1)));
            }
        }
        Ok(BidCurve { side, points })
    }

    /// Convenience constructor from `(price, volume)` pairs.
    pub fn from_pairs(side: Side, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(side, pairs.iter().map(|&(p, v)| BidPoint::new(p, v)).collect())
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn points(&self) -> &[BidPoint] {
        &self.points
    }

    pub fn min_volume(&self) -> f64 {
        self.points[0].volume
    }

    pub fn max_volume(&self) -> f64 {
        self.points[self.points.len() - 1].volume
    }

    /// Interpolated price at `volume`, or `None` outside the curve's range.
    pub fn price_at_volume(&self, volume: f64) -> Option<f64> {
        if !(volume >= self.min_volume() && volume <= self.max_volume()) {
            return None;
        }
        let k = self.points.partition_point(|p| p.volume < volume);
        if k == 0 {
            return Some(self.points[0].price);
        }
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        let t = (volume - a.volume) / (b.volume - a.volume);
        Some(a.price + t * (b.price - a.price))
    }
}

/// Checks one consecutive pair of points against the curve's ordering rules.
pub(crate) fn monotonicity_error(side: Side, prev: &BidPoint, next: &BidPoint) -> Option<String> {
    if !prev.volume.is_finite() || !next.volume.is_finite() || !prev.price.is_finite() || !next.price.is_finite() {
        return Some("non-finite value".into());
    }
    if next.volume <= prev.volume {
        return Some(format!("cumulative volume must increase strictly ({} after {})", next.volume, prev.volume));
    }
    match side {
        Side::Supply if next.price < prev.price => {
            Some(format!("supply price must not decrease ({} after {})", next.price, prev.price))
        }
        Side::Demand if next.price > prev.price => {
            Some(format!("demand price must not increase ({} after {})", next.price, prev.price))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub rho_eq: f64,
    pub v_eq: f64,
}

/// Intersects the interpolated supply and demand curves.
///
/// Supply minus demand is non-decreasing in volume, so its zero set is a
/// single interval. A crossing inside a segment is solved exactly; a shared
/// flat stretch resolves to the midpoint of the overlap.
pub fn find_equilibrium(supply: &BidCurve, demand: &BidCurve) -> Result<EquilibriumPoint> {
    let lo = supply.min_volume().max(demand.min_volume());
    let hi = supply.max_volume().min(demand.max_volume());
    if lo > hi {
        return Err(Error::NoIntersection);
    }

    let mut grid: Vec<f64> =
        supply.points.iter().chain(demand.points.iter()).map(|p| p.volume).filter(|&v| v > lo && v < hi).collect();
    grid.push(lo);
    grid.push(hi);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let diff = |v: f64| {
        let s = supply.price_at_volume(v).expect("volume inside supply range");
        let d = demand.price_at_volume(v).expect("volume inside demand range");
        s - d
    };
    let values: Vec<f64> = grid.iter().map(|&v| diff(v)).collect();
    let last = grid.len() - 1;
    if values[0] > 0.0 || values[last] < 0.0 {
        return Err(Error::NoIntersection);
    }

    let root = |i: usize| {
        // zero of the linear difference on [grid[i], grid[i+1]]
        let (v0, v1, d0, d1) = (grid[i], grid[i + 1], values[i], values[i + 1]);
        v0 + (0.0 - d0) * (v1 - v0) / (d1 - d0)
    };
    let first = values.iter().position(|&d| d >= 0.0).expect("checked above");
    let start = if first == 0 || values[first] == 0.0 { grid[first] } else { root(first - 1) };
    let last_nonpos = values.iter().rposition(|&d| d <= 0.0).expect("checked above");
    let end = if last_nonpos == last || values[last_nonpos] == 0.0 { grid[last_nonpos] } else { root(last_nonpos) };

    let v_eq = 0.5 * (start + end);
    let s = supply.price_at_volume(v_eq).expect("inside range");
    let d = demand.price_at_volume(v_eq).expect("inside range");
    Ok(EquilibriumPoint { rho_eq: 0.5 * (s + d), v_eq })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_crossing() {
        let s = BidCurve::from_pairs(Side::Supply, &[(0.0, 0.0), (100.0, 1000.0)]).unwrap();
        let d = BidCurve::from_pairs(Side::Demand, &[(100.0, 0.0), (0.0, 1000.0)]).unwrap();
        let eq = find_equilibrium(&s, &d).unwrap();
        assert!((eq.rho_eq - 50.0).abs() < 1e-12);
        assert!((eq.v_eq - 500.0).abs() < 1e-12);
    }

    #[test]
    fn flat_overlap_takes_midpoint() {
        // Supply flat at 30 on [0, 1000]; demand flat at 30 on [200, 800].
        let s = BidCurve::from_pairs(Side::Supply, &[(30.0, 0.0), (30.0, 1000.0)]).unwrap();
        let d = BidCurve::from_pairs(Side::Demand, &[(30.0, 200.0), (30.0, 800.0)]).unwrap();
        let eq = find_equilibrium(&s, &d).unwrap();
        assert_eq!(eq.rho_eq, 30.0);
        assert_eq!(eq.v_eq, 500.0);

        // Flat stretch inside steeper curves: supply at 30 on [400, 600],
        // demand at 30 on [300, 700] -> common flat stretch [400, 600].
        let s =
            BidCurve::from_pairs(Side::Supply, &[(0.0, 0.0), (30.0, 400.0), (30.0, 600.0), (90.0, 1000.0)]).unwrap();
        let d =
            BidCurve::from_pairs(Side::Demand, &[(90.0, 0.0), (30.0, 300.0), (30.0, 700.0), (0.0, 1000.0)]).unwrap();
        let eq = find_equilibrium(&s, &d).unwrap();
        assert_eq!(eq.rho_eq, 30.0);
        assert!((eq.v_eq - 500.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_inside_segment_with_offset_breakpoints() {
        // s(v) = 10 + 0.1 v on [0, 1000]; d(v) = 200 - 0.2 v  on [0, 900]
        // -> 10 + 0.1 v = 200 - 0.2 v -> v = 633.33..., price = 73.333...
        let s = BidCurve::from_pairs(Side::Supply, &[(10.0, 0.0), (40.0, 300.0), (110.0, 1000.0)]).unwrap();
        let d = BidCurve::from_pairs(Side::Demand, &[(200.0, 0.0), (100.0, 500.0), (20.0, 900.0)]).unwrap();
        let eq = find_equilibrium(&s, &d).unwrap();
        let v = 190.0 / 0.3;
        assert!((eq.v_eq - v).abs() < 1e-9);
        assert!((eq.rho_eq - (10.0 + 0.1 * v)).abs() < 1e-9);
    }

    #[test]
    fn disjoint_curves_do_not_intersect() {
        let s = BidCurve::from_pairs(Side::Supply, &[(100.0, 0.0), (200.0, 1000.0)]).unwrap();
        let d = BidCurve::from_pairs(Side::Demand, &[(90.0, 0.0), (0.0, 1000.0)]).unwrap();
        assert!(matches!(find_equilibrium(&s, &d), Err(Error::NoIntersection)));

        let s = BidCurve::from_pairs(Side::Supply, &[(0.0, 0.0), (10.0, 100.0)]).unwrap();
        let d = BidCurve::from_pairs(Side::Demand, &[(90.0, 200.0), (0.0, 1000.0)]).unwrap();
        assert!(matches!(find_equilibrium(&s, &d), Err(Error::NoIntersection)));
    }

    #[test]
    fn curve_invariants_rejected() {
        assert!(BidCurve::from_pairs(Side::Supply, &[(10.0, 0.0), (5.0, 10.0)]).is_err());
        assert!(BidCurve::from_pairs(Side::Demand, &[(10.0, 0.0), (15.0, 10.0)]).is_err());
        assert!(BidCurve::from_pairs(Side::Supply, &[(10.0, 10.0), (15.0, 10.0)]).is_err());
        assert!(BidCurve::from_pairs(Side::Supply, &[(10.0, 10.0)]).is_err());
    }

    #[test]
    fn interpolation() {
        let s = BidCurve::from_pairs(Side::Supply, &[(0.0, 0.0), (10.0, 10.0), (30.0, 20.0)]).unwrap();
        assert_eq!(s.price_at_volume(5.0), Some(5.0));
        assert_eq!(s.price_at_volume(15.0), Some(20.0));
        assert_eq!(s.price_at_volume(20.0), Some(30.0));
        assert_eq!(s.price_at_volume(20.5), None);
        assert_eq!(s.price_at_volume(-1.0), None);
    }
}
