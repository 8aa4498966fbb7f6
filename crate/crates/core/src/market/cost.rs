use serde::{Deserialize, Serialize};

use super::curve::{find_equilibrium, BidCurve, EquilibriumPoint};
use crate::error::{Error, Result};

/// Default maximum tolerated price increase, EUR/MWh.
pub const DEFAULT_DELTA_RHO_INC: f64 = 50.0;

/// Lower bound on the fitted curvature (EUR/MWh per MW). Keeps the maximum
/// import bound finite and the cost of generation strictly convex.
pub const ALPHA_FLOOR: f64 = 1e-6;

/// Quadratic cost of generation of one zone-hour:
/// `CG(P_N) = α P_N² + β P_N`, marginal price `ρ(P_N) = 2α P_N + β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneCostModel {
    pub alpha: f64,
    pub beta: f64,
    pub rho_eq: f64,
    pub pn_min: f64,
    pub pn_max: f64,
    pub delta_rho_inc: f64,
}

impl ZoneCostModel {
    /// Model with the given coefficients and untruncated bounds
    /// (`−β/2α` or 0 for imports, `Δρ_inc/2α` for exports). Requires `α > 0`.
    pub fn from_coefficients(alpha: f64, beta: f64, delta_rho_inc: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::NonPositiveAlpha(alpha));
        }
        Ok(ZoneCostModel {
            alpha,
            beta,
            rho_eq: beta,
            pn_min: if beta > 0.0 { -beta / (2.0 * alpha) } else { 0.0 },
            pn_max: delta_rho_inc / (2.0 * alpha),
            delta_rho_inc,
        })
    }

    /// Marginal price (EUR/MWh) at net position `pn` (MW).
    pub fn price_at(&self, pn: f64) -> f64 {
        2.0 * self.alpha * pn + self.beta
    }

    /// Cost of generation (EUR/h) at net position `pn` (MW), fixed cost omitted.
    pub fn cg_at(&self, pn: f64) -> f64 {
        (self.alpha * pn + self.beta) * pn
    }
}

pub fn price_at(model: &ZoneCostModel, pn: f64) -> f64 {
    model.price_at(pn)
}

pub fn cg_at(model: &ZoneCostModel, pn: f64) -> f64 {
    model.cg_at(pn)
}

/// Zero-cost model for an offshore zone whose export is limited only by its
/// installed capacity (MW).
pub fn offshore_cost_model(capacity: f64) -> ZoneCostModel {
    let cap = capacity.abs();
    ZoneCostModel { alpha: 0.0, beta: 0.0, rho_eq: 0.0, pn_min: -cap, pn_max: cap, delta_rho_inc: 0.0 }
}

/// Net-position bounds of a fitted zone.
///
/// The import bound is the vertex of the fitted cost parabola (`−β/2α`) when
/// `β > 0` and zero otherwise. The export bound is where the fitted price has
/// risen by `delta_rho_inc`, capped at the volume the supply curve still
/// offers beyond equilibrium.
pub fn pn_bounds(
    alpha: f64,
    beta: f64,
    supply: &BidCurve,
    eq: &EquilibriumPoint,
    delta_rho_inc: f64,
) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    let pn_min = if beta > 0.0 { -beta / (2.0 * alpha) } else { 0.0 };
    let headroom = (supply.max_volume() - eq.v_eq).max(0.0);
    let pn_max = (delta_rho_inc / (2.0 * alpha)).min(headroom).max(0.0);
    Ok((pn_min, pn_max))
}

/// Supply-curve points re-centred on the equilibrium: `(P_N, price)`.
fn recentred_points(supply: &BidCurve, eq: &EquilibriumPoint) -> Vec<(f64, f64)> {
    supply.points().iter().map(|p| (p.volume - eq.v_eq, p.price)).collect()
}

/// Ordinary least squares `price = slope · pn + intercept`.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, mean_y - slope * mean_x)
}

/// Points used for the fit: the supply vertices priced within the window
/// around equilibrium. The window doubles up to 4× when too sparse; failing
/// that, the two vertices bracketing equilibrium are used.
pub(crate) fn fit_window(supply: &BidCurve, eq: &EquilibriumPoint, delta_rho_inc: f64) -> Vec<(f64, f64)> {
    let points = recentred_points(supply, eq);
    for factor in [1.0, 2.0, 4.0] {
        let half_width = factor * delta_rho_inc;
        let selected: Vec<(f64, f64)> =
            points.iter().copied().filter(|&(_, price)| (price - eq.rho_eq).abs() <= half_width).collect();
        if selected.len() >= 2 {
            return selected;
        }
    }
    let upper = points.partition_point(|&(pn, _)| pn <= 0.0).clamp(1, points.len() - 1);
    vec![points[upper - 1], points[upper]]
}

/// Fits the quadratic cost of generation of one zone-hour.
pub fn fit_cost_model(supply: &BidCurve, demand: &BidCurve, delta_rho_inc: f64) -> Result<ZoneCostModel> {
    let eq = find_equilibrium(supply, demand)?;
    let window = fit_window(supply, &eq, delta_rho_inc);
    let (slope, intercept) = least_squares(&window);
    let alpha = (0.5 * slope).max(ALPHA_FLOOR);
    let beta = intercept;
    let (pn_min, pn_max) = pn_bounds(alpha, beta, supply, &eq, delta_rho_inc)?;
    Ok(ZoneCostModel { alpha, beta, rho_eq: eq.rho_eq, pn_min, pn_max, delta_rho_inc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::curve::Side;
    use proptest::prelude::*;

    /// Near-vertical demand crossing `price` exactly at `at_volume`.
    fn steep_demand(at_volume: f64, price: f64) -> BidCurve {
        BidCurve::from_pairs(
            Side::Demand,
            &[
                (price + 2000.0, 0.0),
                (price + 1000.0, at_volume - 1.0),
                (price - 1000.0, at_volume + 1.0),
                (price - 2000.0, 1e6),
            ],
        )
        .unwrap()
    }

    /// Supply whose price is exactly `2α(v − v0) + β` on a regular grid.
    fn linear_supply(alpha: f64, beta: f64, v0: f64, n: usize, dv: f64) -> BidCurve {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v = i as f64 * dv;
                (2.0 * alpha * (v - v0) + beta, v)
            })
            .collect();
        BidCurve::from_pairs(Side::Supply, &pts).unwrap()
    }

    #[test]
    fn exact_linear_supply_is_recovered() {
        // ρ = 0.02 P_N + 40 around an equilibrium at v = 5000.
        let supply = linear_supply(0.01, 40.0, 5000.0, 101, 100.0);
        let m = fit_cost_model(&supply, &steep_demand(5000.0, 40.0), 50.0).unwrap();
        assert!((m.alpha - 0.01).abs() < 1e-9);
        assert!((m.beta - 40.0).abs() < 1e-9);
        assert!((m.rho_eq - 40.0).abs() < 1e-6);
    }

    #[test]
    fn flat_supply_hits_alpha_floor() {
        let supply = BidCurve::from_pairs(Side::Supply, &[(25.0, 0.0), (25.0, 5000.0), (25.0, 10000.0)]).unwrap();
        let m = fit_cost_model(&supply, &steep_demand(4000.0, 25.0), 50.0).unwrap();
        assert_eq!(m.alpha, ALPHA_FLOOR);
        assert!((m.beta - 25.0).abs() < 1e-12);
        assert_eq!(m.cg_at(0.0), 0.0);
    }

    #[test]
    fn sparse_window_widens_then_brackets() {
        // Vertices at prices 0, 60, 140, 300; equilibrium at v = 1000 (price 60).
        let supply =
            BidCurve::from_pairs(Side::Supply, &[(0.0, 0.0), (60.0, 1000.0), (140.0, 2000.0), (300.0, 3000.0)])
                .unwrap();
        let eq = EquilibriumPoint { rho_eq: 60.0, v_eq: 1000.0 };
        // Window ±10 holds one vertex, ±20 one, ±40 one; then bracketing.
        let w = fit_window(&supply, &eq, 10.0);
        assert_eq!(w, vec![(0.0, 60.0), (1000.0, 140.0)]);
        // ±30 holds one; doubled to ±60 it picks up the vertex priced 0.
        let w = fit_window(&supply, &eq, 30.0);
        assert_eq!(w, vec![(-1000.0, 0.0), (0.0, 60.0)]);
        // Equilibrium strictly inside a segment brackets with its end points.
        let eq = EquilibriumPoint { rho_eq: 100.0, v_eq: 1500.0 };
        let w = fit_window(&supply, &eq, 1.0);
        assert_eq!(w, vec![(-500.0, 60.0), (500.0, 140.0)]);
    }

    #[test]
    fn bounds_follow_import_vertex_rule() {
        let supply = linear_supply(0.01, 50.0, 0.0, 2, 1e6);
        let eq = EquilibriumPoint { rho_eq: 50.0, v_eq: 0.0 };
        let (lo, hi) = pn_bounds(0.01, 50.0, &supply, &eq, 50.0).unwrap();
        assert_eq!(lo, -2500.0);
        assert_eq!(hi, 2500.0);
        let (lo, _) = pn_bounds(0.01, -5.0, &supply, &eq, 50.0).unwrap();
        assert_eq!(lo, 0.0);
        assert!(matches!(pn_bounds(0.0, 1.0, &supply, &eq, 50.0), Err(Error::NonPositiveAlpha(_))));
    }

    #[test]
    fn export_bound_truncated_by_available_volume() {
        let supply = linear_supply(0.01, 50.0, 1000.0, 3, 600.0); // up to 1200 MWh
        let eq = EquilibriumPoint { rho_eq: 50.0, v_eq: 1000.0 };
        let (_, hi) = pn_bounds(0.01, 50.0, &supply, &eq, 50.0).unwrap();
        assert_eq!(hi, 200.0);
    }

    #[test]
    fn price_and_cost_evaluation() {
        let m = ZoneCostModel {
            alpha: 0.01,
            beta: 50.0,
            rho_eq: 50.0,
            pn_min: -2500.0,
            pn_max: 2500.0,
            delta_rho_inc: 50.0,
        };
        assert_eq!(price_at(&m, 0.0), 50.0);
        assert_eq!(cg_at(&m, 0.0), 0.0);
        assert!(m.price_at(100.0) > m.beta);
        assert!(m.price_at(-100.0) < m.beta);
        assert!((m.cg_at(100.0) - 5100.0).abs() < 1e-9);
        assert!(m.price_at(m.pn_min).abs() < 1e-12);
    }

    #[test]
    fn offshore_model_is_free() {
        let m = offshore_cost_model(3500.0);
        assert_eq!(m.cg_at(3500.0), 0.0);
        assert_eq!(m.price_at(-1234.0), 0.0);
        assert!(m.pn_min <= 0.0 && 0.0 <= m.pn_max);
        assert_eq!(m.pn_max, 3500.0);
    }

    #[test]
    fn demand_shift_keeps_alpha() {
        let supply = linear_supply(0.015, 30.0, 0.0, 201, 100.0);
        let a = fit_cost_model(&supply, &steep_demand(6000.0, 210.0), 50.0).unwrap();
        let b = fit_cost_model(&supply, &steep_demand(9000.0, 300.0), 50.0).unwrap();
        assert!((a.alpha - b.alpha).abs() < 1e-9);
        assert!(b.rho_eq > a.rho_eq);
    }

    proptest! {
        #[test]
        fn derivative_of_cost_is_price(alpha in 0.0f64..1.0, beta in -200.0f64..300.0, pn in -5000.0f64..5000.0) {
            let m = ZoneCostModel { alpha, beta, rho_eq: beta, pn_min: -1.0, pn_max: 1.0, delta_rho_inc: 50.0 };
            let h = 1e-3;
            let fd = (m.cg_at(pn + h) - m.cg_at(pn - h)) / (2.0 * h);
            prop_assert!((fd - m.price_at(pn)).abs() <= 1e-6 * (1.0 + m.price_at(pn).abs()));
        }

        #[test]
        fn fit_recovers_linear_rule(alpha in 1e-3f64..0.1, beta in 5.0f64..150.0, v_eq_steps in 20usize..80) {
            let v0 = v_eq_steps as f64 * 100.0;
            let supply = linear_supply(alpha, beta, v0, 101, 100.0);
            let m = fit_cost_model(&supply, &steep_demand(v0, beta), 50.0).unwrap();
            prop_assert!(((m.alpha - alpha) / alpha).abs() < 1e-6);
            prop_assert!(((m.beta - beta) / beta).abs() < 1e-6);
            prop_assert!(m.pn_min <= 0.0 && 0.0 <= m.pn_max);
            prop_assert_eq!(m.cg_at(0.0), 0.0);
        }
    }
}
