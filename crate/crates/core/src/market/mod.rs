//! Bid curves, market equilibrium and the fitted quadratic cost of generation.

mod archive;
mod cost;
mod curve;

pub use archive::{parse_bid_curves, parse_bid_curves_str, CurveArchive, ZoneCurves, CURVE_HEADER};
pub use cost::{
    cg_at, fit_cost_model, offshore_cost_model, pn_bounds, price_at, ZoneCostModel, ALPHA_FLOOR, DEFAULT_DELTA_RHO_INC,
};
pub use curve::{find_equilibrium, BidCurve, BidPoint, EquilibriumPoint, Side};
