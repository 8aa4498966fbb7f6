use super::problem::{NlpProblem, INFINITE_BOUND};
use super::types::{SolveOutcome, StartDuals, StartPoint};

/// Fraction of the bound range kept between a warm-started variable and its bounds.
pub const WARM_PUSH: f64 = 1e-5;

/// Builds a warm start from the previous outcome's primal point and multipliers.
///
/// Falls back to a flat start when the layouts differ or the previous point
/// is not finite.
pub fn warm_start<P: NlpProblem + ?Sized>(previous: &SolveOutcome, problem: &P) -> StartPoint {
    let n = problem.num_vars();
    if previous.layout != problem.layout_fingerprint()
        || previous.x.len() != n
        || previous.x.iter().any(|v| !v.is_finite())
    {
        log::debug!("warm start: layout mismatch, using flat start");
        return StartPoint::flat(problem);
    }
    let (lo, hi) = problem.bounds();
    let x = previous
        .x
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let (l, u) = (lo[i], hi[i]);
            match (l > -INFINITE_BOUND, u < INFINITE_BOUND) {
                (true, true) => {
                    let m = WARM_PUSH * (u - l);
                    if m > 0.0 {
                        x.clamp(l + m, u - m)
                    } else {
                        0.5 * (l + u)
                    }
                }
                (true, false) => x.max(l + WARM_PUSH * l.abs().max(1.0)),
                (false, true) => x.min(u - WARM_PUSH * u.abs().max(1.0)),
                (false, false) => x,
            }
        })
        .collect();
    let duals = (previous.lambda_eq.len() == problem.num_eq()
        && previous.lambda_ineq.len() == problem.num_ineq()
        && previous.z_lower.len() == n
        && previous.z_upper.len() == n)
        .then(|| StartDuals {
            lambda_eq: previous.lambda_eq.clone(),
            lambda_ineq: previous.lambda_ineq.clone(),
            z_lower: previous.z_lower.clone(),
            z_upper: previous.z_upper.clone(),
        });
    StartPoint { x, warm: true, duals }
}
