//! Primal-dual interior point method.
//!
//! Inequalities become `h(x) + s = 0` with `s >= 0`; bounds and slacks carry
//! logarithmic barriers. Each iteration solves the reduced KKT system
//!
//! ```text
//!     [ W + Σx + δw·I   Jgᵀ    Jhᵀ             ] [dx ]
//!     [ Jg              -δc·I  0               ] [dλg]  = rhs
//!     [ Jh              0      -(Σs+δw)⁻¹-δc·I ] [dλh]
//! ```
//!
//! with inertia correction, then backtracks under a filter on (constraint
//! violation, barrier objective) with up to four second-order corrections.

#![allow(clippy::needless_range_loop)]

use super::ldl::{LdlError, LdlFactor, NodeRole, SymbolicLdl};
use super::problem::{NlpProblem, INFINITE_BOUND};
use super::types::{IterationLog, SolveOutcome, SolveStatus, SolverOptions, StartPoint};
use super::warm::WARM_PUSH;

const KAPPA_EPS: f64 = 10.0;
const KAPPA_MU: f64 = 0.2;
const THETA_MU: f64 = 1.5;
const KAPPA_SIGMA: f64 = 1e10;
// filter line search
const ETA_PHI: f64 = 1e-4;
const GAMMA_THETA: f64 = 1e-5;
const GAMMA_PHI: f64 = 1e-8;
const GAMMA_ALPHA: f64 = 0.05;
const DELTA_SWITCH: f64 = 1.0;
const S_THETA: f64 = 1.1;
const S_PHI: f64 = 2.3;
const MAX_SOC: usize = 4;
const SOC_KAPPA: f64 = 0.99;
const PIVOT_TOL: f64 = 1e-14;
const CURVATURE_KAPPA: f64 = 1e-10;
const DELTA_MAX: f64 = 1e40;
const LAMBDA_INIT_MAX: f64 = 1e3;
const STALL_RESIDUAL: f64 = 1e-4;
const STALL_MU: f64 = 1e-6;
const STALL_ITERS: usize = 30;
const FIXED_WIDTH: f64 = 1e-10;

/// KKT pattern with fixed entry order: Hessian, x diagonal, Jg, Jh, constraint diagonal.
struct Kkt {
    n: usize,
    me: usize,
    mi: usize,
    sym: SymbolicLdl,
    hess: Vec<(usize, usize)>,
    je: Vec<(usize, usize)>,
    ji: Vec<(usize, usize)>,
}

impl Kkt {
    fn new<P: NlpProblem + ?Sized>(p: &P) -> Self {
        let (n, me, mi) = (p.num_vars(), p.num_eq(), p.num_ineq());
        let hess = p.hessian_structure();
        let je = p.eq_jacobian_structure();
        let ji = p.ineq_jacobian_structure();
        let mut entries = Vec::with_capacity(hess.len() + n + je.len() + ji.len() + me + mi);
        entries.extend(hess.iter().copied());
        entries.extend((0..n).map(|k| (k, k)));
        entries.extend(je.iter().map(|&(r, c)| (n + r, c)));
        entries.extend(ji.iter().map(|&(r, c)| (n + me + r, c)));
        entries.extend((n..n + me + mi).map(|k| (k, k)));
        let mut roles = vec![NodeRole::LinearPrimal; n];
        for &(r, c) in &hess {
            if r == c {
                roles[r] = NodeRole::Primal;
            }
        }
        roles.resize(n + me + mi, NodeRole::Constraint);
        let sym = SymbolicLdl::new(n + me + mi, &entries, &roles);
        Kkt { n, me, mi, sym, hess, je, ji }
    }

    fn assemble(&self, hess: &[f64], xdiag: &[f64], je: &[f64], ji: &[f64], cdiag: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(hess.len() + xdiag.len() + je.len() + ji.len() + cdiag.len());
        v.extend_from_slice(hess);
        v.extend_from_slice(xdiag);
        v.extend_from_slice(je);
        v.extend_from_slice(ji);
        v.extend_from_slice(cdiag);
        v
    }
}

/// Function values and derivatives at one primal point.
struct Eval {
    f: f64,
    grad: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    je: Vec<f64>,
    ji: Vec<f64>,
}

impl Eval {
    fn at<P: NlpProblem + ?Sized>(p: &P, k: &Kkt, x: &[f64]) -> Self {
        let mut e = Eval {
            f: p.objective(x),
            grad: vec![0.0; k.n],
            g: vec![0.0; k.me],
            h: vec![0.0; k.mi],
            je: vec![0.0; k.je.len()],
            ji: vec![0.0; k.ji.len()],
        };
        p.gradient(x, &mut e.grad);
        p.eq_values(x, &mut e.g);
        p.ineq_values(x, &mut e.h);
        p.eq_jacobian_values(x, &mut e.je);
        p.ineq_jacobian_values(x, &mut e.ji);
        e
    }
}

struct Bounds {
    xl: Vec<f64>,
    xu: Vec<f64>,
    has_l: Vec<bool>,
    has_u: Vec<bool>,
}

impl Bounds {
    fn dl(&self, x: &[f64], i: usize) -> f64 {
        x[i] - self.xl[i]
    }
    fn du(&self, x: &[f64], i: usize) -> f64 {
        self.xu[i] - x[i]
    }
}

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    s: Vec<f64>,
    le: Vec<f64>,
    li: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
    v: Vec<f64>,
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dle: Vec<f64>,
    dli: Vec<f64>,
}

struct Residuals {
    dual: f64,
    primal: f64,
    eq_inf: f64,
    ineq_viol: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Runs the interior point method from `start`.
pub fn solve<P: NlpProblem + ?Sized>(problem: &P, start: &StartPoint, opts: &SolverOptions) -> SolveOutcome {
    let (n, me, mi) = (problem.num_vars(), problem.num_eq(), problem.num_ineq());
    let layout = problem.layout_fingerprint();
    let fail = |x: Vec<f64>| SolveOutcome {
        status: SolveStatus::NumericalFailure,
        x,
        lambda_eq: vec![0.0; me],
        lambda_ineq: vec![0.0; mi],
        z_lower: vec![0.0; n],
        z_upper: vec![0.0; n],
        iterations: 0,
        kkt_residual: f64::INFINITY,
        objective: f64::NAN,
        trace: Vec::new(),
        layout,
    };

    let (lo, hi) = problem.bounds();
    if start.x.len() != n || lo.len() != n || hi.len() != n || start.x.iter().any(|v| !v.is_finite()) {
        log::warn!("solver: start point or bounds do not match the problem dimension");
        return fail(start.x.clone());
    }
    let mut bounds = Bounds {
        xl: lo.to_vec(),
        xu: hi.to_vec(),
        has_l: lo.iter().map(|&l| l > -INFINITE_BOUND).collect(),
        has_u: hi.iter().map(|&u| u < INFINITE_BOUND).collect(),
    };
    for i in 0..n {
        if bounds.has_l[i] && bounds.has_u[i] {
            let width = bounds.xu[i] - bounds.xl[i];
            if width < 0.0 {
                log::warn!("solver: variable {i} has lower bound above upper bound");
                return fail(start.x.clone());
            }
            if width < FIXED_WIDTH {
                let mid = 0.5 * (bounds.xl[i] + bounds.xu[i]);
                bounds.xl[i] = mid - 0.5 * FIXED_WIDTH;
                bounds.xu[i] = mid + 0.5 * FIXED_WIDTH;
            }
        }
    }

    let kkt = Kkt::new(problem);
    let push = if start.warm { WARM_PUSH } else { 1e-2 };
    let mut it = Iterate {
        x: push_inside(&start.x, &bounds, push),
        s: vec![0.0; mi],
        le: vec![0.0; me],
        li: vec![0.0; mi],
        zl: (0..n).map(|i| if bounds.has_l[i] { 1.0 } else { 0.0 }).collect(),
        zu: (0..n).map(|i| if bounds.has_u[i] { 1.0 } else { 0.0 }).collect(),
        v: vec![1.0; mi],
    };
    let mut ev = Eval::at(problem, &kkt, &it.x);
    for i in 0..mi {
        it.s[i] = (-ev.h[i]).max(push * ev.h[i].abs().max(1.0));
    }
    let mut mu = if start.warm { opts.warm_mu_init } else { opts.mu_init };
    match &start.duals {
        Some(d)
            if d.lambda_eq.len() == me && d.lambda_ineq.len() == mi && d.z_lower.len() == n && d.z_upper.len() == n =>
        {
            // keep every complementarity product at least μ
            it.le.copy_from_slice(&d.lambda_eq);
            for i in 0..mi {
                it.li[i] = d.lambda_ineq[i].max(mu / it.s[i]);
                it.v[i] = it.li[i];
            }
            for i in 0..n {
                if bounds.has_l[i] {
                    it.zl[i] = d.z_lower[i].max(mu / bounds.dl(&it.x, i));
                }
                if bounds.has_u[i] {
                    it.zu[i] = d.z_upper[i].max(mu / bounds.du(&it.x, i));
                }
            }
        }
        _ => init_multipliers(&kkt, &ev, &mut it),
    }

    let mu_floor = opts.kkt_tol / 10.0;
    let theta_init = constraint_norm(&ev, &it.s).max(1.0);
    let theta_max = 1e4 * theta_init;
    let theta_min = 1e-4 * theta_init;
    let mut filter: Vec<(f64, f64)> = Vec::new();
    let mut last_delta_w = 0.0;
    let mut alpha_taken = 0.0;
    let mut stall = 0usize;
    let mut trace = Vec::new();
    let mut hess = vec![0.0; kkt.hess.len()];

    let mut iter = 0usize;
    let (status, residual) = loop {
        let res = residuals(&kkt, &ev, &it);
        let compl0 = complementarity(&bounds, &it, 0.0);
        let e0 = res.dual.max(res.primal).max(compl0);

        let log_row = IterationLog {
            iter,
            mu,
            objective: ev.f,
            eq_violation: res.eq_inf,
            ineq_violation: res.ineq_viol,
            alpha: alpha_taken,
            dual_infeasibility: res.dual,
            regularization: last_delta_w,
        };
        if opts.verbose {
            log::info!("{}", log_row.line());
        }
        trace.push(log_row);

        if !e0.is_finite() {
            break (SolveStatus::NumericalFailure, e0);
        }
        if e0 <= opts.kkt_tol {
            break (SolveStatus::Converged, e0);
        }
        if iter >= opts.max_iter {
            break (SolveStatus::IterationLimit, e0);
        }

        // monotone barrier update
        while mu > mu_floor {
            let e_mu = res.dual.max(res.primal).max(complementarity(&bounds, &it, mu));
            if e_mu > KAPPA_EPS * mu {
                break;
            }
            mu = mu_floor.max((KAPPA_MU * mu).min(mu.powf(THETA_MU)));
            filter.clear();
        }
        let tau = opts.tau.max(1.0 - mu);

        if res.primal > STALL_RESIDUAL && mu < STALL_MU {
            stall += 1;
            if stall >= STALL_ITERS {
                break (SolveStatus::InfeasibleDetected, e0);
            }
        } else {
            stall = 0;
        }

        problem.hessian_values(&it.x, 1.0, &it.le, &it.li, &mut hess);

        let sigma_x: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                if bounds.has_l[i] {
                    s += it.zl[i] / bounds.dl(&it.x, i);
                }
                if bounds.has_u[i] {
                    s += it.zu[i] / bounds.du(&it.x, i);
                }
                s
            })
            .collect();
        let sigma_s: Vec<f64> = (0..mi).map(|i| it.v[i] / it.s[i]).collect();

        // barrier gradient and r̃s
        let mut rx = lagrangian_gradient(&kkt, &ev, &it.le, &it.li);
        for i in 0..n {
            if bounds.has_l[i] {
                rx[i] -= mu / bounds.dl(&it.x, i);
            }
            if bounds.has_u[i] {
                rx[i] += mu / bounds.du(&it.x, i);
            }
        }
        let rs: Vec<f64> = (0..mi).map(|i| it.li[i] - mu / it.s[i]).collect();

        let c_eq = ev.g.clone();
        let c_in: Vec<f64> = (0..mi).map(|i| ev.h[i] + it.s[i]).collect();
        let Some((factor, delta_w, d)) =
            factorize(&kkt, &hess, &sigma_x, &sigma_s, &ev, mu, last_delta_w, opts, |f, dw| {
                let d = newton_direction(&kkt, f, &rx, &rs, &c_eq, &c_in, &sigma_s, dw);
                let ok = sufficient_curvature(&kkt, &hess, &sigma_x, &sigma_s, dw, &d);
                (d, ok)
            })
        else {
            break (SolveStatus::NumericalFailure, e0);
        };
        last_delta_w = delta_w;

        // filter line search
        let phi0 = ev.f + barrier_value(&bounds, &it.x, &it.s, mu);
        let theta0 = one_norm(&c_eq) + one_norm(&c_in);
        let dphi = barrier_slope(&bounds, &ev.grad, &it, &d, mu);
        let alpha_max =
            step_to_boundary(&bounds, &it.x, &it.s, &d.dx, &d.ds, tau).min(problem.step_limit(&it.x, &d.dx));
        let alpha_min = if dphi < 0.0 {
            GAMMA_ALPHA
                * GAMMA_THETA
                    .min(GAMMA_PHI * -dphi / theta0.max(f64::MIN_POSITIVE))
                    .min(DELTA_SWITCH * theta0.powf(S_THETA) / (-dphi).powf(S_PHI))
        } else {
            GAMMA_ALPHA * GAMMA_THETA
        };
        let roundoff = 1e2 * f64::EPSILON * phi0.abs().max(1.0);
        let judge = |alpha: f64, theta_t: f64, phi_t: f64| -> Option<bool> {
            if !(phi_t.is_finite() && theta_t.is_finite()) || theta_t > theta_max {
                return None;
            }
            if filter.iter().any(|&(ft, fp)| theta_t >= ft && phi_t >= fp) {
                return None;
            }
            let switching = dphi < 0.0 && alpha * (-dphi).powf(S_PHI) > DELTA_SWITCH * theta0.powf(S_THETA);
            if switching && theta0 <= theta_min {
                (phi_t <= phi0 + ETA_PHI * alpha * dphi + roundoff).then_some(true)
            } else {
                (theta_t <= (1.0 - GAMMA_THETA) * theta0 || phi_t <= phi0 - GAMMA_PHI * theta0 + roundoff)
                    .then_some(false)
            }
        };

        let mut alpha = alpha_max;
        let mut accepted: Option<(Iterate, Eval, f64, bool)> = None;
        let mut first = true;
        while alpha >= alpha_min.min(alpha_max) {
            let trial = primal_trial(&it, &d, alpha);
            let ev_t = Eval::at(problem, &kkt, &trial.x);
            let theta_t = constraint_norm(&ev_t, &trial.s);
            let phi_t = ev_t.f + barrier_value(&bounds, &trial.x, &trial.s, mu);
            if let Some(armijo) = judge(alpha, theta_t, phi_t) {
                accepted = Some((trial, ev_t, alpha, armijo));
                break;
            }
            if first && theta_t >= theta0 && mi + me > 0 {
                // second-order corrections on the full step
                let (mut soc_eq, mut soc_in) = (c_eq.clone(), c_in.clone());
                let (mut ev_c, mut s_c, mut a_c) = (ev_t, trial.s.clone(), alpha);
                let mut theta_prev = theta0;
                for _ in 0..MAX_SOC {
                    for i in 0..me {
                        soc_eq[i] = a_c * soc_eq[i] + ev_c.g[i];
                    }
                    for i in 0..mi {
                        soc_in[i] = a_c * soc_in[i] + ev_c.h[i] + s_c[i];
                    }
                    let d_soc = newton_direction(&kkt, &factor, &rx, &rs, &soc_eq, &soc_in, &sigma_s, delta_w);
                    a_c = step_to_boundary(&bounds, &it.x, &it.s, &d_soc.dx, &d_soc.ds, tau);
                    let t = primal_trial(&it, &d_soc, a_c);
                    let ev_s = Eval::at(problem, &kkt, &t.x);
                    let theta_s = constraint_norm(&ev_s, &t.s);
                    let phi_s = ev_s.f + barrier_value(&bounds, &t.x, &t.s, mu);
                    if let Some(armijo) = judge(alpha, theta_s, phi_s) {
                        accepted = Some((t, ev_s, a_c, armijo));
                        break;
                    }
                    if theta_s > SOC_KAPPA * theta_prev {
                        break;
                    }
                    theta_prev = theta_s;
                    s_c = t.s;
                    ev_c = ev_s;
                }
                if accepted.is_some() {
                    break;
                }
            }
            first = false;
            alpha *= 0.5;
        }
        let (mut next, ev_next, a) = match accepted {
            Some((trial, ev_t, a, armijo)) => {
                if !armijo {
                    filter.push(((1.0 - GAMMA_THETA) * theta0, phi0 - GAMMA_PHI * theta0));
                }
                (trial, ev_t, a)
            }
            None => {
                // no acceptable step: take a short step and restart the filter
                filter.clear();
                let a = (GAMMA_ALPHA * alpha_max).max(alpha.min(alpha_max));
                let trial = primal_trial(&it, &d, a);
                let ev_t = Eval::at(problem, &kkt, &trial.x);
                (trial, ev_t, a)
            }
        };

        // bound and slack multipliers along their Newton directions
        let dzl: Vec<f64> = (0..n)
            .map(|i| {
                if bounds.has_l[i] {
                    let dl = bounds.dl(&it.x, i);
                    mu / dl - it.zl[i] - it.zl[i] / dl * d.dx[i]
                } else {
                    0.0
                }
            })
            .collect();
        let dzu: Vec<f64> = (0..n)
            .map(|i| {
                if bounds.has_u[i] {
                    let du = bounds.du(&it.x, i);
                    mu / du - it.zu[i] + it.zu[i] / du * d.dx[i]
                } else {
                    0.0
                }
            })
            .collect();
        let dv: Vec<f64> = (0..mi).map(|i| mu / it.s[i] - it.v[i] - sigma_s[i] * d.ds[i]).collect();
        let alpha_dual = dual_step(&it, &dzl, &dzu, &dv, &bounds, tau);
        for i in 0..me {
            next.le[i] = it.le[i] + a * d.dle[i];
        }
        for i in 0..mi {
            next.li[i] = it.li[i] + a * d.dli[i];
        }
        for i in 0..n {
            if bounds.has_l[i] {
                let z = it.zl[i] + alpha_dual * dzl[i];
                let dl = bounds.dl(&next.x, i);
                next.zl[i] = z.clamp(mu / (KAPPA_SIGMA * dl), KAPPA_SIGMA * mu / dl);
            }
            if bounds.has_u[i] {
                let z = it.zu[i] + alpha_dual * dzu[i];
                let du = bounds.du(&next.x, i);
                next.zu[i] = z.clamp(mu / (KAPPA_SIGMA * du), KAPPA_SIGMA * mu / du);
            }
        }
        for i in 0..mi {
            let z = it.v[i] + alpha_dual * dv[i];
            next.v[i] = z.clamp(mu / (KAPPA_SIGMA * next.s[i]), KAPPA_SIGMA * mu / next.s[i]);
        }

        it = next;
        ev = ev_next;
        alpha_taken = a;
        iter += 1;
    };

    SolveOutcome {
        status,
        x: it.x,
        lambda_eq: it.le,
        lambda_ineq: it.li,
        z_lower: it.zl,
        z_upper: it.zu,
        iterations: iter,
        kkt_residual: residual,
        objective: ev.f,
        trace,
        layout,
    }
}

fn push_inside(x0: &[f64], b: &Bounds, k: f64) -> Vec<f64> {
    x0.iter()
        .enumerate()
        .map(|(i, &x)| {
            let (l, u) = (b.xl[i], b.xu[i]);
            match (b.has_l[i], b.has_u[i]) {
                (true, true) => {
                    let range = u - l;
                    let ml = (k * l.abs().max(1.0)).min(k * range);
                    let mu = (k * u.abs().max(1.0)).min(k * range);
                    x.clamp(l + ml, u - mu)
                }
                (true, false) => x.max(l + k * l.abs().max(1.0)),
                (false, true) => x.min(u - k * u.abs().max(1.0)),
                (false, false) => x,
            }
        })
        .collect()
}

fn lagrangian_gradient(k: &Kkt, ev: &Eval, le: &[f64], li: &[f64]) -> Vec<f64> {
    let mut r = ev.grad.clone();
    for (&(row, col), v) in k.je.iter().zip(&ev.je) {
        r[col] += le[row] * v;
    }
    for (&(row, col), v) in k.ji.iter().zip(&ev.ji) {
        r[col] += li[row] * v;
    }
    r
}

fn residuals(k: &Kkt, ev: &Eval, it: &Iterate) -> Residuals {
    let mut rx = lagrangian_gradient(k, ev, &it.le, &it.li);
    for i in 0..k.n {
        rx[i] += it.zu[i] - it.zl[i];
    }
    let rs = (0..k.mi).fold(0.0f64, |m, i| m.max((it.li[i] - it.v[i]).abs()));
    let eq_inf = inf_norm(&ev.g);
    let slack_gap = (0..k.mi).fold(0.0f64, |m, i| m.max((ev.h[i] + it.s[i]).abs()));
    Residuals {
        dual: inf_norm(&rx).max(rs),
        primal: eq_inf.max(slack_gap),
        eq_inf,
        ineq_viol: ev.h.iter().fold(0.0f64, |m, &h| m.max(h)),
    }
}

fn complementarity(b: &Bounds, it: &Iterate, mu: f64) -> f64 {
    let mut m = 0.0f64;
    for i in 0..it.x.len() {
        if b.has_l[i] {
            m = m.max((b.dl(&it.x, i) * it.zl[i] - mu).abs());
        }
        if b.has_u[i] {
            m = m.max((b.du(&it.x, i) * it.zu[i] - mu).abs());
        }
    }
    for i in 0..it.s.len() {
        m = m.max((it.s[i] * it.v[i] - mu).abs());
    }
    m
}

/// Least-squares equality multipliers; inequality multipliers follow the slack duals.
fn init_multipliers(k: &Kkt, ev: &Eval, it: &mut Iterate) {
    if k.me + k.mi == 0 {
        return;
    }
    let (n, me, mi) = (k.n, k.me, k.mi);
    let hess = vec![0.0; k.hess.len()];
    let xdiag = vec![1.0; n];
    let mut rhs = vec![0.0; n + me + mi];
    for i in 0..n {
        rhs[i] = -(ev.grad[i] - it.zl[i] + it.zu[i]);
    }
    for i in 0..mi {
        rhs[n + me + i] = -it.v[i];
    }
    for delta_c in [0.0, 1e-8] {
        let mut cdiag = vec![-delta_c; me + mi];
        for i in 0..mi {
            cdiag[me + i] = -1.0 - delta_c;
        }
        let vals = k.assemble(&hess, &xdiag, &ev.je, &ev.ji, &cdiag);
        if let Ok(f) = k.sym.factor(&vals, PIVOT_TOL) {
            let sol = f.solve(&rhs, 1);
            let le = &sol[n..n + me];
            let li = &sol[n + me..];
            if inf_norm(le).max(inf_norm(li)) <= LAMBDA_INIT_MAX && sol.iter().all(|v| v.is_finite()) {
                it.le.copy_from_slice(le);
                it.li.copy_from_slice(li);
            }
            return;
        }
    }
}

/// Factors the KKT matrix, raising δw (and δc on singularity) until the
/// inertia is `(n, me + mi)` or, failing that, until the resulting step shows
/// sufficient curvature. The second test guards against pivot signs spoiled
/// by rounding on nearly degenerate steps.
#[allow(clippy::too_many_arguments)]
fn factorize<F>(
    k: &Kkt,
    hess: &[f64],
    sigma_x: &[f64],
    sigma_s: &[f64],
    ev: &Eval,
    mu: f64,
    last_delta_w: f64,
    opts: &SolverOptions,
    direction: F,
) -> Option<(LdlFactor, f64, Direction)>
where
    F: Fn(&LdlFactor, f64) -> (Direction, bool),
{
    let (n, me, mi) = (k.n, k.me, k.mi);
    let attempt = |delta_w: f64, delta_c: f64| -> Result<LdlFactor, LdlError> {
        let xdiag: Vec<f64> = sigma_x.iter().map(|s| s + delta_w).collect();
        let mut cdiag = vec![-delta_c; me + mi];
        for i in 0..mi {
            cdiag[me + i] = -1.0 / (sigma_s[i] + delta_w) - delta_c;
        }
        let vals = k.assemble(hess, &xdiag, &ev.je, &ev.ji, &cdiag);
        k.sym.factor(&vals, PIVOT_TOL)
    };
    let accept = |f: LdlFactor, delta_w: f64| -> Option<(LdlFactor, f64, Direction)> {
        let (d, curved) = direction(&f, delta_w);
        let finite = d.dx.iter().chain(&d.dle).chain(&d.dli).all(|v| v.is_finite());
        (finite && (f.inertia() == (n, me + mi) || curved)).then_some((f, delta_w, d))
    };

    let mut delta_c = 0.0;
    match attempt(0.0, 0.0) {
        Ok(f) => {
            if let Some(done) = accept(f, 0.0) {
                return Some(done);
            }
        }
        Err(LdlError::ZeroPivot(_)) => delta_c = 1e-8 * mu.powf(0.25),
    }
    let mut delta_w = if last_delta_w == 0.0 { opts.delta_min } else { opts.delta_min.max(last_delta_w / 3.0) };
    while delta_w <= DELTA_MAX {
        match attempt(delta_w, delta_c) {
            Ok(f) => {
                if let Some(done) = accept(f, delta_w) {
                    return Some(done);
                }
            }
            Err(LdlError::ZeroPivot(_)) => {
                if delta_c == 0.0 {
                    delta_c = 1e-8 * mu.powf(0.25);
                    continue;
                }
            }
        }
        delta_w *= 10.0;
    }
    None
}

/// Curvature test on a computed step: `dxᵀ(W + Σx + δw)dx + dsᵀ(Σs + δw)ds`
/// must exceed `CURVATURE_KAPPA·(|dx|² + |ds|²)`.
fn sufficient_curvature(k: &Kkt, hess: &[f64], sigma_x: &[f64], sigma_s: &[f64], delta_w: f64, d: &Direction) -> bool {
    let mut quad = 0.0;
    for (&(r, c), &v) in k.hess.iter().zip(hess) {
        let t = v * d.dx[r] * d.dx[c];
        quad += if r == c { t } else { 2.0 * t };
    }
    let mut norm = 0.0;
    for i in 0..k.n {
        quad += (sigma_x[i] + delta_w) * d.dx[i] * d.dx[i];
        norm += d.dx[i] * d.dx[i];
    }
    for i in 0..k.mi {
        quad += (sigma_s[i] + delta_w) * d.ds[i] * d.ds[i];
        norm += d.ds[i] * d.ds[i];
    }
    quad >= CURVATURE_KAPPA * norm
}

#[allow(clippy::too_many_arguments)]
fn newton_direction(
    k: &Kkt,
    f: &LdlFactor,
    rx: &[f64],
    rs: &[f64],
    c_eq: &[f64],
    c_in: &[f64],
    sigma_s: &[f64],
    delta_w: f64,
) -> Direction {
    let (n, me, mi) = (k.n, k.me, k.mi);
    let mut rhs = vec![0.0; n + me + mi];
    for i in 0..n {
        rhs[i] = -rx[i];
    }
    for i in 0..me {
        rhs[n + i] = -c_eq[i];
    }
    for i in 0..mi {
        rhs[n + me + i] = -c_in[i] + rs[i] / (sigma_s[i] + delta_w);
    }
    let sol = f.solve(&rhs, 2);
    let dx = sol[..n].to_vec();
    let dle = sol[n..n + me].to_vec();
    let dli = sol[n + me..].to_vec();
    let ds = (0..mi).map(|i| (-rs[i] - dli[i]) / (sigma_s[i] + delta_w)).collect();
    Direction { dx, ds, dle, dli }
}

fn barrier_value(b: &Bounds, x: &[f64], s: &[f64], mu: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        if b.has_l[i] {
            acc -= b.dl(x, i).ln();
        }
        if b.has_u[i] {
            acc -= b.du(x, i).ln();
        }
    }
    for &si in s {
        acc -= si.ln();
    }
    mu * acc
}

fn barrier_slope(b: &Bounds, grad: &[f64], it: &Iterate, d: &Direction, mu: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..it.x.len() {
        acc += grad[i] * d.dx[i];
        if b.has_l[i] {
            acc -= mu * d.dx[i] / b.dl(&it.x, i);
        }
        if b.has_u[i] {
            acc += mu * d.dx[i] / b.du(&it.x, i);
        }
    }
    for i in 0..it.s.len() {
        acc -= mu * d.ds[i] / it.s[i];
    }
    acc
}

fn constraint_norm(ev: &Eval, s: &[f64]) -> f64 {
    one_norm(&ev.g) + ev.h.iter().zip(s).map(|(h, s)| (h + s).abs()).sum::<f64>()
}

fn step_to_boundary(b: &Bounds, x: &[f64], s: &[f64], dx: &[f64], ds: &[f64], tau: f64) -> f64 {
    let mut a = 1.0f64;
    for i in 0..x.len() {
        if b.has_l[i] && dx[i] < 0.0 {
            a = a.min(-tau * b.dl(x, i) / dx[i]);
        }
        if b.has_u[i] && dx[i] > 0.0 {
            a = a.min(tau * b.du(x, i) / dx[i]);
        }
    }
    for i in 0..s.len() {
        if ds[i] < 0.0 {
            a = a.min(-tau * s[i] / ds[i]);
        }
    }
    a
}

fn dual_step(it: &Iterate, dzl: &[f64], dzu: &[f64], dv: &[f64], b: &Bounds, tau: f64) -> f64 {
    let mut a = 1.0f64;
    for i in 0..it.x.len() {
        if b.has_l[i] && dzl[i] < 0.0 {
            a = a.min(-tau * it.zl[i] / dzl[i]);
        }
        if b.has_u[i] && dzu[i] < 0.0 {
            a = a.min(-tau * it.zu[i] / dzu[i]);
        }
    }
    for i in 0..it.v.len() {
        if dv[i] < 0.0 {
            a = a.min(-tau * it.v[i] / dv[i]);
        }
    }
    a
}

fn primal_trial(it: &Iterate, d: &Direction, alpha: f64) -> Iterate {
    let mut t = it.clone();
    for i in 0..t.x.len() {
        t.x[i] += alpha * d.dx[i];
    }
    for i in 0..t.s.len() {
        t.s[i] += alpha * d.ds[i];
    }
    t
}
