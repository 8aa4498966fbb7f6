use super::problem::{LagrangianGradient, NlpProblem};

/// Compares every analytic oracle (gradient, both Jacobians and the Lagrangian
/// Hessian) against central differences with step `eps` at `x`.
///
/// Returns the worst error over all entries, each measured as
/// `|analytic - fd| / max(1, |fd|)`. Entries outside a declared pattern
/// are compared against zero.
pub fn check_derivatives<P: NlpProblem + ?Sized>(problem: &P, x: &[f64], eps: f64) -> f64 {
    let n = problem.num_vars();
    let (me, mi) = (problem.num_eq(), problem.num_ineq());
    let mut worst = 0.0f64;
    let mut record = |a: f64, fd: f64| {
        let e = (a - fd).abs() / fd.abs().max(1.0);
        worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
    };

    let mut grad = vec![0.0; n];
    problem.gradient(x, &mut grad);
    let je = dense_jacobian(me, n, &problem.eq_jacobian_structure(), |v| problem.eq_jacobian_values(x, v));
    let ji = dense_jacobian(mi, n, &problem.ineq_jacobian_structure(), |v| problem.ineq_jacobian_values(x, v));

    let mut xp = x.to_vec();
    let (mut gp, mut gm) = (vec![0.0; me], vec![0.0; me]);
    let (mut hp, mut hm) = (vec![0.0; mi], vec![0.0; mi]);
    for j in 0..n {
        xp[j] = x[j] + eps;
        let fp = problem.objective(&xp);
        problem.eq_values(&xp, &mut gp);
        problem.ineq_values(&xp, &mut hp);
        xp[j] = x[j] - eps;
        let fm = problem.objective(&xp);
        problem.eq_values(&xp, &mut gm);
        problem.ineq_values(&xp, &mut hm);
        xp[j] = x[j];

        record(grad[j], (fp - fm) / (2.0 * eps));
        for i in 0..me {
            record(je[i * n + j], (gp[i] - gm[i]) / (2.0 * eps));
        }
        for i in 0..mi {
            record(ji[i * n + j], (hp[i] - hm[i]) / (2.0 * eps));
        }
    }

    // Lagrangian Hessian with fixed nonuniform multipliers
    let le: Vec<f64> = (0..me).map(|i| 1.0 + 0.1 * (i % 7) as f64).collect();
    let li: Vec<f64> = (0..mi).map(|i| 0.5 + 0.1 * (i % 5) as f64).collect();
    let pattern = problem.hessian_structure();
    let mut vals = vec![0.0; pattern.len()];
    problem.hessian_values(x, 1.0, &le, &li, &mut vals);
    let mut hess = vec![0.0; n * n];
    for (&(r, c), v) in pattern.iter().zip(&vals) {
        hess[r * n + c] += v;
        if r != c {
            hess[c * n + r] += v;
        }
    }
    let lag = LagrangianGradient::new(problem);
    let (mut lp, mut lm) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        xp[j] = x[j] + eps;
        lag.eval(problem, &xp, 1.0, &le, &li, &mut lp);
        xp[j] = x[j] - eps;
        lag.eval(problem, &xp, 1.0, &le, &li, &mut lm);
        xp[j] = x[j];
        for i in j..n {
            record(hess[i * n + j], (lp[i] - lm[i]) / (2.0 * eps));
        }
    }
    worst
}

fn dense_jacobian(rows: usize, n: usize, pattern: &[(usize, usize)], fill: impl FnOnce(&mut [f64])) -> Vec<f64> {
    let mut vals = vec![0.0; pattern.len()];
    fill(&mut vals);
    let mut dense = vec![0.0; rows * n];
    for (&(r, c), v) in pattern.iter().zip(&vals) {
        dense[r * n + c] += v;
    }
    dense
}
