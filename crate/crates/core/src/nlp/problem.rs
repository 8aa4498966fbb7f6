/// Values at or beyond this magnitude are treated as absent bounds.
pub const INFINITE_BOUND: f64 = 1e19;

/// Smooth nonlinear program
///
/// ```text
///     min f(x)   s.t.   g(x) = 0,   h(x) <= 0,   lower <= x <= upper
/// ```
///
/// Jacobians are reported in coordinate form: the `*_structure` methods fix
/// the `(row, col)` pattern once and the `*_values` methods fill values in the
/// same order. Duplicate coordinates are summed.
pub trait NlpProblem {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;

    /// `(lower, upper)` variable bounds; use ±[`INFINITE_BOUND`] when absent.
    fn bounds(&self) -> (&[f64], &[f64]);

    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
    fn eq_values(&self, x: &[f64], out: &mut [f64]);
    fn ineq_values(&self, x: &[f64], out: &mut [f64]);

    fn eq_jacobian_structure(&self) -> Vec<(usize, usize)>;
    fn eq_jacobian_values(&self, x: &[f64], vals: &mut [f64]);
    fn ineq_jacobian_structure(&self) -> Vec<(usize, usize)>;
    fn ineq_jacobian_values(&self, x: &[f64], vals: &mut [f64]);

    /// Lower-triangle pattern (`row >= col`) of the Lagrangian Hessian.
    /// Defaults to the dense lower triangle.
    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        let n = self.num_vars();
        (0..n).flat_map(|r| (0..=r).map(move |c| (r, c))).collect()
    }

    /// Hessian of `obj_factor·f + λ_eqᵀ g + λ_ineqᵀ h`, lower triangle in the
    /// order of [`hessian_structure`](Self::hessian_structure).
    ///
    /// The default builds it from the first-derivative oracles by central
    /// differences of the Lagrangian gradient; override with exact curvature
    /// where available.
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda_eq: &[f64], lambda_ineq: &[f64], vals: &mut [f64]) {
        let n = self.num_vars();
        let grad_lagrangian = LagrangianGradient::new(self);
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        let mut dense = vec![0.0; n * n];
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1.0);
            xp[j] = x[j] + h;
            grad_lagrangian.eval(self, &xp, obj_factor, lambda_eq, lambda_ineq, &mut gp);
            xp[j] = x[j] - h;
            grad_lagrangian.eval(self, &xp, obj_factor, lambda_eq, lambda_ineq, &mut gm);
            xp[j] = x[j];
            for i in 0..n {
                dense[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        for (k, (r, c)) in self.hessian_structure().into_iter().enumerate() {
            vals[k] = 0.5 * (dense[r * n + c] + dense[c * n + r]);
        }
    }

    /// Largest fraction of the step `dx` from `x` that the problem accepts in
    /// one iteration, for models with sharp bends that a full Newton step
    /// would jump across. Defaults to 1.
    fn step_limit(&self, _x: &[f64], _dx: &[f64]) -> f64 {
        1.0
    }

    /// Default starting point: bound midpoints, or the finite bound nearest 0.
    fn initial_point(&self) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        lo.iter()
            .zip(hi)
            .map(|(&l, &u)| match (l > -INFINITE_BOUND, u < INFINITE_BOUND) {
                (true, true) => 0.5 * (l + u),
                (true, false) => l.max(0.0),
                (false, true) => u.min(0.0),
                (false, false) => 0.0,
            })
            .collect()
    }

    /// Identifies the variable layout; warm starts require a match.
    fn layout_fingerprint(&self) -> u64 {
        self.num_vars() as u64
    }
}

/// Evaluates `obj_factor ∇f + J_gᵀ λ_eq + J_hᵀ λ_ineq` using the first-derivative oracles.
pub(crate) struct LagrangianGradient {
    eq_pattern: Vec<(usize, usize)>,
    ineq_pattern: Vec<(usize, usize)>,
}

impl LagrangianGradient {
    pub(crate) fn new<P: NlpProblem + ?Sized>(p: &P) -> Self {
        LagrangianGradient { eq_pattern: p.eq_jacobian_structure(), ineq_pattern: p.ineq_jacobian_structure() }
    }

    pub(crate) fn eval<P: NlpProblem + ?Sized>(
        &self,
        p: &P,
        x: &[f64],
        obj_factor: f64,
        lambda_eq: &[f64],
        lambda_ineq: &[f64],
        out: &mut [f64],
    ) {
        p.gradient(x, out);
        out.iter_mut().for_each(|v| *v *= obj_factor);
        let mut vals = vec![0.0; self.eq_pattern.len()];
        p.eq_jacobian_values(x, &mut vals);
        for (&(r, c), v) in self.eq_pattern.iter().zip(&vals) {
            out[c] += lambda_eq[r] * v;
        }
        let mut vals = vec![0.0; self.ineq_pattern.len()];
        p.ineq_jacobian_values(x, &mut vals);
        for (&(r, c), v) in self.ineq_pattern.iter().zip(&vals) {
            out[c] += lambda_ineq[r] * v;
        }
    }
}
