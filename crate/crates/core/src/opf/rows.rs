//! Constraint rows as sums of small analytic kernels.
//!
//! Each kernel depends on at most four variables and returns its value,
//! gradient and dense local Hessian. Jacobian and Hessian slots are resolved
//! once when the row set is finalized.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    /// `x`
    Linear,
    /// `x²`
    Square,
    /// Active flow leaving end `a` of a π-branch; vars `[va, vb, θa, θb]`.
    AcP { gaa: f64, gab: f64, bab: f64 },
    /// Reactive flow leaving end `a`; same vars.
    AcQ { baa: f64, gab: f64, bab: f64 },
    /// `P² + Q²` at end `a`; same vars.
    AcS2 { gaa: f64, baa: f64, gab: f64, bab: f64 },
    /// `sqrt(x² + eps²)`
    SmoothAbs { eps: f64 },
    /// `g·(vi² − vi·vj)`; vars `[vi, vj]`.
    DcFlow { g: f64 },
}

impl Kernel {
    pub(crate) fn arity(&self) -> usize {
        match self {
            Kernel::Linear | Kernel::Square | Kernel::SmoothAbs { .. } => 1,
            Kernel::DcFlow { .. } => 2,
            Kernel::AcP { .. } | Kernel::AcQ { .. } | Kernel::AcS2 { .. } => 4,
        }
    }

    fn is_linear(&self) -> bool {
        matches!(self, Kernel::Linear)
    }

    pub(crate) fn value(&self, v: &[f64; 4]) -> f64 {
        self.eval(v, false).0
    }

    /// Value, gradient and (when `second`) Hessian at the local point `v`.
    pub(crate) fn eval(&self, v: &[f64; 4], second: bool) -> (f64, [f64; 4], [[f64; 4]; 4]) {
        let mut g = [0.0; 4];
        let mut h = [[0.0; 4]; 4];
        let val = match *self {
            Kernel::Linear => {
                g[0] = 1.0;
                v[0]
            }
            Kernel::Square => {
                g[0] = 2.0 * v[0];
                h[0][0] = 2.0;
                v[0] * v[0]
            }
            Kernel::AcP { gaa, gab, bab } => {
                let (p, pg, ph) = ac_p(v, gaa, gab, bab, second);
                g = pg;
                h = ph;
                p
            }
            Kernel::AcQ { baa, gab, bab } => {
                let (q, qg, qh) = ac_q(v, baa, gab, bab, second);
                g = qg;
                h = qh;
                q
            }
            Kernel::AcS2 { gaa, baa, gab, bab } => {
                let (p, pg, ph) = ac_p(v, gaa, gab, bab, second);
                let (q, qg, qh) = ac_q(v, baa, gab, bab, second);
                for k in 0..4 {
                    g[k] = 2.0 * (p * pg[k] + q * qg[k]);
                }
                if second {
                    for k in 0..4 {
                        for l in 0..4 {
                            h[k][l] = 2.0 * (pg[k] * pg[l] + p * ph[k][l] + qg[k] * qg[l] + q * qh[k][l]);
                        }
                    }
                }
                p * p + q * q
            }
            Kernel::SmoothAbs { eps } => {
                let r = v[0].hypot(eps);
                g[0] = v[0] / r;
                h[0][0] = eps * eps / (r * r * r);
                r
            }
            Kernel::DcFlow { g: gl } => {
                g[0] = gl * (2.0 * v[0] - v[1]);
                g[1] = -gl * v[0];
                h[0][0] = 2.0 * gl;
                h[0][1] = -gl;
                h[1][0] = -gl;
                gl * (v[0] * v[0] - v[0] * v[1])
            }
        };
        (val, g, h)
    }
}

type Local = (f64, [f64; 4], [[f64; 4]; 4]);

// P = Gaa·Va² + Va·Vb·(Gab cos θ + Bab sin θ), θ = θa − θb
fn ac_p(v: &[f64; 4], gaa: f64, gab: f64, bab: f64, second: bool) -> Local {
    let (va, vb) = (v[0], v[1]);
    let (sn, cs) = (v[2] - v[3]).sin_cos();
    let c = gab * cs + bab * sn;
    let s = gab * sn - bab * cs;
    let g = [2.0 * gaa * va + vb * c, va * c, -va * vb * s, va * vb * s];
    let mut h = [[0.0; 4]; 4];
    if second {
        let vv = va * vb;
        h[0] = [2.0 * gaa, c, -vb * s, vb * s];
        h[1] = [c, 0.0, -va * s, va * s];
        h[2] = [-vb * s, -va * s, -vv * c, vv * c];
        h[3] = [vb * s, va * s, vv * c, -vv * c];
    }
    (gaa * va * va + va * vb * c, g, h)
}

// Q = −Baa·Va² + Va·Vb·(Gab sin θ − Bab cos θ)
fn ac_q(v: &[f64; 4], baa: f64, gab: f64, bab: f64, second: bool) -> Local {
    let (va, vb) = (v[0], v[1]);
    let (sn, cs) = (v[2] - v[3]).sin_cos();
    let c = gab * cs + bab * sn;
    let s = gab * sn - bab * cs;
    let g = [-2.0 * baa * va + vb * s, va * s, va * vb * c, -va * vb * c];
    let mut h = [[0.0; 4]; 4];
    if second {
        let vv = va * vb;
        h[0] = [-2.0 * baa, s, vb * c, -vb * c];
        h[1] = [s, 0.0, va * c, -va * c];
        h[2] = [vb * c, va * c, -vv * s, vv * s];
        h[3] = [-vb * c, -va * c, vv * s, -vv * s];
    }
    (-baa * va * va + va * vb * s, g, h)
}

/// π-branch admittance terms seen from each end.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BranchEnds {
    pub gaa: f64,
    pub baa: f64,
    pub gab: f64,
    pub bab: f64,
}

impl BranchEnds {
    pub(crate) fn new(r: f64, x: f64, b_shunt: f64) -> Self {
        let z2 = r * r + x * x;
        let (g, b) = (r / z2, -x / z2);
        BranchEnds { gaa: g, baa: b + 0.5 * b_shunt, gab: -g, bab: -b }
    }

    pub(crate) fn p(&self) -> Kernel {
        Kernel::AcP { gaa: self.gaa, gab: self.gab, bab: self.bab }
    }

    pub(crate) fn q(&self) -> Kernel {
        Kernel::AcQ { baa: self.baa, gab: self.gab, bab: self.bab }
    }

    pub(crate) fn s2(&self) -> Kernel {
        Kernel::AcS2 { gaa: self.gaa, baa: self.baa, gab: self.gab, bab: self.bab }
    }
}

#[derive(Debug, Clone)]
struct Piece {
    kernel: Kernel,
    coef: f64,
    vars: [usize; 4],
    jac: [usize; 4],
    hess: [[usize; 4]; 4],
}

#[derive(Debug, Clone)]
struct Row {
    constant: f64,
    pieces: std::ops::Range<usize>,
}

/// Rows of one constraint family (equalities or inequalities).
#[derive(Debug, Clone, Default)]
pub(crate) struct RowSet {
    rows: Vec<Row>,
    pieces: Vec<Piece>,
    jac_pattern: Vec<(usize, usize)>,
    labels: Vec<String>,
}

impl RowSet {
    /// Starts a new row with the given constant term; returns its index.
    pub(crate) fn row(&mut self, label: impl Into<String>, constant: f64) -> usize {
        let at = self.pieces.len();
        self.rows.push(Row { constant, pieces: at..at });
        self.labels.push(label.into());
        self.rows.len() - 1
    }

    pub(crate) fn add_constant(&mut self, c: f64) {
        self.rows.last_mut().expect("row started").constant += c;
    }

    pub(crate) fn lin(&mut self, var: usize, coef: f64) {
        self.term(Kernel::Linear, &[var], coef);
    }

    pub(crate) fn term(&mut self, kernel: Kernel, vars: &[usize], coef: f64) {
        assert_eq!(vars.len(), kernel.arity());
        let mut v = [usize::MAX; 4];
        v[..vars.len()].copy_from_slice(vars);
        self.pieces.push(Piece { kernel, coef, vars: v, jac: [usize::MAX; 4], hess: [[usize::MAX; 4]; 4] });
        self.rows.last_mut().expect("row started").pieces.end = self.pieces.len();
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn label(&self, row: usize) -> &str {
        &self.labels[row]
    }

    /// Resolves Jacobian slots and registers Hessian pairs in `hess`.
    pub(crate) fn finalize(&mut self, hess: &mut BTreeMap<(usize, usize), usize>) {
        self.jac_pattern.clear();
        for (r, row) in self.rows.iter().enumerate() {
            let mut seen: Vec<(usize, usize)> = Vec::new();
            for piece in &mut self.pieces[row.pieces.clone()] {
                let k = piece.kernel.arity();
                for a in 0..k {
                    let var = piece.vars[a];
                    piece.jac[a] = match seen.iter().find(|(v, _)| *v == var) {
                        Some(&(_, slot)) => slot,
                        None => {
                            let slot = self.jac_pattern.len();
                            self.jac_pattern.push((r, var));
                            seen.push((var, slot));
                            slot
                        }
                    };
                }
                if piece.kernel.is_linear() {
                    continue;
                }
                for a in 0..k {
                    for b in 0..=a {
                        let (x, y) = (piece.vars[a], piece.vars[b]);
                        let key = (x.max(y), x.min(y));
                        let next = hess.len();
                        let slot = *hess.entry(key).or_insert(next);
                        piece.hess[a][b] = slot;
                    }
                }
            }
        }
    }

    pub(crate) fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        self.jac_pattern.clone()
    }

    fn local(x: &[f64], p: &Piece) -> [f64; 4] {
        let mut v = [0.0; 4];
        for a in 0..p.kernel.arity() {
            v[a] = x[p.vars[a]];
        }
        v
    }

    pub(crate) fn values(&self, x: &[f64], out: &mut [f64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = row.constant;
            for p in &self.pieces[row.pieces.clone()] {
                acc += p.coef * p.kernel.value(&Self::local(x, p));
            }
            out[r] = acc;
        }
    }

    pub(crate) fn jacobian_values(&self, x: &[f64], vals: &mut [f64]) {
        vals.fill(0.0);
        for p in &self.pieces {
            let (_, g, _) = p.kernel.eval(&Self::local(x, p), false);
            for a in 0..p.kernel.arity() {
                vals[p.jac[a]] += p.coef * g[a];
            }
        }
    }

    /// Adds `Σ_r weights[r]·∇²row_r` into the Hessian slot values.
    pub(crate) fn add_hessian(&self, x: &[f64], weights: &[f64], vals: &mut [f64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let w = weights[r];
            if w == 0.0 {
                continue;
            }
            for p in &self.pieces[row.pieces.clone()] {
                if p.kernel.is_linear() {
                    continue;
                }
                let (_, _, h) = p.kernel.eval(&Self::local(x, p), true);
                for a in 0..p.kernel.arity() {
                    for b in 0..=a {
                        vals[p.hess[a][b]] += w * p.coef * h[a][b];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(k: Kernel, v: [f64; 4]) {
        let n = k.arity();
        let (_, g, h) = k.eval(&v, true);
        let eps = 1e-6;
        for a in 0..n {
            let (mut vp, mut vm) = (v, v);
            vp[a] += eps;
            vm[a] -= eps;
            let fd = (k.value(&vp) - k.value(&vm)) / (2.0 * eps);
            assert!((fd - g[a]).abs() < 1e-6 * (1.0 + fd.abs()), "{k:?} grad {a}: {fd} vs {}", g[a]);
            let (_, gp, _) = k.eval(&vp, false);
            let (_, gm, _) = k.eval(&vm, false);
            for b in 0..n {
                let fd = (gp[b] - gm[b]) / (2.0 * eps);
                assert!((fd - h[a][b]).abs() < 1e-5 * (1.0 + fd.abs()), "{k:?} hess {a},{b}");
            }
        }
    }

    #[test]
    fn kernels_match_finite_differences() {
        let ends = BranchEnds::new(0.01, 0.08, 0.02);
        let pt = [1.03, 0.97, 0.12, -0.05];
        fd_check(ends.p(), pt);
        fd_check(ends.q(), pt);
        fd_check(ends.s2(), pt);
        fd_check(Kernel::DcFlow { g: 250.0 }, [1.01, 0.99, 0.0, 0.0]);
        fd_check(Kernel::Square, [-2.0, 0.0, 0.0, 0.0]);
        fd_check(Kernel::SmoothAbs { eps: 0.1 }, [0.03, 0.0, 0.0, 0.0]);
        fd_check(Kernel::SmoothAbs { eps: 0.1 }, [-2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn lossless_branch_flows_cancel() {
        let ends = BranchEnds::new(0.0, 0.1, 0.0);
        let from = [1.0, 1.0, 0.1, 0.0];
        let to = [1.0, 1.0, 0.0, 0.1];
        let pf = ends.p().value(&from);
        let pt = ends.p().value(&to);
        assert!((pf + pt).abs() < 1e-12);
        // P = sin(θ)/x for unit voltages
        assert!((pf - 0.1f64.sin() / 0.1).abs() < 1e-12);
    }

    #[test]
    fn dc_line_loss_is_nonnegative() {
        let k = Kernel::DcFlow { g: 100.0 };
        for (vi, vj) in [(1.0, 0.99), (0.97, 1.02), (1.0, 1.0)] {
            let pij = k.value(&[vi, vj, 0.0, 0.0]);
            let pji = k.value(&[vj, vi, 0.0, 0.0]);
            assert!(pij + pji >= 0.0);
            assert!((pij + pji - 100.0 * (vi - vj) * (vi - vj)).abs() < 1e-12);
        }
    }

    #[test]
    fn slots_shared_within_row() {
        let mut rs = RowSet::default();
        rs.row("r0", 1.0);
        rs.lin(0, 2.0);
        rs.term(Kernel::Square, &[0], 1.0);
        rs.lin(1, -1.0);
        let mut hess = BTreeMap::new();
        rs.finalize(&mut hess);
        assert_eq!(rs.jacobian_structure(), vec![(0, 0), (0, 1)]);
        let x = [3.0, 4.0];
        let mut out = [0.0];
        rs.values(&x, &mut out);
        assert_eq!(out[0], 1.0 + 6.0 + 9.0 - 4.0);
        let mut jv = [0.0; 2];
        rs.jacobian_values(&x, &mut jv);
        assert_eq!(jv, [8.0, -1.0]);
        let mut hv = vec![0.0; hess.len()];
        rs.add_hessian(&x, &[0.5], &mut hv);
        assert_eq!(hv, vec![1.0]);
    }
}
