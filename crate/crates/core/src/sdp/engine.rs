//! Infeasible-start primal-dual interior-point method for real symmetric
//! SDPs in standard form,
//!
//! ```text
//! minimize    <C, X> + c'x
//! subject to  <A_i, X> + a_i'x = b_i,   X ⪰ 0,  x ≥ 0,
//! ```
//!
//! using the HKM search direction with Mehrotra predictor-corrector steps.
//! Problems here have at most a few hundred rows and a block of at most a
//! few hundred, so everything is dense except the constraint operators,
//! which may be sparse (unit-diagonal constraints dominate the phase step).

use nalgebra::{DMatrix, DVector};

/// Symmetric constraint operator.
#[derive(Debug, Clone)]
pub(crate) enum SymOp {
    Dense(DMatrix<f64>),
    /// Full list of entries: an off-diagonal value must appear at both
    /// `(i, j)` and `(j, i)`.
    Sparse(Vec<(usize, usize, f64)>),
}

impl SymOp {
    /// `<A, X>` for symmetric `X` (also valid as `Tr[A G]` for any `G`
    /// when `A` is symmetric).
    fn dot(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            SymOp::Dense(a) => a.dot(x),
            SymOp::Sparse(e) => e.iter().map(|&(i, j, v)| v * x[(i, j)]).sum(),
        }
    }

    fn add_scaled_to(&self, s: f64, out: &mut DMatrix<f64>) {
        match self {
            SymOp::Dense(a) => *out += a * s,
            SymOp::Sparse(e) => {
                for &(i, j, v) in e {
                    out[(i, j)] += s * v;
                }
            }
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            SymOp::Dense(a) => a.norm_squared(),
            SymOp::Sparse(e) => e.iter().map(|&(_, _, v)| v * v).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub op: Option<SymOp>,
    pub lp: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Program {
    pub dim: usize,
    pub n_lp: usize,
    pub objective: Option<SymOp>,
    pub objective_lp: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Converged,
    IterationLimit,
    NumericalFailure,
    Stopped,
}

/// Snapshot handed to the caller's monitor every iteration.
pub(crate) struct Iterate<'a> {
    pub x: &'a DMatrix<f64>,
    pub x_lp: &'a DVector<f64>,
    pub dual_obj: f64,
    pub primal_res: f64,
    pub dual_res: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub status: Status,
    pub x: DMatrix<f64>,
    pub x_lp: DVector<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
}

struct Workspace<'p> {
    p: &'p Program,
    b: DVector<f64>,
    dense_rows: Vec<usize>,
    sparse_rows: Vec<usize>,
    /// For every LP column, the rows touching it.
    lp_cols: Vec<Vec<(usize, f64)>>,
}

impl<'p> Workspace<'p> {
    fn new(p: &'p Program) -> Self {
        let b = DVector::from_iterator(p.rows.len(), p.rows.iter().map(|r| r.rhs));
        let mut dense_rows = Vec::new();
        let mut sparse_rows = Vec::new();
        let mut lp_cols = vec![Vec::new(); p.n_lp];
        for (i, row) in p.rows.iter().enumerate() {
            match &row.op {
                Some(SymOp::Dense(_)) => dense_rows.push(i),
                Some(SymOp::Sparse(_)) => sparse_rows.push(i),
                None => {}
            }
            for &(k, v) in &row.lp {
                lp_cols[k].push((i, v));
            }
        }
        Self {
            p,
            b,
            dense_rows,
            sparse_rows,
            lp_cols,
        }
    }

    fn apply(&self, x: &DMatrix<f64>, x_lp: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.p.rows.len(),
            self.p.rows.iter().map(|r| {
                let mat = r.op.as_ref().map_or(0.0, |op| op.dot(x));
                mat + r.lp.iter().map(|&(k, v)| v * x_lp[k]).sum::<f64>()
            }),
        )
    }

    fn apply_adjoint(&self, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.p.dim;
        let mut mat = DMatrix::zeros(n, n);
        let mut lp = DVector::zeros(self.p.n_lp);
        for (i, r) in self.p.rows.iter().enumerate() {
            if let Some(op) = &r.op {
                op.add_scaled_to(y[i], &mut mat);
            }
            for &(k, v) in &r.lp {
                lp[k] += y[i] * v;
            }
        }
        (mat, lp)
    }

    /// `M_ij = <A_i, Z⁻¹ A_j X> + Σ_k a_ik a_jk x_k / z_k`.
    fn schur(&self, x: &DMatrix<f64>, zinv: &DMatrix<f64>, lp_ratio: &DVector<f64>) -> DMatrix<f64> {
        let rows = &self.p.rows;
        let m = rows.len();
        let mut out = DMatrix::zeros(m, m);
        for &j in &self.dense_rows {
            let Some(SymOp::Dense(a)) = &rows[j].op else { unreachable!() };
            let g = zinv * (a * x);
            for (i, row) in rows.iter().enumerate() {
                if let Some(op) = &row.op {
                    let v = op.dot(&g);
                    if self.dense_rows.binary_search(&i).is_ok() {
                        out[(i, j)] += 0.5 * v;
                        out[(j, i)] += 0.5 * v;
                    } else {
                        out[(i, j)] = v;
                        out[(j, i)] = v;
                    }
                }
            }
        }
        for (si, &i) in self.sparse_rows.iter().enumerate() {
            let Some(SymOp::Sparse(ei)) = &rows[i].op else { unreachable!() };
            for &j in &self.sparse_rows[si..] {
                let Some(SymOp::Sparse(ej)) = &rows[j].op else { unreachable!() };
                let mut v = 0.0;
                for &(p, q, a) in ei {
                    for &(r, s, c) in ej {
                        v += a * c * zinv[(q, r)] * x[(s, p)];
                    }
                }
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        for (k, col) in self.lp_cols.iter().enumerate() {
            let w = lp_ratio[k];
            for &(i, a) in col {
                for &(j, c) in col {
                    out[(i, j)] += w * a * c;
                }
            }
        }
        out
    }
}

/// Inverse of a lower-triangular matrix, recursive on 2×2 blocks so the
/// bulk of the work is matrix multiplication.
fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    if n <= 48 {
        let mut inv = DMatrix::zeros(n, n);
        for c in 0..n {
            inv[(c, c)] = 1.0 / l[(c, c)];
            for r in c + 1..n {
                let mut acc = 0.0;
                for k in c..r {
                    acc += l[(r, k)] * inv[(k, c)];
                }
                inv[(r, c)] = -acc / l[(r, r)];
            }
        }
        return inv;
    }
    let h = n / 2;
    let a_inv = lower_triangular_inverse(&l.view((0, 0), (h, h)).into_owned());
    let b_inv = lower_triangular_inverse(&l.view((h, h), (n - h, n - h)).into_owned());
    let c = l.view((h, 0), (n - h, h));
    let off = -(&b_inv * c * &a_inv);
    let mut inv = DMatrix::zeros(n, n);
    inv.view_mut((0, 0), (h, h)).copy_from(&a_inv);
    inv.view_mut((h, h), (n - h, n - h)).copy_from(&b_inv);
    inv.view_mut((h, 0), (n - h, h)).copy_from(&off);
    inv
}

fn cholesky_factor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.unpack())
}

fn spd_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let li = lower_triangular_inverse(l);
    li.transpose() * li
}

fn forward_solve(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for c in 0..n {
        b[c] /= l[(c, c)];
        let v = b[c];
        for r in c + 1..n {
            b[r] -= l[(r, c)] * v;
        }
    }
}

fn backward_solve_transposed(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for r in (0..n).rev() {
        let mut acc = b[r];
        for k in r + 1..n {
            acc -= l[(k, r)] * b[k];
        }
        b[r] = acc / l[(r, r)];
    }
}

/// Smallest Ritz value of `L⁻¹ D L⁻ᵀ` from a Lanczos run with full
/// reorthogonalization. It never undershoots the true minimum eigenvalue.
fn min_generalized_eigenvalue(l: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let n = l.nrows();
    let steps = n.min(36);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i as f64) * 1.618).sin());
    v /= v.norm();
    for _ in 0..steps {
        let mut w = v.clone();
        backward_solve_transposed(l, w.as_mut_slice());
        let mut w = d * w;
        forward_solve(l, w.as_mut_slice());
        let a = v.dot(&w);
        alpha.push(a);
        basis.push(v.clone());
        for q in &basis {
            let proj = q.dot(&w);
            w.axpy(-proj, q, 1.0);
        }
        for q in &basis {
            let proj = q.dot(&w);
            w.axpy(-proj, q, 1.0);
        }
        let b = w.norm();
        if b <= 1e-12 * (a.abs() + 1e-300) || basis.len() == steps {
            break;
        }
        beta.push(b);
        v = w / b;
    }
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest step in `(0, 1]` keeping `X + α D ⪰ 0`, scaled by `fraction`.
/// When `verify` is set the step is confirmed by a Cholesky factorization
/// and shortened until it succeeds; the factor of the new point is
/// returned with it.
fn psd_step(
    x: &DMatrix<f64>,
    l: &DMatrix<f64>,
    d: &DMatrix<f64>,
    fraction: f64,
    verify: bool,
) -> (f64, Option<DMatrix<f64>>) {
    let lam = min_generalized_eigenvalue(l, d);
    let mut alpha = if lam >= 0.0 { 1.0 } else { (fraction / -lam).min(1.0) };
    if !verify {
        return (alpha, None);
    }
    for _ in 0..60 {
        let trial = x + d * alpha;
        if let Some(f) = cholesky_factor(&trial) {
            return (alpha, Some(f));
        }
        alpha *= 0.8;
    }
    (0.0, None)
}

fn lp_step(x: &DVector<f64>, d: &DVector<f64>, fraction: f64) -> f64 {
    let mut alpha = 1.0_f64;
    for (xi, di) in x.iter().zip(d.iter()) {
        if *di < 0.0 {
            alpha = alpha.min(-fraction * xi / di);
        }
    }
    alpha
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

struct Direction {
    dx: DMatrix<f64>,
    dx_lp: DVector<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
    dz_lp: DVector<f64>,
}

pub(crate) fn solve(
    p: &Program,
    settings: &Settings,
    monitor: &mut dyn FnMut(&Iterate<'_>) -> bool,
) -> Solution {
    let ws = Workspace::new(p);
    let n = p.dim;
    let nl = p.n_lp;
    let m = p.rows.len();
    let nf = n as f64;

    let c_mat = {
        let mut c = DMatrix::zeros(n, n);
        if let Some(op) = &p.objective {
            op.add_scaled_to(1.0, &mut c);
        }
        c
    };
    let c_lp = DVector::from_vec(p.objective_lp.clone());
    let b_norm = ws.b.norm();
    let c_norm = (c_mat.norm_squared() + c_lp.norm_squared()).sqrt();

    let row_norms: Vec<f64> = p
        .rows
        .iter()
        .map(|r| {
            (r.op.as_ref().map_or(0.0, SymOp::norm_sq) + r.lp.iter().map(|&(_, v)| v * v).sum::<f64>())
                .sqrt()
        })
        .collect();
    let xi = row_norms
        .iter()
        .zip(ws.b.iter())
        .map(|(a, b)| (1.0 + b.abs()) / (1.0 + a))
        .fold(10.0_f64.max(nf.sqrt()), |acc, v| acc.max((nf + nl as f64) * v));
    let zeta = row_norms
        .iter()
        .copied()
        .fold(10.0_f64.max(nf.sqrt()).max(c_norm), f64::max);

    let mut x = DMatrix::identity(n, n) * xi;
    let mut x_lp = DVector::from_element(nl, xi);
    let mut z = DMatrix::identity(n, n) * zeta;
    let mut z_lp = DVector::from_element(nl, zeta);
    let mut y = DVector::zeros(m);
    let barrier = (n + nl) as f64;

    let mut lx = cholesky_factor(&x).expect("initial point is positive definite");
    let mut lz = cholesky_factor(&z).expect("initial point is positive definite");

    let mut status = Status::IterationLimit;
    let mut iterations = 0;
    let mut last = (0.0, 0.0, f64::INFINITY, f64::INFINITY);

    for it in 0..settings.max_iter {
        iterations = it;
        let rp = &ws.b - ws.apply(&x, &x_lp);
        let (aty, aty_lp) = ws.apply_adjoint(&y);
        let rd = &c_mat - &aty - &z;
        let rd_lp = &c_lp - &aty_lp - &z_lp;
        let primal_obj = c_mat.dot(&x) + c_lp.dot(&x_lp);
        let dual_obj = ws.b.dot(&y);
        let complementarity = x.dot(&z) + x_lp.dot(&z_lp);
        let mu = complementarity / barrier;
        let primal_res = rp.norm() / (1.0 + b_norm);
        let dual_res = (rd.norm_squared() + rd_lp.norm_squared()).sqrt() / (1.0 + c_norm);
        let gap = complementarity.max((primal_obj - dual_obj).abs())
            / (1.0 + primal_obj.abs() + dual_obj.abs());
        last = (primal_obj, dual_obj, primal_res, dual_res);

        if primal_res < settings.tol && dual_res < settings.tol && gap < settings.tol {
            status = Status::Converged;
            break;
        }
        let snapshot = Iterate {
            x: &x,
            x_lp: &x_lp,
            dual_obj,
            primal_res,
            dual_res,
        };
        if monitor(&snapshot) {
            status = Status::Stopped;
            break;
        }

        let zinv = spd_inverse(&lz);
        let lp_ratio = x_lp.component_div(&z_lp);
        let schur = ws.schur(&x, &zinv, &lp_ratio);
        let schur_factor = match schur.clone().cholesky() {
            Some(f) => f,
            None => {
                let bump = 1e-13 * schur.diagonal().amax().max(1e-300);
                match (schur + DMatrix::identity(m, m) * bump).cholesky() {
                    Some(f) => f,
                    None => {
                        status = Status::NumericalFailure;
                        break;
                    }
                }
            }
        };
        let rd_term = if rd.norm() > 0.0 { Some(&zinv * (&rd * &x)) } else { None };

        let direction = |sigma_mu: f64, corr: Option<(&DMatrix<f64>, &DVector<f64>)>| -> Direction {
            let mut t = &zinv * sigma_mu - &x;
            if let Some(w) = &rd_term {
                t -= w;
            }
            let mut t_lp = DVector::from_fn(nl, |k, _| {
                sigma_mu / z_lp[k] - x_lp[k] - lp_ratio[k] * rd_lp[k]
            });
            if let Some((cm, cl)) = corr {
                t -= cm;
                for k in 0..nl {
                    t_lp[k] -= cl[k] / z_lp[k];
                }
            }
            let h = &rp - ws.apply(&t, &t_lp);
            let dy = schur_factor.solve(&h);
            let (at_dy, at_dy_lp) = ws.apply_adjoint(&dy);
            let dz = &rd - at_dy;
            let dz_lp = &rd_lp - at_dy_lp;
            let mut dx = &zinv * sigma_mu - &x - &zinv * (&dz * &x);
            if let Some((cm, _)) = corr {
                dx -= cm;
            }
            symmetrize(&mut dx);
            let dx_lp = DVector::from_fn(nl, |k, _| {
                let cl = corr.map_or(0.0, |(_, cl)| cl[k]);
                (sigma_mu - cl) / z_lp[k] - x_lp[k] - lp_ratio[k] * dz_lp[k]
            });
            Direction {
                dx,
                dx_lp,
                dy,
                dz,
                dz_lp,
            }
        };

        // Predictor.
        let aff = direction(0.0, None);
        let ap = psd_step(&x, &lx, &aff.dx, 1.0, false)
            .0
            .min(lp_step(&x_lp, &aff.dx_lp, 1.0));
        let ad = psd_step(&z, &lz, &aff.dz, 1.0, false)
            .0
            .min(lp_step(&z_lp, &aff.dz_lp, 1.0));
        let mu_aff = ((&x + &aff.dx * ap).dot(&(&z + &aff.dz * ad))
            + (&x_lp + &aff.dx_lp * ap).dot(&(&z_lp + &aff.dz_lp * ad)))
            / barrier;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let corr_mat = &zinv * (&aff.dz * &aff.dx);
        let corr_lp = aff.dx_lp.component_mul(&aff.dz_lp);
        let dir = direction(sigma * mu, Some((&corr_mat, &corr_lp)));

        let fraction = 0.98;
        let ap_lp = lp_step(&x_lp, &dir.dx_lp, fraction);
        let ad_lp = lp_step(&z_lp, &dir.dz_lp, fraction);
        let (ap_mat, _) = psd_step(&x, &lx, &dir.dx, fraction, false);
        let (ad_mat, _) = psd_step(&z, &lz, &dir.dz, fraction, false);
        let mut ap = ap_mat.min(ap_lp);
        let mut ad = ad_mat.min(ad_lp);

        let mut next_lx = None;
        for _ in 0..60 {
            match cholesky_factor(&(&x + &dir.dx * ap)) {
                Some(f) => {
                    next_lx = Some(f);
                    break;
                }
                None => ap *= 0.8,
            }
        }
        let mut next_lz = None;
        for _ in 0..60 {
            match cholesky_factor(&(&z + &dir.dz * ad)) {
                Some(f) => {
                    next_lz = Some(f);
                    break;
                }
                None => ad *= 0.8,
            }
        }
        let (Some(nlx), Some(nlz)) = (next_lx, next_lz) else {
            status = Status::NumericalFailure;
            break;
        };
        if ap == 0.0 && ad == 0.0 {
            status = Status::NumericalFailure;
            break;
        }
        x += &dir.dx * ap;
        x_lp += &dir.dx_lp * ap;
        y += &dir.dy * ad;
        z += &dir.dz * ad;
        z_lp += &dir.dz_lp * ad;
        lx = nlx;
        lz = nlz;
        iterations = it + 1;
    }

    Solution {
        status,
        primal_obj: last.0,
        x,
        x_lp,
        dual_obj: last.1,
        primal_res: last.2,
        dual_res: last.3,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn converge(p: &Program) -> Solution {
        let s = solve(
            p,
            &Settings {
                max_iter: 200,
                tol: 1e-10,
            },
            &mut |_| false,
        );
        assert_eq!(s.status, Status::Converged, "{s:?}");
        s
    }

    #[test]
    fn triangular_inverse_matches_identity() {
        let n = 130;
        let a = DMatrix::from_fn(n, n, |i, j| ((i * 31 + j * 17) % 23) as f64 / 23.0 - 0.4);
        let spd = &a * a.transpose() + DMatrix::identity(n, n);
        let l = cholesky_factor(&spd).unwrap();
        let inv = spd_inverse(&l);
        assert!((&inv * &spd - DMatrix::identity(n, n)).amax() < 1e-9);
    }

    #[test]
    fn lanczos_bounds_min_eigenvalue() {
        let n = 20;
        let a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let x = &a * a.transpose() + DMatrix::identity(n, n);
        let mut d = DMatrix::from_fn(n, n, |i, j| (((i + 2 * j) % 5) as f64) - 2.0);
        symmetrize(&mut d);
        let l = cholesky_factor(&x).unwrap();
        let li = lower_triangular_inverse(&l);
        let w = &li * &d * li.transpose();
        let exact = w.symmetric_eigenvalues().min();
        let est = min_generalized_eigenvalue(&l, &d);
        assert!((est - exact).abs() < 1e-8 * exact.abs().max(1.0), "{est} vs {exact}");
    }

    /// min Tr[C X] s.t. X_11 = 1, X_22 = 1 with C = [[0, 1], [1, 0]]:
    /// optimum −2 at X = [[1, −1], [−1, 1]].
    #[test]
    fn tiny_max_cut() {
        let p = Program {
            dim: 2,
            n_lp: 0,
            objective: Some(SymOp::Dense(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))),
            objective_lp: vec![],
            rows: vec![
                Row {
                    op: Some(SymOp::Sparse(vec![(0, 0, 1.0)])),
                    lp: vec![],
                    rhs: 1.0,
                },
                Row {
                    op: Some(SymOp::Sparse(vec![(1, 1, 1.0)])),
                    lp: vec![],
                    rhs: 1.0,
                },
            ],
        };
        let s = converge(&p);
        assert!((s.primal_obj + 2.0).abs() < 1e-8);
        assert!((s.x[(0, 1)] + 1.0).abs() < 1e-6);
    }

    /// LP only: min x0 + 2 x1 s.t. x0 + x1 = 1 → 1.
    #[test]
    fn pure_lp_block() {
        let p = Program {
            dim: 1,
            n_lp: 2,
            objective: None,
            objective_lp: vec![1.0, 2.0],
            rows: vec![
                Row {
                    op: None,
                    lp: vec![(0, 1.0), (1, 1.0)],
                    rhs: 1.0,
                },
                Row {
                    op: Some(SymOp::Sparse(vec![(0, 0, 1.0)])),
                    lp: vec![],
                    rhs: 0.5,
                },
            ],
        };
        let s = converge(&p);
        assert!((s.primal_obj - 1.0).abs() < 1e-8);
        assert!((s.x_lp[0] - 1.0).abs() < 1e-6);
    }

    /// max λ·<J, X> over unit-trace X: min −<J,X> s.t. Tr X = 1 gives
    /// −λ_max(J) = −n for the all-ones J.
    #[test]
    fn dense_rows_and_objective() {
        let n = 60;
        let p = Program {
            dim: n,
            n_lp: 0,
            objective: Some(SymOp::Dense(-DMatrix::from_element(n, n, 1.0))),
            objective_lp: vec![],
            rows: vec![Row {
                op: Some(SymOp::Dense(DMatrix::identity(n, n))),
                lp: vec![],
                rhs: 1.0,
            }],
        };
        let s = converge(&p);
        assert!((s.primal_obj + n as f64).abs() < 1e-7 * n as f64);
    }
}
