//! Feasibility and optimization of small complex-Hermitian SDPs with
//! affine trace constraints `Tr[A_i X] (≤ | = | ≥) b_i`, `X ⪰ 0`.
//!
//! The Hermitian variable is carried through the real symmetric embedding
//! `[[Re X, −Im X], [Im X, Re X]]` and handed to the interior-point
//! engine in [`engine`]. Constraint rows are normalized to unit norm
//! (operand and right-hand side together), so tolerances and margins are
//! invariant to rescaling a constraint.
//!
//! Feasibility is decided with the max-margin problem
//!
//! ```text
//! maximize t  s.t.  Tr[A_i X] + t ≤ b_i (≤ rows),  Tr[A_i X] − t ≥ b_i (≥ rows),
//!                   Tr[A_i X] = b_i (= rows),  X ⪰ 0,  t ≤ 1,
//! ```
//!
//! and every feasible answer is re-checked by evaluating the constraints
//! directly ([`verify`]).

mod engine;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::SdpError;
use crate::linalg::{collapse_real, embed_real, is_hermitian, min_eigenvalue, CMatrix};

use engine::{Program, Row, Settings, Status, SymOp};

/// Hermitian operand of a trace constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum HermitianOperand {
    Dense(CMatrix),
    /// Entries `(i, j, a_ij)` with `i ≤ j`; the lower triangle is implied
    /// by Hermitian symmetry. Repeated positions are summed.
    Entries(Vec<(usize, usize, Complex64)>),
}

impl HermitianOperand {
    /// Single diagonal entry `E_ii`.
    pub fn diagonal_unit(i: usize) -> Self {
        HermitianOperand::Entries(vec![(i, i, Complex64::new(1.0, 0.0))])
    }

    /// `Re Tr[A X]`.
    pub fn trace_with(&self, x: &CMatrix) -> f64 {
        match self {
            HermitianOperand::Dense(a) => {
                let mut acc = 0.0;
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        acc += (a[(i, j)] * x[(j, i)]).re;
                    }
                }
                acc
            }
            HermitianOperand::Entries(e) => e
                .iter()
                .map(|&(i, j, v)| {
                    if i == j {
                        (v * x[(i, i)]).re
                    } else {
                        2.0 * (v * x[(j, i)]).re
                    }
                })
                .sum(),
        }
    }

    fn frobenius_sq(&self) -> f64 {
        match self {
            HermitianOperand::Dense(a) => a.norm_squared(),
            HermitianOperand::Entries(e) => {
                let mut acc = std::collections::BTreeMap::<(usize, usize), Complex64>::new();
                for &(i, j, v) in e {
                    *acc.entry((i, j)).or_default() += v;
                }
                acc.iter()
                    .map(|(&(i, j), v)| if i == j { v.norm_sqr() } else { 2.0 * v.norm_sqr() })
                    .sum()
            }
        }
    }

    fn check(&self, index: usize, dim: usize) -> Result<(), SdpError> {
        match self {
            HermitianOperand::Dense(a) => {
                if a.shape() != (dim, dim) {
                    return Err(SdpError::Dimension { index, dim });
                }
                if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(SdpError::NonFinite { index });
                }
                if !is_hermitian(a, 1e-12) {
                    return Err(SdpError::NotHermitian { index });
                }
            }
            HermitianOperand::Entries(e) => {
                for &(i, j, v) in e {
                    if i > j || j >= dim {
                        return Err(SdpError::Dimension { index, dim });
                    }
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(SdpError::NonFinite { index });
                    }
                    if i == j && v.im.abs() > 1e-12 * v.norm().max(1.0) {
                        return Err(SdpError::NotHermitian { index });
                    }
                }
            }
        }
        Ok(())
    }

    /// Real symmetric operator `Â` with `<Â, embed(X)> = Tr[A X]`.
    fn to_real(&self, dim: usize, scale: f64) -> SymOp {
        match self {
            HermitianOperand::Dense(a) => SymOp::Dense(embed_real(a) * (0.5 * scale)),
            HermitianOperand::Entries(e) => {
                let n = dim;
                let h = 0.5 * scale;
                let mut out = Vec::with_capacity(4 * e.len());
                for &(i, j, v) in e {
                    if i == j {
                        out.push((i, i, h * v.re));
                        out.push((i + n, i + n, h * v.re));
                    } else {
                        for (r, c, val) in [
                            (i, j, v.re),
                            (j, i, v.re),
                            (i + n, j + n, v.re),
                            (j + n, i + n, v.re),
                            (i + n, j, v.im),
                            (j, i + n, v.im),
                            (i, j + n, -v.im),
                            (j + n, i, -v.im),
                        ] {
                            if val != 0.0 {
                                out.push((r, c, h * val));
                            }
                        }
                    }
                }
                SymOp::Sparse(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstraint {
    pub operand: HermitianOperand,
    pub sense: Sense,
    pub rhs: f64,
}

impl TraceConstraint {
    pub fn new(operand: HermitianOperand, sense: Sense, rhs: f64) -> Self {
        Self { operand, sense, rhs }
    }

    /// `‖(A, b)‖`, the normalization applied to this row.
    pub fn scale(&self) -> f64 {
        let s = (self.operand.frobenius_sq() + self.rhs * self.rhs).sqrt();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Normalized slack: non-negative when satisfied. For equalities the
    /// negated absolute residual.
    pub fn slack(&self, x: &CMatrix) -> f64 {
        let v = self.operand.trace_with(x);
        let s = self.scale();
        match self.sense {
            Sense::Le => (self.rhs - v) / s,
            Sense::Ge => (v - self.rhs) / s,
            Sense::Eq => -(v - self.rhs).abs() / s,
        }
    }
}

/// `X ⪰ 0` of dimension `dim` subject to every trace constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpFeasibilityProblem {
    pub dim: usize,
    pub constraints: Vec<TraceConstraint>,
}

impl SdpFeasibilityProblem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, operand: HermitianOperand, sense: Sense, rhs: f64) -> &mut Self {
        self.constraints.push(TraceConstraint::new(operand, sense, rhs));
        self
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.dim == 0 {
            return Err(SdpError::EmptyDimension);
        }
        for (index, c) in self.constraints.iter().enumerate() {
            c.operand.check(index, self.dim)?;
            if !c.rhs.is_finite() {
                return Err(SdpError::NonFinite { index });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct SdpOutcome {
    pub status: FeasibilityStatus,
    /// Present iff `status` is `Feasible`.
    pub x: Option<CMatrix>,
    /// Max-margin value reached (normalized units).
    pub margin: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    /// Tolerance on normalized constraint residuals and on the minimum
    /// eigenvalue of returned matrices.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200,
        }
    }
}

/// Result of the direct constraint check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// Smallest normalized slack over all constraints.
    pub min_slack: f64,
    pub min_eigenvalue: f64,
}

impl Verification {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_slack >= -tol && self.min_eigenvalue >= -tol
    }
}

/// Evaluates every constraint of `p` at `x` directly.
pub fn verify(p: &SdpFeasibilityProblem, x: &CMatrix) -> Verification {
    let min_slack = p
        .constraints
        .iter()
        .map(|c| c.slack(x))
        .fold(f64::INFINITY, f64::min);
    let scale = x.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    Verification {
        min_slack,
        min_eigenvalue: min_eigenvalue(x) / scale,
    }
}

/// Weight of `Tr[X]` added to the max-margin objective; keeps the dual
/// strictly feasible when the constraints leave directions of `X` free.
const TRACE_REGULARIZATION: f64 = 1e-9;
const MARGIN_CAP: f64 = 1.0;
const ENGINE_TOL: f64 = 1e-10;

/// Decides whether `p` has a PSD solution.
pub fn check_feasibility(p: &SdpFeasibilityProblem, settings: &SdpSettings) -> Result<SdpOutcome, SdpError> {
    p.validate()?;
    let n = p.dim;
    let mut rows = Vec::with_capacity(p.constraints.len());
    let mut n_ineq = 0;
    for c in &p.constraints {
        let s = 1.0 / c.scale();
        match c.sense {
            Sense::Eq => rows.push(Row {
                op: Some(c.operand.to_real(n, s)),
                lp: vec![],
                rhs: c.rhs * s,
            }),
            Sense::Le | Sense::Ge => {
                let sign = if c.sense == Sense::Le { 1.0 } else { -1.0 };
                n_ineq += 1;
                rows.push(Row {
                    op: Some(c.operand.to_real(n, sign * s)),
                    lp: vec![(0, -1.0), (n_ineq, 1.0)],
                    rhs: sign * c.rhs * s - MARGIN_CAP,
                });
            }
        }
    }
    let program = Program {
        dim: 2 * n,
        n_lp: 1 + n_ineq,
        objective: Some(SymOp::Sparse(
            (0..2 * n).map(|i| (i, i, 0.5 * TRACE_REGULARIZATION)).collect(),
        )),
        objective_lp: std::iter::once(1.0).chain(std::iter::repeat_n(0.0, n_ineq)).collect(),
        rows,
    };

    let tol = settings.tol;
    let mut early: Option<(FeasibilityStatus, Option<CMatrix>, f64)> = None;
    let mut monitor = |it: &engine::Iterate<'_>| -> bool {
        let margin = MARGIN_CAP - it.x_lp[0];
        if it.primal_res < 1e-3 * tol && margin > tol {
            let x = collapse_real(it.x);
            let check = verify(p, &x);
            if check.passes(tol) {
                early = Some((FeasibilityStatus::Feasible, Some(x), check.min_slack));
                return true;
            }
        }
        if it.dual_res < 1e-3 * tol && it.dual_obj > MARGIN_CAP + 10.0 * tol {
            early = Some((FeasibilityStatus::Infeasible, None, MARGIN_CAP - it.dual_obj));
            return true;
        }
        false
    };
    let sol = engine::solve(
        &program,
        &Settings {
            max_iter: settings.max_iter,
            tol: ENGINE_TOL,
        },
        &mut monitor,
    );
    if let Some((status, x, margin)) = early {
        return Ok(SdpOutcome {
            status,
            x,
            margin,
            iterations: sol.iterations,
        });
    }

    let x = collapse_real(&sol.x);
    let check = verify(p, &x);
    let margin = MARGIN_CAP - sol.x_lp[0];
    let accurate = sol.status == Status::Converged
        || (sol.primal_res < 1e-2 * tol && sol.dual_res < 1e-2 * tol);
    let status = if check.passes(tol) {
        FeasibilityStatus::Feasible
    } else if accurate && margin < -tol {
        FeasibilityStatus::Infeasible
    } else {
        FeasibilityStatus::Inconclusive
    };
    Ok(SdpOutcome {
        status,
        x: (status == FeasibilityStatus::Feasible).then_some(x),
        margin: if status == FeasibilityStatus::Feasible {
            check.min_slack
        } else {
            margin
        },
        iterations: sol.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct SdpMaximum {
    pub status: FeasibilityStatus,
    pub x: Option<CMatrix>,
    pub value: f64,
    /// Upper bound on the optimum from the dual iterate.
    pub dual_bound: f64,
    pub iterations: usize,
}

/// Maximizes `Tr[C X]` over the feasible set of `p`. Reports `Feasible`
/// with the maximizer when the solver converges and the maximizer passes
/// [`verify`]; otherwise `Inconclusive`.
pub fn maximize(
    objective: &HermitianOperand,
    p: &SdpFeasibilityProblem,
    settings: &SdpSettings,
) -> Result<SdpMaximum, SdpError> {
    p.validate()?;
    objective.check(p.constraints.len(), p.dim)?;
    let n = p.dim;
    let obj_scale = objective.frobenius_sq().sqrt();
    let obj_scale = if obj_scale > 0.0 { obj_scale } else { 1.0 };
    let mut rows = Vec::with_capacity(p.constraints.len());
    let mut n_lp = 0;
    for c in &p.constraints {
        let s = 1.0 / c.scale();
        let lp = match c.sense {
            Sense::Eq => vec![],
            Sense::Le => {
                n_lp += 1;
                vec![(n_lp - 1, 1.0)]
            }
            Sense::Ge => {
                n_lp += 1;
                vec![(n_lp - 1, -1.0)]
            }
        };
        rows.push(Row {
            op: Some(c.operand.to_real(n, s)),
            lp,
            rhs: c.rhs * s,
        });
    }
    let program = Program {
        dim: 2 * n,
        n_lp,
        objective: Some(objective.to_real(n, -1.0 / obj_scale)),
        objective_lp: vec![0.0; n_lp],
        rows,
    };
    let sol = engine::solve(
        &program,
        &Settings {
            max_iter: settings.max_iter,
            tol: ENGINE_TOL,
        },
        &mut |_| false,
    );
    let x = collapse_real(&sol.x);
    let accurate = sol.status == Status::Converged
        || (sol.primal_res < 1e-2 * settings.tol && sol.dual_res < 1e-2 * settings.tol);
    let ok = accurate && verify(p, &x).passes(settings.tol);
    Ok(SdpMaximum {
        status: if ok {
            FeasibilityStatus::Feasible
        } else {
            FeasibilityStatus::Inconclusive
        },
        value: objective.trace_with(&x),
        dual_bound: -sol.dual_obj * obj_scale,
        x: ok.then_some(x),
        iterations: sol.iterations,
    })
}
