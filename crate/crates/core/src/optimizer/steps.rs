//! The phase-step and weight-step feasibility families.

use num_complex::Complex64;

use crate::error::{ModelError, SdpError};
use crate::linalg::{hermitian_part, trace_product, CMatrix, ONE};
use crate::scenario::{ChannelSet, ScenarioConfig};
use crate::sdp::{maximize, FeasibilityStatus, HermitianOperand, SdpFeasibilityProblem, SdpSettings, Sense};
use crate::sdr_forms::{build_phase_forms, build_weight_forms, PhaseStepForms, WeightStepForms};

use super::bisection::GammaFamily;

fn with_corner(m: &CMatrix, corner: f64) -> CMatrix {
    let mut out = m.clone();
    let n = out.nrows() - 1;
    out[(n, n)] += Complex64::from(corner);
    out
}

/// `{Q ⪰ 0 : Q_ii = 1, S(Q|B) ≥ 0, T(Q|B) ≤ 0}` for a fixed `B`.
#[derive(Debug, Clone)]
pub struct PhaseStep {
    pub forms: PhaseStepForms,
    sigma2_o: f64,
    sigma2_f: f64,
    sigma2_e: f64,
    /// `None` when the ED constraint is vacuous.
    eta: Option<f64>,
}

impl PhaseStep {
    pub fn new(ch: &ChannelSet, b: &CMatrix, cfg: &ScenarioConfig) -> Result<Self, ModelError> {
        Ok(Self {
            forms: build_phase_forms(ch, b)?,
            sigma2_o: cfg.sigma2_o,
            sigma2_f: cfg.sigma2_f,
            sigma2_e: cfg.sigma2_e,
            eta: cfg.ed_constrained().then_some(cfg.eta),
        })
    }

    fn dim(&self) -> usize {
        self.forms.p.nrows()
    }

    fn push_structure(&self, p: &mut SdpFeasibilityProblem) {
        let f = &self.forms;
        if let Some(eta) = self.eta {
            p.push(
                HermitianOperand::Dense(&f.p_tilde - &f.r_tilde * Complex64::from(eta * self.sigma2_o)),
                Sense::Le,
                eta * (self.sigma2_o * f.r3_tilde + self.sigma2_e) - f.p3_tilde,
            );
        }
    }
}

impl GammaFamily for PhaseStep {
    fn problem_at(&self, gamma: f64) -> SdpFeasibilityProblem {
        let f = &self.forms;
        let n = self.dim();
        let mut p = SdpFeasibilityProblem::new(n);
        p.push(
            HermitianOperand::Dense(&f.p - &f.r * Complex64::from(gamma * self.sigma2_o)),
            Sense::Ge,
            gamma * (self.sigma2_o * f.r3 + self.sigma2_f) - f.p3,
        );
        self.push_structure(&mut p);
        for i in 0..n {
            p.push(HermitianOperand::diagonal_unit(i), Sense::Eq, 1.0);
        }
        p
    }

    fn ratio(&self, q: &CMatrix) -> f64 {
        let f = &self.forms;
        (trace_product(q, &f.p).re + f.p3)
            / (self.sigma2_o * (trace_product(q, &f.r).re + f.r3) + self.sigma2_f)
    }

    /// Charnes–Cooper form with `Q = W / W_nn`:
    /// `max Tr[(P + p₃E)W]` s.t. `Tr[(σ²_o(R + r₃E) + σ²_f E)W] = σ²_f`,
    /// `W_ii = W_nn`, homogenized `T ≤ 0`.
    fn fractional(&self, settings: &SdpSettings) -> Result<Option<CMatrix>, SdpError> {
        let f = &self.forms;
        let n = self.dim();
        let last = n - 1;
        let mut p = SdpFeasibilityProblem::new(n);
        // Divided by σ²_f so the row is O(1) against its unit right-hand side.
        let ratio = self.sigma2_o / self.sigma2_f;
        let denom = with_corner(&(&f.r * Complex64::from(ratio)), ratio * f.r3 + 1.0);
        p.push(HermitianOperand::Dense(denom), Sense::Eq, 1.0);
        if let Some(eta) = self.eta {
            let t = with_corner(
                &(&f.p_tilde - &f.r_tilde * Complex64::from(eta * self.sigma2_o)),
                f.p3_tilde - eta * (self.sigma2_o * f.r3_tilde + self.sigma2_e),
            );
            p.push(HermitianOperand::Dense(t), Sense::Le, 0.0);
        }
        for i in 0..last {
            p.push(
                HermitianOperand::Entries(vec![(i, i, ONE), (last, last, -ONE)]),
                Sense::Eq,
                0.0,
            );
        }
        let objective = HermitianOperand::Dense(with_corner(&f.p, f.p3));
        let out = maximize(&objective, &p, settings)?;
        Ok(match (out.status, out.x) {
            (FeasibilityStatus::Feasible, Some(w)) => normalize_unit_diagonal(&w),
            _ => None,
        })
    }
}

/// `D^{-1/2} W D^{-1/2}` with `D = diag(W)`; `None` if a diagonal entry
/// vanishes.
pub fn normalize_unit_diagonal(w: &CMatrix) -> Option<CMatrix> {
    let d: Vec<f64> = (0..w.nrows()).map(|i| w[(i, i)].re).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let s: Vec<f64> = d.iter().map(|v| v.sqrt().recip()).collect();
    let mut q = CMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] * (s[i] * s[j]));
    for i in 0..q.nrows() {
        q[(i, i)] = ONE;
    }
    Some(hermitian_part(&q))
}

/// `{B ⪰ 0 : power ≤ P_T, S(B|Q) ≥ 0, T(B|Q) ≤ 0}` for a fixed `Q`.
#[derive(Debug, Clone)]
pub struct WeightStep {
    pub forms: WeightStepForms,
    sigma2_o: f64,
    sigma2_f: f64,
    sigma2_e: f64,
    p_t: f64,
    eta: Option<f64>,
}

impl WeightStep {
    pub fn new(ch: &ChannelSet, q: &CMatrix, cfg: &ScenarioConfig) -> Result<Self, ModelError> {
        Ok(Self {
            forms: build_weight_forms(ch, q)?,
            sigma2_o: cfg.sigma2_o,
            sigma2_f: cfg.sigma2_f,
            sigma2_e: cfg.sigma2_e,
            p_t: cfg.p_t,
            eta: cfg.ed_constrained().then_some(cfg.eta),
        })
    }

    fn dim(&self) -> usize {
        self.forms.lambda.len()
    }

    fn noise_corrected(&self, signal: &CMatrix, noise: &[f64], weight: f64) -> CMatrix {
        let mut m = signal.clone();
        for (i, v) in noise.iter().enumerate() {
            m[(i, i)] -= Complex64::from(weight * v);
        }
        m
    }

    fn power_diagonal(&self) -> Vec<f64> {
        self.forms.lambda.iter().map(|l| l + self.sigma2_o).collect()
    }
}

fn diagonal_entries(d: &[f64]) -> Vec<(usize, usize, Complex64)> {
    d.iter().enumerate().map(|(i, v)| (i, i, Complex64::from(*v))).collect()
}

impl GammaFamily for WeightStep {
    fn problem_at(&self, gamma: f64) -> SdpFeasibilityProblem {
        let f = &self.forms;
        let mut p = SdpFeasibilityProblem::new(self.dim());
        p.push(
            HermitianOperand::Dense(self.noise_corrected(&f.signal, &f.noise, gamma * self.sigma2_o)),
            Sense::Ge,
            gamma * self.sigma2_f,
        );
        p.push(
            HermitianOperand::Entries(diagonal_entries(&self.power_diagonal())),
            Sense::Le,
            self.p_t,
        );
        if let Some(eta) = self.eta {
            p.push(
                HermitianOperand::Dense(self.noise_corrected(&f.signal_tilde, &f.noise_tilde, eta * self.sigma2_o)),
                Sense::Le,
                eta * self.sigma2_e,
            );
        }
        p
    }

    fn ratio(&self, b: &CMatrix) -> f64 {
        let f = &self.forms;
        let noise: f64 = f.noise.iter().enumerate().map(|(i, v)| v * b[(i, i)].re).sum();
        trace_product(&f.signal, b).re / (self.sigma2_o * noise + self.sigma2_f)
    }

    /// Charnes–Cooper form on `Y = [[sB, ·], [·, s]]`:
    /// `max Tr[KQK^H Y_B]` s.t. `σ²_o Tr[D(LQL^H) Y_B] + σ²_f s = σ²_f`,
    /// `Tr[(Λ + σ²_o I) Y_B] ≤ P_T s`, homogenized `T ≤ 0`.
    fn fractional(&self, settings: &SdpSettings) -> Result<Option<CMatrix>, SdpError> {
        let f = &self.forms;
        let k = self.dim();
        let embed = |m: &CMatrix| {
            let mut out = CMatrix::zeros(k + 1, k + 1);
            out.view_mut((0, 0), (k, k)).copy_from(m);
            out
        };
        let scale = |d: &[f64], w: f64| d.iter().map(|v| v * w).collect::<Vec<_>>();
        let mut p = SdpFeasibilityProblem::new(k + 1);
        let mut norm = diagonal_entries(&scale(&f.noise, self.sigma2_o / self.sigma2_f));
        norm.push((k, k, ONE));
        p.push(HermitianOperand::Entries(norm), Sense::Eq, 1.0);
        let mut power = diagonal_entries(&self.power_diagonal());
        power.push((k, k, Complex64::from(-self.p_t)));
        p.push(HermitianOperand::Entries(power), Sense::Le, 0.0);
        if let Some(eta) = self.eta {
            let mut t = embed(&self.noise_corrected(&f.signal_tilde, &f.noise_tilde, eta * self.sigma2_o));
            t[(k, k)] = Complex64::from(-eta * self.sigma2_e);
            p.push(HermitianOperand::Dense(t), Sense::Le, 0.0);
        }
        let out = maximize(&HermitianOperand::Dense(embed(&f.signal)), &p, settings)?;
        Ok(match (out.status, out.x) {
            (FeasibilityStatus::Feasible, Some(y)) => {
                let s = y[(k, k)].re;
                (s > 0.0).then(|| hermitian_part(&(y.view((0, 0), (k, k)).into_owned() / Complex64::from(s))))
            }
            _ => None,
        })
    }
}
