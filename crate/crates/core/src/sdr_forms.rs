//! Lifted quadratic forms of the FC and ED constraint functions.
//!
//! With `B = ββ^H` fixed, `S` and `T` are quadratic in the IRS vector and
//! linear in `Q = φ̃φ̃^H`, where `φ̃ = [φ*; 1]` (the conjugate is what makes
//! the block expressions below come out Hermitian with `Q` on the left).
//! With `Q` fixed they are linear in `B`.

use crate::error::ModelError;
use crate::linalg::{hermitian_defect, is_hermitian, trace_product, CMatrix, CVector, ONE};
use crate::scenario::ChannelSet;

/// `φ̃ = [φ*; 1]`.
pub fn lift_phase(phi: &CVector) -> CVector {
    let n = phi.len();
    CVector::from_fn(n + 1, |i, _| if i < n { phi[i].conj() } else { ONE })
}

/// Inverse of [`lift_phase`] for any vector with a nonzero last entry:
/// `φ = conj(ξ_{1:N} / ξ_{N+1})`. Not projected onto the unit circle.
pub fn unlift_phase(xi: &CVector) -> CVector {
    let n = xi.len() - 1;
    let last = xi[n];
    CVector::from_fn(n, |i, _| (xi[i] / last).conj())
}

/// Matrices of `S(Q|B)` and `T(Q|B)`. `p`, `r` and their ED versions are
/// `(N+1)×(N+1)` with a zero bottom-right entry; the scalars are carried
/// separately.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStepForms {
    pub p: CMatrix,
    pub r: CMatrix,
    pub p3: f64,
    pub r3: f64,
    pub p_tilde: CMatrix,
    pub r_tilde: CMatrix,
    pub p3_tilde: f64,
    pub r3_tilde: f64,
}

/// Matrices of `S(B|Q)` and `T(B|Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStepForms {
    /// `K = [D(α^H) H_I^H D(h_IF^H), D(α^H) h_f^H]`, `K×(N+1)`.
    pub kmat: CMatrix,
    /// `L = [H_I^H D(h_IF^H), h_f^H]`.
    pub lmat: CMatrix,
    pub k_tilde: CMatrix,
    pub l_tilde: CMatrix,
    /// Diagonal of `Λ = D(α^H) D(α)`.
    pub lambda: Vec<f64>,
    /// `K Q K^H`.
    pub signal: CMatrix,
    /// Diagonal of `L Q L^H`.
    pub noise: Vec<f64>,
    pub signal_tilde: CMatrix,
    pub noise_tilde: Vec<f64>,
}

const HERMITIAN_TOL: f64 = 1e-9;

fn check_hermitian(m: &CMatrix, dim: usize, what: &str) -> Result<(), ModelError> {
    if m.shape() != (dim, dim) {
        return Err(ModelError::Dimension(format!(
            "{what} is {}×{}, expected {dim}×{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_hermitian(m, HERMITIAN_TOL) {
        return Err(ModelError::NotHermitian(hermitian_defect(m)));
    }
    Ok(())
}

/// `[[X₁, x₂], [x₂^H, 0]]`.
fn assemble(x1: &CMatrix, x2: &CVector) -> CMatrix {
    let n = x1.nrows();
    let mut out = CMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(x1);
    for i in 0..n {
        out[(i, n)] = x2[i];
        out[(n, i)] = x2[i].conj();
    }
    out
}

/// One receiver's `(X, x₃)` pair for the signal (`weights = D(α) B D(α^H)`)
/// or the forwarded-noise term (`weights = D(B)`).
fn phase_block(g: &CMatrix, h_direct: &CVector, weights: &CMatrix) -> (CMatrix, f64) {
    // g = D(h_irs) H_I, N×K; the direct link enters as the row h_direct^T.
    let gw = g * weights;
    let x1 = &gw * g.adjoint();
    let hc = h_direct.map(|z| z.conj());
    let x2 = &gw * &hc;
    let x3 = (h_direct.transpose() * weights * &hc)[(0, 0)].re;
    (assemble(&x1, &x2), x3)
}

pub fn build_phase_forms(ch: &ChannelSet, b: &CMatrix) -> Result<PhaseStepForms, ModelError> {
    let k = ch.sensors();
    check_hermitian(b, k, "B")?;
    let signal_weights = CMatrix::from_fn(k, k, |i, j| ch.alpha[i] * b[(i, j)] * ch.alpha[j].conj());
    let noise_weights = CMatrix::from_diagonal(&CVector::from_fn(k, |i, _| b[(i, i)].re.into()));
    let cascade = |h_irs: &CVector| {
        let mut g = ch.h_i.clone();
        for (mut row, h) in g.row_iter_mut().zip(h_irs.iter()) {
            row *= *h;
        }
        g
    };
    let g_f = cascade(&ch.h_if);
    let g_e = cascade(&ch.h_ie);
    let (p, p3) = phase_block(&g_f, &ch.h_f, &signal_weights);
    let (r, r3) = phase_block(&g_f, &ch.h_f, &noise_weights);
    let (p_tilde, p3_tilde) = phase_block(&g_e, &ch.h_e, &signal_weights);
    let (r_tilde, r3_tilde) = phase_block(&g_e, &ch.h_e, &noise_weights);
    Ok(PhaseStepForms {
        p,
        r,
        p3,
        r3,
        p_tilde,
        r_tilde,
        p3_tilde,
        r3_tilde,
    })
}

/// `S(Q|B) = Tr[QP] + p₃ − γ(σ²_o(Tr[QR] + r₃) + σ²_f)`.
pub fn eval_s_phase(q: &CMatrix, forms: &PhaseStepForms, gamma: f64, sigma2_o: f64, sigma2_f: f64) -> f64 {
    trace_product(q, &forms.p).re + forms.p3
        - gamma * (sigma2_o * (trace_product(q, &forms.r).re + forms.r3) + sigma2_f)
}

/// `T(Q|B) = Tr[QP̃] + p̃₃ − η(σ²_o(Tr[QR̃] + r̃₃) + σ²_e)`.
pub fn eval_t_phase(q: &CMatrix, forms: &PhaseStepForms, eta: f64, sigma2_o: f64, sigma2_e: f64) -> f64 {
    trace_product(q, &forms.p_tilde).re + forms.p3_tilde
        - eta * (sigma2_o * (trace_product(q, &forms.r_tilde).re + forms.r3_tilde) + sigma2_e)
}

fn weight_pair(ch: &ChannelSet, h_irs: &CVector, h_direct: &CVector) -> (CMatrix, CMatrix) {
    let (k, n) = (ch.sensors(), ch.elements());
    let mut l = CMatrix::zeros(k, n + 1);
    for kk in 0..k {
        for i in 0..n {
            l[(kk, i)] = (ch.h_i[(i, kk)] * h_irs[i]).conj();
        }
        l[(kk, n)] = h_direct[kk].conj();
    }
    let mut km = l.clone();
    for (mut row, a) in km.row_iter_mut().zip(ch.alpha.iter()) {
        row *= a.conj();
    }
    (km, l)
}

fn diag_of_congruence(l: &CMatrix, q: &CMatrix) -> Vec<f64> {
    let lq = l * q;
    (0..l.nrows())
        .map(|r| lq.row(r).iter().zip(l.row(r).iter()).map(|(a, b)| (a * b.conj()).re).sum())
        .collect()
}

pub fn build_weight_forms(ch: &ChannelSet, q: &CMatrix) -> Result<WeightStepForms, ModelError> {
    let n = ch.elements();
    check_hermitian(q, n + 1, "Q")?;
    let (kmat, lmat) = weight_pair(ch, &ch.h_if, &ch.h_f);
    let (k_tilde, l_tilde) = weight_pair(ch, &ch.h_ie, &ch.h_e);
    let signal = &kmat * q * kmat.adjoint();
    let signal_tilde = &k_tilde * q * k_tilde.adjoint();
    Ok(WeightStepForms {
        noise: diag_of_congruence(&lmat, q),
        noise_tilde: diag_of_congruence(&l_tilde, q),
        lambda: ch.alpha.iter().map(|a| a.norm_sqr()).collect(),
        kmat,
        lmat,
        k_tilde,
        l_tilde,
        signal,
        signal_tilde,
    })
}

fn diag_trace(d: &[f64], b: &CMatrix) -> f64 {
    d.iter().enumerate().map(|(i, v)| v * b[(i, i)].re).sum()
}

/// `S(B|Q) = Tr[KQK^H B] − γ(σ²_o Tr[((LQL^H)⊙I) B] + σ²_f)`.
pub fn eval_s_weight(b: &CMatrix, forms: &WeightStepForms, gamma: f64, sigma2_o: f64, sigma2_f: f64) -> f64 {
    trace_product(&forms.signal, b).re - gamma * (sigma2_o * diag_trace(&forms.noise, b) + sigma2_f)
}

/// `T(B|Q)`, tilded matrices with `(η, σ²_e)`.
pub fn eval_t_weight(b: &CMatrix, forms: &WeightStepForms, eta: f64, sigma2_o: f64, sigma2_e: f64) -> f64 {
    trace_product(&forms.signal_tilde, b).re - eta * (sigma2_o * diag_trace(&forms.noise_tilde, b) + sigma2_e)
}

/// `Tr[ΛB] + σ²_o Tr[B]`.
pub fn lifted_power(b: &CMatrix, forms: &WeightStepForms, sigma2_o: f64) -> f64 {
    forms
        .lambda
        .iter()
        .enumerate()
        .map(|(i, l)| (l + sigma2_o) * b[(i, i)].re)
        .sum()
}
