//! Effective channels, FC/ED estimation quality and constraint checks for a
//! fixed beamformer pair. Everything else in the crate is tested against
//! these direct evaluations.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::ModelError;
use crate::linalg::{CVector, ONE};
use crate::scenario::{ChannelSet, ScenarioConfig};

/// Transmit weights `β` and IRS coefficients `φ` (`|φ_i| = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerPair {
    pub beta: CVector,
    pub phi: CVector,
}

/// Largest tolerated `||φ_i| − 1|` when constructing a pair.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

impl BeamformerPair {
    pub fn new(beta: CVector, phi: CVector) -> Result<Self, ModelError> {
        let pair = Self { beta, phi };
        let defect = pair.modulus_defect();
        if defect > UNIT_MODULUS_TOL {
            return Err(ModelError::Dimension(format!(
                "IRS coefficients must have unit modulus (defect {defect:e})"
            )));
        }
        Ok(pair)
    }

    /// All-ones phase profile of length `n`.
    pub fn with_unit_phases(beta: CVector, n: usize) -> Self {
        Self {
            beta,
            phi: CVector::from_element(n, ONE),
        }
    }

    /// `max_i ||φ_i| − 1|`, zero when there is no IRS.
    pub fn modulus_defect(&self) -> f64 {
        self.phi.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Projects every entry onto the unit circle; zeros map to 1.
pub fn project_unit_modulus(v: &CVector) -> CVector {
    v.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            ONE
        }
    })
}

/// Cascaded plus direct channels seen by the FC and the ED.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    pub h_fc: CVector,
    pub h_ed: CVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkQuality {
    pub snr_fc: f64,
    pub snr_ed: f64,
    pub mse_fc: f64,
    pub mse_ed: f64,
    pub power: f64,
}

/// `h_F = h_IF D(φ) H_I + h_f` and the ED counterpart.
pub fn effective_channel(ch: &ChannelSet, phi: &CVector) -> Result<EffectiveChannels, ModelError> {
    let (k, n) = (ch.sensors(), ch.elements());
    if phi.len() != n || ch.h_i.shape() != (n, k) {
        return Err(ModelError::Dimension(format!(
            "phase vector has length {}, channel set has N = {n}",
            phi.len()
        )));
    }
    let cascade = |h_irs: &CVector, direct: &CVector| {
        let mut out = direct.clone();
        for i in 0..n {
            let a = h_irs[i] * phi[i];
            for kk in 0..k {
                out[kk] += a * ch.h_i[(i, kk)];
            }
        }
        out
    };
    Ok(EffectiveChannels {
        h_fc: cascade(&ch.h_if, &ch.h_f),
        h_ed: cascade(&ch.h_ie, &ch.h_e),
    })
}

/// Received signal amplitude `h (α ⊙ β)`.
pub fn signal_amplitude(h: &CVector, alpha: &CVector, beta: &CVector) -> Complex64 {
    h.iter().zip(alpha.iter()).zip(beta.iter()).map(|((h, a), b)| h * a * b).sum()
}

/// Forwarded observation noise gain `Σ_k |β_k|² |h_k|²`.
pub fn forwarded_noise_gain(h: &CVector, beta: &CVector) -> f64 {
    h.iter().zip(beta.iter()).map(|(h, b)| b.norm_sqr() * h.norm_sqr()).sum()
}

/// Estimation SNR at a receiver with effective channel `h` and noise `σ²`.
pub fn snr(h: &CVector, alpha: &CVector, beta: &CVector, sigma2_o: f64, sigma2_rx: f64) -> f64 {
    signal_amplitude(h, alpha, beta).norm_sqr() / (sigma2_o * forwarded_noise_gain(h, beta) + sigma2_rx)
}

/// LMMSE error for a unit-power parameter.
pub fn mse_from_snr(snr: f64) -> f64 {
    1.0 / (1.0 + snr)
}

/// `Σ_k (|α_k|² + σ²_o) |β_k|²`.
pub fn transmit_power(alpha: &CVector, beta: &CVector, sigma2_o: f64) -> f64 {
    alpha
        .iter()
        .zip(beta.iter())
        .map(|(a, b)| (a.norm_sqr() + sigma2_o) * b.norm_sqr())
        .sum()
}

fn check_dims(ch: &ChannelSet, bf: &BeamformerPair) -> Result<(), ModelError> {
    if bf.beta.len() != ch.sensors() {
        return Err(ModelError::Dimension(format!(
            "weight vector has length {}, channel set has K = {}",
            bf.beta.len(),
            ch.sensors()
        )));
    }
    Ok(())
}

pub fn link_quality(ch: &ChannelSet, bf: &BeamformerPair, cfg: &ScenarioConfig) -> Result<LinkQuality, ModelError> {
    check_dims(ch, bf)?;
    let eff = effective_channel(ch, &bf.phi)?;
    let snr_fc = snr(&eff.h_fc, &ch.alpha, &bf.beta, cfg.sigma2_o, cfg.sigma2_f);
    let snr_ed = snr(&eff.h_ed, &ch.alpha, &bf.beta, cfg.sigma2_o, cfg.sigma2_e);
    Ok(LinkQuality {
        snr_fc,
        snr_ed,
        mse_fc: mse_from_snr(snr_fc),
        mse_ed: mse_from_snr(snr_ed),
        power: transmit_power(&ch.alpha, &bf.beta, cfg.sigma2_o),
    })
}

/// `S(φ, β) = |h_F(α⊙β)|² − γ(σ²_o Σ|β_k|²|h_{F,k}|² + σ²_f)`; non-negative
/// iff `SNR_FC ≥ γ`.
pub fn s_value(ch: &ChannelSet, bf: &BeamformerPair, cfg: &ScenarioConfig, gamma: f64) -> Result<f64, ModelError> {
    check_dims(ch, bf)?;
    let eff = effective_channel(ch, &bf.phi)?;
    Ok(signal_amplitude(&eff.h_fc, &ch.alpha, &bf.beta).norm_sqr()
        - gamma * (cfg.sigma2_o * forwarded_noise_gain(&eff.h_fc, &bf.beta) + cfg.sigma2_f))
}

/// `T(φ, β)`, the ED counterpart of [`s_value`] with `η` and `σ²_e`;
/// non-positive iff `SNR_ED ≤ η`.
pub fn t_value(ch: &ChannelSet, bf: &BeamformerPair, cfg: &ScenarioConfig) -> Result<f64, ModelError> {
    check_dims(ch, bf)?;
    let eff = effective_channel(ch, &bf.phi)?;
    Ok(signal_amplitude(&eff.h_ed, &ch.alpha, &bf.beta).norm_sqr()
        - cfg.eta * (cfg.sigma2_o * forwarded_noise_gain(&eff.h_ed, &bf.beta) + cfg.sigma2_e))
}

/// Relative tolerances of [`check_feasible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityTolerance {
    pub power: f64,
    pub ed: f64,
    pub modulus: f64,
}

impl FeasibilityTolerance {
    pub fn uniform(tol: f64) -> Self {
        Self {
            power: tol,
            ed: tol,
            modulus: tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub power_ok: bool,
    pub ed_ok: bool,
    pub modulus_ok: bool,
    /// `P_T − power`.
    pub power_margin: f64,
    /// `η − SNR_ED`.
    pub ed_margin: f64,
    /// `−max_i ||φ_i| − 1|`.
    pub modulus_margin: f64,
}

impl FeasibilityReport {
    pub fn all_ok(&self) -> bool {
        self.power_ok && self.ed_ok && self.modulus_ok
    }
}

pub fn check_feasible(
    ch: &ChannelSet,
    bf: &BeamformerPair,
    cfg: &ScenarioConfig,
    tol: FeasibilityTolerance,
) -> Result<FeasibilityReport, ModelError> {
    let q = link_quality(ch, bf, cfg)?;
    let defect = bf.modulus_defect();
    Ok(FeasibilityReport {
        power_ok: q.power <= cfg.p_t * (1.0 + tol.power),
        ed_ok: q.snr_ed <= cfg.eta * (1.0 + tol.ed),
        modulus_ok: defect <= tol.modulus,
        power_margin: cfg.p_t - q.power,
        ed_margin: cfg.eta - q.snr_ed,
        modulus_margin: -defect,
    })
}
