//! Rank-one recovery from lifted matrices by eigenvector or Gaussian
//! randomization.

use rand::Rng;

use crate::error::OptimizerError;
use crate::linalg::{hermitian_eigen, second_to_first_eigen_ratio, CMatrix, CVector};
use crate::model::{
    effective_channel, forwarded_noise_gain, project_unit_modulus, signal_amplitude, snr, transmit_power,
    EffectiveChannels,
};
use crate::scenario::{complex_gaussian, ChannelSet, ScenarioConfig};
use crate::sdr_forms::unlift_phase;

/// Below this `λ₂/λ₁` a lifted matrix is treated as exactly rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;

/// What the lifted matrix encodes, with the fixed partner vector.
#[derive(Debug, Clone, Copy)]
pub enum ExtractionTarget<'a> {
    /// `Q` of size `N+1`; `beta` is the fixed weight vector.
    Phase { beta: &'a CVector },
    /// `B` of size `K`; `phi` is the fixed phase vector.
    Weight { phi: &'a CVector },
}

/// Draws `ξ ~ CN(0, X)` through the eigendecomposition of `X`.
pub struct GaussianSampler {
    factor: CMatrix,
    dominant: CVector,
    rank_one: bool,
}

impl GaussianSampler {
    pub fn new(x: &CMatrix) -> Self {
        let (values, vectors) = hermitian_eigen(x);
        let n = values.len();
        let mut factor = vectors.clone();
        for (j, v) in values.iter().enumerate() {
            let s = v.max(0.0).sqrt();
            factor.column_mut(j).scale_mut(s);
        }
        let top = values.last().copied().unwrap_or(0.0).max(0.0).sqrt();
        Self {
            dominant: vectors.column(n - 1) * num_complex::Complex64::from(top),
            factor,
            rank_one: second_to_first_eigen_ratio(x) <= RANK_ONE_RATIO,
        }
    }

    /// `√λ₁ u₁`.
    pub fn dominant(&self) -> &CVector {
        &self.dominant
    }

    pub fn is_rank_one(&self) -> bool {
        self.rank_one
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let z = CVector::from_fn(self.factor.ncols(), |_, _| complex_gaussian(rng));
        &self.factor * z
    }
}

/// Scales a weight direction to the full power budget, or down to the ED
/// boundary when full power would exceed `η`.
pub fn scale_weights(direction: &CVector, ch: &ChannelSet, eff: &EffectiveChannels, cfg: &ScenarioConfig) -> CVector {
    let p = transmit_power(&ch.alpha, direction, cfg.sigma2_o);
    if !(p > 0.0) {
        return CVector::zeros(direction.len());
    }
    let mut c2 = cfg.p_t / p;
    if cfg.ed_constrained() {
        let a = signal_amplitude(&eff.h_ed, &ch.alpha, direction).norm_sqr();
        let g = forwarded_noise_gain(&eff.h_ed, direction);
        let excess = a - cfg.eta * cfg.sigma2_o * g;
        if excess > 0.0 {
            c2 = c2.min(cfg.eta * cfg.sigma2_e / excess);
        }
    }
    direction * num_complex::Complex64::from(c2.sqrt())
}

fn ed_ok(eff: &EffectiveChannels, ch: &ChannelSet, beta: &CVector, cfg: &ScenarioConfig) -> bool {
    !cfg.ed_constrained() || snr(&eff.h_ed, &ch.alpha, beta, cfg.sigma2_o, cfg.sigma2_e) <= cfg.eta * (1.0 + 1e-9)
}

fn phase_from_lifted(xi: &CVector) -> Option<CVector> {
    let last = xi[xi.len() - 1];
    (last.norm() > 0.0).then(|| project_unit_modulus(&unlift_phase(xi)))
}

/// Recovers a feasible vector from a lifted matrix, keeping the candidate
/// with the best FC SNR. Weight candidates are always made feasible by
/// scaling; phase candidates that break the ED constraint are dropped.
pub fn rank_one_extract<R: Rng + ?Sized>(
    x: &CMatrix,
    target: ExtractionTarget<'_>,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    draws: usize,
    rng: &mut R,
) -> Result<CVector, OptimizerError> {
    let sampler = GaussianSampler::new(x);
    let extra = if sampler.is_rank_one() { 0 } else { draws };
    let mut candidates = std::iter::once(sampler.dominant().clone())
        .chain((0..extra).map(|_| sampler.draw(rng)))
        .collect::<Vec<_>>()
        .into_iter();
    let mut best: Option<(f64, CVector)> = None;
    let mut keep = |score: f64, v: CVector| {
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, v));
        }
    };
    match target {
        ExtractionTarget::Weight { phi } => {
            let eff = effective_channel(ch, phi)?;
            for d in candidates.by_ref() {
                let beta = scale_weights(&d, ch, &eff, cfg);
                keep(snr(&eff.h_fc, &ch.alpha, &beta, cfg.sigma2_o, cfg.sigma2_f), beta);
            }
        }
        ExtractionTarget::Phase { beta } => {
            for xi in candidates.by_ref() {
                let Some(phi) = phase_from_lifted(&xi) else { continue };
                let eff = effective_channel(ch, &phi)?;
                if ed_ok(&eff, ch, beta, cfg) {
                    keep(snr(&eff.h_fc, &ch.alpha, beta, cfg.sigma2_o, cfg.sigma2_f), phi);
                }
            }
        }
    }
    best.map(|(_, v)| v)
        .ok_or(OptimizerError::ExtractionFailed { draws: extra + 1 })
}

/// Joint randomization over `(Q, B)`: each phase draw is paired with a
/// weight draw scaled to feasibility. Returns `(φ, β)`.
pub fn joint_extract<R: Rng + ?Sized>(
    q: &CMatrix,
    b: &CMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    draws: usize,
    rng: &mut R,
) -> Result<(CVector, CVector), OptimizerError> {
    let qs = GaussianSampler::new(q);
    let bs = GaussianSampler::new(b);
    let mut best: Option<(f64, CVector, CVector)> = None;
    let mut consider = |xi: CVector, d: CVector| -> Result<(), OptimizerError> {
        let Some(phi) = phase_from_lifted(&xi) else { return Ok(()) };
        let eff = effective_channel(ch, &phi)?;
        let beta = scale_weights(&d, ch, &eff, cfg);
        let s = snr(&eff.h_fc, &ch.alpha, &beta, cfg.sigma2_o, cfg.sigma2_f);
        if best.as_ref().is_none_or(|(bs, _, _)| s > *bs) {
            best = Some((s, phi, beta));
        }
        Ok(())
    };
    consider(qs.dominant().clone(), bs.dominant().clone())?;
    let n_draws = if qs.is_rank_one() && bs.is_rank_one() { 0 } else { draws };
    for _ in 0..n_draws {
        let xi = if qs.is_rank_one() { qs.dominant().clone() } else { qs.draw(rng) };
        let d = if bs.is_rank_one() { bs.dominant().clone() } else { bs.draw(rng) };
        consider(xi, d)?;
    }
    best.map(|(_, phi, beta)| (phi, beta))
        .ok_or(OptimizerError::ExtractionFailed { draws: n_draws + 1 })
}
