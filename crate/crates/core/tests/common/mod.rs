//! Instance generators and direct-evaluation oracles shared by the
//! integration tests. Nothing here calls into `jtrb_core::model`.

#![allow(dead_code)]

use jtrb_core::linalg::{CMatrix, CVector};
use jtrb_core::scenario::{ChannelSet, ScenarioConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ 0x05ee_d0f0_ac1e)
}

pub fn cn<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    Complex64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

pub fn cn_vec<R: Rng>(rng: &mut R, n: usize, var: f64) -> CVector {
    CVector::from_fn(n, |_, _| cn(rng, var))
}

pub fn unit_phases<R: Rng>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
}

/// Unit-scale channels, random observation gains and noise levels, and a
/// random `(φ, β)`.
pub struct Instance {
    pub ch: ChannelSet,
    pub cfg: ScenarioConfig,
    pub phi: CVector,
    pub beta: CVector,
}

pub fn random_instance<R: Rng>(rng: &mut R, k: usize, n: usize) -> Instance {
    let ch = ChannelSet {
        h_i: CMatrix::from_fn(n, k, |_, _| cn(rng, 1.0)),
        h_if: cn_vec(rng, n, 1.0),
        h_ie: cn_vec(rng, n, 1.0),
        h_f: cn_vec(rng, k, 1.0),
        h_e: cn_vec(rng, k, 1.0),
        alpha: cn_vec(rng, k, 1.0),
    };
    let cfg = ScenarioConfig {
        k,
        n,
        sigma2_o: rng.random_range(0.05..2.0),
        sigma2_f: rng.random_range(0.05..2.0),
        sigma2_e: rng.random_range(0.05..2.0),
        eta: rng.random_range(0.1..5.0),
        ..ScenarioConfig::default()
    };
    Instance {
        phi: unit_phases(rng, n),
        beta: cn_vec(rng, k, 1.0),
        ch,
        cfg,
    }
}

/// `(h_irs^T D(φ) H_I + h_direct^T)^T` as a matrix product.
pub fn channel(h_i: &CMatrix, h_irs: &CVector, direct: &CVector, phi: &CVector) -> CVector {
    if phi.is_empty() {
        return direct.clone();
    }
    let row = h_irs.component_mul(phi).transpose() * h_i;
    row.transpose() + direct
}

pub fn h_fc(ch: &ChannelSet, phi: &CVector) -> CVector {
    channel(&ch.h_i, &ch.h_if, &ch.h_f, phi)
}

pub fn h_ed(ch: &ChannelSet, phi: &CVector) -> CVector {
    channel(&ch.h_i, &ch.h_ie, &ch.h_e, phi)
}

/// `|h(α⊙β)|²`.
pub fn signal(h: &CVector, alpha: &CVector, beta: &CVector) -> f64 {
    (h.transpose() * alpha.component_mul(beta))[(0, 0)].norm_sqr()
}

/// `Σ_k |β_k|² |h_k|²`.
pub fn noise(h: &CVector, beta: &CVector) -> f64 {
    h.iter().zip(beta.iter()).map(|(a, b)| a.norm_sqr() * b.norm_sqr()).sum()
}

pub fn snr(h: &CVector, alpha: &CVector, beta: &CVector, sigma2_o: f64, sigma2_rx: f64) -> f64 {
    signal(h, alpha, beta) / (sigma2_o * noise(h, beta) + sigma2_rx)
}

pub fn s_direct(inst: &Instance, gamma: f64) -> f64 {
    let h = h_fc(&inst.ch, &inst.phi);
    signal(&h, &inst.ch.alpha, &inst.beta) - gamma * (inst.cfg.sigma2_o * noise(&h, &inst.beta) + inst.cfg.sigma2_f)
}

pub fn t_direct(inst: &Instance) -> f64 {
    let h = h_ed(&inst.ch, &inst.phi);
    signal(&h, &inst.ch.alpha, &inst.beta) - inst.cfg.eta * (inst.cfg.sigma2_o * noise(&h, &inst.beta) + inst.cfg.sigma2_e)
}

pub fn power(alpha: &CVector, beta: &CVector, sigma2_o: f64) -> f64 {
    alpha.iter().zip(beta.iter()).map(|(a, b)| (a.norm_sqr() + sigma2_o) * b.norm_sqr()).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Empirical MSE of the scalar LMMSE combiner fitted on `draws` samples of
/// `y = h((α⊙β)θ + β⊙n) + u`, `θ ~ CN(0,1)`, `n ~ CN(0, σ²_o I)`,
/// `u ~ CN(0, σ²_rx)`.
pub fn monte_carlo_mse<R: Rng>(
    rng: &mut R,
    h: &CVector,
    alpha: &CVector,
    beta: &CVector,
    sigma2_o: f64,
    sigma2_rx: f64,
    draws: usize,
) -> f64 {
    let k = alpha.len();
    let mut thetas = Vec::with_capacity(draws);
    let mut ys = Vec::with_capacity(draws);
    for _ in 0..draws {
        let theta = cn(rng, 1.0);
        let mut y = cn(rng, sigma2_rx);
        for i in 0..k {
            y += h[i] * (alpha[i] * beta[i] * theta + beta[i] * cn(rng, sigma2_o));
        }
        thetas.push(theta);
        ys.push(y);
    }
    let cross: Complex64 = thetas.iter().zip(&ys).map(|(t, y)| t * y.conj()).sum();
    let power: f64 = ys.iter().map(|y| y.norm_sqr()).sum();
    let w = cross / power;
    thetas.iter().zip(&ys).map(|(t, y)| (t - w * y).norm_sqr()).sum::<f64>() / draws as f64
}
