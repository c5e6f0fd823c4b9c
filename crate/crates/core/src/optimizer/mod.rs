//! Bisection-based alternating optimization of IRS phases and sensor
//! weights.

mod alternate;
mod bisection;
mod extraction;
mod steps;

pub use alternate::{alternate, optimize_weights, IterationRecord, OptimizationTrace, Termination};
pub use bisection::{bisect_step, BisectionResult, BisectionSettings, GammaFamily, ProbeStats};
pub use extraction::{joint_extract, rank_one_extract, scale_weights, ExtractionTarget, GaussianSampler, RANK_ONE_RATIO};
pub use steps::{normalize_unit_diagonal, PhaseStep, WeightStep};

use crate::linalg::hermitian_eigen;
use crate::scenario::{ChannelSet, ScenarioConfig};

/// Upper bound on the FC SNR over every phase profile and every weight
/// vector within the power budget, for the relaxation as well.
///
/// `|h_F(α⊙β)|² ≤ C² ‖α⊙β‖²` with `C = ‖h_IF‖‖H_I‖₂ + ‖h_f‖`, and
/// `‖α⊙β‖² ≤ P_T max_k |α_k|²/(|α_k|² + σ²_o)` under the power constraint.
pub fn gamma_upper_bound(ch: &ChannelSet, cfg: &ScenarioConfig) -> f64 {
    let spectral = if ch.elements() == 0 || ch.sensors() == 0 {
        0.0
    } else {
        let (values, _) = hermitian_eigen(&(ch.h_i.adjoint() * &ch.h_i));
        values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    };
    let c = ch.h_if.norm() * spectral + ch.h_f.norm();
    let gain = ch
        .alpha
        .iter()
        .map(|a| a.norm_sqr() / (a.norm_sqr() + cfg.sigma2_o))
        .fold(0.0, f64::max);
    c * c * cfg.p_t * gain / cfg.sigma2_f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{outer, CVector, ONE, ZERO};
    use crate::model::{link_quality, BeamformerPair};
    use crate::rng::{stream, Lane};
    use crate::scenario::{draw_channels, place_sensors};
    use crate::sdr_forms::lift_phase;

    fn instance(seed: u64, k: usize, n: usize, eta: f64) -> (ChannelSet, ScenarioConfig) {
        let cfg = ScenarioConfig {
            k,
            n,
            eta,
            ..ScenarioConfig::default()
        };
        let mut rng = stream(seed, Lane::Channels, 0);
        let layout = place_sensors(&cfg, &mut rng);
        (draw_channels(&layout, &cfg, &mut rng).unwrap(), cfg)
    }

    #[test]
    fn bound_without_reflection_and_for_zero_channels() {
        let (mut ch, cfg) = instance(1, 4, 3, 1.0);
        ch.h_i.fill(ZERO);
        let expect = ch.h_f.norm_squared() * cfg.p_t / (1.0 + cfg.sigma2_o) / cfg.sigma2_f;
        assert!((gamma_upper_bound(&ch, &cfg) - expect).abs() <= 1e-12 * expect);
        ch.h_f.fill(ZERO);
        ch.h_if.fill(ZERO);
        assert_eq!(gamma_upper_bound(&ch, &cfg), 0.0);
    }

    #[test]
    fn single_sensor_closed_form() {
        let (ch, cfg) = instance(2, 1, 0, f64::INFINITY);
        let h2 = ch.h_f[0].norm_sqr();
        let a2 = ch.alpha[0].norm_sqr();
        let beta2 = cfg.p_t / (a2 + cfg.sigma2_o);
        let expect = h2 * a2 * beta2 / (cfg.sigma2_o * beta2 * h2 + cfg.sigma2_f);
        let mut rng = stream(2, Lane::Algorithm, 0);
        let (r, beta) = optimize_weights(&ch, &cfg, &CVector::zeros(0), &mut rng).unwrap();
        assert!(r.gamma <= expect + 1e-6 && expect - r.gamma <= cfg.epsilon, "{} vs {expect}", r.gamma);
        let q = link_quality(&ch, &BeamformerPair::with_unit_phases(beta, 0), &cfg).unwrap();
        assert!((q.snr_fc - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn zero_eta_with_signal_floor_is_infeasible() {
        // The ED sees exactly what the FC sees, so T ≤ 0 with η → 0 forces
        // zero signal and any positive floor is unreachable.
        let (mut ch, mut cfg) = instance(3, 2, 0, 1.0);
        ch.h_e = ch.h_f.clone();
        cfg.sigma2_e = cfg.sigma2_f;
        cfg.eta = 1e-12;
        let step = WeightStep::new(&ch, &outer(&lift_phase(&CVector::zeros(0))), &cfg).unwrap();
        let settings = BisectionSettings::from_config(&cfg);
        let err = bisect_step(&step, 10.0, 20.0, None, &settings).unwrap_err();
        assert_eq!(err, crate::error::OptimizerError::InfeasibleAtFloor { gamma: 10.0 });
    }

    #[test]
    fn alternation_is_monotone_and_feasible() {
        for seed in 0..4 {
            let (ch, cfg) = instance(seed, 3, 6, 1.0);
            let mut rng = stream(seed, Lane::Algorithm, 0);
            let trace = alternate(&ch, &cfg, &mut rng).unwrap();
            assert!(trace.termination.succeeded(), "{:?}", trace.termination);
            let g = trace.gamma_sequence();
            assert!(g.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{g:?}");
            let q = trace.quality.unwrap();
            assert!(q.power <= cfg.p_t * (1.0 + 1e-6));
            assert!(q.snr_ed <= cfg.eta * (1.0 + 1e-3));
            assert!(q.snr_fc <= trace.gamma_relaxed * (1.0 + 1e-6));
            assert!(trace.gamma_final <= trace.gamma_bound);
        }
    }

    #[test]
    fn unit_phase_weight_step_matches_no_irs_when_reflection_vanishes() {
        let (mut ch, cfg) = instance(5, 3, 2, 1.0);
        ch.h_i.fill(ZERO);
        let mut rng = stream(5, Lane::Algorithm, 0);
        let (a, _) = optimize_weights(&ch, &cfg, &CVector::from_element(2, ONE), &mut rng).unwrap();
        let (b, _) = optimize_weights(&ch.without_irs(), &cfg, &CVector::zeros(0), &mut rng).unwrap();
        assert!((a.gamma - b.gamma).abs() <= 2.0 * cfg.epsilon);
    }
}
