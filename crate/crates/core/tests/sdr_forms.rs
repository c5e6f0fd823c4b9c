mod common;

use common::*;
use jtrb_core::linalg::{outer, CMatrix};
use jtrb_core::sdr_forms::{
    build_phase_forms, build_weight_forms, eval_s_phase, eval_s_weight, eval_t_phase, eval_t_weight, lift_phase,
    lifted_power, unlift_phase,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// Random PSD matrix of rank `r`.
fn psd<R: rand::Rng>(rng: &mut R, n: usize, r: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, r, |_, _| cn(rng, 1.0));
    &g * g.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_one_forms_match_direct_evaluation(seed in any::<u64>(), k in 1usize..7, n in 0usize..13, gamma in 0.0f64..20.0) {
        let mut rng = rng(seed);
        let inst = random_instance(&mut rng, k, n);
        let c = &inst.cfg;
        let q = outer(&lift_phase(&inst.phi));
        let b = outer(&inst.beta);
        let pf = build_phase_forms(&inst.ch, &b).unwrap();
        let wf = build_weight_forms(&inst.ch, &q).unwrap();
        let s = s_direct(&inst, gamma);
        let t = t_direct(&inst);
        let scale = |v: f64| v.abs().max(1.0);
        prop_assert!((eval_s_phase(&q, &pf, gamma, c.sigma2_o, c.sigma2_f) - s).abs() <= 1e-9 * scale(s));
        prop_assert!((eval_s_weight(&b, &wf, gamma, c.sigma2_o, c.sigma2_f) - s).abs() <= 1e-9 * scale(s));
        prop_assert!((eval_t_phase(&q, &pf, c.eta, c.sigma2_o, c.sigma2_e) - t).abs() <= 1e-9 * scale(t));
        prop_assert!((eval_t_weight(&b, &wf, c.eta, c.sigma2_o, c.sigma2_e) - t).abs() <= 1e-9 * scale(t));
        let p = power(&inst.ch.alpha, &inst.beta, c.sigma2_o);
        prop_assert!(rel_err(lifted_power(&b, &wf, c.sigma2_o), p) <= 1e-12);
    }

    /// Both parameterizations are bilinear in `(Q, B)`, so they agree for
    /// higher-rank lifts too as long as `Q` keeps its unit corner.
    #[test]
    fn parameterizations_agree_off_rank_one(seed in any::<u64>(), k in 1usize..6, n in 1usize..8, rq in 1usize..4, rb in 1usize..4) {
        let mut rng = rng(seed);
        let inst = random_instance(&mut rng, k, n);
        let c = &inst.cfg;
        let mut q = psd(&mut rng, n + 1, rq);
        let corner = q[(n, n)].re;
        q /= Complex64::from(corner);
        let b = psd(&mut rng, k, rb);
        let pf = build_phase_forms(&inst.ch, &b).unwrap();
        let wf = build_weight_forms(&inst.ch, &q).unwrap();
        let a = eval_s_phase(&q, &pf, 1.3, c.sigma2_o, c.sigma2_f);
        let w = eval_s_weight(&b, &wf, 1.3, c.sigma2_o, c.sigma2_f);
        prop_assert!((a - w).abs() <= 1e-9 * a.abs().max(w.abs()).max(1.0));
        let a = eval_t_phase(&q, &pf, c.eta, c.sigma2_o, c.sigma2_e);
        let w = eval_t_weight(&b, &wf, c.eta, c.sigma2_o, c.sigma2_e);
        prop_assert!((a - w).abs() <= 1e-9 * a.abs().max(w.abs()).max(1.0));
    }

    #[test]
    fn lift_round_trip(seed in any::<u64>(), n in 0usize..16, scale_re in 0.1f64..3.0, scale_im in -3.0f64..3.0) {
        let mut rng = rng(seed);
        let phi = unit_phases(&mut rng, n);
        let xi = lift_phase(&phi) * Complex64::new(scale_re, scale_im);
        let back = unlift_phase(&xi);
        prop_assert!((back - &phi).norm() <= 1e-12 * (1.0 + n as f64));
    }
}

/// Trace identities: `Tr[K Q K^H B] = |h_F(α⊙β)|²` and
/// `Σ_k B_kk (L Q L^H)_kk = Σ_k |β_k|²|h_{F,k}|²`.
#[test]
fn weight_forms_reproduce_signal_and_noise() {
    let mut rng = rng(21);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 5, 7);
        let q = outer(&lift_phase(&inst.phi));
        let b = outer(&inst.beta);
        let wf = build_weight_forms(&inst.ch, &q).unwrap();
        let h = h_fc(&inst.ch, &inst.phi);
        let sig: Complex64 = (&wf.signal * &b).trace();
        let noi: f64 = wf.noise.iter().enumerate().map(|(i, v)| v * b[(i, i)].re).sum();
        assert!(rel_err(sig.re, signal(&h, &inst.ch.alpha, &inst.beta)) <= 1e-9);
        assert!(rel_err(noi, noise(&h, &inst.beta)) <= 1e-9);
    }
}
