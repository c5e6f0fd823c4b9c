//! Alternating phase/weight optimization with final rank-one extraction.

use rand::Rng;
use serde::Serialize;

use crate::error::OptimizerError;
use crate::linalg::{outer, second_to_first_eigen_ratio, CMatrix, CVector, ONE};
use crate::model::{link_quality, snr, effective_channel, BeamformerPair, LinkQuality};
use crate::scenario::{ChannelSet, InitialPhase, ScenarioConfig};
use crate::sdr_forms::lift_phase;

use super::bisection::{bisect_step, BisectionResult, BisectionSettings, ProbeStats};
use super::extraction::{joint_extract, rank_one_extract, ExtractionTarget};
use super::gamma_upper_bound;
use super::steps::{PhaseStep, WeightStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
    InfeasibleAtFloor,
    ExtractionFailed,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationCap => "iteration_cap",
            Termination::InfeasibleAtFloor => "infeasible_at_floor",
            Termination::ExtractionFailed => "extraction_failed",
        }
    }

    /// Whether the run produced a usable beamformer pair.
    pub fn succeeded(self) -> bool {
        matches!(self, Termination::Converged | Termination::IterationCap)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    /// 1-based outer iteration.
    pub iteration: usize,
    pub gamma_phase: f64,
    pub gamma_weight: f64,
    pub phase_stats: ProbeStats,
    pub weight_stats: ProbeStats,
    /// `λ₂/λ₁` of `Q` and `B` after the iteration.
    pub rank_q: f64,
    pub rank_b: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationTrace {
    /// `γ` of the weight-only bisection that provides the first `B`.
    pub bootstrap_gamma: f64,
    pub bootstrap_stats: ProbeStats,
    pub iterations: Vec<IterationRecord>,
    /// Last `γ` reached by the alternation.
    pub gamma_final: f64,
    /// Certified upper bound on the FC SNR of any feasible `β` for the
    /// extracted `φ`.
    pub gamma_relaxed: f64,
    /// Channel-only bound used as the top of every bisection.
    pub gamma_bound: f64,
    #[serde(skip)]
    pub pair: Option<BeamformerPair>,
    pub quality: Option<LinkQuality>,
    pub termination: Termination,
}

impl OptimizationTrace {
    /// `γ` after every step in order: bootstrap, then phase and weight of
    /// each outer iteration.
    pub fn gamma_sequence(&self) -> Vec<f64> {
        std::iter::once(self.bootstrap_gamma)
            .chain(self.iterations.iter().flat_map(|r| [r.gamma_phase, r.gamma_weight]))
            .collect()
    }

    /// `γ` after each completed outer iteration, starting with the bootstrap.
    pub fn gamma_per_iteration(&self) -> Vec<f64> {
        std::iter::once(self.bootstrap_gamma)
            .chain(self.iterations.iter().map(|r| r.gamma_weight))
            .collect()
    }
}

/// Weight-only optimization for a fixed phase profile: bisection on the
/// weight step, then extraction of `β`.
pub fn optimize_weights<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    phi: &CVector,
    rng: &mut R,
) -> Result<(BisectionResult, CVector), OptimizerError> {
    let settings = BisectionSettings::from_config(cfg);
    let bound = gamma_upper_bound(ch, cfg);
    let step = WeightStep::new(ch, &outer(&lift_phase(phi)), cfg)?;
    let k = ch.sensors();
    let r = bisect_step(&step, 0.0, bound, Some(&CMatrix::zeros(k, k)), &settings)?;
    let beta = rank_one_extract(
        &r.x,
        ExtractionTarget::Weight { phi },
        ch,
        cfg,
        cfg.randomizations,
        rng,
    )?;
    Ok((r, beta))
}

fn initial_phase<R: Rng + ?Sized>(cfg: &ScenarioConfig, n: usize, rng: &mut R) -> CVector {
    match cfg.initial_phase {
        InitialPhase::Ones => CVector::from_element(n, ONE),
        InitialPhase::Random => CVector::from_fn(n, |_, _| {
            num_complex::Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>())
        }),
    }
}

fn fc_snr(ch: &ChannelSet, cfg: &ScenarioConfig, phi: &CVector, beta: &CVector) -> Result<f64, OptimizerError> {
    let eff = effective_channel(ch, phi)?;
    Ok(snr(&eff.h_fc, &ch.alpha, beta, cfg.sigma2_o, cfg.sigma2_f))
}

/// Runs the alternating optimization and extracts a feasible pair.
///
/// Bisection failures at the floor end the run with
/// [`Termination::InfeasibleAtFloor`]; solver and dimension errors are
/// returned as errors.
pub fn alternate<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<OptimizationTrace, OptimizerError> {
    ch.check()
        .map_err(|e| crate::error::ModelError::Dimension(e.to_string()))?;
    let settings = BisectionSettings::from_config(cfg);
    let bound = gamma_upper_bound(ch, cfg);
    let n = ch.elements();
    let phi0 = initial_phase(cfg, n, rng);
    let mut q = outer(&lift_phase(&phi0));

    let mut trace = OptimizationTrace {
        bootstrap_gamma: 0.0,
        bootstrap_stats: ProbeStats::default(),
        iterations: Vec::new(),
        gamma_final: 0.0,
        gamma_relaxed: bound,
        gamma_bound: bound,
        pair: None,
        quality: None,
        termination: Termination::IterationCap,
    };

    let floor = |e: OptimizerError, trace: &mut OptimizationTrace| match e {
        OptimizerError::InfeasibleAtFloor { .. } => {
            trace.termination = Termination::InfeasibleAtFloor;
            Ok(())
        }
        other => Err(other),
    };

    // Without an IRS the weight step is the whole problem.
    if n == 0 {
        match optimize_weights(ch, cfg, &phi0, rng) {
            Ok((r, beta)) => {
                trace.bootstrap_gamma = r.gamma;
                trace.bootstrap_stats = r.stats;
                trace.gamma_final = r.gamma;
                trace.gamma_relaxed = r.upper;
                trace.termination = Termination::Converged;
                let pair = BeamformerPair::with_unit_phases(beta, 0);
                trace.quality = Some(link_quality(ch, &pair, cfg)?);
                trace.pair = Some(pair);
            }
            Err(e) => floor(e, &mut trace)?,
        }
        return Ok(trace);
    }

    let k = ch.sensors();
    let boot = match bisect_step(
        &WeightStep::new(ch, &q, cfg)?,
        0.0,
        bound,
        Some(&CMatrix::zeros(k, k)),
        &settings,
    ) {
        Ok(r) => r,
        Err(e) => {
            floor(e, &mut trace)?;
            return Ok(trace);
        }
    };
    trace.bootstrap_gamma = boot.gamma;
    trace.bootstrap_stats = boot.stats;
    let mut gamma = boot.gamma;
    let mut b = boot.x;

    for iteration in 1..=cfg.n_iter {
        let lo = if cfg.warm_start { gamma } else { 0.0 };
        let phase = match bisect_step(&PhaseStep::new(ch, &b, cfg)?, lo, bound, Some(&q), &settings) {
            Ok(r) => r,
            Err(e) => {
                floor(e, &mut trace)?;
                break;
            }
        };
        q = phase.x;
        let lo = if cfg.warm_start { phase.gamma } else { 0.0 };
        let weight = match bisect_step(&WeightStep::new(ch, &q, cfg)?, lo, bound, Some(&b), &settings) {
            Ok(r) => r,
            Err(e) => {
                floor(e, &mut trace)?;
                break;
            }
        };
        b = weight.x;
        trace.iterations.push(IterationRecord {
            iteration,
            gamma_phase: phase.gamma,
            gamma_weight: weight.gamma,
            phase_stats: phase.stats,
            weight_stats: weight.stats,
            rank_q: second_to_first_eigen_ratio(&q),
            rank_b: second_to_first_eigen_ratio(&b),
        });
        let improvement = weight.gamma - gamma;
        gamma = weight.gamma;
        if improvement <= cfg.delta * gamma.abs() {
            trace.termination = Termination::Converged;
            break;
        }
    }
    trace.gamma_final = trace.gamma_per_iteration().last().copied().unwrap_or(0.0);
    if trace.termination == Termination::InfeasibleAtFloor {
        return Ok(trace);
    }

    let (phi, beta) = match joint_extract(&q, &b, ch, cfg, cfg.randomizations, rng) {
        Ok(v) => v,
        Err(OptimizerError::ExtractionFailed { .. }) => {
            trace.termination = Termination::ExtractionFailed;
            return Ok(trace);
        }
        Err(e) => return Err(e),
    };
    // Re-optimize the weights for the extracted phases; the bracket top of
    // that bisection bounds every feasible β for this φ.
    let mut best_beta = beta;
    match optimize_weights(ch, cfg, &phi, rng) {
        Ok((r, polished)) => {
            trace.gamma_relaxed = r.upper;
            if fc_snr(ch, cfg, &phi, &polished)? > fc_snr(ch, cfg, &phi, &best_beta)? {
                best_beta = polished;
            }
        }
        Err(OptimizerError::InfeasibleAtFloor { .. }) => {}
        Err(e) => return Err(e),
    }
    let pair = BeamformerPair::new(best_beta, phi)?;
    trace.quality = Some(link_quality(ch, &pair, cfg)?);
    trace.pair = Some(pair);
    Ok(trace)
}
