//! Bisection over the SNR target `γ` with SDP feasibility probes.

use serde::Serialize;

use crate::error::{OptimizerError, SdpError};
use crate::linalg::CMatrix;
use crate::scenario::{Bracketing, ScenarioConfig};
use crate::sdp::{self, check_feasibility, FeasibilityStatus, SdpFeasibilityProblem, SdpSettings};

/// A one-parameter family of feasibility problems, harder as `γ` grows.
pub trait GammaFamily {
    fn problem_at(&self, gamma: f64) -> SdpFeasibilityProblem;

    /// Achieved `γ` of a lifted matrix (its relaxed SNR).
    fn ratio(&self, x: &CMatrix) -> f64;

    /// Maximizer of [`ratio`](Self::ratio) over the feasible set, if the
    /// family knows how to compute it. `Ok(None)` when the solve failed.
    fn fractional(&self, _settings: &SdpSettings) -> Result<Option<CMatrix>, SdpError> {
        Ok(None)
    }

    fn verify(&self, gamma: f64, x: &CMatrix, tol: f64) -> bool {
        sdp::verify(&self.problem_at(gamma), x).passes(tol)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BisectionSettings {
    pub epsilon: f64,
    pub bracketing: Bracketing,
    pub sdp: SdpSettings,
}

impl BisectionSettings {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            epsilon: cfg.epsilon,
            bracketing: cfg.bracketing,
            sdp: SdpSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProbeStats {
    /// SDP solves, including the fractional one.
    pub solves: usize,
    /// Probes the solver could not decide; they count as infeasible.
    pub inconclusive: usize,
    /// Whether the fractional solve supplied the bracket.
    pub fractional_hit: bool,
    /// Whether the incumbent passed the direct check at the floor.
    pub incumbent_verified: bool,
    /// Interior-point iterations over all feasibility probes.
    pub ipm_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct BisectionResult {
    /// Largest `γ` certified feasible.
    pub gamma: f64,
    /// Upper end of the final bracket: the infeasible probe, or the
    /// original `gamma_hi`.
    pub upper: f64,
    /// Feasible lifted matrix at `gamma`.
    pub x: CMatrix,
    pub stats: ProbeStats,
}

/// Relative distance below the fractional optimum at which its maximizer
/// is checked, so that rounding in the maximizer does not fail the check.
const SEED_BACKOFF: f64 = 1e-9;

enum Probe {
    Feasible(CMatrix),
    Rejected,
}

fn probe<F: GammaFamily + ?Sized>(
    family: &F,
    gamma: f64,
    settings: &BisectionSettings,
    stats: &mut ProbeStats,
) -> Result<Probe, SdpError> {
    stats.solves += 1;
    let out = check_feasibility(&family.problem_at(gamma), &settings.sdp)?;
    stats.ipm_iterations += out.iterations;
    Ok(match (out.status, out.x) {
        (FeasibilityStatus::Feasible, Some(x)) => Probe::Feasible(x),
        (FeasibilityStatus::Infeasible, _) => Probe::Rejected,
        _ => {
            stats.inconclusive += 1;
            Probe::Rejected
        }
    })
}

/// Finds the largest feasible `γ` in `[gamma_lo, gamma_hi]` to within `ε`.
///
/// `incumbent`, when it is feasible at `gamma_lo`, saves the floor probe.
/// In fractional mode the bracket is seeded from the family's ratio
/// maximizer and tightened by galloping; plain mode halves the interval
/// from the start.
pub fn bisect_step<F: GammaFamily + ?Sized>(
    family: &F,
    gamma_lo: f64,
    gamma_hi: f64,
    incumbent: Option<&CMatrix>,
    settings: &BisectionSettings,
) -> Result<BisectionResult, OptimizerError> {
    if !(gamma_lo <= gamma_hi) {
        return Err(OptimizerError::EmptyInterval {
            lo: gamma_lo,
            hi: gamma_hi,
        });
    }
    let tol = settings.sdp.tol;
    let eps = settings.epsilon;
    let mut stats = ProbeStats::default();
    let (mut lo, mut hi) = (gamma_lo, gamma_hi);

    let mut x = match incumbent.filter(|x| family.verify(lo, x, tol)) {
        Some(x) => {
            stats.incumbent_verified = true;
            x.clone()
        }
        None => match probe(family, lo, settings, &mut stats)? {
            Probe::Feasible(x) => x,
            Probe::Rejected => return Err(OptimizerError::InfeasibleAtFloor { gamma: lo }),
        },
    };

    let mut gallop = false;
    if settings.bracketing == Bracketing::Fractional && hi - lo > eps {
        stats.solves += 1;
        if let Some(xc) = family.fractional(&settings.sdp)? {
            let ratio = family.ratio(&xc);
            let seed = (ratio - (0.5 * eps).min(SEED_BACKOFF * ratio.abs())).min(hi);
            if seed >= lo && family.verify(seed, &xc, tol) {
                lo = seed;
                x = xc;
                stats.fractional_hit = true;
            }
            gallop = true;
        }
    }

    if gallop {
        let mut step = eps;
        while hi - lo > eps {
            let g = (lo + step).min(hi);
            match probe(family, g, settings, &mut stats)? {
                Probe::Feasible(xf) => {
                    lo = g;
                    x = xf;
                    step *= 2.0;
                }
                Probe::Rejected => {
                    hi = g;
                    break;
                }
            }
        }
    }

    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        match probe(family, mid, settings, &mut stats)? {
            Probe::Feasible(xf) => {
                lo = mid;
                x = xf;
            }
            Probe::Rejected => hi = mid,
        }
    }

    Ok(BisectionResult {
        gamma: lo,
        upper: hi,
        x,
        stats,
    })
}
