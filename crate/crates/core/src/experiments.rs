//! Monte Carlo harness: single trials, parameter sweeps, baselines and
//! CSV/JSON output.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ExperimentError, OptimizerError};
use crate::linalg::CVector;
use crate::model::{link_quality, BeamformerPair, LinkQuality};
use crate::optimizer::{alternate, optimize_weights, OptimizationTrace, Termination};
use crate::rng::{stream, Lane};
use crate::scenario::{dbm_to_watts, draw_channels, place_sensors, ChannelSet, ScenarioConfig};

/// Exact CSV header of per-trial records.
pub const CSV_HEADER: &str =
    "method,swept_var,swept_value,trial,K,N,p_t_dbm,eta,mse_fc,mse_ed,snr_fc,snr_ed,gamma_final,iterations,status,wall_ms";

/// Phase levels used when brute force runs as a sweep baseline.
pub const BRUTE_FORCE_LEVELS: usize = 16;
pub const BRUTE_FORCE_MAX_N: usize = 3;
pub const BRUTE_FORCE_MAX_LEVELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Jtrb,
    /// Weight-only optimization with the IRS removed.
    NoIrs,
    /// Uniformly random IRS phases, optimized weights.
    RandomPhase,
    /// Exhaustive search over quantized phases (`N ≤ 3`).
    BruteForceTiny,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Jtrb => "jtrb",
            Method::NoIrs => "no_irs",
            Method::RandomPhase => "random_phase",
            Method::BruteForceTiny => "brute_force_tiny",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "jtrb" => Ok(Method::Jtrb),
            "no_irs" => Ok(Method::NoIrs),
            "random_phase" => Ok(Method::RandomPhase),
            "brute_force_tiny" => Ok(Method::BruteForceTiny),
            other => Err(ExperimentError::Sweep(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepVar {
    N,
    PtDbm,
    Eta,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::N => "N",
            SweepVar::PtDbm => "p_t_dbm",
            SweepVar::Eta => "eta",
        }
    }

    /// `cfg` with the swept variable set to `value`.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, ExperimentError> {
        let mut out = cfg.clone();
        match self {
            SweepVar::N => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(ExperimentError::Sweep(format!("N must be a non-negative integer, got {value}")));
                }
                out.n = value as usize;
            }
            SweepVar::PtDbm => out.p_t = dbm_to_watts(value),
            SweepVar::Eta => out.eta = value,
        }
        out.validate()?;
        Ok(out)
    }
}

impl FromStr for SweepVar {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "N" | "n" => Ok(SweepVar::N),
            "P_T_dBm" | "p_t_dbm" | "P_T" | "p_t" => Ok(SweepVar::PtDbm),
            "eta" => Ok(SweepVar::Eta),
            other => Err(ExperimentError::Sweep(format!("unknown sweep variable `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: ScenarioConfig,
    /// Methods run next to `jtrb` on the same channels.
    pub baselines: Vec<Method>,
}

impl SweepSpec {
    /// Parses `VAR=v1,v2,...`.
    pub fn parse_sweep(text: &str) -> Result<(SweepVar, Vec<f64>), ExperimentError> {
        let (var, list) = text
            .split_once('=')
            .ok_or_else(|| ExperimentError::Sweep(format!("expected VAR=v1,v2,..., got `{text}`")))?;
        let values = list
            .split(',')
            .map(|v| {
                let v = v.trim();
                match v {
                    "inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
                    _ => v
                        .parse::<f64>()
                        .map_err(|_| ExperimentError::Sweep(format!("bad sweep value `{v}`"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((var.parse()?, values))
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut out = vec![Method::Jtrb];
        for m in &self.baselines {
            if !out.contains(m) {
                out.push(*m);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.values.is_empty() {
            return Err(ExperimentError::Sweep("no sweep values".into()));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Sweep("trials must be at least 1".into()));
        }
        for &v in &self.values {
            let cfg = self.variable.apply(&self.base, v)?;
            if self.baselines.contains(&Method::BruteForceTiny) && cfg.n > BRUTE_FORCE_MAX_N {
                return Err(ExperimentError::SizeGuard {
                    n: cfg.n,
                    levels: BRUTE_FORCE_LEVELS,
                });
            }
        }
        Ok(())
    }
}

/// One row of the per-trial CSV. Metric fields are empty for failed trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub method: Method,
    pub swept_var: Option<&'static str>,
    pub swept_value: Option<f64>,
    pub trial: u64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub p_t_dbm: f64,
    pub eta: f64,
    pub mse_fc: Option<f64>,
    pub mse_ed: Option<f64>,
    pub snr_fc: Option<f64>,
    pub snr_ed: Option<f64>,
    pub gamma_final: Option<f64>,
    pub iterations: usize,
    pub status: &'static str,
    pub wall_ms: f64,
}

impl TrialRecord {
    pub fn succeeded(&self) -> bool {
        self.mse_fc.is_some()
    }
}

/// Per-trial record plus the optimizer trace when the method has one.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub trace: Option<OptimizationTrace>,
    pub pair: Option<BeamformerPair>,
}

/// Channels of trial `trial` under `cfg.seed`.
pub fn trial_channels(cfg: &ScenarioConfig, trial: u64) -> Result<ChannelSet, ExperimentError> {
    let mut rng = stream(cfg.seed, Lane::Channels, trial);
    let layout = place_sensors(cfg, &mut rng);
    Ok(draw_channels(&layout, cfg, &mut rng)?)
}

fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>()))
}

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub pair: BeamformerPair,
    pub quality: LinkQuality,
    /// Relaxed weight-step `γ` at the best grid point.
    pub gamma: f64,
    pub grid_points: usize,
}

/// Exhaustive search over `φ_i ∈ {e^{j2πm/levels}}` with the weights
/// optimized for every grid point.
pub fn brute_force_tiny<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    levels: usize,
    rng: &mut R,
) -> Result<BruteForceResult, ExperimentError> {
    let n = ch.elements();
    if n > BRUTE_FORCE_MAX_N || levels == 0 || levels > BRUTE_FORCE_MAX_LEVELS {
        return Err(ExperimentError::SizeGuard { n, levels });
    }
    let points = levels.pow(n as u32);
    let mut best: Option<BruteForceResult> = None;
    for index in 0..points {
        let mut rest = index;
        let phi = CVector::from_fn(n, |_, _| {
            let m = rest % levels;
            rest /= levels;
            Complex64::from_polar(1.0, std::f64::consts::TAU * m as f64 / levels as f64)
        });
        let (r, beta) = match optimize_weights(ch, cfg, &phi, rng) {
            Ok(v) => v,
            Err(OptimizerError::InfeasibleAtFloor { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let pair = BeamformerPair::new(beta, phi).map_err(OptimizerError::from)?;
        let quality = link_quality(ch, &pair, cfg).map_err(OptimizerError::from)?;
        if best.as_ref().is_none_or(|b| quality.snr_fc > b.quality.snr_fc) {
            best = Some(BruteForceResult {
                pair,
                quality,
                gamma: r.gamma,
                grid_points: points,
            });
        }
    }
    best.ok_or(ExperimentError::Optimizer(OptimizerError::InfeasibleAtFloor { gamma: 0.0 }))
}

fn base_record(cfg: &ScenarioConfig, trial: u64, method: Method) -> TrialRecord {
    TrialRecord {
        method,
        swept_var: None,
        swept_value: None,
        trial,
        k: cfg.k,
        n: if method == Method::NoIrs { 0 } else { cfg.n },
        p_t_dbm: cfg.p_t_dbm(),
        eta: cfg.eta,
        mse_fc: None,
        mse_ed: None,
        snr_fc: None,
        snr_ed: None,
        gamma_final: None,
        iterations: 0,
        status: "error",
        wall_ms: 0.0,
    }
}

fn fill_quality(rec: &mut TrialRecord, q: &LinkQuality) {
    rec.mse_fc = Some(q.mse_fc);
    rec.mse_ed = Some(q.mse_ed);
    rec.snr_fc = Some(q.snr_fc);
    rec.snr_ed = Some(q.snr_ed);
}

/// Runs one method on the channels of trial `trial`.
///
/// Optimizer outcomes that are not usable (infeasible floor, failed
/// extraction, solver errors) are recorded in `status` with empty metrics.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64, method: Method) -> Result<TrialOutcome, ExperimentError> {
    cfg.validate()?;
    let ch = trial_channels(cfg, trial)?;
    let mut rec = base_record(cfg, trial, method);
    let mut rng = stream(cfg.seed, Lane::Algorithm, trial);
    let start = Instant::now();
    let mut trace = None;
    let mut pair = None;
    match method {
        Method::Jtrb => match alternate(&ch, cfg, &mut rng) {
            Ok(t) => {
                rec.status = t.termination.as_str();
                rec.iterations = t.iterations.len();
                if t.termination.succeeded() {
                    rec.gamma_final = Some(t.gamma_final);
                    if let Some(q) = &t.quality {
                        fill_quality(&mut rec, q);
                    }
                }
                pair = t.pair.clone();
                trace = Some(t);
            }
            Err(_) => rec.status = "error",
        },
        Method::NoIrs | Method::RandomPhase => {
            let (channels, phi) = if method == Method::NoIrs {
                (ch.without_irs(), CVector::zeros(0))
            } else {
                let mut aux = stream(cfg.seed, Lane::Auxiliary, trial);
                let phi = random_phases(ch.elements(), &mut aux);
                (ch, phi)
            };
            match optimize_weights(&channels, cfg, &phi, &mut rng) {
                Ok((r, beta)) => {
                    let p = BeamformerPair::new(beta, phi).map_err(OptimizerError::from)?;
                    let q = link_quality(&channels, &p, cfg).map_err(OptimizerError::from)?;
                    rec.status = Termination::Converged.as_str();
                    rec.gamma_final = Some(r.gamma);
                    fill_quality(&mut rec, &q);
                    pair = Some(p);
                }
                Err(OptimizerError::InfeasibleAtFloor { .. }) => rec.status = Termination::InfeasibleAtFloor.as_str(),
                Err(OptimizerError::ExtractionFailed { .. }) => rec.status = Termination::ExtractionFailed.as_str(),
                Err(_) => rec.status = "error",
            }
        }
        Method::BruteForceTiny => {
            let mut aux = stream(cfg.seed, Lane::Auxiliary, trial);
            match brute_force_tiny(&ch, cfg, BRUTE_FORCE_LEVELS, &mut aux) {
                Ok(r) => {
                    rec.status = Termination::Converged.as_str();
                    rec.gamma_final = Some(r.gamma);
                    fill_quality(&mut rec, &r.quality);
                    pair = Some(r.pair);
                }
                Err(e @ ExperimentError::SizeGuard { .. }) => return Err(e),
                Err(_) => rec.status = "error",
            }
        }
    }
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(TrialOutcome { record: rec, trace, pair })
}

/// Mean, standard deviation and failure count per (method, value).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub swept_var: &'static str,
    pub swept_value: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_mse_fc: f64,
    pub std_mse_fc: f64,
    pub sem_mse_fc: f64,
    pub mean_mse_ed: f64,
    pub std_mse_ed: f64,
    pub mean_snr_fc: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Groups records by (method, swept value) in first-appearance order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, u64)> = Vec::new();
    for r in records {
        let key = (r.method, r.swept_value.unwrap_or(f64::NAN).to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, bits)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.method == method && r.swept_value.unwrap_or(f64::NAN).to_bits() == bits)
                .collect();
            let ok: Vec<&&TrialRecord> = group.iter().filter(|r| r.succeeded()).collect();
            let col = |f: fn(&TrialRecord) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
            let (mean_mse_fc, std_mse_fc) = mean_std(&col(|r| r.mse_fc));
            let (mean_mse_ed, std_mse_ed) = mean_std(&col(|r| r.mse_ed));
            let (mean_snr_fc, _) = mean_std(&col(|r| r.snr_fc));
            SummaryRow {
                method,
                swept_var: group[0].swept_var.unwrap_or(""),
                swept_value: f64::from_bits(bits),
                trials: group.len(),
                failures: group.len() - ok.len(),
                mean_mse_fc,
                std_mse_fc,
                sem_mse_fc: std_mse_fc / (ok.len().max(1) as f64).sqrt(),
                mean_mse_ed,
                std_mse_ed,
                mean_snr_fc,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `0` uses rayon's default.
    pub jobs: usize,
    /// Keep optimizer traces of every trial.
    pub keep_traces: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    /// `(record index, trace)` for traced methods when requested.
    pub traces: Vec<(usize, OptimizationTrace)>,
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExperimentError::Sweep(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every (value, trial, method) combination. Results are ordered by
/// value, then trial, then method, independent of scheduling.
pub fn run_sweep(spec: &SweepSpec, opts: RunOptions) -> Result<SweepOutput, ExperimentError> {
    spec.validate()?;
    let methods = spec.methods();
    let mut tasks = Vec::new();
    for &value in &spec.values {
        let cfg = spec.variable.apply(&spec.base, value)?;
        for trial in 0..spec.trials as u64 {
            for &m in &methods {
                tasks.push((value, cfg.clone(), trial, m));
            }
        }
    }
    let var = spec.variable.as_str();
    let outcomes: Vec<Result<TrialOutcome, ExperimentError>> = in_pool(opts.jobs, || {
        tasks
            .par_iter()
            .map(|(value, cfg, trial, m)| {
                run_trial(cfg, *trial, *m).map(|mut o| {
                    o.record.swept_var = Some(var);
                    o.record.swept_value = Some(*value);
                    o
                })
            })
            .collect()
    })?;
    let mut records = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::new();
    for o in outcomes {
        let o = o?;
        if opts.keep_traces {
            if let Some(t) = o.trace {
                traces.push((records.len(), t));
            }
        }
        records.push(o.record);
    }
    Ok(SweepOutput {
        summary: summarize(&records),
        records,
        traces,
    })
}

/// `jtrb` on trials `0..trials` of `cfg`, with traces.
pub fn run_convergence(
    cfg: &ScenarioConfig,
    trials: usize,
    opts: RunOptions,
) -> Result<Vec<TrialOutcome>, ExperimentError> {
    cfg.validate()?;
    let outcomes: Vec<Result<TrialOutcome, ExperimentError>> = in_pool(opts.jobs, || {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, t, Method::Jtrb))
            .collect()
    })?;
    outcomes.into_iter().collect()
}

pub fn write_records_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRow {
    trial: u64,
    iteration: usize,
    gamma: f64,
    gamma_phase: Option<f64>,
    gamma_weight: Option<f64>,
}

/// Long-format `γ` per outer iteration; iteration 0 is the bootstrap.
pub fn write_convergence_csv<W: Write>(writer: W, outcomes: &[TrialOutcome]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    for o in outcomes {
        let Some(t) = &o.trace else { continue };
        w.serialize(ConvergenceRow {
            trial: o.record.trial,
            iteration: 0,
            gamma: t.bootstrap_gamma,
            gamma_phase: None,
            gamma_weight: None,
        })?;
        for r in &t.iterations {
            w.serialize(ConvergenceRow {
                trial: o.record.trial,
                iteration: r.iteration,
                gamma: r.gamma_weight,
                gamma_phase: Some(r.gamma_phase),
                gamma_weight: Some(r.gamma_weight),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    record: &'a TrialRecord,
    trace: &'a OptimizationTrace,
    beta: Option<Vec<Complex64>>,
    phi: Option<Vec<Complex64>>,
}

/// One JSON object per line: the record, its trace and the final pair.
pub fn write_traces_jsonl<W: Write>(
    mut writer: W,
    items: impl IntoIterator<Item = (TrialRecord, OptimizationTrace)>,
) -> Result<(), ExperimentError> {
    for (record, trace) in items {
        let line = TraceLine {
            beta: trace.pair.as_ref().map(|p| p.beta.iter().copied().collect()),
            phi: trace.pair.as_ref().map(|p| p.phi.iter().copied().collect()),
            record: &record,
            trace: &trace,
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Creates `dir` and writes `trials.csv`, `summary.csv` and, when traces
/// were kept, `traces.jsonl`.
pub fn write_sweep_outputs(dir: &Path, out: &SweepOutput) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    write_records_csv(std::fs::File::create(dir.join("trials.csv"))?, &out.records)?;
    write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?, &out.summary)?;
    if !out.traces.is_empty() {
        let file = std::io::BufWriter::new(std::fs::File::create(dir.join("traces.jsonl"))?);
        write_traces_jsonl(
            file,
            out.traces.iter().map(|(i, t)| (out.records[*i].clone(), t.clone())),
        )?;
    }
    Ok(())
}
