//! Scenario configuration and its flat `key = value` file format.
//!
//! Keys match the field names of [`ScenarioConfig`] (`K` and `N` are
//! upper case). Power-like keys may instead be given in dBm by appending
//! `_dbm`, e.g. `p_t_dbm = 30`. Blank lines and `#` comments are ignored;
//! an unknown key is an error.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::ConfigError;

/// A point in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// Rule for the observation gains `α_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AlphaSpec {
    /// `α_k = 1` for every sensor.
    Ones,
    /// One complex gain per sensor.
    Explicit(Vec<Complex64>),
}

/// Starting point of the reflective beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialPhase {
    /// `φ⁰ = 1` (identity reflection).
    Ones,
    /// Independent uniform phases from the algorithm stream.
    Random,
}

/// How each bisection obtains its bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bracketing {
    /// Halve `[γ_lo, γ_hi]` with one feasibility probe per step.
    Plain,
    /// Solve the fractional subproblem once to locate the optimum, then
    /// confirm an `ε`-wide bracket around it with feasibility probes.
    Fractional,
}

/// Every physical and algorithmic parameter of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    /// Number of sensors.
    pub k: usize,
    /// Number of IRS elements; zero disables the IRS.
    pub n: usize,
    /// Side of the square sensor region, meters.
    pub region: f64,
    pub irs_pos: Position,
    pub fc_pos: Position,
    pub ed_pos: Position,
    /// Path loss at the reference distance, dB.
    pub mu_db: f64,
    /// Reference distance, meters.
    pub d0: f64,
    /// Exponent of the sensor–IRS, IRS–FC and IRS–ED links.
    pub nu_irs_links: f64,
    /// Exponent of the direct sensor–FC and sensor–ED links.
    pub nu_direct_links: f64,
    /// Observation noise power, watts.
    pub sigma2_o: f64,
    /// FC receiver noise power, watts.
    pub sigma2_f: f64,
    /// ED receiver noise power, watts.
    pub sigma2_e: f64,
    /// Network transmit power budget, watts.
    pub p_t: f64,
    /// Ceiling on the eavesdropper SNR (linear). `inf` removes the
    /// constraint.
    pub eta: f64,
    pub alpha_spec: AlphaSpec,
    /// Bisection tolerance on `γ`.
    pub epsilon: f64,
    /// Outer iteration cap.
    pub n_iter: usize,
    pub seed: u64,
    /// Relative `γ` improvement below which the outer loop stops.
    pub delta: f64,
    /// Gaussian randomization draws per extraction.
    pub randomizations: usize,
    pub initial_phase: InitialPhase,
    /// Start each bisection at the previous `γ` instead of `γ_min = 0`.
    pub warm_start: bool,
    pub bracketing: Bracketing,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            k: 5,
            n: 20,
            region: 40.0,
            irs_pos: Position::new(60.0, 20.0),
            fc_pos: Position::new(65.0, 25.0),
            ed_pos: Position::new(70.0, 15.0),
            mu_db: -30.0,
            d0: 1.0,
            nu_irs_links: 2.0,
            nu_direct_links: 3.0,
            sigma2_o: dbm_to_watts(-70.0),
            sigma2_f: dbm_to_watts(-70.0),
            sigma2_e: dbm_to_watts(-70.0),
            p_t: dbm_to_watts(30.0),
            eta: 1.0,
            alpha_spec: AlphaSpec::Ones,
            epsilon: 0.01,
            n_iter: 10,
            seed: 1,
            delta: 1e-3,
            randomizations: 1000,
            initial_phase: InitialPhase::Ones,
            warm_start: true,
            bracketing: Bracketing::Fractional,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.k == 0 {
            return invalid("K must be at least 1".into());
        }
        for (name, v) in [
            ("sigma2_o", self.sigma2_o),
            ("sigma2_f", self.sigma2_f),
            ("sigma2_e", self.sigma2_e),
            ("p_t", self.p_t),
            ("epsilon", self.epsilon),
            ("d0", self.d0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.eta > 0.0) {
            return invalid(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.region.is_finite() && self.region >= 0.0) {
            return invalid(format!("region must be non-negative, got {}", self.region));
        }
        if !(self.delta >= 0.0) {
            return invalid(format!("delta must be non-negative, got {}", self.delta));
        }
        if self.randomizations == 0 {
            return invalid("randomizations must be at least 1".into());
        }
        if let AlphaSpec::Explicit(values) = &self.alpha_spec {
            if values.len() != self.k {
                return invalid(format!(
                    "alpha_spec lists {} gains but K = {}",
                    values.len(),
                    self.k
                ));
            }
            if values.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
                return invalid("alpha_spec entries must be finite".into());
            }
        }
        Ok(())
    }

    /// Observation gains for the configured sensor count.
    pub fn alpha(&self) -> Vec<Complex64> {
        match &self.alpha_spec {
            AlphaSpec::Ones => vec![Complex64::new(1.0, 0.0); self.k],
            AlphaSpec::Explicit(v) => v.clone(),
        }
    }

    /// `true` when the eavesdropper constraint is active.
    pub fn ed_constrained(&self) -> bool {
        self.eta.is_finite()
    }

    pub fn p_t_dbm(&self) -> f64 {
        watts_to_dbm(self.p_t)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        text.parse()
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "K" => self.k = parse(key, value)?,
            "N" => self.n = parse(key, value)?,
            "region" => self.region = parse(key, value)?,
            "irs_pos" => self.irs_pos = parse_position(key, value)?,
            "fc_pos" => self.fc_pos = parse_position(key, value)?,
            "ed_pos" => self.ed_pos = parse_position(key, value)?,
            "mu_db" => self.mu_db = parse(key, value)?,
            "d0" => self.d0 = parse(key, value)?,
            "nu_irs_links" => self.nu_irs_links = parse(key, value)?,
            "nu_direct_links" => self.nu_direct_links = parse(key, value)?,
            "sigma2_o" => self.sigma2_o = parse(key, value)?,
            "sigma2_f" => self.sigma2_f = parse(key, value)?,
            "sigma2_e" => self.sigma2_e = parse(key, value)?,
            "p_t" => self.p_t = parse(key, value)?,
            "sigma2_o_dbm" => self.sigma2_o = dbm_to_watts(parse(key, value)?),
            "sigma2_f_dbm" => self.sigma2_f = dbm_to_watts(parse(key, value)?),
            "sigma2_e_dbm" => self.sigma2_e = dbm_to_watts(parse(key, value)?),
            "p_t_dbm" => self.p_t = dbm_to_watts(parse(key, value)?),
            "eta" => self.eta = parse(key, value)?,
            "alpha_spec" => self.alpha_spec = parse_alpha(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "n_iter" => self.n_iter = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "randomizations" => self.randomizations = parse(key, value)?,
            "initial_phase" => {
                self.initial_phase = match value {
                    "ones" => InitialPhase::Ones,
                    "random" => InitialPhase::Random,
                    _ => return Err(bad_value(key, value)),
                }
            }
            "warm_start" => self.warm_start = parse(key, value)?,
            "bracketing" => {
                self.bracketing = match value {
                    "plain" => Bracketing::Plain,
                    "fractional" => Bracketing::Fractional,
                    _ => return Err(bad_value(key, value)),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Renders the configuration in the file format accepted by
    /// [`FromStr`]. Powers are written in watts so the round trip is exact.
    pub fn to_config_string(&self) -> String {
        let alpha = match &self.alpha_spec {
            AlphaSpec::Ones => "ones".to_string(),
            AlphaSpec::Explicit(v) => v
                .iter()
                .map(|z| format!("{}{:+}j", z.re, z.im))
                .collect::<Vec<_>>()
                .join(","),
        };
        let initial = match self.initial_phase {
            InitialPhase::Ones => "ones",
            InitialPhase::Random => "random",
        };
        let bracketing = match self.bracketing {
            Bracketing::Plain => "plain",
            Bracketing::Fractional => "fractional",
        };
        format!(
            "K = {}\nN = {}\nregion = {}\nirs_pos = {}\nfc_pos = {}\ned_pos = {}\n\
             mu_db = {}\nd0 = {}\nnu_irs_links = {}\nnu_direct_links = {}\n\
             sigma2_o = {:e}\nsigma2_f = {:e}\nsigma2_e = {:e}\np_t = {:e}\neta = {}\n\
             alpha_spec = {}\nepsilon = {}\nn_iter = {}\nseed = {}\ndelta = {}\n\
             randomizations = {}\ninitial_phase = {}\nwarm_start = {}\nbracketing = {}\n",
            self.k,
            self.n,
            self.region,
            self.irs_pos,
            self.fc_pos,
            self.ed_pos,
            self.mu_db,
            self.d0,
            self.nu_irs_links,
            self.nu_direct_links,
            self.sigma2_o,
            self.sigma2_f,
            self.sigma2_e,
            self.p_t,
            self.eta,
            alpha,
            self.epsilon,
            self.n_iter,
            self.seed,
            self.delta,
            self.randomizations,
            initial,
            self.warm_start,
            bracketing,
        )
    }
}

impl FromStr for ScenarioConfig {
    type Err = ConfigError;

    /// Parses a config file body on top of [`ScenarioConfig::default`] and
    /// validates the result.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut cfg = ScenarioConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: lineno + 1,
                text: raw.to_string(),
            })?;
            cfg.set(key.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn bad_value(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| bad_value(key, value))
}

fn parse_position(key: &str, value: &str) -> Result<Position, ConfigError> {
    let parts: Vec<&str> = value
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(str::trim)
        .collect();
    match parts.as_slice() {
        [x, y] => Ok(Position::new(parse(key, x)?, parse(key, y)?)),
        _ => Err(bad_value(key, value)),
    }
}

fn parse_alpha(key: &str, value: &str) -> Result<AlphaSpec, ConfigError> {
    if value == "ones" {
        return Ok(AlphaSpec::Ones);
    }
    value
        .split(',')
        .map(|s| parse_complex(s.trim()).ok_or_else(|| bad_value(key, value)))
        .collect::<Result<Vec<_>, _>>()
        .map(AlphaSpec::Explicit)
}

/// Accepts `a`, `bj`, `a+bj` and `a-bj` (also with `i`).
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix(['j', 'i']) else {
        return s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not the leading one and not part of
    // an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |t: &str| -> Option<f64> {
        match t {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => t.parse().ok(),
        }
    };
    match split {
        Some(i) => Some(Complex64::new(body[..i].parse().ok()?, imag(&body[i..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.irs_pos, Position::new(60.0, 20.0));
        assert_eq!(cfg.fc_pos, Position::new(65.0, 25.0));
        assert_eq!(cfg.ed_pos, Position::new(70.0, 15.0));
        assert_eq!(cfg.region, 40.0);
        assert_eq!(cfg.epsilon, 0.01);
        assert!((cfg.sigma2_f - 1e-10).abs() < 1e-22);
        assert!((cfg.p_t - 1.0).abs() < 1e-12);
        cfg.validate().unwrap();
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(-70.0) - 1e-10).abs() < 1e-22);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
    }

    #[test]
    fn parses_file_body() {
        let text = "# sweep base\nK = 3\nN=8\np_t_dbm = 20 # budget\nsigma2_f_dbm=-80\n\
                    eta = inf\nirs_pos = (1, 2)\nalpha_spec = 1+0.5j, -2j, 0.3\n";
        let cfg: ScenarioConfig = text.parse().unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.n, 8);
        assert!((cfg.p_t - 0.1).abs() < 1e-12);
        assert!((cfg.sigma2_f - 1e-11).abs() < 1e-23);
        assert!(cfg.eta.is_infinite());
        assert_eq!(cfg.irs_pos, Position::new(1.0, 2.0));
        assert_eq!(
            cfg.alpha(),
            vec![
                Complex64::new(1.0, 0.5),
                Complex64::new(0.0, -2.0),
                Complex64::new(0.3, 0.0)
            ]
        );
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = "K = 3\ngain = 2\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "gain"));
    }

    #[test]
    fn alpha_length_checked() {
        let err = "K = 3\nalpha_spec = 1, 2\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn invalid_values_rejected() {
        for body in ["K = 0", "p_t = -1", "eta = 0", "epsilon = 0", "sigma2_o = 0", "K = x"] {
            assert!(body.parse::<ScenarioConfig>().is_err(), "{body}");
        }
    }

    #[test]
    fn config_string_round_trips() {
        let mut cfg = ScenarioConfig {
            k: 2,
            alpha_spec: AlphaSpec::Explicit(vec![Complex64::new(0.5, -1.5), Complex64::new(1.0, 0.0)]),
            initial_phase: InitialPhase::Random,
            bracketing: Bracketing::Plain,
            ..ScenarioConfig::default()
        };
        cfg.eta = 2.5;
        let back: ScenarioConfig = cfg.to_config_string().parse().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5"), Some(Complex64::new(1.5, 0.0)));
        assert_eq!(parse_complex("-j"), Some(Complex64::new(0.0, -1.0)));
        assert_eq!(parse_complex("2e-3-4e+1j"), Some(Complex64::new(2e-3, -40.0)));
        assert_eq!(parse_complex("abc"), None);
    }
}
