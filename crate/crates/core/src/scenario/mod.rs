//! Network geometry, path loss and Rayleigh channel realizations.

mod config;

pub use config::{
    dbm_to_watts, parse_complex, watts_to_dbm, AlphaSpec, Bracketing, InitialPhase, Position,
    ScenarioConfig,
};

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::ScenarioError;
use crate::linalg::{CMatrix, CVector};

/// Positions of every node in one deployment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeLayout {
    pub sensor_positions: Vec<Position>,
    pub irs_pos: Position,
    pub fc_pos: Position,
    pub ed_pos: Position,
}

/// One realization of every channel plus the observation gains.
///
/// Row vectors (`h_if`, `h_ie`, `h_f`, `h_e`) are stored as column
/// vectors; every formula treats them as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Sensor → IRS, `N×K`.
    pub h_i: CMatrix,
    /// IRS → FC, length `N`.
    pub h_if: CVector,
    /// IRS → ED, length `N`.
    pub h_ie: CVector,
    /// Sensor → FC direct links, length `K`.
    pub h_f: CVector,
    /// Sensor → ED direct links, length `K`.
    pub h_e: CVector,
    /// Observation gains `α`, length `K`.
    pub alpha: CVector,
}

impl ChannelSet {
    pub fn sensors(&self) -> usize {
        self.h_f.len()
    }

    pub fn elements(&self) -> usize {
        self.h_if.len()
    }

    /// Consistency of every dimension with `(K, N)` and finiteness.
    pub fn check(&self) -> Result<(), ScenarioError> {
        let (k, n) = (self.sensors(), self.elements());
        let dims_ok = self.h_i.shape() == (n, k)
            && self.h_ie.len() == n
            && self.h_e.len() == k
            && self.alpha.len() == k;
        if !dims_ok {
            return Err(ScenarioError::Dimension(format!(
                "inconsistent channel set: H_I {:?}, h_IF {}, h_IE {}, h_f {}, h_e {}, alpha {}",
                self.h_i.shape(),
                n,
                self.h_ie.len(),
                k,
                self.h_e.len(),
                self.alpha.len()
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.h_i.iter().all(finite)
            && self.h_if.iter().all(finite)
            && self.h_ie.iter().all(finite)
            && self.h_f.iter().all(finite)
            && self.h_e.iter().all(finite)
            && self.alpha.iter().all(finite);
        if !all_finite {
            return Err(ScenarioError::Dimension("non-finite channel entry".into()));
        }
        Ok(())
    }

    /// The same channels with the IRS removed (`N = 0`).
    pub fn without_irs(&self) -> ChannelSet {
        let k = self.sensors();
        ChannelSet {
            h_i: CMatrix::zeros(0, k),
            h_if: CVector::zeros(0),
            h_ie: CVector::zeros(0),
            h_f: self.h_f.clone(),
            h_e: self.h_e.clone(),
            alpha: self.alpha.clone(),
        }
    }
}

/// Drops `K` sensors uniformly in `[0, region]²` and copies the fixed
/// node positions from the config.
pub fn place_sensors<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> NodeLayout {
    let sensor_positions = (0..config.k)
        .map(|_| {
            let x = config.region * rng.random::<f64>();
            let y = config.region * rng.random::<f64>();
            Position::new(x, y)
        })
        .collect();
    NodeLayout {
        sensor_positions,
        irs_pos: config.irs_pos,
        fc_pos: config.fc_pos,
        ed_pos: config.ed_pos,
    }
}

/// Linear power gain `10^{μ/10} (d/d₀)^{−ν}`.
pub fn path_loss(d: f64, mu_db: f64, d0: f64, nu: f64) -> Result<f64, ScenarioError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(ScenarioError::Domain(format!("distance must be positive, got {d}")));
    }
    if !(d0 > 0.0) {
        return Err(ScenarioError::Domain(format!(
            "reference distance must be positive, got {d0}"
        )));
    }
    Ok(10f64.powf(mu_db / 10.0) * (d / d0).powf(-nu))
}

/// Unit-variance circularly symmetric complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws every channel as `√PL(d) · g`, `g ~ CN(0, 1)`.
///
/// Direct links are drawn before the IRS links, so the direct channels of
/// a stream do not depend on `N`.
pub fn draw_channels<R: Rng + ?Sized>(
    layout: &NodeLayout,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelSet, ScenarioError> {
    let k = layout.sensor_positions.len();
    let n = config.n;
    let gain = |a: &Position, b: &Position, nu: f64| -> Result<f64, ScenarioError> {
        Ok(path_loss(a.distance(b), config.mu_db, config.d0, nu)?.sqrt())
    };
    let direct = config.nu_direct_links;
    let reflected = config.nu_irs_links;

    let mut h_f = CVector::zeros(k);
    for (entry, pos) in h_f.iter_mut().zip(&layout.sensor_positions) {
        *entry = complex_gaussian(rng) * gain(pos, &layout.fc_pos, direct)?;
    }
    let mut h_e = CVector::zeros(k);
    for (entry, pos) in h_e.iter_mut().zip(&layout.sensor_positions) {
        *entry = complex_gaussian(rng) * gain(pos, &layout.ed_pos, direct)?;
    }

    let (h_if, h_ie, h_i) = if n == 0 {
        (CVector::zeros(0), CVector::zeros(0), CMatrix::zeros(0, k))
    } else {
        let g_if = gain(&layout.irs_pos, &layout.fc_pos, reflected)?;
        let g_ie = gain(&layout.irs_pos, &layout.ed_pos, reflected)?;
        let h_if = CVector::from_fn(n, |_, _| complex_gaussian(rng) * g_if);
        let h_ie = CVector::from_fn(n, |_, _| complex_gaussian(rng) * g_ie);
        let mut h_i = CMatrix::zeros(n, k);
        for (col, pos) in layout.sensor_positions.iter().enumerate() {
            let g = gain(pos, &layout.irs_pos, reflected)?;
            for row in 0..n {
                h_i[(row, col)] = complex_gaussian(rng) * g;
            }
        }
        (h_if, h_ie, h_i)
    };

    Ok(ChannelSet {
        h_i,
        h_if,
        h_ie,
        h_f,
        h_e,
        alpha: CVector::from_vec(config.alpha()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Lane};

    #[test]
    fn sensors_inside_region_and_deterministic() {
        let cfg = ScenarioConfig {
            k: 5,
            ..ScenarioConfig::default()
        };
        let a = place_sensors(&cfg, &mut stream(11, Lane::Channels, 0));
        let b = place_sensors(&cfg, &mut stream(11, Lane::Channels, 0));
        assert_eq!(a, b);
        assert_eq!(a.sensor_positions.len(), 5);
        for p in &a.sensor_positions {
            assert!((0.0..=40.0).contains(&p.x) && (0.0..=40.0).contains(&p.y));
        }
        assert_eq!(a.irs_pos, Position::new(60.0, 20.0));
        assert_eq!(a.fc_pos, Position::new(65.0, 25.0));
        assert_eq!(a.ed_pos, Position::new(70.0, 15.0));
    }

    #[test]
    fn degenerate_region_puts_sensor_at_origin() {
        let cfg = ScenarioConfig {
            k: 1,
            region: 0.0,
            ..ScenarioConfig::default()
        };
        let layout = place_sensors(&cfg, &mut stream(1, Lane::Channels, 0));
        assert_eq!(layout.sensor_positions, vec![Position::new(0.0, 0.0)]);
    }

    #[test]
    fn path_loss_values() {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        assert!(close(path_loss(1.0, -30.0, 1.0, 2.0).unwrap(), 1e-3));
        assert!(close(path_loss(10.0, -30.0, 1.0, 2.0).unwrap(), 1e-5));
        assert!(close(path_loss(10.0, -30.0, 1.0, 3.0).unwrap(), 1e-6));
        assert!(path_loss(0.0, -30.0, 1.0, 2.0).is_err());
        assert!(path_loss(-1.0, -30.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn path_loss_positive_and_decreasing() {
        let mut last = f64::INFINITY;
        for i in 1..200 {
            let g = path_loss(i as f64 * 0.5, -30.0, 1.0, 2.5).unwrap();
            assert!(g > 0.0 && g < last);
            last = g;
        }
    }

    #[test]
    fn no_irs_channels_are_empty() {
        let cfg = ScenarioConfig {
            n: 0,
            ..ScenarioConfig::default()
        };
        let mut rng = stream(3, Lane::Channels, 0);
        let layout = place_sensors(&cfg, &mut rng);
        let ch = draw_channels(&layout, &cfg, &mut rng).unwrap();
        assert_eq!(ch.h_i.shape(), (0, 5));
        assert_eq!(ch.h_if.len(), 0);
        assert_eq!(ch.h_ie.len(), 0);
        assert!(ch.h_f.iter().all(|z| z.norm() > 0.0));
        assert!(ch.h_e.iter().all(|z| z.norm() > 0.0));
        ch.check().unwrap();
    }

    #[test]
    fn channel_draws_are_deterministic() {
        let cfg = ScenarioConfig::default();
        let draw = || {
            let mut rng = stream(99, Lane::Channels, 17);
            let layout = place_sensors(&cfg, &mut rng);
            draw_channels(&layout, &cfg, &mut rng).unwrap()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn direct_links_do_not_depend_on_irs_size() {
        let draw = |n: usize| {
            let cfg = ScenarioConfig {
                n,
                ..ScenarioConfig::default()
            };
            let mut rng = stream(5, Lane::Channels, 2);
            let layout = place_sensors(&cfg, &mut rng);
            draw_channels(&layout, &cfg, &mut rng).unwrap()
        };
        let (a, b) = (draw(0), draw(40));
        assert_eq!(a.h_f, b.h_f);
        assert_eq!(a.h_e, b.h_e);
    }

    #[test]
    fn explicit_alpha_is_copied() {
        let alpha = vec![Complex64::new(0.5, 0.5), Complex64::new(2.0, 0.0)];
        let cfg = ScenarioConfig {
            k: 2,
            n: 3,
            alpha_spec: AlphaSpec::Explicit(alpha.clone()),
            ..ScenarioConfig::default()
        };
        let mut rng = stream(1, Lane::Channels, 0);
        let layout = place_sensors(&cfg, &mut rng);
        let ch = draw_channels(&layout, &cfg, &mut rng).unwrap();
        assert_eq!(ch.alpha.as_slice(), alpha.as_slice());
        assert_eq!(ch.h_i.shape(), (3, 2));
    }
}
