//! Benchmark fixtures shared by the criterion targets.

use jtrb_core::rng::{stream, Lane};
use jtrb_core::scenario::{draw_channels, place_sensors, ChannelSet, ScenarioConfig};

/// Channels of trial 0 for `K` sensors and `N` elements.
pub fn instance(k: usize, n: usize) -> (ChannelSet, ScenarioConfig) {
    let cfg = ScenarioConfig {
        k,
        n,
        ..ScenarioConfig::default()
    };
    let mut rng = stream(cfg.seed, Lane::Channels, 0);
    let layout = place_sensors(&cfg, &mut rng);
    let ch = draw_channels(&layout, &cfg, &mut rng).expect("valid default scenario");
    (ch, cfg)
}
