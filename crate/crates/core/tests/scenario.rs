use jtrb_core::rng::{stream, Lane};
use jtrb_core::scenario::{dbm_to_watts, draw_channels, path_loss, place_sensors, ScenarioConfig};

/// One-sample Kolmogorov–Smirnov statistic against `U(0, 1)`.
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

#[test]
fn sensors_are_uniform_over_the_region() {
    let cfg = ScenarioConfig { k: 10, ..ScenarioConfig::default() };
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for trial in 0..300 {
        let layout = place_sensors(&cfg, &mut stream(cfg.seed, Lane::Channels, trial));
        for p in layout.sensor_positions {
            xs.push(p.x / cfg.region);
            ys.push(p.y / cfg.region);
        }
    }
    // 1% critical value of the KS statistic for n = 3000.
    let crit = 1.63 / (xs.len() as f64).sqrt();
    assert!(ks_uniform(xs) < crit);
    assert!(ks_uniform(ys) < crit);
}

#[test]
fn fading_is_circular_with_path_loss_power() {
    let cfg = ScenarioConfig { k: 4, n: 8, ..ScenarioConfig::default() };
    let trials = 4000;
    let (mut ratio_f, mut ratio_if, mut pseudo) = (0.0, 0.0, num_complex::Complex64::new(0.0, 0.0));
    let g_if = path_loss(cfg.irs_pos.distance(&cfg.fc_pos), cfg.mu_db, cfg.d0, cfg.nu_irs_links).unwrap();
    for trial in 0..trials {
        let mut rng = stream(cfg.seed, Lane::Channels, trial);
        let layout = place_sensors(&cfg, &mut rng);
        let ch = draw_channels(&layout, &cfg, &mut rng).unwrap();
        let pos = layout.sensor_positions[0];
        let g = path_loss(pos.distance(&cfg.fc_pos), cfg.mu_db, cfg.d0, cfg.nu_direct_links).unwrap();
        ratio_f += ch.h_f[0].norm_sqr() / g;
        ratio_if += ch.h_if[0].norm_sqr() / g_if;
        pseudo += ch.h_f[0] * ch.h_f[0] / g;
    }
    let n = trials as f64;
    // |g|² is exponential with unit mean; 4000 draws give a 1.6% std.
    assert!((ratio_f / n - 1.0).abs() < 0.06, "{}", ratio_f / n);
    assert!((ratio_if / n - 1.0).abs() < 0.06, "{}", ratio_if / n);
    assert!((pseudo / n).norm() < 0.06);
}

#[test]
fn path_loss_values() {
    assert!((path_loss(10.0, -30.0, 1.0, 2.0).unwrap() - 1e-5).abs() < 1e-18);
    assert!((path_loss(1.0, -30.0, 1.0, 3.0).unwrap() - 1e-3).abs() < 1e-15);
    assert!(path_loss(0.0, -30.0, 1.0, 2.0).is_err());
    assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
    assert!((dbm_to_watts(-70.0) - 1e-10).abs() < 1e-22);
}

#[test]
fn direct_links_do_not_depend_on_irs_size() {
    let small = ScenarioConfig { n: 2, ..ScenarioConfig::default() };
    let large = ScenarioConfig { n: 50, ..ScenarioConfig::default() };
    let draw = |cfg: &ScenarioConfig| {
        let mut rng = stream(cfg.seed, Lane::Channels, 7);
        let layout = place_sensors(cfg, &mut rng);
        draw_channels(&layout, cfg, &mut rng).unwrap()
    };
    let (a, b) = (draw(&small), draw(&large));
    assert_eq!(a.h_f, b.h_f);
    assert_eq!(a.h_e, b.h_e);
    assert_eq!(draw(&small), draw(&small));
}

#[test]
fn config_text_round_trip() {
    let cfg = ScenarioConfig { k: 7, n: 13, eta: 2.5, seed: 99, ..ScenarioConfig::default() };
    let back: ScenarioConfig = cfg.to_config_string().parse().unwrap();
    assert_eq!(back, cfg);
    assert!("K = 0\n".parse::<ScenarioConfig>().is_err());
    assert!("mystery = 1\n".parse::<ScenarioConfig>().is_err());
}
