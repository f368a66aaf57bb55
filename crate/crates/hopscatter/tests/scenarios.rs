use std::collections::BTreeMap;
use std::path::Path;

use hopscatter::config::{OptimizationConfig, ScenarioConfig, ThroughputConfig};
use hopscatter::fixtures;
use hopscatter::scenario::{self, connection, optimization, throughput, Outcome};

fn ch(i: u8) -> hopscatter_core::link::ChannelIndex {
    hopscatter_core::link::ChannelIndex::new(i).unwrap()
}

fn bundled(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_json(fixtures::get(name).unwrap(), Path::new(name)).unwrap()
}

#[test]
fn every_bundled_fixture_meets_its_expectations() {
    for (name, _) in fixtures::BUNDLED {
        if name.starts_with("mapping_impaired") {
            continue; // covered by the acceptance gate
        }
        let cfg = bundled(name);
        let outcome = scenario::run(&cfg).unwrap();
        let checks = hopscatter::checks::evaluate(&outcome, cfg.expect.as_ref().unwrap());
        assert!(!checks.is_empty(), "{name} checks nothing");
        for c in checks {
            assert!(c.passed, "{name}: {c}");
        }
    }
}

fn optimization_cfg(profile: &[(u8, f64)]) -> OptimizationConfig {
    OptimizationConfig {
        per_profile: profile.iter().copied().collect(),
        interval_ms: 50.0,
        payload_bytes: 37,
        packets_per_channel: 500,
        hop_increment: 7,
        excitation_channel: ch(37),
        quantile: 0.2,
    }
}

#[test]
fn guard_keeps_two_channels_and_gain_is_the_delivered_ratio() {
    let r = optimization::run(&optimization_cfg(&[(4, 0.0), (9, 1.0)]), 1).unwrap();
    assert_eq!(r.summary.kept, vec![4, 9]);
    assert!(r.summary.excluded.is_empty());
    // The map cannot shrink, so nothing changes.
    assert_eq!(r.summary.gain, Some(1.0));
    assert_eq!(r.summary.delivered_ratio, 1.0);
    let (clean, dead) = (&r.before.channels[0], &r.before.channels[1]);
    assert_eq!(clean.decoded, clean.targeted);
    assert_eq!(clean.targeted + dead.targeted, 1000);
    assert_eq!(dead.decoded, 0);
}

#[test]
fn dropping_dead_channels_matches_the_closed_form() {
    // Two clean channels, two at 50% and two dead.
    let profile = [(0, 0.0), (1, 0.0), (2, 0.5), (3, 0.5), (4, 1.0), (5, 1.0)];
    let r = optimization::run(&optimization_cfg(&profile), 3).unwrap();
    assert_eq!(r.summary.kept, vec![0, 1, 2, 3]);
    // Before: goodput fractions {1, 1, 0.5, 0.5, 0, 0}; after {1, 1, 0.5, 0.5}.
    let full = r.summary.max_kbps;
    let n = 500.0;
    let sigma = (0.25f64 / n).sqrt();
    for c in r.after.channels.iter().filter(|c| c.per == 0.5) {
        assert!((c.kbps / full - 0.5).abs() < 3.0 * sigma, "{c:?}");
    }
    // Delivered bits per unit time: (1 + 1 + 0.5 + 0.5) / 4 over (3 / 6).
    let want = (3.0 / 4.0) / (3.0 / 6.0);
    assert!(
        (r.summary.delivered_ratio - want).abs() < 0.05,
        "{}",
        r.summary.delivered_ratio
    );
}

#[test]
fn throughput_is_proportional_to_usable_channels() {
    let cfg = ThroughputConfig {
        channels_used: vec![4, 18, 36, 37],
        interval_us: 9645,
        payload_bytes: 37,
        excitations: 37 * 40,
        measured_ratios: Vec::new(),
    };
    let r = throughput::run(&cfg).unwrap();
    assert!((r.summary.full_kbps - 30.69).abs() < 0.005);
    assert_eq!(r.kbps(37), Some(r.summary.full_kbps));
    assert!((r.kbps(36).unwrap() / r.kbps(18).unwrap() - 2.0).abs() < 1e-12);
    assert!((r.kbps(37).unwrap() / r.kbps(4).unwrap() - 9.25).abs() < 1e-12);
}

#[test]
fn lost_downlink_frames_never_shift_the_next_event() {
    let mut cfg = match bundled("connection_lossy_downlink.json").scenario {
        hopscatter::config::Scenario::Connection(c) => c,
        _ => unreachable!(),
    };
    cfg.channel_model.downlink_loss = 0.6;
    for seed in 0..5 {
        let r = connection::run(&cfg, seed).unwrap();
        assert!(r.summary.downlink_lost > 0);
        assert!(r.summary.self_increments > 0);
        assert!(r.summary.follows_oracle, "seed {seed}");
        assert_eq!(r.summary.off_channel_emissions, 0);
        assert!(r.events.iter().all(|e| e.emitted == Some(e.expected)));
    }
}

#[test]
fn connection_trace_reads_like_a_sniffer_log() {
    let Outcome::Connection(r) = scenario::run(&bundled("connection.json")).unwrap() else {
        panic!("wrong kind");
    };
    let lines: Vec<&str> = r.trace.lines().collect();
    assert!(
        lines[0].contains("ch38") && lines[0].contains("ADV_IND") && lines[0].contains("ambient")
    );
    assert!(lines[1].contains("CONNECT_IND"));
    assert!(lines[2..]
        .iter()
        .all(|l| l.contains("LL_DATA_START") && l.contains("event")));
    assert_eq!(lines.len(), 2 + 20);
}

#[test]
fn configs_reject_bad_input() {
    let mut cfg = bundled("connection.json");
    if let hopscatter::config::Scenario::Connection(c) = &mut cfg.scenario {
        c.excitation = vec![ch(38)];
    }
    assert!(cfg.validate().is_err(), "advertising channel as excitation");

    let text = fixtures::get("optimization_uniform.json").unwrap();
    let mut json: serde_json::Value = serde_json::from_str(text).unwrap();
    json["scenario"]["per_profile"]["40"] = 0.1.into();
    assert!(ScenarioConfig::from_json(&json.to_string(), Path::new("x")).is_err());
    json["scenario"]["per_profile"] = serde_json::Value::Object(Default::default());
    json["scenario"]["per_profile"]["x"] = 0.1.into();
    assert!(ScenarioConfig::from_json(&json.to_string(), Path::new("x")).is_err());

    let mut json: serde_json::Value =
        serde_json::from_str(fixtures::get("hopping_csa1.json").unwrap()).unwrap();
    json["scenario"]["channel_model"] = serde_json::json!({"base_per": 0.1, "typo": true});
    assert!(ScenarioConfig::from_json(&json.to_string(), Path::new("x")).is_err());
    json["scenario"]["channel_model"] = serde_json::json!({"per_channel": {"17": 1.5}});
    assert!(ScenarioConfig::from_json(&json.to_string(), Path::new("x")).is_err());
    json["scenario"]["channel_model"] = serde_json::json!({"per_channel": {"17": 0.5}});
    let ok = ScenarioConfig::from_json(&json.to_string(), Path::new("x")).unwrap();
    let hopscatter::config::Scenario::HopAlgorithm(h) = ok.scenario else {
        panic!("wrong kind");
    };
    assert_eq!(h.channel_model.per_channel, BTreeMap::from([(17, 0.5)]));
}
