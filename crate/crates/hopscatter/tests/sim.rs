//! Simulator properties: determinism, conservation, binomial consistency
//! and independence of per-channel random streams.

use std::collections::BTreeMap;

use hopscatter::config::{MappingConfig, Pairs};
use hopscatter::engine::{run_link, DecodeOutcome, LinkOutcome, LinkSetup, Listener};
use hopscatter::model::ChannelModelConfig;
use hopscatter::scenario::mapping;
use hopscatter_core::edge::EdgeConfig;
use hopscatter_core::hop::{ExcitationSchedule, HopState};
use hopscatter_core::link::{ChannelIndex, ChannelMap};
use hopscatter_core::tag::{TagConfig, TargetPlan, UplinkTemplate};
use proptest::prelude::*;

fn ch(i: u8) -> ChannelIndex {
    ChannelIndex::new(i).unwrap()
}

const ADDRESS: [u8; 6] = [1, 2, 3, 4, 5, 6];

fn hopping_setup(model: ChannelModelConfig, seed: u64, excitations: u32) -> LinkSetup {
    let map = ChannelMap::from_channels(17..=31).unwrap();
    LinkSetup {
        edge: EdgeConfig {
            start_ns: 0,
            excitation_interval_ns: 10_000_000,
            forwarding_delay_ns: 5_800_000,
            schedule: ExcitationSchedule::Cycle(vec![ch(37), ch(39)]),
            refresh_every: 1,
            announce_schedule: true,
            excitations: Some(excitations),
        },
        tag: TagConfig {
            address: ADDRESS,
            uplink: UplinkTemplate::advertisement(ADDRESS, &[0x02, 0x01, 0x06]),
            target: TargetPlan::Hopping(HopState::csa1(9, map).unwrap()),
            excitation: ExcitationSchedule::Unknown,
            write_value: Vec::new(),
        },
        listeners: map.iter().map(Listener::Channel).collect(),
        ambient: None,
        model,
        seed,
    }
}

fn lossy() -> ChannelModelConfig {
    ChannelModelConfig {
        base_per: 0.2,
        neighbor_2mhz_fail: true,
        downlink_loss: 0.25,
        ..ChannelModelConfig::default()
    }
}

/// Decode outcomes seen by the receiver on `channel`, in order.
fn sequence(out: &LinkOutcome, channel: ChannelIndex) -> Vec<(Option<u16>, bool)> {
    out.decodes
        .iter()
        .filter(|d| d.channel == channel)
        .map(|d| (d.counter, d.is_decoded()))
        .collect()
}

#[test]
fn identical_seed_identical_trace() {
    let a = run_link(&hopping_setup(lossy(), 5, 400)).unwrap();
    let b = run_link(&hopping_setup(lossy(), 5, 400)).unwrap();
    assert_eq!(a.excitations, b.excitations);
    assert_eq!(a.decodes, b.decodes);
    let c = run_link(&hopping_setup(lossy(), 6, 400)).unwrap();
    assert_ne!(a.decodes, c.decodes);
}

#[test]
fn unrelated_channel_settings_leave_a_channel_alone() {
    let base = lossy();
    let mut changed = lossy();
    changed.per_channel.insert(20, 0.9);
    changed.per_channel.insert(25, 0.0);
    let a = run_link(&hopping_setup(base, 3, 600)).unwrap();
    let b = run_link(&hopping_setup(changed, 3, 600)).unwrap();
    for c in [17, 18, 22, 31] {
        assert_eq!(sequence(&a, ch(c)), sequence(&b, ch(c)), "channel {c}");
    }
    assert_ne!(sequence(&a, ch(20)), sequence(&b, ch(20)));
}

fn conservation(out: &LinkOutcome) -> Result<(), String> {
    let excitations = out.excitations.len();
    let emitted: Vec<ChannelIndex> = out.excitations.iter().filter_map(|x| x.emitted).collect();
    if emitted.len() > excitations || emitted.len() != out.tag.emissions as usize {
        return Err(format!(
            "{} emissions from {excitations} excitations",
            emitted.len()
        ));
    }
    let mut per_channel: BTreeMap<ChannelIndex, (usize, usize)> = BTreeMap::new();
    for c in &emitted {
        per_channel.entry(*c).or_default().0 += 1;
    }
    for d in out.decodes.iter().filter(|d| d.is_decoded()) {
        per_channel.entry(d.channel).or_default().1 += 1;
    }
    for (c, (e, d)) in per_channel {
        if d > e {
            return Err(format!(
                "channel {}: {d} decoded from {e} emitted",
                c.index()
            ));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoded_never_exceeds_emitted(
        seed in any::<u64>(),
        base in 0.0f64..1.0,
        downlink in 0.0f64..0.6,
    ) {
        let model = ChannelModelConfig { base_per: base, downlink_loss: downlink, ..ChannelModelConfig::default() };
        let out = run_link(&hopping_setup(model, seed, 150)).unwrap();
        prop_assert_eq!(conservation(&out), Ok(()));
        // Counter self-healing: downlink loss never moves the tag off target.
        prop_assert_eq!(out.tag.off_target, 0);
        prop_assert!(out.excitations.iter().all(|x| x.on_target()));
    }
}

#[test]
fn success_rates_stay_within_four_sigma_at_500_trials() {
    for (p, pairs, channel) in [(0.1, Pairs::NTo1, 17), (0.35, Pairs::OneToN, 37)] {
        let cfg = MappingConfig {
            pairs,
            channel: Some(ch(channel)),
            packets_per_pair: 500,
            interval_ms: 10.0,
            channel_model: ChannelModelConfig {
                base_per: p,
                ..ChannelModelConfig::default()
            },
        };
        let report = mapping::run(&cfg, 42).unwrap();
        let tol = 4.0 * (p * (1.0 - p) / 500.0f64).sqrt();
        let cells: Vec<f64> = report.matrix.entries().map(|(.., r)| r).collect();
        assert_eq!(cells.len(), 39);
        for (e, t, r) in report.matrix.entries() {
            assert!(
                (r - (1.0 - p)).abs() <= tol,
                "{}->{}: {r} vs {} +- {tol}",
                e.index(),
                t.index(),
                1.0 - p
            );
        }
    }
}

#[test]
fn mirror_copy_reaches_the_mirror_receiver_but_fails_its_crc() {
    let mut setup = hopping_setup(ChannelModelConfig::lossless(), 0, 20);
    setup.edge.schedule = ExcitationSchedule::Fixed(ch(17));
    setup.tag.target = TargetPlan::Fixed(ch(19));
    // 2440 MHz excitation, 2444 MHz target, mirror at 2436 MHz (channel 15).
    setup.listeners = vec![Listener::Channel(ch(19)), Listener::Channel(ch(15))];
    let out = run_link(&setup).unwrap();
    assert_eq!(out.decoded_on(ch(19)), 20);
    let mirror: Vec<&DecodeOutcome> = out
        .decodes
        .iter()
        .filter(|d| d.channel == ch(15))
        .map(|d| &d.outcome)
        .collect();
    assert_eq!(mirror.len(), 20);
    assert!(mirror
        .iter()
        .all(|o| matches!(o, DecodeOutcome::Failed(e) if e.is_crc_failure())));
}

#[test]
fn slow_edge_relies_on_self_healing() {
    let mut setup = hopping_setup(ChannelModelConfig::lossless(), 0, 100);
    setup.edge.excitation_interval_ns = 7_500_000;
    setup.edge.forwarding_delay_ns = 10_000_000;
    let out = run_link(&setup).unwrap();
    assert!(out.tag.stale_counters > 0 || out.tag.self_increments > 0);
    assert_eq!(out.tag.off_target, 0);
    assert_eq!(out.excitations.len(), 100);
    assert!(out.excitations.iter().all(|x| x.on_target()));
}
