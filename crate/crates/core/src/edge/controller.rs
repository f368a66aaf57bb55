//! Edge controller: schedules the Start frame, the per-excitation downlink
//! frames and the excitations themselves.
//!
//! The Start frame is sent at `start`. Excitations begin once it has reached
//! the tag: excitation `k` starts at `start + (w + k) * interval`, where `w`
//! is the smallest whole number of intervals (at least one) covering the
//! forwarding delay. The excitor reports packet `k` to the controller one
//! interval earlier, at the previous excitation, so the downlink frame for `k`
//! is sent one interval before excitation `k` and reaches the tag
//! `forwarding_delay` later. When the delay exceeds the interval the frame
//! lands after its excitation has begun and the tag falls back to its own
//! counter.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use thiserror::Error;

use super::frame::{Command, ConnInfo};
use crate::hop::ExcitationSchedule;
use crate::link::ChannelIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EdgeError {
    #[error("excitation interval must be positive")]
    ZeroInterval,
    #[error("refresh period must be at least 1")]
    ZeroRefresh,
    #[error("the excitor schedule must be predictable")]
    UnpredictableSchedule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeConfig {
    pub start_ns: u64,
    pub excitation_interval_ns: u64,
    pub forwarding_delay_ns: u64,
    pub schedule: ExcitationSchedule,
    /// Send a counter frame only for every `refresh_every`-th excitation.
    pub refresh_every: u16,
    /// Announce the excitor schedule with a ConnInfo frame after Start and
    /// send packet counters; otherwise each frame names the channel.
    pub announce_schedule: bool,
    /// Stop after this many excitations.
    pub excitations: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeAction {
    Downlink {
        send_ns: u64,
        arrive_ns: u64,
        command: Command,
    },
    Excite {
        at_ns: u64,
        counter: u16,
        channel: ChannelIndex,
    },
}

impl EdgeAction {
    /// Time at which the action takes effect on the edge side.
    pub fn time_ns(&self) -> u64 {
        match self {
            EdgeAction::Downlink { send_ns, .. } => *send_ns,
            EdgeAction::Excite { at_ns, .. } => *at_ns,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdgeController {
    config: EdgeConfig,
    started: bool,
    next_excitation: u32,
    queued: VecDeque<Command>,
}

impl EdgeController {
    pub fn new(config: EdgeConfig) -> Result<Self, EdgeError> {
        if config.excitation_interval_ns == 0 {
            return Err(EdgeError::ZeroInterval);
        }
        if config.refresh_every == 0 {
            return Err(EdgeError::ZeroRefresh);
        }
        if !config.schedule.is_predictable() {
            return Err(EdgeError::UnpredictableSchedule);
        }
        Ok(EdgeController {
            config,
            started: false,
            next_excitation: 0,
            queued: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &EdgeConfig {
        &self.config
    }

    /// Intervals between Start and the first excitation.
    pub fn warmup_intervals(&self) -> u64 {
        self.config
            .forwarding_delay_ns
            .div_ceil(self.config.excitation_interval_ns)
            .max(1)
    }

    pub fn excitation_time_ns(&self, k: u32) -> u64 {
        self.config.start_ns
            + (self.warmup_intervals() + u64::from(k)) * self.config.excitation_interval_ns
    }

    fn announce_time_ns(&self, k: u32) -> u64 {
        self.excitation_time_ns(k) - self.config.excitation_interval_ns
    }

    /// How long the downlink frame for an excitation arrives before it.
    /// Negative when the frame is late.
    pub fn lead_time_ns(&self) -> i64 {
        self.config.excitation_interval_ns as i64 - self.config.forwarding_delay_ns as i64
    }

    /// Queues a command (e.g. a ConnInfo for a sniffed advertiser or a channel
    /// map update) to be sent on the next poll.
    pub fn enqueue(&mut self, command: Command) {
        self.queued.push_back(command);
    }

    /// Next time `poll` has something to do, or `None` when finished.
    pub fn next_wakeup_ns(&self) -> Option<u64> {
        if !self.started {
            return Some(self.config.start_ns);
        }
        match self.config.excitations {
            Some(n) if self.next_excitation >= n => None,
            _ => Some(self.announce_time_ns(self.next_excitation)),
        }
    }

    fn downlink(&self, send_ns: u64, command: Command) -> EdgeAction {
        EdgeAction::Downlink {
            send_ns,
            arrive_ns: send_ns + self.config.forwarding_delay_ns,
            command,
        }
    }

    /// Emits every action due at or before `now_ns`, in order.
    pub fn poll(&mut self, now_ns: u64) -> Vec<EdgeAction> {
        let mut actions = Vec::new();
        if !self.started {
            if now_ns < self.config.start_ns {
                return actions;
            }
            self.started = true;
            let t = self.config.start_ns;
            actions.push(self.downlink(t, Command::Start));
            if self.config.announce_schedule {
                let info = ConnInfo::Excitation(self.config.schedule.clone());
                actions.push(self.downlink(t, Command::ConnInfo(info)));
            }
        }
        while let Some(cmd) = self.queued.pop_front() {
            actions.push(self.downlink(now_ns, cmd));
        }
        loop {
            let k = self.next_excitation;
            if matches!(self.config.excitations, Some(n) if k >= n) {
                break;
            }
            let announce = self.announce_time_ns(k);
            if announce > now_ns {
                break;
            }
            let counter = k as u16;
            let channel = self
                .config
                .schedule
                .channel_at(counter)
                .expect("schedule checked predictable");
            if counter.is_multiple_of(self.config.refresh_every) {
                let cmd = if self.config.announce_schedule {
                    Command::PacketCounter(counter)
                } else {
                    Command::ChannelInfo(channel)
                };
                actions.push(self.downlink(announce, cmd));
            }
            actions.push(EdgeAction::Excite {
                at_ns: self.excitation_time_ns(k),
                counter,
                channel,
            });
            self.next_excitation += 1;
        }
        actions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hop::HopState;
    use crate::link::ChannelMap;

    fn config(interval_ns: u64, delay_ns: u64) -> EdgeConfig {
        EdgeConfig {
            start_ns: 0,
            excitation_interval_ns: interval_ns,
            forwarding_delay_ns: delay_ns,
            schedule: ExcitationSchedule::Hopping(HopState::csa2(
                0x1234_5678,
                0,
                ChannelMap::all(),
            )),
            refresh_every: 1,
            announce_schedule: true,
            excitations: Some(5),
        }
    }

    fn frame_leads(actions: &[EdgeAction]) -> Vec<i64> {
        let mut leads = Vec::new();
        let mut last_arrival = None;
        for a in actions {
            match a {
                EdgeAction::Downlink {
                    arrive_ns,
                    command: Command::PacketCounter(_),
                    ..
                } => last_arrival = Some(*arrive_ns),
                EdgeAction::Excite { at_ns, .. } => {
                    leads.push(*at_ns as i64 - last_arrival.take().unwrap() as i64)
                }
                _ => {}
            }
        }
        leads
    }

    #[test]
    fn start_frame_comes_first() {
        let mut edge = EdgeController::new(config(50_000_000, 5_800_000)).unwrap();
        let actions = edge.poll(u64::MAX / 2);
        assert!(matches!(
            actions[0],
            EdgeAction::Downlink {
                command: Command::Start,
                ..
            }
        ));
    }

    #[test]
    fn frames_lead_by_interval_minus_delay() {
        let mut edge = EdgeController::new(config(50_000_000, 5_800_000)).unwrap();
        let actions = edge.poll(u64::MAX / 2);
        let leads = frame_leads(&actions);
        assert_eq!(leads.len(), 5);
        assert!(leads.iter().all(|&l| l == 44_200_000));
        assert_eq!(edge.lead_time_ns(), 44_200_000);
    }

    #[test]
    fn slow_edge_frames_arrive_late() {
        let fast = EdgeController::new(config(7_500_000, 5_800_000)).unwrap();
        assert!(fast.lead_time_ns() > 0);
        let mut slow = EdgeController::new(config(7_500_000, 9_123_000)).unwrap();
        assert!(slow.lead_time_ns() < 0);
        let leads = frame_leads(&slow.poll(u64::MAX / 2));
        assert!(leads.iter().all(|&l| l < 0));
    }

    #[test]
    fn first_excitation_waits_for_start() {
        let edge = EdgeController::new(config(7_500_000, 10_000_000)).unwrap();
        assert_eq!(edge.warmup_intervals(), 2);
        assert_eq!(edge.excitation_time_ns(0), 15_000_000);
        let edge = EdgeController::new(config(50_000_000, 5_800_000)).unwrap();
        assert_eq!(edge.excitation_time_ns(0), 50_000_000);
    }

    #[test]
    fn poll_is_incremental() {
        let mut edge = EdgeController::new(config(10, 3)).unwrap();
        let first = edge.poll(0);
        // Start, the schedule, and the frame and excitation announced at t = 0.
        assert_eq!(first.len(), 4);
        assert_eq!(edge.next_wakeup_ns(), Some(10));
        assert!(edge.poll(9).is_empty());
        assert_eq!(edge.poll(10).len(), 2);
    }

    #[test]
    fn refresh_period_thins_frames() {
        let mut c = config(10, 3);
        c.refresh_every = 3;
        c.excitations = Some(9);
        let mut edge = EdgeController::new(c).unwrap();
        let frames = edge
            .poll(1000)
            .into_iter()
            .filter(|a| {
                matches!(
                    a,
                    EdgeAction::Downlink {
                        command: Command::PacketCounter(_),
                        ..
                    }
                )
            })
            .count();
        assert_eq!(frames, 3);
    }

    #[test]
    fn unannounced_schedule_sends_channels() {
        let mut c = config(10, 3);
        c.announce_schedule = false;
        let mut edge = EdgeController::new(c).unwrap();
        let actions = edge.poll(1000);
        for pair in actions[1..].chunks(2) {
            match pair {
                [EdgeAction::Downlink {
                    command: Command::ChannelInfo(a),
                    ..
                }, EdgeAction::Excite { channel: b, .. }] => {
                    assert_eq!(a, b)
                }
                other => panic!("unexpected actions {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = config(0, 1);
        assert_eq!(
            EdgeController::new(c.clone()).unwrap_err(),
            EdgeError::ZeroInterval
        );
        c.excitation_interval_ns = 5;
        c.schedule = ExcitationSchedule::Unknown;
        assert_eq!(
            EdgeController::new(c).unwrap_err(),
            EdgeError::UnpredictableSchedule
        );
    }
}
