//! Threshold checks behind `run --assert`.

use std::fmt;

use crate::config::Expect;
use crate::scenario::Outcome;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark} {}: {}", self.name, self.detail)
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.0.push(Check {
            name,
            passed,
            detail,
        });
    }

    fn min(&mut self, name: &'static str, bound: Option<f64>, value: Option<f64>) {
        if let Some(b) = bound {
            match value {
                Some(v) => self.push(name, v >= b, format!("{v:.4} >= {b}")),
                None => self.push(name, false, "no value to compare".into()),
            }
        }
    }

    fn max(&mut self, name: &'static str, bound: Option<f64>, value: Option<f64>) {
        if let Some(b) = bound {
            match value {
                Some(v) => self.push(name, v <= b, format!("{v:.4} <= {b}")),
                None => self.push(name, false, "no value to compare".into()),
            }
        }
    }

    fn flag(&mut self, name: &'static str, want: Option<bool>, value: Option<bool>) {
        if let Some(w) = want {
            match value {
                Some(v) => self.push(name, v == w, format!("{v}, want {w}")),
                None => self.push(name, false, "does not apply to this scenario".into()),
            }
        }
    }
}

/// Evaluates every threshold set in `expect`. A threshold that does not
/// apply to the scenario kind fails.
pub fn evaluate(outcome: &Outcome, expect: &Expect) -> Vec<Check> {
    let mut c = Checks(Vec::new());
    let e = expect;

    match outcome {
        Outcome::Mapping(r) => {
            let s = &r.summary;
            let all_one = r.matrix.entries().all(|(.., v)| v == 1.0);
            c.flag("all_entries_one", e.all_entries_one, Some(all_one));
            c.min("min_median", e.min_median, s.median);
            let neighbors = r.neighbor_rates();
            c.flag(
                "neighbor_cells_zero",
                e.neighbor_cells_zero,
                Some(!neighbors.is_empty() && neighbors.iter().all(|&v| v == 0.0)),
            );
            c.max(
                "max_band_mean",
                e.max_band_mean,
                s.degraded_band.as_ref().and_then(|b| b.mean),
            );
        }
        Outcome::HopAlgorithm(r) => {
            c.flag(
                "observed_equals_expected",
                e.observed_equals_expected,
                Some(r.observed_equals_expected()),
            );
            c.min(
                "min_channel_success",
                e.min_channel_success,
                r.summary.min_channel_success,
            );
            c.min(
                "min_aggregate_success",
                e.min_aggregate_success,
                Some(r.summary.aggregate_success),
            );
        }
        Outcome::Optimization(r) => {
            c.min("min_gain", e.min_gain, r.summary.gain);
            if let Some(g) = e.gain {
                match r.summary.gain {
                    Some(v) => c.push("gain", (v - g).abs() < 1e-9, format!("{v:.4} == {g}")),
                    None => c.push("gain", false, "gain undefined".into()),
                }
            }
            c.flag(
                "excluded_above_median",
                e.excluded_above_median,
                Some(r.excluded_above_median()),
            );
        }
        Outcome::Latency(r) => {
            let s = &r.summary;
            if let Some(t) = e.total_us {
                let tol = e.total_tolerance.unwrap_or(0.05);
                c.push(
                    "total_us",
                    (s.total_us - t).abs() <= t * tol,
                    format!("{:.1} within {:.0}% of {t}", s.total_us, tol * 100.0),
                );
            }
            c.min("min_plm_ms", e.min_plm_ms, Some(s.plm_ms));
            c.max("max_plm_ms", e.max_plm_ms, Some(s.plm_ms));
            c.min("min_ratio", e.min_ratio, Some(s.ratio));
        }
        Outcome::Throughput(r) => {
            if let Some(k) = e.full_kbps {
                let v = r.summary.full_kbps;
                c.push("full_kbps", (v - k).abs() < 0.005, format!("{v:.3} == {k}"));
            }
        }
        Outcome::Connection(r) => {
            let s = &r.summary;
            c.flag("follows_oracle", e.follows_oracle, Some(s.follows_oracle));
            if let Some(want) = &e.channels {
                let want: Vec<u8> = {
                    let mut w: Vec<u8> = want.iter().map(|ch| ch.index()).collect();
                    w.sort_unstable();
                    w.dedup();
                    w
                };
                c.push(
                    "channels",
                    s.channels_seen == want,
                    format!("{:?}, want {want:?}", s.channels_seen),
                );
            }
            c.flag(
                "no_off_channel",
                e.no_off_channel,
                Some(s.off_channel_emissions == 0),
            );
        }
    }

    // Thresholds that belong to other scenario kinds.
    for (name, set) in foreign(outcome, e) {
        if set {
            c.push(name, false, "does not apply to this scenario".into());
        }
    }
    c.0
}

fn foreign(outcome: &Outcome, e: &Expect) -> Vec<(&'static str, bool)> {
    let mapping = [
        ("all_entries_one", e.all_entries_one.is_some()),
        ("min_median", e.min_median.is_some()),
        ("neighbor_cells_zero", e.neighbor_cells_zero.is_some()),
        ("max_band_mean", e.max_band_mean.is_some()),
    ];
    let hop = [
        (
            "observed_equals_expected",
            e.observed_equals_expected.is_some(),
        ),
        ("min_channel_success", e.min_channel_success.is_some()),
        ("min_aggregate_success", e.min_aggregate_success.is_some()),
    ];
    let opt = [
        ("min_gain", e.min_gain.is_some()),
        ("gain", e.gain.is_some()),
        ("excluded_above_median", e.excluded_above_median.is_some()),
    ];
    let lat = [
        ("total_us", e.total_us.is_some()),
        ("total_tolerance", e.total_tolerance.is_some()),
        ("min_plm_ms", e.min_plm_ms.is_some()),
        ("max_plm_ms", e.max_plm_ms.is_some()),
        ("min_ratio", e.min_ratio.is_some()),
    ];
    let thr = [("full_kbps", e.full_kbps.is_some())];
    let conn = [
        ("follows_oracle", e.follows_oracle.is_some()),
        ("channels", e.channels.is_some()),
        ("no_off_channel", e.no_off_channel.is_some()),
    ];
    let mut out = Vec::new();
    let own = |o: &Outcome, k: usize| {
        matches!(
            (o, k),
            (Outcome::Mapping(_), 0)
                | (Outcome::HopAlgorithm(_), 1)
                | (Outcome::Optimization(_), 2)
                | (Outcome::Latency(_), 3)
                | (Outcome::Throughput(_), 4)
                | (Outcome::Connection(_), 5)
        )
    };
    let groups: [&[(&'static str, bool)]; 6] = [&mapping, &hop, &opt, &lat, &thr, &conn];
    for (k, g) in groups.iter().enumerate() {
        if !own(outcome, k) {
            out.extend_from_slice(g);
        }
    }
    out
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
