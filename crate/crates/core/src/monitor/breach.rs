//! Temporal breach confirmation and compliance tracking.
//!
//! A pair is *confirmed* once one source has seen it below the distance
//! threshold continuously for the full dwell period. Each source runs its own
//! timer: evidence from different sensors is never stitched into one
//! continuous observation. Once confirmed, a pair stays active until its
//! group is resolved by observed compliance.

use std::collections::BTreeMap;

use crate::perception::{PairDistance, Source};

/// A confirmed proximity violation between two people.
#[derive(Debug, Clone, PartialEq)]
pub struct BreachEvent {
    pub id_a: u32,
    pub id_b: u32,
    /// When the confirming source first saw the pair below threshold.
    pub t_start: f64,
    /// `t_start` plus the dwell period.
    pub t_confirmed: f64,
    pub source: Source,
    pub resolved_at: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct SourceTimer {
    below_since: Option<f64>,
    /// Set once this span has produced a confirmation, so a pair that keeps
    /// lingering below threshold is not confirmed again every frame.
    confirmed_this_span: bool,
}

#[derive(Debug, Clone, Default)]
struct PairRecord {
    timers: BTreeMap<Source, SourceTimer>,
    /// Start of the current continuously-observed-compliant span, fused
    /// across sources. `None` while below threshold; held across frames where
    /// nobody observes the pair.
    clear_since: Option<f64>,
    /// True from confirmation until group resolution.
    active: bool,
    /// True once any source has observed this pair at least once.
    ever_observed: bool,
}

/// Tracks per-pair breach timers and compliance spans across sensor sources.
#[derive(Debug, Clone)]
pub struct BreachLedger {
    distance_threshold: f64,
    breach_duration: f64,
    hold_timer_on_dropout: bool,
    records: BTreeMap<(u32, u32), PairRecord>,
    history: Vec<BreachEvent>,
}

impl BreachLedger {
    pub fn new(distance_threshold: f64, breach_duration: f64, hold_timer_on_dropout: bool) -> Self {
        BreachLedger {
            distance_threshold,
            breach_duration,
            hold_timer_on_dropout,
            records: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    /// Feed one source's pair distances for the current frame. Returns newly
    /// confirmed breaches. Pairs this source saw below threshold continue (or
    /// start) its timer; pairs seen at or above threshold reset it; pairs not
    /// in `distances` reset it too (sensor dropout) unless the ledger was
    /// configured to hold timers across dropout.
    pub fn ingest_frame(
        &mut self,
        source: Source,
        distances: &[PairDistance],
        t: f64,
    ) -> Vec<BreachEvent> {
        let mut seen: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for pd in distances {
            debug_assert_eq!(pd.source, source);
            seen.insert((pd.id_a, pd.id_b), pd.distance);
        }

        let mut confirmed = Vec::new();

        // Existing records not observed this frame: dropout.
        if !self.hold_timer_on_dropout {
            for (key, rec) in self.records.iter_mut() {
                if !seen.contains_key(key) {
                    if let Some(timer) = rec.timers.get_mut(&source) {
                        timer.below_since = None;
                        timer.confirmed_this_span = false;
                    }
                }
            }
        }

        for (&(id_a, id_b), &dist) in &seen {
            let rec = self.records.entry((id_a, id_b)).or_default();
            rec.ever_observed = true;
            let timer = rec.timers.entry(source).or_default();
            if dist < self.distance_threshold {
                let since = *timer.below_since.get_or_insert(t);
                // The span must cover the full dwell period; a hair of float
                // slack keeps k*dt spans from needing k+1 frames.
                if !timer.confirmed_this_span && t - since >= self.breach_duration - 1e-9 {
                    timer.confirmed_this_span = true;
                    let ev = BreachEvent {
                        id_a,
                        id_b,
                        t_start: since,
                        t_confirmed: since + self.breach_duration,
                        source,
                        resolved_at: None,
                    };
                    rec.active = true;
                    self.history.push(ev.clone());
                    confirmed.push(ev);
                }
            } else {
                timer.below_since = None;
                timer.confirmed_this_span = false;
            }
        }

        confirmed
    }

    /// Update compliance spans from the fused per-pair minimum distance over
    /// all sources this frame. Pairs observed below threshold restart their
    /// span; pairs observed compliant begin (or continue) it; unobserved
    /// pairs keep whatever span they had.
    pub fn update_clear(&mut self, observed_min: &BTreeMap<(u32, u32), f64>, t: f64) {
        for (key, rec) in self.records.iter_mut() {
            if let Some(&dist) = observed_min.get(key) {
                if dist < self.distance_threshold {
                    rec.clear_since = None;
                } else {
                    rec.clear_since.get_or_insert(t);
                }
            }
        }
    }

    /// Pairs confirmed and not yet resolved.
    pub fn active_pairs(&self) -> Vec<(u32, u32)> {
        self.records
            .iter()
            .filter(|(_, r)| r.active)
            .map(|(&k, _)| k)
            .collect()
    }

    /// True when every recorded pair within `members` has been observed
    /// compliant for the full compliance window ending at `t`. Pairs with no
    /// record (never observed together) do not block resolution.
    pub fn group_resolvable(&self, members: &[u32], t: f64, compliance_duration: f64) -> bool {
        let mut any_active = false;
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                let key = if a < b { (a, b) } else { (b, a) };
                let Some(rec) = self.records.get(&key) else {
                    continue;
                };
                if rec.active {
                    any_active = true;
                }
                match rec.clear_since {
                    Some(since) if t - since >= compliance_duration - 1e-9 => {}
                    _ => return false,
                }
            }
        }
        any_active
    }

    /// Deactivate every pair within `members` and stamp their open breach
    /// events as resolved.
    pub fn resolve_group(&mut self, members: &[u32], t: f64) {
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                let key = if a < b { (a, b) } else { (b, a) };
                if let Some(rec) = self.records.get_mut(&key) {
                    if rec.active {
                        rec.active = false;
                        for ev in self.history.iter_mut().rev() {
                            let same = (ev.id_a, ev.id_b) == key;
                            if same && ev.resolved_at.is_none() {
                                ev.resolved_at = Some(t);
                            }
                        }
                    }
                    for timer in rec.timers.values_mut() {
                        timer.below_since = None;
                        timer.confirmed_this_span = false;
                    }
                }
            }
        }
    }

    /// All confirmations in order of occurrence, including resolved ones.
    pub fn history(&self) -> &[BreachEvent] {
        &self.history
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::Source;

    const THRESH: f64 = 1.8288;
    const DWELL: f64 = 5.0;

    fn pd(a: u32, b: u32, d: f64, t: f64, source: Source) -> PairDistance {
        PairDistance {
            id_a: a.min(b),
            id_b: a.max(b),
            distance: d,
            timestamp: t,
            source,
        }
    }

    fn run_frames(
        ledger: &mut BreachLedger,
        source: Source,
        dt: f64,
        dists: &[f64],
    ) -> Vec<BreachEvent> {
        let mut out = Vec::new();
        for (k, &d) in dists.iter().enumerate() {
            let t = k as f64 * dt;
            out.extend(ledger.ingest_frame(source, &[pd(1, 2, d, t, source)], t));
        }
        out
    }

    #[test]
    fn short_violation_not_confirmed() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        // 4.9 s below threshold at 10 Hz: frames t=0..=4.9 (50 frames), then clear.
        let mut dists = vec![1.0; 50];
        dists.push(3.0);
        let confirmed = run_frames(&mut ledger, Source::Rgbd, 0.1, &dists);
        assert!(confirmed.is_empty());
        assert!(ledger.active_pairs().is_empty());
    }

    #[test]
    fn sustained_violation_confirmed_with_exact_times() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        // Below from t=0; span reaches 5.0 s at the frame stamped t=5.0.
        let dists = vec![1.5; 52];
        let confirmed = run_frames(&mut ledger, Source::Rgbd, 0.1, &dists);
        assert_eq!(confirmed.len(), 1);
        let ev = &confirmed[0];
        assert_eq!((ev.id_a, ev.id_b), (1, 2));
        assert_eq!(ev.t_start, 0.0);
        assert_eq!(ev.t_confirmed, 5.0);
        assert_eq!(ev.source, Source::Rgbd);
        assert_eq!(ledger.active_pairs(), vec![(1, 2)]);
        // Staying below does not re-confirm.
        assert_eq!(ledger.history().len(), 1);
    }

    #[test]
    fn brief_crossing_never_confirms() {
        // Two walkers crossing: inside threshold for ~1.76 s, far less than
        // the dwell period.
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        let mut dists = Vec::new();
        for k in 0..60 {
            let t = k as f64 * 0.1;
            // Closing at 2 m/s relative, closest approach 0.5 m at t=3.
            let along = 2.0 * (t - 3.0);
            dists.push((along * along + 0.25).sqrt());
        }
        let confirmed = run_frames(&mut ledger, Source::Rgbd, 0.1, &dists);
        assert!(confirmed.is_empty());
    }

    #[test]
    fn reset_on_compliant_observation_restarts_span() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        // 3 s below, one compliant frame, then 4.9 s below: never confirmed.
        let mut dists = vec![1.0; 30];
        dists.push(2.5);
        dists.extend(vec![1.0; 49]);
        let confirmed = run_frames(&mut ledger, Source::Rgbd, 0.1, &dists);
        assert!(confirmed.is_empty());

        // Two more below frames push the second span to 5.0 s at t=8.1.
        let mut more = Vec::new();
        for k in 80..=81 {
            let t = k as f64 * 0.1;
            more.extend(ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t));
        }
        assert_eq!(more.len(), 1);
        assert_eq!(more[0].t_start, 3.1);
        assert_eq!(more[0].t_confirmed, 8.1);
    }

    #[test]
    fn dropout_resets_timer_by_default() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        for k in 0..30 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
        }
        // Pair vanishes for one frame (occlusion), then returns.
        ledger.ingest_frame(Source::Rgbd, &[], 3.0);
        let mut confirmed = Vec::new();
        for k in 31..=90 {
            let t = k as f64 * 0.1;
            confirmed.extend(ledger.ingest_frame(
                Source::Rgbd,
                &[pd(1, 2, 1.0, t, Source::Rgbd)],
                t,
            ));
        }
        assert_eq!(confirmed.len(), 1);
        // Timer restarted at t=3.1 after the dropout.
        assert_eq!(confirmed[0].t_start, 3.1);
        assert_eq!(confirmed[0].t_confirmed, 8.1);
    }

    #[test]
    fn dropout_hold_flag_bridges_gaps() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, true);
        for k in 0..30 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
        }
        ledger.ingest_frame(Source::Rgbd, &[], 3.0);
        let mut confirmed = Vec::new();
        for k in 31..=51 {
            let t = k as f64 * 0.1;
            confirmed.extend(ledger.ingest_frame(
                Source::Rgbd,
                &[pd(1, 2, 1.0, t, Source::Rgbd)],
                t,
            ));
        }
        // Span still counts from t=0.
        assert_eq!(confirmed.len(), 1);
        assert_eq!(confirmed[0].t_start, 0.0);
        assert_eq!(confirmed[0].t_confirmed, 5.0);
    }

    #[test]
    fn sources_keep_independent_timers() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        // Camera sees 3 s below, then hands off to the overhead view which
        // sees 3 s below. Neither span alone covers the dwell period.
        for k in 0..30 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
            ledger.ingest_frame(Source::Cctv, &[], t);
        }
        let mut confirmed = Vec::new();
        for k in 30..60 {
            let t = k as f64 * 0.1;
            confirmed.extend(ledger.ingest_frame(Source::Rgbd, &[], t));
            confirmed.extend(ledger.ingest_frame(
                Source::Cctv,
                &[pd(1, 2, 1.0, t, Source::Cctv)],
                t,
            ));
        }
        assert!(confirmed.is_empty(), "handoff must not stitch spans");

        // A single source covering the full window does confirm.
        for k in 60..=110 {
            let t = k as f64 * 0.1;
            confirmed.extend(ledger.ingest_frame(
                Source::Cctv,
                &[pd(1, 2, 1.0, t, Source::Cctv)],
                t,
            ));
        }
        assert_eq!(confirmed.len(), 1);
        assert_eq!(confirmed[0].source, Source::Cctv);
        assert_eq!(confirmed[0].t_start, 3.0);
    }

    #[test]
    fn compliance_and_resolution_flow() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        for k in 0..=50 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
        }
        assert_eq!(ledger.active_pairs(), vec![(1, 2)]);

        // Observed compliant from t=5.1.
        let mut obs = BTreeMap::new();
        obs.insert((1u32, 2u32), 2.5f64);
        for k in 51..=100 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 2.5, t, Source::Rgbd)], t);
            ledger.update_clear(&obs, t);
        }
        assert!(!ledger.group_resolvable(&[1, 2], 5.2, 3.0));
        assert!(ledger.group_resolvable(&[1, 2], 8.1, 3.0));

        ledger.resolve_group(&[1, 2], 8.1);
        assert!(ledger.active_pairs().is_empty());
        assert_eq!(ledger.history()[0].resolved_at, Some(8.1));
        // A resolved group with no active pairs is not resolvable again.
        assert!(!ledger.group_resolvable(&[1, 2], 12.0, 3.0));
    }

    #[test]
    fn unobserved_gap_does_not_reset_compliance() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        for k in 0..=50 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
        }
        let mut obs = BTreeMap::new();
        obs.insert((1u32, 2u32), 3.0f64);
        ledger.update_clear(&obs, 5.1);
        // Pair leaves view for a while; clear_since must hold.
        for k in 52..=81 {
            let t = k as f64 * 0.1;
            ledger.update_clear(&BTreeMap::new(), t);
        }
        ledger.update_clear(&obs, 8.2);
        assert!(ledger.group_resolvable(&[1, 2], 8.2, 3.0));
    }

    #[test]
    fn below_threshold_observation_restarts_compliance() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        for k in 0..=50 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
        }
        let mut clear = BTreeMap::new();
        clear.insert((1u32, 2u32), 3.0f64);
        let mut below = BTreeMap::new();
        below.insert((1u32, 2u32), 1.0f64);

        ledger.update_clear(&clear, 5.1);
        ledger.update_clear(&below, 6.0); // back together
        ledger.update_clear(&clear, 6.1);
        assert!(!ledger.group_resolvable(&[1, 2], 8.2, 3.0));
        assert!(ledger.group_resolvable(&[1, 2], 9.1, 3.0));
    }

    #[test]
    fn never_observed_pairs_do_not_block_resolution() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        // Only (1,2) ever recorded; member 3 joined the group via another
        // source's grouping but the (1,3)/(2,3) pairs were never measured.
        for k in 0..=50 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
        }
        let mut obs = BTreeMap::new();
        obs.insert((1u32, 2u32), 3.0f64);
        ledger.update_clear(&obs, 6.0);
        assert!(ledger.group_resolvable(&[1, 2, 3], 9.0, 3.0));
    }

    #[test]
    fn group_with_no_active_pairs_is_not_resolvable() {
        let ledger = BreachLedger::new(THRESH, DWELL, false);
        assert!(!ledger.group_resolvable(&[7, 8], 100.0, 3.0));
    }

    #[test]
    fn retrigger_after_resolution() {
        let mut ledger = BreachLedger::new(THRESH, DWELL, false);
        for k in 0..=50 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 1.0, t, Source::Rgbd)], t);
        }
        let mut obs = BTreeMap::new();
        obs.insert((1u32, 2u32), 3.0f64);
        for k in 51..=90 {
            let t = k as f64 * 0.1;
            ledger.ingest_frame(Source::Rgbd, &[pd(1, 2, 3.0, t, Source::Rgbd)], t);
            ledger.update_clear(&obs, t);
        }
        ledger.resolve_group(&[1, 2], 9.0);

        // Same pair reoffends; a fresh confirmation must appear.
        let mut confirmed = Vec::new();
        for k in 91..=141 {
            let t = k as f64 * 0.1;
            confirmed.extend(ledger.ingest_frame(
                Source::Rgbd,
                &[pd(1, 2, 0.8, t, Source::Rgbd)],
                t,
            ));
        }
        assert_eq!(confirmed.len(), 1);
        assert_eq!(confirmed[0].t_start, 9.1);
        assert_eq!(ledger.active_pairs(), vec![(1, 2)]);
        assert_eq!(ledger.history().len(), 2);
    }
}
