//! Distancing supervisor: breach timers, group classification, target
//! arbitration between the robot camera and fixed overhead cameras, lock
//! selection, and goal computation for the planner.

pub mod breach;
pub mod groups;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{round_ms, Event};
use crate::geometry::{Frame2, Point2, Vec2};
use crate::perception::{pairwise_distances, LocalizedPedestrian, Source};
use crate::sensors::{BoundingBox, CctvCameraModel};

pub use breach::{BreachEvent, BreachLedger};
pub use groups::{classify_groups, Group};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Navigating,
    Attending,
    Lawnmower,
}

#[derive(Debug, Clone, Copy, Error, PartialEq)]
pub enum MonitorError {
    #[error("frame time went backwards: {now} after {last}")]
    TimeRegression { last: f64, now: f64 },
    #[error("pair with identical ids: {0}")]
    SelfPair(u32),
    #[error("no group member has a current detection box")]
    NoVisibleMember,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    /// Minimum compliant separation, meters (6 ft).
    pub distance_threshold: f64,
    /// Continuous sub-threshold span required to confirm a breach, seconds.
    pub breach_duration: f64,
    /// Continuous all-pairs-compliant span required to resolve a group.
    pub compliance_duration: f64,
    /// Lock switch dead band as a fraction of image width.
    pub lock_hysteresis: f64,
    /// Keep pair timers running across detection dropouts.
    pub hold_timer_on_dropout: bool,
    /// Robot-to-lock distance at which Navigating becomes Attending.
    pub standoff_distance: f64,
    /// Lock invisible to every camera for longer than this is lost.
    pub lock_lost_timeout: f64,
    /// Pursuit is suppressed before this time (static survey protocols).
    pub pursuit_start_s: f64,
    /// Report Lawnmower instead of Idle when no group is targeted (patrol
    /// scenarios).
    pub idle_is_lawnmower: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            distance_threshold: 1.8288,
            breach_duration: 5.0,
            compliance_duration: 3.0,
            lock_hysteresis: 0.10,
            hold_timer_on_dropout: false,
            standoff_distance: 2.0,
            lock_lost_timeout: 1.0,
            pursuit_start_s: 0.0,
            idle_is_lawnmower: false,
        }
    }
}

/// One robot-camera frame: detection boxes plus the subset that localized.
#[derive(Debug, Clone, Default)]
pub struct RgbdFrame {
    pub boxes: Vec<BoundingBox>,
    /// Robot-frame positions (boxes whose depth aggregate succeeded).
    pub localized: Vec<LocalizedPedestrian>,
    pub image_width_px: usize,
}

/// One overhead-camera frame, positions already lifted into the map frame.
#[derive(Debug, Clone, Default)]
pub struct CctvFrame {
    pub boxes: Vec<BoundingBox>,
    pub localized_map: Vec<LocalizedPedestrian>,
    pub image_width_px: usize,
}

/// Per-pedestrian position memory (map frame) with one-step history for
/// velocity differencing.
#[derive(Debug, Clone, Copy)]
struct Track {
    pos: Point2,
    t: f64,
    prev: Option<(Point2, f64)>,
}

impl Track {
    fn update(&mut self, pos: Point2, t: f64) {
        if t == self.t {
            // Second source in the same frame: overwrite, keep history.
            self.pos = pos;
        } else {
            self.prev = Some((self.pos, self.t));
            self.pos = pos;
            self.t = t;
        }
    }

    fn velocity(&self) -> Vec2 {
        match self.prev {
            Some((pp, pt)) if self.t > pt => Point2::new(
                (self.pos.x - pp.x) / (self.t - pt),
                (self.pos.y - pp.y) / (self.t - pt),
            ),
            _ => Point2::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TickOutput {
    pub events: Vec<Event>,
    pub phase: Phase,
    pub locked_id: Option<u32>,
    /// Robot-frame point to drive toward (the target's position).
    pub goal: Option<Point2>,
    /// Source of a live goal; `None` when the goal comes from track memory.
    pub goal_source: Option<Source>,
    pub target_members: Option<Vec<u32>>,
    pub groups: Vec<Group>,
}

/// Sequential supervisor state machine. Feed one `tick` per simulation step
/// with whatever camera frames arrived; times must be non-decreasing.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub cfg: MonitorConfig,
    ledger: BreachLedger,
    last_t: Option<f64>,
    known_group_sets: BTreeSet<Vec<u32>>,
    alerted: BTreeSet<Vec<u32>>,
    lock: Option<u32>,
    lock_last_seen: f64,
    last_live_source: Option<Source>,
    phase: Phase,
    tracks: BTreeMap<u32, Track>,
}

impl Monitor {
    pub fn new(cfg: MonitorConfig) -> Self {
        let ledger = BreachLedger::new(
            cfg.distance_threshold,
            cfg.breach_duration,
            cfg.hold_timer_on_dropout,
        );
        let phase = if cfg.idle_is_lawnmower {
            Phase::Lawnmower
        } else {
            Phase::Idle
        };
        Monitor {
            cfg,
            ledger,
            last_t: None,
            known_group_sets: BTreeSet::new(),
            alerted: BTreeSet::new(),
            lock: None,
            lock_last_seen: f64::NEG_INFINITY,
            last_live_source: None,
            phase,
            tracks: BTreeMap::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn locked_id(&self) -> Option<u32> {
        self.lock
    }

    pub fn breach_history(&self) -> &[BreachEvent] {
        self.ledger.history()
    }

    /// Robot-frame (id, position, velocity) for every track updated within
    /// `max_age` of `now` — the planner's pedestrian picture.
    pub fn tracked_kinematics(
        &self,
        robot_pose: &Frame2,
        now: f64,
        max_age: f64,
    ) -> Vec<(u32, Point2, Vec2)> {
        let inv = robot_pose.inverse();
        self.tracks
            .iter()
            .filter(|(_, tr)| now - tr.t <= max_age)
            .map(|(&id, tr)| {
                let v = tr.velocity();
                (id, inv.apply(tr.pos), inv.rotate(v))
            })
            .collect()
    }

    pub fn tick(
        &mut self,
        t: f64,
        robot_pose: &Frame2,
        rgbd: Option<&RgbdFrame>,
        cctvs: &[CctvFrame],
    ) -> Result<TickOutput, MonitorError> {
        if let Some(last) = self.last_t {
            if t < last {
                return Err(MonitorError::TimeRegression { last, now: t });
            }
        }
        self.last_t = Some(t);

        let mut events: Vec<Event> = Vec::new();

        // Merge overhead views: one map-frame measurement per pedestrian,
        // first camera wins.
        let mut cctv_merged: Vec<LocalizedPedestrian> = Vec::new();
        let mut cctv_ids: BTreeSet<u32> = BTreeSet::new();
        for frame in cctvs {
            for lp in &frame.localized_map {
                debug_assert_eq!(lp.source, Source::Cctv);
                if cctv_ids.insert(lp.ped_id) {
                    cctv_merged.push(*lp);
                }
            }
        }
        cctv_merged.sort_by_key(|lp| lp.ped_id);

        let rgbd_localized: &[LocalizedPedestrian] =
            rgbd.map(|f| f.localized.as_slice()).unwrap_or(&[]);
        let rgbd_ids: BTreeSet<u32> = rgbd_localized.iter().map(|lp| lp.ped_id).collect();

        // Position memory: robot measurements first so overhead ones win
        // within the same frame.
        for lp in rgbd_localized {
            let p_map = robot_pose.apply(lp.position);
            self.tracks
                .entry(lp.ped_id)
                .and_modify(|tr| tr.update(p_map, t))
                .or_insert(Track {
                    pos: p_map,
                    t,
                    prev: None,
                });
        }
        for lp in &cctv_merged {
            self.tracks
                .entry(lp.ped_id)
                .and_modify(|tr| tr.update(lp.position, t))
                .or_insert(Track {
                    pos: lp.position,
                    t,
                    prev: None,
                });
        }

        // Per-source pair distances feed independent breach timers; an empty
        // frame is a dropout for every pair that source was timing.
        let rgbd_pairs =
            pairwise_distances(rgbd_localized).expect("robot frames are single-source");
        let cctv_pairs =
            pairwise_distances(&cctv_merged).expect("merged overhead set is single-source");
        for ev in self
            .ledger
            .ingest_frame(Source::Rgbd, &rgbd_pairs, t)
            .into_iter()
            .chain(self.ledger.ingest_frame(Source::Cctv, &cctv_pairs, t))
        {
            events.push(Event::BreachConfirmed {
                t: round_ms(ev.t_confirmed),
                id_a: ev.id_a,
                id_b: ev.id_b,
                source: ev.source,
                t_start: round_ms(ev.t_start),
            });
        }

        // Fused per-pair minima drive compliance spans.
        let mut observed_min: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for pd in rgbd_pairs.iter().chain(cctv_pairs.iter()) {
            observed_min
                .entry((pd.id_a, pd.id_b))
                .and_modify(|d| *d = d.min(pd.distance))
                .or_insert(pd.distance);
        }
        self.ledger.update_clear(&observed_min, t);

        let mut groups = classify_groups(&self.ledger.active_pairs())?;
        let mut resolved_any = false;
        for g in &groups {
            if self
                .ledger
                .group_resolvable(&g.member_ids, t, self.cfg.compliance_duration)
            {
                self.ledger.resolve_group(&g.member_ids, t);
                self.known_group_sets.remove(&g.member_ids);
                events.push(Event::GroupResolved {
                    t: round_ms(t),
                    members: g.member_ids.clone(),
                });
                resolved_any = true;
            }
        }
        if resolved_any {
            groups = classify_groups(&self.ledger.active_pairs())?;
        }

        let current_sets: BTreeSet<Vec<u32>> =
            groups.iter().map(|g| g.member_ids.clone()).collect();
        for set in &current_sets {
            if !self.known_group_sets.contains(set) {
                events.push(Event::GroupFormed {
                    t: round_ms(t),
                    members: set.clone(),
                });
            }
        }
        self.known_group_sets = current_sets;

        // ---- Pursuit ----
        let pursuing = t >= self.cfg.pursuit_start_s;
        let target = if pursuing { groups.first() } else { None };

        let mut goal: Option<Point2> = None;
        let mut goal_source: Option<Source> = None;

        if let Some(group) = target {
            let live = if group.member_ids.iter().any(|id| cctv_ids.contains(id)) {
                Some(Source::Cctv)
            } else if group.member_ids.iter().any(|id| rgbd_ids.contains(id)) {
                Some(Source::Rgbd)
            } else {
                None
            };

            if let Some(src) = live {
                if self.last_live_source != Some(src) {
                    self.last_live_source = Some(src);
                    events.push(Event::GoalSourceChanged {
                        t: round_ms(t),
                        source: src,
                    });
                }

                // Reselect the lock from the live source's image. A previous
                // lock outside the current group never survives.
                let prev = self.lock.filter(|id| group.contains(*id));
                let selection = match src {
                    Source::Cctv => cctvs
                        .iter()
                        .find(|f| {
                            f.localized_map
                                .iter()
                                .any(|lp| group.contains(lp.ped_id))
                        })
                        .and_then(|f| {
                            select_locked(
                                group,
                                &f.boxes,
                                f.image_width_px,
                                prev,
                                self.cfg.lock_hysteresis,
                            )
                            .ok()
                        }),
                    Source::Rgbd => rgbd.and_then(|f| {
                        select_locked(
                            group,
                            &f.boxes,
                            f.image_width_px,
                            prev,
                            self.cfg.lock_hysteresis,
                        )
                        .ok()
                    }),
                };
                if let Some(new_lock) = selection {
                    if self.lock != Some(new_lock) {
                        events.push(Event::LockChanged {
                            t: round_ms(t),
                            ped_id: new_lock,
                            prev: self.lock,
                        });
                        self.lock = Some(new_lock);
                    }
                }
            }

            // Goal: the lock's live position on the preferred source, else
            // its remembered map position, else the freshest-tracked member.
            goal_source = live;
            goal = match (live, self.lock) {
                (Some(Source::Cctv), Some(id)) => cctv_merged
                    .iter()
                    .find(|lp| lp.ped_id == id)
                    .map(|lp| map_point_to_robot_frame(robot_pose, lp.position)),
                (Some(Source::Rgbd), Some(id)) => rgbd_localized
                    .iter()
                    .find(|lp| lp.ped_id == id)
                    .map(goal_from_rgbd),
                _ => None,
            };
            if goal.is_none() {
                goal_source = None;
                let remembered = match self.lock {
                    Some(id) => self.tracks.get(&id).copied(),
                    None => group
                        .member_ids
                        .iter()
                        .filter_map(|id| self.tracks.get(id))
                        .copied()
                        .max_by(|a, b| a.t.total_cmp(&b.t)),
                };
                goal = remembered.map(|tr| map_point_to_robot_frame(robot_pose, tr.pos));
            }
        } else {
            self.lock = None;
        }

        // Lock visibility bookkeeping and loss.
        if let Some(id) = self.lock {
            if rgbd_ids.contains(&id) || cctv_ids.contains(&id) {
                self.lock_last_seen = t;
            } else if t - self.lock_last_seen > self.cfg.lock_lost_timeout {
                events.push(Event::LockLost {
                    t: round_ms(t),
                    ped_id: id,
                });
                self.lock = None;
            }
        }

        let idle_phase = if self.cfg.idle_is_lawnmower {
            Phase::Lawnmower
        } else {
            Phase::Idle
        };
        let new_phase = match (target, goal) {
            (Some(_), Some(g)) => {
                if g.norm() <= self.cfg.standoff_distance {
                    Phase::Attending
                } else {
                    Phase::Navigating
                }
            }
            _ => idle_phase,
        };
        if new_phase != self.phase {
            events.push(Event::PhaseChanged {
                t: round_ms(t),
                phase: new_phase,
            });
            self.phase = new_phase;
        }

        // The alert fires while attending, the first time the lock is in
        // live view; once per member set.
        if self.phase == Phase::Attending {
            if let (Some(group), Some(id)) = (target, self.lock) {
                let lock_visible = rgbd_ids.contains(&id) || cctv_ids.contains(&id);
                if lock_visible && !self.alerted.contains(&group.member_ids) {
                    self.alerted.insert(group.member_ids.clone());
                    events.push(Event::AlertIssued {
                        t: round_ms(t),
                        members: group.member_ids.clone(),
                    });
                }
            }
        }

        Ok(TickOutput {
            events,
            phase: self.phase,
            locked_id: self.lock,
            goal,
            goal_source,
            target_members: target.map(|g| g.member_ids.clone()),
            groups,
        })
    }
}

/// Pick the group member whose box centroid sits closest to the image
/// center (least likely to leave the FOV), with a dead band so the lock only
/// changes on decisive crossings: the incumbent is kept unless a challenger
/// beats its offset by more than `hysteresis_frac` of the image width, or
/// the incumbent has no current box.
pub fn select_locked(
    group: &Group,
    boxes: &[BoundingBox],
    image_width_px: usize,
    prev_lock: Option<u32>,
    hysteresis_frac: f64,
) -> Result<u32, MonitorError> {
    let w = image_width_px as f64;
    let offset = |b: &BoundingBox| (b.center_x() - w / 2.0).abs();
    let mut best: Option<(f64, u32)> = None;
    let mut prev_offset: Option<f64> = None;
    for b in boxes {
        if !group.contains(b.ped_id) {
            continue;
        }
        let score = offset(b);
        if prev_lock == Some(b.ped_id) {
            prev_offset = Some(score);
        }
        match best {
            Some((s, id)) if (s, id) <= (score, b.ped_id) => {}
            _ => best = Some((score, b.ped_id)),
        }
    }
    let (best_score, best_id) = best.ok_or(MonitorError::NoVisibleMember)?;
    if let (Some(prev_id), Some(prev_score)) = (prev_lock, prev_offset) {
        if best_score < prev_score - hysteresis_frac * w {
            return Ok(best_id);
        }
        return Ok(prev_id);
    }
    Ok(best_id)
}

/// A robot-camera localization already is the relative goal.
pub fn goal_from_rgbd(lp: &LocalizedPedestrian) -> Point2 {
    debug_assert_eq!(lp.source, Source::Rgbd);
    lp.position
}

/// Map-frame displacement robot→pedestrian, rotated into the robot frame so
/// the planner sees it the same way as a robot-camera goal.
pub fn map_point_to_robot_frame(robot_pose: &Frame2, p_map: Point2) -> Point2 {
    robot_pose.inverse().apply(p_map)
}

/// Overhead-camera goal: lift the ground-frame measurement into the map
/// frame, then express it relative to the robot.
pub fn goal_from_cctv(
    lp: &LocalizedPedestrian,
    cam: &CctvCameraModel,
    robot_pose: &Frame2,
) -> Point2 {
    debug_assert_eq!(lp.source, Source::Cctv);
    map_point_to_robot_frame(robot_pose, cam.gnd_to_map.apply(lp.position))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::FrameTag;
    use approx::assert_relative_eq;

    fn bx(ped_id: u32, center_x: f64) -> BoundingBox {
        BoundingBox {
            top_left: Point2::new(center_x - 10.0, 100.0),
            width_px: 20.0,
            height_px: 60.0,
            ped_id,
        }
    }

    fn grp(ids: &[u32]) -> Group {
        Group {
            member_ids: ids.to_vec(),
        }
    }

    mod lock_selection {
        use super::*;

        #[test]
        fn picks_least_lateral_offset() {
            let boxes = [bx(4, 300.0), bx(7, 500.0)];
            let got = select_locked(&grp(&[4, 7]), &boxes, 640, None, 0.10).unwrap();
            assert_eq!(got, 4);
        }

        #[test]
        fn single_visible_member() {
            let boxes = [bx(9, 630.0), bx(2, 320.0)];
            // 2 is not in the group; only 9 qualifies despite its offset.
            let got = select_locked(&grp(&[7, 9]), &boxes, 640, None, 0.10).unwrap();
            assert_eq!(got, 9);
        }

        #[test]
        fn hysteresis_keeps_incumbent() {
            // Incumbent at offset 25 px, challenger at 20 px, dead band 64 px.
            let boxes = [bx(1, 345.0), bx(2, 340.0)];
            let got = select_locked(&grp(&[1, 2]), &boxes, 640, Some(1), 0.10).unwrap();
            assert_eq!(got, 1);
            // A decisive challenger (offset 200 px better) takes over.
            let boxes = [bx(1, 545.0), bx(2, 340.0)];
            let got = select_locked(&grp(&[1, 2]), &boxes, 640, Some(1), 0.10).unwrap();
            assert_eq!(got, 2);
        }

        #[test]
        fn incumbent_out_of_view_forces_reselect() {
            let boxes = [bx(2, 340.0)];
            let got = select_locked(&grp(&[1, 2]), &boxes, 640, Some(1), 0.10).unwrap();
            assert_eq!(got, 2);
        }

        #[test]
        fn zero_hysteresis_is_argmin_ties_to_smaller_id() {
            let boxes = [bx(5, 340.0), bx(3, 300.0)];
            // Equal offsets (20 px each side of 320): smaller id wins.
            let got = select_locked(&grp(&[3, 5]), &boxes, 640, None, 0.0).unwrap();
            assert_eq!(got, 3);
            // With an incumbent at exactly the minimum, it is kept.
            let got = select_locked(&grp(&[3, 5]), &boxes, 640, Some(5), 0.0).unwrap();
            assert_eq!(got, 5);
            // Any strictly better challenger takes over at zero hysteresis.
            let boxes = [bx(5, 340.0), bx(3, 321.0)];
            let got = select_locked(&grp(&[3, 5]), &boxes, 640, Some(5), 0.0).unwrap();
            assert_eq!(got, 3);
        }

        #[test]
        fn no_visible_member_is_an_error() {
            let boxes = [bx(9, 300.0)];
            assert_eq!(
                select_locked(&grp(&[1, 2]), &boxes, 640, None, 0.1),
                Err(MonitorError::NoVisibleMember)
            );
        }
    }

    mod goals {
        use super::*;

        fn lp(id: u32, p: Point2, frame: FrameTag, source: Source) -> LocalizedPedestrian {
            LocalizedPedestrian {
                ped_id: id,
                position: p,
                frame,
                source,
                timestamp: 0.0,
            }
        }

        #[test]
        fn rgbd_goal_is_the_localization() {
            let m = lp(1, Point2::new(3.0, 0.0), FrameTag::Robot, Source::Rgbd);
            assert_eq!(goal_from_rgbd(&m), Point2::new(3.0, 0.0));
            let psi = -17.5f64.to_radians();
            let m = lp(
                1,
                Point2::new(4.0 * psi.cos(), 4.0 * psi.sin()),
                FrameTag::Robot,
                Source::Rgbd,
            );
            let g = goal_from_rgbd(&m);
            assert_eq!(g, m.position);
            assert_relative_eq!(g.x, 3.815, epsilon = 1e-3);
            assert_relative_eq!(g.y, -1.203, epsilon = 1e-3);
        }

        #[test]
        fn map_diff_translation_only() {
            let robot = Frame2::new(0.0, Point2::new(1.0, 1.0));
            let g = map_point_to_robot_frame(&robot, Point2::new(4.0, 1.0));
            assert_relative_eq!(g.x, 3.0, epsilon = 1e-12);
            assert_relative_eq!(g.y, 0.0, epsilon = 1e-12);
        }

        #[test]
        fn map_diff_rotates_into_robot_frame() {
            // Robot faces +Y; a point 3 m north is dead ahead.
            let robot = Frame2::new(std::f64::consts::FRAC_PI_2, Point2::new(0.0, 0.0));
            let g = map_point_to_robot_frame(&robot, Point2::new(0.0, 3.0));
            assert_relative_eq!(g.x, 3.0, epsilon = 1e-12);
            assert_relative_eq!(g.y, 0.0, epsilon = 1e-12);
        }

        #[test]
        fn pedestrian_at_robot_position_gives_zero() {
            let robot = Frame2::new(1.1, Point2::new(-2.0, 5.0));
            let g = map_point_to_robot_frame(&robot, Point2::new(-2.0, 5.0));
            assert_relative_eq!(g.norm(), 0.0, epsilon = 1e-12);
        }
    }

    mod ticks {
        use super::*;

        const DT: f64 = 0.1;

        fn lp_robot(id: u32, p: Point2, t: f64) -> LocalizedPedestrian {
            LocalizedPedestrian {
                ped_id: id,
                position: p,
                frame: FrameTag::Robot,
                source: Source::Rgbd,
                timestamp: t,
            }
        }

        fn lp_map(id: u32, p: Point2, t: f64) -> LocalizedPedestrian {
            LocalizedPedestrian {
                ped_id: id,
                position: p,
                frame: FrameTag::Map,
                source: Source::Cctv,
                timestamp: t,
            }
        }

        fn rgbd_frame(peds: &[(u32, Point2)], t: f64) -> RgbdFrame {
            RgbdFrame {
                boxes: peds.iter().map(|&(id, p)| super::bx(id, 320.0 + p.y)).collect(),
                localized: peds.iter().map(|&(id, p)| lp_robot(id, p, t)).collect(),
                image_width_px: 640,
            }
        }

        fn cctv_frame(peds: &[(u32, Point2)], t: f64) -> CctvFrame {
            CctvFrame {
                boxes: peds
                    .iter()
                    .enumerate()
                    .map(|(k, &(id, _))| super::bx(id, 400.0 + 30.0 * k as f64))
                    .collect(),
                localized_map: peds.iter().map(|&(id, p)| lp_map(id, p, t)).collect(),
                image_width_px: 1280,
            }
        }

        fn find<'a>(events: &'a [Event], pred: impl Fn(&Event) -> bool) -> Option<&'a Event> {
            events.iter().find(|e| pred(e))
        }

        #[test]
        fn time_regression_rejected() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            m.tick(1.0, &pose, None, &[]).unwrap();
            let err = m.tick(0.5, &pose, None, &[]).unwrap_err();
            assert_eq!(
                err,
                MonitorError::TimeRegression {
                    last: 1.0,
                    now: 0.5
                }
            );
        }

        #[test]
        fn idle_phase_respects_lawnmower_flag() {
            let mut m = Monitor::new(MonitorConfig::default());
            let out = m.tick(0.0, &Frame2::identity(), None, &[]).unwrap();
            assert_eq!(out.phase, Phase::Idle);
            assert!(out.events.is_empty());

            let mut m = Monitor::new(MonitorConfig {
                idle_is_lawnmower: true,
                ..Default::default()
            });
            let out = m.tick(0.0, &Frame2::identity(), None, &[]).unwrap();
            assert_eq!(out.phase, Phase::Lawnmower);
            assert!(out.events.is_empty(), "initial phase is not a transition");
        }

        /// The worked arbitration example: robot camera sees a pair, the
        /// overhead camera sees the same two plus a third; one merged group,
        /// goal computed from the overhead data.
        #[test]
        fn cross_source_group_merge_prefers_overhead_goal() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            let rgbd_peds = [
                (1, Point2::new(3.0, 0.4)),
                (2, Point2::new(3.0, -0.4)),
            ];
            let cctv_peds = [
                (1, Point2::new(3.0, 0.4)),
                (2, Point2::new(3.0, -0.4)),
                (3, Point2::new(3.0, 1.6)),
            ];
            let mut last = None;
            for k in 0..=52 {
                let t = k as f64 * DT;
                let out = m
                    .tick(
                        t,
                        &pose,
                        Some(&rgbd_frame(&rgbd_peds, t)),
                        &[cctv_frame(&cctv_peds, t)],
                    )
                    .unwrap();
                last = Some(out);
            }
            let out = last.unwrap();
            assert_eq!(out.target_members, Some(vec![1, 2, 3]));
            assert_eq!(out.goal_source, Some(Source::Cctv));
            // Robot at map origin facing +X: goal equals the lock's map
            // position exactly (overhead-derived, not robot-derived).
            let lock = out.locked_id.unwrap();
            let expect = cctv_peds.iter().find(|&&(id, _)| id == lock).unwrap().1;
            assert_eq!(out.goal, Some(expect));
            assert_eq!(out.phase, Phase::Navigating);

            let confirmations: Vec<_> = out
                .events
                .iter()
                .chain([].iter())
                .filter(|e| matches!(e, Event::BreachConfirmed { .. }))
                .collect();
            // Breaches confirmed earlier; this tick carries no new ones.
            assert!(confirmations.is_empty());
        }

        #[test]
        fn groups_attended_largest_first_then_next_after_resolution() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            let trio_close = [
                (1, Point2::new(4.0, 1.0)),
                (2, Point2::new(4.0, 0.0)),
                (3, Point2::new(4.0, -1.0)),
            ];
            let pair = [
                (4, Point2::new(8.0, 3.0)),
                (5, Point2::new(8.0, 4.0)),
            ];
            let both: Vec<(u32, Point2)> =
                trio_close.iter().chain(pair.iter()).copied().collect();

            let mut out = None;
            for k in 0..=52 {
                let t = k as f64 * DT;
                out = Some(
                    m.tick(t, &pose, Some(&rgbd_frame(&both, t)), &[])
                        .unwrap(),
                );
            }
            let o = out.unwrap();
            assert_eq!(o.target_members, Some(vec![1, 2, 3]));
            assert_eq!(
                o.groups.len(),
                2,
                "both groups live: {:?}",
                o.groups
            );

            // Trio separates (> threshold); pair stays. After the compliance
            // window the trio resolves and the pair becomes the target.
            let trio_apart = [
                (1, Point2::new(4.0, 2.0)),
                (2, Point2::new(4.0, 0.0)),
                (3, Point2::new(4.0, -2.0)),
            ];
            let after: Vec<(u32, Point2)> =
                trio_apart.iter().chain(pair.iter()).copied().collect();
            let mut resolved_at = None;
            for k in 53..=100 {
                let t = k as f64 * DT;
                let o = m
                    .tick(t, &pose, Some(&rgbd_frame(&after, t)), &[])
                    .unwrap();
                if find(&o.events, |e| matches!(e, Event::GroupResolved { .. })).is_some() {
                    resolved_at = Some(t);
                    assert_eq!(o.target_members, Some(vec![4, 5]));
                    break;
                }
            }
            let resolved_at = resolved_at.expect("trio never resolved");
            // Separation first observed at t=5.3; compliance window 3 s.
            assert_relative_eq!(resolved_at, 8.3, epsilon = 1e-9);
        }

        #[test]
        fn survey_gate_defers_pursuit() {
            let mut m = Monitor::new(MonitorConfig {
                pursuit_start_s: 20.0,
                ..Default::default()
            });
            let pose = Frame2::identity();
            let peds = [
                (1, Point2::new(4.0, 0.5)),
                (2, Point2::new(4.0, -0.5)),
            ];
            let mut saw_confirmation = false;
            for k in 0..=60 {
                let t = k as f64 * DT;
                let out = m
                    .tick(t, &pose, Some(&rgbd_frame(&peds, t)), &[])
                    .unwrap();
                saw_confirmation |= out
                    .events
                    .iter()
                    .any(|e| matches!(e, Event::BreachConfirmed { .. }));
                assert_eq!(out.phase, Phase::Idle, "no pursuit during survey");
                assert_eq!(out.goal, None);
            }
            assert!(saw_confirmation, "breach logging continues during survey");

            // After the gate the same group is targeted immediately.
            let out = m
                .tick(20.0, &pose, Some(&rgbd_frame(&peds, 20.0)), &[])
                .unwrap();
            assert_eq!(out.target_members, Some(vec![1, 2]));
            assert_eq!(out.phase, Phase::Navigating);
        }

        #[test]
        fn lock_lost_after_timeout_and_memory_goal_persists() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            let peds = [
                (1, Point2::new(5.0, 0.5)),
                (2, Point2::new(5.0, -0.5)),
            ];
            for k in 0..=52 {
                let t = k as f64 * DT;
                m.tick(t, &pose, Some(&rgbd_frame(&peds, t)), &[]).unwrap();
            }
            assert!(m.locked_id().is_some());

            // Both pedestrians vanish (occlusion). Lock survives 1.0 s on
            // memory, then a single LockLost fires; goal stays available.
            let empty = RgbdFrame {
                image_width_px: 640,
                ..Default::default()
            };
            let mut lost_events = 0;
            let mut lost_t = None;
            for k in 53..=80 {
                let t = k as f64 * DT;
                let out = m.tick(t, &pose, Some(&empty), &[]).unwrap();
                for e in &out.events {
                    if let Event::LockLost { t: lt, .. } = e {
                        lost_events += 1;
                        lost_t = Some(*lt);
                    }
                }
                assert!(out.goal.is_some(), "memory goal at t={t}");
                assert_eq!(out.goal_source, None, "memory, not live");
            }
            assert_eq!(lost_events, 1);
            // Last seen at 5.2; timeout 1.0 s; first strictly-later frame 6.3.
            assert_relative_eq!(lost_t.unwrap(), 6.3, epsilon = 1e-9);
            assert_eq!(m.locked_id(), None);

            // Reappearance re-locks and the goal goes live again.
            let out = m
                .tick(8.1, &pose, Some(&rgbd_frame(&peds, 8.1)), &[])
                .unwrap();
            assert_eq!(out.goal_source, Some(Source::Rgbd));
            assert!(out.locked_id.is_some());
            assert!(find(&out.events, |e| matches!(e, Event::LockChanged { .. })).is_some());
        }

        #[test]
        fn attending_entry_raises_one_alert_per_group() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            // Pair inside standoff range from the start: phase goes straight
            // to Attending once confirmed.
            let peds = [
                (1, Point2::new(1.5, 0.4)),
                (2, Point2::new(1.5, -0.4)),
            ];
            let mut alerts = 0;
            let mut first_alert_t = None;
            let mut attending_since = None;
            for k in 0..=200 {
                let t = k as f64 * DT;
                let out = m
                    .tick(t, &pose, Some(&rgbd_frame(&peds, t)), &[])
                    .unwrap();
                if out.phase == Phase::Attending && attending_since.is_none() {
                    attending_since = Some(t);
                }
                for e in &out.events {
                    if let Event::AlertIssued { t: at, members } = e {
                        alerts += 1;
                        first_alert_t = Some(*at);
                        assert_eq!(members, &vec![1, 2]);
                    }
                }
            }
            assert_eq!(alerts, 1, "alert fires exactly once for the set");
            assert_eq!(first_alert_t, attending_since);
        }

        #[test]
        fn overhead_to_robot_handoff_emits_source_switch() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            let peds = [
                (1, Point2::new(5.0, 0.5)),
                (2, Point2::new(5.0, -0.5)),
            ];
            let map_peds = [
                (1, Point2::new(5.0, 0.5)),
                (2, Point2::new(5.0, -0.5)),
            ];
            // Overhead-only coverage first.
            let mut switches: Vec<Source> = Vec::new();
            for k in 0..=52 {
                let t = k as f64 * DT;
                let out = m
                    .tick(t, &pose, None, &[cctv_frame(&map_peds, t)])
                    .unwrap();
                for e in &out.events {
                    if let Event::GoalSourceChanged { source, .. } = e {
                        switches.push(*source);
                    }
                }
            }
            assert_eq!(switches, vec![Source::Cctv]);

            // Pedestrians leave the footprint; robot camera picks them up.
            for k in 53..=60 {
                let t = k as f64 * DT;
                let out = m
                    .tick(t, &pose, Some(&rgbd_frame(&peds, t)), &[])
                    .unwrap();
                for e in &out.events {
                    if let Event::GoalSourceChanged { source, .. } = e {
                        switches.push(*source);
                    }
                }
                assert_eq!(out.goal_source, Some(Source::Rgbd));
            }
            assert_eq!(switches, vec![Source::Cctv, Source::Rgbd]);
        }

        #[test]
        fn overhead_source_preferred_when_both_live() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            let peds = [
                (1, Point2::new(5.0, 0.5)),
                (2, Point2::new(5.0, -0.5)),
            ];
            let mut out = None;
            for k in 0..=52 {
                let t = k as f64 * DT;
                out = Some(
                    m.tick(
                        t,
                        &pose,
                        Some(&rgbd_frame(&peds, t)),
                        &[cctv_frame(&peds, t)],
                    )
                    .unwrap(),
                );
            }
            assert_eq!(out.unwrap().goal_source, Some(Source::Cctv));
        }

        #[test]
        fn tracked_kinematics_difference_velocities() {
            let mut m = Monitor::new(MonitorConfig::default());
            let pose = Frame2::identity();
            for k in 0..5 {
                let t = k as f64 * DT;
                let p = Point2::new(3.0 + 0.5 * t, 1.0);
                m.tick(t, &pose, Some(&rgbd_frame(&[(1, p)], t)), &[])
                    .unwrap();
            }
            let kin = m.tracked_kinematics(&pose, 0.4, 0.5);
            assert_eq!(kin.len(), 1);
            let (id, p, v) = kin[0];
            assert_eq!(id, 1);
            assert_relative_eq!(p.x, 3.2, epsilon = 1e-9);
            assert_relative_eq!(v.x, 0.5, epsilon = 1e-9);
            assert_relative_eq!(v.y, 0.0, epsilon = 1e-9);

            // Stale tracks age out.
            assert!(m.tracked_kinematics(&pose, 10.0, 0.5).is_empty());
        }
    }
}
