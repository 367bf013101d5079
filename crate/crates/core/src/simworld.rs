//! Ground-truth world: static obstacles, scripted pedestrians, a
//! differential-drive robot, and a fixed-step deterministic integrator.
//!
//! Determinism contract: `time == step_count * dt` exactly (recomputed, never
//! accumulated), and the state sequence is a pure function of the initial
//! world — identical runs are bit-identical.

use crate::geometry::{
    normalize_angle, point_in_polygon, ray_polygon_distance, ConvexPolygon, Frame2, Point2, Vec2,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub polygon: ConvexPolygon,
}

/// One leg of a pedestrian script: walk to `target` at `speed_mps`, then
/// stand still for `wait_s` before starting the next leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub target: Point2,
    pub speed_mps: f64,
    pub wait_s: f64,
}

impl Waypoint {
    pub fn new(target: Point2, speed_mps: f64) -> Self {
        Waypoint {
            target,
            speed_mps,
            wait_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pedestrian {
    pub id: u32,
    pub position: Point2,
    /// Instantaneous walking velocity after the latest step.
    pub velocity: Vec2,
    pub radius: f64,
    pub script: Vec<Waypoint>,
    pub household_tag: Option<u32>,
    next_leg: usize,
    wait_remaining: f64,
}

impl Pedestrian {
    pub fn new(id: u32, position: Point2, radius: f64, script: Vec<Waypoint>) -> Self {
        Pedestrian {
            id,
            position,
            velocity: Point2::ZERO,
            radius,
            script,
            household_tag: None,
            next_leg: 0,
            wait_remaining: 0.0,
        }
    }

    pub fn script_finished(&self) -> bool {
        self.next_leg >= self.script.len() && self.wait_remaining <= 0.0
    }

    /// Advance along the script by `dt`, carrying leftover time across
    /// waypoint arrivals so per-leg path length is exactly speed x duration.
    fn step(&mut self, dt: f64) {
        let mut remaining = dt;
        while remaining > 1e-12 {
            if self.wait_remaining > 0.0 {
                let used = self.wait_remaining.min(remaining);
                self.wait_remaining -= used;
                remaining -= used;
                continue;
            }
            let Some(wp) = self.script.get(self.next_leg) else {
                break;
            };
            let to_go = wp.target.sub(self.position);
            let dist = to_go.norm();
            if dist <= 1e-12 {
                self.position = wp.target;
                self.wait_remaining = wp.wait_s;
                self.next_leg += 1;
                continue;
            }
            if wp.speed_mps <= 1e-12 {
                // A zero-speed leg with distance left would stall forever;
                // scenario validation rejects it, tests may not construct it.
                break;
            }
            let time_to_target = dist / wp.speed_mps;
            // 1 ns arrival slack: absorbs float residue so a leg of duration
            // k*dt completes in exactly k steps instead of k+1.
            if time_to_target <= remaining + 1e-9 {
                self.position = wp.target;
                remaining = (remaining - time_to_target).max(0.0);
                self.wait_remaining = wp.wait_s;
                self.next_leg += 1;
            } else {
                self.position = self
                    .position
                    .add(to_go.scale(wp.speed_mps * remaining / dist));
                remaining = 0.0;
            }
        }
        self.velocity = self.instantaneous_velocity();
    }

    fn instantaneous_velocity(&self) -> Vec2 {
        if self.wait_remaining > 0.0 {
            return Point2::ZERO;
        }
        match self.script.get(self.next_leg) {
            Some(wp) => {
                let dir = wp.target.sub(self.position);
                if dir.norm() <= 1e-12 {
                    Point2::ZERO
                } else {
                    dir.unit().scale(wp.speed_mps)
                }
            }
            None => Point2::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Frame2,
    pub linear_vel: f64,
    pub angular_vel: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub radius: f64,
}

impl RobotState {
    pub fn new(pose: Frame2, v_max: f64, omega_max: f64, radius: f64) -> Self {
        RobotState {
            pose,
            linear_vel: 0.0,
            angular_vel: 0.0,
            v_max,
            omega_max,
            radius,
        }
    }

    pub fn position(&self) -> Point2 {
        self.pose.translation
    }

    pub fn heading(&self) -> f64 {
        self.pose.rotation
    }
}

/// Commanded (v, omega); the integrator clamps to robot limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub const STOP: VelocityCommand = VelocityCommand { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        VelocityCommand { v, omega }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub dt: f64,
    pub step_count: u64,
    pub bounds_min: Point2,
    pub bounds_max: Point2,
    pub pedestrians: Vec<Pedestrian>,
    pub robot: RobotState,
    pub obstacles: Vec<Obstacle>,
    pub rng_seed: u64,
}

impl WorldState {
    pub fn new(
        dt: f64,
        bounds_min: Point2,
        bounds_max: Point2,
        robot: RobotState,
        pedestrians: Vec<Pedestrian>,
        obstacles: Vec<Obstacle>,
        rng_seed: u64,
    ) -> Self {
        assert!(dt > 0.0 && dt <= 0.5, "dt must be in (0, 0.5]");
        WorldState {
            time: 0.0,
            dt,
            step_count: 0,
            bounds_min,
            bounds_max,
            pedestrians,
            robot,
            obstacles,
            rng_seed,
        }
    }

    pub fn pedestrian(&self, id: u32) -> Option<&Pedestrian> {
        self.pedestrians.iter().find(|p| p.id == id)
    }

    /// Advance one fixed step: pedestrians first, then the robot under the
    /// (clamped) command. The robot halts in place rather than penetrating an
    /// obstacle or pedestrian disk; rotation still applies when halted.
    pub fn step(&mut self, cmd: VelocityCommand) {
        let v = cmd.v.clamp(-self.robot.v_max, self.robot.v_max);
        let omega = cmd.omega.clamp(-self.robot.omega_max, self.robot.omega_max);

        for ped in &mut self.pedestrians {
            ped.step(self.dt);
        }

        let (s, c) = self.robot.pose.rotation.sin_cos();
        let candidate = Point2::new(
            self.robot.pose.translation.x + v * c * self.dt,
            self.robot.pose.translation.y + v * s * self.dt,
        );
        let blocked = self.position_collides(candidate);
        if blocked {
            self.robot.linear_vel = 0.0;
        } else {
            self.robot.pose.translation = candidate;
            self.robot.linear_vel = v;
        }
        self.robot.pose.rotation = normalize_angle(self.robot.pose.rotation + omega * self.dt);
        self.robot.angular_vel = omega;

        self.step_count += 1;
        self.time = self.step_count as f64 * self.dt;

        debug_assert!(
            self.obstacles
                .iter()
                .all(|o| o.polygon.distance_to(self.robot.pose.translation)
                    >= self.robot.radius - 1e-9),
            "robot penetrated an obstacle despite the stop backstop"
        );
    }

    fn position_collides(&self, p: Point2) -> bool {
        self.obstacles
            .iter()
            .any(|o| o.polygon.distance_to(p) < self.robot.radius)
            || self
                .pedestrians
                .iter()
                .any(|ped| ped.position.dist(p) < self.robot.radius + ped.radius)
    }
}

// --- Angular-interval occlusion -------------------------------------------

/// Half-angle subtended by a disk of radius `r` at distance `d` (d > r).
pub(crate) fn disk_half_angle(d: f64, r: f64) -> f64 {
    (r / d).clamp(-1.0, 1.0).asin()
}

/// Angular interval of a convex polygon as seen from `eye`, expressed
/// relative to the reference bearing `theta_ref`. `None` when the eye is
/// inside the polygon (full cover). `hi` may exceed pi when the interval
/// wraps; `clip_interval` handles translates.
pub(crate) fn poly_rel_interval(
    eye: Point2,
    theta_ref: f64,
    poly: &ConvexPolygon,
) -> Option<(f64, f64)> {
    if point_in_polygon(poly, eye) {
        return None;
    }
    let mut phis: Vec<f64> = poly
        .vertices()
        .iter()
        .map(|v| normalize_angle(v.sub(eye).angle() - theta_ref))
        .collect();
    phis.sort_by(f64::total_cmp);
    let n = phis.len();
    if n == 1 {
        return Some((phis[0], phis[0]));
    }
    // The polygon's angular extent is 2*pi minus the largest gap between
    // consecutive vertex bearings (circularly).
    let mut best_gap = 2.0 * std::f64::consts::PI - (phis[n - 1] - phis[0]);
    let mut start = 0;
    for i in 1..n {
        let gap = phis[i] - phis[i - 1];
        if gap > best_gap {
            best_gap = gap;
            start = i;
        }
    }
    let lo = phis[start];
    let hi = lo + (2.0 * std::f64::consts::PI - best_gap);
    Some((lo, hi))
}

/// Clip `(lo, hi)` (and its +-2*pi translates) against `[-alpha, alpha]`.
pub(crate) fn clip_interval(lo: f64, hi: f64, alpha: f64, out: &mut Vec<(f64, f64)>) {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    for shift in [-TAU, 0.0, TAU] {
        let a = (lo + shift).max(-alpha);
        let b = (hi + shift).min(alpha);
        if b > a + 1e-12 {
            out.push((a, b));
        }
    }
}

/// Total length of the union of intervals.
pub(crate) fn merged_length(pieces: &mut Vec<(f64, f64)>) -> f64 {
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &(lo, hi) in pieces.iter() {
        match cur {
            None => cur = Some((lo, hi)),
            Some((clo, chi)) => {
                if lo <= chi {
                    cur = Some((clo, chi.max(hi)));
                } else {
                    total += chi - clo;
                    cur = Some((lo, hi));
                }
            }
        }
    }
    if let Some((clo, chi)) = cur {
        total += chi - clo;
    }
    total
}

/// Distance from `eye` to the near surface of the target disk along the ray
/// at relative angle `delta` (|delta| within the disk's subtended interval).
pub(crate) fn disk_hit_distance(d: f64, r: f64, delta: f64) -> f64 {
    let lateral = d * delta.sin();
    d * delta.cos() - (r * r - lateral * lateral).max(0.0).sqrt()
}

/// Fraction of the target disk's subtended angular interval at `eye` left
/// uncovered by blocker disks and obstacle polygons.
///
/// A blocker disk covers only if its center is strictly nearer than the
/// target's (ground-level line-of-sight rule). A polygon piece covers if a
/// ray through the piece midpoint hits the polygon before the target disk.
pub fn visible_fraction(
    eye: Point2,
    target_center: Point2,
    target_radius: f64,
    blocker_disks: &[(Point2, f64)],
    obstacles: &[Obstacle],
) -> f64 {
    let to_t = target_center.sub(eye);
    let d_t = to_t.norm();
    if d_t <= target_radius {
        return 1.0;
    }
    let theta_t = to_t.angle();
    let alpha_t = disk_half_angle(d_t, target_radius);

    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for &(c, r) in blocker_disks {
        let to_b = c.sub(eye);
        let d_b = to_b.norm();
        if d_b <= r {
            return 0.0;
        }
        if d_b >= d_t {
            continue;
        }
        let delta = normalize_angle(to_b.angle() - theta_t);
        let alpha_b = disk_half_angle(d_b, r);
        clip_interval(delta - alpha_b, delta + alpha_b, alpha_t, &mut pieces);
    }
    for obs in obstacles {
        let Some((lo, hi)) = poly_rel_interval(eye, theta_t, &obs.polygon) else {
            return 0.0;
        };
        let mut clipped = Vec::new();
        clip_interval(lo, hi, alpha_t, &mut clipped);
        for (a, b) in clipped {
            let mid = 0.5 * (a + b);
            let dir_angle = theta_t + mid;
            let dir = Point2::new(dir_angle.cos(), dir_angle.sin());
            let target_hit = disk_hit_distance(d_t, target_radius, mid);
            match ray_polygon_distance(eye, dir, &obs.polygon) {
                Some(t) if t < target_hit => pieces.push((a, b)),
                _ => {}
            }
        }
    }
    let covered = merged_length(&mut pieces);
    (1.0 - covered / (2.0 * alpha_t)).clamp(0.0, 1.0)
}
