//! Scenario files: one TOML document with named sections (`world`, `robot`,
//! `pedestrians`, `cctv`, `monitor`, `planner`, ...) describing a complete
//! closed-loop run. Keys carry explicit units (`speed_mps`, `fov_deg`);
//! unknown keys are rejected so typos fail loudly instead of silently
//! falling back to defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{convex_hull, ConvexPolygon, Frame2, Point2};
use crate::monitor::MonitorConfig;
use crate::navigation::{lawnmower_waypoints, LawnmowerPlan, PlannerConfig};
use crate::sensors::{CctvCameraModel, LidarModel, RgbdCameraModel};
use crate::simworld::{Obstacle, Pedestrian, RobotState, Waypoint, WorldState};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    /// Syntax or shape problem; the inner error reports line and column.
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    /// A named constraint failed; the message starts with the offending key.
    #[error("scenario validation failed: {0}")]
    Validation(String),
}

fn invalid(msg: String) -> ScenarioError {
    ScenarioError::Validation(msg)
}

// ---------------------------------------------------------------------------
// Raw file schema. Everything below mirrors the TOML layout one-to-one.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    world: WorldSection,
    robot: RobotSection,
    #[serde(default)]
    obstacles: Vec<ObstacleSection>,
    #[serde(default)]
    pedestrians: Vec<PedestrianSection>,
    rgbd: Option<RgbdSection>,
    #[serde(default)]
    lidar: LidarSection,
    #[serde(default)]
    cctv: Vec<CctvSection>,
    #[serde(default)]
    monitor: MonitorSection,
    #[serde(default)]
    planner: PlannerSection,
    survey: Option<SurveySection>,
    lawnmower: Option<LawnmowerSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldSection {
    tag: String,
    bounds_min_m: [f64; 2],
    bounds_max_m: [f64; 2],
    #[serde(default = "default_dt")]
    dt_s: f64,
    duration_s: f64,
    #[serde(default)]
    seed: u64,
}

fn default_dt() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSection {
    start_xy_m: [f64; 2],
    #[serde(default)]
    start_heading_deg: f64,
    #[serde(default = "default_v_max")]
    v_max_mps: f64,
    #[serde(default = "default_omega_max")]
    omega_max_radps: f64,
    #[serde(default = "default_robot_radius")]
    radius_m: f64,
}

fn default_v_max() -> f64 {
    0.75
}

fn default_omega_max() -> f64 {
    0.75
}

fn default_robot_radius() -> f64 {
    0.3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleSection {
    vertices_m: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PedestrianSection {
    id: u32,
    start_xy_m: [f64; 2],
    #[serde(default = "default_ped_radius")]
    radius_m: f64,
    household: Option<u32>,
    #[serde(default)]
    legs: Vec<LegSection>,
}

fn default_ped_radius() -> f64 {
    0.3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LegSection {
    target_xy_m: [f64; 2],
    speed_mps: f64,
    #[serde(default)]
    wait_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RgbdSection {
    #[serde(default = "default_rgbd_fov")]
    fov_deg: f64,
    #[serde(default = "default_rgbd_range")]
    range_m: f64,
    #[serde(default = "default_rgbd_width")]
    width_px: usize,
    #[serde(default = "default_rgbd_height")]
    height_px: usize,
    #[serde(default)]
    noise_sigma_depth_m: f64,
}

fn default_rgbd_fov() -> f64 {
    60.0
}

fn default_rgbd_range() -> f64 {
    10.0
}

fn default_rgbd_width() -> usize {
    640
}

fn default_rgbd_height() -> usize {
    120
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LidarSection {
    beam_count: usize,
    fov_deg: f64,
    max_range_m: f64,
}

impl Default for LidarSection {
    fn default() -> Self {
        let m = LidarModel::default();
        LidarSection {
            beam_count: m.beam_count,
            fov_deg: m.fov_rad.to_degrees(),
            max_range_m: m.max_range,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CctvSection {
    /// Angled-view pixel corners of the homography rectangle, in the ground
    /// rectangle's (0,0), (w,0), (w,h), (0,h) corner order.
    corners_angled_px: [[f64; 2]; 4],
    rect_w_m: f64,
    rect_h_m: f64,
    scale_m_per_px: f64,
    gnd_origin_xy_m: [f64; 2],
    #[serde(default)]
    gnd_rotation_deg: f64,
    resolution_px: [usize; 2],
    eye_xy_m: [f64; 2],
    eye_height_m: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonitorSection {
    distance_threshold_m: Option<f64>,
    breach_duration_s: Option<f64>,
    compliance_duration_s: Option<f64>,
    lock_hysteresis_frac: Option<f64>,
    hold_timer_on_dropout: Option<bool>,
    standoff_m: Option<f64>,
    lock_lost_timeout_s: Option<f64>,
    pursuit_start_s: Option<f64>,
    idle_is_lawnmower: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlannerSection {
    pfz_horizon_s: Option<f64>,
    pfz_trigger_m: Option<f64>,
    stop_distance_m: Option<f64>,
    stop_sector_deg: Option<f64>,
    heading_gain: Option<f64>,
    fov_keep_frac: Option<f64>,
    standoff_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurveySection {
    #[serde(default)]
    start_s: f64,
    end_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawnmowerSection {
    region_min_m: [f64; 2],
    region_max_m: [f64; 2],
    /// Defaults to the robot camera's range (adjacent lanes then overlap).
    lane_spacing_m: Option<f64>,
    /// Skip lane pieces inside the first overhead camera's footprint.
    #[serde(default = "default_true")]
    clip_cctv_footprint: bool,
}

fn default_true() -> bool {
    true
}

// ---------------------------------------------------------------------------
// Validated runtime form.
// ---------------------------------------------------------------------------

/// A parsed, validated scenario, ready to instantiate a world and run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub tag: String,
    pub seed: u64,
    pub dt_s: f64,
    pub duration_s: f64,
    pub bounds_min: Point2,
    pub bounds_max: Point2,
    pub robot_start: Frame2,
    pub v_max: f64,
    pub omega_max: f64,
    pub robot_radius: f64,
    pub pedestrians: Vec<Pedestrian>,
    pub obstacles: Vec<Obstacle>,
    pub rgbd: Option<RgbdCameraModel>,
    pub lidar: LidarModel,
    pub cctv: Vec<CctvCameraModel>,
    pub monitor: MonitorConfig,
    pub planner: PlannerConfig,
    /// Breach statistics in the run report are scoped to this window.
    pub survey_window: (f64, f64),
    pub lawnmower: Option<LawnmowerSpec>,
}

#[derive(Debug, Clone)]
pub struct LawnmowerSpec {
    pub region_min: Point2,
    pub region_max: Point2,
    pub lane_spacing_m: f64,
    pub clip_cctv_footprint: bool,
}

fn pt(xy: [f64; 2]) -> Point2 {
    Point2::new(xy[0], xy[1])
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let text = fs::read_to_string(path)?;
        Scenario::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Scenario, ScenarioError> {
        let raw: ScenarioFile = toml::from_str(text)?;
        Scenario::from_raw(raw)
    }

    /// Fresh world at t = 0 with the scripted population in place.
    pub fn build_world(&self) -> WorldState {
        let robot = RobotState::new(
            self.robot_start,
            self.v_max,
            self.omega_max,
            self.robot_radius,
        );
        WorldState::new(
            self.dt_s,
            self.bounds_min,
            self.bounds_max,
            robot,
            self.pedestrians.clone(),
            self.obstacles.clone(),
            self.seed,
        )
    }

    /// Footprint the lawnmower lanes are clipped against, when configured.
    pub fn lawnmower_footprint(&self) -> Option<&ConvexPolygon> {
        let spec = self.lawnmower.as_ref()?;
        if spec.clip_cctv_footprint {
            self.cctv.first().map(|c| &c.footprint)
        } else {
            None
        }
    }

    /// Coverage plan for the patrol region; `None` without a lawnmower
    /// section. Validation already proved the plan covers, so the runner may
    /// unwrap.
    pub fn build_lawnmower(&self) -> Option<LawnmowerPlan> {
        let spec = self.lawnmower.as_ref()?;
        let range = self.rgbd.as_ref().map(|c| c.range_r)?;
        lawnmower_waypoints(
            spec.region_min,
            spec.region_max,
            self.lawnmower_footprint(),
            spec.lane_spacing_m,
            range,
        )
        .ok()
    }

    fn from_raw(raw: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let w = &raw.world;
        if w.tag.trim().is_empty() {
            return Err(invalid("world.tag: must be non-empty".into()));
        }
        if !(w.dt_s > 0.0 && w.dt_s <= 0.5) {
            return Err(invalid(format!(
                "world.dt_s: must be in (0, 0.5], got {}",
                w.dt_s
            )));
        }
        if w.duration_s <= 0.0 {
            return Err(invalid(format!(
                "world.duration_s: must be positive, got {}",
                w.duration_s
            )));
        }
        let bounds_min = pt(w.bounds_min_m);
        let bounds_max = pt(w.bounds_max_m);
        if bounds_max.x <= bounds_min.x || bounds_max.y <= bounds_min.y {
            return Err(invalid(
                "world.bounds_max_m: must exceed bounds_min_m on both axes".into(),
            ));
        }
        let in_bounds =
            |p: Point2| p.x >= bounds_min.x && p.x <= bounds_max.x && p.y >= bounds_min.y && p.y <= bounds_max.y;

        let r = &raw.robot;
        let robot_pos = pt(r.start_xy_m);
        if !in_bounds(robot_pos) {
            return Err(invalid(format!(
                "robot.start_xy_m: ({}, {}) outside world bounds",
                robot_pos.x, robot_pos.y
            )));
        }
        if r.v_max_mps <= 0.0 {
            return Err(invalid("robot.v_max_mps: must be positive".into()));
        }
        if r.omega_max_radps <= 0.0 {
            return Err(invalid("robot.omega_max_radps: must be positive".into()));
        }
        if !(0.05..=1.0).contains(&r.radius_m) {
            return Err(invalid(format!(
                "robot.radius_m: must be in [0.05, 1.0], got {}",
                r.radius_m
            )));
        }

        let mut pedestrians = Vec::with_capacity(raw.pedestrians.len());
        let mut seen_ids = std::collections::BTreeSet::new();
        for (i, p) in raw.pedestrians.iter().enumerate() {
            if !seen_ids.insert(p.id) {
                return Err(invalid(format!(
                    "pedestrians[{i}].id: duplicate pedestrian id {}",
                    p.id
                )));
            }
            if !(0.2..=0.5).contains(&p.radius_m) {
                return Err(invalid(format!(
                    "pedestrians[{i}].radius_m: must be in [0.2, 0.5], got {}",
                    p.radius_m
                )));
            }
            let start = pt(p.start_xy_m);
            if !in_bounds(start) {
                return Err(invalid(format!(
                    "pedestrians[{i}].start_xy_m: outside world bounds"
                )));
            }
            let mut script = Vec::with_capacity(p.legs.len());
            for (j, leg) in p.legs.iter().enumerate() {
                if !(leg.speed_mps > 0.0 && leg.speed_mps <= 2.0) {
                    return Err(invalid(format!(
                        "pedestrians[{i}].legs[{j}].speed_mps: must be in (0, 2.0], got {}",
                        leg.speed_mps
                    )));
                }
                if leg.wait_s < 0.0 {
                    return Err(invalid(format!(
                        "pedestrians[{i}].legs[{j}].wait_s: must be non-negative"
                    )));
                }
                let target = pt(leg.target_xy_m);
                if !in_bounds(target) {
                    return Err(invalid(format!(
                        "pedestrians[{i}].legs[{j}].target_xy_m: outside world bounds"
                    )));
                }
                script.push(Waypoint {
                    target,
                    speed_mps: leg.speed_mps,
                    wait_s: leg.wait_s,
                });
            }
            let mut ped = Pedestrian::new(p.id, start, p.radius_m, script);
            ped.household_tag = p.household;
            pedestrians.push(ped);
        }

        let mut obstacles = Vec::with_capacity(raw.obstacles.len());
        for (i, o) in raw.obstacles.iter().enumerate() {
            if o.vertices_m.len() < 3 {
                return Err(invalid(format!(
                    "obstacles[{i}].vertices_m: need at least 3 vertices"
                )));
            }
            let pts: Vec<Point2> = o.vertices_m.iter().map(|&v| pt(v)).collect();
            if let Some(bad) = pts.iter().find(|p| !in_bounds(**p)) {
                return Err(invalid(format!(
                    "obstacles[{i}].vertices_m: ({}, {}) outside world bounds",
                    bad.x, bad.y
                )));
            }
            let polygon = convex_hull(&pts).map_err(|e| {
                invalid(format!("obstacles[{i}].vertices_m: degenerate polygon ({e})"))
            })?;
            obstacles.push(Obstacle { polygon });
        }

        let rgbd = match &raw.rgbd {
            None => None,
            Some(s) => {
                if !(s.fov_deg > 0.0 && s.fov_deg < 180.0) {
                    return Err(invalid(format!(
                        "rgbd.fov_deg: must be in (0, 180), got {}",
                        s.fov_deg
                    )));
                }
                if s.range_m <= 0.0 {
                    return Err(invalid("rgbd.range_m: must be positive".into()));
                }
                if s.width_px < 2 || s.height_px < 1 {
                    return Err(invalid("rgbd.width_px/height_px: image too small".into()));
                }
                if s.noise_sigma_depth_m < 0.0 {
                    return Err(invalid(
                        "rgbd.noise_sigma_depth_m: must be non-negative".into(),
                    ));
                }
                let mut cam = RgbdCameraModel::new(
                    s.fov_deg.to_radians(),
                    s.range_m,
                    s.width_px,
                    s.height_px,
                );
                cam.noise_sigma_depth = s.noise_sigma_depth_m;
                Some(cam)
            }
        };

        let l = &raw.lidar;
        if l.beam_count < 1 {
            return Err(invalid("lidar.beam_count: must be at least 1".into()));
        }
        if !(l.fov_deg > 0.0 && l.fov_deg <= 360.0) {
            return Err(invalid(format!(
                "lidar.fov_deg: must be in (0, 360], got {}",
                l.fov_deg
            )));
        }
        if l.max_range_m <= 0.0 {
            return Err(invalid("lidar.max_range_m: must be positive".into()));
        }
        let lidar = LidarModel {
            beam_count: l.beam_count,
            fov_rad: l.fov_deg.to_radians(),
            max_range: l.max_range_m,
        };

        let mut cctv = Vec::with_capacity(raw.cctv.len());
        for (i, c) in raw.cctv.iter().enumerate() {
            if c.rect_w_m <= 0.0 || c.rect_h_m <= 0.0 {
                return Err(invalid(format!(
                    "cctv[{i}].rect_w_m/rect_h_m: must be positive"
                )));
            }
            if c.scale_m_per_px <= 0.0 {
                return Err(invalid(format!("cctv[{i}].scale_m_per_px: must be positive")));
            }
            if c.resolution_px[0] < 1 || c.resolution_px[1] < 1 {
                return Err(invalid(format!("cctv[{i}].resolution_px: image too small")));
            }
            // The overhead occlusion model divides by (eye height - person
            // height); a camera at or below head height cannot see over
            // anyone.
            if c.eye_height_m <= 1.7 {
                return Err(invalid(format!(
                    "cctv[{i}].eye_height_m: must exceed pedestrian height 1.7, got {}",
                    c.eye_height_m
                )));
            }
            let corners = [
                pt(c.corners_angled_px[0]),
                pt(c.corners_angled_px[1]),
                pt(c.corners_angled_px[2]),
                pt(c.corners_angled_px[3]),
            ];
            let gnd_to_map = Frame2::new(c.gnd_rotation_deg.to_radians(), pt(c.gnd_origin_xy_m));
            let cam = CctvCameraModel::build(
                corners,
                c.rect_w_m,
                c.rect_h_m,
                c.scale_m_per_px,
                gnd_to_map,
                (c.resolution_px[0], c.resolution_px[1]),
                pt(c.eye_xy_m),
                c.eye_height_m,
            )
            .map_err(|e| {
                invalid(format!(
                    "cctv[{i}].corners_angled_px: homography is degenerate ({e})"
                ))
            })?;
            cctv.push(cam);
        }

        let defaults = MonitorConfig::default();
        let m = &raw.monitor;
        let monitor = MonitorConfig {
            distance_threshold: m.distance_threshold_m.unwrap_or(defaults.distance_threshold),
            breach_duration: m.breach_duration_s.unwrap_or(defaults.breach_duration),
            compliance_duration: m
                .compliance_duration_s
                .unwrap_or(defaults.compliance_duration),
            lock_hysteresis: m.lock_hysteresis_frac.unwrap_or(defaults.lock_hysteresis),
            hold_timer_on_dropout: m
                .hold_timer_on_dropout
                .unwrap_or(defaults.hold_timer_on_dropout),
            standoff_distance: m.standoff_m.unwrap_or(defaults.standoff_distance),
            lock_lost_timeout: m.lock_lost_timeout_s.unwrap_or(defaults.lock_lost_timeout),
            pursuit_start_s: m.pursuit_start_s.unwrap_or(defaults.pursuit_start_s),
            idle_is_lawnmower: m.idle_is_lawnmower.unwrap_or(defaults.idle_is_lawnmower),
        };
        if monitor.distance_threshold <= 0.0
            || monitor.breach_duration <= 0.0
            || monitor.compliance_duration <= 0.0
        {
            return Err(invalid(
                "monitor: thresholds and durations must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&monitor.lock_hysteresis) {
            return Err(invalid(format!(
                "monitor.lock_hysteresis_frac: must be in [0, 1), got {}",
                monitor.lock_hysteresis
            )));
        }
        if monitor.standoff_distance <= 0.0 || monitor.lock_lost_timeout <= 0.0 {
            return Err(invalid(
                "monitor.standoff_m/lock_lost_timeout_s: must be positive".into(),
            ));
        }
        if monitor.pursuit_start_s < 0.0 {
            return Err(invalid("monitor.pursuit_start_s: must be non-negative".into()));
        }

        let pdef = PlannerConfig::default();
        let p = &raw.planner;
        let planner = PlannerConfig {
            pfz_horizon_s: p.pfz_horizon_s.unwrap_or(pdef.pfz_horizon_s),
            pfz_trigger_m: p.pfz_trigger_m.unwrap_or(pdef.pfz_trigger_m),
            stop_distance_m: p.stop_distance_m.unwrap_or(pdef.stop_distance_m),
            stop_sector_rad: p
                .stop_sector_deg
                .map(f64::to_radians)
                .unwrap_or(pdef.stop_sector_rad),
            heading_gain: p.heading_gain.unwrap_or(pdef.heading_gain),
            fov_keep_frac: p.fov_keep_frac.unwrap_or(pdef.fov_keep_frac),
            standoff_m: p.standoff_m.unwrap_or(pdef.standoff_m),
        };
        if planner.pfz_horizon_s <= 0.0
            || planner.pfz_trigger_m <= 0.0
            || planner.heading_gain <= 0.0
        {
            return Err(invalid(
                "planner: horizon, trigger distance, and gain must be positive".into(),
            ));
        }
        if planner.stop_distance_m < 0.0 {
            return Err(invalid("planner.stop_distance_m: must be non-negative".into()));
        }
        if !(planner.stop_sector_rad > 0.0 && planner.stop_sector_rad <= std::f64::consts::FRAC_PI_2)
        {
            return Err(invalid("planner.stop_sector_deg: must be in (0, 90]".into()));
        }
        if !(planner.fov_keep_frac > 0.0 && planner.fov_keep_frac <= 1.0) {
            return Err(invalid("planner.fov_keep_frac: must be in (0, 1]".into()));
        }
        if planner.standoff_m <= 0.0 {
            return Err(invalid("planner.standoff_m: must be positive".into()));
        }

        let survey_window = match &raw.survey {
            None => (0.0, w.duration_s),
            Some(s) => {
                let end = s.end_s.unwrap_or(w.duration_s);
                if !(s.start_s >= 0.0 && s.start_s < end && end <= w.duration_s) {
                    return Err(invalid(format!(
                        "survey: window [{}, {}] must be ordered and inside [0, {}]",
                        s.start_s, end, w.duration_s
                    )));
                }
                (s.start_s, end)
            }
        };

        let lawnmower = match &raw.lawnmower {
            None => None,
            Some(s) => {
                let region_min = pt(s.region_min_m);
                let region_max = pt(s.region_max_m);
                if region_max.x <= region_min.x || region_max.y <= region_min.y {
                    return Err(invalid(
                        "lawnmower.region_max_m: must exceed region_min_m on both axes".into(),
                    ));
                }
                if !in_bounds(region_min) || !in_bounds(region_max) {
                    return Err(invalid(
                        "lawnmower.region_min_m/region_max_m: outside world bounds".into(),
                    ));
                }
                let range = match &rgbd {
                    Some(cam) => cam.range_r,
                    None => {
                        return Err(invalid(
                            "lawnmower: requires an [rgbd] section for the coverage range".into(),
                        ))
                    }
                };
                let spacing = s.lane_spacing_m.unwrap_or(range);
                if spacing <= 0.0 {
                    return Err(invalid("lawnmower.lane_spacing_m: must be positive".into()));
                }
                Some(LawnmowerSpec {
                    region_min,
                    region_max,
                    lane_spacing_m: spacing,
                    clip_cctv_footprint: s.clip_cctv_footprint,
                })
            }
        };

        let scenario = Scenario {
            tag: w.tag.clone(),
            seed: w.seed,
            dt_s: w.dt_s,
            duration_s: w.duration_s,
            bounds_min,
            bounds_max,
            robot_start: Frame2::new(r.start_heading_deg.to_radians(), robot_pos),
            v_max: r.v_max_mps,
            omega_max: r.omega_max_radps,
            robot_radius: r.radius_m,
            pedestrians,
            obstacles,
            rgbd,
            lidar,
            cctv,
            monitor,
            planner,
            survey_window,
            lawnmower,
        };

        // Prove the patrol plan exists and covers before anything runs.
        if let Some(spec) = &scenario.lawnmower {
            let range = scenario.rgbd.as_ref().map(|c| c.range_r).unwrap_or(0.0);
            lawnmower_waypoints(
                spec.region_min,
                spec.region_max,
                scenario.lawnmower_footprint(),
                spec.lane_spacing_m,
                range,
            )
            .map_err(|e| invalid(format!("lawnmower.lane_spacing_m: {e}")))?;
        }

        Ok(scenario)
    }
}
