//! Sensor synthesis: what a detector + depth camera, an overhead CCTV
//! camera, and a 2-D lidar would report, given ground truth plus an
//! occlusion and noise model.
//!
//! All senses are pure functions of an immutable `WorldState`; depth noise is
//! drawn from a stream derived from (world seed, step count), so re-running a
//! step reproduces the exact same image.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{
    apply_homography, normalize_angle, point_in_polygon, ray_disk_distance,
    ray_polygon_distance, solve_homography, ConvexPolygon, Frame2, GeometryError, Homography,
    Point2,
};
use crate::simworld::{
    clip_interval, disk_half_angle, disk_hit_distance, merged_length, poly_rel_interval,
    visible_fraction, WorldState,
};

/// Fixed pedestrian body height used for box synthesis and the elevated-
/// camera shadow model.
pub const PED_HEIGHT_M: f64 = 1.7;

/// Depth value for pixels with no return inside the valid range.
pub const NO_RETURN: f64 = f64::INFINITY;

/// Axis-aligned detection box in image pixels. The image y axis points down,
/// so a pedestrian's feet sit at `top_left.y + height_px`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub top_left: Point2,
    pub width_px: f64,
    pub height_px: f64,
    pub ped_id: u32,
}

impl BoundingBox {
    pub fn center_x(&self) -> f64 {
        self.top_left.x + self.width_px / 2.0
    }

    /// Midpoint of the two bottom corners: the feet point.
    pub fn feet(&self) -> Point2 {
        Point2::new(self.center_x(), self.top_left.y + self.height_px)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    /// Row-major, `height * width` values in meters; `NO_RETURN` where no
    /// surface lies within (near, far).
    pub pixels: Vec<f64>,
    pub near_f: f64,
    pub far_r: f64,
    pub width: usize,
    pub height: usize,
}

impl DepthImage {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn is_valid(&self, v: f64) -> bool {
        v > self.near_f && v < self.far_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgbdCameraModel {
    /// Horizontal field of view, radians, in (0, pi).
    pub fov_rad: f64,
    /// Maximum detection range R, meters.
    pub range_r: f64,
    /// Minimum valid depth f, meters.
    pub near_f: f64,
    pub width_px: usize,
    pub height_px: usize,
    /// Camera pose relative to the robot body frame.
    pub mount: Frame2,
    pub noise_sigma_depth: f64,
    /// A pedestrian is detected only if strictly more than this fraction of
    /// its subtended angular interval is unoccluded.
    pub occlusion_f_min: f64,
}

impl RgbdCameraModel {
    pub fn new(fov_rad: f64, range_r: f64, width_px: usize, height_px: usize) -> Self {
        assert!(fov_rad > 0.0 && fov_rad < std::f64::consts::PI);
        RgbdCameraModel {
            fov_rad,
            range_r,
            near_f: 0.3,
            width_px,
            height_px,
            mount: Frame2::identity(),
            noise_sigma_depth: 0.0,
            occlusion_f_min: 0.5,
        }
    }

    /// Pixel column of a camera-frame bearing (X forward, Y left). The
    /// column is linear in bearing, which makes the inverse mapping
    /// `psi = ((w/2 - x) / w) * fov` exact.
    pub fn column_of_bearing(&self, psi: f64) -> f64 {
        let w = self.width_px as f64;
        w / 2.0 - w * psi / self.fov_rad
    }

    pub fn bearing_of_column(&self, x: f64) -> f64 {
        let w = self.width_px as f64;
        (w / 2.0 - x) / w * self.fov_rad
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CctvCameraModel {
    /// Angled-view pixels -> top-view pixels.
    pub homography_m: Homography,
    /// Top-view pixels -> angled-view pixels (inverse of `homography_m`).
    angled_from_top: Homography,
    /// Meters per top-view pixel.
    pub scale_s: f64,
    /// Ground frame (origin at homography-rectangle corner 1, axes along the
    /// top view's X/Y) expressed in the map frame.
    pub gnd_to_map: Frame2,
    /// Map-frame region rectified by the homography; pedestrians outside it
    /// are not detected by this camera.
    pub footprint: ConvexPolygon,
    pub width_px: usize,
    pub height_px: usize,
    /// Ground projection of the camera optical center, map frame.
    pub eye: Point2,
    /// Camera height above the ground plane, meters.
    pub eye_height_m: f64,
    pub occlusion_f_min: f64,
}

impl CctvCameraModel {
    /// Build from the angled-view pixel corners of a ground rectangle of
    /// known metric size. Corner order: the rectangle's (0,0), (w,0), (w,h),
    /// (0,h) corners in ground meters; corner 1 anchors the ground origin.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        corners_angled_px: [Point2; 4],
        rect_w_m: f64,
        rect_h_m: f64,
        scale_s: f64,
        gnd_to_map: Frame2,
        resolution: (usize, usize),
        eye: Point2,
        eye_height_m: f64,
    ) -> Result<Self, GeometryError> {
        let w_px = rect_w_m / scale_s;
        let h_px = rect_h_m / scale_s;
        let top_corners = [
            Point2::new(0.0, 0.0),
            Point2::new(w_px, 0.0),
            Point2::new(w_px, h_px),
            Point2::new(0.0, h_px),
        ];
        let homography_m = solve_homography(&corners_angled_px, &top_corners)?;
        let angled_from_top = homography_m.inverse()?;
        let footprint_vertices: Vec<Point2> = [
            Point2::new(0.0, 0.0),
            Point2::new(rect_w_m, 0.0),
            Point2::new(rect_w_m, rect_h_m),
            Point2::new(0.0, rect_h_m),
        ]
        .iter()
        .map(|p| gnd_to_map.apply(*p))
        .collect();
        let footprint = ConvexPolygon::from_ccw_vertices(footprint_vertices)?;
        Ok(CctvCameraModel {
            homography_m,
            angled_from_top,
            scale_s,
            gnd_to_map,
            footprint,
            width_px: resolution.0,
            height_px: resolution.1,
            eye,
            eye_height_m,
            occlusion_f_min: 0.5,
        })
    }

    pub fn angled_px_of_map_point(&self, map_p: Point2) -> Result<Point2, GeometryError> {
        let gnd = self.gnd_to_map.inverse().apply(map_p);
        let top_px = Point2::new(gnd.x / self.scale_s, gnd.y / self.scale_s);
        apply_homography(&self.angled_from_top, top_px)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarModel {
    pub beam_count: usize,
    /// Angular span, centered on the robot heading.
    pub fov_rad: f64,
    pub max_range: f64,
}

impl Default for LidarModel {
    fn default() -> Self {
        LidarModel {
            beam_count: 241,
            fov_rad: 240.0_f64.to_radians(),
            max_range: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    /// One range per beam, `NO_RETURN` where nothing lies within range.
    pub ranges: Vec<f64>,
    pub fov_rad: f64,
    pub max_range: f64,
}

impl LidarScan {
    /// Beam bearing relative to the robot heading.
    pub fn bearing_of(&self, i: usize) -> f64 {
        let n = self.ranges.len();
        if n == 1 {
            return 0.0;
        }
        -self.fov_rad / 2.0 + i as f64 * self.fov_rad / (n - 1) as f64
    }
}

fn rgbd_camera_pose(world: &WorldState, cam: &RgbdCameraModel) -> Frame2 {
    world.robot.pose.compose(&cam.mount)
}

fn noise_rng(world: &WorldState) -> ChaCha8Rng {
    let mixed = world
        .rng_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(world.step_count.rotate_left(17));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Detector + depth synthesis for the robot-mounted camera.
///
/// A pedestrian yields a box iff its center lies in the FOV cone within
/// (near, range) and strictly more than `occlusion_f_min` of its angular
/// extent is unoccluded. Depth inside boxes is the true center distance plus
/// i.i.d. Gaussian noise; background columns carry the nearest obstacle hit.
pub fn sense_rgbd(world: &WorldState, cam: &RgbdCameraModel) -> (Vec<BoundingBox>, DepthImage) {
    let pose = rgbd_camera_pose(world, cam);
    let eye = pose.translation;
    let inv = pose.inverse();
    let (w, h) = (cam.width_px, cam.height_px);

    // Background: per-column ray cast against obstacles only.
    let mut pixels = vec![NO_RETURN; w * h];
    let mut background = vec![NO_RETURN; w];
    for (col, bg) in background.iter_mut().enumerate() {
        let psi = cam.bearing_of_column(col as f64 + 0.5);
        let ang = pose.rotation + psi;
        let dir = Point2::new(ang.cos(), ang.sin());
        let mut best = NO_RETURN;
        for obs in &world.obstacles {
            if let Some(t) = ray_polygon_distance(eye, dir, &obs.polygon) {
                best = best.min(t);
            }
        }
        if best > cam.near_f && best < cam.range_r {
            *bg = best;
        }
    }
    for row in 0..h {
        pixels[row * w..(row + 1) * w].copy_from_slice(&background);
    }

    // Candidate detections, far to near so nearer bodies overpaint.
    struct Candidate {
        id: u32,
        dist: f64,
        psi: f64,
        radius: f64,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    for ped in &world.pedestrians {
        let local = inv.apply(ped.position);
        let dist = local.norm();
        if dist <= cam.near_f || dist >= cam.range_r {
            continue;
        }
        let psi = local.y.atan2(local.x);
        if psi.abs() > cam.fov_rad / 2.0 {
            continue;
        }
        let blockers: Vec<(Point2, f64)> = world
            .pedestrians
            .iter()
            .filter(|p| p.id != ped.id)
            .map(|p| (p.position, p.radius))
            .collect();
        let frac = visible_fraction(eye, ped.position, ped.radius, &blockers, &world.obstacles);
        if frac > cam.occlusion_f_min {
            candidates.push(Candidate {
                id: ped.id,
                dist,
                psi,
                radius: ped.radius,
            });
        }
    }
    candidates.sort_by(|a, b| b.dist.total_cmp(&a.dist).then(a.id.cmp(&b.id)));

    let mut rng = noise_rng(world);
    let normal = Normal::new(0.0, cam.noise_sigma_depth.max(0.0)).unwrap();
    let px_per_rad = w as f64 / cam.fov_rad;
    let mut boxes: Vec<BoundingBox> = Vec::new();
    for cand in &candidates {
        let alpha = disk_half_angle(cand.dist, cand.radius);
        // Left body edge has the larger bearing, hence the smaller column.
        let x0 = cam.column_of_bearing(cand.psi + alpha).round().max(0.0);
        let x1 = cam
            .column_of_bearing(cand.psi - alpha)
            .round()
            .min(w as f64);
        let x1 = if x1 <= x0 { (x0 + 1.0).min(w as f64) } else { x1 };
        let height_px = (2.0 * (PED_HEIGHT_M / 2.0 / cand.dist).atan() * px_per_rad)
            .round()
            .clamp(1.0, h as f64);
        let y0 = ((h as f64 - height_px) / 2.0).round().max(0.0);
        let y1 = (y0 + height_px).min(h as f64);
        boxes.push(BoundingBox {
            top_left: Point2::new(x0, y0),
            width_px: x1 - x0,
            height_px: y1 - y0,
            ped_id: cand.id,
        });
        for row in y0 as usize..y1 as usize {
            for col in x0 as usize..x1 as usize {
                // An obstacle in front of this body keeps its pixels.
                if background[col] < cand.dist {
                    continue;
                }
                let v = cand.dist
                    + if cam.noise_sigma_depth > 0.0 {
                        normal.sample(&mut rng)
                    } else {
                        0.0
                    };
                pixels[row * w + col] = if v > cam.near_f && v < cam.range_r {
                    v
                } else {
                    NO_RETURN
                };
            }
        }
    }
    boxes.sort_by_key(|b| b.ped_id);

    (
        boxes,
        DepthImage {
            pixels,
            near_f: cam.near_f,
            far_r: cam.range_r,
            width: w,
            height: h,
        },
    )
}

/// Visibility under the elevated-camera shadow model: a blocker of height
/// `PED_HEIGHT_M` at ground distance `d_b` from the camera's ground point
/// shadows the ground band (d_b, d_b * h_c / (h_c - h_ped)); a target's feet
/// are hidden only inside that band. Obstacles block at full height.
fn cctv_visible_fraction(world: &WorldState, cam: &CctvCameraModel, target_id: u32) -> f64 {
    let target = world.pedestrian(target_id).expect("target exists");
    let to_t = target.position.sub(cam.eye);
    let d_t = to_t.norm();
    if d_t <= target.radius {
        return 1.0;
    }
    let theta_t = to_t.angle();
    let alpha_t = disk_half_angle(d_t, target.radius);
    let shadow_gain = if cam.eye_height_m > PED_HEIGHT_M {
        cam.eye_height_m / (cam.eye_height_m - PED_HEIGHT_M)
    } else {
        f64::INFINITY
    };

    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for ped in &world.pedestrians {
        if ped.id == target_id {
            continue;
        }
        let to_b = ped.position.sub(cam.eye);
        let d_b = to_b.norm();
        if d_b <= ped.radius {
            return 0.0;
        }
        if d_t <= d_b || d_t >= d_b * shadow_gain {
            continue;
        }
        let delta = normalize_angle(to_b.angle() - theta_t);
        let alpha_b = disk_half_angle(d_b, ped.radius);
        clip_interval(delta - alpha_b, delta + alpha_b, alpha_t, &mut pieces);
    }
    for obs in &world.obstacles {
        let Some((lo, hi)) = poly_rel_interval(cam.eye, theta_t, &obs.polygon) else {
            return 0.0;
        };
        let mut clipped = Vec::new();
        clip_interval(lo, hi, alpha_t, &mut clipped);
        for (a, b) in clipped {
            let mid = 0.5 * (a + b);
            let ang = theta_t + mid;
            let dir = Point2::new(ang.cos(), ang.sin());
            let target_hit = disk_hit_distance(d_t, target.radius, mid);
            match ray_polygon_distance(cam.eye, dir, &obs.polygon) {
                Some(t) if t < target_hit => pieces.push((a, b)),
                _ => {}
            }
        }
    }
    let covered = merged_length(&mut pieces);
    (1.0 - covered / (2.0 * alpha_t)).clamp(0.0, 1.0)
}

/// Overhead camera detections: a subpixel box per pedestrian inside the
/// footprint whose feet are visible under the shadow model. Box bottom-center
/// sits exactly at the angled-view image of the ground position.
pub fn sense_cctv(world: &WorldState, cam: &CctvCameraModel) -> Vec<BoundingBox> {
    let mut boxes: Vec<BoundingBox> = Vec::new();
    for ped in &world.pedestrians {
        if !point_in_polygon(&cam.footprint, ped.position) {
            continue;
        }
        if cctv_visible_fraction(world, cam, ped.id) <= cam.occlusion_f_min {
            continue;
        }
        let Ok(feet) = cam.angled_px_of_map_point(ped.position) else {
            continue;
        };
        if feet.x < 0.0
            || feet.x > cam.width_px as f64
            || feet.y < 0.0
            || feet.y > cam.height_px as f64
        {
            continue;
        }
        // Apparent size falls off with ground distance from the camera; only
        // the feet point feeds localization.
        let d_eye = ped.position.dist(cam.eye).max(1.0);
        let height_px = (160.0 / d_eye).max(2.0);
        let width_px = 0.4 * height_px;
        boxes.push(BoundingBox {
            top_left: Point2::new(feet.x - width_px / 2.0, feet.y - height_px),
            width_px,
            height_px,
            ped_id: ped.id,
        });
    }
    boxes.sort_by_key(|b| b.ped_id);
    boxes
}

/// Fixed-bearing ray casts against obstacle polygons and pedestrian disks.
pub fn sense_lidar(world: &WorldState, pose: Frame2, model: &LidarModel) -> LidarScan {
    let eye = pose.translation;
    let n = model.beam_count;
    let mut ranges = vec![NO_RETURN; n];
    for (i, out) in ranges.iter_mut().enumerate() {
        let rel = if n == 1 {
            0.0
        } else {
            -model.fov_rad / 2.0 + i as f64 * model.fov_rad / (n - 1) as f64
        };
        let ang = pose.rotation + rel;
        let dir = Point2::new(ang.cos(), ang.sin());
        let mut best = NO_RETURN;
        for obs in &world.obstacles {
            if let Some(t) = ray_polygon_distance(eye, dir, &obs.polygon) {
                best = best.min(t);
            }
        }
        for ped in &world.pedestrians {
            if let Some(t) = ray_disk_distance(eye, dir, ped.position, ped.radius) {
                best = best.min(t);
            }
        }
        if best > 0.0 && best <= model.max_range {
            *out = best;
        }
    }
    LidarScan {
        ranges,
        fov_rad: model.fov_rad,
        max_range: model.max_range,
    }
}

/// Optional track-ID indirection. With `reassign_on_reentry` false (the
/// default) ground-truth IDs pass through untouched; with it true, a
/// pedestrian that leaves the view and returns receives a fresh ID, modeling
/// a tracker with no re-association memory.
#[derive(Debug, Clone)]
pub struct IdTracker {
    reassign_on_reentry: bool,
    next_fresh: u32,
    assigned: std::collections::BTreeMap<u32, u32>,
    visible_last: std::collections::BTreeSet<u32>,
}

impl IdTracker {
    pub fn new(reassign_on_reentry: bool, first_fresh: u32) -> Self {
        IdTracker {
            reassign_on_reentry,
            next_fresh: first_fresh,
            assigned: Default::default(),
            visible_last: Default::default(),
        }
    }

    pub fn remap(&mut self, boxes: &mut [BoundingBox]) {
        let now: std::collections::BTreeSet<u32> = boxes.iter().map(|b| b.ped_id).collect();
        if self.reassign_on_reentry {
            for b in boxes.iter_mut() {
                let gt = b.ped_id;
                let fresh_needed =
                    !self.visible_last.contains(&gt) && self.assigned.contains_key(&gt);
                if fresh_needed {
                    self.assigned.insert(gt, self.next_fresh);
                    self.next_fresh += 1;
                }
                let id = *self.assigned.entry(gt).or_insert(gt);
                b.ped_id = id;
            }
        }
        self.visible_last = now;
    }
}
