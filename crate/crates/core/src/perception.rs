//! Detection-to-position pipelines: bearing + depth aggregation for the
//! robot camera, feet-point homography for the overhead camera, and pairwise
//! real-world distances between localized pedestrians.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{apply_homography, GeometryError, Point2};
use crate::sensors::{BoundingBox, CctvCameraModel, DepthImage, RgbdCameraModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    /// Fewer than 10 valid depth pixels inside the box (occluded or
    /// sentinel-filled region).
    #[error("insufficient valid depth pixels inside box: {0}")]
    InsufficientDepth(usize),
    /// Pairwise distances require one frame and one source across inputs.
    #[error("localized pedestrians mix frames or sources")]
    MixedFrames,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameTag {
    Robot,
    Gnd,
    Map,
}

/// Which sensing path produced a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    Rgbd,
    Cctv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedPedestrian {
    pub ped_id: u32,
    pub position: Point2,
    pub frame: FrameTag,
    pub source: Source,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistance {
    /// Invariant: id_a < id_b.
    pub id_a: u32,
    pub id_b: u32,
    pub distance: f64,
    pub timestamp: f64,
    pub source: Source,
}

/// Mean of the smallest ceil(10%) valid depth pixels inside the box — the
/// nearest-surface aggregate that rejects background bleed-through.
fn min10_depth(depth: &DepthImage, b: &BoundingBox) -> Result<f64, PerceptionError> {
    let x0 = b.top_left.x.max(0.0) as usize;
    let y0 = b.top_left.y.max(0.0) as usize;
    let x1 = ((b.top_left.x + b.width_px).ceil() as usize).min(depth.width);
    let y1 = ((b.top_left.y + b.height_px).ceil() as usize).min(depth.height);
    let mut vals: Vec<f64> = Vec::with_capacity((x1 - x0) * (y1 - y0));
    for row in y0..y1 {
        for col in x0..x1 {
            let v = depth.at(row, col);
            if depth.is_valid(v) {
                vals.push(v);
            }
        }
    }
    if vals.len() < 10 {
        return Err(PerceptionError::InsufficientDepth(vals.len()));
    }
    let k = ((vals.len() as f64 * 0.10).ceil() as usize).max(1);
    vals.sort_by(f64::total_cmp);
    Ok(vals[..k].iter().sum::<f64>() / k as f64)
}

/// Robot-camera localization: bearing from the box centroid column
/// (`psi = ((w/2 - x_cen)/w) * fov`), range from the min-10% depth aggregate,
/// position in the robot frame (X forward, Y left).
pub fn localize_rgbd(
    b: &BoundingBox,
    depth: &DepthImage,
    cam: &RgbdCameraModel,
    timestamp: f64,
) -> Result<LocalizedPedestrian, PerceptionError> {
    let d_avg = min10_depth(depth, b)?;
    let psi = cam.bearing_of_column(b.center_x());
    Ok(LocalizedPedestrian {
        ped_id: b.ped_id,
        position: Point2::new(d_avg * psi.cos(), d_avg * psi.sin()),
        frame: FrameTag::Robot,
        source: Source::Rgbd,
        timestamp,
    })
}

/// Overhead-camera localization: feet point (midpoint of the box's bottom
/// corners) through the rectifying homography, scaled into ground meters.
/// The ground origin is the homography rectangle's corner 1 at top-view
/// pixel (0,0), with axes along the top view's X/Y.
pub fn localize_cctv(
    b: &BoundingBox,
    cam: &CctvCameraModel,
    timestamp: f64,
) -> Result<LocalizedPedestrian, PerceptionError> {
    let feet_top = apply_homography(&cam.homography_m, b.feet())?;
    Ok(LocalizedPedestrian {
        ped_id: b.ped_id,
        position: Point2::new(feet_top.x * cam.scale_s, feet_top.y * cam.scale_s),
        frame: FrameTag::Gnd,
        source: Source::Cctv,
        timestamp,
    })
}

/// Lift a ground-frame CCTV measurement into the map frame.
pub fn to_map_frame(lp: &LocalizedPedestrian, cam: &CctvCameraModel) -> LocalizedPedestrian {
    assert_eq!(lp.frame, FrameTag::Gnd, "only gnd-frame positions lift");
    LocalizedPedestrian {
        position: cam.gnd_to_map.apply(lp.position),
        frame: FrameTag::Map,
        ..*lp
    }
}

/// All C(n,2) Euclidean distances. Inputs must share one frame and source.
pub fn pairwise_distances(
    peds: &[LocalizedPedestrian],
) -> Result<Vec<PairDistance>, PerceptionError> {
    if let Some(first) = peds.first() {
        if peds
            .iter()
            .any(|p| p.frame != first.frame || p.source != first.source)
        {
            return Err(PerceptionError::MixedFrames);
        }
    }
    let mut out = Vec::with_capacity(peds.len() * peds.len().saturating_sub(1) / 2);
    for i in 0..peds.len() {
        for j in (i + 1)..peds.len() {
            let (a, b) = (&peds[i], &peds[j]);
            let (id_a, id_b) = if a.ped_id < b.ped_id {
                (a.ped_id, b.ped_id)
            } else {
                (b.ped_id, a.ped_id)
            };
            out.push(PairDistance {
                id_a,
                id_b,
                distance: a.position.dist(b.position),
                timestamp: a.timestamp.max(b.timestamp),
                source: a.source,
            });
        }
    }
    Ok(out)
}
