//! Planar geometry primitives: points, rigid frames, homographies, convex hulls.
//!
//! Everything downstream (world stepping, camera synthesis, localization,
//! freezing-zone construction) is built on these types. All angles are in
//! radians; degrees appear only at config boundaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    /// Three of the four correspondence points are (near-)collinear.
    #[error("degenerate correspondence: 3 of 4 points collinear")]
    DegenerateCorrespondence,
    /// Homogeneous w-component vanished; the point maps to infinity.
    #[error("point maps to infinity under homography")]
    PointAtInfinity,
    #[error("empty input point set")]
    EmptyInput,
    #[error("matrix is not invertible")]
    NonInvertible,
}

/// Normalize an angle to `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = (std::f64::consts::PI - a).rem_euclid(2.0 * std::f64::consts::PI);
    std::f64::consts::PI - r
}

/// A point (or free vector) in the plane, in meters unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Alias used where a value is a displacement or velocity rather than a position.
pub type Vec2 = Point2;

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product `self x o`.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }

    /// Bearing of this vector, `atan2(y, x)`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn unit(self) -> Point2 {
        let n = self.norm();
        if n == 0.0 {
            Point2::ZERO
        } else {
            self.scale(1.0 / n)
        }
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        self.scale(k)
    }
}

/// Rigid 2-D transform: rotation followed by translation.
///
/// `apply` maps a point expressed in the local frame into the parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame2 {
    /// Rotation in radians, normalized to `(-pi, pi]`.
    pub rotation: f64,
    pub translation: Point2,
}

impl Frame2 {
    pub fn new(rotation: f64, translation: Point2) -> Self {
        Frame2 {
            rotation: normalize_angle(rotation),
            translation,
        }
    }

    pub fn identity() -> Self {
        Frame2 {
            rotation: 0.0,
            translation: Point2::ZERO,
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.rotation.sin_cos();
        Point2::new(
            c * p.x - s * p.y + self.translation.x,
            s * p.x + c * p.y + self.translation.y,
        )
    }

    /// Rotate a free vector (no translation).
    pub fn rotate(&self, v: Vec2) -> Vec2 {
        let (s, c) = self.rotation.sin_cos();
        Point2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// `self.compose(other).apply(p) == self.apply(other.apply(p))`.
    pub fn compose(&self, other: &Frame2) -> Frame2 {
        Frame2::new(
            self.rotation + other.rotation,
            self.apply(other.translation),
        )
    }

    pub fn inverse(&self) -> Frame2 {
        let (s, c) = self.rotation.sin_cos();
        let t = self.translation;
        Frame2::new(
            -self.rotation,
            Point2::new(-(c * t.x + s * t.y), -(-s * t.x + c * t.y)),
        )
    }
}

/// Planar homography, stored row-major with `m[2][2]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Homography {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let m = &self.m;
        let det = self.det();
        if det.abs() <= 1e-12 {
            return Err(GeometryError::NonInvertible);
        }
        // Adjugate / det, then renormalize so m[2][2] = 1.
        let inv = [
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det,
            ],
        ];
        let w = inv[2][2];
        if w.abs() <= 1e-12 {
            return Err(GeometryError::NonInvertible);
        }
        let mut out = inv;
        for row in &mut out {
            for v in row.iter_mut() {
                *v /= w;
            }
        }
        Ok(Homography { m: out })
    }
}

/// Convex polygon with vertices in counter-clockwise order.
///
/// Degenerate hulls of one or two points are legal (a freezing zone over one
/// or two predicted pedestrians is a point or segment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Build directly from vertices assumed CCW-convex; used for axis-aligned
    /// rectangles and scenario obstacles, validated by `convex_hull` of the
    /// same points.
    pub fn from_ccw_vertices(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        let hull = convex_hull(&vertices)?;
        Ok(hull)
    }

    pub fn rectangle(min: Point2, max: Point2) -> Self {
        ConvexPolygon {
            vertices: vec![
                min,
                Point2::new(max.x, min.y),
                max,
                Point2::new(min.x, max.y),
            ],
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let mut acc = Point2::ZERO;
        for v in &self.vertices {
            acc = acc.add(*v);
        }
        acc.scale(1.0 / n)
    }

    /// Minimum distance from `p` to the polygon boundary or interior (0 inside).
    pub fn distance_to(&self, p: Point2) -> f64 {
        if point_in_polygon(self, p) {
            return 0.0;
        }
        let n = self.vertices.len();
        if n == 1 {
            return p.dist(self.vertices[0]);
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if n == 2 && i == 1 {
                break;
            }
            best = best.min(dist_point_segment(p, a, b));
        }
        best
    }
}

/// Nearest non-negative ray parameter `t` where `origin + t*dir` meets the
/// segment `[a, b]`, with `dir` a unit vector. Collinear overlap is ignored.
pub fn ray_segment_distance(origin: Point2, dir: Vec2, a: Point2, b: Point2) -> Option<f64> {
    let e = b.sub(a);
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a.sub(origin);
    let t = ao.cross(e) / denom;
    let s = ao.cross(dir) / denom;
    if t >= -1e-12 && (-1e-12..=1.0 + 1e-12).contains(&s) {
        Some(t.max(0.0))
    } else {
        None
    }
}

/// Nearest non-negative ray parameter where the ray meets a disk boundary.
/// An origin inside the disk yields the exit distance.
pub fn ray_disk_distance(origin: Point2, dir: Vec2, center: Point2, radius: f64) -> Option<f64> {
    let oc = center.sub(origin);
    let proj = dir.dot(oc);
    let disc = proj * proj - (oc.dot(oc) - radius * radius);
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = proj - sq;
    if t0 >= 0.0 {
        return Some(t0);
    }
    let t1 = proj + sq;
    if t1 >= 0.0 {
        return Some(t1);
    }
    None
}

/// Nearest non-negative ray parameter over all polygon edges.
pub fn ray_polygon_distance(origin: Point2, dir: Vec2, poly: &ConvexPolygon) -> Option<f64> {
    let v = poly.vertices();
    let n = v.len();
    if n < 2 {
        return None;
    }
    let mut best: Option<f64> = None;
    for i in 0..n {
        if n == 2 && i == 1 {
            break;
        }
        if let Some(t) = ray_segment_distance(origin, dir, v[i], v[(i + 1) % n]) {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    }
    best
}

pub fn dist_point_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

const COLLINEAR_TOL: f64 = 1e-9;

fn any_three_collinear(pts: &[Point2; 4]) -> bool {
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                let c = pts[j].sub(pts[i]).cross(pts[k].sub(pts[i]));
                if c.abs() < COLLINEAR_TOL {
                    return true;
                }
            }
        }
    }
    false
}

/// Solve the 8-unknown direct linear system mapping four source points to
/// four destination points, with `m[2][2] = 1`.
pub fn solve_homography(
    src: &[Point2; 4],
    dst: &[Point2; 4],
) -> Result<Homography, GeometryError> {
    if any_three_collinear(src) || any_three_collinear(dst) {
        return Err(GeometryError::DegenerateCorrespondence);
    }
    let mut a = nalgebra::SMatrix::<f64, 8, 8>::zeros();
    let mut b = nalgebra::SVector::<f64, 8>::zeros();
    for (i, (s, d)) in src.iter().zip(dst.iter()).enumerate() {
        let r = 2 * i;
        a[(r, 0)] = s.x;
        a[(r, 1)] = s.y;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -d.x * s.x;
        a[(r, 7)] = -d.x * s.y;
        b[r] = d.x;
        a[(r + 1, 3)] = s.x;
        a[(r + 1, 4)] = s.y;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -d.y * s.x;
        a[(r + 1, 7)] = -d.y * s.y;
        b[r + 1] = d.y;
    }
    let h = a
        .lu()
        .solve(&b)
        .ok_or(GeometryError::DegenerateCorrespondence)?;
    let hom = Homography {
        m: [
            [h[0], h[1], h[2]],
            [h[3], h[4], h[5]],
            [h[6], h[7], 1.0],
        ],
    };
    if hom.det().abs() <= 1e-9 {
        return Err(GeometryError::DegenerateCorrespondence);
    }
    Ok(hom)
}

/// Apply a homography to a point; errors if the image lies at infinity.
pub fn apply_homography(h: &Homography, p: Point2) -> Result<Point2, GeometryError> {
    let m = &h.m;
    let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
    if w.abs() <= 1e-9 {
        return Err(GeometryError::PointAtInfinity);
    }
    Ok(Point2::new(
        (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
        (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
    ))
}

/// Minimal counter-clockwise hull via monotone chain; collinear points on an
/// edge are pruned. One or two distinct input points yield degenerate hulls.
pub fn convex_hull(points: &[Point2]) -> Result<ConvexPolygon, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() <= 2 {
        return Ok(ConvexPolygon { vertices: pts });
    }

    let turn = |o: Point2, a: Point2, b: Point2| a.sub(o).cross(b.sub(o));
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 2 {
        // All points collinear: monotone chain collapses; fall back to extremes.
        lower = vec![pts[0], pts[pts.len() - 1]];
    }
    Ok(ConvexPolygon { vertices: lower })
}

const INSIDE_TOL: f64 = 1e-9;

/// True iff `p` lies inside or on the boundary (tolerance 1e-9 m).
pub fn point_in_polygon(poly: &ConvexPolygon, p: Point2) -> bool {
    let v = &poly.vertices;
    match v.len() {
        0 => false,
        1 => p.dist(v[0]) <= INSIDE_TOL,
        2 => dist_point_segment(p, v[0], v[1]) <= INSIDE_TOL,
        n => {
            for i in 0..n {
                let a = v[i];
                let b = v[(i + 1) % n];
                if b.sub(a).cross(p.sub(a)) < -INSIDE_TOL {
                    return false;
                }
            }
            true
        }
    }
}
