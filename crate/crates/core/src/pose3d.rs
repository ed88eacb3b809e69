//! Frame-to-frame 3D motion from per-part corners.
//!
//! Axes follow the image: `x` right, `y` down in pixels; `z` is the depth
//! proxy `f * S / sqrt(A)` in focal-pixel units. Yaw is about the viewing
//! axis and positive counter-clockwise as seen by the viewer, so an image
//! rotation by `+a` (clockwise on screen) is a yaw of `-a`.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CameraModel, Config, PartId};
use crate::frames::LabelFrame;
use crate::geom2d::{edge_directions, internal_angles, GeomError, Point2, QuadCorners};
use crate::tracker2d::{track_sequence_2d, Frame2DResult, PartDetection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoseError {
    #[error("degenerate area {0}")]
    DegenerateArea(f64),
    #[error("non-positive scale {0}")]
    DegenerateScale(f64),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("empty frame sequence")]
    EmptySequence,
    #[error("frame {0} does not follow frame {1}")]
    FrameOrder(u64, u64),
}

/// Which internal-angle sums define roll and pitch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    /// `e_r = a1 + a4 - a2 - a3`, `e_p = a3 + a4 - a1 - a2`.
    #[default]
    Algorithm,
    /// `e_r = a1 + a2 - a3 - a4`, `e_p = a1 + a4 - a2 - a3`.
    Prose,
}

impl AngleConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            AngleConvention::Algorithm => "algorithm",
            AngleConvention::Prose => "prose",
        }
    }
}

/// Scale used in the depth estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    /// `S^n = A^n / A^(n-1)`.
    #[default]
    PerFrame,
    /// `S^n = A^n / A^b` with `b` the last reinitialized frame.
    Cumulative,
}

fn default_area_jump() -> f64 {
    0.5
}

fn default_centroid_jump() -> f64 {
    0.2
}

/// Camera-motion detection limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReinitThresholds {
    /// Area ratio outside `[1/(1+a), 1+a]` counts as camera motion.
    #[serde(default = "default_area_jump")]
    pub area_jump: f64,
    /// Centroid jump as a fraction of the image diagonal.
    #[serde(default = "default_centroid_jump")]
    pub centroid_jump: f64,
}

impl Default for ReinitThresholds {
    fn default() -> Self {
        Self {
            area_jump: default_area_jump(),
            centroid_jump: default_centroid_jump(),
        }
    }
}

pub fn scale_change(area_n: f64, area_prev: f64) -> Result<f64, PoseError> {
    if area_prev <= 0.0 || !area_prev.is_finite() {
        return Err(PoseError::DegenerateArea(area_prev));
    }
    if area_n < 0.0 || !area_n.is_finite() {
        return Err(PoseError::DegenerateArea(area_n));
    }
    Ok(area_n / area_prev)
}

/// `z = f * S / sqrt(A)`.
pub fn depth_estimate(scale: f64, area: f64, cam: &CameraModel) -> Result<f64, PoseError> {
    if area <= 0.0 || !area.is_finite() {
        return Err(PoseError::DegenerateArea(area));
    }
    if scale <= 0.0 || !scale.is_finite() {
        return Err(PoseError::DegenerateScale(scale));
    }
    Ok(cam.focal_px * scale / area.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleFeatures {
    pub angles: [f64; 4],
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

pub fn angle_features(
    q: &QuadCorners,
    convention: AngleConvention,
) -> Result<AngleFeatures, PoseError> {
    let pts = q.points();
    let a = internal_angles(pts)?;
    let (roll, pitch) = match convention {
        AngleConvention::Algorithm => (a[0] + a[3] - a[1] - a[2], a[2] + a[3] - a[0] - a[1]),
        AngleConvention::Prose => (a[0] + a[1] - a[2] - a[3], a[0] + a[3] - a[1] - a[2]),
    };
    let incl: f64 = edge_directions(pts)?.iter().map(|e| e.inclination()).sum();
    Ok(AngleFeatures {
        angles: a,
        roll,
        pitch,
        yaw: (PI - incl) / 4.0,
    })
}

/// Yaw feature difference, wrapped to `[-pi/8, pi/8)`.
///
/// The inclination fold moves the feature by `pi/4` whenever an edge
/// crosses vertical or horizontal; those jumps are not motion.
pub fn yaw_delta(yaw_n: f64, yaw_prev: f64) -> f64 {
    let d = yaw_n - yaw_prev;
    d - FRAC_PI_4 * ((d + FRAC_PI_8) / FRAC_PI_4).floor()
}

/// `T_Z(dz) * T_Y(dy) * T_X(dx)` with the literal matrix layout: the
/// planar deltas sit in the third column and `dz` on the diagonal.
pub fn translation_matrix(dx: f64, dy: f64, dz: f64) -> Matrix3<f64> {
    let tz = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, dz);
    let ty = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, dy, 0.0, 0.0, 1.0);
    let tx = Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    tz * ty * tx
}

/// `R_Z(yaw) * R_Y(pitch) * R_X(roll)`.
pub fn rotation_matrix(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    rz * ry * rx
}

fn part_jumped(
    curr: &PartDetection,
    prev: &PartDetection,
    diagonal: f64,
    t: &ReinitThresholds,
) -> bool {
    let (a1, a0) = (curr.corners.area(), prev.corners.area());
    if a0.is_nan() || a1.is_nan() || a0 <= 0.0 || a1 <= 0.0 {
        return true;
    }
    let ratio = a1 / a0;
    if ratio > 1.0 + t.area_jump || ratio < 1.0 / (1.0 + t.area_jump) {
        return true;
    }
    curr.corners.centroid().distance(prev.corners.centroid()) > t.centroid_jump * diagonal
}

/// True when any part present in both frames changes area or position by
/// more than the thresholds allow.
pub fn detect_camera_motion(
    curr: &Frame2DResult,
    prev: &Frame2DResult,
    t: &ReinitThresholds,
) -> bool {
    let diagonal = curr.diagonal();
    curr.parts.iter().any(
        |slot| match (slot.detection.as_ref(), prev.part(slot.part_id)) {
            (Some(c), Some(p)) => part_jumped(c, p, diagonal, t),
            _ => false,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReinitReason {
    FirstFrame,
    /// The part was missing in the previous frame.
    Reappeared,
    CameraMotion,
}

/// Running sums anchored at the first frame's centroid and depth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cumulative {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartPose {
    pub n: u64,
    pub k: PartId,
    pub present: bool,
    pub reinit: Option<ReinitReason>,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub droll: f64,
    pub dpitch: f64,
    pub dyaw: f64,
    /// Depth estimate; zero when the part is missing.
    pub z_abs: f64,
    pub scale: f64,
    pub area: f64,
    pub centroid: Point2,
    pub features: Option<AngleFeatures>,
    pub cumulative: Cumulative,
    pub t: Matrix3<f64>,
    pub r: Matrix3<f64>,
}

impl PartPose {
    fn missing(n: u64, k: PartId, cumulative: Cumulative) -> Self {
        Self {
            n,
            k,
            present: false,
            reinit: None,
            dx: 0.0,
            dy: 0.0,
            dz: 0.0,
            droll: 0.0,
            dpitch: 0.0,
            dyaw: 0.0,
            z_abs: 0.0,
            scale: 1.0,
            area: 0.0,
            centroid: Point2::default(),
            features: None,
            cumulative,
            t: translation_matrix(0.0, 0.0, 0.0),
            r: Matrix3::identity(),
        }
    }

    pub fn deltas(&self) -> [f64; 6] {
        [
            self.dx,
            self.dy,
            self.dz,
            self.droll,
            self.dpitch,
            self.dyaw,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Observation {
    centroid: Point2,
    area: f64,
    z: f64,
    features: AngleFeatures,
}

/// Fold state for one part.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartState {
    last: Option<Observation>,
    base_area: f64,
    cumulative: Option<Cumulative>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseOptions {
    pub convention: AngleConvention,
    pub depth_mode: DepthMode,
    pub reinit: ReinitThresholds,
}

impl PoseOptions {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            convention: cfg.tracker.angle_convention,
            depth_mode: cfg.tracker.depth_mode,
            reinit: cfg.tracker.reinit,
        }
    }
}

fn observe(
    det: &PartDetection,
    state: &PartState,
    reinit: bool,
    cam: &CameraModel,
    opts: &PoseOptions,
) -> Result<(Observation, f64, f64), PoseError> {
    let area = det.corners.area();
    let features = angle_features(&det.corners, opts.convention)?;
    let (scale, base_area) = match (reinit, state.last.as_ref()) {
        (false, Some(prev)) => match opts.depth_mode {
            DepthMode::PerFrame => (scale_change(area, prev.area)?, state.base_area),
            DepthMode::Cumulative => (scale_change(area, state.base_area)?, state.base_area),
        },
        _ => (1.0, area),
    };
    let z = depth_estimate(scale, area, cam)?;
    Ok((
        Observation {
            centroid: det.corners.centroid(),
            area,
            z,
            features,
        },
        scale,
        base_area,
    ))
}

/// One step of the pose fold for part `k` at frame `n`.
pub fn pose_step(
    n: u64,
    k: PartId,
    det: Option<&PartDetection>,
    camera_moved: bool,
    state: &mut PartState,
    cam: &CameraModel,
    opts: &PoseOptions,
) -> Result<PartPose, PoseError> {
    let carried = state.cumulative.unwrap_or_default();
    let Some(det) = det else {
        state.last = None;
        return Ok(PartPose::missing(n, k, carried));
    };
    let reason = match (&state.last, state.cumulative) {
        (_, None) => Some(ReinitReason::FirstFrame),
        (None, Some(_)) => Some(ReinitReason::Reappeared),
        (Some(_), _) if camera_moved => Some(ReinitReason::CameraMotion),
        _ => None,
    };
    let (obs, scale, base_area) = observe(det, state, reason.is_some(), cam, opts)?;
    let mut d = [0.0; 6];
    if let (None, Some(prev)) = (reason, state.last.as_ref()) {
        d = [
            obs.centroid.x - prev.centroid.x,
            obs.centroid.y - prev.centroid.y,
            obs.z - prev.z,
            obs.features.roll - prev.features.roll,
            obs.features.pitch - prev.features.pitch,
            yaw_delta(obs.features.yaw, prev.features.yaw),
        ];
    }
    let mut cum = match state.cumulative {
        Some(c) => c,
        None => Cumulative {
            x: obs.centroid.x,
            y: obs.centroid.y,
            z: obs.z,
            ..Cumulative::default()
        },
    };
    cum.x += d[0];
    cum.y += d[1];
    cum.z += d[2];
    cum.roll += d[3];
    cum.pitch += d[4];
    cum.yaw += d[5];
    state.last = Some(obs);
    state.base_area = base_area;
    state.cumulative = Some(cum);
    Ok(PartPose {
        n,
        k,
        present: true,
        reinit: reason,
        dx: d[0],
        dy: d[1],
        dz: d[2],
        droll: d[3],
        dpitch: d[4],
        dyaw: d[5],
        z_abs: obs.z,
        scale,
        area: obs.area,
        centroid: obs.centroid,
        features: Some(obs.features),
        cumulative: cum,
        t: translation_matrix(d[0], d[1], d[2]),
        r: rotation_matrix(d[3], d[4], d[5]),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReinitEvent {
    pub n: u64,
    pub k: PartId,
    pub reason: ReinitReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentTrack {
    pub camera: CameraModel,
    pub options: PoseOptions,
    pub part_ids: Vec<PartId>,
    pub frames: Vec<u64>,
    /// `poses[i][j]`: frame `frames[i]`, part `part_ids[j]`.
    pub poses: Vec<Vec<PartPose>>,
    /// Source 2D results, one per frame.
    pub boxes: Vec<Frame2DResult>,
    pub reinit_events: Vec<ReinitEvent>,
}

impl InstrumentTrack {
    pub fn rows(&self) -> impl Iterator<Item = &PartPose> {
        self.poses.iter().flatten()
    }

    pub fn part(&self, k: PartId) -> impl Iterator<Item = &PartPose> {
        let j = self.part_ids.iter().position(|&p| p == k);
        self.poses.iter().filter_map(move |row| j.map(|j| &row[j]))
    }

    /// Product of per-frame scales for part `k`.
    pub fn scale_product(&self, k: PartId) -> f64 {
        self.part(k)
            .filter(|p| p.present)
            .map(|p| p.scale)
            .product()
    }
}

/// Sequential pose fold over 2D results.
pub fn track_from_boxes(
    boxes: Vec<Frame2DResult>,
    cam: &CameraModel,
    opts: &PoseOptions,
) -> Result<InstrumentTrack, PoseError> {
    let first = boxes.first().ok_or(PoseError::EmptySequence)?;
    let part_ids: Vec<PartId> = first.parts.iter().map(|s| s.part_id).collect();
    let mut states = vec![PartState::default(); part_ids.len()];
    let mut poses = Vec::with_capacity(boxes.len());
    let mut events = Vec::new();
    for (i, frame) in boxes.iter().enumerate() {
        let prev = if i > 0 { Some(&boxes[i - 1]) } else { None };
        if let Some(p) = prev {
            if frame.index <= p.index {
                return Err(PoseError::FrameOrder(frame.index, p.index));
            }
        }
        let moved = prev.is_some_and(|p| detect_camera_motion(frame, p, &opts.reinit));
        let mut row = Vec::with_capacity(part_ids.len());
        for (j, &k) in part_ids.iter().enumerate() {
            let pose = pose_step(
                frame.index,
                k,
                frame.part(k),
                moved,
                &mut states[j],
                cam,
                opts,
            )?;
            if let Some(reason) = pose.reinit {
                events.push(ReinitEvent {
                    n: frame.index,
                    k,
                    reason,
                });
            }
            row.push(pose);
        }
        poses.push(row);
    }
    Ok(InstrumentTrack {
        camera: *cam,
        options: *opts,
        part_ids,
        frames: boxes.iter().map(|b| b.index).collect(),
        poses,
        boxes,
        reinit_events: events,
    })
}

/// Boxes then poses for a loaded sequence.
pub fn track_instrument(
    frames: &[LabelFrame],
    config: &Config,
) -> Result<InstrumentTrack, PoseError> {
    if frames.is_empty() {
        return Err(PoseError::EmptySequence);
    }
    let boxes = track_sequence_2d(frames, config, config.tracker.box_mode);
    track_from_boxes(boxes, &config.camera, &PoseOptions::from_config(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom2d::{canonical_order, OrientedBox};
    use crate::tracker2d::PartSlot;
    use approx::assert_abs_diff_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn cam(f: f64) -> CameraModel {
        CameraModel { focal_px: f }
    }

    #[test]
    fn scale_examples() {
        assert_eq!(scale_change(400.0, 400.0).unwrap(), 1.0);
        assert_abs_diff_eq!(scale_change(484.0, 400.0).unwrap(), 1.21, epsilon = 1e-15);
        assert!(scale_change(1.0, 0.0).is_err());
        let areas = [400.0, 412.5, 390.25, 500.0, 611.0, 333.3];
        let prod: f64 = areas
            .windows(2)
            .map(|w| scale_change(w[1], w[0]).unwrap())
            .product();
        assert_abs_diff_eq!(prod, areas[5] / areas[0], epsilon = 1e-12);
    }

    #[test]
    fn depth_examples() {
        assert_abs_diff_eq!(
            depth_estimate(1.0, 400.0, &cam(100.0)).unwrap(),
            5.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            depth_estimate(1.0, 100.0, &cam(100.0)).unwrap(),
            10.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            depth_estimate(2.0, 400.0, &cam(100.0)).unwrap(),
            10.0,
            epsilon = 1e-12
        );
        assert!(depth_estimate(1.0, 0.0, &cam(100.0)).is_err());
    }

    #[test]
    fn rectangle_features() {
        for theta in [0.0, 0.3, -1.2, 1.5] {
            let q = OrientedBox::new(10.0, 20.0, 30.0, 8.0, theta).corners();
            for conv in [AngleConvention::Algorithm, AngleConvention::Prose] {
                let f = angle_features(&q, conv).unwrap();
                assert_abs_diff_eq!(f.roll, 0.0, epsilon = 1e-9);
                assert_abs_diff_eq!(f.pitch, 0.0, epsilon = 1e-9);
            }
        }
        // Axis-aligned: inclinations 0, pi/2, 0, pi/2.
        let q = OrientedBox::new(0.0, 0.0, 4.0, 2.0, 0.0).corners();
        let f = angle_features(&q, AngleConvention::Algorithm).unwrap();
        assert_abs_diff_eq!(f.yaw, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trapezoid_features() {
        // Tilt about the image x axis: parallel top and bottom edges.
        let pts =
            [(0.0, 0.0), (40.0, 0.0), (32.0, 20.0), (8.0, 20.0)].map(|(x, y)| Point2::new(x, y));
        let q = canonical_order(pts, None).unwrap();
        let f = angle_features(&q, AngleConvention::Algorithm).unwrap();
        assert!(f.roll.abs() > 0.1);
        assert_abs_diff_eq!(f.pitch, 0.0, epsilon = 1e-12);
        // Tilt about the image y axis: parallel left and right edges.
        let pts =
            [(0.0, 0.0), (30.0, 5.0), (30.0, 15.0), (0.0, 20.0)].map(|(x, y)| Point2::new(x, y));
        let q = canonical_order(pts, None).unwrap();
        let f = angle_features(&q, AngleConvention::Algorithm).unwrap();
        assert!(f.pitch.abs() > 0.1);
        assert_abs_diff_eq!(f.roll, 0.0, epsilon = 1e-12);
        let p = angle_features(&q, AngleConvention::Prose).unwrap();
        // The prose grouping swaps the two features.
        assert_abs_diff_eq!(p.pitch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.roll, -f.pitch, epsilon = 1e-12);
    }

    #[test]
    fn yaw_follows_image_rotation() {
        let a = OrientedBox::new(0.0, 0.0, 30.0, 8.0, 0.2).corners();
        let b = OrientedBox::new(0.0, 0.0, 30.0, 8.0, 0.25).corners();
        let fa = angle_features(&a, AngleConvention::Algorithm).unwrap();
        let fb = angle_features(&b, AngleConvention::Algorithm).unwrap();
        assert_abs_diff_eq!(yaw_delta(fb.yaw, fa.yaw), -0.05, epsilon = 1e-12);
        // Crossing the axis fold.
        let c = OrientedBox::new(0.0, 0.0, 30.0, 8.0, -0.02).corners();
        let d = OrientedBox::new(0.0, 0.0, 30.0, 8.0, 0.03).corners();
        let fc = angle_features(&c, AngleConvention::Algorithm).unwrap();
        let fd = angle_features(&d, AngleConvention::Algorithm).unwrap();
        assert_abs_diff_eq!(yaw_delta(fd.yaw, fc.yaw), -0.05, epsilon = 1e-12);
    }

    #[test]
    fn matrices() {
        assert_eq!(rotation_matrix(0.0, 0.0, 0.0), Matrix3::identity());
        let t = translation_matrix(0.0, 0.0, 0.0);
        assert_eq!(t, Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0));
        let t = translation_matrix(2.0, 3.0, 4.0);
        assert_eq!(t, Matrix3::new(1.0, 0.0, 2.0, 0.0, 1.0, 3.0, 0.0, 0.0, 4.0));
        let r = rotation_matrix(0.0, 0.0, FRAC_PI_2);
        let want = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r - want).abs().max() < 1e-15);
    }

    proptest! {
        #[test]
        fn rotation_is_proper(r in -PI..PI, p in -PI..PI, y in -PI..PI) {
            let m = rotation_matrix(r, p, y);
            prop_assert!((m.transpose() * m - Matrix3::identity()).abs().max() < 1e-9);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-9);
            let oracle = Rotation3::from_euler_angles(r, p, y);
            prop_assert!((m - oracle.matrix()).abs().max() < 1e-12);
        }

        #[test]
        fn yaw_delta_range(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            let d = yaw_delta(a, b);
            prop_assert!((-FRAC_PI_8..FRAC_PI_8).contains(&d));
            let k = ((a - b) - d) / FRAC_PI_4;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }

        #[test]
        fn rectangle_mode_nullity(cx in -50.0..50.0f64, l in 2.0..80.0f64, w in 1.0..80.0f64, t in -3.0..3.0f64) {
            let f = angle_features(&OrientedBox::new(cx, 0.0, l, w, t).corners(), AngleConvention::Algorithm).unwrap();
            prop_assert!(f.roll.abs() < 1e-9 && f.pitch.abs() < 1e-9);
        }
    }

    #[test]
    fn camera_motion_thresholds() {
        let t = ReinitThresholds::default();
        let det = |side: f64, cx: f64| PartDetection {
            part_id: 2,
            bbox: OrientedBox::new(cx, 50.0, side, side, 0.0),
            corners: OrientedBox::new(cx, 50.0, side, side, 0.0).corners(),
            aabb: crate::geom2d::Aabb {
                x: 0,
                y: 0,
                length: 1,
                width: 1,
            },
            pixel_count: 1,
            fallback: false,
        };
        let frame = |d: PartDetection| Frame2DResult {
            index: 1,
            width: 300,
            height: 400,
            parts: vec![PartSlot {
                part_id: 2,
                detection: Some(d),
            }],
            link_broken: false,
        };
        let base = frame(det(20.0, 100.0));
        assert!(!detect_camera_motion(
            &frame(det(412f64.sqrt(), 103.0)),
            &base,
            &t
        ));
        assert!(detect_camera_motion(&frame(det(30.0, 100.0)), &base, &t));
        assert!(detect_camera_motion(&frame(det(20.0, 250.0)), &base, &t));
    }

    fn boxes_for(sides: &[(f64, f64, Option<f64>)]) -> Vec<Frame2DResult> {
        sides
            .iter()
            .enumerate()
            .map(|(i, &(cx, side, theta))| Frame2DResult {
                index: i as u64 + 1,
                width: 640,
                height: 480,
                parts: vec![PartSlot {
                    part_id: 2,
                    detection: theta.map(|t| {
                        let b = OrientedBox::new(cx, 200.0, side * 2.0, side, t);
                        PartDetection {
                            part_id: 2,
                            bbox: b,
                            corners: b.corners(),
                            aabb: crate::geom2d::Aabb {
                                x: 0,
                                y: 0,
                                length: 1,
                                width: 1,
                            },
                            pixel_count: 1,
                            fallback: false,
                        }
                    }),
                }],
                link_broken: false,
            })
            .collect()
    }

    #[test]
    fn fold_translation_and_reinit() {
        let b = boxes_for(&[
            (100.0, 40.0, Some(0.1)),
            (110.0, 40.0, Some(0.1)),
            (110.0, 40.0, Some(0.1)),
            (110.0, 40.0, None),
            (110.0, 40.0, None),
            (130.0, 40.0, Some(0.1)),
            (140.0, 40.0, Some(0.1)),
        ]);
        let tr = track_from_boxes(b, &cam(500.0), &PoseOptions::default()).unwrap();
        let p: Vec<&PartPose> = tr.part(2).collect();
        assert_eq!(p[0].reinit, Some(ReinitReason::FirstFrame));
        assert_abs_diff_eq!(p[1].dx, 10.0, epsilon = 1e-9);
        assert_eq!(p[2].deltas(), [0.0; 6]);
        assert_eq!(p[2].r, Matrix3::identity());
        assert!(!p[3].present && !p[4].present);
        assert_eq!(p[5].reinit, Some(ReinitReason::Reappeared));
        assert_eq!(p[5].deltas(), [0.0; 6]);
        assert_abs_diff_eq!(p[6].dx, 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[6].cumulative.x, 120.0, epsilon = 1e-9);
        assert_eq!(tr.reinit_events.len(), 2);
    }

    #[test]
    fn telescoping_scales_and_depth_modes() {
        let sides = [40.0, 41.0, 39.5, 43.0, 44.0, 42.0];
        let b = boxes_for(&sides.map(|s| (200.0, s, Some(0.0))));
        let tr = track_from_boxes(b.clone(), &cam(500.0), &PoseOptions::default()).unwrap();
        let a0 = 2.0 * 40.0 * 40.0;
        let an = 2.0 * 42.0 * 42.0;
        assert_abs_diff_eq!(tr.scale_product(2), an / a0, epsilon = 1e-9);
        let opts = PoseOptions {
            depth_mode: DepthMode::Cumulative,
            ..Default::default()
        };
        let cum = track_from_boxes(b, &cam(500.0), &opts).unwrap();
        let last = cum.part(2).last().unwrap();
        assert_abs_diff_eq!(last.z_abs, 500.0 * (an / a0) / an.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(last.cumulative.z, last.z_abs, epsilon = 1e-9);
    }

    #[test]
    fn empty_sequence_errors() {
        assert_eq!(
            track_from_boxes(vec![], &cam(1.0), &PoseOptions::default()).unwrap_err(),
            PoseError::EmptySequence
        );
    }
}
