//! Scripted two-part instrument scenes with exact ground truth.
//!
//! Camera frame: `X` right, `Y` down, `Z` forward, pinhole at the origin,
//! `u = f X / Z + w/2`, `v = f Y / Z + h/2`. Scene units are pixels at
//! depth `f`. Part orientations are Euler angles in the viewer frame
//! (`x` right, `y` up, `z` towards the viewer) composed as
//! `R_Z(yaw) R_Y(pitch) R_X(roll)`; a part's local `x` runs along its
//! length and local `y` across its width.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CameraModel, Config, IntensityRange, PartConfig, PartId, CLASPER, SHAFT};
use crate::frames::{frame_file_name, FramesError, LabelFrame};
use crate::geom2d::{centroid, signed_area, Point2};
use crate::pose3d::rotation_matrix;

pub const SCHEMA: &str = "#schema=v1";
pub const FRAME_STEM: &str = "frame_";
pub const GT_FILE: &str = "gt.csv";

pub const BACKGROUND: u8 = 0;
pub const CLASPER_LEVEL: u8 = 120;
pub const SHAFT_LEVEL: u8 = 220;
pub const OVERLAP_LEVEL: u8 = 175;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frame {frame}: part {part} has a corner at depth {depth} (behind the camera)")]
    BehindCamera {
        frame: u64,
        part: PartId,
        depth: f64,
    },
    #[error(transparent)]
    Frames(#[from] FramesError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extents {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
}

/// Base point (camera frame) and orientation of one part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenePose {
    pub position: [f64; 3],
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl ScenePose {
    fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.roll.is_finite()
            && self.pitch.is_finite()
            && self.yaw.is_finite()
    }

    /// Part-to-camera rotation.
    pub fn rotation(&self) -> Matrix3<f64> {
        let flip = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
        flip * rotation_matrix(self.roll, self.pitch, self.yaw)
    }

    /// Camera-frame point at local `(u, v, 0)`.
    pub fn local_point(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::from(self.position) + self.rotation() * Vector3::new(u, v, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptPart {
    pub id: PartId,
    pub extents: Extents,
    pub intensity: u8,
    /// The rendered face starts this far behind the base along the length
    /// axis, so a linked part overlaps its parent.
    pub lead_in: f64,
}

impl ScriptPart {
    /// Local `(u, v)` corners of the face rectangle.
    fn face(&self) -> [(f64, f64); 4] {
        let (u0, u1) = (-self.lead_in, self.extents.length);
        let hw = self.extents.width / 2.0;
        [(u0, -hw), (u1, -hw), (u1, hw), (u0, hw)]
    }
}

/// Poses for steps `0..=N`; step 0 is an unrendered rest pose, frames are
/// steps `1..=N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionScript {
    pub parts: Vec<ScriptPart>,
    /// The second part's base is pinned to the first part's tip.
    pub linked: bool,
    pub steps: Vec<Vec<ScenePose>>,
}

impl MotionScript {
    pub fn frames(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParameter(m));
        if self.frames() < 2 {
            return bad(format!("need at least 2 frames, got {}", self.frames()));
        }
        for p in &self.parts {
            let e = p.extents;
            if !(e.length > 0.0 && e.width > 0.0 && e.thickness > 0.0)
                || !(e.length.is_finite() && e.width.is_finite() && e.thickness.is_finite())
            {
                return bad(format!("part {} has non-positive extents", p.id));
            }
            if !(p.lead_in >= 0.0 && p.lead_in.is_finite()) {
                return bad(format!("part {} has an invalid lead-in", p.id));
            }
        }
        for (n, row) in self.steps.iter().enumerate() {
            if row.len() != self.parts.len() {
                return bad(format!(
                    "step {n} has {} poses for {} parts",
                    row.len(),
                    self.parts.len()
                ));
            }
            if row.iter().any(|p| !p.is_finite()) {
                return bad(format!("step {n} has a non-finite pose"));
            }
            if self.linked && row.len() >= 2 {
                let tip = row[0].local_point(self.parts[0].extents.length, 0.0);
                let base = Vector3::from(row[1].position);
                if (tip - base).norm() > 1e-9 * (1.0 + tip.norm()) {
                    return bad(format!("step {n}: linked part is detached from the tip"));
                }
            }
        }
        Ok(())
    }
}

/// Shaft plus clasper with the clasper pinned to the shaft tip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub shaft: Extents,
    pub clasper: Extents,
    /// Clasper yaw relative to the shaft.
    pub joint_yaw: f64,
    pub lead_in: f64,
    /// Distance from the shaft base to the rig pivot along the shaft.
    pub pivot: f64,
}

impl Default for Instrument {
    fn default() -> Self {
        Self {
            shaft: Extents {
                length: 1500.0,
                width: 250.0,
                thickness: 250.0,
            },
            clasper: Extents {
                length: 500.0,
                width: 250.0,
                thickness: 120.0,
            },
            joint_yaw: 20f64.to_radians(),
            lead_in: 40.0,
            pivot: 1000.0,
        }
    }
}

/// Rig pose: pivot point in the camera frame plus instrument orientation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RigPose {
    pub pivot: [f64; 3],
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Instrument {
    pub fn parts(&self) -> Vec<ScriptPart> {
        vec![
            ScriptPart {
                id: SHAFT,
                extents: self.shaft,
                intensity: SHAFT_LEVEL,
                lead_in: 0.0,
            },
            ScriptPart {
                id: CLASPER,
                extents: self.clasper,
                intensity: CLASPER_LEVEL,
                lead_in: self.lead_in,
            },
        ]
    }

    fn place(&self, rig: &RigPose) -> Vec<ScenePose> {
        let mut shaft = ScenePose {
            position: rig.pivot,
            roll: rig.roll,
            pitch: rig.pitch,
            yaw: rig.yaw,
        };
        let base = shaft.local_point(-self.pivot, 0.0);
        shaft.position = base.into();
        let tip = shaft.local_point(self.shaft.length, 0.0);
        let clasper = ScenePose {
            position: tip.into(),
            roll: rig.roll,
            pitch: rig.pitch,
            yaw: rig.yaw + self.joint_yaw,
        };
        vec![shaft, clasper]
    }

    pub fn script(&self, rigs: &[RigPose]) -> MotionScript {
        MotionScript {
            parts: self.parts(),
            linked: true,
            steps: rigs.iter().map(|r| self.place(r)).collect(),
        }
    }
}

/// Named single-factor motions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    Static,
    /// Scene units per frame.
    TranslateXy {
        vx: f64,
        vy: f64,
    },
    /// Pivot depth from `z0` to `z1`.
    Dolly {
        z0: f64,
        z1: f64,
    },
    /// Radians per frame.
    YawSpin {
        rate: f64,
    },
    PitchTilt {
        rate: f64,
    },
    Combined {
        seed: u64,
    },
}

impl Preset {
    pub const NAMES: [&'static str; 6] = [
        "static",
        "translate_xy",
        "dolly",
        "yaw_spin",
        "pitch_tilt",
        "combined",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Static => "static",
            Preset::TranslateXy { .. } => "translate_xy",
            Preset::Dolly { .. } => "dolly",
            Preset::YawSpin { .. } => "yaw_spin",
            Preset::PitchTilt { .. } => "pitch_tilt",
            Preset::Combined { .. } => "combined",
        }
    }
}

/// Scene setup shared by the presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneSetup {
    pub camera: CameraModel,
    pub width: u32,
    pub height: u32,
    pub instrument: Instrument,
    /// Pivot depth in multiples of `f`.
    pub depth: f64,
}

impl Default for SceneSetup {
    fn default() -> Self {
        Self {
            camera: CameraModel { focal_px: 500.0 },
            width: 640,
            height: 480,
            instrument: Instrument::default(),
            depth: 5.0,
        }
    }
}

impl SceneSetup {
    fn rest(&self) -> RigPose {
        RigPose {
            pivot: [0.0, 0.0, self.depth * self.camera.focal_px],
            ..RigPose::default()
        }
    }

    /// Script with `frames` rendered steps: step `n` is `start + n * step`.
    pub fn preset(&self, preset: Preset, frames: usize) -> Result<MotionScript, SynthError> {
        let check = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(SynthError::InvalidParameter(format!("{name} = {v}")))
            }
        };
        if frames < 2 {
            return Err(SynthError::InvalidParameter(format!(
                "frames = {frames}, need >= 2"
            )));
        }
        let rest = self.rest();
        let n_f = frames as f64;
        let rigs: Vec<RigPose> = match preset {
            Preset::Static => vec![rest; frames + 1],
            Preset::TranslateXy { vx, vy } => {
                let (vx, vy) = (check("vx", vx)?, check("vy", vy)?);
                (0..=frames)
                    .map(|n| {
                        let mut r = rest;
                        r.pivot[0] += vx * n as f64;
                        r.pivot[1] += vy * n as f64;
                        r
                    })
                    .collect()
            }
            Preset::Dolly { z0, z1 } => {
                let (z0, z1) = (check("z0", z0)?, check("z1", z1)?);
                if z0 <= 0.0 || z1 <= 0.0 {
                    return Err(SynthError::InvalidParameter(
                        "dolly depths must be positive".into(),
                    ));
                }
                (0..=frames)
                    .map(|n| {
                        let mut r = rest;
                        r.pivot[2] = z0 + (z1 - z0) * n as f64 / n_f;
                        r
                    })
                    .collect()
            }
            Preset::YawSpin { rate } => {
                let rate = check("rate", rate)?;
                (0..=frames)
                    .map(|n| RigPose {
                        yaw: rate * n as f64,
                        ..rest
                    })
                    .collect()
            }
            Preset::PitchTilt { rate } => {
                let rate = check("rate", rate)?;
                (0..=frames)
                    .map(|n| RigPose {
                        pitch: rate * n as f64,
                        ..rest
                    })
                    .collect()
            }
            Preset::Combined { seed } => self.random_walk(seed, frames),
        };
        let script = self.instrument.script(&rigs);
        script.validate()?;
        Ok(script)
    }

    /// Bounded random walk over all six variables.
    fn random_walk(&self, seed: u64, frames: usize) -> Vec<RigPose> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = self.camera.focal_px;
        let z_rest = self.depth * f;
        let mut r = self.rest();
        let mut out = vec![r];
        let limit = [0.1 * z_rest, 0.08 * z_rest, 0.12 * z_rest, 0.25, 0.25, 0.35];
        for _ in 0..frames {
            let step = [
                rng.random_range(-0.004..0.004) * z_rest,
                rng.random_range(-0.004..0.004) * z_rest,
                rng.random_range(-0.006..0.006) * z_rest,
                rng.random_range(-0.01..0.01),
                rng.random_range(-0.01..0.01),
                rng.random_range(-0.01..0.01),
            ];
            let cur = [
                r.pivot[0],
                r.pivot[1],
                r.pivot[2] - z_rest,
                r.roll,
                r.pitch,
                r.yaw,
            ];
            let mut next = [0.0; 6];
            for i in 0..6 {
                // Reflect at the walk bounds.
                let v = cur[i] + step[i];
                next[i] = if v.abs() > limit[i] {
                    cur[i] - step[i]
                } else {
                    v
                };
            }
            r = RigPose {
                pivot: [next[0], next[1], next[2] + z_rest],
                roll: next[3],
                pitch: next[4],
                yaw: next[5],
            };
            out.push(r);
        }
        out
    }

    /// Pipeline configuration matching the synthetic intensity coding.
    pub fn config(&self) -> Config {
        synthetic_config(self.camera)
    }
}

pub fn synthetic_config(camera: CameraModel) -> Config {
    Config {
        camera,
        parts: vec![
            PartConfig {
                id: CLASPER,
                name: "clasper".into(),
                lo: 100,
                hi: 150,
                min_pixels: 25,
            },
            PartConfig {
                id: SHAFT,
                name: "shaft".into(),
                lo: 200,
                hi: 255,
                min_pixels: 25,
            },
        ],
        overlap: Some(IntensityRange { lo: 160, hi: 190 }),
        tracker: Default::default(),
        output: Default::default(),
    }
}

/// Pinhole projection of the part's face rectangle, in pixel coordinates.
pub fn project_part(
    part: &ScriptPart,
    pose: &ScenePose,
    cam: &CameraModel,
    width: u32,
    height: u32,
) -> Result<[Point2; 4], f64> {
    let mut out = [Point2::default(); 4];
    for (slot, (u, v)) in out.iter_mut().zip(part.face()) {
        let p = pose.local_point(u, v);
        if p.z.is_nan() || p.z <= 0.0 {
            return Err(p.z);
        }
        *slot = Point2::new(
            cam.focal_px * p.x / p.z + f64::from(width) / 2.0,
            cam.focal_px * p.y / p.z + f64::from(height) / 2.0,
        );
    }
    Ok(out)
}

/// Convex quad prepared for inside tests.
struct Raster {
    edges: [(f64, f64, f64); 4],
    bounds: (i64, i64, i64, i64),
}

impl Raster {
    fn new(q: &[Point2; 4]) -> Self {
        let orient = if signed_area(q) >= 0.0 { 1.0 } else { -1.0 };
        let mut edges = [(0.0, 0.0, 0.0); 4];
        for i in 0..4 {
            let (a, b) = (q[i], q[(i + 1) % 4]);
            // Signed distance, positive inside.
            let (nx, ny) = (-(b.y - a.y) * orient, (b.x - a.x) * orient);
            let len = nx.hypot(ny).max(f64::MIN_POSITIVE);
            edges[i] = (nx / len, ny / len, -(nx * a.x + ny * a.y) / len);
        }
        let min_x = q.iter().map(|p| p.x).fold(f64::MAX, f64::min);
        let max_x = q.iter().map(|p| p.x).fold(f64::MIN, f64::max);
        let min_y = q.iter().map(|p| p.y).fold(f64::MAX, f64::min);
        let max_y = q.iter().map(|p| p.y).fold(f64::MIN, f64::max);
        Self {
            edges,
            bounds: (
                min_x.floor() as i64 - 1,
                min_y.floor() as i64 - 1,
                max_x.ceil() as i64 + 1,
                max_y.ceil() as i64 + 1,
            ),
        }
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        self.edges.iter().all(|&(a, b, c)| a * x + b * y + c >= 0.0)
    }

    /// Pixel `(px, py)` covered by at least half of a 4x4 sample grid.
    fn covers(&self, px: i64, py: i64) -> bool {
        let (cx, cy) = (px as f64 + 0.5, py as f64 + 0.5);
        let mut min_d = f64::MAX;
        for &(a, b, c) in &self.edges {
            min_d = min_d.min(a * cx + b * cy + c);
        }
        // Samples lie within 0.53 px of the centre.
        if min_d >= 0.71 {
            return true;
        }
        if min_d <= -0.71 {
            return false;
        }
        let mut hits = 0;
        for sy in 0..4 {
            for sx in 0..4 {
                let x = px as f64 + (sx as f64 + 0.5) / 4.0;
                let y = py as f64 + (sy as f64 + 0.5) / 4.0;
                if self.inside(x, y) {
                    hits += 1;
                }
            }
        }
        hits >= 8
    }
}

/// Rasterizes part quads into one label frame. Pixels covered by two or
/// more parts take `overlap`. Returns per-part covered pixel counts.
pub fn rasterize_scene(
    index: u64,
    quads: &[([Point2; 4], u8)],
    overlap: u8,
    width: u32,
    height: u32,
) -> Result<(LabelFrame, Vec<usize>), FramesError> {
    let (w, h) = (width as usize, height as usize);
    let mut hits = vec![0u8; w * h];
    let mut owner = vec![BACKGROUND; w * h];
    let mut counts = Vec::with_capacity(quads.len());
    for (q, level) in quads {
        let r = Raster::new(q);
        let (x0, y0, x1, y1) = r.bounds;
        let mut count = 0;
        for py in y0.max(0)..y1.min(height as i64) {
            for px in x0.max(0)..x1.min(width as i64) {
                if r.covers(px, py) {
                    let i = py as usize * w + px as usize;
                    hits[i] = hits[i].saturating_add(1);
                    owner[i] = *level;
                    count += 1;
                }
            }
        }
        counts.push(count);
    }
    let pixels = hits
        .iter()
        .zip(&owner)
        .map(|(&n, &o)| if n >= 2 { overlap } else { o })
        .collect();
    Ok((LabelFrame::new(index, width, height, pixels)?, counts))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtPart {
    pub k: PartId,
    /// Projected face corners in pixels.
    pub corners: [Point2; 4],
    /// Mean of the projected corners.
    pub centroid: Point2,
    /// Camera-frame depth of the face centre, scene units.
    pub depth: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// No pixel of the part landed inside the frame.
    pub off_screen: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtFrame {
    pub n: u64,
    pub parts: Vec<GtPart>,
}

impl GtFrame {
    pub fn part(&self, k: PartId) -> Option<&GtPart> {
        self.parts.iter().find(|p| p.k == k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Rest pose (step 0), not rendered.
    pub rest: Option<GtFrame>,
    pub frames: Vec<GtFrame>,
}

impl GroundTruth {
    pub fn frame(&self, n: u64) -> Option<&GtFrame> {
        self.frames.iter().find(|f| f.n == n)
    }

    /// True `(dx, dy, dz, droll, dpitch, dyaw)` of part `k` into frame `n`,
    /// with `x`, `y` in projected pixels and `z` in scene units.
    pub fn delta(&self, n: u64, k: PartId) -> Option<[f64; 6]> {
        let i = self.frames.iter().position(|f| f.n == n)?;
        let prev = if i == 0 {
            self.rest.as_ref()?
        } else {
            &self.frames[i - 1]
        };
        let (a, b) = (prev.part(k)?, self.frames[i].part(k)?);
        Some([
            b.centroid.x - a.centroid.x,
            b.centroid.y - a.centroid.y,
            b.depth - a.depth,
            b.roll - a.roll,
            b.pitch - a.pitch,
            b.yaw - a.yaw,
        ])
    }
}

fn gt_part(part: &ScriptPart, pose: &ScenePose, corners: [Point2; 4], off_screen: bool) -> GtPart {
    let (u0, u1) = (-part.lead_in, part.extents.length);
    GtPart {
        k: part.id,
        corners,
        centroid: centroid(&corners),
        depth: pose.local_point(0.5 * (u0 + u1), 0.0).z,
        roll: pose.roll,
        pitch: pose.pitch,
        yaw: pose.yaw,
        off_screen,
    }
}

/// Renders every scripted frame; frames are independent and run in
/// parallel.
pub fn generate(
    script: &MotionScript,
    cam: &CameraModel,
    width: u32,
    height: u32,
) -> Result<(Vec<LabelFrame>, GroundTruth), SynthError> {
    script.validate()?;
    let project_step = |n: usize| -> Result<Vec<[Point2; 4]>, SynthError> {
        script
            .parts
            .iter()
            .zip(&script.steps[n])
            .map(|(part, pose)| {
                project_part(part, pose, cam, width, height).map_err(|depth| {
                    SynthError::BehindCamera {
                        frame: n as u64,
                        part: part.id,
                        depth,
                    }
                })
            })
            .collect()
    };
    let rendered: Vec<(LabelFrame, GtFrame)> = (1..=script.frames())
        .into_par_iter()
        .map(|n| {
            let quads = project_step(n)?;
            let coded: Vec<([Point2; 4], u8)> = quads
                .iter()
                .zip(&script.parts)
                .map(|(q, p)| (*q, p.intensity))
                .collect();
            let (frame, counts) = rasterize_scene(n as u64, &coded, OVERLAP_LEVEL, width, height)?;
            let parts = script
                .parts
                .iter()
                .zip(&script.steps[n])
                .zip(quads.iter().zip(&counts))
                .map(|((part, pose), (q, &c))| gt_part(part, pose, *q, c == 0))
                .collect();
            Ok((frame, GtFrame { n: n as u64, parts }))
        })
        .collect::<Result<_, SynthError>>()?;
    let rest_quads = project_step(0).ok();
    let rest = rest_quads.map(|quads| GtFrame {
        n: 0,
        parts: script
            .parts
            .iter()
            .zip(&script.steps[0])
            .zip(quads)
            .map(|((part, pose), q)| gt_part(part, pose, q, false))
            .collect(),
    });
    let (frames, gt_frames) = rendered.into_iter().unzip();
    Ok((
        frames,
        GroundTruth {
            rest,
            frames: gt_frames,
        },
    ))
}

/// Ground-truth CSV: `#schema=v1` header line, then
/// `n,k,gx,gy,gz,groll,gpitch,gyaw,x1,y1,x2,y2,x3,y3,x4,y4`.
pub fn gt_to_csv(gt: &GroundTruth) -> String {
    let mut s = String::new();
    s.push_str(SCHEMA);
    s.push('\n');
    s.push_str("n,k,gx,gy,gz,groll,gpitch,gyaw,x1,y1,x2,y2,x3,y3,x4,y4\n");
    for f in &gt.frames {
        for p in &f.parts {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{}",
                f.n, p.k, p.centroid.x, p.centroid.y, p.depth, p.roll, p.pitch, p.yaw
            );
            for c in &p.corners {
                let _ = write!(s, ",{},{}", c.x, c.y);
            }
            s.push('\n');
        }
    }
    s
}

#[derive(Debug, Deserialize)]
struct GtRow {
    n: u64,
    k: PartId,
    gx: f64,
    gy: f64,
    gz: f64,
    groll: f64,
    gpitch: f64,
    gyaw: f64,
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    x3: f64,
    y3: f64,
    x4: f64,
    y4: f64,
}

/// Strips and checks the schema line.
pub fn strip_schema<'a>(text: &'a str, path: &str) -> Result<&'a str, SynthError> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end() != SCHEMA {
        return Err(SynthError::Format {
            path: path.to_string(),
            message: format!(
                "expected schema header `{SCHEMA}`, found `{}`",
                first.trim_end()
            ),
        });
    }
    Ok(rest)
}

pub fn gt_from_csv(text: &str, path: &str) -> Result<GroundTruth, SynthError> {
    let body = strip_schema(text, path)?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut frames: Vec<GtFrame> = Vec::new();
    for (line, rec) in reader.deserialize::<GtRow>().enumerate() {
        let r = rec.map_err(|e| SynthError::Format {
            path: path.to_string(),
            message: format!("row {}: {e}", line + 1),
        })?;
        let corners = [
            Point2::new(r.x1, r.y1),
            Point2::new(r.x2, r.y2),
            Point2::new(r.x3, r.y3),
            Point2::new(r.x4, r.y4),
        ];
        let part = GtPart {
            k: r.k,
            corners,
            centroid: Point2::new(r.gx, r.gy),
            depth: r.gz,
            roll: r.groll,
            pitch: r.gpitch,
            yaw: r.gyaw,
            off_screen: false,
        };
        match frames.last_mut() {
            Some(f) if f.n == r.n => f.parts.push(part),
            _ => frames.push(GtFrame {
                n: r.n,
                parts: vec![part],
            }),
        }
    }
    Ok(GroundTruth { rest: None, frames })
}

/// Writes `frame_NNNN.png` files plus `gt.csv` into `dir`.
pub fn write_dataset(
    dir: &Path,
    frames: &[LabelFrame],
    gt: &GroundTruth,
) -> Result<(), SynthError> {
    let io = |source| SynthError::Io {
        path: dir.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    frames
        .par_iter()
        .try_for_each(|f| f.save(&dir.join(frame_file_name(FRAME_STEM, f.index(), "png"))))?;
    let path = dir.join(GT_FILE);
    fs::write(&path, gt_to_csv(gt)).map_err(|source| SynthError::Io {
        path: path.display().to_string(),
        source,
    })
}
