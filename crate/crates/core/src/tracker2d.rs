//! Per-frame box extraction for every configured part.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, PartId};
use crate::contour::{connected_components, part_mask, rect_bound, trace_outer_contour};
use crate::frames::LabelFrame;
use crate::geom2d::{canonical_order, min_area_rect, quad_fit, Aabb, OrientedBox, QuadCorners};

/// Which corners the pose stage consumes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxMode {
    /// Largest quadrilateral on the contour hull (keeps perspective skew).
    #[default]
    QuadFit,
    /// Corners of the minimum-area rectangle.
    MinRect,
}

impl BoxMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoxMode::QuadFit => "quad_fit",
            BoxMode::MinRect => "min_rect",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartDetection {
    pub part_id: PartId,
    /// Minimum-area rectangle of the part outline.
    pub bbox: OrientedBox,
    /// Corners for the pose stage, in the configured box mode.
    pub corners: QuadCorners,
    pub aabb: Aabb,
    pub pixel_count: usize,
    /// Quad fit fell back to rectangle corners.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSlot {
    pub part_id: PartId,
    pub detection: Option<PartDetection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame2DResult {
    pub index: u64,
    pub width: u32,
    pub height: u32,
    /// One slot per configured part, in configuration order.
    pub parts: Vec<PartSlot>,
    /// Some pair of present parts is further apart than `link_gap`.
    pub link_broken: bool,
}

impl Frame2DResult {
    pub fn part(&self, k: PartId) -> Option<&PartDetection> {
        self.parts
            .iter()
            .find(|s| s.part_id == k)
            .and_then(|s| s.detection.as_ref())
    }

    pub fn diagonal(&self) -> f64 {
        f64::from(self.width).hypot(f64::from(self.height))
    }
}

fn detect_part(
    frame: &LabelFrame,
    config: &Config,
    k: usize,
    mode: BoxMode,
) -> Option<PartDetection> {
    let cfg = &config.parts[k];
    let mask = part_mask(frame, cfg, config.overlap);
    let largest = connected_components(&mask).into_iter().next()?;
    let contour = trace_outer_contour(&largest, cfg.id, cfg.min_pixels).ok()?;
    let outline = contour.outline_points();
    let bbox = min_area_rect(&outline).ok()?;
    let (corners, fallback) = match mode {
        BoxMode::MinRect => (bbox.corners(), false),
        BoxMode::QuadFit => {
            let fit = quad_fit(&outline).ok()?;
            (fit.corners, fit.fallback)
        }
    };
    Some(PartDetection {
        part_id: cfg.id,
        bbox,
        corners,
        aabb: rect_bound(&contour),
        pixel_count: contour.pixel_count,
        fallback,
    })
}

/// Extraction without corner threading.
fn extract(frame: &LabelFrame, config: &Config, mode: BoxMode) -> Frame2DResult {
    let parts: Vec<PartSlot> = (0..config.parts.len())
        .map(|k| PartSlot {
            part_id: config.parts[k].id,
            detection: detect_part(frame, config, k, mode),
        })
        .collect();
    let present: Vec<&PartDetection> = parts.iter().filter_map(|s| s.detection.as_ref()).collect();
    let gap = i64::from(config.tracker.link_gap);
    let mut link_broken = false;
    for (i, a) in present.iter().enumerate() {
        for b in &present[i + 1..] {
            let g = a.aabb.gap(&b.aabb);
            if g > gap {
                log::warn!(
                    "frame {}: parts {} and {} are {g} px apart (link gap {gap})",
                    frame.index(),
                    a.part_id,
                    b.part_id
                );
                link_broken = true;
            }
        }
    }
    Frame2DResult {
        index: frame.index(),
        width: frame.width(),
        height: frame.height(),
        parts,
        link_broken,
    }
}

/// Re-indexes corners so corner 1 follows the previous frame's corner 1.
fn thread_corners(curr: &mut Frame2DResult, prev: Option<&Frame2DResult>) {
    for slot in &mut curr.parts {
        let Some(det) = slot.detection.as_mut() else {
            continue;
        };
        let hint = prev.and_then(|p| p.part(slot.part_id)).map(|d| d.corners);
        if let Some(h) = hint {
            if let Ok(q) = canonical_order(*det.corners.points(), Some(&h)) {
                det.corners = q;
            }
        }
    }
}

/// Boxes for one frame, with corners ordered against `prev`.
pub fn bound_box(
    frame: &LabelFrame,
    config: &Config,
    mode: BoxMode,
    prev: Option<&Frame2DResult>,
) -> Frame2DResult {
    let mut r = extract(frame, config, mode);
    thread_corners(&mut r, prev);
    r
}

/// Parallel extraction followed by an ordered pass that threads corner
/// indexing from frame to frame.
pub fn track_sequence_2d(
    frames: &[LabelFrame],
    config: &Config,
    mode: BoxMode,
) -> Vec<Frame2DResult> {
    let mut out: Vec<Frame2DResult> = frames
        .par_iter()
        .map(|f| extract(f, config, mode))
        .collect();
    for i in 1..out.len() {
        let (done, rest) = out.split_at_mut(i);
        thread_corners(&mut rest[0], done.last());
    }
    out
}
