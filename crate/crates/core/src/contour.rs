//! Part masks, 8-connected components and outer-boundary tracing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{IntensityRange, PartConfig, PartId};
use crate::frames::LabelFrame;
use crate::geom2d::{Aabb, Point2};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContourError {
    #[error("component has {pixels} pixels, below the minimum of {min_pixels}")]
    TooSmall { pixels: usize, min_pixels: u32 },
    #[error("boundary has only {0} distinct points")]
    Degenerate(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    part_id: PartId,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn part_id(&self) -> PartId {
        self.part_id
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Foreground iff `lo <= intensity <= hi`, or the intensity falls in the
/// optional shared `overlap` range.
pub fn mask_by_range(
    frame: &LabelFrame,
    range: IntensityRange,
    overlap: Option<IntensityRange>,
    part_id: PartId,
) -> BinaryMask {
    let bits = frame
        .pixels()
        .iter()
        .map(|&v| range.contains(v) || overlap.is_some_and(|o| o.contains(v)))
        .collect();
    BinaryMask {
        width: frame.width(),
        height: frame.height(),
        part_id,
        bits,
    }
}

pub fn part_mask(
    frame: &LabelFrame,
    cfg: &PartConfig,
    overlap: Option<IntensityRange>,
) -> BinaryMask {
    mask_by_range(frame, cfg.range(), overlap, cfg.id)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

/// An 8-connected set of foreground pixels, in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub pixels: Vec<Pixel>,
}

impl Component {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// 8-connected components, largest first (ties keep raster order of their
/// first pixel).
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(idx) = stack.pop() {
            let (x, y) = ((idx % w) as i64, (idx / w) as i64);
            pixels.push(Pixel {
                x: x as u32,
                y: y as u32,
            });
            for (dx, dy) in NEIGHBORS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if mask.bits[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        pixels.sort_by_key(|p| (p.y, p.x));
        out.push(Component { pixels });
    }
    out.sort_by_key(|c| std::cmp::Reverse(c.len()));
    out
}

/// Closed outer boundary of one component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contour {
    pub part_id: PartId,
    pub points: Vec<Pixel>,
    /// Pixels enclosed by the component (holes excluded).
    pub pixel_count: usize,
}

impl Contour {
    /// Corners of every boundary pixel. Their hull is the exact outline of
    /// the pixel region, so fitted boxes measure pixel extents.
    pub fn outline_points(&self) -> Vec<Point2> {
        let mut out = Vec::with_capacity(self.points.len() * 4);
        for p in &self.points {
            let (x, y) = (f64::from(p.x), f64::from(p.y));
            out.push(Point2::new(x, y));
            out.push(Point2::new(x + 1.0, y));
            out.push(Point2::new(x + 1.0, y + 1.0));
            out.push(Point2::new(x, y + 1.0));
        }
        out
    }
}

/// Moore-neighbour trace of the outer border, starting at the topmost
/// leftmost pixel. The walk keeps the background on its left in image
/// coordinates, giving a positive-area (counter-clockwise) loop. Holes are
/// never visited.
pub fn trace_outer_contour(
    component: &Component,
    part_id: PartId,
    min_pixels: u32,
) -> Result<Contour, ContourError> {
    if component.len() < min_pixels as usize || component.is_empty() {
        return Err(ContourError::TooSmall {
            pixels: component.len(),
            min_pixels,
        });
    }
    // Local occupancy grid with a one-pixel background border.
    let min_x = component.pixels.iter().map(|p| p.x).min().unwrap_or(0) as i64;
    let max_x = component.pixels.iter().map(|p| p.x).max().unwrap_or(0) as i64;
    let min_y = component.pixels.iter().map(|p| p.y).min().unwrap_or(0) as i64;
    let max_y = component.pixels.iter().map(|p| p.y).max().unwrap_or(0) as i64;
    let gw = (max_x - min_x + 3) as usize;
    let gh = (max_y - min_y + 3) as usize;
    let mut grid = vec![false; gw * gh];
    for p in &component.pixels {
        grid[(p.y as i64 - min_y + 1) as usize * gw + (p.x as i64 - min_x + 1) as usize] = true;
    }
    let filled = |x: i64, y: i64| grid[y as usize * gw + x as usize];

    let first = component.pixels[0];
    let start = (first.x as i64 - min_x + 1, first.y as i64 - min_y + 1);
    let mut points = vec![start];
    let mut current = start;
    // Index into NEIGHBORS of a known background cell around `current`.
    let mut backtrack = 4usize;
    let mut first_step: Option<(i64, i64)> = None;
    loop {
        let mut next = None;
        for k in 1..=8 {
            let d = (backtrack + k) % 8;
            let (nx, ny) = (current.0 + NEIGHBORS[d].0, current.1 + NEIGHBORS[d].1);
            if filled(nx, ny) {
                let prev = (backtrack + k - 1) % 8;
                let bg = (current.0 + NEIGHBORS[prev].0, current.1 + NEIGHBORS[prev].1);
                let rel = (bg.0 - nx, bg.1 - ny);
                let b = NEIGHBORS.iter().position(|&o| o == rel).unwrap_or(4);
                next = Some(((nx, ny), b));
                break;
            }
        }
        let Some((step, b)) = next else {
            break; // isolated pixel
        };
        if current == start {
            match first_step {
                None => first_step = Some(step),
                Some(f) if f == step => break,
                Some(_) => {}
            }
        }
        if step != start || first_step != Some(step) {
            points.push(step);
        }
        current = step;
        backtrack = b;
    }
    // The loop closes on `start`; drop the repeated endpoint.
    if points.len() > 1 && points.last() == Some(&start) {
        points.pop();
    }
    let points: Vec<Pixel> = points
        .into_iter()
        .map(|(x, y)| Pixel {
            x: (x + min_x - 1) as u32,
            y: (y + min_y - 1) as u32,
        })
        .collect();
    let mut distinct = points.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ContourError::Degenerate(distinct.len()));
    }
    Ok(Contour {
        part_id,
        points,
        pixel_count: component.len(),
    })
}

/// Tightest axis-aligned pixel rectangle around the contour.
pub fn rect_bound(contour: &Contour) -> Aabb {
    let min_x = contour.points.iter().map(|p| p.x).min().unwrap_or(0);
    let max_x = contour.points.iter().map(|p| p.x).max().unwrap_or(0);
    let min_y = contour.points.iter().map(|p| p.y).min().unwrap_or(0);
    let max_y = contour.points.iter().map(|p| p.y).max().unwrap_or(0);
    Aabb {
        x: i64::from(min_x),
        y: i64::from(min_y),
        length: max_x - min_x + 1,
        width: max_y - min_y + 1,
    }
}
