//! Error statistics of an estimated track against ground truth.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CameraModel, PartId, CLASPER, SHAFT};
use crate::export::TrackRow;
use crate::geom2d::{min_area_rect, shoelace_area, ShoelaceMode};
use crate::pose3d::{DepthMode, InstrumentTrack};
use crate::synth::GroundTruth;
use crate::tracker2d::Frame2DResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no common frames between estimate and reference")]
    Disjoint,
    #[error("{variable}: estimate is in {estimate}, reference is in {reference}")]
    UnitMismatch {
        variable: &'static str,
        estimate: &'static str,
        reference: &'static str,
    },
    #[error("cannot aggregate reports with different rows")]
    IncompatibleReports,
    #[error("reference frame {0}: {1}")]
    Reference(u64, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Pixels,
    Radians,
    /// Depth proxy `f * S / sqrt(A)`.
    FocalPixels,
    SceneUnits,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Pixels => "px",
            Unit::Radians => "rad",
            Unit::FocalPixels => "focal_px",
            Unit::SceneUnits => "scene",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    X,
    Y,
    Z,
    Theta,
    Roll,
    Pitch,
    Yaw,
}

impl Variable {
    pub fn as_str(self) -> &'static str {
        match self {
            Variable::X => "x",
            Variable::Y => "y",
            Variable::Z => "z",
            Variable::Theta => "theta",
            Variable::Roll => "roll",
            Variable::Pitch => "pitch",
            Variable::Yaw => "yaw",
        }
    }
}

pub fn part_name(k: PartId) -> String {
    match k {
        CLASPER => "clasper".into(),
        SHAFT => "shaft".into(),
        _ => format!("part{k}"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub part: PartId,
    pub variable: Variable,
    pub unit: Unit,
    pub mean_abs_err: f64,
    pub std: f64,
    pub n_frames: usize,
    pub n_excluded: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub runs: usize,
    pub rows: Vec<ErrorRow>,
}

/// Mean and population standard deviation; zeros for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Smallest distance between two box angles, which repeat every `pi`.
pub fn box_angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn row(part: PartId, variable: Variable, unit: Unit, errors: &[f64], excluded: usize) -> ErrorRow {
    let (mean, std) = mean_std(errors);
    ErrorRow {
        part,
        variable,
        unit,
        mean_abs_err: mean,
        std,
        n_frames: errors.len(),
        n_excluded: excluded,
    }
}

/// Box centre and angle of each estimated part against the minimum-area
/// rectangle of the true projected corners.
pub fn compare_2d(est: &[Frame2DResult], gt: &GroundTruth) -> Result<ErrorReport, EvalError> {
    let common: Vec<(&Frame2DResult, _)> = est
        .iter()
        .filter_map(|e| gt.frame(e.index).map(|g| (e, g)))
        .collect();
    if common.is_empty() {
        return Err(EvalError::Disjoint);
    }
    let parts: Vec<PartId> = est[0].parts.iter().map(|s| s.part_id).collect();
    let mut rows = Vec::new();
    for k in parts {
        let mut errs: [Vec<f64>; 3] = Default::default();
        let mut excluded = 0;
        for (e, g) in &common {
            let truth = g
                .part(k)
                .filter(|p| !p.off_screen)
                .and_then(|p| min_area_rect(&p.corners).ok());
            match (e.part(k), truth) {
                (Some(d), Some(t)) => {
                    errs[0].push((d.bbox.cx - t.cx).abs());
                    errs[1].push((d.bbox.cy - t.cy).abs());
                    errs[2].push(box_angle_distance(d.bbox.theta, t.theta));
                }
                _ => excluded += 1,
            }
        }
        rows.push(row(k, Variable::X, Unit::Pixels, &errs[0], excluded));
        rows.push(row(k, Variable::Y, Unit::Pixels, &errs[1], excluded));
        rows.push(row(k, Variable::Theta, Unit::Radians, &errs[2], excluded));
    }
    Ok(ErrorReport { runs: 1, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl RefPose {
    fn values(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.roll, self.pitch, self.yaw]
    }
}

/// Reference positions and angles per frame and part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrack {
    pub depth_unit: Unit,
    pub frames: Vec<(u64, Vec<(PartId, RefPose)>)>,
}

impl ReferenceTrack {
    fn get(&self, n: u64, k: PartId) -> Option<&RefPose> {
        self.frames
            .iter()
            .find(|(m, _)| *m == n)
            .and_then(|(_, ps)| ps.iter().find(|(j, _)| *j == k).map(|(_, p)| p))
    }

    /// Projected centroids and true angles, with depth given by the depth
    /// formula applied to the exact projected quads.
    pub fn from_ground_truth(
        gt: &GroundTruth,
        cam: &CameraModel,
        mode: DepthMode,
    ) -> Result<Self, EvalError> {
        let mut first_area: Vec<(PartId, f64)> = Vec::new();
        let mut prev_area: Vec<(PartId, f64)> = Vec::new();
        let mut frames = Vec::with_capacity(gt.frames.len());
        for f in &gt.frames {
            let mut parts = Vec::with_capacity(f.parts.len());
            for p in &f.parts {
                let area = shoelace_area(&p.corners, ShoelaceMode::Full);
                let lookup =
                    |v: &[(PartId, f64)]| v.iter().find(|(k, _)| *k == p.k).map(|(_, a)| *a);
                let base = match mode {
                    DepthMode::PerFrame => lookup(&prev_area),
                    DepthMode::Cumulative => lookup(&first_area),
                }
                .unwrap_or(area);
                let z = crate::pose3d::depth_estimate(area / base, area, cam)
                    .map_err(|e| EvalError::Reference(f.n, e.to_string()))?;
                if lookup(&first_area).is_none() {
                    first_area.push((p.k, area));
                }
                prev_area.retain(|(k, _)| *k != p.k);
                prev_area.push((p.k, area));
                parts.push((
                    p.k,
                    RefPose {
                        x: p.centroid.x,
                        y: p.centroid.y,
                        z,
                        roll: p.roll,
                        pitch: p.pitch,
                        yaw: p.yaw,
                    },
                ));
            }
            frames.push((f.n, parts));
        }
        Ok(Self {
            depth_unit: Unit::FocalPixels,
            frames,
        })
    }

    /// True camera-frame depth in scene units.
    pub fn true_depth(gt: &GroundTruth) -> Self {
        Self {
            depth_unit: Unit::SceneUnits,
            frames: gt
                .frames
                .iter()
                .map(|f| {
                    (
                        f.n,
                        f.parts
                            .iter()
                            .map(|p| {
                                (
                                    p.k,
                                    RefPose {
                                        x: p.centroid.x,
                                        y: p.centroid.y,
                                        z: p.depth,
                                        roll: p.roll,
                                        pitch: p.pitch,
                                        yaw: p.yaw,
                                    },
                                )
                            })
                            .collect(),
                    )
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Compare per-frame deltas instead of origin-aligned cumulative values.
    pub per_delta: bool,
}

const VARS_3D: [(Variable, Unit); 6] = [
    (Variable::X, Unit::Pixels),
    (Variable::Y, Unit::Pixels),
    (Variable::Z, Unit::FocalPixels),
    (Variable::Roll, Unit::Radians),
    (Variable::Pitch, Unit::Radians),
    (Variable::Yaw, Unit::Radians),
];

/// 3D comparison on track rows. Reinitialized and missing frames are
/// excluded and counted.
pub fn compare_3d_rows(
    est: &[TrackRow],
    reference: &ReferenceTrack,
    opts: CompareOptions,
) -> Result<ErrorReport, EvalError> {
    if reference.depth_unit != Unit::FocalPixels {
        return Err(EvalError::UnitMismatch {
            variable: "z",
            estimate: Unit::FocalPixels.as_str(),
            reference: reference.depth_unit.as_str(),
        });
    }
    let ref_frames: BTreeSet<u64> = reference.frames.iter().map(|(n, _)| *n).collect();
    let common: BTreeSet<u64> = est
        .iter()
        .map(|r| r.n)
        .filter(|n| ref_frames.contains(n))
        .collect();
    if common.is_empty() {
        return Err(EvalError::Disjoint);
    }
    let mut parts: Vec<PartId> = Vec::new();
    for r in est {
        if !parts.contains(&r.k) {
            parts.push(r.k);
        }
    }
    let mut rows = Vec::new();
    for k in parts {
        let series: Vec<&TrackRow> = est
            .iter()
            .filter(|r| r.k == k && common.contains(&r.n))
            .collect();
        let mut errs: [Vec<f64>; 6] = Default::default();
        let mut excluded = 0;
        let mut origin: Option<([f64; 6], [f64; 6])> = None;
        let mut prev_ref: Option<(u64, [f64; 6])> = None;
        for (i, r) in series.iter().enumerate() {
            let Some(rp) = reference.get(r.n, k).map(RefPose::values) else {
                excluded += 1;
                prev_ref = None;
                continue;
            };
            let prior = prev_ref.take();
            prev_ref = Some((r.n, rp));
            if r.present == 0 {
                excluded += 1;
                continue;
            }
            let cum = r.cumulative();
            let o = *origin.get_or_insert((cum, rp));
            if r.reinit != 0 {
                excluded += 1;
                continue;
            }
            if opts.per_delta {
                let consecutive = i > 0 && prior.is_some_and(|(m, _)| m == series[i - 1].n);
                let Some((_, pr)) = prior.filter(|_| consecutive) else {
                    excluded += 1;
                    continue;
                };
                for (j, e) in r.deltas().iter().enumerate() {
                    errs[j].push((e - (rp[j] - pr[j])).abs());
                }
            } else {
                for j in 0..6 {
                    errs[j].push(((cum[j] - o.0[j]) - (rp[j] - o.1[j])).abs());
                }
            }
        }
        for (j, (v, u)) in VARS_3D.iter().enumerate() {
            rows.push(row(k, *v, *u, &errs[j], excluded));
        }
    }
    Ok(ErrorReport { runs: 1, rows })
}

pub fn compare_3d(
    est: &InstrumentTrack,
    reference: &ReferenceTrack,
    opts: CompareOptions,
) -> Result<ErrorReport, EvalError> {
    compare_3d_rows(&TrackRow::from_track(est), reference, opts)
}

/// Cross-run aggregate: mean of run means, population std of run means.
pub fn aggregate(reports: &[ErrorReport]) -> Result<ErrorReport, EvalError> {
    let Some(first) = reports.first() else {
        return Ok(ErrorReport::default());
    };
    let key = |r: &ErrorRow| (r.part, r.variable, r.unit);
    for rep in reports {
        if rep.rows.len() != first.rows.len()
            || rep
                .rows
                .iter()
                .zip(&first.rows)
                .any(|(a, b)| key(a) != key(b))
        {
            return Err(EvalError::IncompatibleReports);
        }
    }
    let rows = first
        .rows
        .iter()
        .enumerate()
        .map(|(i, r0)| {
            let means: Vec<f64> = reports.iter().map(|rep| rep.rows[i].mean_abs_err).collect();
            let (mean, std) = mean_std(&means);
            ErrorRow {
                mean_abs_err: mean,
                std,
                n_frames: reports.iter().map(|rep| rep.rows[i].n_frames).sum(),
                n_excluded: reports.iter().map(|rep| rep.rows[i].n_excluded).sum(),
                ..r0.clone()
            }
        })
        .collect();
    Ok(ErrorReport {
        runs: reports.iter().map(|r| r.runs).sum(),
        rows,
    })
}

/// Report CSV: `#schema=v1`, then
/// `part,variable,unit,mean_abs_err,std,n_frames,n_excluded`.
pub fn report_csv(report: &ErrorReport) -> String {
    let mut s =
        String::from("#schema=v1\npart,variable,unit,mean_abs_err,std,n_frames,n_excluded\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            part_name(r.part),
            r.variable.as_str(),
            r.unit.as_str(),
            r.mean_abs_err,
            r.std,
            r.n_frames,
            r.n_excluded
        );
    }
    s
}

fn label(r: &ErrorRow) -> String {
    let name = match r.variable {
        Variable::Roll => "Roll",
        Variable::Pitch => "Pitch",
        Variable::Yaw => "Yaw",
        Variable::Theta => "theta",
        v => v.as_str(),
    };
    let unit = if r.unit == Unit::Radians {
        "deg"
    } else {
        r.unit.as_str()
    };
    format!("{name} (in {unit})")
}

/// One block per part listing `mean ± std` per variable; angles in
/// degrees.
pub fn report_text(report: &ErrorReport) -> String {
    let mut s = String::new();
    let runs = if report.runs == 1 {
        "1 run".to_string()
    } else {
        format!("{} runs", report.runs)
    };
    let _ = writeln!(s, "Average absolute error ({runs})");
    let mut parts: Vec<PartId> = Vec::new();
    for r in &report.rows {
        if !parts.contains(&r.part) {
            parts.push(r.part);
        }
    }
    for k in parts {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<18} | {:<28} | {:>7} | {:>8}",
            part_name(k),
            "average error",
            "frames",
            "excluded"
        );
        let _ = writeln!(s, "{:-<18}-+-{:-<28}-+-{:-<7}-+-{:-<8}", "", "", "", "");
        for r in report.rows.iter().filter(|r| r.part == k) {
            let scale = if r.unit == Unit::Radians {
                180.0 / PI
            } else {
                1.0
            };
            let cell = format!("{:.4} ± {:.4}", r.mean_abs_err * scale, r.std * scale);
            let _ = writeln!(
                s,
                "{:<18} | {:<28} | {:>7} | {:>8}",
                label(r),
                cell,
                r.n_frames,
                r.n_excluded
            );
        }
    }
    s
}
