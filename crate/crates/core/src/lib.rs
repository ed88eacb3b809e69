//! Monocular 3D tracking of two-part surgical instruments from segmentation
//! label maps.
//!
//! The pipeline runs per frame: part masks, outer contours, oriented boxes
//! and corner quads ([`tracker2d`]), then a sequential fold turning corner
//! changes into translation and rotation deltas ([`pose3d`]). [`synth`]
//! renders scripted scenes with exact ground truth and [`eval`] scores a
//! track against it.

pub mod config;
pub mod contour;
pub mod eval;
pub mod export;
pub mod frames;
pub mod geom2d;
pub mod pose3d;
pub mod synth;
pub mod tracker2d;

pub use config::{
    load_config, CameraModel, Config, ConfigError, IntensityRange, PartConfig, PartId, CLASPER,
    SHAFT,
};
pub use eval::{ErrorReport, ReferenceTrack};
pub use export::TrackRow;
pub use frames::{load_sequence, FramePattern, FramesError, LabelFrame};
pub use geom2d::{Aabb, GeomError, OrientedBox, Point2, QuadCorners};
pub use pose3d::{
    track_from_boxes, track_instrument, AngleConvention, DepthMode, InstrumentTrack, PartPose,
    PoseError, PoseOptions, ReinitThresholds,
};
pub use tracker2d::{track_sequence_2d, BoxMode, Frame2DResult, PartDetection};
