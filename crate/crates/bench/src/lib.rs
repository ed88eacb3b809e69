//! Fixtures shared by the pipeline benchmarks.

use toolpose_core::synth::{generate, Preset, SceneSetup};
use toolpose_core::{track_sequence_2d, Config, Frame2DResult, LabelFrame};

/// Rendered frames of a seeded random-walk scene and the matching config.
pub fn scene(frames: usize, seed: u64) -> (Vec<LabelFrame>, Config) {
    let setup = SceneSetup::default();
    let script = setup
        .preset(Preset::Combined { seed }, frames)
        .expect("preset");
    let (fr, _) = generate(&script, &setup.camera, setup.width, setup.height).expect("render");
    (fr, setup.config())
}

/// `total` frames of boxes made by repeating the boxes of a shorter scene
/// with renumbered frame indices.
pub fn boxes(total: usize, base: usize) -> (Vec<Frame2DResult>, Config) {
    let (fr, cfg) = scene(base, 1);
    let one = track_sequence_2d(&fr, &cfg, cfg.tracker.box_mode);
    let out = (0..total)
        .map(|i| {
            let mut b = one[i % base].clone();
            b.index = i as u64 + 1;
            b
        })
        .collect();
    (out, cfg)
}
