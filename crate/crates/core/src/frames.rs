//! Segmentation label-map sequences on disk.
//!
//! Frames are 8-bit grayscale PNG or PGM files named
//! `<stem><zero-padded index>.<png|pgm>`. RGB input is reduced to luma.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FramesError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: frame is {width}x{height}, expected {expected_width}x{expected_height}")]
    Dimensions {
        path: PathBuf,
        width: u32,
        height: u32,
        expected_width: u32,
        expected_height: u32,
    },
    #[error("sequence gap: frame {missing} is missing")]
    SequenceGap { missing: u64 },
    #[error("duplicate frame number {0}")]
    DuplicateIndex(u64),
    #[error("mixed file stems `{0}` and `{1}`; pass an explicit stem")]
    MixedStems(String, String),
    #[error("no frames found in {0}")]
    Empty(PathBuf),
    #[error("invalid frame: {0}")]
    Invalid(String),
}

/// One segmentation frame: row-major 8-bit intensity labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelFrame {
    index: u64,
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl LabelFrame {
    pub fn new(index: u64, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, FramesError> {
        if width == 0 || height == 0 {
            return Err(FramesError::Invalid(format!(
                "empty frame {width}x{height}"
            )));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(FramesError::Invalid(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        Ok(Self {
            index,
            width,
            height,
            pixels,
        })
    }

    pub fn filled(index: u64, width: u32, height: u32, value: u8) -> Result<Self, FramesError> {
        Self::new(
            index,
            width,
            height,
            vec![value; width as usize * height as usize],
        )
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn diagonal(&self) -> f64 {
        f64::from(self.width).hypot(f64::from(self.height))
    }

    pub fn to_image(&self) -> GrayImage {
        // Dimensions are validated on construction.
        GrayImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel buffer matches dimensions")
    }

    /// Writes the frame as PNG or PGM depending on the extension.
    pub fn save(&self, path: &Path) -> Result<(), FramesError> {
        let format = match extension(path).as_deref() {
            Some("png") => ImageFormat::Png,
            Some("pgm") => ImageFormat::Pnm,
            other => {
                return Err(FramesError::Invalid(format!(
                    "unsupported frame extension {other:?}"
                )))
            }
        };
        self.to_image()
            .save_with_format(path, format)
            .map_err(|e| FramesError::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
    }

    pub fn read(path: &Path, index: u64) -> Result<Self, FramesError> {
        let bytes = fs::read(path).map_err(|source| FramesError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let img = image::load_from_memory(&bytes).map_err(|e| FramesError::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        Self::new(index, w, h, gray.into_raw())
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// Which files in a directory make up the sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FramePattern {
    /// File-name prefix before the frame number. `None` accepts any stem as
    /// long as every frame file shares it.
    pub stem: Option<String>,
}

impl FramePattern {
    pub fn with_stem(stem: impl Into<String>) -> Self {
        Self {
            stem: Some(stem.into()),
        }
    }

    /// Splits `name` into `(stem, index)` if it is a frame file.
    fn parse(&self, name: &str) -> Option<(String, u64)> {
        let (base, ext) = name.rsplit_once('.')?;
        if !matches!(ext.to_ascii_lowercase().as_str(), "png" | "pgm") {
            return None;
        }
        let digits_at = base.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        if digits_at == base.len() {
            return None;
        }
        let (stem, digits) = base.split_at(digits_at);
        if let Some(want) = &self.stem {
            if stem != want {
                return None;
            }
        }
        Some((stem.to_string(), digits.parse().ok()?))
    }
}

/// File name used for frame `index` by writers in this crate.
pub fn frame_file_name(stem: &str, index: u64, ext: &str) -> String {
    format!("{stem}{index:04}.{ext}")
}

/// Lists the frame files of a directory, or of a manifest file holding one
/// path per line (relative to the manifest), sorted by frame number.
pub fn list_frames(
    path: &Path,
    pattern: &FramePattern,
) -> Result<Vec<(u64, PathBuf)>, FramesError> {
    let io_err = |source| FramesError::Io {
        path: path.to_path_buf(),
        source,
    };
    let candidates: Vec<PathBuf> = if path.is_dir() {
        let mut v = Vec::new();
        for entry in fs::read_dir(path).map_err(io_err)? {
            let entry = entry.map_err(io_err)?;
            if entry.file_type().map_err(io_err)?.is_file() {
                v.push(entry.path());
            }
        }
        v
    } else {
        let text = fs::read_to_string(path).map_err(io_err)?;
        let base = path.parent().unwrap_or(Path::new("."));
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect()
    };

    let mut found: Vec<(u64, PathBuf)> = Vec::new();
    let mut stem_seen: Option<String> = None;
    for p in candidates {
        let Some(name) = p.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some((stem, index)) = pattern.parse(name) else {
            continue;
        };
        match &stem_seen {
            None => stem_seen = Some(stem),
            Some(s) if *s != stem => return Err(FramesError::MixedStems(s.clone(), stem)),
            Some(_) => {}
        }
        found.push((index, p));
    }
    if found.is_empty() {
        return Err(FramesError::Empty(path.to_path_buf()));
    }
    found.sort_by_key(|(i, _)| *i);
    for pair in found.windows(2) {
        let (a, b) = (pair[0].0, pair[1].0);
        if a == b {
            return Err(FramesError::DuplicateIndex(a));
        }
        if b != a + 1 {
            return Err(FramesError::SequenceGap { missing: a + 1 });
        }
    }
    Ok(found)
}

/// Loads a whole sequence, validating numbering and dimensions.
pub fn load_sequence(path: &Path, pattern: &FramePattern) -> Result<Vec<LabelFrame>, FramesError> {
    let files = list_frames(path, pattern)?;
    let mut frames: Vec<LabelFrame> = Vec::with_capacity(files.len());
    for (index, file) in files {
        let frame = LabelFrame::read(&file, index)?;
        if let Some(first) = frames.first() {
            if (frame.width, frame.height) != (first.width, first.height) {
                return Err(FramesError::Dimensions {
                    path: file,
                    width: frame.width,
                    height: frame.height,
                    expected_width: first.width,
                    expected_height: first.height,
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, w: u32, h: u32, v: u8) {
        LabelFrame::filled(0, w, h, v)
            .unwrap()
            .save(&dir.join(name))
            .unwrap();
    }

    #[test]
    fn loads_ordered_sequence() {
        let dir = tempfile::tempdir().unwrap();
        for i in (1..=10).rev() {
            write(
                dir.path(),
                &frame_file_name("frame_", i, "pgm"),
                64,
                64,
                i as u8,
            );
        }
        let frames = load_sequence(dir.path(), &FramePattern::default()).unwrap();
        assert_eq!(frames.len(), 10);
        for (k, f) in frames.iter().enumerate() {
            assert_eq!(f.index(), k as u64 + 1);
            assert_eq!(f.get(5, 5), k as u8 + 1);
        }
        let again = load_sequence(dir.path(), &FramePattern::default()).unwrap();
        assert_eq!(frames, again);
    }

    #[test]
    fn png_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "m0001.png", 8, 6, 7);
        write(dir.path(), "m0002.png", 8, 6, 9);
        fs::write(dir.path().join("list.txt"), "m0001.png\nm0002.png\n").unwrap();
        let frames =
            load_sequence(&dir.path().join("list.txt"), &FramePattern::with_stem("m")).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].get(0, 0), 9);
    }

    #[test]
    fn gap_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "f0001.pgm", 4, 4, 0);
        write(dir.path(), "f0003.pgm", 4, 4, 0);
        match load_sequence(dir.path(), &FramePattern::default()) {
            Err(FramesError::SequenceGap { missing }) => assert_eq!(missing, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "f0001.pgm", 64, 64, 0);
        write(dir.path(), "f0002.pgm", 32, 64, 0);
        write(dir.path(), "f0003.pgm", 64, 64, 0);
        assert!(matches!(
            load_sequence(dir.path(), &FramePattern::default()),
            Err(FramesError::Dimensions { width: 32, .. })
        ));
    }

    #[test]
    fn unreadable_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f0001.png"), b"not an image").unwrap();
        let err = load_sequence(dir.path(), &FramePattern::default()).unwrap_err();
        assert!(err.to_string().contains("f0001.png"));
    }

    #[test]
    fn rgb_is_reduced_to_luma() {
        let dir = tempfile::tempdir().unwrap();
        let img = image::RgbImage::from_pixel(3, 2, image::Rgb([200, 200, 200]));
        img.save(dir.path().join("c0001.png")).unwrap();
        let frames = load_sequence(dir.path(), &FramePattern::default()).unwrap();
        assert_eq!(frames[0].get(2, 1), 200);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(LabelFrame::new(1, 0, 5, vec![]).is_err());
        assert!(LabelFrame::new(1, 2, 2, vec![0; 3]).is_err());
    }
}
