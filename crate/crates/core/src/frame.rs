//! Frame loading, grayscale conversion, cropping and mask output.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage};

use crate::error::{Error, Result};
use crate::mask::Mask;

/// A grayscale frame with 8-bit samples, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("frame dimensions must be positive"));
        }
        if samples.len() != width * height {
            return Err(Error::param(format!(
                "frame of {width}x{height} needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Frame {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Frame {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    fn from_image(img: DynamicImage) -> Self {
        let (width, height) = (img.width() as usize, img.height() as usize);
        let samples = match img {
            DynamicImage::ImageLuma8(gray) => gray.into_raw(),
            other => other
                .to_rgb8()
                .pixels()
                .map(|p| to_grayscale(p[0], p[1], p[2]))
                .collect(),
        };
        Frame {
            width,
            height,
            samples,
        }
    }

    /// Reads one image file, converting color inputs to grayscale.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Frame::from_image(img))
    }

    /// Writes the frame as an 8-bit grayscale image; format follows the extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let img = GrayImage::from_raw(self.width as u32, self.height as u32, self.samples.clone())
            .expect("sample buffer matches dimensions");
        img.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// An ordered run of equally sized frames.
#[derive(Clone, Debug)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub source_names: Vec<String>,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.frames.first().map(Frame::dims)
    }
}

/// BT.601 luma, rounded and clamped to `[0, 255]`.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Crops the top-left `factor * floor(w / factor)` by `factor * floor(h / factor)` region.
pub fn crop_to_multiple(frame: &Frame, factor: usize) -> Result<Frame> {
    if factor == 0 {
        return Err(Error::param("crop factor must be at least 1"));
    }
    if frame.width < factor || frame.height < factor {
        return Err(Error::FrameTooSmall {
            width: frame.width,
            height: frame.height,
            required: factor,
        });
    }
    let width = factor * (frame.width / factor);
    let height = factor * (frame.height / factor);
    if width == frame.width && height == frame.height {
        return Ok(frame.clone());
    }
    let mut samples = Vec::with_capacity(width * height);
    for row in frame.samples.chunks_exact(frame.width).take(height) {
        samples.extend_from_slice(&row[..width]);
    }
    Ok(Frame {
        width,
        height,
        samples,
    })
}

/// Top-left crop of a mask to the given size.
pub fn crop_mask(mask: &Mask, width: usize, height: usize) -> Result<Mask> {
    if mask.width() < width || mask.height() < height {
        return Err(Error::dims_in(
            (width, height),
            mask.dims(),
            "mask smaller than crop",
        ));
    }
    Ok(Mask::from_fn(width, height, |x, y| mask.get(x, y)))
}

/// Writes a mask as a single-channel 8-bit image with values 0 and 255.
pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    if mask.width() == 0 || mask.height() == 0 {
        return Err(Error::param("mask dimensions must be positive"));
    }
    let raw = mask.bits().iter().map(|&b| b * 255).collect();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("mask buffer matches dimensions");
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a mask image; pixels with grayscale value >= 128 are foreground.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let frame = Frame::load(path)?;
    let bits = frame.samples.iter().map(|&v| u8::from(v >= 128)).collect();
    Mask::from_bits(frame.width, frame.height, bits)
}

/// Trailing run of ASCII digits in a file stem, e.g. `in000123` -> 123.
pub fn frame_number(name: &str) -> Option<u64> {
    let stem = Path::new(name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(name);
    let digits: String = stem
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(char::is_ascii_digit)
        .collect();
    if digits.is_empty() {
        return None;
    }
    digits.chars().rev().collect::<String>().parse().ok()
}

const RASTER_EXTENSIONS: [&str; 9] = ["png", "bmp", "pgm", "ppm", "pnm", "tif", "tiff", "jpg", "jpeg"];

fn is_raster(name: &str) -> bool {
    Path::new(name)
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| RASTER_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files in `dir` whose names match the glob `pattern`, sorted by frame number.
pub fn list_frames(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let matcher = glob::Pattern::new(pattern)
        .map_err(|e| Error::param(format!("bad file pattern {pattern:?}: {e}")))?;
    let mut entries: Vec<(Option<u64>, String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if matcher.matches(&name) && is_raster(&name) {
            entries.push((frame_number(&name), name, entry.path()));
        }
    }
    entries.sort();
    Ok(entries.into_iter().map(|(_, _, p)| p).collect())
}

/// Loads every frame in `dir` matching `pattern`, in ascending numeric order.
pub fn load_frame_sequence(dir: &Path, pattern: &str) -> Result<FrameSequence> {
    let paths = list_frames(dir, pattern)?;
    if paths.is_empty() {
        return Err(Error::NoFrames {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    let mut frames = Vec::with_capacity(paths.len());
    let mut source_names = Vec::with_capacity(paths.len());
    for path in &paths {
        let frame = Frame::load(path)?;
        if let Some(first) = frames.first() {
            let first: &Frame = first;
            if first.dims() != frame.dims() {
                return Err(Error::dims_in(
                    first.dims(),
                    frame.dims(),
                    path.display().to_string(),
                ));
            }
        }
        frames.push(frame);
        source_names.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    Ok(FrameSequence {
        frames,
        source_names,
    })
}

/// Loads masks keyed by frame number. Files without a number are skipped.
pub fn load_mask_sequence(dir: &Path, pattern: &str) -> Result<Vec<(u64, Mask)>> {
    let mut out = Vec::new();
    for path in list_frames(dir, pattern)? {
        let name = path.file_name().unwrap().to_string_lossy();
        if let Some(n) = frame_number(&name) {
            out.push((n, read_mask(&path)?));
        }
    }
    Ok(out)
}
