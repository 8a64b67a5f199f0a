//! Non-decimated (à-trous) 2D Haar wavelet transform.
//!
//! Level `l` filters the approximation plane of level `l - 1` (the frame itself
//! for `l = 1`) along rows and then along columns with the mean-preserving Haar
//! pair, low `(x[i] + x[i + s]) / 2` and high `(x[i] - x[i + s]) / 2`, where the
//! tap spacing is `s = 2^(l - 1)`. Nothing is downsampled, so every plane has
//! the frame's size, and the four outputs of a level sum back to its input.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::GrayImage;

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Wavelet band type of a 2D separable decomposition level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BandType {
    /// Approximation, "LL": row low-pass, column low-pass.
    A,
    /// "LH": row high-pass, column low-pass.
    H,
    /// "HL": row low-pass, column high-pass.
    V,
    /// "HH": row high-pass, column high-pass.
    D,
}

impl BandType {
    pub const ALL: [BandType; 4] = [BandType::A, BandType::H, BandType::V, BandType::D];
    pub const DETAIL: [BandType; 3] = [BandType::H, BandType::V, BandType::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_detail(self) -> bool {
        self != BandType::A
    }

    pub fn letter(self) -> char {
        match self {
            BandType::A => 'A',
            BandType::H => 'H',
            BandType::V => 'V',
            BandType::D => 'D',
        }
    }
}

impl fmt::Display for BandType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for BandType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" | "LL" => Ok(BandType::A),
            "H" | "LH" => Ok(BandType::H),
            "V" | "HL" => Ok(BandType::V),
            "D" | "HH" => Ok(BandType::D),
            _ => Err(Error::param(format!("unknown band {s:?}"))),
        }
    }
}

/// How samples past the image edge are synthesized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Whole-sample reflection: `x[n] = x[n - 2]`, `x[n + 1] = x[n - 3]`, ...
    #[default]
    Symmetric,
    /// Wrap around: `x[n] = x[0]`.
    Periodic,
}

impl BoundaryMode {
    /// Maps an index at or beyond `len` back into `[0, len)`.
    #[inline]
    fn resolve(self, idx: usize, len: usize) -> usize {
        if idx < len {
            return idx;
        }
        match self {
            BoundaryMode::Periodic => idx % len,
            BoundaryMode::Symmetric => {
                if len == 1 {
                    return 0;
                }
                let period = 2 * (len - 1);
                let r = idx % period;
                if r < len {
                    r
                } else {
                    period - r
                }
            }
        }
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" | "reflect" => Ok(BoundaryMode::Symmetric),
            "periodic" | "wrap" => Ok(BoundaryMode::Periodic),
            _ => Err(Error::param(format!("unknown boundary mode {s:?}"))),
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::Symmetric => "symmetric",
            BoundaryMode::Periodic => "periodic",
        })
    }
}

/// One full-resolution plane of wavelet coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientPlane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub band: BandType,
    /// Decomposition level; 0 denotes the input frame viewed as an A plane.
    pub level: usize,
}

impl CoefficientPlane {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f64>,
        band: BandType,
        level: usize,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::param(format!(
                "plane of {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(CoefficientPlane {
            width,
            height,
            values,
            band,
            level,
        })
    }

    pub fn from_frame(frame: &Frame) -> Self {
        CoefficientPlane {
            width: frame.width(),
            height: frame.height(),
            values: frame.samples().iter().map(|&v| f64::from(v)).collect(),
            band: BandType::A,
            level: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Rescales the plane to 0..=255 for viewing: A planes map `[0, 255]`
    /// directly, detail planes map `[-m, m]` with `m` the largest magnitude.
    pub fn to_display_image(&self) -> GrayImage {
        let raw: Vec<u8> = if self.band == BandType::A {
            self.values
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect()
        } else {
            let m = self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let scale = if m > 0.0 { 127.5 / m } else { 0.0 };
            self.values
                .iter()
                .map(|&v| (127.5 + v * scale).round().clamp(0.0, 255.0) as u8)
                .collect()
        };
        GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("plane buffer matches dimensions")
    }
}

/// All planes of an `N`-level decomposition, four per level.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid {
    levels: usize,
    /// Level-major: index `(level - 1) * 4 + band.index()`.
    planes: Vec<CoefficientPlane>,
}

impl WaveletPyramid {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    /// Plane of band `band` at level `level` (1-based).
    pub fn plane(&self, band: BandType, level: usize) -> &CoefficientPlane {
        assert!(
            (1..=self.levels).contains(&level),
            "level {level} outside 1..={}",
            self.levels
        );
        &self.planes[(level - 1) * 4 + band.index()]
    }

    pub fn planes(&self) -> impl Iterator<Item = &CoefficientPlane> {
        self.planes.iter()
    }

    pub fn into_planes(self) -> Vec<CoefficientPlane> {
        self.planes
    }

    /// Writes every plane as `<prefix>_<band><level>.png` under `dir`.
    pub fn dump(&self, dir: &Path, prefix: &str) -> Result<()> {
        for p in &self.planes {
            let path = dir.join(format!("{prefix}_{}{}.png", p.band, p.level));
            p.to_display_image()
                .save(&path)
                .map_err(|source| Error::Image { path, source })?;
        }
        Ok(())
    }
}

/// Decomposes `frame` into `levels` levels.
pub fn decompose(frame: &Frame, levels: usize, boundary: BoundaryMode) -> Result<WaveletPyramid> {
    decompose_plane(&CoefficientPlane::from_frame(frame), levels, boundary)
}

/// Decomposes an arbitrary real-valued plane (treated as level 0).
pub fn decompose_plane(
    input: &CoefficientPlane,
    levels: usize,
    boundary: BoundaryMode,
) -> Result<WaveletPyramid> {
    if levels < 1 {
        return Err(Error::param("decomposition needs at least one level"));
    }
    if levels >= usize::BITS as usize {
        return Err(Error::param(format!("{levels} levels is too many")));
    }
    let required = 1usize << levels;
    if input.width < required || input.height < required {
        return Err(Error::FrameTooSmall {
            width: input.width,
            height: input.height,
            required,
        });
    }

    let mut planes = Vec::with_capacity(4 * levels);
    let mut approx = input.values.clone();
    for level in 1..=levels {
        let [a, h, v, d] = filter_level(&approx, input.width, input.height, level, boundary);
        let (w, ht) = (input.width, input.height);
        approx = a.clone();
        planes.push(CoefficientPlane { width: w, height: ht, values: a, band: BandType::A, level });
        planes.push(CoefficientPlane { width: w, height: ht, values: h, band: BandType::H, level });
        planes.push(CoefficientPlane { width: w, height: ht, values: v, band: BandType::V, level });
        planes.push(CoefficientPlane { width: w, height: ht, values: d, band: BandType::D, level });
    }
    Ok(WaveletPyramid { levels, planes })
}

/// One analysis level: returns `[A, H, V, D]`.
fn filter_level(
    src: &[f64],
    width: usize,
    height: usize,
    level: usize,
    boundary: BoundaryMode,
) -> [Vec<f64>; 4] {
    let step = 1usize << (level - 1);
    let n = width * height;

    // Row pass.
    let mut row_lo = vec![0.0; n];
    let mut row_hi = vec![0.0; n];
    let col_partner: Vec<usize> = (0..width).map(|x| boundary.resolve(x + step, width)).collect();
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        let lo = &mut row_lo[y * width..(y + 1) * width];
        let hi = &mut row_hi[y * width..(y + 1) * width];
        for x in 0..width {
            let (p, q) = (row[x], row[col_partner[x]]);
            lo[x] = 0.5 * (p + q);
            hi[x] = 0.5 * (p - q);
        }
    }

    // Column pass.
    let mut a = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut d = vec![0.0; n];
    for y in 0..height {
        let y2 = boundary.resolve(y + step, height);
        let (r0, r1) = (y * width, y2 * width);
        for x in 0..width {
            let (l0, l1) = (row_lo[r0 + x], row_lo[r1 + x]);
            let (h0, h1) = (row_hi[r0 + x], row_hi[r1 + x]);
            a[r0 + x] = 0.5 * (l0 + l1);
            v[r0 + x] = 0.5 * (l0 - l1);
            h[r0 + x] = 0.5 * (h0 + h1);
            d[r0 + x] = 0.5 * (h0 - h1);
        }
    }
    [a, h, v, d]
}

/// Inverts one level: the pointwise sum `a + h + v + d`, which is the
/// approximation plane of level `l - 1`.
pub fn reconstruct_level(
    a: &CoefficientPlane,
    h: &CoefficientPlane,
    v: &CoefficientPlane,
    d: &CoefficientPlane,
) -> Result<CoefficientPlane> {
    let expected = [BandType::A, BandType::H, BandType::V, BandType::D];
    for (p, band) in [a, h, v, d].into_iter().zip(expected) {
        if p.band != band {
            return Err(Error::BandMismatch(format!(
                "expected {band} plane, got {}",
                p.band
            )));
        }
        if p.dims() != a.dims() {
            return Err(Error::dims(a.dims(), p.dims()));
        }
        if p.level != a.level {
            return Err(Error::param(format!(
                "level mismatch: {} vs {}",
                a.level, p.level
            )));
        }
    }
    if a.level == 0 {
        return Err(Error::param("cannot reconstruct below level 0"));
    }
    let values = a
        .values
        .iter()
        .zip(&h.values)
        .zip(&v.values)
        .zip(&d.values)
        .map(|(((a, h), v), d)| a + h + v + d)
        .collect();
    Ok(CoefficientPlane {
        width: a.width,
        height: a.height,
        values,
        band: BandType::A,
        level: a.level - 1,
    })
}

/// Population standard deviation of the plane's values.
pub fn plane_std(plane: &CoefficientPlane) -> f64 {
    values_std(&plane.values)
}

pub(crate) fn values_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_frame(w: usize, h: usize, seed: u64) -> Frame {
        let mut s = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        Frame::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 56) as u8
        })
    }

    #[test]
    fn constant_frame_has_no_detail() {
        let f = Frame::filled(64, 64, 128);
        let pyr = decompose(&f, 6, BoundaryMode::Symmetric).unwrap();
        for level in 1..=6 {
            assert!(pyr.plane(BandType::A, level).values.iter().all(|&v| v == 128.0));
            for band in BandType::DETAIL {
                assert!(pyr.plane(band, level).values.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn alternating_row_periodic() {
        // rows [0, 255, 0, 255, ...], identical in every row
        let f = Frame::from_fn(8, 4, |x, _| if x % 2 == 0 { 0 } else { 255 });
        let pyr = decompose(&f, 1, BoundaryMode::Periodic).unwrap();
        let a = pyr.plane(BandType::A, 1);
        let h = pyr.plane(BandType::H, 1);
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(a.get(x, y), 127.5);
                let expected = if x % 2 == 0 { -127.5 } else { 127.5 };
                assert_eq!(h.get(x, y), expected);
            }
        }
        assert!(pyr.plane(BandType::V, 1).values.iter().all(|&v| v == 0.0));
        assert!(pyr.plane(BandType::D, 1).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_boundary_reflects_whole_sample() {
        let m = BoundaryMode::Symmetric;
        assert_eq!(m.resolve(4, 5), 4);
        assert_eq!(m.resolve(5, 5), 3);
        assert_eq!(m.resolve(6, 5), 2);
        assert_eq!(m.resolve(8, 5), 0);
        assert_eq!(m.resolve(9, 5), 1);
        assert_eq!(BoundaryMode::Periodic.resolve(7, 5), 2);
    }

    #[test]
    fn level_one_sums_to_frame() {
        let f = random_frame(32, 16, 7);
        let pyr = decompose(&f, 1, BoundaryMode::Symmetric).unwrap();
        for y in 0..16 {
            for x in 0..32 {
                let s: f64 = BandType::ALL
                    .iter()
                    .map(|&b| pyr.plane(b, 1).get(x, y))
                    .sum();
                assert!((s - f64::from(f.get(x, y))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruct_examples_and_errors() {
        let f = random_frame(16, 16, 3);
        let pyr = decompose(&f, 2, BoundaryMode::Symmetric).unwrap();
        let p = |b, l| pyr.plane(b, l);
        let rec = reconstruct_level(p(BandType::A, 1), p(BandType::H, 1), p(BandType::V, 1), p(BandType::D, 1)).unwrap();
        assert_eq!(rec.level, 0);
        assert_eq!(rec, CoefficientPlane::from_frame(&f));

        let zero = CoefficientPlane::new(4, 4, vec![0.0; 16], BandType::H, 1).unwrap();
        let a = CoefficientPlane::new(4, 4, vec![9.0; 16], BandType::A, 1).unwrap();
        let zv = CoefficientPlane { band: BandType::V, ..zero.clone() };
        let zd = CoefficientPlane { band: BandType::D, ..zero.clone() };
        let rec = reconstruct_level(&a, &zero, &zv, &zd).unwrap();
        assert!(rec.values.iter().all(|&v| v == 9.0));

        // wrong band order, wrong level, wrong size
        assert!(reconstruct_level(&a, &zv, &zero, &zd).is_err());
        let other_level = CoefficientPlane { level: 2, ..zero.clone() };
        assert!(reconstruct_level(&a, &other_level, &zv, &zd).is_err());
        let small = CoefficientPlane::new(2, 2, vec![0.0; 4], BandType::H, 1).unwrap();
        assert!(reconstruct_level(&a, &small, &zv, &zd).is_err());
    }

    #[test]
    fn decompose_rejects_bad_input() {
        let f = Frame::filled(32, 32, 1);
        assert!(decompose(&f, 0, BoundaryMode::Symmetric).is_err());
        assert!(matches!(
            decompose(&f, 6, BoundaryMode::Symmetric),
            Err(Error::FrameTooSmall { .. })
        ));
        assert!(decompose(&f, 5, BoundaryMode::Symmetric).is_ok());
    }

    #[test]
    fn std_examples() {
        let p = |v: Vec<f64>| CoefficientPlane::new(v.len(), 1, v, BandType::H, 1).unwrap();
        assert_eq!(plane_std(&p(vec![5.0; 6])), 0.0);
        assert_eq!(plane_std(&p(vec![1.0, -1.0, 1.0, -1.0])), 1.0);
        assert_eq!(plane_std(&p(vec![0.0, 0.0, 2.0, 2.0])), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn perfect_reconstruction(seed in any::<u64>(), periodic in any::<bool>()) {
            let mode = if periodic { BoundaryMode::Periodic } else { BoundaryMode::Symmetric };
            let f = random_frame(32, 32, seed);
            let pyr = decompose(&f, 5, mode).unwrap();
            let mut prev = CoefficientPlane::from_frame(&f);
            for l in 1..=5 {
                let rec = reconstruct_level(
                    pyr.plane(BandType::A, l), pyr.plane(BandType::H, l),
                    pyr.plane(BandType::V, l), pyr.plane(BandType::D, l)).unwrap();
                for (r, p) in rec.values.iter().zip(&prev.values) {
                    prop_assert!((r - p).abs() <= 1e-9 * p.abs().max(1.0));
                }
                prev = pyr.plane(BandType::A, l).clone();
            }
        }

        #[test]
        fn ranges_hold(seed in any::<u64>()) {
            let f = random_frame(16, 16, seed);
            let pyr = decompose(&f, 4, BoundaryMode::Symmetric).unwrap();
            for p in pyr.planes() {
                for &v in &p.values {
                    if p.band == BandType::A {
                        prop_assert!((0.0..=255.0).contains(&v));
                    } else {
                        prop_assert!(v.abs() <= 255.0);
                    }
                }
            }
        }
    }
}
