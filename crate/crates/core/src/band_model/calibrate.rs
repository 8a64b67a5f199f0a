use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::swt::{decompose, BandType, BoundaryMode, CoefficientPlane};

/// Fixed per-band statistics measured on calibration frames.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStats {
    levels: usize,
    /// Level-major, `(level - 1) * 4 + band.index()`.
    sigma: Vec<f64>,
    /// Pooled standard deviation of the calibration frames themselves.
    pub image_sigma: f64,
}

impl BandStats {
    pub fn from_parts(levels: usize, sigma: Vec<f64>, image_sigma: f64) -> Result<Self> {
        if sigma.len() != 4 * levels {
            return Err(Error::param(format!(
                "{levels} levels need {} band sigmas, got {}",
                4 * levels,
                sigma.len()
            )));
        }
        Ok(BandStats {
            levels,
            sigma,
            image_sigma,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Pooled standard deviation of band `band` at `level` (1-based).
    pub fn sigma(&self, band: BandType, level: usize) -> f64 {
        self.sigma[(level - 1) * 4 + band.index()]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigma
    }
}

/// Running mean/variance, merged per plane with the pairwise update.
#[derive(Clone, Copy, Debug, Default)]
struct Pooled {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Pooled {
    fn add(&mut self, values: &[f64]) {
        if values.is_empty() {
            return;
        }
        let nb = values.len() as f64;
        let mean_b = values.iter().sum::<f64>() / nb;
        let m2_b: f64 = values.iter().map(|v| (v - mean_b) * (v - mean_b)).sum();
        let n = self.n + nb;
        let delta = mean_b - self.mean;
        self.mean += delta * nb / n;
        self.m2 += m2_b + delta * delta * self.n * nb / n;
        self.n = n;
    }

    fn std(&self) -> f64 {
        if self.n == 0.0 {
            0.0
        } else {
            (self.m2 / self.n).max(0.0).sqrt()
        }
    }
}

/// Pooled standard deviation of every band over the given calibration frames.
pub fn calibrate_band_stats(
    frames: &[Frame],
    levels: usize,
    boundary: BoundaryMode,
) -> Result<BandStats> {
    if frames.is_empty() {
        return Err(Error::param("calibration needs at least one frame"));
    }
    let mut pooled = vec![Pooled::default(); 4 * levels];
    let mut image = Pooled::default();
    for frame in frames {
        let pyr = decompose(frame, levels, boundary)?;
        for (acc, plane) in pooled.iter_mut().zip(pyr.planes()) {
            acc.add(&plane.values);
        }
        image.add(&CoefficientPlane::from_frame(frame).values);
    }
    Ok(BandStats {
        levels,
        sigma: pooled.iter().map(Pooled::std).collect(),
        image_sigma: image.std(),
    })
}

/// Pooled standard deviation of a set of planes.
pub fn pooled_std<'a>(planes: impl IntoIterator<Item = &'a CoefficientPlane>) -> f64 {
    let mut acc = Pooled::default();
    for p in planes {
        acc.add(&p.values);
    }
    acc.std()
}

/// Robust noise level from the finest diagonal band: `median(|x|) / 0.6745`.
pub fn estimate_noise_sigma(hh1: &CoefficientPlane) -> Result<f64> {
    if hh1.band != BandType::D || hh1.level != 1 {
        return Err(Error::BandMismatch(format!(
            "noise estimation needs the level-1 D band, got {}{}",
            hh1.band, hh1.level
        )));
    }
    if hh1.values.is_empty() {
        return Err(Error::param("empty plane"));
    }
    let mut mags: Vec<f64> = hh1.values.iter().map(|v| v.abs()).collect();
    let n = mags.len();
    let mid = n / 2;
    let (_, &mut upper, _) = mags.select_nth_unstable_by(mid, f64::total_cmp);
    let median = if n % 2 == 1 {
        upper
    } else {
        let lower = mags[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    Ok(median / 0.6745)
}
