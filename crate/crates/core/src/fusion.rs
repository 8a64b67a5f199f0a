//! Likelihood fusion across wavelet levels and band types.
//!
//! Within one band type the per-level likelihoods are combined by a weighted
//! mean. Each level's weight is the product of a translation weight (how well a
//! coefficient represents all the pixels of its support, from a first-order
//! autoregressive correlation model) and a noise weight (the fraction of the
//! band's deviation not explained by sensor noise). The three detail band types
//! are then treated as independent and their fused likelihoods multiplied;
//! the approximation bands are decided separately and combined at the end.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::band_model::{BandStats, Hypothesis, LikelihoodPlane};
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::swt::BandType;

/// Floor applied to each likelihood factor before taking logs.
pub const LOG_FLOOR: f64 = 1e-300;

/// Correlation of two pixels `distance` apart: `alpha^distance`.
pub fn correlation(distance: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!(
            "correlation coefficient must be in (0, 1), got {alpha}"
        )));
    }
    if !(distance >= 0.0) {
        return Err(Error::param(format!("negative distance {distance}")));
    }
    Ok(alpha.powf(distance))
}

/// Mean correlation between the pixels of a level-`level` coefficient's
/// `2^l x 2^l` support and the support's center.
pub fn translation_weight(level: usize, alpha: f64) -> Result<f64> {
    if level < 1 {
        return Err(Error::param("translation weight needs level >= 1"));
    }
    if level > 16 {
        return Err(Error::param(format!("level {level} is too deep")));
    }
    let side = 1usize << level;
    let center = (side as f64 - 1.0) / 2.0;
    let mut sum = 0.0;
    for i in 0..side {
        for j in 0..side {
            let (dy, dx) = (i as f64 - center, j as f64 - center);
            sum += correlation(dx.hypot(dy), alpha)?;
        }
    }
    Ok(sum / (side * side) as f64)
}

/// `max(0, (sigma_band - sigma_noise) / sigma_band)`, zero for a flat band.
pub fn noise_weight(sigma_band: f64, sigma_noise: f64) -> f64 {
    if !(sigma_band > 0.0) {
        return 0.0;
    }
    ((sigma_band - sigma_noise) / sigma_band).clamp(0.0, 1.0)
}

/// How the noise level is compared with bands at different levels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseScaling {
    /// White noise of deviation `s` in the frame shows up with deviation
    /// `s / 2^l` in the level-`l` detail bands of the mean-preserving Haar
    /// transform; the level-1 estimate is scaled accordingly.
    PerLevel,
    /// The same noise deviation for every band.
    #[default]
    Constant,
}

impl FromStr for NoiseScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per_level" | "per-level" | "level" => Ok(NoiseScaling::PerLevel),
            "constant" => Ok(NoiseScaling::Constant),
            _ => Err(Error::param(format!("unknown noise scaling {s:?}"))),
        }
    }
}

/// Per-band, per-level fusion weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionWeights {
    pub alpha_corr: f64,
    /// Indexed by `level - 1`.
    pub translation: Vec<f64>,
    /// `[band.index()][level - 1]`.
    pub noise: [Vec<f64>; 4],
    /// Noise deviation used for each level.
    pub noise_sigma: Vec<f64>,
}

impl FusionWeights {
    /// Weights for a decomposition described by `stats`, given the level-1
    /// diagonal-band noise deviation `sigma_noise`.
    pub fn new(
        stats: &BandStats,
        alpha_corr: f64,
        sigma_noise: f64,
        scaling: NoiseScaling,
    ) -> Result<Self> {
        let levels = stats.levels();
        let translation = (1..=levels)
            .map(|l| translation_weight(l, alpha_corr))
            .collect::<Result<Vec<_>>>()?;
        let noise_sigma: Vec<f64> = (1..=levels)
            .map(|l| match scaling {
                NoiseScaling::PerLevel => sigma_noise / (1u64 << (l - 1)) as f64,
                NoiseScaling::Constant => sigma_noise,
            })
            .collect();
        let noise = BandType::ALL.map(|band| {
            (1..=levels)
                .map(|l| noise_weight(stats.sigma(band, l), noise_sigma[l - 1]))
                .collect()
        });
        Ok(FusionWeights {
            alpha_corr,
            translation,
            noise,
            noise_sigma,
        })
    }

    pub fn levels(&self) -> usize {
        self.translation.len()
    }

    /// Combined weight `translation * noise`.
    pub fn weight(&self, band: BandType, level: usize) -> f64 {
        self.translation[level - 1] * self.noise[band.index()][level - 1]
    }

    /// Combined weights for every level of one band type.
    pub fn band_weights(&self, band: BandType) -> Vec<f64> {
        (1..=self.levels()).map(|l| self.weight(band, l)).collect()
    }

    /// Plain-text table of all weights.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# alpha_corr = {}", self.alpha_corr);
        let _ = writeln!(out, "band level translation noise_sigma noise combined");
        for band in BandType::ALL {
            for l in 1..=self.levels() {
                let _ = writeln!(
                    out,
                    "{band} {l} {:.6} {:.6} {:.6} {:.6}",
                    self.translation[l - 1],
                    self.noise_sigma[l - 1],
                    self.noise[band.index()][l - 1],
                    self.weight(band, l)
                );
            }
        }
        out
    }
}

/// How per-level likelihoods of one band type are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LevelFusion {
    /// `(1/N) * sum_l w_l * p_l`.
    #[default]
    WeightedMean,
    /// `prod_l p_l`, treating levels as independent.
    Product,
}

impl FromStr for LevelFusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weighted" | "weighted_mean" | "mean" => Ok(LevelFusion::WeightedMean),
            "product" => Ok(LevelFusion::Product),
            _ => Err(Error::param(format!("unknown level fusion {s:?}"))),
        }
    }
}

/// How the approximation-band decision joins the detail-band decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CombineMode {
    #[default]
    Or,
    And,
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "or" => Ok(CombineMode::Or),
            "and" => Ok(CombineMode::And),
            _ => Err(Error::param(format!("unknown combination mode {s:?}"))),
        }
    }
}

fn check_same_dims<'a>(planes: impl IntoIterator<Item = &'a LikelihoodPlane>) -> Result<(usize, usize)> {
    let mut iter = planes.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::param("no likelihood planes"))?
        .dims();
    for p in iter {
        if p.dims() != first {
            return Err(Error::dims(first, p.dims()));
        }
    }
    Ok(first)
}

/// Weighted mean of the per-level planes: `(1/N) * sum_l weights[l] * planes[l]`.
pub fn fuse_levels(planes: &[LikelihoodPlane], weights: &[f64]) -> Result<LikelihoodPlane> {
    if planes.len() != weights.len() {
        return Err(Error::param(format!(
            "{} levels of likelihood but {} weights",
            planes.len(),
            weights.len()
        )));
    }
    let (width, height) = check_same_dims(planes)?;
    let n = planes.len() as f64;
    let mut values = vec![0.0; width * height];
    for (plane, &w) in planes.iter().zip(weights) {
        for (acc, v) in values.iter_mut().zip(&plane.values) {
            *acc += w * v;
        }
    }
    for v in &mut values {
        *v /= n;
    }
    Ok(LikelihoodPlane {
        width,
        height,
        values,
        hypothesis: planes[0].hypothesis,
    })
}

/// Product of the per-level planes.
pub fn fuse_levels_product(planes: &[LikelihoodPlane]) -> Result<LikelihoodPlane> {
    let (width, height) = check_same_dims(planes)?;
    let mut values = vec![1.0; width * height];
    for plane in planes {
        for (acc, v) in values.iter_mut().zip(&plane.values) {
            *acc *= v;
        }
    }
    Ok(LikelihoodPlane {
        width,
        height,
        values,
        hypothesis: planes[0].hypothesis,
    })
}

/// Per-pixel product comparison over any number of band types: foreground
/// iff `prod fg > prod bg`, evaluated as a sum of logs with each factor
/// floored at [`LOG_FLOOR`]. Ties are background.
pub fn fuse_band_set(pairs: &[(&LikelihoodPlane, &LikelihoodPlane)]) -> Result<Mask> {
    let (width, height) = check_same_dims(pairs.iter().flat_map(|(f, b)| [*f, *b]))?;
    let mut score = vec![0.0f64; width * height];
    for (fg, bg) in pairs {
        if fg.hypothesis != Hypothesis::Foreground || bg.hypothesis != Hypothesis::Background {
            return Err(Error::param("band fusion expects (foreground, background) pairs"));
        }
        for ((s, f), b) in score.iter_mut().zip(&fg.values).zip(&bg.values) {
            *s += f.max(LOG_FLOOR).ln() - b.max(LOG_FLOOR).ln();
        }
    }
    let bits = score.iter().map(|&s| u8::from(s > 0.0)).collect();
    Mask::from_bits(width, height, bits)
}

/// Decision of the three fused detail band types (H, V, D).
pub fn fuse_bands(fg: [&LikelihoodPlane; 3], bg: [&LikelihoodPlane; 3]) -> Result<Mask> {
    fuse_band_set(&[(fg[0], bg[0]), (fg[1], bg[1]), (fg[2], bg[2])])
}

/// Final mask: the approximation-band test `fg_a > bg_a` joined with the
/// detail-band decision.
pub fn decide(
    hf: &Mask,
    fg_a: &LikelihoodPlane,
    bg_a: &LikelihoodPlane,
    mode: CombineMode,
) -> Result<Mask> {
    let dims = check_same_dims([fg_a, bg_a])?;
    if hf.dims() != dims {
        return Err(Error::dims(dims, hf.dims()));
    }
    let bits = hf
        .bits()
        .iter()
        .zip(fg_a.values.iter().zip(&bg_a.values))
        .map(|(&h, (f, b))| {
            let ll = f > b;
            let hf = h != 0;
            u8::from(match mode {
                CombineMode::Or => hf || ll,
                CombineMode::And => hf && ll,
            })
        })
        .collect();
    Mask::from_bits(dims.0, dims.1, bits)
}
