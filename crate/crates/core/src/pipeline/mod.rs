//! Frame-by-frame foreground detection and directory-level runs.

mod checkpoint;
mod run;

pub use run::{evaluate_dirs, run_frames, run_pipeline, RunOptions, RunSummary, VideoSummary};

use rayon::prelude::*;

use crate::band_model::{
    calibrate_band_stats, estimate_noise_sigma, foreground_likelihood, BandModelBank, BandStats,
    ForegroundModel, LikelihoodPlane,
};
use crate::config::{Config, LlLevels};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::fusion::{decide, fuse_band_set, fuse_levels, fuse_levels_product, CombineMode, FusionWeights, LevelFusion};
use crate::mask::Mask;
use crate::morphology::cleanup_chain;
use crate::swt::{decompose, BandType, CoefficientPlane};

/// Masks produced for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameOutput {
    /// Decision before morphological cleanup.
    pub raw: Mask,
    pub mask: Mask,
}

/// Stateful detector for one video.
///
/// In wavelet mode it holds one mixture bank per band and level, ordered
/// level-major like [`WaveletPyramid`](crate::swt::WaveletPyramid); in
/// baseline mode (`levels = 0`) a single image-domain bank.
#[derive(Clone, Debug)]
pub struct Detector {
    config: Config,
    width: usize,
    height: usize,
    stats: BandStats,
    noise_sigma: f64,
    weights: Option<FusionWeights>,
    banks: Vec<BandModelBank>,
    foreground: Vec<ForegroundModel>,
    frames_processed: u64,
}

impl Detector {
    /// Calibrates band statistics on (up to `calibration_frames` of) the given
    /// frames and creates empty models. Frames must already be cropped.
    pub fn new(config: Config, calibration: &[Frame]) -> Result<Self> {
        config.validate()?;
        let first = calibration
            .first()
            .ok_or_else(|| Error::param("calibration needs at least one frame"))?;
        let (width, height) = first.dims();
        let k = config.calibration_frames.min(calibration.len());
        let sample = &calibration[..k];
        if let Some(bad) = sample.iter().find(|f| f.dims() != (width, height)) {
            return Err(Error::dims_in((width, height), bad.dims(), "calibration frames"));
        }

        if config.is_baseline() {
            let image = calibrate_image_sigma(sample);
            let stats = BandStats::from_parts(0, Vec::new(), image)?;
            let bank = BandModelBank::new(width, height, BandType::A, 0, config.gmm, 1.0)?;
            return Self::assemble(config, (width, height), stats, 0.0, vec![bank], 0);
        }

        let stats = calibrate_band_stats(sample, config.levels, config.boundary)?;
        let noise_sigma = match config.noise_sigma {
            Some(s) => s,
            None => {
                let pyr = decompose(first, 1, config.boundary)?;
                estimate_noise_sigma(pyr.plane(BandType::D, 1))?
            }
        };
        let image_var = stats.image_sigma.powi(2);
        let mut banks = Vec::with_capacity(4 * config.levels);
        for level in 1..=config.levels {
            for band in BandType::ALL {
                let band_var = stats.sigma(band, level).powi(2);
                let ratio = (band_var + config.variance_floor) / (image_var + config.variance_floor);
                banks.push(BandModelBank::new(width, height, band, level, config.gmm, ratio)?);
            }
        }
        Self::assemble(config, (width, height), stats, noise_sigma, banks, 0)
    }

    /// Builds the derived state (weights and foreground models) around banks.
    fn assemble(
        config: Config,
        (width, height): (usize, usize),
        stats: BandStats,
        noise_sigma: f64,
        banks: Vec<BandModelBank>,
        frames_processed: u64,
    ) -> Result<Self> {
        let (weights, foreground) = if config.is_baseline() {
            let fg = ForegroundModel::uniform(BandType::A, 0, config.uniform_density)?;
            (None, vec![fg])
        } else {
            let weights =
                FusionWeights::new(&stats, config.alpha_corr, noise_sigma, config.noise_scaling)?;
            let mut fg = Vec::with_capacity(4 * config.levels);
            for level in 1..=config.levels {
                for band in BandType::ALL {
                    let model = if band.is_detail() {
                        let s = config.foreground_sigma(band, level, stats.sigma(band, level));
                        ForegroundModel::gaussian(band, level, s * s)?
                    } else {
                        ForegroundModel::uniform(band, level, config.uniform_density)?
                    };
                    fg.push(model);
                }
            }
            (Some(weights), fg)
        };
        let expected = if config.is_baseline() { 1 } else { 4 * config.levels };
        if banks.len() != expected {
            return Err(Error::param(format!(
                "expected {expected} banks, got {}",
                banks.len()
            )));
        }
        if let Some(b) = banks.iter().find(|b| b.dims() != (width, height)) {
            return Err(Error::dims_in((width, height), b.dims(), "model bank"));
        }
        Ok(Detector {
            config,
            width,
            height,
            stats,
            noise_sigma,
            weights,
            banks,
            foreground,
            frames_processed,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn stats(&self) -> &BandStats {
        &self.stats
    }

    /// Level-1 noise deviation in use.
    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn weights(&self) -> Option<&FusionWeights> {
        self.weights.as_ref()
    }

    pub fn banks(&self) -> &[BandModelBank] {
        &self.banks
    }

    pub fn foreground_models(&self) -> &[ForegroundModel] {
        &self.foreground
    }

    pub fn frames_processed(&self) -> u64 {
        self.frames_processed
    }

    fn planes_for(&self, frame: &Frame) -> Result<Vec<CoefficientPlane>> {
        if frame.dims() != self.dims() {
            return Err(Error::dims_in(self.dims(), frame.dims(), "frame"));
        }
        if self.config.is_baseline() {
            Ok(vec![CoefficientPlane::from_frame(frame)])
        } else {
            Ok(decompose(frame, self.config.levels, self.config.boundary)?.into_planes())
        }
    }

    fn active(&self, band: BandType) -> bool {
        self.config.is_baseline() || self.config.band_enabled(band)
    }

    /// Processes the next frame: updates every model and returns the masks.
    pub fn process(&mut self, frame: &Frame) -> Result<FrameOutput> {
        let planes = self.planes_for(frame)?;
        let enabled: Vec<bool> = self.banks.iter().map(|b| self.active(b.band())).collect();
        // selective updating starts after a warm-up: empty mixtures would
        // otherwise flag everything as foreground and never learn
        let selective = self.config.selective_update
            && self.frames_processed >= self.config.calibration_frames as u64;
        let foreground = &self.foreground;

        let likelihoods: Vec<Option<(LikelihoodPlane, LikelihoodPlane)>> = self
            .banks
            .par_iter_mut()
            .zip(planes.par_iter())
            .zip(foreground.par_iter())
            .zip(enabled.par_iter())
            .map(|(((bank, plane), fg), &on)| {
                if !on {
                    return Ok(None);
                }
                let bg = if selective {
                    bank.background_likelihood(plane)?
                } else {
                    bank.update_and_evaluate(plane)?
                };
                Ok(Some((foreground_likelihood(fg, plane)?, bg)))
            })
            .collect::<Result<_>>()?;

        let raw = self.decide(likelihoods)?;

        if selective {
            let allow = raw.not();
            self.banks
                .par_iter_mut()
                .zip(planes.par_iter())
                .zip(enabled.par_iter())
                .try_for_each(|((bank, plane), &on)| {
                    if on {
                        bank.update_where(plane, allow.bits())
                    } else {
                        Ok(())
                    }
                })?;
        }

        let mask = if self.config.postprocess {
            cleanup_chain(&raw, &self.config.cleanup)?
        } else {
            raw.clone()
        };
        self.frames_processed += 1;
        Ok(FrameOutput { raw, mask })
    }

    /// Raw decision from per-bank `(foreground, background)` likelihoods.
    fn decide(&self, likelihoods: Vec<Option<(LikelihoodPlane, LikelihoodPlane)>>) -> Result<Mask> {
        let (w, h) = self.dims();
        if self.config.is_baseline() {
            let (fg, bg) = likelihoods
                .into_iter()
                .next()
                .flatten()
                .expect("baseline bank is always active");
            return decide(&Mask::new(w, h), &fg, &bg, CombineMode::Or);
        }

        let mut per_band: [(Vec<LikelihoodPlane>, Vec<LikelihoodPlane>); 4] = Default::default();
        for (bank, lk) in self.banks.iter().zip(likelihoods) {
            if let Some((fg, bg)) = lk {
                let slot = &mut per_band[bank.band().index()];
                slot.0.push(fg);
                slot.1.push(bg);
            }
        }

        let weights = self.weights.as_ref().expect("wavelet mode has weights");
        let mut fused: [Option<(LikelihoodPlane, LikelihoodPlane)>; 4] = Default::default();
        for band in BandType::ALL {
            if !self.active(band) {
                continue;
            }
            let (fg, bg) = std::mem::take(&mut per_band[band.index()]);
            let pair = if band == BandType::A && self.config.ll_levels == LlLevels::Top {
                let top = |mut v: Vec<LikelihoodPlane>| v.pop().expect("at least one level");
                (top(fg), top(bg))
            } else {
                match self.config.level_fusion {
                    LevelFusion::WeightedMean => {
                        let bw = weights.band_weights(band);
                        (fuse_levels(&fg, &bw)?, fuse_levels(&bg, &bw)?)
                    }
                    LevelFusion::Product => (fuse_levels_product(&fg)?, fuse_levels_product(&bg)?),
                }
            };
            fused[band.index()] = Some(pair);
        }

        let detail: Vec<(&LikelihoodPlane, &LikelihoodPlane)> = BandType::DETAIL
            .iter()
            .filter_map(|b| fused[b.index()].as_ref().map(|(f, g)| (f, g)))
            .collect();
        let hf = if detail.is_empty() {
            None
        } else {
            Some(fuse_band_set(&detail)?)
        };
        match (hf, &fused[BandType::A.index()]) {
            (Some(hf), Some((fa, ba))) => decide(&hf, fa, ba, self.config.combine),
            (Some(hf), None) => Ok(hf),
            (None, Some((fa, ba))) => decide(&Mask::new(w, h), fa, ba, CombineMode::Or),
            (None, None) => unreachable!("config validation requires an enabled band"),
        }
    }
}

fn calibrate_image_sigma(frames: &[Frame]) -> f64 {
    let planes: Vec<CoefficientPlane> = frames.iter().map(CoefficientPlane::from_frame).collect();
    crate::band_model::pooled_std(&planes)
}
