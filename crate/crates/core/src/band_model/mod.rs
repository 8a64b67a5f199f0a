//! Per-band background models and likelihood evaluation.
//!
//! Every coefficient location of every wavelet band carries its own adaptive
//! Gaussian mixture ([`BandModelBank`]). The background likelihood of a
//! coefficient is the density of the dominant components of its mixture; the
//! foreground likelihood comes from a fixed per-band [`ForegroundModel`].

pub(crate) mod bank;
mod calibrate;
mod mixture;

pub use bank::BandModelBank;
pub use calibrate::{calibrate_band_stats, estimate_noise_sigma, pooled_std, BandStats};
pub use mixture::{GaussianComponent, GmmParams, PixelMixture};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::swt::{BandType, CoefficientPlane};

/// Smallest variance a foreground Gaussian may have.
pub const MIN_FOREGROUND_VARIANCE: f64 = 1e-9;

/// Univariate normal density.
#[inline]
pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / variance).exp() / (2.0 * PI * variance).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    Foreground,
    Background,
}

/// Per-pixel densities of one hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodPlane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub hypothesis: Hypothesis,
}

impl LikelihoodPlane {
    pub fn new(width: usize, height: usize, values: Vec<f64>, hypothesis: Hypothesis) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::param(format!(
                "likelihood plane of {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(LikelihoodPlane {
            width,
            height,
            values,
            hypothesis,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64, hypothesis: Hypothesis) -> Self {
        LikelihoodPlane {
            width,
            height,
            values: vec![value; width * height],
            hypothesis,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn scaled(&self, k: f64) -> LikelihoodPlane {
        LikelihoodPlane {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// Foreground coefficient density of one band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForegroundDensity {
    Gaussian { mean: f64, variance: f64 },
    Uniform(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForegroundModel {
    pub band: BandType,
    pub level: usize,
    pub density: ForegroundDensity,
}

impl ForegroundModel {
    /// Zero-mean Gaussian foreground for a detail band.
    pub fn gaussian(band: BandType, level: usize, variance: f64) -> Result<Self> {
        if !band.is_detail() {
            return Err(Error::BandMismatch(
                "Gaussian foreground applies to detail bands only".into(),
            ));
        }
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::param(format!("foreground variance {variance}")));
        }
        Ok(ForegroundModel {
            band,
            level,
            density: ForegroundDensity::Gaussian {
                mean: 0.0,
                variance: variance.max(MIN_FOREGROUND_VARIANCE),
            },
        })
    }

    /// Uniform foreground for an approximation band (or the image domain).
    pub fn uniform(band: BandType, level: usize, density: f64) -> Result<Self> {
        if band.is_detail() {
            return Err(Error::BandMismatch(
                "uniform foreground applies to A bands only".into(),
            ));
        }
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::param(format!("uniform density {density}")));
        }
        Ok(ForegroundModel {
            band,
            level,
            density: ForegroundDensity::Uniform(density),
        })
    }

    /// The default model for a band: `N(0, (beta * sigma_band)^2)` for detail
    /// bands and the constant `uniform_density` for A bands.
    pub fn for_band(
        band: BandType,
        level: usize,
        sigma_band: f64,
        beta: f64,
        uniform_density: f64,
    ) -> Result<Self> {
        if band.is_detail() {
            Self::gaussian(band, level, (beta * sigma_band).powi(2))
        } else {
            Self::uniform(band, level, uniform_density)
        }
    }

    #[inline]
    pub fn density_at(&self, x: f64) -> f64 {
        match self.density {
            ForegroundDensity::Gaussian { mean, variance } => normal_pdf(x, mean, variance),
            ForegroundDensity::Uniform(c) => c,
        }
    }
}

/// Evaluates the foreground density at every coefficient of `plane`.
pub fn foreground_likelihood(model: &ForegroundModel, plane: &CoefficientPlane) -> Result<LikelihoodPlane> {
    if model.band != plane.band {
        return Err(Error::BandMismatch(format!(
            "foreground model for {} applied to {} plane",
            model.band, plane.band
        )));
    }
    let values = match model.density {
        ForegroundDensity::Uniform(c) => vec![c; plane.values.len()],
        ForegroundDensity::Gaussian { mean, variance } => {
            let norm = 1.0 / (2.0 * PI * variance).sqrt();
            let k = -0.5 / variance;
            plane
                .values
                .iter()
                .map(|&x| norm * (k * (x - mean) * (x - mean)).exp())
                .collect()
        }
    };
    Ok(LikelihoodPlane {
        width: plane.width,
        height: plane.height,
        values,
        hypothesis: Hypothesis::Foreground,
    })
}
