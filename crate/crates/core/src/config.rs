//! Pipeline configuration and its line-oriented `key = value` file format.
//!
//! Blank lines and text after `#` are ignored. Every key is optional; missing
//! keys keep their defaults. Per-band foreground deviations are given as
//! `sigma_f.<band><level>`, e.g. `sigma_f.H3 = 4.5`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::band_model::GmmParams;
use crate::error::{Error, Result};
use crate::fusion::{CombineMode, LevelFusion, NoiseScaling};
use crate::morphology::{CleanupParams, StructuringElement};
use crate::swt::{BandType, BoundaryMode};

/// Which approximation levels feed the A-band decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LlLevels {
    #[default]
    All,
    /// Only the coarsest level, unweighted.
    Top,
}

impl FromStr for LlLevels {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(LlLevels::All),
            "top" => Ok(LlLevels::Top),
            _ => Err(Error::param(format!("unknown ll_levels {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Decomposition depth; 0 runs the image-domain mixture baseline.
    pub levels: usize,
    pub boundary: BoundaryMode,
    pub gmm: GmmParams,
    pub alpha_corr: f64,
    /// Overrides the estimated level-1 noise deviation.
    pub noise_sigma: Option<f64>,
    pub noise_scaling: NoiseScaling,
    /// Foreground deviation of a detail band as a multiple of its deviation.
    pub beta: f64,
    pub sigma_f: BTreeMap<(BandType, usize), f64>,
    /// Foreground density of A bands (and of the baseline).
    pub uniform_density: f64,
    /// Added to both variances when forming band/image variance ratios.
    pub variance_floor: f64,
    pub postprocess: bool,
    pub cleanup: CleanupParams,
    pub combine: CombineMode,
    pub level_fusion: LevelFusion,
    pub ll_levels: LlLevels,
    /// Band types taking part in the decision, indexed by `BandType::index`.
    pub bands: [bool; 4],
    pub calibration_frames: usize,
    /// Update mixtures only where the raw decision is background.
    pub selective_update: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            levels: 6,
            boundary: BoundaryMode::Symmetric,
            gmm: GmmParams::default(),
            alpha_corr: 0.95,
            noise_sigma: None,
            noise_scaling: NoiseScaling::Constant,
            beta: 2.0,
            sigma_f: BTreeMap::new(),
            uniform_density: 1.0 / 256.0,
            variance_floor: 1e-6,
            postprocess: true,
            cleanup: CleanupParams::default(),
            combine: CombineMode::Or,
            level_fusion: LevelFusion::WeightedMean,
            ll_levels: LlLevels::All,
            bands: [true; 4],
            calibration_frames: 25,
            selective_update: false,
        }
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::param(format!("expected a boolean, got {s:?}"))),
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>()
        .map_err(|e| Error::param(format!("bad number {s:?}: {e}")))
}

fn parse_band_level(s: &str) -> Result<(BandType, usize)> {
    let mut chars = s.chars();
    let band: BandType = chars
        .next()
        .ok_or_else(|| Error::param("empty band name"))?
        .to_string()
        .parse()?;
    let level = parse_num::<usize>(chars.as_str())?;
    if level == 0 {
        return Err(Error::param("band levels start at 1"));
    }
    Ok((band, level))
}

impl Config {
    pub fn is_baseline(&self) -> bool {
        self.levels == 0
    }

    /// Crop factor that makes frames compatible with the decomposition.
    pub fn crop_factor(&self) -> usize {
        1 << self.levels
    }

    pub fn band_enabled(&self, band: BandType) -> bool {
        self.bands[band.index()]
    }

    /// Foreground deviation for a detail band: the override if configured,
    /// else `beta * sigma_band`.
    pub fn foreground_sigma(&self, band: BandType, level: usize, sigma_band: f64) -> f64 {
        self.sigma_f
            .get(&(band, level))
            .copied()
            .unwrap_or(self.beta * sigma_band)
    }

    pub fn validate(&self) -> Result<()> {
        self.gmm.validate()?;
        if self.levels > 12 {
            return Err(Error::param(format!("{} levels is too many", self.levels)));
        }
        if !(self.alpha_corr > 0.0 && self.alpha_corr < 1.0) {
            return Err(Error::param("alpha_corr must be in (0, 1)"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::param("beta must be positive"));
        }
        if !(self.uniform_density > 0.0) {
            return Err(Error::param("uniform_density must be positive"));
        }
        if !(self.variance_floor > 0.0) {
            return Err(Error::param("variance_floor must be positive"));
        }
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0) {
                return Err(Error::param("noise_sigma must be nonnegative"));
            }
        }
        if self.calibration_frames == 0 {
            return Err(Error::param("calibration_frames must be at least 1"));
        }
        if !self.bands.iter().any(|&b| b) {
            return Err(Error::param("at least one band type must be enabled"));
        }
        for (&(band, level), &s) in &self.sigma_f {
            if !band.is_detail() {
                return Err(Error::param("sigma_f overrides apply to H, V and D bands"));
            }
            if level > self.levels {
                return Err(Error::param(format!("sigma_f.{band}{level} beyond configured levels")));
            }
            if !(s > 0.0) {
                return Err(Error::param("sigma_f overrides must be positive"));
            }
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.gmm;
        match key {
            "levels" => self.levels = parse_num(value)?,
            "boundary" => self.boundary = value.parse()?,
            "alpha_corr" => self.alpha_corr = parse_num(value)?,
            "noise_sigma" => {
                self.noise_sigma = match value {
                    "auto" => None,
                    v => Some(parse_num(v)?),
                }
            }
            "noise_scaling" => self.noise_scaling = value.parse()?,
            "beta" => self.beta = parse_num(value)?,
            "uniform_density" => self.uniform_density = parse_num(value)?,
            "variance_floor" => self.variance_floor = parse_num(value)?,
            "learning_rate" => g.learning_rate = parse_num(value)?,
            "max_components" => g.max_components = parse_num(value)?,
            "foreground_portion" => g.foreground_portion = parse_num(value)?,
            "match_sigmas" => g.match_sigmas = parse_num(value)?,
            "var_init" => g.var_init = parse_num(value)?,
            "var_min" => g.var_min = parse_num(value)?,
            "var_max" => g.var_max = parse_num(value)?,
            "prune_ratio" => g.prune_ratio = parse_num(value)?,
            "alpha_boost" => g.alpha_boost = parse_num(value)?,
            "postprocess" => self.postprocess = parse_bool(value)?,
            "se_first" => self.cleanup.first = StructuringElement::square(parse_num(value)?)?,
            "se_second" => self.cleanup.second = StructuringElement::square(parse_num(value)?)?,
            "se_final" => {
                self.cleanup.final_erode = StructuringElement::square(parse_num(value)?)?
            }
            "combine" => self.combine = value.parse()?,
            "level_fusion" => self.level_fusion = value.parse()?,
            "ll_levels" => self.ll_levels = value.parse()?,
            "bands" => {
                let mut bands = [false; 4];
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    bands[name.parse::<BandType>()?.index()] = true;
                }
                self.bands = bands;
            }
            "calibration_frames" => self.calibration_frames = parse_num(value)?,
            "selective_update" => self.selective_update = parse_bool(value)?,
            other => {
                if let Some(spec) = other.strip_prefix("sigma_f.") {
                    let key = parse_band_level(spec)?;
                    self.sigma_f.insert(key, parse_num(value)?);
                } else {
                    return Err(Error::param(format!("unknown key {other:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| err(e.to_string()))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes every setting; `Config::parse(&c.to_text()) == c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let g = &self.gmm;
        kv("levels", self.levels.to_string());
        kv("boundary", self.boundary.to_string());
        kv("alpha_corr", format!("{:?}", self.alpha_corr));
        kv(
            "noise_sigma",
            self.noise_sigma.map_or("auto".into(), |s| format!("{s:?}")),
        );
        kv(
            "noise_scaling",
            match self.noise_scaling {
                NoiseScaling::PerLevel => "per_level",
                NoiseScaling::Constant => "constant",
            }
            .into(),
        );
        kv("beta", format!("{:?}", self.beta));
        kv("uniform_density", format!("{:?}", self.uniform_density));
        kv("variance_floor", format!("{:?}", self.variance_floor));
        kv("learning_rate", format!("{:?}", g.learning_rate));
        kv("max_components", g.max_components.to_string());
        kv("foreground_portion", format!("{:?}", g.foreground_portion));
        kv("match_sigmas", format!("{:?}", g.match_sigmas));
        kv("var_init", format!("{:?}", g.var_init));
        kv("var_min", format!("{:?}", g.var_min));
        kv("var_max", format!("{:?}", g.var_max));
        kv("prune_ratio", format!("{:?}", g.prune_ratio));
        kv("alpha_boost", format!("{:?}", g.alpha_boost));
        kv("postprocess", self.postprocess.to_string());
        kv("se_first", self.cleanup.first.side().to_string());
        kv("se_second", self.cleanup.second.side().to_string());
        kv("se_final", self.cleanup.final_erode.side().to_string());
        kv(
            "combine",
            match self.combine {
                CombineMode::Or => "or",
                CombineMode::And => "and",
            }
            .into(),
        );
        kv(
            "level_fusion",
            match self.level_fusion {
                LevelFusion::WeightedMean => "weighted",
                LevelFusion::Product => "product",
            }
            .into(),
        );
        kv(
            "ll_levels",
            match self.ll_levels {
                LlLevels::All => "all",
                LlLevels::Top => "top",
            }
            .into(),
        );
        let bands: Vec<String> = BandType::ALL
            .iter()
            .filter(|b| self.band_enabled(**b))
            .map(|b| b.to_string())
            .collect();
        kv("bands", bands.join(","));
        kv("calibration_frames", self.calibration_frames.to_string());
        kv("selective_update", self.selective_update.to_string());
        for (&(band, level), &s) in &self.sigma_f {
            kv(&format!("sigma_f.{band}{level}"), format!("{s:?}"));
        }
        out
    }
}
