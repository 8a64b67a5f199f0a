//! Synthetic sequences with known ground truth.
//!
//! [`CamouflageScene`] renders a static background whose intensity varies only
//! along `y` (a horizontally oriented texture) and a square patch whose
//! intensity varies only along its own `x` (vertically oriented), with the
//! same mean and deviation. The patch slides across the background and
//! Gaussian sensor noise is added to every frame. Intensity statistics alone
//! do not separate the two; the orientation difference shows up in the
//! detail bands.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::frame::Frame;
use crate::mask::Mask;

/// 1D intensity profile a texture is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Texture {
    /// Sinusoid with the given period in pixels.
    Sinusoid { period: f64 },
    /// I.i.d. Gaussian samples smoothed by a box filter of width `smooth`.
    Noise { smooth: usize },
    /// One-pixel lines on a flat field, with gaps drawn uniformly from
    /// `[spacing / 2, 3 * spacing / 2]`.
    Lines { spacing: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CamouflageScene {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub patch_size: usize,
    /// Top row of the patch.
    pub patch_top: usize,
    /// Horizontal speed in pixels per frame.
    pub speed: usize,
    pub mean: f64,
    /// Standard deviation of both textures.
    pub texture_sigma: f64,
    pub texture: Texture,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for CamouflageScene {
    fn default() -> Self {
        CamouflageScene {
            width: 128,
            height: 128,
            frames: 300,
            patch_size: 40,
            patch_top: 44,
            speed: 1,
            mean: 128.0,
            texture_sigma: 20.0,
            texture: Texture::Noise { smooth: 1 },
            noise_sigma: 2.0,
            seed: 7,
        }
    }
}

impl CamouflageScene {
    /// Left column of the patch at frame `t`; the patch bounces between the
    /// left and right edges.
    pub fn patch_left(&self, t: usize) -> usize {
        let span = self.width.saturating_sub(self.patch_size);
        if span == 0 {
            return 0;
        }
        let pos = (t * self.speed) % (2 * span);
        if pos <= span {
            pos
        } else {
            2 * span - pos
        }
    }

    /// Background profile (indexed by `y`) and patch profile (indexed by the
    /// column inside the patch), both with the configured mean and deviation.
    pub fn profiles(&self) -> (Vec<f64>, Vec<f64>) {
        match self.texture {
            Texture::Sinusoid { period } => {
                // a sinusoid with amplitude sqrt(2) * sigma has deviation sigma
                let amp = self.texture_sigma * 2f64.sqrt();
                let wave = |n: usize| -> Vec<f64> {
                    (0..n)
                        .map(|i| self.mean + amp * (2.0 * PI * (i as f64 + 0.5) / period).sin())
                        .collect()
                };
                (wave(self.height), wave(self.patch_size))
            }
            Texture::Noise { smooth } => {
                // separate stream so the profiles do not depend on frame count
                let mut rng = StdRng::seed_from_u64(self.seed ^ 0x7e57_u64);
                let mut make = |n: usize| self.noise_profile(n, smooth.max(1), &mut rng);
                let bg = make(self.height);
                let fg = make(self.patch_size);
                (bg, fg)
            }
            Texture::Lines { spacing } => {
                let mut rng = StdRng::seed_from_u64(self.seed ^ 0x11e5_u64);
                let spacing = spacing.max(2);
                let mut make = |n: usize| {
                    let mut raw = vec![0.0; n];
                    let mut pos = rng.random_range(0..spacing);
                    while pos < n {
                        raw[pos] = 1.0;
                        pos += rng.random_range(spacing / 2..=spacing * 3 / 2).max(1);
                    }
                    self.normalize(&raw)
                };
                let bg = make(self.height);
                let fg = make(self.patch_size);
                (bg, fg)
            }
        }
    }

    fn noise_profile(&self, n: usize, smooth: usize, rng: &mut StdRng) -> Vec<f64> {
        let raw: Vec<f64> = (0..n + smooth - 1)
            .map(|_| rand_distr::StandardNormal.sample(&mut *rng))
            .collect();
        let boxed: Vec<f64> = raw.windows(smooth).map(|w| w.iter().sum::<f64>()).collect();
        self.normalize(&boxed)
    }

    /// Rescales to the exact sample mean and deviation.
    fn normalize(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd == 0.0 {
            return vec![self.mean; v.len()];
        }
        v.iter()
            .map(|x| self.mean + self.texture_sigma * (x - mean) / sd)
            .collect()
    }

    fn render(&self, t: usize, bg: &[f64], fg: &[f64], mut put: impl FnMut(usize, usize, f64)) {
        let left = self.patch_left(t);
        for y in 0..self.height {
            for x in 0..self.width {
                let inside = x >= left
                    && x < left + self.patch_size
                    && y >= self.patch_top
                    && y < self.patch_top + self.patch_size;
                // the patch texture moves with the patch
                put(x, y, if inside { fg[x - left] } else { bg[y] });
            }
        }
    }

    /// Noise-free intensities of frame `t`, row-major.
    pub fn clean_frame(&self, t: usize) -> Vec<f64> {
        let (bg, fg) = self.profiles();
        let mut out = vec![0.0; self.width * self.height];
        self.render(t, &bg, &fg, |x, y, v| out[y * self.width + x] = v);
        out
    }

    pub fn ground_truth(&self, t: usize) -> Mask {
        let left = self.patch_left(t);
        Mask::from_fn(self.width, self.height, |x, y| {
            x >= left
                && x < left + self.patch_size
                && y >= self.patch_top
                && y < self.patch_top + self.patch_size
        })
    }

    /// All frames and their ground-truth masks.
    pub fn generate(&self) -> (Vec<Frame>, Vec<Mask>) {
        let mut rng = StdRng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_sigma.max(0.0)).expect("finite noise sigma");
        let (bg, fg) = self.profiles();
        let mut frames = Vec::with_capacity(self.frames);
        let mut masks = Vec::with_capacity(self.frames);
        for t in 0..self.frames {
            let mut samples = vec![0u8; self.width * self.height];
            self.render(t, &bg, &fg, |x, y, v| {
                let v = v + noise.sample(&mut rng);
                samples[y * self.width + x] = v.round().clamp(0.0, 255.0) as u8;
            });
            frames.push(Frame::new(self.width, self.height, samples).expect("buffer matches dimensions"));
            masks.push(self.ground_truth(t));
        }
        (frames, masks)
    }
}

/// `frames` copies of a constant frame.
pub fn static_scene(width: usize, height: usize, frames: usize, value: u8) -> Vec<Frame> {
    vec![Frame::filled(width, height, value); frames]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swt::values_std;

    #[test]
    fn patch_bounces() {
        let s = CamouflageScene::default();
        assert_eq!(s.patch_left(0), 0);
        assert_eq!(s.patch_left(88), 88);
        assert_eq!(s.patch_left(89), 87);
        assert_eq!(s.patch_left(176), 0);
        assert!((0..300).all(|t| s.patch_left(t) + 40 <= 128));
    }

    #[test]
    fn textures_share_statistics() {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        for texture in [Texture::Sinusoid { period: 8.0 }, Texture::Noise { smooth: 4 }, Texture::Lines { spacing: 8 }] {
            let s = CamouflageScene { texture, ..CamouflageScene::default() };
            let (bg, fg) = s.profiles();
            assert_eq!((bg.len(), fg.len()), (128, 40));
            assert!((mean(&bg) - 128.0).abs() < 0.5);
            assert!((mean(&fg) - 128.0).abs() < 0.5);
            assert!((values_std(&bg) - 20.0).abs() < 0.5);
            assert!((values_std(&fg) - 20.0).abs() < 0.5);
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let s = CamouflageScene { frames: 3, ..CamouflageScene::default() };
        let (a, ma) = s.generate();
        let (b, mb) = s.generate();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        assert_eq!(ma[0].count_ones(), 1600);
    }

    #[test]
    fn orientation_of_textures() {
        let s = CamouflageScene { texture: Texture::Noise { smooth: 1 }, ..CamouflageScene::default() };
        let img = s.clean_frame(10);
        let at = |x: usize, y: usize| img[y * 128 + x];
        // background rows are constant, patch columns are constant
        assert_eq!(at(0, 5), at(127, 5));
        let left = s.patch_left(10);
        assert_eq!(at(left + 3, 44), at(left + 3, 83));
        assert_ne!(at(left + 3, 44), at(left + 4, 44));
    }
}
