//! Independent reference implementations shared by the integration tests
//! and the acceptance runner. Written from the model definitions, not from
//! the library code, and deliberately naive.
#![allow(dead_code)]

use fwfc::band_model::{BandModelBank, GmmParams};
use fwfc::swt::{BandType, CoefficientPlane};
use fwfc::Hypothesis;
use fwfc::LikelihoodPlane;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comp {
    pub w: f64,
    pub mu: f64,
    pub var: f64,
}

/// Scalar adaptive mixture for one coefficient.
#[derive(Clone, Debug)]
pub struct RefMixture {
    pub comps: Vec<Comp>,
    alpha: f64,
    max: usize,
    lambda: f64,
    c_prune: f64,
    init: f64,
    lo: f64,
    hi: f64,
    boost: f64,
}

impl RefMixture {
    pub fn new(p: &GmmParams, ratio: f64, detail: bool) -> Self {
        RefMixture {
            comps: Vec::new(),
            alpha: p.learning_rate,
            max: p.max_components,
            lambda: p.match_sigmas,
            c_prune: p.prune_ratio * p.learning_rate,
            init: p.var_init * ratio,
            lo: p.var_min * ratio,
            hi: p.var_max * ratio,
            boost: if detail { p.alpha_boost } else { 0.0 },
        }
    }

    fn limits(&self, mean: f64) -> (f64, f64, f64) {
        let e = self.boost * mean.powi(2);
        (self.init + e, self.lo + e, self.hi + e)
    }

    fn fresh(&self, x: f64, w: f64) -> Comp {
        let (init, lo, hi) = self.limits(x);
        Comp { w, mu: x, var: init.max(lo).min(hi) }
    }

    pub fn observe(&mut self, x: f64) {
        if self.comps.is_empty() {
            let c = self.fresh(x, 1.0);
            self.comps.push(c);
            return;
        }
        // nearest component (in standard deviations) among those inside the gate
        let mut hit: Option<usize> = None;
        for (k, c) in self.comps.iter().enumerate() {
            let d2 = (x - c.mu).powi(2);
            if d2 < self.lambda.powi(2) * c.var {
                let better = match hit {
                    None => true,
                    Some(j) => {
                        let cj = self.comps[j];
                        d2 / c.var < (x - cj.mu).powi(2) / cj.var
                    }
                };
                if better {
                    hit = Some(k);
                }
            }
        }
        let a = self.alpha;
        for (k, c) in self.comps.iter_mut().enumerate() {
            let o = if Some(k) == hit { 1.0 } else { 0.0 };
            c.w = c.w + a * (o - c.w) - a * self.c_prune;
        }
        match hit {
            Some(k) => {
                let c = self.comps[k];
                if c.w > 0.0 {
                    let rho = f64::min(1.0, a / c.w);
                    let mu = c.mu + rho * (x - c.mu);
                    let var = c.var + rho * ((x - c.mu).powi(2) - c.var);
                    let (_, lo, hi) = self.limits(mu);
                    self.comps[k].mu = mu;
                    self.comps[k].var = var.max(lo).min(hi);
                }
            }
            None => {
                let c = self.fresh(x, a);
                if self.comps.len() == self.max {
                    *self.comps.last_mut().unwrap() = c;
                } else {
                    self.comps.push(c);
                }
            }
        }
        self.comps.retain(|c| c.w > 0.0);
        let total: f64 = self.comps.iter().map(|c| c.w).sum();
        for c in &mut self.comps {
            c.w /= total;
        }
        // Vec::sort_by is stable
        self.comps.sort_by(|p, q| q.w.partial_cmp(&p.w).unwrap());
    }

    pub fn background_density(&self, x: f64, c_f: f64) -> f64 {
        let mut acc = 0.0;
        let mut sum = 0.0;
        for c in &self.comps {
            acc += c.w * (-(x - c.mu).powi(2) / (2.0 * c.var)).exp() / (2.0 * std::f64::consts::PI * c.var).sqrt();
            sum += c.w;
            if sum > 1.0 - c_f {
                break;
            }
        }
        acc
    }
}

/// Largest absolute difference between library and reference, over every
/// component field after every step and over the background density.
pub struct GmmComparison {
    pub sequences: usize,
    pub steps: usize,
    pub max_error: f64,
    pub structural_mismatches: usize,
}

/// Runs `n` random sequences (lengths, values, band kinds, ratios and
/// hyperparameters all drawn from `seed`) through a 1x1 bank and the
/// reference.
pub fn compare_gmm(seed: u64, n: usize) -> GmmComparison {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = GmmComparison { sequences: n, steps: 0, max_error: 0.0, structural_mismatches: 0 };
    for _ in 0..n {
        let mut p = GmmParams::default();
        if rng.random_bool(0.5) {
            p.learning_rate = rng.random_range(0.001..0.2);
            p.max_components = rng.random_range(1..=6);
            p.foreground_portion = rng.random_range(0.05..0.5);
            p.alpha_boost = rng.random_range(0.0..0.2);
        }
        let band = BandType::ALL[rng.random_range(0..4)];
        let ratio = 10f64.powf(rng.random_range(-3.0..0.5));
        let mut bank = BandModelBank::new(1, 1, band, 1, p, ratio).unwrap();
        let mut reference = RefMixture::new(&p, ratio, band.is_detail());

        let len = rng.random_range(1..80);
        let centers: Vec<f64> = (0..3).map(|_| rng.random_range(-60.0..60.0) * ratio.sqrt()).collect();
        let spread = rng.random_range(0.1..8.0) * ratio.sqrt();
        for _ in 0..len {
            let c = centers[rng.random_range(0..centers.len())];
            let x = if rng.random_bool(0.1) {
                c // exact repeats exercise zero innovations
            } else {
                c + spread * rng.random_range(-3.0..3.0)
            };
            let plane = CoefficientPlane::new(1, 1, vec![x], band, 1).unwrap();
            let probe = x + spread * rng.random_range(-2.0..2.0);
            bank.update(&plane).unwrap();
            reference.observe(x);
            out.steps += 1;

            let got = bank.mixture(0, 0);
            if got.components.len() != reference.comps.len() {
                out.structural_mismatches += 1;
                continue;
            }
            for (g, r) in got.components.iter().zip(&reference.comps) {
                for (a, b) in [(g.weight, r.w), (g.mean, r.mu), (g.variance, r.var)] {
                    let scale = b.abs().max(1.0);
                    out.max_error = out.max_error.max((a - b).abs() / scale);
                }
            }
            let probe_plane = CoefficientPlane::new(1, 1, vec![probe], band, 1).unwrap();
            let lib = bank.background_likelihood(&probe_plane).unwrap().values[0];
            let refd = reference.background_density(probe, p.foreground_portion);
            out.max_error = out.max_error.max((lib - refd).abs() / refd.abs().max(1.0));
        }
    }
    out
}

/// Feeds i.i.d. N(mean, sd^2) samples to one image-domain pixel and returns
/// the dominant component's mean and deviation.
pub fn stationarity(seed: u64, mean: f64, sd: f64, n: usize) -> (f64, f64) {
    use rand_distr::{Distribution, Normal};
    let mut rng = StdRng::seed_from_u64(seed);
    let dist = Normal::new(mean, sd).unwrap();
    let mut bank = BandModelBank::new(1, 1, BandType::A, 0, GmmParams::default(), 1.0).unwrap();
    for _ in 0..n {
        let plane = CoefficientPlane::new(1, 1, vec![dist.sample(&mut rng)], BandType::A, 0).unwrap();
        bank.update(&plane).unwrap();
    }
    let top = bank.mixture(0, 0).components[0];
    (top.mean, top.variance.sqrt())
}

/// `(1/N) sum_l w_l p_l(x, y)` pixel by pixel.
pub fn brute_fuse_levels(planes: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = planes.len() as f64;
    (0..planes[0].len())
        .map(|i| {
            let mut s = 0.0;
            for (p, w) in planes.iter().zip(weights) {
                s += w * p[i];
            }
            s / n
        })
        .collect()
}

/// Direct product comparison, ties to background.
pub fn brute_band_decision(fg: &[Vec<f64>], bg: &[Vec<f64>]) -> Vec<bool> {
    (0..fg[0].len())
        .map(|i| {
            let pf: f64 = fg.iter().map(|p| p[i]).product();
            let pb: f64 = bg.iter().map(|p| p[i]).product();
            pf > pb
        })
        .collect()
}

/// Average of `alpha^distance` over the `2^l x 2^l` support, distances to
/// the geometric center.
pub fn brute_translation_weight(level: u32, alpha: f64) -> f64 {
    let side = 1usize << level;
    let c = (side as f64 - 1.0) / 2.0;
    let mut s = 0.0;
    for y in 0..side {
        for x in 0..side {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            s += alpha.powf(d);
        }
    }
    s / (side * side) as f64
}

pub fn random_planes(rng: &mut StdRng, w: usize, h: usize, n: usize, hyp: Hypothesis) -> Vec<LikelihoodPlane> {
    (0..n)
        .map(|_| {
            let v = (0..w * h).map(|_| 10f64.powf(rng.random_range(-6.0..1.0))).collect();
            LikelihoodPlane::new(w, h, v, hyp).unwrap()
        })
        .collect()
}

/// Writes `in%06d.png` frames to `dir/input` and `gt%06d.png` masks to
/// `dir/gt`, numbered from 1.
pub fn write_dataset(dir: &std::path::Path, frames: &[fwfc::Frame], truth: &[fwfc::Mask]) {
    let input = dir.join("input");
    let gt = dir.join("gt");
    std::fs::create_dir_all(&input).unwrap();
    std::fs::create_dir_all(&gt).unwrap();
    for (t, (f, m)) in frames.iter().zip(truth).enumerate() {
        f.save(&input.join(format!("in{:06}.png", t + 1))).unwrap();
        fwfc::frame::write_mask(m, &gt.join(format!("gt{:06}.png", t + 1))).unwrap();
    }
}

/// Small camouflage sequence used by the file-level tests.
pub fn small_scene(frames: usize) -> (Vec<fwfc::Frame>, Vec<fwfc::Mask>) {
    fwfc::synthetic::CamouflageScene {
        width: 64,
        height: 64,
        frames,
        patch_size: 20,
        patch_top: 22,
        ..Default::default()
    }
    .generate()
}

/// `(file name, contents)` of every file in `dir`, sorted by name.
pub fn read_outputs(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
