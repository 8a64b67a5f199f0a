use crate::error::{Error, Result};

use super::normal_pdf;

/// Hyperparameters of the adaptive mixture, expressed for the image domain.
///
/// Banks scale the three variance values by their band's variance ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmmParams {
    /// Learning rate `alpha`.
    pub learning_rate: f64,
    pub max_components: usize,
    /// `c_f`: portion of the mixture weight allowed to belong to foreground.
    /// The background set is the shortest prefix whose weight exceeds `1 - c_f`.
    pub foreground_portion: f64,
    /// Match gate in standard deviations.
    pub match_sigmas: f64,
    pub var_init: f64,
    pub var_min: f64,
    pub var_max: f64,
    /// Pruning constant as a multiple of the learning rate.
    pub prune_ratio: f64,
    /// Mean-dependent variance enlargement for detail bands.
    pub alpha_boost: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            learning_rate: 0.005,
            max_components: 5,
            foreground_portion: 0.1,
            match_sigmas: 3.0,
            var_init: 15.0 * 15.0,
            var_min: 4.0 * 4.0,
            var_max: 5.0 * 15.0 * 15.0,
            prune_ratio: 0.01,
            alpha_boost: 0.05,
        }
    }
}

impl GmmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("match_sigmas", self.match_sigmas),
            ("var_init", self.var_init),
            ("var_min", self.var_min),
            ("var_max", self.var_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.learning_rate > 1.0 {
            return Err(Error::param("learning_rate must be at most 1"));
        }
        if self.max_components == 0 || self.max_components > 255 {
            return Err(Error::param("max_components must be in 1..=255"));
        }
        if !(0.0..1.0).contains(&self.foreground_portion) {
            return Err(Error::param("foreground_portion must be in [0, 1)"));
        }
        if !(self.var_min <= self.var_init && self.var_init <= self.var_max) {
            return Err(Error::param("need var_min <= var_init <= var_max"));
        }
        if !(self.prune_ratio >= 0.0) || !(self.alpha_boost >= 0.0) {
            return Err(Error::param("prune_ratio and alpha_boost must be nonnegative"));
        }
        Ok(())
    }

    /// The `c_prune` constant subtracted (times the learning rate) from every weight.
    pub fn c_prune(&self) -> f64 {
        self.prune_ratio * self.learning_rate
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Mixture state of one coefficient location, components by descending weight.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PixelMixture {
    pub components: Vec<GaussianComponent>,
}

impl PixelMixture {
    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Density of the background prefix at `x`.
    pub fn background_density(&self, x: f64, foreground_portion: f64) -> f64 {
        let mut cum = 0.0;
        let mut density = 0.0;
        for c in &self.components {
            density += c.weight * normal_pdf(x, c.mean, c.variance);
            cum += c.weight;
            if cum > 1.0 - foreground_portion {
                break;
            }
        }
        density
    }
}

/// Resolved per-bank update constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct UpdateRule {
    pub alpha: f64,
    pub prune: f64,
    pub gate: f64,
    pub var_init: f64,
    pub var_min: f64,
    pub var_max: f64,
    /// Zero for A bands.
    pub boost: f64,
}

impl UpdateRule {
    #[inline]
    fn bounds(&self, mean: f64) -> (f64, f64, f64) {
        let extra = self.boost * mean * mean;
        (
            self.var_init + extra,
            self.var_min + extra,
            self.var_max + extra,
        )
    }

    /// Advances one mixture by one observation. Slices hold `max_components`
    /// slots; `count` is the number in use.
    #[inline]
    pub fn apply(&self, w: &mut [f64], m: &mut [f64], v: &mut [f64], count: &mut u8, x: f64) {
        let max = w.len();
        let n = *count as usize;
        if n == 0 {
            let (init, lo, hi) = self.bounds(x);
            w[0] = 1.0;
            m[0] = x;
            v[0] = init.clamp(lo, hi);
            *count = 1;
            return;
        }

        let mut matched = None;
        let mut best = f64::INFINITY;
        for k in 0..n {
            let d = x - m[k];
            let d2 = d * d;
            if d2 < self.gate * v[k] {
                let md = d2 / v[k];
                if md < best {
                    best = md;
                    matched = Some(k);
                }
            }
        }

        let alpha = self.alpha;
        for (k, wk) in w.iter_mut().enumerate().take(n) {
            let own = if matched == Some(k) { 1.0 } else { 0.0 };
            *wk += alpha * (own - *wk) - self.prune;
        }

        let mut n = n;
        match matched {
            Some(k) => {
                if w[k] > 0.0 {
                    let rho = (alpha / w[k]).min(1.0);
                    let d = x - m[k];
                    m[k] += rho * d;
                    let (_, lo, hi) = self.bounds(m[k]);
                    v[k] = (v[k] + rho * (d * d - v[k])).clamp(lo, hi);
                }
            }
            None => {
                let slot = if n < max {
                    n += 1;
                    n - 1
                } else {
                    n - 1
                };
                let (init, lo, hi) = self.bounds(x);
                w[slot] = alpha;
                m[slot] = x;
                v[slot] = init.clamp(lo, hi);
            }
        }

        // drop nonpositive weights, keeping order
        let mut kept = 0;
        for k in 0..n {
            if w[k] > 0.0 {
                w[kept] = w[k];
                m[kept] = m[k];
                v[kept] = v[k];
                kept += 1;
            }
        }
        n = kept;

        let total: f64 = w[..n].iter().sum();
        if total > 0.0 {
            for wk in &mut w[..n] {
                *wk /= total;
            }
        }

        // insertion sort by descending weight; stable for equal weights
        for i in 1..n {
            let mut j = i;
            while j > 0 && w[j - 1] < w[j] {
                w.swap(j - 1, j);
                m.swap(j - 1, j);
                v.swap(j - 1, j);
                j -= 1;
            }
        }
        *count = n as u8;
    }
}
