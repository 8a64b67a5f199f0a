use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::swt::{BandType, CoefficientPlane};

use super::mixture::{GaussianComponent, GmmParams, PixelMixture, UpdateRule};
use super::{normal_pdf, Hypothesis, LikelihoodPlane};

/// Adaptive mixtures for every coefficient of one wavelet band.
///
/// Component state is stored as flat arrays with `max_components` slots per
/// location. Slots past a location's count are stale and never read.
#[derive(Clone, Debug, PartialEq)]
pub struct BandModelBank {
    band: BandType,
    level: usize,
    width: usize,
    height: usize,
    params: GmmParams,
    scale_ratio: f64,
    rule: UpdateRule,
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    counts: Vec<u8>,
}

impl BandModelBank {
    /// Creates an empty bank whose variance limits are the reference values of
    /// `params` multiplied by `scale_ratio` (band variance over image variance).
    /// Detail bands additionally enlarge the limits by `alpha_boost * mean^2`.
    pub fn new(
        width: usize,
        height: usize,
        band: BandType,
        level: usize,
        params: GmmParams,
        scale_ratio: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("bank dimensions must be positive"));
        }
        if !(scale_ratio > 0.0) || !scale_ratio.is_finite() {
            return Err(Error::param(format!(
                "scale ratio must be positive, got {scale_ratio}"
            )));
        }
        params.validate()?;
        let rule = UpdateRule {
            alpha: params.learning_rate,
            prune: params.learning_rate * params.c_prune(),
            gate: params.match_sigmas * params.match_sigmas,
            var_init: params.var_init * scale_ratio,
            var_min: params.var_min * scale_ratio,
            var_max: params.var_max * scale_ratio,
            boost: if band.is_detail() { params.alpha_boost } else { 0.0 },
        };
        let n = width * height;
        let slots = n * params.max_components;
        Ok(BandModelBank {
            band,
            level,
            width,
            height,
            params,
            scale_ratio,
            rule,
            weights: vec![0.0; slots],
            means: vec![0.0; slots],
            variances: vec![0.0; slots],
            counts: vec![0; n],
        })
    }

    pub fn band(&self) -> BandType {
        self.band
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn params(&self) -> &GmmParams {
        &self.params
    }

    pub fn scale_ratio(&self) -> f64 {
        self.scale_ratio
    }

    /// Scaled `(init, min, max)` variances before any mean-dependent boost.
    pub fn variance_limits(&self) -> (f64, f64, f64) {
        (self.rule.var_init, self.rule.var_min, self.rule.var_max)
    }

    /// Effective `(init, min, max)` variances for a component with `mean`.
    pub fn effective_limits(&self, mean: f64) -> (f64, f64, f64) {
        let extra = self.rule.boost * mean * mean;
        (
            self.rule.var_init + extra,
            self.rule.var_min + extra,
            self.rule.var_max + extra,
        )
    }

    pub fn mixture(&self, x: usize, y: usize) -> PixelMixture {
        let idx = y * self.width + x;
        let base = idx * self.params.max_components;
        let n = self.counts[idx] as usize;
        PixelMixture {
            components: (base..base + n)
                .map(|s| GaussianComponent {
                    weight: self.weights[s],
                    mean: self.means[s],
                    variance: self.variances[s],
                })
                .collect(),
        }
    }

    /// Overwrites one location's state.
    pub fn set_mixture(&mut self, x: usize, y: usize, mixture: &PixelMixture) -> Result<()> {
        let max = self.params.max_components;
        if mixture.components.len() > max {
            return Err(Error::param(format!(
                "{} components exceed the maximum of {max}",
                mixture.components.len()
            )));
        }
        let idx = y * self.width + x;
        let base = idx * max;
        for (k, c) in mixture.components.iter().enumerate() {
            self.weights[base + k] = c.weight;
            self.means[base + k] = c.mean;
            self.variances[base + k] = c.variance;
        }
        self.counts[idx] = mixture.components.len() as u8;
        Ok(())
    }

    fn check_plane(&self, plane: &CoefficientPlane) -> Result<()> {
        if plane.dims() != self.dims() {
            return Err(Error::dims_in(
                self.dims(),
                plane.dims(),
                format!("bank {}{}", self.band, self.level),
            ));
        }
        Ok(())
    }

    /// Feeds one plane of observations to every mixture.
    pub fn update(&mut self, plane: &CoefficientPlane) -> Result<()> {
        self.check_plane(plane)?;
        let max = self.params.max_components;
        let rule = self.rule;
        for ((((&x, w), m), v), count) in plane
            .values
            .iter()
            .zip(self.weights.chunks_exact_mut(max))
            .zip(self.means.chunks_exact_mut(max))
            .zip(self.variances.chunks_exact_mut(max))
            .zip(self.counts.iter_mut())
        {
            rule.apply(w, m, v, count, x);
        }
        Ok(())
    }

    /// Background density of each coefficient under the current mixtures.
    pub fn background_likelihood(&self, plane: &CoefficientPlane) -> Result<LikelihoodPlane> {
        self.check_plane(plane)?;
        let max = self.params.max_components;
        let threshold = 1.0 - self.params.foreground_portion;
        let values = plane
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let base = i * max;
                let n = self.counts[i] as usize;
                prefix_density(
                    &self.weights[base..base + n],
                    &self.means[base..base + n],
                    &self.variances[base..base + n],
                    threshold,
                    x,
                )
            })
            .collect();
        Ok(LikelihoodPlane {
            width: self.width,
            height: self.height,
            values,
            hypothesis: Hypothesis::Background,
        })
    }

    /// [`update`](Self::update) followed by
    /// [`background_likelihood`](Self::background_likelihood) in one pass.
    pub fn update_and_evaluate(&mut self, plane: &CoefficientPlane) -> Result<LikelihoodPlane> {
        self.check_plane(plane)?;
        let max = self.params.max_components;
        let rule = self.rule;
        let threshold = 1.0 - self.params.foreground_portion;
        let mut values = Vec::with_capacity(plane.values.len());
        for ((((&x, w), m), v), count) in plane
            .values
            .iter()
            .zip(self.weights.chunks_exact_mut(max))
            .zip(self.means.chunks_exact_mut(max))
            .zip(self.variances.chunks_exact_mut(max))
            .zip(self.counts.iter_mut())
        {
            rule.apply(w, m, v, count, x);
            let n = *count as usize;
            values.push(prefix_density(&w[..n], &m[..n], &v[..n], threshold, x));
        }
        Ok(LikelihoodPlane {
            width: self.width,
            height: self.height,
            values,
            hypothesis: Hypothesis::Background,
        })
    }

    /// Updates only the locations where `allow` is true.
    pub fn update_where(&mut self, plane: &CoefficientPlane, allow: &[u8]) -> Result<()> {
        self.check_plane(plane)?;
        if allow.len() != plane.values.len() {
            return Err(Error::param("update selector length mismatch"));
        }
        let max = self.params.max_components;
        let rule = self.rule;
        for (((((&x, w), m), v), count), &ok) in plane
            .values
            .iter()
            .zip(self.weights.chunks_exact_mut(max))
            .zip(self.means.chunks_exact_mut(max))
            .zip(self.variances.chunks_exact_mut(max))
            .zip(self.counts.iter_mut())
            .zip(allow)
        {
            if ok != 0 {
                rule.apply(w, m, v, count, x);
            }
        }
        Ok(())
    }

    pub(crate) fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(&[self.band.index() as u8])?;
        for v in [self.level, self.width, self.height, self.params.max_components] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        let p = &self.params;
        for v in [
            p.learning_rate,
            p.foreground_portion,
            p.match_sigmas,
            p.var_init,
            p.var_min,
            p.var_max,
            p.prune_ratio,
            p.alpha_boost,
            self.scale_ratio,
        ] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&self.counts)?;
        for arr in [&self.weights, &self.means, &self.variances] {
            for v in arr.iter() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub(crate) fn read_from(input: &mut impl Read) -> Result<Self> {
        let mut b = [0u8; 1];
        input.read_exact(&mut b)?;
        let band = *BandType::ALL
            .get(b[0] as usize)
            .ok_or_else(|| Error::Checkpoint(format!("bad band tag {}", b[0])))?;
        let mut u = [0u64; 4];
        for slot in &mut u {
            *slot = read_u64(input)?;
        }
        let [level, width, height, max_components] = u.map(|v| v as usize);
        let mut f = [0f64; 9];
        for slot in &mut f {
            *slot = read_f64(input)?;
        }
        let params = GmmParams {
            learning_rate: f[0],
            max_components,
            foreground_portion: f[1],
            match_sigmas: f[2],
            var_init: f[3],
            var_min: f[4],
            var_max: f[5],
            prune_ratio: f[6],
            alpha_boost: f[7],
        };
        if width.checked_mul(height).is_none_or(|n| n > (1 << 32)) {
            return Err(Error::Checkpoint(format!("implausible bank size {width}x{height}")));
        }
        let mut bank = BandModelBank::new(width, height, band, level, params, f[8])
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        input.read_exact(&mut bank.counts)?;
        if bank.counts.iter().any(|&c| c as usize > max_components) {
            return Err(Error::Checkpoint("component count exceeds maximum".into()));
        }
        for arr in [&mut bank.weights, &mut bank.means, &mut bank.variances] {
            for v in arr.iter_mut() {
                *v = read_f64(input)?;
            }
        }
        Ok(bank)
    }
}

#[inline]
fn prefix_density(w: &[f64], m: &[f64], v: &[f64], threshold: f64, x: f64) -> f64 {
    let mut cum = 0.0;
    let mut density = 0.0;
    for k in 0..w.len() {
        density += w[k] * normal_pdf(x, m[k], v[k]);
        cum += w[k];
        if cum > threshold {
            break;
        }
    }
    density
}

pub(crate) fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(input: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn single(band: BandType) -> BandModelBank {
        BandModelBank::new(1, 1, band, 1, GmmParams::default(), 1.0).unwrap()
    }

    fn obs(band: BandType, x: f64) -> CoefficientPlane {
        CoefficientPlane::new(1, 1, vec![x], band, 1).unwrap()
    }

    #[test]
    fn init_scales_reference_variances() {
        let b = BandModelBank::new(4, 4, BandType::H, 2, GmmParams::default(), 0.04).unwrap();
        let (init, min, max) = b.variance_limits();
        assert!((init - 9.0).abs() < 1e-12);
        assert!((min - 0.64).abs() < 1e-12);
        assert!((max - 45.0).abs() < 1e-12);

        let b = BandModelBank::new(4, 4, BandType::A, 2, GmmParams::default(), 1.0).unwrap();
        assert_eq!(b.variance_limits(), (225.0, 16.0, 1125.0));
        assert_eq!(b.mixture(3, 3).components.len(), 0);

        for bad in [0.0, -1.0, f64::NAN] {
            assert!(BandModelBank::new(4, 4, BandType::A, 1, GmmParams::default(), bad).is_err());
        }
        assert!(BandModelBank::new(0, 4, BandType::A, 1, GmmParams::default(), 1.0).is_err());
    }

    #[test]
    fn first_sample_creates_component() {
        let mut b = single(BandType::A);
        b.update(&obs(BandType::A, 7.0)).unwrap();
        let mix = b.mixture(0, 0);
        assert_eq!(
            mix.components,
            vec![GaussianComponent { weight: 1.0, mean: 7.0, variance: 225.0 }]
        );

        // detail bands enlarge the initial variance with the mean
        let mut b = single(BandType::H);
        b.update(&obs(BandType::H, 10.0)).unwrap();
        assert!((b.mixture(0, 0).components[0].variance - (225.0 + 0.05 * 100.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_innovation_shrinks_variance() {
        let mut b = single(BandType::A);
        let start = PixelMixture {
            components: vec![GaussianComponent { weight: 1.0, mean: 100.0, variance: 25.0 }],
        };
        b.set_mixture(0, 0, &start).unwrap();
        b.update(&obs(BandType::A, 100.0)).unwrap();
        let c = b.mixture(0, 0).components[0];
        assert_eq!(c.mean, 100.0);
        assert!(c.variance < 25.0 && c.variance >= 16.0);
        for _ in 0..2000 {
            b.update(&obs(BandType::A, 100.0)).unwrap();
        }
        assert_eq!(b.mixture(0, 0).components[0].variance, 16.0);
    }

    #[test]
    fn unmatched_sample_adds_component() {
        let mut b = single(BandType::A);
        let start = PixelMixture {
            components: vec![GaussianComponent { weight: 1.0, mean: 0.0, variance: 4.0 }],
        };
        b.set_mixture(0, 0, &start).unwrap();
        // (100 - 0)^2 = 10000 > 9 * 4: no match
        b.update(&obs(BandType::A, 100.0)).unwrap();
        let mix = b.mixture(0, 0);
        assert_eq!(mix.components.len(), 2);
        assert_eq!(mix.components[1].mean, 100.0);
        assert!((mix.components[1].weight - 0.005).abs() < 1e-6);
        assert!((mix.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn background_likelihood_examples() {
        let mut b = single(BandType::A);
        b.set_mixture(
            0,
            0,
            &PixelMixture {
                components: vec![GaussianComponent { weight: 1.0, mean: 0.0, variance: 1.0 }],
            },
        )
        .unwrap();
        let lp = b.background_likelihood(&obs(BandType::A, 0.0)).unwrap();
        assert!((lp.values[0] - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert_eq!(lp.hypothesis, Hypothesis::Background);

        let params = GmmParams { foreground_portion: 0.2, ..GmmParams::default() };
        let mut b = BandModelBank::new(1, 1, BandType::A, 1, params, 1.0).unwrap();
        b.set_mixture(
            0,
            0,
            &PixelMixture {
                components: vec![
                    GaussianComponent { weight: 0.9, mean: 0.0, variance: 1.0 },
                    GaussianComponent { weight: 0.1, mean: 50.0, variance: 1.0 },
                ],
            },
        )
        .unwrap();
        let lp = b.background_likelihood(&obs(BandType::A, 50.0)).unwrap();
        assert!(lp.values[0] < 1e-300);
    }

    #[test]
    fn dimension_mismatch() {
        let mut b = BandModelBank::new(4, 4, BandType::V, 1, GmmParams::default(), 1.0).unwrap();
        let p = CoefficientPlane::new(4, 3, vec![0.0; 12], BandType::V, 1).unwrap();
        assert!(matches!(b.update(&p), Err(Error::DimensionMismatch { .. })));
        assert!(b.background_likelihood(&p).is_err());
    }

    #[test]
    fn fused_pass_matches_separate_calls() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut a = BandModelBank::new(8, 8, BandType::D, 2, GmmParams::default(), 0.3).unwrap();
        let mut b = a.clone();
        for _ in 0..40 {
            let values: Vec<f64> = (0..64).map(|_| rng.random_range(-30.0..30.0)).collect();
            let p = CoefficientPlane::new(8, 8, values, BandType::D, 2).unwrap();
            a.update(&p).unwrap();
            let la = a.background_likelihood(&p).unwrap();
            let lb = b.update_and_evaluate(&p).unwrap();
            assert_eq!(la, lb);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn converges_on_stationary_input() {
        let mut rng = StdRng::seed_from_u64(2024);
        let noise = Normal::new(100.0, 5.0).unwrap();
        let mut b = single(BandType::A);
        for _ in 0..1000 {
            b.update(&obs(BandType::A, noise.sample(&mut rng))).unwrap();
        }
        let c = b.mixture(0, 0).components[0];
        assert!((c.mean - 100.0).abs() <= 1.0, "mean {}", c.mean);
        assert!((c.variance.sqrt() - 5.0).abs() <= 1.0, "sigma {}", c.variance.sqrt());
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = StdRng::seed_from_u64(5);
        let mut b = BandModelBank::new(5, 3, BandType::H, 3, GmmParams::default(), 0.7).unwrap();
        for _ in 0..30 {
            let values: Vec<f64> = (0..15).map(|_| rng.random_range(-9.0..9.0)).collect();
            b.update(&CoefficientPlane::new(5, 3, values, BandType::H, 3).unwrap()).unwrap();
        }
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        let back = BandModelBank::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, b);
        assert!(BandModelBank::read_from(&mut &buf[..buf.len() - 1]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn weights_and_variances_stay_valid(
            seq in proptest::collection::vec(-60.0f64..60.0, 1..200),
            ratio in 0.01f64..2.0,
            detail in any::<bool>(),
        ) {
            let band = if detail { BandType::H } else { BandType::A };
            let mut b = BandModelBank::new(1, 1, band, 1, GmmParams::default(), ratio).unwrap();
            for x in seq {
                b.update(&obs(band, x)).unwrap();
                let mix = b.mixture(0, 0);
                prop_assert!(!mix.components.is_empty());
                prop_assert!(mix.components.len() <= 5);
                prop_assert!((mix.total_weight() - 1.0).abs() < 1e-6);
                for pair in mix.components.windows(2) {
                    prop_assert!(pair[0].weight >= pair[1].weight);
                }
                let mut bound = 0.0;
                for c in &mix.components {
                    prop_assert!(c.weight >= 0.0);
                    let (_, lo, hi) = b.effective_limits(c.mean);
                    prop_assert!(c.variance >= lo * (1.0 - 1e-12) && c.variance <= hi * (1.0 + 1e-12));
                    bound += c.weight / (2.0 * std::f64::consts::PI * lo).sqrt();
                }
                let lp = b.background_likelihood(&obs(band, x)).unwrap();
                prop_assert!(lp.values[0] >= 0.0 && lp.values[0] <= bound * (1.0 + 1e-12));
            }
        }
    }
}
