//! Runs the detector and the image-domain baseline on the synthetic
//! camouflage scene and prints per-frame-mean and pooled F-measures.
//!
//! `cargo run --release --example camouflage -- [key=value ...]`

use std::time::Instant;

use fwfc::eval::{confusion_counts, metrics, ConfusionCounts};
use fwfc::pipeline::run_frames;
use fwfc::synthetic::CamouflageScene;
use fwfc::Config;

fn score(masks: &[fwfc::Mask], truth: &[fwfc::Mask], from: usize) -> (f64, f64) {
    let mut pooled = ConfusionCounts::default();
    let mut sum = 0.0;
    for (m, t) in masks[from..].iter().zip(&truth[from..]) {
        let c = confusion_counts(m, t).unwrap();
        sum += metrics(&c).f_measure;
        pooled += c;
    }
    (sum / (masks.len() - from) as f64, metrics(&pooled).f_measure)
}

fn main() {
    let mut config = Config::default();
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("arguments are key=value");
        config.set(k.trim(), v.trim()).expect("valid setting");
    }
    let scene = CamouflageScene::default();
    let (frames, truth) = scene.generate();

    for (label, cfg) in [("fwfc", config.clone()), ("baseline", Config { levels: 0, ..config })] {
        let start = Instant::now();
        let masks = run_frames(&cfg, &frames).unwrap();
        let (mean_f, pooled_f) = score(&masks, &truth, 100);
        println!(
            "{label:>8}: mean F {mean_f:.4}  pooled F {pooled_f:.4}  ({:.1} s)",
            start.elapsed().as_secs_f64()
        );
    }
}
