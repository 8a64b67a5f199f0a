//! Wavelet-domain foreground detection for camouflaged moving objects.
//!
//! Frames are decomposed with a non-decimated Haar wavelet transform, every
//! coefficient of every band is tracked by an adaptive Gaussian mixture, and
//! the per-band foreground/background likelihoods are fused across levels and
//! band types into a binary foreground mask.
//!
//! The main entry points are [`pipeline::Detector`] for frame-by-frame use and
//! [`pipeline::run_pipeline`] for processing a directory of frames.

pub mod band_model;
pub mod config;
pub mod error;
pub mod eval;
pub mod frame;
pub mod fusion;
pub mod mask;
pub mod morphology;
pub mod pipeline;
pub mod swt;
pub mod synthetic;

pub use band_model::{
    BandModelBank, BandStats, ForegroundModel, GaussianComponent, GmmParams, Hypothesis,
    LikelihoodPlane, PixelMixture,
};
pub use config::Config;
pub use error::{Error, Result};
pub use eval::{ConfusionCounts, Metrics, MetricsReport};
pub use frame::{Frame, FrameSequence};
pub use fusion::{CombineMode, FusionWeights, LevelFusion};
pub use mask::Mask;
pub use morphology::StructuringElement;
pub use pipeline::{run_pipeline, Detector, FrameOutput, RunOptions};
pub use swt::{BandType, BoundaryMode, CoefficientPlane, WaveletPyramid};
