//! Directory-level driver: load, detect, write masks, score.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::Detector;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{ConfusionCounts, MetricsReport, VideoAccumulator};
use crate::frame::{
    crop_mask, crop_to_multiple, frame_number, list_frames, load_frame_sequence,
    load_mask_sequence, write_mask, Frame,
};
use crate::mask::Mask;
use crate::swt::decompose;

/// Where to read frames from and where to put results.
#[derive(Clone, Debug)]
pub struct RunOptions {
    /// A directory of frames, or a directory whose subdirectories are videos.
    pub input: PathBuf,
    pub output: PathBuf,
    /// Ground truth, laid out like `input`.
    pub gt: Option<PathBuf>,
    /// Glob applied to file names inside each video directory.
    pub pattern: String,
    pub report: Option<PathBuf>,
    pub dump_bands: Option<PathBuf>,
    /// Resumed from if present, written after the run. Single videos only.
    pub checkpoint: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        RunOptions {
            input: input.into(),
            output: output.into(),
            gt: None,
            pattern: "*".to_string(),
            report: None,
            dump_bands: None,
            checkpoint: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoSummary {
    pub name: String,
    pub frames: usize,
    /// Frames that had ground truth and entered the counts.
    pub scored_frames: usize,
    pub counts: ConfusionCounts,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub videos: Vec<VideoSummary>,
    /// Present only when ground truth was supplied.
    pub report: Option<MetricsReport>,
}

/// Runs the detector over already loaded frames and returns one cleaned mask
/// per frame. Frames are cropped to the configured multiple first.
pub fn run_frames(config: &Config, frames: &[Frame]) -> Result<Vec<Mask>> {
    let cropped = crop_all(config, frames)?;
    let mut detector = Detector::new(config.clone(), &cropped)?;
    cropped
        .iter()
        .map(|f| detector.process(f).map(|out| out.mask))
        .collect()
}

fn crop_all(config: &Config, frames: &[Frame]) -> Result<Vec<Frame>> {
    let factor = config.crop_factor();
    frames.iter().map(|f| crop_to_multiple(f, factor)).collect()
}

/// `(name, frames dir, gt dir)` per video.
fn discover(opts: &RunOptions) -> Result<Vec<(String, PathBuf, Option<PathBuf>)>> {
    let name_of = |p: &Path| {
        p.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".to_string())
    };
    if !list_frames(&opts.input, &opts.pattern)?.is_empty() {
        return Ok(vec![(name_of(&opts.input), opts.input.clone(), opts.gt.clone())]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(&opts.input)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut videos = Vec::new();
    for dir in dirs {
        if list_frames(&dir, &opts.pattern)?.is_empty() {
            continue;
        }
        let name = name_of(&dir);
        let gt = opts.gt.as_ref().map(|g| g.join(&name));
        videos.push((name, dir, gt));
    }
    if videos.is_empty() {
        return Err(Error::NoFrames {
            dir: opts.input.clone(),
            pattern: opts.pattern.clone(),
        });
    }
    Ok(videos)
}

fn output_stem(source: &str) -> String {
    Path::new(source)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string())
}

/// Processes every video under `opts.input`, writing `<stem>.png` masks and a
/// `weights.txt` fusion weight table per video. With ground truth, frames are
/// matched by frame number and scored; a report CSV is written if requested.
/// If a video fails, the rows finished so far are still written.
pub fn run_pipeline(config: &Config, opts: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    if opts.report.is_some() && opts.gt.is_none() {
        return Err(Error::param("a report needs ground truth (--gt)"));
    }
    let videos = discover(opts)?;
    if opts.checkpoint.is_some() && videos.len() > 1 {
        return Err(Error::param("checkpoints support a single video per run"));
    }
    let multi = videos.len() > 1;
    let mut summary = RunSummary::default();
    let mut report = MetricsReport::default();

    for (name, dir, gt) in videos {
        let out_dir = if multi { opts.output.join(&name) } else { opts.output.clone() };
        let dump_dir = opts
            .dump_bands
            .as_ref()
            .map(|d| if multi { d.join(&name) } else { d.clone() });
        let result = run_video(config, opts, &name, &dir, gt.as_deref(), &out_dir, dump_dir.as_deref());
        match result {
            Ok(video) => {
                if gt.is_some() {
                    report.push(video.name.clone(), video.counts);
                }
                summary.videos.push(video);
            }
            Err(e) => {
                if let (Some(path), false) = (&opts.report, report.rows.is_empty()) {
                    warn!("writing partial report after failure in {name}");
                    report.write_csv(path)?;
                }
                return Err(e);
            }
        }
    }

    if opts.gt.is_some() {
        if let Some(path) = &opts.report {
            report.write_csv(path)?;
        }
        for row in &report.rows {
            info!(
                "{}: recall {:.4} precision {:.4} F {:.4}",
                row.video, row.metrics.recall, row.metrics.precision, row.metrics.f_measure
            );
        }
        summary.report = Some(report);
    }
    Ok(summary)
}

fn run_video(
    config: &Config,
    opts: &RunOptions,
    name: &str,
    dir: &Path,
    gt_dir: Option<&Path>,
    out_dir: &Path,
    dump_dir: Option<&Path>,
) -> Result<VideoSummary> {
    let seq = load_frame_sequence(dir, &opts.pattern)?;
    let frames = crop_all(config, &seq.frames)?;
    let (w, h) = frames[0].dims();
    info!("{name}: {} frames, cropped to {w}x{h}", frames.len());

    let gt: BTreeMap<u64, Mask> = match gt_dir {
        Some(g) => load_mask_sequence(g, "*")?
            .into_iter()
            .map(|(n, m)| crop_mask(&m, w, h).map(|m| (n, m)))
            .collect::<Result<_>>()?,
        None => BTreeMap::new(),
    };
    if gt_dir.is_some() && gt.is_empty() {
        warn!("{name}: no numbered ground-truth masks found");
    }

    let mut detector = match &opts.checkpoint {
        Some(path) if path.exists() => {
            let d = Detector::load_checkpoint(path)?;
            if d.dims() != (w, h) {
                return Err(Error::dims_in(d.dims(), (w, h), "checkpoint vs input"));
            }
            if d.config() != config {
                warn!("{name}: checkpoint config differs from the current one; using the checkpoint's");
            }
            info!("{name}: resumed from {} after {} frames", path.display(), d.frames_processed());
            d
        }
        _ => Detector::new(config.clone(), &frames)?,
    };

    fs::create_dir_all(out_dir)?;
    if let Some(weights) = detector.weights() {
        fs::write(out_dir.join("weights.txt"), weights.report())?;
    }
    if let Some(d) = dump_dir {
        fs::create_dir_all(d)?;
    }

    let mut acc = VideoAccumulator::default();
    for (frame, source) in frames.iter().zip(&seq.source_names) {
        let out = detector.process(frame)?;
        let stem = output_stem(source);
        write_mask(&out.mask, &out_dir.join(format!("{stem}.png")))?;
        if let Some(d) = dump_dir {
            if !config.is_baseline() {
                decompose(frame, config.levels, config.boundary)?.dump(d, &stem)?;
            }
        }
        if let Some(truth) = frame_number(source).and_then(|n| gt.get(&n)) {
            acc.add(&out.mask, truth)?;
        }
    }

    if let Some(path) = &opts.checkpoint {
        detector.save_checkpoint(path)?;
    }
    Ok(VideoSummary {
        name: name.to_string(),
        frames: frames.len(),
        scored_frames: acc.frames,
        counts: acc.counts,
    })
}

/// Scores a directory of predicted masks against ground truth, matching files
/// by frame number. Subdirectories present in both are treated as videos.
pub fn evaluate_dirs(pred: &Path, gt: &Path) -> Result<MetricsReport> {
    let mut report = MetricsReport::default();
    let flat = !list_frames(pred, "*")?.is_empty();
    let pairs: Vec<(String, PathBuf, PathBuf)> = if flat {
        let name = pred
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".to_string());
        vec![(name, pred.to_path_buf(), gt.to_path_buf())]
    } else {
        let mut v: Vec<_> = fs::read_dir(pred)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir() && gt.join(p.file_name().unwrap()).is_dir())
            .map(|p| {
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                let g = gt.join(&name);
                (name, p, g)
            })
            .collect();
        v.sort();
        v
    };
    if pairs.is_empty() {
        return Err(Error::NoFrames {
            dir: pred.to_path_buf(),
            pattern: "*".to_string(),
        });
    }
    for (name, p, g) in pairs {
        let truth: BTreeMap<u64, Mask> = load_mask_sequence(&g, "*")?.into_iter().collect();
        let mut acc = VideoAccumulator::default();
        for (n, mask) in load_mask_sequence(&p, "*")? {
            if let Some(t) = truth.get(&n) {
                let t = crop_mask(t, mask.width(), mask.height())?;
                acc.add(&mask, &t)?;
            }
        }
        if acc.frames == 0 {
            warn!("{name}: no prediction matched a ground-truth frame");
        }
        report.push(name, acc.counts);
    }
    Ok(report)
}
