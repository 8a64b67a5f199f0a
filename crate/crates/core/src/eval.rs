//! Pixel-level Recall / Precision / F-measure against ground truth.

use std::fmt::Write as _;
use std::io::Write;
use std::ops::{Add, AddAssign};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::Mask;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn metrics(&self) -> Metrics {
        metrics(self)
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

pub fn confusion_counts(pred: &Mask, gt: &Mask) -> Result<ConfusionCounts> {
    if pred.dims() != gt.dims() {
        return Err(Error::dims_in(gt.dims(), pred.dims(), "prediction vs ground truth"));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        match (p != 0, g != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub recall: f64,
    pub precision: f64,
    pub f_measure: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Recall, precision and their harmonic mean; empty denominators give 0.
pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let recall = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f_measure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        recall,
        precision,
        f_measure,
    }
}

/// Counts accumulated over every ground-truthed frame of one video.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VideoAccumulator {
    pub counts: ConfusionCounts,
    pub frames: usize,
}

impl VideoAccumulator {
    pub fn add(&mut self, pred: &Mask, gt: &Mask) -> Result<()> {
        self.counts += confusion_counts(pred, gt)?;
        self.frames += 1;
        Ok(())
    }

    pub fn metrics(&self) -> Metrics {
        metrics(&self.counts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoRow {
    pub video: String,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Per-video rows plus their unweighted average.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<VideoRow>,
}

impl MetricsReport {
    pub fn push(&mut self, video: impl Into<String>, counts: ConfusionCounts) {
        self.rows.push(VideoRow {
            video: video.into(),
            counts,
            metrics: metrics(&counts),
        });
    }

    /// Mean of the per-video recall, precision and F-measure.
    pub fn average(&self) -> Metrics {
        if self.rows.is_empty() {
            return Metrics::default();
        }
        let n = self.rows.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| self.rows.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
        Metrics {
            recall: sum(|m| m.recall),
            precision: sum(|m| m.precision),
            f_measure: sum(|m| m.f_measure),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("video,recall,precision,fmeasure\n");
        let mut line = |name: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{name},{:.6},{:.6},{:.6}",
                m.recall, m.precision, m.f_measure
            );
        };
        for row in &self.rows {
            line(&row.video, &row.metrics);
        }
        line("average", &self.average());
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}
