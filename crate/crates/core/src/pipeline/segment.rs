use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time tolerance for boundary comparisons, seconds.
pub(crate) const TIME_EPS: f64 = 1e-9;

/// One uniform subsegment of a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub recording_id: String,
    pub onset: f64,
    pub offset: f64,
    pub index: usize,
}

impl Segment {
    pub fn new(recording_id: impl Into<String>, onset: f64, offset: f64, index: usize) -> Self {
        Self {
            recording_id: recording_id.into(),
            onset,
            offset,
            index,
        }
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }

    pub fn overlap(&self, onset: f64, offset: f64) -> f64 {
        (self.offset.min(offset) - self.onset.max(onset)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    pub window: f64,
    pub hop: f64,
    /// Regions shorter than this yield one segment; a trailing piece shorter
    /// than this is absorbed into the previous segment.
    pub min_duration: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            window: 1.5,
            hop: 0.75,
            min_duration: 0.25,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::InvalidSegmentation(format!("window must be positive, got {}", self.window)));
        }
        if !(self.hop > 0.0 && self.hop <= self.window) {
            return Err(Error::InvalidSegmentation(format!(
                "hop must satisfy 0 < hop <= window, got hop {} window {}",
                self.hop, self.window
            )));
        }
        if !(self.min_duration >= 0.0) {
            return Err(Error::InvalidSegmentation("min_duration must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Splits speech regions into sliding-window subsegments.
///
/// Windows start at `onset + k * hop`; the last one is truncated to the
/// region end. Indices run contiguously across regions.
pub fn uniform_segment(recording_id: &str, sad_regions: &[(f64, f64)], cfg: &SegmentationConfig) -> Result<Vec<Segment>> {
    cfg.validate()?;
    let mut prev_end = f64::NEG_INFINITY;
    for &(on, off) in sad_regions {
        if !(on.is_finite() && off.is_finite() && on >= 0.0 && on < off) {
            return Err(Error::InvalidSegmentation(format!("invalid region [{on}, {off}]")));
        }
        if on < prev_end - TIME_EPS {
            return Err(Error::InvalidSegmentation(format!(
                "regions must be sorted and non-overlapping; [{on}, {off}] starts before {prev_end}"
            )));
        }
        prev_end = off;
    }

    let mut out: Vec<Segment> = Vec::new();
    for &(on, off) in sad_regions {
        if off - on <= cfg.window + TIME_EPS || off - on < cfg.min_duration {
            out.push(Segment::new(recording_id, on, off, out.len()));
            continue;
        }
        let mut k = 0usize;
        loop {
            let start = on + k as f64 * cfg.hop;
            let end = start + cfg.window;
            if end >= off - TIME_EPS {
                out.push(Segment::new(recording_id, start, off, out.len()));
                break;
            }
            out.push(Segment::new(recording_id, start, end, out.len()));
            let next = on + (k + 1) as f64 * cfg.hop;
            if off - next < cfg.min_duration {
                out.last_mut().expect("just pushed").offset = off;
                break;
            }
            k += 1;
        }
    }
    Ok(out)
}
