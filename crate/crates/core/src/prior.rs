//! Segment-level speaker-type priors from frame-level posteriors.

use crate::error::{Error, Result};
use crate::mixture::SpeakerTypePrior;
use crate::pipeline::Segment;

/// Row-sum tolerance for posterior frames.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Frame-wise speaker-type posteriors for one recording, `M F C` per row.
/// Frame `t` covers `[t / rate, (t + 1) / rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePosteriorSequence {
    recording_id: String,
    frame_rate: f64,
    rows: Vec<[f64; 3]>,
}

impl FramePosteriorSequence {
    pub fn new(recording_id: impl Into<String>, frame_rate: f64, rows: Vec<[f64; 3]>) -> Result<Self> {
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::InvalidPosteriors(format!("frame rate must be positive, got {frame_rate}")));
        }
        if rows.is_empty() {
            return Err(Error::InvalidPosteriors("no frames".into()));
        }
        for (t, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidPosteriors(format!("frame {t}: entries must lie in [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidPosteriors(format!("frame {t}: row sums to {sum}")));
            }
        }
        Ok(Self {
            recording_id: recording_id.into(),
            frame_rate,
            rows,
        })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }

    pub fn frame_center(&self, t: usize) -> f64 {
        (t as f64 + 0.5) / self.frame_rate
    }

    /// Indices of frames whose center lies in `[onset, offset)`.
    pub fn covered_frames(&self, onset: f64, offset: f64) -> std::ops::Range<usize> {
        let n = self.rows.len();
        let approx = |time: f64| ((time * self.frame_rate - 0.5).floor().max(0.0) as usize).min(n);
        let mut lo = approx(onset).saturating_sub(1);
        while lo < n && self.frame_center(lo) < onset {
            lo += 1;
        }
        let mut hi = (approx(offset) + 2).min(n).max(lo);
        while hi > lo && self.frame_center(hi - 1) >= offset {
            hi -= 1;
        }
        lo..hi
    }
}

/// Averages the posterior rows covered by `seg` into a prior.
pub fn segment_prior(seq: &FramePosteriorSequence, seg: &Segment) -> Result<SpeakerTypePrior> {
    let frames = seq.covered_frames(seg.onset, seg.offset);
    if frames.is_empty() {
        return Err(Error::SegmentOutsidePosteriors);
    }
    let count = frames.len() as f64;
    let mut mean = [0.0; 3];
    for row in &seq.rows[frames] {
        for (m, p) in mean.iter_mut().zip(row) {
            *m += p;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let sum: f64 = mean.iter().sum();
    SpeakerTypePrior::new(mean.map(|m| (m / sum).clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(onset: f64, offset: f64) -> Segment {
        Segment::new("r", onset, offset, 0)
    }

    #[test]
    fn constant_rows() {
        let seq = FramePosteriorSequence::new("r", 100.0, vec![[0.2, 0.5, 0.3]; 300]).unwrap();
        let p = segment_prior(&seq, &seg(0.37, 2.11)).unwrap();
        let a = p.as_array();
        assert!((a[0] - 0.2).abs() < 1e-12 && (a[1] - 0.5).abs() < 1e-12 && (a[2] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn two_point_mean() {
        let seq = FramePosteriorSequence::new("r", 10.0, vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let p = segment_prior(&seq, &seg(0.0, 0.2)).unwrap();
        assert_eq!(p.as_array(), [0.5, 0.5, 0.0]);
    }

    #[test]
    fn half_open_on_frame_centers() {
        // centers at 0.05, 0.15, 0.25, ...
        let seq = FramePosteriorSequence::new("r", 10.0, vec![[1.0, 0.0, 0.0]; 10]).unwrap();
        assert_eq!(seq.covered_frames(0.05, 0.25), 0..2);
        assert_eq!(seq.covered_frames(0.0, 0.05), 0..0);
        assert_eq!(seq.covered_frames(0.9, 5.0), 9..10);
        assert_eq!(seq.covered_frames(2.0, 3.0), 10..10);
    }

    #[test]
    fn outside_extent_is_error() {
        let seq = FramePosteriorSequence::new("r", 100.0, vec![[0.2, 0.5, 0.3]; 10]).unwrap();
        assert!(matches!(segment_prior(&seq, &seg(5.0, 6.0)), Err(Error::SegmentOutsidePosteriors)));
    }

    #[test]
    fn invalid_rows_rejected() {
        assert!(FramePosteriorSequence::new("r", 100.0, vec![[0.5, 0.5, 0.5]]).is_err());
        assert!(FramePosteriorSequence::new("r", 100.0, vec![]).is_err());
        assert!(FramePosteriorSequence::new("r", 0.0, vec![[1.0, 0.0, 0.0]]).is_err());
    }
}
