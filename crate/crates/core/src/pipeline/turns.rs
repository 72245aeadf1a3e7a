use std::collections::BTreeMap;

use super::segment::TIME_EPS;
use super::Segment;
use crate::metrics::Turn;

/// Reconstructs speaker turns from labeled subsegments.
///
/// Consecutive segments (in the given order) that share a label and touch
/// or overlap are merged. A label change starts a new turn even where the
/// windows overlap, so differently labeled neighbours both keep their full
/// extent. Same-label turns that still overlap afterwards are merged.
pub fn labels_to_turns(labels: &[String], segments: &[Segment]) -> Vec<Turn> {
    assert_eq!(labels.len(), segments.len(), "one label per segment");
    let mut chained: Vec<(String, String, f64, f64)> = Vec::new();
    for (label, seg) in labels.iter().zip(segments) {
        if let Some(last) = chained.last_mut() {
            if last.0 == seg.recording_id && &last.1 == label && seg.onset <= last.3 + TIME_EPS {
                last.3 = last.3.max(seg.offset);
                continue;
            }
        }
        chained.push((seg.recording_id.clone(), label.clone(), seg.onset, seg.offset));
    }

    let mut by_speaker: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for (rec, label, on, off) in chained {
        by_speaker.entry((rec, label)).or_default().push((on, off));
    }
    let mut turns = Vec::new();
    for ((rec, label), mut spans) in by_speaker {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (on, off) in spans {
            match merged.last_mut() {
                Some(last) if on < last.1 - TIME_EPS => last.1 = last.1.max(off),
                _ => merged.push((on, off)),
            }
        }
        turns.extend(
            merged
                .into_iter()
                .map(|(on, off)| Turn::new(rec.clone(), on, off - on, label.clone())),
        );
    }
    turns.sort_by(Turn::cmp_key);
    turns
}
