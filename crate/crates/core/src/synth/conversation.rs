use super::{SpeakerProfile, SynthRng};
use crate::error::{Error, Result};
use crate::metrics::Turn;
use crate::pipeline::{uniform_segment, Segment, SegmentationConfig, TypeRegion};
use crate::plda::Embedding;
use crate::prior::FramePosteriorSequence;
use crate::types::SpeakerType;

#[derive(Debug, Clone, PartialEq)]
pub struct ConversationSpec {
    pub recording_id: String,
    /// Recording length, seconds.
    pub length: f64,
    /// Mean turn duration; durations are uniform on `[0.5, 1.5] * mean`.
    pub mean_turn: f64,
    /// Target ratio of overlapped time to total reference speaker time.
    pub overlap_fraction: f64,
    /// Probability that a speaker change is separated by a pause instead
    /// of an overlap. Pauses are uniform on `[0.2, 1.0]` seconds.
    pub pause_probability: f64,
    pub segmentation: SegmentationConfig,
    pub seed: u64,
}

impl Default for ConversationSpec {
    fn default() -> Self {
        Self {
            recording_id: "rec".into(),
            length: 60.0,
            mean_turn: 4.0,
            overlap_fraction: 0.1,
            pause_probability: 0.3,
            segmentation: SegmentationConfig::default(),
            seed: 0,
        }
    }
}

impl ConversationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.mean_turn > 0.0) {
            return Err(Error::InvalidConfig("length and mean turn must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidConfig("overlap fraction must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.pause_probability) {
            return Err(Error::InvalidConfig("pause probability must lie in [0, 1)".into()));
        }
        self.segmentation.validate()
    }
}

/// A generated recording with everything the pipeline and scorer need.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversation {
    pub recording_id: String,
    pub sad: Vec<(f64, f64)>,
    pub reference: Vec<Turn>,
    pub segments: Vec<Segment>,
    pub embeddings: Vec<Embedding<f64>>,
    pub type_regions: Vec<TypeRegion>,
    pub segment_types: Vec<SpeakerType>,
    /// Speaker owning each segment's embedding.
    pub segment_speakers: Vec<String>,
}

impl Conversation {
    pub fn num_speakers(&self) -> usize {
        let mut s: Vec<&str> = self.reference.iter().map(|t| t.speaker.as_str()).collect();
        s.sort();
        s.dedup();
        s.len()
    }

    /// Frame posteriors that put `confidence` on the type of the dominant
    /// reference speaker at each frame centre and split the rest evenly;
    /// frames without speech are uniform.
    pub fn synthetic_posteriors(&self, frame_rate: f64, confidence: f64) -> Result<FramePosteriorSequence> {
        let end = self.reference.iter().map(Turn::offset).fold(0.0, f64::max);
        let frames = (end * frame_rate).ceil().max(1.0) as usize;
        let rest = (1.0 - confidence) / 2.0;
        let rows = (0..frames)
            .map(|t| {
                let c = (t as f64 + 0.5) / frame_rate;
                let active = self
                    .reference
                    .iter()
                    .zip(&self.type_regions)
                    .filter(|(turn, _)| turn.onset <= c && c < turn.offset())
                    .max_by(|a, b| a.0.duration.total_cmp(&b.0.duration).then(b.0.onset.total_cmp(&a.0.onset)));
                match active {
                    Some((_, r)) => {
                        let mut row = [rest; 3];
                        row[r.speaker_type.index()] = confidence;
                        row
                    }
                    None => [1.0 / 3.0; 3],
                }
            })
            .collect();
        FramePosteriorSequence::new(self.recording_id.clone(), frame_rate, rows)
    }
}

/// Lays out alternating speaker turns, derives SAD and uniform segments,
/// and samples one embedding per segment from its dominant speaker (the
/// one with the most overlap; ties to the earlier-starting turn).
pub fn generate_conversation(spec: &ConversationSpec, speakers: &[SpeakerProfile]) -> Result<Conversation> {
    spec.validate()?;
    if speakers.is_empty() {
        return Err(Error::InvalidConfig("conversation needs at least one speaker".into()));
    }
    let mut rng = SynthRng::new(spec.seed);
    let rec = spec.recording_id.as_str();
    let overlap_rate = if speakers.len() > 1 {
        spec.overlap_fraction / (1.0 - spec.pause_probability)
    } else {
        0.0
    };

    // (speaker index, onset, offset)
    let mut layout: Vec<(usize, f64, f64)> = Vec::new();
    let mut current = rng.below(speakers.len());
    let mut start = 0.0;
    let mut prev_dur = 0.0;
    while start < spec.length {
        let dur = spec.mean_turn * rng.uniform_range(0.5, 1.5);
        if let Some(&(_, _, prev_end)) = layout.last() {
            let next = if speakers.len() > 1 {
                let k = rng.below(speakers.len() - 1);
                if k >= current {
                    k + 1
                } else {
                    k
                }
            } else {
                current
            };
            let pause = rng.uniform() < spec.pause_probability;
            let gap = rng.uniform_range(0.2, 1.0);
            start = if pause {
                prev_end + gap
            } else {
                let ov = (overlap_rate * dur).min(0.45 * prev_dur).min(0.45 * dur);
                prev_end - ov
            };
            current = next;
            if start >= spec.length {
                break;
            }
        }
        let end = (start + dur).min(spec.length);
        match layout.last_mut() {
            // a lone speaker continuing without a pause extends its turn
            Some(last) if last.0 == current && start <= last.2 => last.2 = end,
            _ => layout.push((current, start, end)),
        }
        prev_dur = dur;
        start = end;
    }

    let reference: Vec<Turn> = layout
        .iter()
        .map(|&(s, on, off)| Turn::new(rec, on, off - on, speakers[s].id.clone()))
        .collect();
    let type_regions: Vec<TypeRegion> = layout
        .iter()
        .map(|&(s, on, off)| TypeRegion {
            recording_id: rec.to_string(),
            onset: on,
            offset: off,
            speaker_type: speakers[s].speaker_type,
        })
        .collect();

    let mut spans: Vec<(f64, f64)> = layout.iter().map(|&(_, a, b)| (a, b)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sad: Vec<(f64, f64)> = Vec::new();
    for (on, off) in spans {
        match sad.last_mut() {
            Some(last) if on <= last.1 => last.1 = last.1.max(off),
            _ => sad.push((on, off)),
        }
    }

    let segments = uniform_segment(rec, &sad, &spec.segmentation)?;
    let mut embeddings = Vec::with_capacity(segments.len());
    let mut segment_types = Vec::with_capacity(segments.len());
    let mut segment_speakers = Vec::with_capacity(segments.len());
    for seg in &segments {
        let mut overlap = vec![0.0; speakers.len()];
        let mut first_onset = vec![f64::INFINITY; speakers.len()];
        for &(s, on, off) in &layout {
            let ov = seg.overlap(on, off);
            if ov > 0.0 {
                overlap[s] += ov;
                first_onset[s] = first_onset[s].min(on);
            }
        }
        let owner = (0..speakers.len())
            .filter(|&s| overlap[s] > 0.0)
            .max_by(|&a, &b| {
                overlap[a]
                    .total_cmp(&overlap[b])
                    .then(first_onset[b].total_cmp(&first_onset[a]))
            })
            .expect("segments lie inside speech");
        embeddings.push(Embedding::new(speakers[owner].sample(&mut rng))?);
        segment_types.push(speakers[owner].speaker_type);
        segment_speakers.push(speakers[owner].id.clone());
    }

    Ok(Conversation {
        recording_id: rec.to_string(),
        sad,
        reference,
        segments,
        embeddings,
        type_regions,
        segment_types,
        segment_speakers,
    })
}
