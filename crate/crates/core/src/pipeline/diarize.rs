use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cluster_ahc, labels_to_turns, score_all_pairs, ScoreMatrix, Segment, StopRule};
use crate::error::{Error, Result};
use crate::metrics::Turn;
use crate::mixture::{MixturePlda, SpeakerTypePrior};
use crate::plda::{Embedding, PldaModel};
use crate::scalar::Real;
use crate::types::SpeakerType;

/// Default stopping threshold for the single-model baseline.
pub const BASELINE_THRESHOLD: f64 = -0.2;
/// Default stopping threshold inside each oracle speaker-type partition.
pub const ORACLE_SPLIT_THRESHOLD: f64 = 0.0;

/// A time region labeled with its (oracle) speaker type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRegion {
    pub recording_id: String,
    pub onset: f64,
    pub offset: f64,
    pub speaker_type: SpeakerType,
}

/// Assigns each segment the type of the region it overlaps most; ties go
/// to the earlier-starting region.
pub fn assign_segment_types(segments: &[Segment], regions: &[TypeRegion]) -> Result<Vec<SpeakerType>> {
    segments
        .iter()
        .map(|seg| {
            let mut best: Option<(f64, f64, SpeakerType)> = None;
            for r in regions.iter().filter(|r| r.recording_id == seg.recording_id) {
                let ov = seg.overlap(r.onset, r.offset);
                if ov <= 0.0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bov, bon, _)) => ov > bov || (ov == bov && r.onset < bon),
                };
                if better {
                    best = Some((ov, r.onset, r.speaker_type));
                }
            }
            best.map(|b| b.2).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "segment {} [{}, {}] of {} has no speaker-type label",
                    seg.index, seg.onset, seg.offset, seg.recording_id
                ))
            })
        })
        .collect()
}

/// Source of mixture priors for a recording.
#[derive(Debug, Clone)]
pub enum PriorSource {
    /// One recording-level prior shared by every segment.
    Shared(SpeakerTypePrior),
    /// One prior per segment, aligned with the segment list.
    PerSegment(Vec<SpeakerTypePrior>),
}

#[derive(Debug, Clone)]
pub enum DiarizationMode<'a, T: Real> {
    Single(&'a PldaModel<T>),
    Mixture {
        model: &'a MixturePlda<T>,
        priors: PriorSource,
    },
    /// Partition segments by oracle type, cluster each partition with its
    /// own component and threshold. `thresholds` overrides the shared
    /// threshold given by the stop rule, per type in `M F C` order.
    OracleTypeSplit {
        model: &'a MixturePlda<T>,
        thresholds: Option<[f64; 3]>,
    },
}

/// Inputs for one recording.
#[derive(Debug, Clone, Copy)]
pub struct RecordingInput<'a, T: Real> {
    pub recording_id: &'a str,
    pub segments: &'a [Segment],
    pub embeddings: &'a [Embedding<T>],
    /// Per-segment oracle speaker types, required by the oracle split.
    pub segment_types: Option<&'a [SpeakerType]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiarizeOptions {
    pub length_normalize: bool,
}

impl Default for DiarizeOptions {
    fn default() -> Self {
        Self { length_normalize: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiarizationHypothesis {
    pub recording_id: String,
    /// Speaker label per segment.
    pub labels: Vec<String>,
    pub turns: Vec<Turn>,
    /// Thresholds applied, by partition name (`all` or a type code).
    pub stop_rules: BTreeMap<String, StopRule>,
}

impl DiarizationHypothesis {
    pub fn num_clusters(&self) -> usize {
        let mut l: Vec<&String> = self.labels.iter().collect();
        l.sort();
        l.dedup();
        l.len()
    }
}

fn prepare<T: Real>(embeddings: &[Embedding<T>], opts: &DiarizeOptions) -> Result<Vec<Embedding<T>>> {
    embeddings
        .iter()
        .map(|e| {
            if opts.length_normalize {
                e.length_normalized()
            } else {
                Ok(e.clone())
            }
        })
        .collect()
}

/// Score matrix of single-model log likelihood ratios.
pub fn single_score_matrix<T: Real>(model: &PldaModel<T>, embeddings: &[Embedding<T>]) -> Result<ScoreMatrix<T>> {
    let projected = embeddings.iter().map(|e| model.project(e)).collect::<Result<Vec<_>>>()?;
    score_all_pairs(projected.len(), |i, j| model.log_lr_projected(&projected[i], &projected[j]))
}

/// Score matrix of mixture log likelihood ratios.
pub fn mixture_score_matrix<T: Real>(
    model: &MixturePlda<T>,
    priors: &PriorSource,
    embeddings: &[Embedding<T>],
) -> Result<ScoreMatrix<T>> {
    if let PriorSource::PerSegment(p) = priors {
        if p.len() != embeddings.len() {
            return Err(Error::InvalidConfig(format!(
                "{} segment priors for {} embeddings",
                p.len(),
                embeddings.len()
            )));
        }
    }
    let prior = |i: usize| match priors {
        PriorSource::Shared(p) => p,
        PriorSource::PerSegment(v) => &v[i],
    };
    let projected = embeddings.iter().map(|e| model.project(e)).collect::<Result<Vec<_>>>()?;
    score_all_pairs(projected.len(), |i, j| {
        model.log_lr_projected(prior(i), prior(j), &projected[i], &projected[j])
    })
}

fn speaker_name(label: usize) -> String {
    format!("spk{}", label + 1)
}

/// Runs scoring, clustering and turn reconstruction for one recording.
pub fn diarize<T: Real>(
    input: &RecordingInput<'_, T>,
    mode: &DiarizationMode<'_, T>,
    stop: StopRule,
    opts: &DiarizeOptions,
) -> Result<DiarizationHypothesis> {
    let n = input.segments.len();
    if input.embeddings.len() != n {
        return Err(Error::MissingEmbedding(input.embeddings.len().min(n)));
    }
    let embeddings = prepare(input.embeddings, opts)?;
    let mut stop_rules = BTreeMap::new();

    let labels: Vec<String> = match mode {
        DiarizationMode::Single(model) => {
            let m = single_score_matrix(model, &embeddings)?;
            stop_rules.insert("all".to_string(), stop);
            cluster_ahc(&m, stop)?.into_iter().map(speaker_name).collect()
        }
        DiarizationMode::Mixture { model, priors } => {
            let m = mixture_score_matrix(model, priors, &embeddings)?;
            stop_rules.insert("all".to_string(), stop);
            cluster_ahc(&m, stop)?.into_iter().map(speaker_name).collect()
        }
        DiarizationMode::OracleTypeSplit { model, thresholds } => {
            let types = input.segment_types.ok_or(Error::MissingTypeLabels)?;
            if types.len() != n {
                return Err(Error::MissingTypeLabels);
            }
            let shared = match stop {
                StopRule::Threshold(t) => t,
                StopRule::NumSpeakers(_) => {
                    return Err(Error::InvalidConfig(
                        "oracle speaker-type split stops on a score threshold".into(),
                    ))
                }
            };
            let mut labels = vec![String::new(); n];
            for ty in SpeakerType::ALL {
                let members: Vec<usize> = (0..n).filter(|&i| types[i] == ty).collect();
                if members.is_empty() {
                    continue;
                }
                let t = thresholds.map_or(shared, |t| t[ty.index()]);
                let rule = StopRule::Threshold(t);
                stop_rules.insert(ty.code().to_string(), rule);
                let part: Vec<Embedding<T>> = members.iter().map(|&i| embeddings[i].clone()).collect();
                let m = single_score_matrix(model.component(ty), &part)?;
                for (&i, l) in members.iter().zip(cluster_ahc(&m, rule)?) {
                    labels[i] = format!("{}_{}", ty.code(), speaker_name(l));
                }
            }
            labels
        }
    };

    let turns = labels_to_turns(&labels, input.segments);
    Ok(DiarizationHypothesis {
        recording_id: input.recording_id.to_string(),
        labels,
        turns,
        stop_rules,
    })
}
