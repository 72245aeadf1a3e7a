use std::collections::HashSet;

use super::SynthRng;
use crate::error::{Error, Result};
use crate::plda::{Embedding, LabeledEmbeddingSet};
use crate::scalar::Real;
use crate::types::SpeakerType;

/// Generating parameters for one speaker type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeParams {
    pub speaker_type: SpeakerType,
    pub offset: Vec<f64>,
    pub between_var: Vec<f64>,
    pub within_var: Vec<f64>,
    pub speakers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub dim: usize,
    pub types: Vec<TypeParams>,
    /// Inclusive range of embeddings drawn per speaker.
    pub embeddings_per_speaker: (usize, usize),
    pub seed: u64,
}

/// Knobs for [`CorpusSpec::three_type`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeTypeParams {
    pub dim: usize,
    /// Ratio of between-type distance to within-type speaker spread.
    pub separation: f64,
    /// Speakers per type in `M F C` order.
    pub speakers: [usize; 3],
    pub embeddings_per_speaker: (usize, usize),
    /// Between-speaker variance on a type's emphasized dimensions.
    pub between_high: f64,
    /// Between-speaker variance elsewhere.
    pub between_low: f64,
    /// Within-speaker variance in `M F C` order.
    pub within: [f64; 3],
    pub seed: u64,
}

impl Default for ThreeTypeParams {
    fn default() -> Self {
        Self {
            dim: 12,
            separation: 2.0,
            speakers: [200, 200, 200],
            embeddings_per_speaker: (5, 15),
            between_high: 2.0,
            between_low: 0.5,
            within: [1.0, 1.0, 1.5],
            seed: 0,
        }
    }
}

impl CorpusSpec {
    /// Three speaker types with orthogonal mean offsets.
    ///
    /// Type `k` (in `M F C` order) is offset along axis `k`. Its
    /// between-speaker variance is `between_high` on dimensions `j` with
    /// `j % 3 == k` and `between_low` elsewhere. The offset length `a` is
    /// chosen so that the distance between two type centres, `a * sqrt(2)`,
    /// equals `separation` times the RMS distance of a speaker mean from
    /// its type centre, `sqrt(sum_j between_var_j)`.
    pub fn three_type(p: &ThreeTypeParams) -> Result<Self> {
        if p.dim < 3 {
            return Err(Error::InvalidConfig("three-type corpus needs dim >= 3".into()));
        }
        let types = SpeakerType::ALL
            .iter()
            .map(|&ty| {
                let k = ty.index();
                let between_var: Vec<f64> = (0..p.dim)
                    .map(|j| if j % 3 == k { p.between_high } else { p.between_low })
                    .collect();
                let spread = between_var.iter().sum::<f64>().sqrt();
                let mut offset = vec![0.0; p.dim];
                offset[k] = p.separation * spread / std::f64::consts::SQRT_2;
                TypeParams {
                    speaker_type: ty,
                    offset,
                    between_var,
                    within_var: vec![p.within[k]; p.dim],
                    speakers: p.speakers[k],
                }
            })
            .filter(|t| t.speakers > 0)
            .collect();
        let spec = Self {
            dim: p.dim,
            types,
            embeddings_per_speaker: p.embeddings_per_speaker,
            seed: p.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Single-type corpus drawn from a known two-covariance model with
    /// diagonal between and within variances.
    pub fn two_covariance(
        between_var: Vec<f64>,
        within_var: Vec<f64>,
        speakers: usize,
        embeddings_per_speaker: usize,
        seed: u64,
    ) -> Result<Self> {
        let dim = between_var.len();
        let spec = Self {
            dim,
            types: vec![TypeParams {
                speaker_type: SpeakerType::Female,
                offset: vec![0.0; dim],
                between_var,
                within_var,
                speakers,
            }],
            embeddings_per_speaker: (embeddings_per_speaker, embeddings_per_speaker),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        let (lo, hi) = self.embeddings_per_speaker;
        if lo == 0 || hi < lo {
            return Err(Error::InvalidConfig(format!("bad embeddings-per-speaker range ({lo}, {hi})")));
        }
        for t in &self.types {
            if t.offset.len() != self.dim || t.between_var.len() != self.dim || t.within_var.len() != self.dim {
                return Err(Error::InvalidConfig(format!("type {} parameters have wrong dimension", t.speaker_type)));
            }
            if t.between_var.iter().chain(&t.within_var).any(|v| !(*v > 0.0)) {
                return Err(Error::InvalidConfig(format!("type {} variances must be positive", t.speaker_type)));
            }
            if t.speakers == 0 {
                return Err(Error::InvalidConfig(format!("type {} has no speakers", t.speaker_type)));
            }
        }
        Ok(())
    }
}

/// A generated speaker: its mean embedding and within-speaker variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerProfile {
    pub id: String,
    pub speaker_type: SpeakerType,
    pub mean: Vec<f64>,
    pub within_var: Vec<f64>,
}

impl SpeakerProfile {
    pub fn sample(&self, rng: &mut SynthRng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.within_var)
            .map(|(m, v)| m + v.sqrt() * rng.normal())
            .collect()
    }
}

/// Draws speaker means type by type, in spec order.
/// Speaker ids are `<prefix><type code><k>`.
pub fn generate_speakers(spec: &CorpusSpec, rng: &mut SynthRng, prefix: &str) -> Vec<SpeakerProfile> {
    let mut out = Vec::new();
    for t in &spec.types {
        for k in 0..t.speakers {
            let mean = t
                .offset
                .iter()
                .zip(&t.between_var)
                .map(|(o, v)| o + v.sqrt() * rng.normal())
                .collect();
            out.push(SpeakerProfile {
                id: format!("{prefix}{}{k:05}", t.speaker_type.code()),
                speaker_type: t.speaker_type,
                mean,
                within_var: t.within_var.clone(),
            });
        }
    }
    out
}

/// Generates a labeled training corpus. All speakers are drawn first,
/// then for each speaker its embedding count followed by its embeddings.
pub fn generate_training_corpus(spec: &CorpusSpec) -> Result<LabeledEmbeddingSet<f64>> {
    spec.validate()?;
    let mut rng = SynthRng::new(spec.seed);
    let speakers = generate_speakers(spec, &mut rng, "");
    let (lo, hi) = spec.embeddings_per_speaker;
    let mut set = LabeledEmbeddingSet::default();
    for spk in &speakers {
        let count = lo + rng.below(hi - lo + 1);
        for _ in 0..count {
            set.push(Embedding::new(spk.sample(&mut rng))?, spk.id.clone(), Some(spk.speaker_type))?;
        }
    }
    Ok(set)
}

/// Keeps exactly `speakers_per_type` randomly chosen speakers of every
/// type present, with all their embeddings. Speakers without a recorded
/// type are dropped.
pub fn balance_by_type<T: Real>(
    data: &LabeledEmbeddingSet<T>,
    speakers_per_type: usize,
    seed: u64,
) -> Result<LabeledEmbeddingSet<T>> {
    let mut rng = SynthRng::new(seed);
    let all = data.speakers();
    let mut keep: HashSet<String> = HashSet::new();
    for ty in SpeakerType::ALL {
        let pool: Vec<&str> = all.iter().copied().filter(|s| data.speaker_type(s) == Some(ty)).collect();
        if pool.is_empty() {
            continue;
        }
        if pool.len() < speakers_per_type {
            return Err(Error::InsufficientSpeakers {
                ty,
                requested: speakers_per_type,
                available: pool.len(),
            });
        }
        for i in rng.sample_indices(pool.len(), speakers_per_type) {
            keep.insert(pool[i].to_string());
        }
    }
    Ok(data.filter_speakers(|s| keep.contains(s)))
}
