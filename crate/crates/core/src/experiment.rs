//! Seeded synthetic experiment suites.
//!
//! Every suite trains on a generated three-type corpus, diarizes freshly
//! drawn test conversations (one per seed) and reports DER per condition.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{compute_der, ScoringOptions};
use crate::mixture::{MixturePlda, SpeakerTypePrior};
use crate::pipeline::{
    diarize, DiarizationMode, DiarizeOptions, PriorSource, RecordingInput, SegmentationConfig, StopRule,
    BASELINE_THRESHOLD, ORACLE_SPLIT_THRESHOLD,
};
use crate::plda::{train_plda, LabeledEmbeddingSet};
use crate::synth::{
    balance_by_type, generate_conversation, generate_speakers, generate_training_corpus, Conversation,
    ConversationSpec, CorpusSpec, SynthRng, ThreeTypeParams,
};
use crate::types::SpeakerType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Single model with a threshold stop against clustering within
    /// oracle speaker-type partitions.
    OracleVsBaseline,
    /// Mixture trained on the full imbalanced pool against one trained on
    /// a balanced subsample.
    BalancedVsUnbalanced,
    /// Mixture with uniform, nonuniform and oracle per-segment priors.
    PriorSweep,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::OracleVsBaseline, Suite::BalancedVsUnbalanced, Suite::PriorSweep];

    pub fn name(self) -> &'static str {
        match self {
            Suite::OracleVsBaseline => "oracle-vs-baseline",
            Suite::BalancedVsUnbalanced => "balanced-vs-unbalanced",
            Suite::PriorSweep => "prior-sweep",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            Error::InvalidConfig(format!("unknown suite '{s}'; available: {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub separation: f64,
    pub between_high: f64,
    pub between_low: f64,
    pub within: [f64; 3],
    pub embeddings_per_speaker: (usize, usize),
    /// Training speakers per type (`M F C`) for the oracle and prior suites.
    pub train_speakers: [usize; 3],
    /// Imbalanced training pool for the balance suite.
    pub pool_speakers: [usize; 3],
    /// Speakers per type kept by balanced sampling.
    pub balanced_per_type: usize,
    /// Test conversation composition for the oracle and prior suites.
    pub test_speakers: [usize; 3],
    /// Type-imbalanced test composition for the balance suite.
    pub imbalanced_test_speakers: [usize; 3],
    pub conversation_length: f64,
    pub mean_turn: f64,
    pub overlap_fraction: f64,
    pub pause_probability: f64,
    pub segmentation: SegmentationConfig,
    pub corpus_seed: u64,
    pub seeds: Vec<u64>,
    pub iterations: usize,
    pub baseline_threshold: f64,
    pub oracle_threshold: f64,
    pub length_normalize: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 12,
            separation: 2.0,
            between_high: 2.0,
            between_low: 0.5,
            within: [1.0, 1.0, 1.5],
            embeddings_per_speaker: (5, 15),
            train_speakers: [300, 300, 300],
            pool_speakers: [3000, 3000, 300],
            balanced_per_type: 300,
            test_speakers: [2, 2, 2],
            imbalanced_test_speakers: [1, 2, 2],
            conversation_length: 60.0,
            mean_turn: 4.0,
            overlap_fraction: 0.1,
            pause_probability: 0.3,
            segmentation: SegmentationConfig::default(),
            corpus_seed: 0,
            seeds: (1..=10).collect(),
            iterations: 10,
            baseline_threshold: BASELINE_THRESHOLD,
            oracle_threshold: ORACLE_SPLIT_THRESHOLD,
            length_normalize: false,
        }
    }
}

impl ExperimentConfig {
    /// Applies `key = value` overrides. Unknown keys are an error.
    pub fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in kv {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidConfig(format!("bad value '{value}' for '{key}'"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
        let triple = |parse: &dyn Fn(&str) -> Result<f64>| -> Result<[f64; 3]> {
            let v: Vec<f64> = value.split(',').map(parse).collect::<Result<_>>()?;
            <[f64; 3]>::try_from(v).map_err(|_| bad())
        };
        let counts = || -> Result<[usize; 3]> {
            let v: Vec<usize> = value.split(',').map(int).collect::<Result<_>>()?;
            <[usize; 3]>::try_from(v).map_err(|_| bad())
        };
        match key {
            "dim" => self.dim = int(value)?,
            "separation" => self.separation = num(value)?,
            "between_high" => self.between_high = num(value)?,
            "between_low" => self.between_low = num(value)?,
            "within" => self.within = triple(&num)?,
            "embeddings_per_speaker" => {
                let (lo, hi) = value.split_once(',').ok_or_else(bad)?;
                self.embeddings_per_speaker = (int(lo)?, int(hi)?);
            }
            "train_speakers" => self.train_speakers = counts()?,
            "pool_speakers" => self.pool_speakers = counts()?,
            "balanced_per_type" => self.balanced_per_type = int(value)?,
            "test_speakers" => self.test_speakers = counts()?,
            "imbalanced_test_speakers" => self.imbalanced_test_speakers = counts()?,
            "conversation_length" => self.conversation_length = num(value)?,
            "mean_turn" => self.mean_turn = num(value)?,
            "overlap_fraction" => self.overlap_fraction = num(value)?,
            "pause_probability" => self.pause_probability = num(value)?,
            "window" => self.segmentation.window = num(value)?,
            "hop" => self.segmentation.hop = num(value)?,
            "min_duration" => self.segmentation.min_duration = num(value)?,
            "corpus_seed" => self.corpus_seed = value.trim().parse().map_err(|_| bad())?,
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
                    .collect::<Result<_>>()?
            }
            "iterations" => self.iterations = int(value)?,
            "baseline_threshold" => self.baseline_threshold = num(value)?,
            "oracle_threshold" => self.oracle_threshold = num(value)?,
            "length_normalize" => self.length_normalize = value.trim().parse().map_err(|_| bad())?,
            _ => return Err(Error::InvalidConfig(format!("unknown experiment key '{key}'"))),
        }
        Ok(())
    }

    fn corpus_params(&self, speakers: [usize; 3], seed: u64) -> ThreeTypeParams {
        ThreeTypeParams {
            dim: self.dim,
            separation: self.separation,
            speakers,
            embeddings_per_speaker: self.embeddings_per_speaker,
            between_high: self.between_high,
            between_low: self.between_low,
            within: self.within,
            seed,
        }
    }

    fn options(&self) -> DiarizeOptions {
        DiarizeOptions {
            length_normalize: self.length_normalize,
        }
    }

    /// Test conversation for one seed. Its speakers are drawn fresh from
    /// the generating distribution, so none of them occur in training.
    pub fn test_conversation(&self, composition: [usize; 3], seed: u64) -> Result<Conversation> {
        let spec = CorpusSpec::three_type(&self.corpus_params(composition, seed))?;
        let mut rng = SynthRng::new(seed);
        let speakers = generate_speakers(&spec, &mut rng, "test");
        let conv = ConversationSpec {
            recording_id: format!("seed{seed}"),
            length: self.conversation_length,
            mean_turn: self.mean_turn,
            overlap_fraction: self.overlap_fraction,
            pause_probability: self.pause_probability,
            segmentation: self.segmentation,
            seed: rng.next_u64(),
        };
        generate_conversation(&conv, &speakers)
    }

    fn training_corpus(&self, speakers: [usize; 3]) -> Result<LabeledEmbeddingSet<f64>> {
        let spec = CorpusSpec::three_type(&self.corpus_params(speakers, self.corpus_seed))?;
        let data = generate_training_corpus(&spec)?;
        if self.length_normalize {
            data.map_embeddings(|e| e.length_normalized())
        } else {
            Ok(data)
        }
    }
}

/// DERs of one condition across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub suite: &'static str,
    pub condition: String,
    pub ders: Vec<f64>,
}

impl ConditionResult {
    pub fn median(&self) -> f64 {
        median(&self.ders)
    }

    pub fn mean(&self) -> f64 {
        self.ders.iter().sum::<f64>() / self.ders.len() as f64
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Trains one component per speaker type on that type's embeddings.
pub fn train_mixture(data: &LabeledEmbeddingSet<f64>, iterations: usize, prior: SpeakerTypePrior) -> Result<MixturePlda<f64>> {
    let [m, f, c] = SpeakerType::ALL.map(|ty| train_plda(&data.of_type(ty), iterations).map(|t| t.model));
    MixturePlda::new(m?, f?, c?, prior)
}

fn der_of(conv: &Conversation, mode: &DiarizationMode<'_, f64>, stop: StopRule, opts: &DiarizeOptions) -> Result<f64> {
    let input = RecordingInput {
        recording_id: &conv.recording_id,
        segments: &conv.segments,
        embeddings: &conv.embeddings,
        segment_types: Some(&conv.segment_types),
    };
    let hyp = diarize(&input, mode, stop, opts)?;
    Ok(compute_der(&conv.reference, &hyp.turns, &ScoringOptions::default())?.der)
}

fn gold_stop(conv: &Conversation) -> StopRule {
    StopRule::NumSpeakers(conv.num_speakers())
}

pub fn run_suite(suite: Suite, cfg: &ExperimentConfig) -> Result<Vec<ConditionResult>> {
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidConfig("experiment needs at least one seed".into()));
    }
    let opts = cfg.options();
    let mut results: Vec<(String, Vec<f64>)> = Vec::new();
    let mut record = |name: &str, der: f64| match results.iter_mut().find(|(n, _)| n == name) {
        Some((_, v)) => v.push(der),
        None => results.push((name.to_string(), vec![der])),
    };
    match suite {
        Suite::OracleVsBaseline => {
            let data = cfg.training_corpus(cfg.train_speakers)?;
            let single = train_plda(&data, cfg.iterations)?.model;
            let mixture = train_mixture(&data, cfg.iterations, SpeakerTypePrior::uniform())?;
            for &seed in &cfg.seeds {
                let conv = cfg.test_conversation(cfg.test_speakers, seed)?;
                let baseline = der_of(&conv, &DiarizationMode::Single(&single), StopRule::Threshold(cfg.baseline_threshold), &opts)?;
                let oracle = der_of(
                    &conv,
                    &DiarizationMode::OracleTypeSplit {
                        model: &mixture,
                        thresholds: None,
                    },
                    StopRule::Threshold(cfg.oracle_threshold),
                    &opts,
                )?;
                record("single-baseline", baseline);
                record("oracle-type-split", oracle);
            }
        }
        Suite::BalancedVsUnbalanced => {
            let data = cfg.training_corpus(cfg.pool_speakers)?;
            let prior = SpeakerTypePrior::nonuniform_paper();
            let single = train_plda(&data, cfg.iterations)?.model;
            let full = train_mixture(&data, cfg.iterations, prior)?;
            for &seed in &cfg.seeds {
                let balanced_data = balance_by_type(&data, cfg.balanced_per_type, seed)?;
                let balanced = train_mixture(&balanced_data, cfg.iterations, prior)?;
                let conv = cfg.test_conversation(cfg.imbalanced_test_speakers, seed)?;
                let stop = gold_stop(&conv);
                let shared = || PriorSource::Shared(prior);
                record("single-full", der_of(&conv, &DiarizationMode::Single(&single), stop, &opts)?);
                record(
                    "mixture-full",
                    der_of(&conv, &DiarizationMode::Mixture { model: &full, priors: shared() }, stop, &opts)?,
                );
                record(
                    "mixture-balanced",
                    der_of(&conv, &DiarizationMode::Mixture { model: &balanced, priors: shared() }, stop, &opts)?,
                );
            }
        }
        Suite::PriorSweep => {
            let data = cfg.training_corpus(cfg.train_speakers)?;
            let mixture = train_mixture(&data, cfg.iterations, SpeakerTypePrior::uniform())?;
            for &seed in &cfg.seeds {
                let conv = cfg.test_conversation(cfg.test_speakers, seed)?;
                let stop = gold_stop(&conv);
                let conditions = [
                    ("uniform", PriorSource::Shared(SpeakerTypePrior::uniform())),
                    ("nonuniform-paper", PriorSource::Shared(SpeakerTypePrior::nonuniform_paper())),
                    (
                        "oracle",
                        PriorSource::PerSegment(conv.segment_types.iter().map(|&t| SpeakerTypePrior::oracle(t)).collect()),
                    ),
                ];
                for (name, priors) in conditions {
                    let mode = DiarizationMode::Mixture { model: &mixture, priors };
                    record(name, der_of(&conv, &mode, stop, &opts)?);
                }
            }
        }
    }
    Ok(results
        .into_iter()
        .map(|(condition, ders)| ConditionResult {
            suite: suite.name(),
            condition,
            ders,
        })
        .collect())
}

/// Tab-separated table: `suite condition median mean` then one DER
/// column per seed, all to six decimals.
pub fn format_table(results: &[ConditionResult], seeds: &[u64]) -> String {
    let mut s = String::from("suite\tcondition\tmedian_der\tmean_der");
    for seed in seeds {
        let _ = write!(s, "\tseed{seed}");
    }
    s.push('\n');
    for r in results {
        let _ = write!(s, "{}\t{}\t{:.6}\t{:.6}", r.suite, r.condition, r.median(), r.mean());
        for d in &r.ders {
            let _ = write!(s, "\t{d:.6}");
        }
        s.push('\n');
    }
    s
}
