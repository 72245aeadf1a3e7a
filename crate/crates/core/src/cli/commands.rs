use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;

use mixplda::experiment::{format_table, run_suite, ExperimentConfig, Suite};
use mixplda::io::{
    load_model, parse_embeddings_text, parse_posteriors, parse_sad, parse_training_labels, parse_type_regions,
    read_embeddings_binary, save_mixture, save_plda, write_embeddings_text, write_posteriors, write_sad,
    write_training_labels, write_type_regions, EmbeddingRecord, ModelFile, TrainingLabel, EMBEDDING_BINARY_MAGIC,
};
use mixplda::metrics::{compute_der_breakdown, emit_rttm, parse_rttm, ScoringOptions, Turn};
use mixplda::mixture::MixturePlda;
use mixplda::pipeline::{
    assign_segment_types, diarize as run_diarize, DiarizationHypothesis, DiarizationMode, DiarizeOptions,
    PriorSource, RecordingInput, Segment, SegmentationConfig, StopRule, TypeRegion, BASELINE_THRESHOLD,
    ORACLE_SPLIT_THRESHOLD,
};
use mixplda::plda::{train_plda, Embedding, LabeledEmbeddingSet};
use mixplda::synth::generate_training_corpus;
use mixplda::synth::{CorpusSpec, ThreeTypeParams};
use mixplda::{make_prior, segment_prior, Error, PriorKind, SpeakerType, SpeakerTypePrior};

use super::{read_kv, DerArgs, DiarizeArgs, ExperimentArgs, Mode, ReportFormat, ScorePairArgs, SimulateArgs};
use super::{SimulateKind, TrainArgs};

/// Segment times and embedding record times must agree to this tolerance.
const TIME_MATCH_TOL: f64 = 1e-6;

fn read_bytes(path: &Path) -> mixplda::Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_text(path: &Path) -> mixplda::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, contents: &str) -> mixplda::Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_embeddings(path: &Path) -> mixplda::Result<(usize, Vec<EmbeddingRecord>)> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(EMBEDDING_BINARY_MAGIC) {
        read_embeddings_binary(&mut bytes.as_slice())
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::BadMagic(path.display().to_string()))?;
        parse_embeddings_text(&text, &path.display().to_string())
    }
}

fn maybe_normalize(e: &Embedding<f64>, on: bool) -> mixplda::Result<Embedding<f64>> {
    if on {
        e.length_normalized()
    } else {
        Ok(e.clone())
    }
}

pub fn train(a: TrainArgs) -> anyhow::Result<()> {
    let (_, records) = load_embeddings(&a.embeddings)?;
    let labels = parse_training_labels(&read_text(&a.labels)?, &a.labels.display().to_string())?;
    if labels.len() != records.len() {
        return Err(Error::InvalidTrainingData(format!(
            "{} labels for {} embedding records",
            labels.len(),
            records.len()
        ))
        .into());
    }
    let mut data = LabeledEmbeddingSet::default();
    for (i, (r, l)) in records.iter().zip(&labels).enumerate() {
        if r.recording_id != l.recording_id {
            return Err(Error::InvalidTrainingData(format!(
                "label {} names recording '{}' but embedding record is '{}'",
                i + 1,
                l.recording_id,
                r.recording_id
            ))
            .into());
        }
        data.push(maybe_normalize(&r.embedding, a.length_norm)?, l.speaker_id.clone(), l.speaker_type)?;
    }

    let log_trace = |name: &str, trace: &[f64]| {
        for (i, ll) in trace.iter().enumerate() {
            eprintln!("{name} iteration {i} log-likelihood {ll:.6}");
        }
    };
    if a.per_type {
        if labels.iter().any(|l| l.speaker_type.is_none()) {
            return Err(Error::MissingTypeLabels.into());
        }
        let mut components = Vec::new();
        for ty in SpeakerType::ALL {
            let t = train_plda(&data.of_type(ty), a.iterations)
                .with_context(|| format!("training the {ty} component"))?;
            log_trace(&ty.code().to_string(), &t.log_likelihoods);
            components.push(t.model);
        }
        let [m, f, c]: [_; 3] = components.try_into().expect("three components");
        let mix = MixturePlda::new(m, f, c, make_prior(a.prior)?)?;
        save_mixture(&a.output, &mix)?;
    } else {
        let t = train_plda(&data, a.iterations)?;
        log_trace("plda", &t.log_likelihoods);
        save_plda(&a.output, &t.model)?;
    }
    Ok(())
}

struct Recording {
    id: String,
    segments: Vec<Segment>,
    embeddings: Vec<Embedding<f64>>,
    types: Option<Vec<SpeakerType>>,
    priors: Option<PriorSource>,
}

/// Matches each segment to the embedding record with the same recording
/// and times.
fn align_embeddings(segments: &[Segment], records: &[&EmbeddingRecord]) -> mixplda::Result<Vec<Embedding<f64>>> {
    segments
        .iter()
        .map(|s| {
            records
                .iter()
                .find(|r| (r.onset - s.onset).abs() <= TIME_MATCH_TOL && (r.offset - s.offset).abs() <= TIME_MATCH_TOL)
                .map(|r| r.embedding.clone())
                .ok_or(Error::MissingEmbedding(s.index))
        })
        .collect()
}

enum PriorChoice {
    Kind(PriorKind),
    FromTypes,
}

fn parse_thresholds(s: &str) -> anyhow::Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidConfig(format!("bad thresholds '{s}'")))?;
    v.try_into()
        .map_err(|_| Error::InvalidConfig("oracle thresholds need three values M,F,C".into()).into())
}

pub fn diarize(a: DiarizeArgs) -> anyhow::Result<()> {
    let seg_cfg = SegmentationConfig {
        window: a.window,
        hop: a.hop,
        min_duration: a.min_duration,
    };
    seg_cfg.validate()?;
    let model = load_model(&a.model)?;
    let (_, records) = load_embeddings(&a.embeddings)?;
    let sad = parse_sad(&read_text(&a.sad)?, &a.sad.display().to_string())?;
    let type_regions: Option<Vec<TypeRegion>> = match &a.types {
        Some(p) => Some(parse_type_regions(&read_text(p)?, &p.display().to_string())?),
        None => None,
    };
    let prior_choice = match a.prior.as_deref() {
        Some("types") => Some(PriorChoice::FromTypes),
        Some(s) => Some(PriorChoice::Kind(s.parse()?)),
        None => None,
    };
    let oracle_thresholds = a.oracle_thresholds.as_deref().map(parse_thresholds).transpose()?;

    let mixture: Option<MixturePlda<f64>> = match (&model, a.mode) {
        (ModelFile::Single(_), Mode::Single) => None,
        (ModelFile::Mixture(m), Mode::Mixture | Mode::Oracle) => Some(m.clone()),
        (ModelFile::Single(m), Mode::Mixture) => Some(MixturePlda::replicated(m.clone(), SpeakerTypePrior::uniform())),
        (ModelFile::Mixture(_), Mode::Single) => {
            return Err(Error::InvalidConfig("single mode needs a single PLDA model file".into()).into())
        }
        (ModelFile::Single(_), Mode::Oracle) => {
            return Err(Error::InvalidConfig("oracle mode needs a mixture model file".into()).into())
        }
    };

    let mut by_rec: BTreeMap<&str, Vec<&EmbeddingRecord>> = BTreeMap::new();
    for r in &records {
        by_rec.entry(r.recording_id.as_str()).or_default().push(r);
    }
    let mut recordings = Vec::new();
    for (rec, regions) in &sad {
        let segments = mixplda::pipeline::uniform_segment(rec, regions, &seg_cfg)?;
        let recs = by_rec.get(rec.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let embeddings = align_embeddings(&segments, recs)?;
        let types = match &type_regions {
            Some(r) => Some(assign_segment_types(&segments, r)?),
            None => None,
        };
        let priors = if a.mode == Mode::Mixture {
            Some(if let Some(dir) = &a.posteriors {
                let path = dir.join(format!("{rec}.post"));
                let seq = parse_posteriors(&read_text(&path)?, rec, &path.display().to_string())?;
                PriorSource::PerSegment(segments.iter().map(|s| segment_prior(&seq, s)).collect::<Result<_, _>>()?)
            } else {
                match &prior_choice {
                    Some(PriorChoice::FromTypes) => {
                        let t = types.as_ref().ok_or(Error::MissingTypeLabels)?;
                        PriorSource::PerSegment(t.iter().map(|&ty| SpeakerTypePrior::oracle(ty)).collect())
                    }
                    Some(PriorChoice::Kind(k)) => PriorSource::Shared(make_prior(*k)?),
                    None => PriorSource::Shared(*mixture.as_ref().expect("mixture mode").default_prior()),
                }
            })
        } else {
            None
        };
        if a.mode == Mode::Oracle && types.is_none() {
            return Err(Error::MissingTypeLabels.into());
        }
        recordings.push(Recording {
            id: rec.clone(),
            segments,
            embeddings,
            types,
            priors,
        });
    }

    let stop = a.stop.unwrap_or(StopRule::Threshold(if a.mode == Mode::Oracle {
        ORACLE_SPLIT_THRESHOLD
    } else {
        BASELINE_THRESHOLD
    }));
    let opts = DiarizeOptions {
        length_normalize: a.length_norm,
    };
    let work = |r: &Recording| -> mixplda::Result<DiarizationHypothesis> {
        let input = RecordingInput {
            recording_id: &r.id,
            segments: &r.segments,
            embeddings: &r.embeddings,
            segment_types: r.types.as_deref(),
        };
        let mode = match (&model, a.mode) {
            (ModelFile::Single(m), Mode::Single) => DiarizationMode::Single(m),
            (_, Mode::Oracle) => DiarizationMode::OracleTypeSplit {
                model: mixture.as_ref().expect("mixture model"),
                thresholds: oracle_thresholds,
            },
            _ => DiarizationMode::Mixture {
                model: mixture.as_ref().expect("mixture model"),
                priors: r.priors.clone().expect("priors resolved"),
            },
        };
        run_diarize(&input, &mode, stop, &opts)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .context("building worker pool")?;
    let hyps: Vec<DiarizationHypothesis> =
        pool.install(|| recordings.par_iter().map(work).collect::<mixplda::Result<Vec<_>>>())?;

    let turns: Vec<Turn> = hyps.iter().flat_map(|h| h.turns.iter().cloned()).collect();
    let rttm = emit_rttm(&turns);
    let mut summary = String::new();
    for (h, r) in hyps.iter().zip(&recordings) {
        let rules: Vec<String> = h.stop_rules.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        summary.push_str(&format!(
            "recording={} segments={} clusters={} stop={}\n",
            h.recording_id,
            r.segments.len(),
            h.num_clusters(),
            rules.join(",")
        ));
    }
    match &a.output {
        Some(p) => {
            write_file(p, &rttm)?;
            print!("{summary}");
        }
        None => {
            print!("{rttm}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn parse_vector(s: &str) -> anyhow::Result<Embedding<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidConfig(format!("bad embedding '{s}'")))?;
    Ok(Embedding::new(v)?)
}

pub fn score_pair(a: ScorePairArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model)?;
    let x = maybe_normalize(&parse_vector(&a.a)?, a.length_norm)?;
    let y = maybe_normalize(&parse_vector(&a.b)?, a.length_norm)?;
    let score = match &model {
        ModelFile::Single(m) => {
            if a.prior_a.is_some() || a.prior_b.is_some() {
                return Err(Error::InvalidConfig("priors apply to mixture models only".into()).into());
            }
            m.log_lr(&x, &y)?
        }
        ModelFile::Mixture(m) => {
            let pa = a.prior_a.map(make_prior).transpose()?.unwrap_or(*m.default_prior());
            let pb = a.prior_b.map(make_prior).transpose()?.unwrap_or(pa);
            m.log_lr(&pa, &pb, &x, &y)?
        }
    };
    println!("{score}");
    Ok(())
}

fn load_rttm(path: &Path) -> anyhow::Result<Vec<Turn>> {
    let parsed = parse_rttm(&read_text(path)?);
    if let Some(d) = parsed.diagnostics.first() {
        return Err(Error::Parse {
            source_name: path.display().to_string(),
            line: d.line,
            message: d.message.clone(),
        }
        .into());
    }
    Ok(parsed.turns)
}

pub fn der(a: DerArgs) -> anyhow::Result<()> {
    let reference = load_rttm(&a.reference)?;
    let hypothesis = load_rttm(&a.hypothesis)?;
    let opts = ScoringOptions {
        collar: a.collar,
        score_overlap: a.score_overlap,
    };
    let b = compute_der_breakdown(&reference, &hypothesis, &opts)?;
    let out = match a.format {
        ReportFormat::Kv => {
            let mut s = b.overall.to_kv();
            if a.per_recording {
                for (rec, r) in &b.per_recording {
                    for line in r.to_kv().lines() {
                        s.push_str(&format!("{rec}.{line}\n"));
                    }
                }
            }
            s
        }
        ReportFormat::Json => {
            if a.per_recording {
                serde_json::to_string(&b)? + "\n"
            } else {
                b.overall.to_json() + "\n"
            }
        }
    };
    print!("{out}");
    if let Some(p) = &a.output {
        write_file(p, &out)?;
    }
    Ok(())
}

fn experiment_config(config: Option<&Path>, overrides: &[String]) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(p) = config {
        cfg.apply(&read_kv(p)?)?;
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override '{o}' is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn create_dir(path: &Path) -> mixplda::Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let cfg = experiment_config(a.config.as_deref(), &a.overrides)?;
    create_dir(&a.out)?;
    match a.kind {
        SimulateKind::Training => {
            let spec = CorpusSpec::three_type(&ThreeTypeParams {
                dim: cfg.dim,
                separation: cfg.separation,
                speakers: cfg.train_speakers,
                embeddings_per_speaker: cfg.embeddings_per_speaker,
                between_high: cfg.between_high,
                between_low: cfg.between_low,
                within: cfg.within,
                seed: cfg.corpus_seed,
            })?;
            let data = generate_training_corpus(&spec)?;
            let mut records = Vec::with_capacity(data.len());
            let mut labels = Vec::with_capacity(data.len());
            for (i, (e, spk)) in data.iter().enumerate() {
                let rec = format!("utt{i:07}");
                records.push(EmbeddingRecord {
                    recording_id: rec.clone(),
                    onset: 0.0,
                    offset: 0.0,
                    embedding: e.clone(),
                });
                labels.push(TrainingLabel {
                    recording_id: rec,
                    speaker_id: spk.to_string(),
                    speaker_type: data.speaker_type(spk),
                });
            }
            write_file(&a.out.join("train.emb"), &write_embeddings_text(&records, cfg.dim))?;
            write_file(&a.out.join("train.labels"), &write_training_labels(&labels))?;
            println!("embeddings={} speakers={}", data.len(), data.speakers().len());
        }
        SimulateKind::Conversations => {
            let post_dir = a.out.join("posteriors");
            create_dir(&post_dir)?;
            let (mut emb, mut sad, mut types, mut reference) = (Vec::new(), String::new(), Vec::new(), Vec::new());
            for &seed in &cfg.seeds {
                let conv = cfg.test_conversation(cfg.test_speakers, seed)?;
                for (s, e) in conv.segments.iter().zip(&conv.embeddings) {
                    emb.push(EmbeddingRecord {
                        recording_id: conv.recording_id.clone(),
                        onset: s.onset,
                        offset: s.offset,
                        embedding: e.clone(),
                    });
                }
                sad.push_str(&write_sad(&conv.recording_id, &conv.sad));
                types.extend(conv.type_regions.iter().cloned());
                reference.extend(conv.reference.iter().cloned());
                let post = conv.synthetic_posteriors(a.frame_rate, a.posterior_confidence)?;
                write_file(&post_dir.join(format!("{}.post", conv.recording_id)), &write_posteriors(&post))?;
                println!(
                    "recording={} speakers={} segments={}",
                    conv.recording_id,
                    conv.num_speakers(),
                    conv.segments.len()
                );
            }
            write_file(&a.out.join("conversations.emb"), &write_embeddings_text(&emb, cfg.dim))?;
            write_file(&a.out.join("sad.txt"), &sad)?;
            write_file(&a.out.join("types.txt"), &write_type_regions(&types))?;
            write_file(&a.out.join("reference.rttm"), &emit_rttm(&reference))?;
        }
    }
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let cfg = experiment_config(a.config.as_deref(), &a.overrides)?;
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![a.suite.parse()?]
    };
    let mut results = Vec::new();
    for s in suites {
        eprintln!("running suite {}", s.name());
        results.extend(run_suite(s, &cfg)?);
    }
    let table = format_table(&results, &cfg.seeds);
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(table.as_bytes())?;
    if let Some(p) = &a.output {
        write_file(p, &table)?;
    }
    Ok(())
}
