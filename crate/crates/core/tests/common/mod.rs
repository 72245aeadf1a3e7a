#![allow(dead_code)]

use std::collections::BTreeSet;

use mixplda::metrics::Turn;
use mixplda::plda::{Embedding, PldaModel};
use mixplda::synth::SynthRng;
use nalgebra::{DMatrix, DVector};

/// A well-conditioned random PLDA model of dimension `d`.
pub fn random_model(rng: &mut SynthRng, d: usize) -> PldaModel<f64> {
    let mean = DVector::from_fn(d, |_, _| rng.normal());
    let transform = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            rng.uniform_range(0.5, 2.0)
        } else {
            0.3 * rng.normal() / d as f64
        }
    });
    let psi = DVector::from_fn(d, |_, _| rng.uniform_range(0.0, 5.0));
    PldaModel::new(mean, transform, psi).expect("random model is valid")
}

pub fn random_embedding(rng: &mut SynthRng, d: usize, scale: f64) -> Embedding<f64> {
    Embedding::new((0..d).map(|_| scale * rng.normal()).collect()).unwrap()
}

/// Random point on the probability simplex, with a chance of zero entries.
pub fn random_prior(rng: &mut SynthRng) -> [f64; 3] {
    loop {
        let mut p = [0.0; 3];
        for v in &mut p {
            if rng.uniform() > 0.2 {
                *v = -rng.uniform().max(1e-300).ln();
            }
        }
        let s: f64 = p.iter().sum();
        if s > 0.0 {
            return p.map(|v| v / s);
        }
    }
}

fn active_at(turns: &[Turn], t: f64) -> BTreeSet<&str> {
    turns
        .iter()
        .filter(|x| x.onset <= t && t < x.onset + x.duration)
        .map(|x| x.speaker.as_str())
        .collect()
}

/// Frame-level DER for one recording: frames of `step` seconds judged at
/// their centres, speaker mapping by exhaustive search over one-to-one
/// assignments maximizing co-occurring frames.
pub fn frame_der(reference: &[Turn], hypothesis: &[Turn], step: f64) -> f64 {
    let end = reference
        .iter()
        .chain(hypothesis)
        .map(|t| t.onset + t.duration)
        .fold(0.0, f64::max);
    let frames = (end / step).ceil() as usize + 1;
    let refs: Vec<&str> = reference
        .iter()
        .map(|t| t.speaker.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let hyps: Vec<&str> = hypothesis
        .iter()
        .map(|t| t.speaker.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut active = Vec::with_capacity(frames);
    let mut co = vec![vec![0u64; refs.len()]; hyps.len()];
    for f in 0..frames {
        let t = (f as f64 + 0.5) * step;
        let r = active_at(reference, t);
        let h = active_at(hypothesis, t);
        for (hi, hs) in hyps.iter().enumerate() {
            for (ri, rs) in refs.iter().enumerate() {
                if h.contains(hs) && r.contains(rs) {
                    co[hi][ri] += 1;
                }
            }
        }
        active.push((r, h));
    }
    let mapping = optimal_mapping(&co, refs.len());
    let (mut err, mut total) = (0u64, 0u64);
    for (r, h) in &active {
        let (nr, nh) = (r.len() as u64, h.len() as u64);
        let matched = hyps
            .iter()
            .enumerate()
            .filter(|(hi, hs)| h.contains(*hs) && mapping[*hi].is_some_and(|ri| r.contains(refs[ri])))
            .count() as u64;
        err += nr.saturating_sub(nh) + nh.saturating_sub(nr) + (nr.min(nh) - matched);
        total += nr;
    }
    err as f64 / total as f64
}

fn optimal_mapping(co: &[Vec<u64>], n_ref: usize) -> Vec<Option<usize>> {
    fn go(
        h: usize,
        co: &[Vec<u64>],
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        best: &mut (u64, Vec<Option<usize>>),
        acc: u64,
    ) {
        if h == co.len() {
            if acc > best.0 || best.1.is_empty() {
                *best = (acc, cur.clone());
            }
            return;
        }
        cur.push(None);
        go(h + 1, co, used, cur, best, acc);
        cur.pop();
        for r in 0..used.len() {
            if !used[r] {
                used[r] = true;
                cur.push(Some(r));
                go(h + 1, co, used, cur, best, acc + co[h][r]);
                cur.pop();
                used[r] = false;
            }
        }
    }
    let mut best = (0, Vec::new());
    go(0, co, &mut vec![false; n_ref], &mut Vec::new(), &mut best, 0);
    if co.is_empty() {
        return Vec::new();
    }
    best.1
}

/// Rounds turn boundaries to a grid of `step` seconds.
pub fn snap(turns: &[Turn], step: f64) -> Vec<Turn> {
    turns
        .iter()
        .filter_map(|t| {
            let on = (t.onset / step).round();
            let off = ((t.onset + t.duration) / step).round();
            (off > on).then(|| Turn::new(t.recording_id.clone(), on * step, (off - on) * step, t.speaker.clone()))
        })
        .collect()
}

/// Random turns for up to `max_speakers` speakers inside `[0, length)`.
pub fn random_turns(rng: &mut SynthRng, rec: &str, prefix: &str, max_speakers: usize, length: f64) -> Vec<Turn> {
    let n = 1 + rng.below(max_speakers);
    let mut out = Vec::new();
    for s in 0..n {
        for _ in 0..1 + rng.below(4) {
            let on = rng.uniform_range(0.0, length - 0.5);
            let dur = rng.uniform_range(0.2, 10.0).min(length - on);
            out.push(Turn::new(rec, on, dur, format!("{prefix}{s}")));
        }
    }
    out
}

/// Hypothesis derived from a reference: boundaries jittered, labels
/// renamed, some turns given another reference speaker's label.
pub fn perturbed_hypothesis(rng: &mut SynthRng, reference: &[Turn], length: f64) -> Vec<Turn> {
    reference
        .iter()
        .map(|t| {
            let on = (t.onset + 0.3 * rng.normal()).clamp(0.0, length - 0.1);
            let off = (t.onset + t.duration + 0.3 * rng.normal()).clamp(on + 0.05, length);
            let src = if rng.uniform() < 0.2 {
                &reference[rng.below(reference.len())].speaker
            } else {
                &t.speaker
            };
            let spk = format!("h_{src}");
            Turn::new(t.recording_id.clone(), on, off - on, spk)
        })
        .collect()
}
