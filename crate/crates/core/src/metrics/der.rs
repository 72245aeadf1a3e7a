use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::assign::max_weight_assignment;
use super::Turn;
use crate::error::{Error, Result};

const MICROS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringOptions {
    /// Half-width of the no-score zone around each reference boundary, seconds.
    pub collar: f64,
    /// Score regions where several reference speakers overlap.
    pub score_overlap: bool,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            collar: 0.0,
            score_overlap: true,
        }
    }
}

/// Error durations in seconds and their ratio to scored reference time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerReport {
    #[serde(rename = "fa")]
    pub false_alarm: f64,
    pub miss: f64,
    #[serde(rename = "sm")]
    pub speaker_mismatch: f64,
    #[serde(rename = "total")]
    pub total_scored: f64,
    pub der: f64,
}

impl DerReport {
    fn from_counts(c: &Counts) -> Self {
        let s = |x: i64| x as f64 / MICROS;
        Self {
            false_alarm: s(c.fa),
            miss: s(c.miss),
            speaker_mismatch: s(c.sm),
            total_scored: s(c.total),
            der: (c.fa + c.miss + c.sm) as f64 / c.total as f64,
        }
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fa={:.6}", self.false_alarm);
        let _ = writeln!(s, "miss={:.6}", self.miss);
        let _ = writeln!(s, "sm={:.6}", self.speaker_mismatch);
        let _ = writeln!(s, "total={:.6}", self.total_scored);
        let _ = writeln!(s, "der={:.6}", self.der);
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Overall report plus one report per reference recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerBreakdown {
    pub overall: DerReport,
    pub per_recording: BTreeMap<String, DerReport>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    fa: i64,
    miss: i64,
    sm: i64,
    total: i64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.fa += o.fa;
        self.miss += o.miss;
        self.sm += o.sm;
        self.total += o.total;
    }
}

fn micros(t: f64) -> i64 {
    (t * MICROS).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Ref(usize, i8),
    Hyp(usize, i8),
    Collar(i8),
}

fn speaker_index<'a>(turns: &[&'a Turn]) -> BTreeMap<&'a str, usize> {
    let names: BTreeSet<&str> = turns.iter().map(|t| t.speaker.as_str()).collect();
    names.into_iter().enumerate().map(|(i, s)| (s, i)).collect()
}

fn score_recording(reference: &[&Turn], hypothesis: &[&Turn], opts: &ScoringOptions) -> Counts {
    let ref_ids = speaker_index(reference);
    let hyp_ids = speaker_index(hypothesis);
    let collar = micros(opts.collar.max(0.0));

    let mut events: Vec<(i64, Event)> = Vec::new();
    for t in reference {
        let (on, off) = (micros(t.onset), micros(t.offset()));
        let r = ref_ids[t.speaker.as_str()];
        events.push((on, Event::Ref(r, 1)));
        events.push((off, Event::Ref(r, -1)));
        if collar > 0 {
            for b in [on, off] {
                events.push((b - collar, Event::Collar(1)));
                events.push((b + collar, Event::Collar(-1)));
            }
        }
    }
    for t in hypothesis {
        let h = hyp_ids[t.speaker.as_str()];
        events.push((micros(t.onset), Event::Hyp(h, 1)));
        events.push((micros(t.offset()), Event::Hyp(h, -1)));
    }
    events.sort();

    // homogeneous intervals: (length, active reference, active hypothesis)
    let mut intervals: Vec<(i64, Vec<usize>, Vec<usize>)> = Vec::new();
    let mut ref_active = vec![0i32; ref_ids.len()];
    let mut hyp_active = vec![0i32; hyp_ids.len()];
    let mut collar_depth = 0i32;
    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        while k < events.len() && events[k].0 == t {
            match events[k].1 {
                Event::Ref(r, d) => ref_active[r] += d as i32,
                Event::Hyp(h, d) => hyp_active[h] += d as i32,
                Event::Collar(d) => collar_depth += d as i32,
            }
            k += 1;
        }
        let Some(&(next, _)) = events.get(k) else { break };
        let len = next - t;
        if len <= 0 || collar_depth > 0 {
            continue;
        }
        let refs: Vec<usize> = (0..ref_active.len()).filter(|&r| ref_active[r] > 0).collect();
        let hyps: Vec<usize> = (0..hyp_active.len()).filter(|&h| hyp_active[h] > 0).collect();
        if refs.is_empty() && hyps.is_empty() {
            continue;
        }
        if !opts.score_overlap && refs.len() > 1 {
            continue;
        }
        intervals.push((len, refs, hyps));
    }

    let mut cooc = vec![vec![0i64; hyp_ids.len()]; ref_ids.len()];
    for (len, refs, hyps) in &intervals {
        for &r in refs {
            for &h in hyps {
                cooc[r][h] += len;
            }
        }
    }
    let mapping = max_weight_assignment(&cooc);

    let mut c = Counts::default();
    for (len, refs, hyps) in &intervals {
        let (r, h) = (refs.len() as i64, hyps.len() as i64);
        let matched = refs
            .iter()
            .filter(|&&ri| mapping[ri].is_some_and(|hi| hyps.contains(&hi)))
            .count() as i64;
        c.miss += (r - h).max(0) * len;
        c.fa += (h - r).max(0) * len;
        c.sm += (r.min(h) - matched) * len;
        c.total += r * len;
    }
    c
}

/// DER with per-recording detail. Recordings are scored independently
/// and aggregated by duration; a hypothesis recording absent from the
/// reference contributes only false alarm.
pub fn compute_der_breakdown(reference: &[Turn], hypothesis: &[Turn], opts: &ScoringOptions) -> Result<DerBreakdown> {
    let mut recs: BTreeMap<&str, (Vec<&Turn>, Vec<&Turn>)> = BTreeMap::new();
    for t in reference {
        recs.entry(&t.recording_id).or_default().0.push(t);
    }
    for t in hypothesis {
        recs.entry(&t.recording_id).or_default().1.push(t);
    }
    let mut overall = Counts::default();
    let mut per_recording = BTreeMap::new();
    for (rec, (r, h)) in &recs {
        let c = score_recording(r, h, opts);
        overall.add(&c);
        if c.total > 0 {
            per_recording.insert(rec.to_string(), DerReport::from_counts(&c));
        }
    }
    if overall.total <= 0 {
        return Err(Error::EmptyScoringRegion);
    }
    Ok(DerBreakdown {
        overall: DerReport::from_counts(&overall),
        per_recording,
    })
}

/// Diarization error rate of `hypothesis` against `reference`.
pub fn compute_der(reference: &[Turn], hypothesis: &[Turn], opts: &ScoringOptions) -> Result<DerReport> {
    compute_der_breakdown(reference, hypothesis, opts).map(|b| b.overall)
}
