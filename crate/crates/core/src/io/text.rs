//! Line-oriented text formats: SAD regions, speaker-type labels, training
//! labels, frame posteriors and flat key-value configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pipeline::TypeRegion;
use crate::prior::FramePosteriorSequence;
use crate::types::SpeakerType;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

fn number(source: &str, line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(source, line, format!("bad number '{s}'")))
}

/// SAD regions per recording: `<recording-id> <onset> <offset>`.
/// Regions are returned sorted by onset.
pub fn parse_sad(text: &str, source: &str) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (line, f) in content_lines(text) {
        if f.len() != 3 {
            return Err(Error::parse(source, line, "expected '<recording-id> <onset> <offset>'"));
        }
        let (on, off) = (number(source, line, f[1])?, number(source, line, f[2])?);
        if !(on >= 0.0 && on < off) {
            return Err(Error::parse(source, line, "region must satisfy 0 <= onset < offset"));
        }
        out.entry(f[0].to_string()).or_default().push((on, off));
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}

pub fn write_sad(recording_id: &str, regions: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for (on, off) in regions {
        let _ = writeln!(s, "{recording_id} {on} {off}");
    }
    s
}

/// Oracle speaker-type regions: `<recording-id> <onset> <offset> <M|F|C>`.
pub fn parse_type_regions(text: &str, source: &str) -> Result<Vec<TypeRegion>> {
    content_lines(text)
        .map(|(line, f)| {
            if f.len() != 4 {
                return Err(Error::parse(source, line, "expected '<recording-id> <onset> <offset> <M|F|C>'"));
            }
            Ok(TypeRegion {
                recording_id: f[0].to_string(),
                onset: number(source, line, f[1])?,
                offset: number(source, line, f[2])?,
                speaker_type: f[3].parse().map_err(|e: Error| Error::parse(source, line, e.to_string()))?,
            })
        })
        .collect()
}

pub fn write_type_regions(regions: &[TypeRegion]) -> String {
    let mut s = String::new();
    for r in regions {
        let _ = writeln!(s, "{} {} {} {}", r.recording_id, r.onset, r.offset, r.speaker_type);
    }
    s
}

/// One training label per embedding record, in the same order:
/// `<recording-id> <speaker-id> [<M|F|C>]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLabel {
    pub recording_id: String,
    pub speaker_id: String,
    pub speaker_type: Option<SpeakerType>,
}

pub fn parse_training_labels(text: &str, source: &str) -> Result<Vec<TrainingLabel>> {
    content_lines(text)
        .map(|(line, f)| {
            if !(2..=3).contains(&f.len()) {
                return Err(Error::parse(source, line, "expected '<recording-id> <speaker-id> [<M|F|C>]'"));
            }
            let speaker_type = f
                .get(2)
                .map(|t| t.parse().map_err(|e: Error| Error::parse(source, line, e.to_string())))
                .transpose()?;
            Ok(TrainingLabel {
                recording_id: f[0].to_string(),
                speaker_id: f[1].to_string(),
                speaker_type,
            })
        })
        .collect()
}

pub fn write_training_labels(labels: &[TrainingLabel]) -> String {
    let mut s = String::new();
    for l in labels {
        let _ = match l.speaker_type {
            Some(t) => writeln!(s, "{} {} {}", l.recording_id, l.speaker_id, t),
            None => writeln!(s, "{} {}", l.recording_id, l.speaker_id),
        };
    }
    s
}

/// Posterior file: header `#post v1 rate=<fps>`, then `<t-index> <pM> <pF>
/// <pC>` per frame with indices `0, 1, 2, ...` in order.
pub fn parse_posteriors(text: &str, recording_id: &str, source: &str) -> Result<FramePosteriorSequence> {
    let mut rate = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let l = line.trim();
        if l.is_empty() {
            continue;
        }
        if rate.is_none() {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 || f[0] != "#post" || f[1] != "v1" {
                return Err(Error::parse(source, line_no, "expected '#post v1 rate=<fps>' header"));
            }
            let r = f[2]
                .strip_prefix("rate=")
                .and_then(|r| r.parse::<f64>().ok())
                .filter(|r| *r > 0.0)
                .ok_or_else(|| Error::parse(source, line_no, "bad rate field"))?;
            rate = Some(r);
            continue;
        }
        if l.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::parse(source, line_no, "expected '<t-index> <pM> <pF> <pC>'"));
        }
        let t: usize = f[0]
            .parse()
            .map_err(|_| Error::parse(source, line_no, format!("bad frame index '{}'", f[0])))?;
        if t != rows.len() {
            return Err(Error::parse(source, line_no, format!("expected frame index {}, got {t}", rows.len())));
        }
        rows.push([
            number(source, line_no, f[1])?,
            number(source, line_no, f[2])?,
            number(source, line_no, f[3])?,
        ]);
    }
    let rate = rate.ok_or_else(|| Error::parse(source, 1, "missing '#post v1 rate=<fps>' header"))?;
    FramePosteriorSequence::new(recording_id, rate, rows)
}

pub fn write_posteriors(seq: &FramePosteriorSequence) -> String {
    let mut s = format!("#post v1 rate={}\n", seq.frame_rate());
    for (t, r) in seq.rows().iter().enumerate() {
        let _ = writeln!(s, "{t} {} {} {}", r[0], r[1], r[2]);
    }
    s
}

/// Flat `key = value` configuration; `#` starts a comment line.
pub fn parse_key_values(text: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| Error::parse(source, i + 1, "expected 'key = value'"))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::parse(source, i + 1, "empty key"));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sad_sorted_per_recording() {
        let s = parse_sad("b 5 6\na 2 3\na 0 1\n# note\n", "sad").unwrap();
        assert_eq!(s["a"], vec![(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(s["b"], vec![(5.0, 6.0)]);
        assert!(parse_sad("a 3 1\n", "sad").is_err());
        assert!(parse_sad("a 1\n", "sad").is_err());
    }

    #[test]
    fn type_regions_round_trip() {
        let r = parse_type_regions("r 0 1.5 F\nr 1.5 3 C\n", "t").unwrap();
        assert_eq!(r[1].speaker_type, SpeakerType::Child);
        assert_eq!(parse_type_regions(&write_type_regions(&r), "t").unwrap(), r);
        assert!(parse_type_regions("r 0 1 X\n", "t").is_err());
    }

    #[test]
    fn training_labels_optional_type() {
        let l = parse_training_labels("u1 spkA M\nu2 spkB\n", "l").unwrap();
        assert_eq!(l[0].speaker_type, Some(SpeakerType::Male));
        assert_eq!(l[1].speaker_type, None);
        assert_eq!(parse_training_labels(&write_training_labels(&l), "l").unwrap(), l);
    }

    #[test]
    fn posteriors_round_trip_and_index_check() {
        let seq = parse_posteriors("#post v1 rate=100\n0 0.2 0.5 0.3\n1 1 0 0\n", "r", "p").unwrap();
        assert_eq!(seq.rows().len(), 2);
        assert_eq!(parse_posteriors(&write_posteriors(&seq), "r", "p").unwrap(), seq);
        assert!(parse_posteriors("#post v1 rate=100\n1 0.2 0.5 0.3\n", "r", "p").is_err());
        assert!(parse_posteriors("0 0.2 0.5 0.3\n", "r", "p").is_err());
    }

    #[test]
    fn key_values() {
        let kv = parse_key_values("# c\nwindow = 1.5\nprior=paper\n", "cfg").unwrap();
        assert_eq!(kv["window"], "1.5");
        assert_eq!(kv["prior"], "paper");
        assert!(parse_key_values("novalue\n", "cfg").is_err());
    }
}
