use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

/// One speaker turn: `speaker` talks during `[onset, onset + duration)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub recording_id: String,
    pub onset: f64,
    pub duration: f64,
    pub speaker: String,
}

impl Turn {
    pub fn new(recording_id: impl Into<String>, onset: f64, duration: f64, speaker: impl Into<String>) -> Self {
        Self {
            recording_id: recording_id.into(),
            onset,
            duration,
            speaker: speaker.into(),
        }
    }

    pub fn offset(&self) -> f64 {
        self.onset + self.duration
    }

    /// Ordering used for emission: recording, onset, speaker.
    pub fn cmp_key(a: &Turn, b: &Turn) -> Ordering {
        a.recording_id
            .cmp(&b.recording_id)
            .then(a.onset.total_cmp(&b.onset))
            .then_with(|| a.speaker.cmp(&b.speaker))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RttmDiagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RttmParse {
    pub turns: Vec<Turn>,
    pub diagnostics: Vec<RttmDiagnostic>,
}

fn parse_line(line: &str) -> Result<Option<Turn>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
        return Ok(None);
    }
    let fields: Vec<&str> = trimmed.split_whitespace().collect();
    if fields[0] != "SPEAKER" {
        return Ok(None);
    }
    if fields.len() < 8 {
        return Err(format!("expected at least 8 fields, got {}", fields.len()));
    }
    let onset: f64 = fields[3]
        .parse()
        .map_err(|_| format!("bad onset '{}'", fields[3]))?;
    let duration: f64 = fields[4]
        .parse()
        .map_err(|_| format!("bad duration '{}'", fields[4]))?;
    if !onset.is_finite() || !duration.is_finite() {
        return Err("non-finite time".into());
    }
    if duration <= 0.0 {
        return Err(format!("non-positive duration {duration}"));
    }
    Ok(Some(Turn::new(fields[1], onset, duration, fields[7])))
}

/// Parses RTTM text. `SPEAKER` records become turns; blank lines, comments
/// and other record types are skipped; malformed records are reported in
/// `diagnostics` with their 1-based line number.
pub fn parse_rttm(text: &str) -> RttmParse {
    let mut out = RttmParse::default();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(t)) => out.turns.push(t),
            Ok(None) => {}
            Err(message) => out.diagnostics.push(RttmDiagnostic { line: i + 1, message }),
        }
    }
    out
}

pub fn parse_rttm_reader<R: BufRead>(reader: R) -> std::io::Result<RttmParse> {
    let mut out = RttmParse::default();
    for (i, line) in reader.lines().enumerate() {
        match parse_line(&line?) {
            Ok(Some(t)) => out.turns.push(t),
            Ok(None) => {}
            Err(message) => out.diagnostics.push(RttmDiagnostic { line: i + 1, message }),
        }
    }
    Ok(out)
}

/// Emits one `SPEAKER` line per turn with millisecond precision, ordered
/// by recording, onset and speaker.
pub fn emit_rttm(turns: &[Turn]) -> String {
    let mut sorted: Vec<&Turn> = turns.iter().collect();
    sorted.sort_by(|a, b| Turn::cmp_key(a, b));
    let mut out = String::new();
    for t in sorted {
        let _ = writeln!(
            out,
            "SPEAKER {} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            t.recording_id, t.onset, t.duration, t.speaker
        );
    }
    out
}
