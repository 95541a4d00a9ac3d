use serde::Serialize;

use super::layout::Channel;
use super::{parse_stream_text, ChannelFormat};
use crate::clock::format_ts;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegrityFinding {
    Malformed { line: usize, message: String },
    SeqGap { line: usize, expected: u64, found: u64 },
    SeqRegression { line: usize, previous: u64, found: u64 },
    TsRegression { line: usize, seq: u64, previous: String, found: String },
    Schema { line: usize, seq: u64, message: String },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IntegrityReport {
    pub stream: String,
    pub records: usize,
    pub findings: Vec<IntegrityFinding>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn gaps(&self) -> impl Iterator<Item = &IntegrityFinding> {
        self.findings
            .iter()
            .filter(|f| matches!(f, IntegrityFinding::SeqGap { .. }))
    }
}

pub(super) fn check(stream: &str, channel: &Channel, text: &str) -> IntegrityReport {
    let read = parse_stream_text(stream, channel.format, text);
    let mut findings: Vec<IntegrityFinding> = read
        .diagnostics
        .iter()
        .map(|d| IntegrityFinding::Malformed {
            line: d.line,
            message: d.message.clone(),
        })
        .collect();

    // Line numbers of parsed records, for pointing at the offending line.
    let header = usize::from(channel.format == ChannelFormat::Tsv);
    let bad: Vec<usize> = read.diagnostics.iter().map(|d| d.line).collect();
    let lines: Vec<usize> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(n, l)| *n > header && !l.trim().is_empty() && !bad.contains(n))
        .map(|(n, _)| n)
        .collect();

    let mut prev: Option<(u64, chrono::DateTime<chrono::Utc>)> = None;
    for (rec, &line) in read.records.iter().zip(lines.iter()) {
        if let Err(message) = channel.schema.validate(&rec.payload) {
            findings.push(IntegrityFinding::Schema {
                line,
                seq: rec.seq,
                message,
            });
        }
        let expected = prev.map_or(1, |(s, _)| s + 1);
        match prev {
            Some((s, _)) if rec.seq <= s => findings.push(IntegrityFinding::SeqRegression {
                line,
                previous: s,
                found: rec.seq,
            }),
            _ if rec.seq != expected => findings.push(IntegrityFinding::SeqGap {
                line,
                expected,
                found: rec.seq,
            }),
            _ => {}
        }
        if let Some((_, ts)) = prev {
            if rec.ts < ts {
                findings.push(IntegrityFinding::TsRegression {
                    line,
                    seq: rec.seq,
                    previous: format_ts(ts),
                    found: format_ts(rec.ts),
                });
            }
        }
        let seq = prev.map_or(rec.seq, |(s, _)| s.max(rec.seq));
        let ts = prev.map_or(rec.ts, |(_, t)| t.max(rec.ts));
        prev = Some((seq, ts));
    }

    IntegrityReport {
        stream: stream.to_string(),
        records: read.records.len(),
        findings,
    }
}
