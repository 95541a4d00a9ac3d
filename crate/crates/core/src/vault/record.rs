use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::clock::{format_ts, parse_ts};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Author {
    Human,
    Agent,
    System,
}

impl Author {
    pub fn as_str(&self) -> &'static str {
        match self {
            Author::Human => "human",
            Author::Agent => "agent",
            Author::System => "system",
        }
    }
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Author {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "human" => Ok(Author::Human),
            "agent" => Ok(Author::Agent),
            "system" => Ok(Author::System),
            other => Err(format!("unknown author `{other}`")),
        }
    }
}

/// One timestamped, sequence-numbered event in a named stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub stream: String,
    pub seq: u64,
    #[serde(with = "ts_text")]
    pub ts: DateTime<Utc>,
    pub author: Author,
    pub model_id: Option<String>,
    pub payload: Map<String, Value>,
}

impl LogRecord {
    pub fn str_field(&self, key: &str) -> Option<&str> {
        self.payload.get(key).and_then(Value::as_str)
    }

    pub fn i64_field(&self, key: &str) -> Option<i64> {
        self.payload.get(key).and_then(Value::as_i64)
    }

    pub fn f64_field(&self, key: &str) -> Option<f64> {
        self.payload.get(key).and_then(Value::as_f64)
    }

    pub fn bool_field(&self, key: &str) -> Option<bool> {
        self.payload.get(key).and_then(Value::as_bool)
    }
}

/// A record not yet stamped by the vault.
#[derive(Clone, Debug)]
pub struct NewRecord {
    pub author: Author,
    pub model_id: Option<String>,
    pub payload: Map<String, Value>,
}

impl NewRecord {
    pub fn new(author: Author, payload: Value) -> Self {
        let payload = match payload {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        NewRecord {
            author,
            model_id: None,
            payload,
        }
    }

    pub fn with_model(mut self, model_id: Option<String>) -> Self {
        self.model_id = model_id;
        self
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Str,
    Int,
    Bool,
    Num,
}

impl FieldKind {
    fn accepts(&self, v: &Value) -> bool {
        match self {
            FieldKind::Str => v.is_string(),
            FieldKind::Int => v.is_i64() || v.is_u64(),
            FieldKind::Bool => v.is_boolean(),
            FieldKind::Num => v.is_number(),
        }
    }
}

/// Required payload fields; anything else is preserved untouched.
#[derive(Clone, Debug, Default)]
pub struct StreamSchema {
    required: Vec<(String, FieldKind)>,
}

impl StreamSchema {
    pub fn new(fields: &[(&str, FieldKind)]) -> Self {
        StreamSchema {
            required: fields.iter().map(|(k, t)| (k.to_string(), *t)).collect(),
        }
    }

    pub fn fields(&self) -> impl Iterator<Item = (&str, FieldKind)> {
        self.required.iter().map(|(k, t)| (k.as_str(), *t))
    }

    pub fn validate(&self, payload: &Map<String, Value>) -> Result<(), String> {
        for (field, kind) in &self.required {
            match payload.get(field) {
                None => return Err(format!("missing required field `{field}`")),
                Some(v) if !kind.accepts(v) => {
                    return Err(format!("field `{field}` should be {kind:?}, got {v}"))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct JsonlLine {
    pub seq: u64,
    pub ts: String,
    pub author: Author,
    pub model_id: Option<String>,
    pub payload: Map<String, Value>,
}

pub(crate) fn encode_jsonl(rec: &LogRecord) -> String {
    let line = JsonlLine {
        seq: rec.seq,
        ts: format_ts(rec.ts),
        author: rec.author,
        model_id: rec.model_id.clone(),
        payload: rec.payload.clone(),
    };
    serde_json::to_string(&line).expect("record serializes")
}

pub(crate) fn decode_jsonl(stream: &str, line: &str) -> Result<LogRecord, String> {
    let raw: JsonlLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let ts = parse_ts(&raw.ts).ok_or_else(|| format!("bad timestamp `{}`", raw.ts))?;
    Ok(LogRecord {
        stream: stream.to_string(),
        seq: raw.seq,
        ts,
        author: raw.author,
        model_id: raw.model_id,
        payload: raw.payload,
    })
}

pub const TSV_HEADER: &str = "ts\tinteraction_id\tprinciple_id\tscore\trationale";

fn tsv_clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub(crate) fn encode_tsv(rec: &LogRecord) -> String {
    let field = |k: &str| match rec.payload.get(k) {
        Some(Value::String(s)) => tsv_clean(s),
        Some(other) => other.to_string(),
        None => String::new(),
    };
    format!(
        "{}\t{}\t{}\t{}\t{}",
        format_ts(rec.ts),
        field("interaction_id"),
        field("principle_id"),
        field("score"),
        field("rationale")
    )
}

pub(crate) fn decode_tsv(stream: &str, seq: u64, line: &str) -> Result<LogRecord, String> {
    let cols: Vec<&str> = line.splitn(5, '\t').collect();
    if cols.len() != 5 {
        return Err(format!("expected 5 tab-separated columns, got {}", cols.len()));
    }
    let ts = parse_ts(cols[0]).ok_or_else(|| format!("bad timestamp `{}`", cols[0]))?;
    let principle: i64 = cols[2]
        .parse()
        .map_err(|_| format!("bad principle_id `{}`", cols[2]))?;
    let score: i64 = cols[3]
        .parse()
        .map_err(|_| format!("bad score `{}`", cols[3]))?;
    let mut payload = Map::new();
    payload.insert("interaction_id".into(), Value::from(cols[1]));
    payload.insert("principle_id".into(), Value::from(principle));
    payload.insert("score".into(), Value::from(score));
    payload.insert("rationale".into(), Value::from(cols[4]));
    Ok(LogRecord {
        stream: stream.to_string(),
        seq,
        ts,
        author: Author::Agent,
        model_id: None,
        payload,
    })
}

mod ts_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_ts(*ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        parse_ts(&s).ok_or_else(|| serde::de::Error::custom(format!("bad timestamp `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn schema_requires_fields_and_keeps_unknown() {
        let schema = StreamSchema::new(&[("a", FieldKind::Str), ("n", FieldKind::Int)]);
        let ok = json!({"a": "x", "n": 3, "extra": [1, 2]});
        assert!(schema.validate(ok.as_object().unwrap()).is_ok());
        let missing = json!({"a": "x"});
        assert!(schema.validate(missing.as_object().unwrap()).is_err());
        let wrong = json!({"a": 1, "n": 3});
        assert!(schema.validate(wrong.as_object().unwrap()).is_err());
    }

    #[test]
    fn tsv_line_strips_control_characters() {
        let rec = LogRecord {
            stream: "s".into(),
            seq: 1,
            ts: parse_ts("2026-04-26T05:05:00Z").unwrap(),
            author: Author::Agent,
            model_id: None,
            payload: json!({"interaction_id": "int-1", "principle_id": 2, "score": 4, "rationale": "a\tb\nc"})
                .as_object()
                .unwrap()
                .clone(),
        };
        let line = encode_tsv(&rec);
        assert_eq!(line, "2026-04-26T05:05:00Z\tint-1\t2\t4\ta b c");
        let back = decode_tsv("s", 1, &line).unwrap();
        assert_eq!(back.i64_field("score"), Some(4));
        assert_eq!(back.str_field("rationale"), Some("a b c"));
    }
}
