//! Probe-outcome records: the data contract everything downstream consumes.
//!
//! A record file is line-delimited JSON. The first non-blank line is a header
//! object carrying the schema version, the layer count `L` and the outcome
//! variant of every task; each following line is one [`ProbeRecord`] whose
//! `outcomes` array has `L + 1` entries (index 0 is the embedding-only probe).
//! The field layout is documented in `docs/record-schema.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "mediprobe.records/1";

/// Task identifier. Case-sensitive, non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(String);

impl TaskId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Invalid("task name must be non-empty".into()));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

/// Inclusive token range `[start, end]`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: u64,
    pub end: u64,
}

impl Span {
    pub fn new(start: u64, end: u64) -> Self {
        Self { start, end }
    }

    pub fn is_ordered(&self) -> bool {
        self.start <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Outcome of the probe trained on layers `0..=l` for one example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawOutcome", into = "RawOutcome")]
pub enum LayerOutcome {
    Correct(bool),
    Counts(Counts),
}

impl LayerOutcome {
    pub fn variant(&self) -> OutcomeVariant {
        match self {
            LayerOutcome::Correct(_) => OutcomeVariant::Binary,
            LayerOutcome::Counts(_) => OutcomeVariant::Counts,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawOutcome {
    Flag(u8),
    Counts(Counts),
}

impl TryFrom<RawOutcome> for LayerOutcome {
    type Error = String;

    fn try_from(raw: RawOutcome) -> std::result::Result<Self, String> {
        match raw {
            RawOutcome::Flag(0) => Ok(LayerOutcome::Correct(false)),
            RawOutcome::Flag(1) => Ok(LayerOutcome::Correct(true)),
            RawOutcome::Flag(v) => Err(format!("binary outcome must be 0 or 1, got {v}")),
            RawOutcome::Counts(c) => Ok(LayerOutcome::Counts(c)),
        }
    }
}

impl From<LayerOutcome> for RawOutcome {
    fn from(o: LayerOutcome) -> Self {
        match o {
            LayerOutcome::Correct(b) => RawOutcome::Flag(u8::from(b)),
            LayerOutcome::Counts(c) => RawOutcome::Counts(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeVariant {
    Binary,
    Counts,
}

impl OutcomeVariant {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeVariant::Binary => "binary",
            OutcomeVariant::Counts => "counts",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub task: TaskId,
    pub example_id: String,
    pub span1: Span,
    pub span2: Option<Span>,
    /// Indexed by cumulative layer `l = 0..=L`.
    pub outcomes: Vec<LayerOutcome>,
}

impl ProbeRecord {
    /// Distance between the earliest span start and the latest span end.
    ///
    /// No ordering between `span1` and `span2` is assumed.
    pub fn context_length(&self) -> u64 {
        let (lo, hi) = match self.span2 {
            None => (self.span1.start, self.span1.end),
            Some(s2) => (self.span1.start.min(s2.start), self.span1.end.max(s2.end)),
        };
        hi.saturating_sub(lo)
    }
}

/// Free-function form of [`ProbeRecord::context_length`].
pub fn context_length(record: &ProbeRecord) -> u64 {
    record.context_length()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
    layers: usize,
    tasks: BTreeMap<TaskId, OutcomeVariant>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    task: TaskId,
    id: String,
    span1: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    span2: Option<[i64; 2]>,
    outcomes: Vec<LayerOutcome>,
}

fn span_from_raw(raw: [i64; 2], line: usize) -> Result<Span> {
    if raw[0] < 0 || raw[1] < 0 {
        return Err(Error::Schema {
            line,
            message: format!("negative span index in [{}, {}]", raw[0], raw[1]),
        });
    }
    Ok(Span::new(raw[0] as u64, raw[1] as u64))
}

fn span_to_raw(s: Span) -> [i64; 2] {
    [s.start as i64, s.end as i64]
}

/// An immutable collection of probe records sharing one layer count.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSet {
    layer_count: usize,
    variants: BTreeMap<TaskId, OutcomeVariant>,
    records: Vec<ProbeRecord>,
}

impl RecordSet {
    /// Builds a record set and rejects it if any invariant is violated.
    pub fn new(
        layer_count: usize,
        variants: BTreeMap<TaskId, OutcomeVariant>,
        records: Vec<ProbeRecord>,
    ) -> Result<Self> {
        let rs = Self::new_unchecked(layer_count, variants, records);
        match rs.validate().into_iter().next() {
            None => Ok(rs),
            Some(v) => Err(Error::Invalid(v.to_string())),
        }
    }

    /// Builds a record set without checking invariants; pair with [`RecordSet::validate`].
    pub fn new_unchecked(
        layer_count: usize,
        variants: BTreeMap<TaskId, OutcomeVariant>,
        records: Vec<ProbeRecord>,
    ) -> Self {
        Self {
            layer_count,
            variants,
            records,
        }
    }

    /// Builds a record set, declaring each task's variant from its first record.
    pub fn from_records(layer_count: usize, records: Vec<ProbeRecord>) -> Result<Self> {
        let mut variants = BTreeMap::new();
        for r in &records {
            if let Some(o) = r.outcomes.first() {
                variants.entry(r.task.clone()).or_insert(o.variant());
            }
        }
        Self::new(layer_count, variants, records)
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    pub fn records(&self) -> &[ProbeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Declared tasks in name order.
    pub fn tasks(&self) -> impl Iterator<Item = &TaskId> {
        self.variants.keys()
    }

    pub fn variants(&self) -> &BTreeMap<TaskId, OutcomeVariant> {
        &self.variants
    }

    pub fn variant(&self, task: &TaskId) -> Result<OutcomeVariant> {
        self.variants
            .get(task)
            .copied()
            .ok_or_else(|| Error::UnknownTask(task.clone()))
    }

    pub fn task_records<'a, 't>(&'a self, task: &'t TaskId) -> impl Iterator<Item = &'a ProbeRecord> + use<'a, 't> {
        self.records.iter().filter(move |r| &r.task == task)
    }

    /// Records of `task`, failing if the task is undeclared.
    pub fn records_for(&self, task: &TaskId) -> Result<Vec<&ProbeRecord>> {
        self.variant(task)?;
        Ok(self.task_records(task).collect())
    }

    /// Concatenates two record sets with the same layer count and compatible task variants.
    pub fn merge(mut self, other: RecordSet) -> Result<Self> {
        if self.layer_count != other.layer_count {
            return Err(Error::LayerCountMismatch {
                found: other.layer_count,
                expected: self.layer_count,
            });
        }
        for (task, variant) in other.variants {
            match self.variants.get(&task) {
                Some(v) if *v != variant => {
                    return Err(Error::Invalid(format!(
                        "task {task} declared as {} and {}",
                        v.name(),
                        variant.name()
                    )))
                }
                Some(_) => {}
                None => {
                    self.variants.insert(task, variant);
                }
            }
        }
        self.records.extend(other.records);
        Ok(self)
    }

    /// Lists every invariant violation; empty iff the set is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.layer_count == 0 {
            out.push(Violation {
                record: None,
                kind: ViolationKind::ZeroLayers,
            });
        }
        for task in self.variants.keys() {
            if task.as_str().is_empty() {
                out.push(Violation {
                    record: None,
                    kind: ViolationKind::EmptyTaskName,
                });
            }
        }
        let mut seen: BTreeMap<&TaskId, OutcomeVariant> = BTreeMap::new();
        for (idx, r) in self.records.iter().enumerate() {
            let mut push = |kind| {
                out.push(Violation {
                    record: Some(idx),
                    kind,
                })
            };
            if r.task.as_str().is_empty() {
                push(ViolationKind::EmptyTaskName);
            }
            for (which, span) in [(1u8, Some(r.span1)), (2u8, r.span2)] {
                if let Some(s) = span {
                    if !s.is_ordered() {
                        push(ViolationKind::SpanOrder {
                            which,
                            start: s.start,
                            end: s.end,
                        });
                    }
                }
            }
            if r.outcomes.len() != self.layer_count + 1 {
                push(ViolationKind::OutcomeLength {
                    found: r.outcomes.len(),
                    expected: self.layer_count + 1,
                });
            }
            let declared = self.variants.get(&r.task).copied();
            if declared.is_none() {
                push(ViolationKind::UndeclaredTask(r.task.clone()));
            }
            let expected = match declared.or_else(|| seen.get(&r.task).copied()) {
                Some(v) => v,
                None => match r.outcomes.first() {
                    Some(o) => o.variant(),
                    None => continue,
                },
            };
            seen.entry(&r.task).or_insert(expected);
            if let Some(o) = r.outcomes.iter().find(|o| o.variant() != expected) {
                push(ViolationKind::MixedVariants {
                    task: r.task.clone(),
                    expected,
                    found: o.variant(),
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the offending record, if the violation is record-level.
    pub record: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    ZeroLayers,
    EmptyTaskName,
    SpanOrder {
        which: u8,
        start: u64,
        end: u64,
    },
    OutcomeLength {
        found: usize,
        expected: usize,
    },
    UndeclaredTask(TaskId),
    MixedVariants {
        task: TaskId,
        expected: OutcomeVariant,
        found: OutcomeVariant,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(idx) = self.record {
            write!(f, "record {idx}: ")?;
        }
        match &self.kind {
            ViolationKind::ZeroLayers => write!(f, "layer count must be positive"),
            ViolationKind::EmptyTaskName => write!(f, "empty task name"),
            ViolationKind::SpanOrder { which, start, end } => {
                write!(f, "span{which} has start {start} > end {end}")
            }
            ViolationKind::OutcomeLength { found, expected } => {
                write!(f, "outcomes has {found} entries, expected {expected}")
            }
            ViolationKind::UndeclaredTask(t) => write!(f, "task {t} is not declared in the header"),
            ViolationKind::MixedVariants { task, expected, found } => {
                write!(f, "task {task} mixes {} and {} outcomes", expected.name(), found.name())
            }
        }
    }
}

/// A syntactically parsed record stream, not yet validated.
#[derive(Debug, Clone)]
pub struct ParsedRecords {
    pub set: RecordSet,
    /// 1-based source line of each record.
    pub lines: Vec<usize>,
}

impl ParsedRecords {
    pub fn line_of(&self, violation: &Violation) -> usize {
        violation.record.and_then(|i| self.lines.get(i).copied()).unwrap_or(1)
    }
}

/// Parses a record stream without checking set-level invariants.
///
/// `fallback_layers` supplies `L` for an empty stream and, when given, must
/// agree with the header.
pub fn parse_records<R: BufRead>(reader: R, fallback_layers: Option<usize>) -> Result<ParsedRecords> {
    let mut header: Option<Header> = None;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: lineno,
            message: e.to_string(),
        })?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if header.is_none() {
            let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::MalformedLine {
                line: lineno,
                message: e.to_string(),
            })?;
            if value.get("schema").is_none() {
                return Err(Error::MissingHeader);
            }
            let h: Header = serde_json::from_value(value).map_err(|e| Error::MalformedLine {
                line: lineno,
                message: format!("header: {e}"),
            })?;
            if h.schema != SCHEMA_VERSION {
                return Err(Error::SchemaVersion {
                    found: h.schema,
                    expected: SCHEMA_VERSION.into(),
                });
            }
            if let Some(l) = fallback_layers {
                if l != h.layers {
                    return Err(Error::LayerCountMismatch {
                        found: h.layers,
                        expected: l,
                    });
                }
            }
            header = Some(h);
            continue;
        }
        let raw: RecordLine = serde_json::from_str(text).map_err(|e| Error::MalformedLine {
            line: lineno,
            message: e.to_string(),
        })?;
        records.push(ProbeRecord {
            task: raw.task,
            example_id: raw.id,
            span1: span_from_raw(raw.span1, lineno)?,
            span2: raw.span2.map(|s| span_from_raw(s, lineno)).transpose()?,
            outcomes: raw.outcomes,
        });
        lines.push(lineno);
    }
    let (layers, variants) = match header {
        Some(h) => (h.layers, h.tasks),
        None => (fallback_layers.ok_or(Error::MissingHeader)?, BTreeMap::new()),
    };
    Ok(ParsedRecords {
        set: RecordSet::new_unchecked(layers, variants, records),
        lines,
    })
}

/// Parses and validates a record stream. The first violation is reported with its source line.
pub fn ingest<R: BufRead>(reader: R, fallback_layers: Option<usize>) -> Result<RecordSet> {
    let parsed = parse_records(reader, fallback_layers)?;
    if let Some(v) = parsed.set.validate().first() {
        return Err(Error::Schema {
            line: parsed.line_of(v),
            message: v.kind_message(),
        });
    }
    Ok(parsed.set)
}

impl Violation {
    fn kind_message(&self) -> String {
        Violation {
            record: None,
            kind: self.kind.clone(),
        }
        .to_string()
    }
}

/// Writes `rs` in the line format read by [`ingest`].
pub fn serialize<W: Write>(rs: &RecordSet, mut out: W) -> std::io::Result<()> {
    let header = Header {
        schema: SCHEMA_VERSION.into(),
        layers: rs.layer_count,
        tasks: rs.variants.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for r in &rs.records {
        let line = RecordLine {
            task: r.task.clone(),
            id: r.example_id.clone(),
            span1: span_to_raw(r.span1),
            span2: r.span2.map(span_to_raw),
            outcomes: r.outcomes.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(name: &str) -> TaskId {
        TaskId::new(name).unwrap()
    }

    fn rec(t: &str, s1: (u64, u64), s2: Option<(u64, u64)>, outcomes: Vec<LayerOutcome>) -> ProbeRecord {
        ProbeRecord {
            task: task(t),
            example_id: "x".into(),
            span1: Span::new(s1.0, s1.1),
            span2: s2.map(|(a, b)| Span::new(a, b)),
            outcomes,
        }
    }

    fn bin(v: &[u8]) -> Vec<LayerOutcome> {
        v.iter().map(|&b| LayerOutcome::Correct(b == 1)).collect()
    }

    #[test]
    fn context_length_examples() {
        assert_eq!(rec("a", (5, 5), None, vec![]).context_length(), 0);
        assert_eq!(rec("a", (2, 4), Some((7, 9)), vec![]).context_length(), 7);
        assert_eq!(rec("a", (0, 3), None, vec![]).context_length(), 3);
        // span order is not assumed
        assert_eq!(rec("a", (7, 9), Some((2, 4)), vec![]).context_length(), 7);
        // nested spans
        assert_eq!(rec("a", (1, 10), Some((3, 4)), vec![]).context_length(), 9);
    }

    #[test]
    fn empty_task_name_rejected() {
        assert!(TaskId::new("").is_err());
        assert_ne!(task("NER"), task("ner"));
    }

    #[test]
    fn ingest_empty_stream_uses_fallback() {
        let rs = ingest("".as_bytes(), Some(12)).unwrap();
        assert!(rs.is_empty());
        assert_eq!(rs.layer_count(), 12);
        assert_eq!(ingest("\n\n".as_bytes(), None), Err(Error::MissingHeader));
    }

    #[test]
    fn ingest_single_record() {
        let text = concat!(
            r#"{"schema":"mediprobe.records/1","layers":2,"tasks":{"ner":"binary"}}"#,
            "\n",
            r#"{"task":"ner","id":"e1","span1":[3,5],"outcomes":[0,1,1]}"#,
            "\n"
        );
        let rs = ingest(text.as_bytes(), None).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.records()[0].context_length(), 2);
    }

    #[test]
    fn ingest_reports_offending_line() {
        let text = concat!(
            r#"{"schema":"mediprobe.records/1","layers":2,"tasks":{"ner":"binary"}}"#,
            "\n",
            r#"{"task":"ner","id":"e1","span1":[3,5],"outcomes":[0,1,1]}"#,
            "\n\n",
            r#"{"task":"ner","id":"e2","span1":[3,5],"outcomes":[0,1]}"#,
            "\n"
        );
        match ingest(text.as_bytes(), None) {
            Err(Error::Schema { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("expected 3"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_bad_input() {
        let hdr = r#"{"schema":"mediprobe.records/1","layers":1,"tasks":{"a":"binary","c":"counts"}}"#;
        let cases = [
            (r#"{"task":"a","id":"1","span1":[-1,2],"outcomes":[0,1]}"#, "negative"),
            (r#"{"task":"a","id":"1","span1":[1,2],"outcomes":[0,2]}"#, "0 or 1"),
            (
                r#"{"task":"a","id":"1","span1":[1,2],"outcomes":[0,{"tp":1,"fp":0,"fn":0}]}"#,
                "mixes",
            ),
            (r#"{"task":"c","id":"1","span1":[1,2],"outcomes":[0,1]}"#, "mixes"),
            (
                r#"{"task":"b","id":"1","span1":[1,2],"outcomes":[0,1]}"#,
                "not declared",
            ),
            (
                r#"{"task":"a","id":"1","span1":[4,2],"outcomes":[0,1]}"#,
                "start 4 > end 2",
            ),
            (r#"{"task":"a","id":"1""#, "EOF"),
        ];
        for (line, needle) in cases {
            let text = format!("{hdr}\n{line}\n");
            let err = ingest(text.as_bytes(), None).unwrap_err();
            assert!(err.to_string().contains(needle), "{line}: {err}");
            assert!(err.to_string().starts_with("line 2"), "{err}");
        }
        let err = ingest(format!("{hdr}\n").as_bytes(), Some(12)).unwrap_err();
        assert!(matches!(err, Error::LayerCountMismatch { .. }));
        let err = ingest(r#"{"schema":"v0","layers":1,"tasks":{}}"#.as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::SchemaVersion { .. }));
    }

    #[test]
    fn validate_examples() {
        let mut variants = BTreeMap::new();
        variants.insert(task("a"), OutcomeVariant::Binary);
        variants.insert(task("c"), OutcomeVariant::Counts);
        let counts = vec![LayerOutcome::Counts(Counts { tp: 1, fp: 0, fn_: 0 }); 2];
        let good = vec![
            rec("a", (0, 1), None, bin(&[0, 1])),
            rec("c", (0, 1), Some((2, 3)), counts.clone()),
        ];
        let rs = RecordSet::new_unchecked(1, variants.clone(), good.clone());
        assert!(rs.validate().is_empty());

        let mut bad = good;
        bad.push(rec("a", (3, 2), None, bin(&[0, 1])));
        let rs = RecordSet::new_unchecked(1, variants, bad);
        let v = rs.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].record, Some(2));
        assert!(matches!(v[0].kind, ViolationKind::SpanOrder { which: 1, .. }));
    }

    #[test]
    fn merge_checks_layers_and_variants() {
        let a = RecordSet::from_records(1, vec![rec("a", (0, 1), None, bin(&[0, 1]))]).unwrap();
        let b = RecordSet::from_records(1, vec![rec("b", (0, 1), None, bin(&[1, 1]))]).unwrap();
        let merged = a.clone().merge(b).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.tasks().count(), 2);
        let c = RecordSet::from_records(2, vec![rec("a", (0, 1), None, bin(&[0, 1, 1]))]).unwrap();
        assert!(a.merge(c).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn outcome(counts: bool) -> BoxedStrategy<LayerOutcome> {
            if counts {
                (0u64..5, 0u64..5, 0u64..5)
                    .prop_map(|(tp, fp, fn_)| LayerOutcome::Counts(Counts { tp, fp, fn_ }))
                    .boxed()
            } else {
                any::<bool>().prop_map(LayerOutcome::Correct).boxed()
            }
        }

        fn record_set() -> impl Strategy<Value = RecordSet> {
            (1usize..5).prop_flat_map(|layers| {
                let rec = (
                    prop_oneof![Just("ner"), Just("dep"), Just("coref")],
                    "[a-z0-9-]{1,8}",
                    (0u64..50, 0u64..10),
                    proptest::option::of((0u64..50, 0u64..10)),
                )
                    .prop_flat_map(move |(t, id, s1, s2)| {
                        let counts = t == "coref";
                        proptest::collection::vec(outcome(counts), layers + 1).prop_map(move |outcomes| ProbeRecord {
                            task: TaskId::new(t).unwrap(),
                            example_id: id.clone(),
                            span1: Span::new(s1.0, s1.0 + s1.1),
                            span2: s2.map(|(a, w)| Span::new(a, a + w)),
                            outcomes,
                        })
                    });
                proptest::collection::vec(rec, 0..20)
                    .prop_map(move |records| RecordSet::from_records(layers, records).unwrap())
            })
        }

        proptest! {
            #[test]
            fn serialize_then_ingest_is_identity(rs in record_set()) {
                let mut buf = Vec::new();
                serialize(&rs, &mut buf).unwrap();
                let back = ingest(buf.as_slice(), None).unwrap();
                prop_assert_eq!(back, rs);
            }

            #[test]
            fn context_length_symmetric(a in 0u64..1000, w1 in 0u64..100, b in 0u64..1000, w2 in 0u64..100) {
                let r1 = rec("t", (a, a + w1), Some((b, b + w2)), vec![]);
                let r2 = rec("t", (b, b + w2), Some((a, a + w1)), vec![]);
                prop_assert_eq!(r1.context_length(), r2.context_length());
                prop_assert!(r1.context_length() >= w1.max(w2));
            }
        }
    }
}
