//! Verification reports: check entries, JSON serialization and a plain-text
//! table.
//!
//! Every floating-point number is written with 17 significant digits so a
//! parsed report compares equal to the one that was written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::io::GraphFile;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    PreconditionNotMet,
    Informational,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::PreconditionNotMet => "precondition-not-met",
            Status::Informational => "informational",
            Status::Skipped => "skipped",
        }
    }
}

/// One inequality `lhs ≤ rhs`, checked as `slack = rhs − lhs ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub check_id: String,
    /// Name of the inequality being checked.
    pub reference: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckEntry {
    pub fn bound(check_id: &str, reference: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        let pass = slack >= -tolerance;
        Self {
            check_id: check_id.into(),
            reference: reference.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            pass,
            status: if pass { Status::Pass } else { Status::Fail },
            detail: String::new(),
        }
    }

    /// A comparison recorded without asserting its direction.
    pub fn informational(check_id: &str, reference: &str, lhs: f64, rhs: f64) -> Self {
        let mut e = Self::bound(check_id, reference, lhs, rhs, 0.0);
        e.status = Status::Informational;
        e
    }

    pub fn skipped(check_id: &str, reference: &str, why: &str) -> Self {
        let mut e = Self::bound(check_id, reference, 0.0, 0.0, 0.0);
        e.status = Status::Skipped;
        e.detail = why.into();
        e
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Keeps the numbers but marks the entry as run without its hypothesis.
    pub fn precondition_not_met(mut self) -> Self {
        if self.status != Status::Informational && self.status != Status::Skipped {
            self.status = Status::PreconditionNotMet;
        }
        self
    }
}

/// Entry with the smallest slack (first one on ties).
pub fn worst(entries: impl IntoIterator<Item = CheckEntry>) -> Option<CheckEntry> {
    entries.into_iter().fold(None, |best, e| match best {
        Some(b) if b.slack <= e.slack => Some(b),
        _ => Some(e),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub graph: GraphFile,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub tool_version: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub precondition_not_met: usize,
    pub informational: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub entries: Vec<CheckEntry>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(provenance: Provenance) -> Self {
        Self { schema_version: SCHEMA_VERSION, provenance, entries: Vec::new(), summary: Summary::default() }
    }

    pub fn push(&mut self, entry: CheckEntry) {
        let s = &mut self.summary;
        s.total += 1;
        match entry.status {
            Status::Pass => s.pass += 1,
            Status::Fail => s.fail += 1,
            Status::PreconditionNotMet => s.precondition_not_met += 1,
            Status::Informational => s.informational += 1,
            Status::Skipped => s.skipped += 1,
        }
        self.entries.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = CheckEntry>) {
        for e in entries {
            self.push(e);
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            field: format!("column {}", e.column()),
            message: e.to_string(),
        })?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::BadParams(format!("unsupported report schema version {}", r.schema_version)));
        }
        Ok(r)
    }

    pub fn to_table(&self) -> String {
        let mut rows = vec![["check".to_string(), "status".into(), "lhs".into(), "rhs".into(), "slack".into(), "detail".into()]];
        for e in &self.entries {
            rows.push([
                e.check_id.clone(),
                e.status.as_str().into(),
                format!("{:.6e}", e.lhs),
                format!("{:.6e}", e.rhs),
                format!("{:.3e}", e.slack),
                e.detail.clone(),
            ]);
        }
        let mut out = render_table(&rows);
        let s = &self.summary;
        let _ = writeln!(
            out,
            "{} checks: {} pass, {} fail, {} precondition-not-met, {} informational, {} skipped",
            s.total, s.pass, s.fail, s.precondition_not_met, s.informational, s.skipped
        );
        out
    }
}

/// Left-aligned columns separated by two spaces; the last column is not padded.
pub fn render_table<const N: usize>(rows: &[[String; N]]) -> String {
    let mut widths = [0usize; N];
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (i, c) in r.iter().enumerate() {
            if i + 1 == N {
                line.push_str(c);
            } else {
                let _ = write!(line, "{:<w$}  ", c, w = widths[i]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Pretty JSON with 17 significant digits per float.
pub struct ExactFloatFormatter {
    inner: PrettyFormatter<'static>,
}

impl Default for ExactFloatFormatter {
    fn default() -> Self {
        Self { inner: PrettyFormatter::new() }
    }
}

impl Formatter for ExactFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloatFormatter::default());
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VerificationReport {
        let graph = GraphFile { vertices: vec!["a".into(), "b".into()], edges: vec![], measure: None };
        let mut params = BTreeMap::new();
        params.insert("seed".to_string(), serde_json::json!(7));
        params.insert("t".to_string(), serde_json::json!([0.1, 1.0 / 3.0]));
        let mut r = VerificationReport::new(Provenance { graph, parameters: params, tool_version: "0.1.0".into() });
        r.push(CheckEntry::bound("buser", "Buser inequality", 2.0, 11.090354888959125, 1e-8));
        r.push(CheckEntry::bound("x", "y", 0.1 + 0.2, 0.3, 1e-20).with_detail("rounding"));
        r.push(CheckEntry::informational("cmp", "z", 1.0, 0.5));
        r
    }

    #[test]
    fn round_trip_is_exact() {
        let r = sample();
        let text = r.to_json();
        assert!(text.contains("1.1090354888959125e1"));
        let back = VerificationReport::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn summary_and_status() {
        let r = sample();
        assert_eq!(r.summary.total, 3);
        assert_eq!(r.summary.fail, 1);
        assert!(!r.all_pass());
        assert!(r.to_json().contains("\"informational\""));
        assert!(r.to_table().contains("3 checks: 1 pass, 1 fail"));
    }

    #[test]
    fn worst_picks_smallest_slack() {
        let w = worst([
            CheckEntry::bound("a", "", 1.0, 2.0, 0.0),
            CheckEntry::bound("b", "", 1.0, 1.5, 0.0),
            CheckEntry::bound("c", "", 1.0, 1.5, 0.0),
        ])
        .unwrap();
        assert_eq!(w.check_id, "b");
    }
}
