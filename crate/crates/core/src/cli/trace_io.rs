//! JSON Lines trace files.
//!
//! Line 1 is a header object marked `"header": true`; every following line is
//! one step with exactly the keys `step`, `node`, `before`, `after`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::daemon::TraceStep;
use crate::protocol::{Configuration, NodeId, Params};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub header: bool,
    pub n: usize,
    pub k: u32,
    pub strategy: String,
    pub seed: Option<u64>,
    pub version: String,
}

impl TraceHeader {
    pub fn new(params: &Params, strategy: String, seed: Option<u64>) -> Self {
        TraceHeader {
            header: true,
            n: params.n(),
            k: params.k(),
            strategy,
            seed,
            version: VERSION.to_string(),
        }
    }
}

/// Serialized form of a [`TraceStep`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub step: u64,
    pub node: usize,
    pub before: Vec<u32>,
    pub after: Vec<u32>,
}

impl From<&TraceStep> for TraceRecord {
    fn from(s: &TraceStep) -> Self {
        TraceRecord {
            step: s.step_index as u64,
            node: s.fired.index(),
            before: s.before.states().to_vec(),
            after: s.after.states().to_vec(),
        }
    }
}

impl TraceRecord {
    /// Rebuilds the step, validating both configurations against `params`.
    pub fn to_step(&self, params: &Params) -> crate::Result<TraceStep> {
        Ok(TraceStep {
            step_index: self.step as usize,
            fired: NodeId(self.node),
            before: Configuration::new(params, self.before.clone())?,
            after: Configuration::new(params, self.after.clone())?,
        })
    }
}

pub fn write_header<W: Write>(out: &mut W, header: &TraceHeader) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, header)?;
    out.write_all(b"\n")
}

pub fn write_record<W: Write>(out: &mut W, step: &TraceStep) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, &TraceRecord::from(step))?;
    out.write_all(b"\n")
}

/// A trace file that parsed cleanly. `lines[i]` is the 1-based line number of
/// `records[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTrace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Blank lines are skipped; anything else that is not a well-formed header
/// or record is an error carrying its line number.
pub fn parse_trace<R: BufRead>(input: R) -> Result<ParsedTrace, ParseError> {
    let mut header = None;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| ParseError {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            let h: TraceHeader = serde_json::from_str(&line).map_err(|e| ParseError {
                line: lineno,
                message: format!("expected trace header: {e}"),
            })?;
            if !h.header {
                return Err(ParseError {
                    line: lineno,
                    message: "header object must carry \"header\": true".into(),
                });
            }
            header = Some(h);
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| ParseError {
            line: lineno,
            message: e.to_string(),
        })?;
        records.push(rec);
        lines.push(lineno);
    }
    let header = header.ok_or(ParseError {
        line: 1,
        message: "empty trace file, expected header".into(),
    })?;
    Ok(ParsedTrace {
        header,
        records,
        lines,
    })
}
