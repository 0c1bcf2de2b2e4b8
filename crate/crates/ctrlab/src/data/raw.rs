//! Raw delimited-file ingestion: Criteo-style TSV, Frappe-style CSV with a
//! header, and a generic delimited format.
//!
//! Parsers are total over arbitrary input: any malformed line yields an
//! [`Error::Ingest`] naming the line number, never a panic. They are fuzzed
//! (see `fuzz/fuzz_targets/`).

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::data::discretize::{discretize_numeric, MISSING_TOKEN};
use crate::error::{Error, Result};

pub const CRITEO_INT_FIELDS: usize = 13;
pub const CRITEO_CAT_FIELDS: usize = 26;
pub const CRITEO_COLUMNS: usize = 1 + CRITEO_INT_FIELDS + CRITEO_CAT_FIELDS;

/// One ingested row: a binary label plus one categorical token per field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRecord {
    pub label: u8,
    pub tokens: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatKind {
    Criteo,
    Frappe,
    Generic,
}

impl FormatKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "criteo" => Ok(FormatKind::Criteo),
            "frappe" => Ok(FormatKind::Frappe),
            "generic" => Ok(FormatKind::Generic),
            other => Err(Error::Config(format!("unknown data.format '{other}'"))),
        }
    }
}

/// Ingestion options resolved from config.
#[derive(Clone, Debug)]
pub struct RawFormat {
    pub kind: FormatKind,
    /// Column separator; defaults: Criteo `\t`, Frappe/Generic `,`.
    pub delimiter: Option<char>,
    /// Label column name for header-carrying formats (default `label`).
    pub label_column: Option<String>,
}

impl RawFormat {
    pub fn criteo() -> Self {
        RawFormat { kind: FormatKind::Criteo, delimiter: None, label_column: None }
    }

    pub fn frappe() -> Self {
        RawFormat { kind: FormatKind::Frappe, delimiter: None, label_column: None }
    }

    pub fn generic(delimiter: char, label_column: &str) -> Self {
        RawFormat {
            kind: FormatKind::Generic,
            delimiter: Some(delimiter),
            label_column: Some(label_column.to_string()),
        }
    }

    fn delimiter(&self) -> char {
        self.delimiter.unwrap_or(match self.kind {
            FormatKind::Criteo => '\t',
            _ => ',',
        })
    }

    fn label_column(&self) -> &str {
        self.label_column.as_deref().unwrap_or("label")
    }
}

fn parse_label(tok: &str, line_no: usize) -> Result<u8> {
    match tok.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Ingest { line: line_no, msg: format!("label must be 0 or 1, got '{other}'") }),
    }
}

/// Parse one Criteo TSV line: label, 13 integer columns (discretized),
/// 26 categorical columns. Empty cells become the missing token.
pub fn parse_criteo_line(line: &str, line_no: usize) -> Result<RawRecord> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != CRITEO_COLUMNS {
        return Err(Error::Ingest {
            line: line_no,
            msg: format!("expected {} tab-separated columns, got {}", CRITEO_COLUMNS, cols.len()),
        });
    }
    let label = parse_label(cols[0], line_no)?;
    let mut tokens = Vec::with_capacity(CRITEO_INT_FIELDS + CRITEO_CAT_FIELDS);
    for (i, cell) in cols[1..=CRITEO_INT_FIELDS].iter().enumerate() {
        let cell = cell.trim();
        if cell.is_empty() {
            tokens.push(discretize_numeric(None));
        } else {
            let v: i64 = cell.parse().map_err(|_| Error::Ingest {
                line: line_no,
                msg: format!("integer column I{} holds '{cell}'", i + 1),
            })?;
            tokens.push(discretize_numeric(Some(v)));
        }
    }
    for cell in &cols[1 + CRITEO_INT_FIELDS..] {
        let cell = cell.trim();
        tokens.push(if cell.is_empty() { MISSING_TOKEN.to_string() } else { cell.to_string() });
    }
    Ok(RawRecord { label, tokens })
}

/// Header-driven parser for Frappe-style and generic delimited files.
#[derive(Clone, Debug)]
pub struct DelimitedParser {
    delimiter: char,
    label_idx: usize,
    field_names: Vec<String>,
}

impl DelimitedParser {
    /// Build from the header line. The label column is located by name, or
    /// by index if `label_column` parses as an integer.
    pub fn from_header(header: &str, delimiter: char, label_column: &str) -> Result<Self> {
        let cols: Vec<&str> = header.split(delimiter).map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::Ingest { line: 1, msg: "header must name a label column and at least one field".into() });
        }
        let label_idx = if let Ok(idx) = label_column.parse::<usize>() {
            if idx >= cols.len() {
                return Err(Error::Ingest { line: 1, msg: format!("label column index {idx} out of range ({} columns)", cols.len()) });
            }
            idx
        } else {
            cols.iter().position(|c| *c == label_column).ok_or_else(|| Error::Ingest {
                line: 1,
                msg: format!("label column '{label_column}' not in header"),
            })?
        };
        let field_names = cols
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, c)| c.to_string())
            .collect();
        Ok(DelimitedParser { delimiter, label_idx, field_names })
    }

    pub fn field_names(&self) -> &[String] {
        &self.field_names
    }

    pub fn parse_line(&self, line: &str, line_no: usize) -> Result<RawRecord> {
        let cols: Vec<&str> = line.split(self.delimiter).collect();
        let expected = self.field_names.len() + 1;
        if cols.len() != expected {
            return Err(Error::Ingest {
                line: line_no,
                msg: format!("expected {expected} columns, got {}", cols.len()),
            });
        }
        let label = parse_label(cols[self.label_idx], line_no)?;
        let tokens = cols
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.label_idx)
            .map(|(_, c)| {
                let c = c.trim();
                if c.is_empty() { MISSING_TOKEN.to_string() } else { c.to_string() }
            })
            .collect();
        Ok(RawRecord { label, tokens })
    }
}

/// Line source abstracting plain and gzip-compressed files.
pub fn open_lines(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::new(flate2::read::GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Streaming record reader over a delimited source.
pub struct RecordReader<R: BufRead> {
    lines: std::io::Lines<R>,
    parser: LineParser,
    line_no: usize,
    field_names: Vec<String>,
}

enum LineParser {
    Criteo,
    Delimited(DelimitedParser),
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(mut reader: R, format: &RawFormat) -> Result<RecordReader<R>> {
        match format.kind {
            FormatKind::Criteo => {
                let names: Vec<String> = (1..=CRITEO_INT_FIELDS)
                    .map(|i| format!("I{i}"))
                    .chain((1..=CRITEO_CAT_FIELDS).map(|i| format!("C{i}")))
                    .collect();
                Ok(RecordReader { lines: reader.lines(), parser: LineParser::Criteo, line_no: 0, field_names: names })
            }
            FormatKind::Frappe | FormatKind::Generic => {
                let mut header = String::new();
                let n = reader.read_line(&mut header)?;
                if n == 0 {
                    return Err(Error::Ingest { line: 1, msg: "empty file: missing header".into() });
                }
                let header = header.trim_end_matches(['\n', '\r']);
                let parser = DelimitedParser::from_header(header, format.delimiter(), format.label_column())?;
                let names = parser.field_names().to_vec();
                Ok(RecordReader { lines: reader.lines(), parser: LineParser::Delimited(parser), line_no: 1, field_names: names })
            }
        }
    }

    pub fn field_names(&self) -> &[String] {
        &self.field_names
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.is_empty() {
                continue;
            }
            return Some(match &self.parser {
                LineParser::Criteo => parse_criteo_line(trimmed, self.line_no),
                LineParser::Delimited(p) => p.parse_line(trimmed, self.line_no),
            });
        }
    }
}

/// Open a data file with the given format.
pub fn open_records(path: &Path, format: &RawFormat) -> Result<RecordReader<Box<dyn BufRead>>> {
    RecordReader::new(open_lines(path)?, format)
}
