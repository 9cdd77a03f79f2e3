//! Source file ingestion.
//!
//! Delimited and fixed-width person files are read into [`RawRecord`]s
//! according to a [`SourceLayout`]. Bad rows are collected with their line
//! number and skipped; only an unreadable header aborts a parse.
//!
//! Death-master monthly updates are folded into an existing file with
//! [`merge_monthly_update`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use encoding_rs::Encoding;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalizer::{normalize_digits, DateOrder};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("unknown text encoding `{0}`")]
    Encoding(String),
    #[error("unreadable header: {0}")]
    Header(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write record `{record_id}`: {message}")]
    Write { record_id: String, message: String },
}

/// Identity element a source column can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    RecordId,
    FirstName,
    MiddleName,
    LastName,
    BirthDate,
    DeathDate,
    Ssn,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::RecordId,
        Role::FirstName,
        Role::MiddleName,
        Role::LastName,
        Role::BirthDate,
        Role::DeathDate,
        Role::Ssn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::RecordId => "record_id",
            Role::FirstName => "first_name",
            Role::MiddleName => "middle_name",
            Role::LastName => "last_name",
            Role::BirthDate => "birth_date",
            Role::DeathDate => "death_date",
            Role::Ssn => "ssn",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown field role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    #[default]
    Delimited,
    FixedWidth,
}

/// Where a role lives in a row: a header name or zero-based index for
/// delimited files, a byte span for fixed-width files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
    Span { start: usize, length: usize },
}

/// Which side of the linkage a source plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    Patient,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceLayout {
    #[serde(default)]
    pub format: SourceFormat,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub has_header: bool,
    pub columns: BTreeMap<Role, ColumnRef>,
    #[serde(default = "default_encoding")]
    pub encoding: String,
    /// Component order of dates written with separators, e.g. `12/3/2007`.
    #[serde(default)]
    pub date_order: DateOrder,
}

fn default_delimiter() -> char {
    ','
}
fn default_true() -> bool {
    true
}
fn default_encoding() -> String {
    "utf-8".to_string()
}

impl SourceLayout {
    /// Comma-delimited with a header whose column names equal the role names.
    pub fn standard_delimited() -> Self {
        SourceLayout {
            format: SourceFormat::Delimited,
            delimiter: ',',
            has_header: true,
            columns: Role::ALL
                .into_iter()
                .map(|r| (r, ColumnRef::Name(r.as_str().to_string())))
                .collect(),
            encoding: default_encoding(),
            date_order: DateOrder::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::Layout(e.to_string()))
    }

    pub fn validate(&self, dataset: DatasetRole) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Layout(m));
        match dataset {
            DatasetRole::Patient if !self.columns.contains_key(&Role::RecordId) => {
                return bad("patient layout must map record_id".into())
            }
            DatasetRole::External if !self.columns.contains_key(&Role::Ssn) => {
                return bad("death-master layout must map ssn".into())
            }
            _ => {}
        }
        self.encoding()?;
        match self.format {
            SourceFormat::Delimited => {
                if !self.delimiter.is_ascii() {
                    return bad(format!("delimiter {:?} must be a single ASCII character", self.delimiter));
                }
                let mut seen_names = HashSet::new();
                let mut seen_idx = HashSet::new();
                for (role, col) in &self.columns {
                    match col {
                        ColumnRef::Span { .. } => {
                            return bad(format!("{role}: byte spans are only valid for fixed-width layouts"))
                        }
                        ColumnRef::Name(_) if !self.has_header => {
                            return bad(format!("{role}: column names need has_header = true"))
                        }
                        ColumnRef::Name(n) if !seen_names.insert(n.as_str()) => {
                            return bad(format!("column `{n}` mapped to more than one role"))
                        }
                        ColumnRef::Index(i) if !seen_idx.insert(*i) => {
                            return bad(format!("column index {i} mapped to more than one role"))
                        }
                        _ => {}
                    }
                }
            }
            SourceFormat::FixedWidth => {
                let mut spans: Vec<(usize, usize, Role)> = Vec::new();
                for (role, col) in &self.columns {
                    match col {
                        ColumnRef::Span { start, length } => {
                            if *length == 0 {
                                return bad(format!("{role}: span length must be at least 1"));
                            }
                            spans.push((*start, start + length, *role));
                        }
                        _ => return bad(format!("{role}: fixed-width layouts need byte spans")),
                    }
                }
                spans.sort();
                for w in spans.windows(2) {
                    if w[1].0 < w[0].1 {
                        return bad(format!("spans for {} and {} overlap", w[0].2, w[1].2));
                    }
                }
            }
        }
        Ok(())
    }

    fn encoding(&self) -> Result<&'static Encoding, IngestError> {
        Encoding::for_label(self.encoding.as_bytes())
            .ok_or_else(|| IngestError::Encoding(self.encoding.clone()))
    }
}

/// One person row exactly as read, every field an untyped string.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawRecord {
    pub record_id: String,
    pub first_name: Option<String>,
    pub middle_name: Option<String>,
    pub last_name: Option<String>,
    pub birth_date: Option<String>,
    pub death_date: Option<String>,
    pub ssn: Option<String>,
}

impl RawRecord {
    pub fn get(&self, role: Role) -> Option<&str> {
        match role {
            Role::RecordId => Some(self.record_id.as_str()),
            Role::FirstName => self.first_name.as_deref(),
            Role::MiddleName => self.middle_name.as_deref(),
            Role::LastName => self.last_name.as_deref(),
            Role::BirthDate => self.birth_date.as_deref(),
            Role::DeathDate => self.death_date.as_deref(),
            Role::Ssn => self.ssn.as_deref(),
        }
    }

    fn set(&mut self, role: Role, value: Option<String>) {
        match role {
            Role::RecordId => self.record_id = value.unwrap_or_default(),
            Role::FirstName => self.first_name = value,
            Role::MiddleName => self.middle_name = value,
            Role::LastName => self.last_name = value,
            Role::BirthDate => self.birth_date = value,
            Role::DeathDate => self.death_date = value,
            Role::Ssn => self.ssn = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based physical line number.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_emitted: u64,
    pub rows_rejected: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedSource {
    pub records: Vec<RawRecord>,
    pub errors: Vec<RowError>,
    /// Data rows seen, header excluded.
    pub rows_read: u64,
}

impl ParsedSource {
    pub fn report(&self) -> IngestReport {
        IngestReport {
            rows_read: self.rows_read,
            rows_emitted: self.records.len() as u64,
            rows_rejected: self.errors.len() as u64,
        }
    }
}

/// Parse a whole source stream.
///
/// Records without a mapped `record_id` column get their 1-based data row
/// ordinal as id. Blank lines are not rows.
pub fn parse_source<R: Read>(layout: &SourceLayout, input: R) -> Result<ParsedSource, IngestError> {
    let encoding = layout.encoding()?;
    let mut out = ParsedSource::default();
    let mut ids = HashSet::new();
    let mut accept = |out: &mut ParsedSource, line: u64, rec: Result<RawRecord, String>| {
        out.rows_read += 1;
        let rec = rec.and_then(|mut r| {
            if !layout.columns.contains_key(&Role::RecordId) {
                r.record_id = out.rows_read.to_string();
            }
            if r.record_id.is_empty() {
                Err("missing record_id".to_string())
            } else if !ids.insert(r.record_id.clone()) {
                Err(format!("duplicate record_id `{}`", r.record_id))
            } else {
                Ok(r)
            }
        });
        match rec {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(RowError { line, message }),
        }
    };

    match layout.format {
        SourceFormat::Delimited => {
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(layout.delimiter as u8)
                .has_headers(false)
                .flexible(true)
                .from_reader(input);
            let mut rows = reader.byte_records();
            let mut positions: Vec<(Role, usize)> = Vec::new();
            let mut expected_fields = None;
            if layout.has_header {
                match rows.next() {
                    None => return Ok(out),
                    Some(Err(e)) => return Err(IngestError::Header(e.to_string())),
                    Some(Ok(header)) => {
                        let names: Vec<String> = header
                            .iter()
                            .map(|f| decode(encoding, f).map(|s| s.trim().to_string()))
                            .collect::<Option<_>>()
                            .ok_or_else(|| IngestError::Header("header is not decodable".into()))?;
                        for (role, col) in &layout.columns {
                            let idx = match col {
                                ColumnRef::Name(n) => names.iter().position(|h| h == n).ok_or_else(|| {
                                    IngestError::Header(format!("column `{n}` for {role} not in header"))
                                })?,
                                ColumnRef::Index(i) => *i,
                                ColumnRef::Span { .. } => unreachable!("rejected by validate"),
                            };
                            positions.push((*role, idx));
                        }
                        expected_fields = Some(names.len());
                    }
                }
            } else {
                for (role, col) in &layout.columns {
                    match col {
                        ColumnRef::Index(i) => positions.push((*role, *i)),
                        _ => return Err(IngestError::Layout(format!("{role}: headerless files need column indices"))),
                    }
                }
            }
            for row in rows {
                let row = match row {
                    Ok(r) => r,
                    Err(e) => {
                        let line = e.position().map(|p| p.line()).unwrap_or(0);
                        accept(&mut out, line, Err(format!("unparseable row: {e}")));
                        continue;
                    }
                };
                let line = row.position().map(|p| p.line()).unwrap_or(0);
                if row.len() == 1 && row[0].is_empty() {
                    continue;
                }
                let expected = *expected_fields.get_or_insert(row.len());
                if row.len() != expected {
                    accept(
                        &mut out,
                        line,
                        Err(format!("expected {expected} fields, found {}", row.len())),
                    );
                    continue;
                }
                let rec = delimited_row(&row, &positions, encoding);
                accept(&mut out, line, rec);
            }
        }
        SourceFormat::FixedWidth => {
            let spans: Vec<(Role, usize, usize)> = layout
                .columns
                .iter()
                .map(|(role, col)| match col {
                    ColumnRef::Span { start, length } => (*role, *start, *length),
                    _ => unreachable!("rejected by validate"),
                })
                .collect();
            let min_len = spans.iter().map(|(_, s, l)| s + l).max().unwrap_or(0);
            let mut reader = std::io::BufReader::new(input);
            let mut buf = Vec::new();
            let mut line_no = 0u64;
            if layout.has_header {
                line_no += 1;
                if reader.read_until(b'\n', &mut buf)? == 0 {
                    return Ok(out);
                }
            }
            loop {
                buf.clear();
                if reader.read_until(b'\n', &mut buf)? == 0 {
                    break;
                }
                line_no += 1;
                while matches!(buf.last(), Some(b'\n' | b'\r')) {
                    buf.pop();
                }
                if buf.iter().all(|b| b.is_ascii_whitespace()) {
                    continue;
                }
                if buf.len() < min_len {
                    accept(
                        &mut out,
                        line_no,
                        Err(format!("line is {} bytes, layout needs {min_len}", buf.len())),
                    );
                    continue;
                }
                let mut rec = RawRecord::default();
                let mut failed = None;
                for (role, start, length) in &spans {
                    match decode(encoding, &buf[*start..start + length]) {
                        Some(s) => rec.set(*role, non_empty(s.trim())),
                        None => {
                            failed = Some(format!("{role} is not decodable"));
                            break;
                        }
                    }
                }
                accept(&mut out, line_no, failed.map_or(Ok(rec), Err));
            }
        }
    }
    Ok(out)
}

fn delimited_row(
    row: &csv::ByteRecord,
    positions: &[(Role, usize)],
    encoding: &'static Encoding,
) -> Result<RawRecord, String> {
    let mut rec = RawRecord::default();
    for (role, idx) in positions {
        let Some(bytes) = row.get(*idx) else {
            return Err(format!("{role} column {idx} is beyond the row"));
        };
        let text = decode(encoding, bytes).ok_or_else(|| format!("{role} is not decodable"))?;
        let value = if *role == Role::RecordId {
            non_empty(text.trim())
        } else {
            non_empty(&text)
        };
        rec.set(*role, value);
    }
    Ok(rec)
}

fn decode(encoding: &'static Encoding, bytes: &[u8]) -> Option<String> {
    encoding
        .decode_without_bom_handling_and_without_replacement(bytes)
        .map(|c| c.into_owned())
}

fn non_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

/// Serialize records under `layout`. Delimited output re-reads to the same
/// populated fields; fixed-width output left-aligns and space-pads each span.
pub fn write_records<W: Write>(layout: &SourceLayout, records: &[RawRecord], out: W) -> Result<(), IngestError> {
    match layout.format {
        SourceFormat::Delimited => {
            let mut writer = csv::WriterBuilder::new()
                .delimiter(layout.delimiter as u8)
                .from_writer(out);
            let mut cols: Vec<(usize, Option<&str>, Role)> = Vec::new();
            let mut next = 0;
            for (role, col) in &layout.columns {
                match col {
                    ColumnRef::Index(i) => cols.push((*i, None, *role)),
                    ColumnRef::Name(n) => cols.push((usize::MAX, Some(n.as_str()), *role)),
                    ColumnRef::Span { .. } => return Err(IngestError::Layout("span in delimited layout".into())),
                }
            }
            // Named columns go after the highest explicit index, in role order.
            let max_idx = cols.iter().filter(|c| c.1.is_none()).map(|c| c.0 + 1).max().unwrap_or(0);
            for c in cols.iter_mut().filter(|c| c.1.is_some()) {
                c.0 = max_idx + next;
                next += 1;
            }
            let width = cols.iter().map(|c| c.0 + 1).max().unwrap_or(0);
            if layout.has_header {
                let mut header = vec![String::new(); width];
                for (i, name, role) in &cols {
                    header[*i] = name.map(str::to_string).unwrap_or_else(|| role.as_str().to_string());
                }
                writer.write_record(&header)?;
            }
            for rec in records {
                let mut row = vec![""; width];
                for (i, _, role) in &cols {
                    row[*i] = rec.get(*role).unwrap_or("");
                }
                writer.write_record(&row)?;
            }
            writer.flush()?;
        }
        SourceFormat::FixedWidth => {
            let mut out = std::io::BufWriter::new(out);
            let width = layout
                .columns
                .values()
                .filter_map(|c| match c {
                    ColumnRef::Span { start, length } => Some(start + length),
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            if layout.has_header {
                writeln!(out)?;
            }
            for rec in records {
                let mut line = vec![b' '; width];
                for (role, col) in &layout.columns {
                    let ColumnRef::Span { start, length } = col else {
                        return Err(IngestError::Layout("fixed-width layouts need byte spans".into()));
                    };
                    let value = rec.get(*role).unwrap_or("");
                    let bytes = value.as_bytes();
                    if bytes.len() > *length {
                        return Err(IngestError::Write {
                            record_id: rec.record_id.clone(),
                            message: format!("{role} value does not fit {length} bytes"),
                        });
                    }
                    line[*start..start + bytes.len()].copy_from_slice(bytes);
                }
                out.write_all(&line)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeOutcome {
    pub records: Vec<RawRecord>,
    /// Rows without any SSN digits; they cannot be keyed.
    pub rejected: Vec<RawRecord>,
    pub warnings: Vec<String>,
}

/// Fold a monthly death-master update into the existing file.
///
/// Records are keyed by the digits of their SSN. An update record replaces
/// the existing record for the same key in full and keeps its position; new
/// keys are appended in update order. Within one input a repeated key keeps
/// the last record.
pub fn merge_monthly_update(existing: Vec<RawRecord>, update: Vec<RawRecord>) -> MergeOutcome {
    let mut outcome = MergeOutcome::default();
    let mut order: Vec<String> = Vec::new();
    let mut by_key: HashMap<String, RawRecord> = HashMap::new();
    for (label, input) in [("existing", existing), ("update", update)] {
        let mut seen_here = HashSet::new();
        for rec in input {
            let Some(key) = normalize_digits(rec.ssn.as_deref()) else {
                outcome.rejected.push(rec);
                continue;
            };
            if !seen_here.insert(key.clone()) {
                outcome
                    .warnings
                    .push(format!("{label}: ssn {key} appears more than once, keeping the last record"));
            }
            if by_key.insert(key.clone(), rec).is_none() {
                order.push(key);
            }
        }
    }
    outcome.records = order
        .into_iter()
        .map(|k| by_key.remove(&k).expect("every ordered key is present"))
        .collect();
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(layout: &SourceLayout, text: &str) -> ParsedSource {
        parse_source(layout, text.as_bytes()).unwrap()
    }

    fn headerless() -> SourceLayout {
        let mut l = SourceLayout::standard_delimited();
        l.has_header = false;
        l.columns = [
            Role::RecordId,
            Role::FirstName,
            Role::MiddleName,
            Role::LastName,
            Role::BirthDate,
            Role::DeathDate,
            Role::Ssn,
        ]
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, ColumnRef::Index(i)))
        .collect();
        l
    }

    #[test]
    fn delimited_row_maps_fields() {
        let out = parse(&headerless(), "P1,JOHN,,DOE,1950-05-07,,123-35-4789\n");
        assert!(out.errors.is_empty());
        assert_eq!(
            out.records,
            vec![RawRecord {
                record_id: "P1".into(),
                first_name: Some("JOHN".into()),
                middle_name: None,
                last_name: Some("DOE".into()),
                birth_date: Some("1950-05-07".into()),
                death_date: None,
                ssn: Some("123-35-4789".into()),
            }]
        );
    }

    #[test]
    fn fixed_width_span_slices() {
        let mut columns = BTreeMap::new();
        columns.insert(Role::Ssn, ColumnRef::Span { start: 0, length: 9 });
        columns.insert(Role::LastName, ColumnRef::Span { start: 9, length: 6 });
        let layout = SourceLayout {
            format: SourceFormat::FixedWidth,
            has_header: false,
            columns,
            ..SourceLayout::standard_delimited()
        };
        layout.validate(DatasetRole::External).unwrap();
        let out = parse(&layout, "123354789DOE   \n987654321\n");
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].ssn.as_deref(), Some("123354789"));
        assert_eq!(out.records[0].last_name.as_deref(), Some("DOE"));
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].line, 2);
        assert_eq!(out.rows_read, 2);
    }

    #[test]
    fn empty_input_is_empty() {
        for layout in [SourceLayout::standard_delimited(), headerless()] {
            let out = parse(&layout, "");
            assert!(out.records.is_empty() && out.errors.is_empty());
            assert_eq!(out.rows_read, 0);
        }
    }

    #[test]
    fn wrong_field_count_is_collected() {
        let text = "record_id,first_name,middle_name,last_name,birth_date,death_date,ssn\n\
                    P1,A,,B,19500101,,\n\
                    P2,A,B\n\
                    P3,C,,D,19500101,,\n";
        let out = parse(&SourceLayout::standard_delimited(), text);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.errors, vec![RowError { line: 3, message: "expected 7 fields, found 3".into() }]);
        assert_eq!(out.report().rows_read, 3);
    }

    #[test]
    fn missing_header_column_is_fatal() {
        let err = parse_source(&SourceLayout::standard_delimited(), "record_id,first_name\nP1,A\n".as_bytes());
        assert!(matches!(err, Err(IngestError::Header(_))));
    }

    #[test]
    fn duplicate_record_id_rejected() {
        let out = parse(&headerless(), "P1,A,,,,,\nP1,B,,,,,\n,C,,,,,\n");
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.errors.len(), 2);
    }

    #[test]
    fn latin1_decoding() {
        let mut layout = headerless();
        layout.encoding = "latin1".into();
        let bytes = b"P1,Jos\xe9,,,,,\n";
        let out = parse_source(&layout, &bytes[..]).unwrap();
        assert_eq!(out.records[0].first_name.as_deref(), Some("José"));
    }

    #[test]
    fn layout_invariants() {
        let mut l = SourceLayout::standard_delimited();
        l.columns.remove(&Role::RecordId);
        assert!(l.validate(DatasetRole::Patient).is_err());
        assert!(l.validate(DatasetRole::External).is_ok());

        let mut columns = BTreeMap::new();
        columns.insert(Role::Ssn, ColumnRef::Span { start: 0, length: 9 });
        columns.insert(Role::LastName, ColumnRef::Span { start: 8, length: 4 });
        let fw = SourceLayout { format: SourceFormat::FixedWidth, columns, ..SourceLayout::standard_delimited() };
        assert!(fw.validate(DatasetRole::External).is_err());

        let mut columns = BTreeMap::new();
        columns.insert(Role::Ssn, ColumnRef::Span { start: 0, length: 0 });
        let fw = SourceLayout { format: SourceFormat::FixedWidth, columns, ..SourceLayout::standard_delimited() };
        assert!(fw.validate(DatasetRole::External).is_err());

        let mut dup = SourceLayout::standard_delimited();
        dup.columns.insert(Role::FirstName, ColumnRef::Name("ssn".into()));
        assert!(dup.validate(DatasetRole::External).is_err());
    }

    #[test]
    fn layout_from_toml() {
        let layout = SourceLayout::from_toml(
            r#"
            format = "fixed_width"
            has_header = false
            encoding = "latin1"
            [columns]
            ssn = { start = 0, length = 9 }
            last_name = { start = 9, length = 20 }
            "#,
        )
        .unwrap();
        assert_eq!(layout.format, SourceFormat::FixedWidth);
        assert_eq!(layout.columns[&Role::Ssn], ColumnRef::Span { start: 0, length: 9 });
        layout.validate(DatasetRole::External).unwrap();
    }

    fn rec(id: &str, ssn: &str, last: &str) -> RawRecord {
        RawRecord { record_id: id.into(), ssn: Some(ssn.into()), last_name: Some(last.into()), ..Default::default() }
    }

    #[test]
    fn merge_update_wins() {
        let out = merge_monthly_update(vec![rec("1", "A1", "OLD")], vec![rec("2", "A-1", "NEW")]);
        assert_eq!(out.records, vec![rec("2", "A-1", "NEW")]);
    }

    #[test]
    fn merge_disjoint_union() {
        let out = merge_monthly_update(vec![rec("1", "1", "X")], vec![rec("2", "2", "Y")]);
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn merge_rejects_and_warns() {
        let mut no_ssn = rec("3", "", "Z");
        no_ssn.ssn = None;
        let out = merge_monthly_update(
            vec![no_ssn.clone()],
            vec![rec("1", "5", "A"), rec("2", "5", "B")],
        );
        assert_eq!(out.rejected, vec![no_ssn]);
        assert_eq!(out.records, vec![rec("2", "5", "B")]);
        assert_eq!(out.warnings.len(), 1);
    }
}
