//! CSV ingestion of rating data and the on-disk model format.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::{CriteriaVector, LatticeSpec};
use crate::linear::LinearModel;
use crate::postprocess::{ExtensionMode, PreferenceModel};
use crate::rls::Lambda;

fn default_delimiter() -> char {
    ','
}

/// Column layout and scales of a ratings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub criteria_columns: Vec<String>,
    pub score_column: String,
    pub m: u32,
    pub score_min: f64,
    pub score_max: f64,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

impl IngestConfig {
    pub fn lattice(&self) -> Result<LatticeSpec> {
        if self.criteria_columns.is_empty() {
            return Err(Error::InvalidInput("no criteria columns configured".into()));
        }
        LatticeSpec::new(self.criteria_columns.len(), self.m, self.score_min, self.score_max)
    }

    fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| Error::InvalidInput(format!("delimiter {:?} is not ASCII", self.delimiter)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectKind {
    FieldCount,
    Missing,
    Malformed,
    OutOfRange,
}

impl fmt::Display for RejectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectKind::FieldCount => "field-count",
            RejectKind::Missing => "missing",
            RejectKind::Malformed => "malformed",
            RejectKind::OutOfRange => "out-of-range",
        })
    }
}

/// A skipped row. `line` is 1-based in the original file, header included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub line: u64,
    pub kind: RejectKind,
    pub column: Option<String>,
    pub detail: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.kind)?;
        if let Some(c) = &self.column {
            write!(f, " in column '{c}'")?;
        }
        write!(f, " ({})", self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
}

pub fn ingest_csv(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<Ingested> {
    ingest_reader(File::open(path)?, cfg)
}

/// Reads ratings, rejecting and itemizing rows with absent, malformed or
/// out-of-range values.
pub fn ingest_reader<R: Read>(reader: R, cfg: &IngestConfig) -> Result<Ingested> {
    let spec = cfg.lattice()?;
    let mut table = Table::open(reader, cfg.delimiter_byte()?)?;
    let criteria = table.columns(&cfg.criteria_columns)?;
    let score = table.columns(std::slice::from_ref(&cfg.score_column))?[0];

    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    while let Some((line, record)) = table.next_record()? {
        let parsed = table
            .check_width(line, &record)
            .and_then(|_| parse_criteria(line, &record, &criteria, &cfg.criteria_columns, &spec))
            .and_then(|x| {
                let y = parse_score(line, &record, score, &cfg.score_column, &spec)?;
                Ok((x, y))
            });
        match parsed {
            Ok(row) => rows.push(row),
            Err(r) => rejections.push(r),
        }
    }
    if rows.is_empty() {
        return Err(Error::NoValidRecords);
    }
    Ok(Ingested {
        dataset: Dataset::from_raw(spec, rows)?,
        rejections,
    })
}

/// Criteria rows to score, each with its 1-based file line.
#[derive(Debug, Clone)]
pub struct CriteriaRows {
    pub rows: Vec<(u64, CriteriaVector)>,
    pub rejections: Vec<Rejection>,
}

/// Reads the named criteria columns of a headed CSV; other columns are ignored.
pub fn read_criteria<R: Read>(
    reader: R,
    columns: &[String],
    delimiter: char,
    spec: &LatticeSpec,
) -> Result<CriteriaRows> {
    if columns.len() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: columns.len(),
        });
    }
    let delim = u8::try_from(delimiter)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::InvalidInput(format!("delimiter {delimiter:?} is not ASCII")))?;
    let mut table = Table::open(reader, delim)?;
    let idx = table.columns(columns)?;
    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    while let Some((line, record)) = table.next_record()? {
        match table
            .check_width(line, &record)
            .and_then(|_| parse_criteria(line, &record, &idx, columns, spec))
        {
            Ok(x) => rows.push((line, x)),
            Err(r) => rejections.push(r),
        }
    }
    Ok(CriteriaRows { rows, rejections })
}

struct Table<R> {
    reader: csv::Reader<R>,
    headers: csv::StringRecord,
}

impl<R: Read> Table<R> {
    fn open(reader: R, delimiter: u8) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = reader.headers()?.clone();
        Ok(Self { reader, headers })
    }

    fn columns(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.headers
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| Error::UnknownColumn(n.clone()))
            })
            .collect()
    }

    fn next_record(&mut self) -> Result<Option<(u64, csv::StringRecord)>> {
        let mut record = csv::StringRecord::new();
        if !self.reader.read_record(&mut record)? {
            return Ok(None);
        }
        let line = record.position().map_or(0, |p| p.line());
        Ok(Some((line, record)))
    }

    fn check_width(&self, line: u64, record: &csv::StringRecord) -> std::result::Result<(), Rejection> {
        if record.len() == self.headers.len() {
            return Ok(());
        }
        Err(Rejection {
            line,
            kind: RejectKind::FieldCount,
            column: None,
            detail: format!("expected {} fields, found {}", self.headers.len(), record.len()),
        })
    }
}

fn field<'a>(
    line: u64,
    record: &'a csv::StringRecord,
    idx: usize,
    name: &str,
) -> std::result::Result<&'a str, Rejection> {
    match record.get(idx) {
        Some(s) if !s.is_empty() && !s.eq_ignore_ascii_case("na") && !s.eq_ignore_ascii_case("nan") => Ok(s),
        _ => Err(Rejection {
            line,
            kind: RejectKind::Missing,
            column: Some(name.to_string()),
            detail: "no value".into(),
        }),
    }
}

fn parse_criteria(
    line: u64,
    record: &csv::StringRecord,
    idx: &[usize],
    names: &[String],
    spec: &LatticeSpec,
) -> std::result::Result<CriteriaVector, Rejection> {
    let mut coords = Vec::with_capacity(idx.len());
    for (&i, name) in idx.iter().zip(names) {
        let raw = field(line, record, i, name)?;
        let reject = |kind, detail: String| Rejection {
            line,
            kind,
            column: Some(name.clone()),
            detail,
        };
        let v: i64 = raw
            .parse()
            .map_err(|_| reject(RejectKind::Malformed, format!("'{raw}' is not an integer")))?;
        if v < 1 || v > i64::from(spec.m()) {
            return Err(reject(RejectKind::OutOfRange, format!("{v} not in 1..={}", spec.m())));
        }
        coords.push(v as u32);
    }
    Ok(CriteriaVector::new(coords))
}

fn parse_score(
    line: u64,
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    spec: &LatticeSpec,
) -> std::result::Result<f64, Rejection> {
    let raw = field(line, record, idx, name)?;
    let reject = |kind, detail: String| Rejection {
        line,
        kind,
        column: Some(name.to_string()),
        detail,
    };
    let y: f64 = raw
        .parse()
        .ok()
        .filter(|y: &f64| y.is_finite())
        .ok_or_else(|| reject(RejectKind::Malformed, format!("'{raw}' is not a number")))?;
    if y < spec.score_min() || y > spec.score_max() {
        return Err(reject(
            RejectKind::OutOfRange,
            format!("{y} not in [{}, {}]", spec.score_min(), spec.score_max()),
        ));
    }
    Ok(y)
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDoc {
    pub d: usize,
    pub m: u32,
    pub score_min: f64,
    pub score_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub x: CriteriaVector,
    pub value: f64,
}

/// Versioned JSON document holding everything needed to evaluate a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerializedModel {
    pub format_version: u32,
    pub lattice: LatticeDoc,
    pub criteria_columns: Vec<String>,
    pub lambda: Lambda,
    pub mode: ExtensionMode,
    pub linear: Option<LinearModel>,
    pub table: Vec<TableEntry>,
}

impl SerializedModel {
    /// `criteria_columns` may be empty when the model did not come from a file.
    pub fn from_model(model: &PreferenceModel, criteria_columns: Vec<String>) -> Result<Self> {
        let spec = model.spec();
        if !criteria_columns.is_empty() && criteria_columns.len() != spec.d() {
            return Err(Error::DimensionMismatch {
                expected: spec.d(),
                got: criteria_columns.len(),
            });
        }
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            lattice: LatticeDoc {
                d: spec.d(),
                m: spec.m(),
                score_min: spec.score_min(),
                score_max: spec.score_max(),
            },
            criteria_columns,
            lambda: model.lambda(),
            mode: model.mode(),
            linear: model.linear().cloned(),
            table: model
                .points()
                .iter()
                .zip(model.trained_values())
                .map(|(x, &value)| TableEntry { x: x.clone(), value })
                .collect(),
        })
    }

    pub fn into_model(self) -> Result<PreferenceModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(self.format_version));
        }
        let l = self.lattice;
        let spec = LatticeSpec::new(l.d, l.m, l.score_min, l.score_max)?;
        let linear = self
            .linear
            .map(|g| LinearModel::new(g.slopes().to_vec(), g.intercept()))
            .transpose()?;
        let (points, values) = self.table.into_iter().map(|e| (e.x, e.value)).unzip();
        PreferenceModel::from_parts(spec, self.lambda, points, values, self.mode, linear)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(text)?;
        if v.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(v.format_version));
        }
        Ok(serde_json::from_str(text)?)
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &PreferenceModel, criteria_columns: Vec<String>) -> Result<()> {
    std::fs::write(path, SerializedModel::from_model(model, criteria_columns)?.to_json()?)?;
    Ok(())
}

/// Loads a model and the criteria column names it was trained on.
pub fn load_model(path: impl AsRef<Path>) -> Result<(PreferenceModel, Vec<String>)> {
    let doc = SerializedModel::from_json(&std::fs::read_to_string(path)?)?;
    let columns = doc.criteria_columns.clone();
    Ok((doc.into_model()?, columns))
}
