//! Cohort and nomination file parsing.
//!
//! Both files are comma-separated with a header row; a JSON array of objects
//! with the same field names is accepted as an alternative. Missing values are
//! written as an empty field or `NA`. Row numbers in errors and warnings are
//! 1-based data rows.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    Alcohol, BmiCategory, Carriage, Cohort, Contexts, Contraceptive, IsoWeek, Layer, Nomination,
    Participant, PhysicalActivity, Sex, StudyProgram, UseFrequency,
};

/// Maximum number of distinct people one participant may nominate.
pub const NOMINATION_CAP: usize = 5;

pub const COHORT_COLUMNS: [&str; 16] = [
    "id",
    "sex",
    "age",
    "school",
    "study_program",
    "bmi_category",
    "smoking",
    "snuff",
    "alcohol",
    "physical_activity",
    "contraceptive",
    "carriage_direct",
    "carriage_enrichment",
    "spa_type",
    "representativeness",
    "attendance_week",
];

const REQUIRED_COHORT_COLUMNS: [&str; 4] = ["id", "sex", "carriage_direct", "carriage_enrichment"];

pub const NOMINATION_COLUMNS: [&str; 7] = ["from", "to", "physical", "school", "sports", "home", "other"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub row: usize,
    pub message: String,
}

/// Counters and warnings from reading the two input files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub n_participants: usize,
    pub n_nominations_raw: usize,
    pub n_nominations_kept: usize,
    pub n_nominations_dropped_external: usize,
    pub n_nominations_dropped_self: usize,
    pub n_duplicate_nominations: usize,
    pub n_flagless_nominations: usize,
    pub warnings: Vec<Warning>,
}

impl IngestReport {
    fn warn(&mut self, row: usize, message: impl Into<String>) {
        let message = message.into();
        log::warn!("row {row}: {message}");
        self.warnings.push(Warning { row, message });
    }

    pub fn merge(&mut self, other: IngestReport) {
        self.n_participants += other.n_participants;
        self.n_nominations_raw += other.n_nominations_raw;
        self.n_nominations_kept += other.n_nominations_kept;
        self.n_nominations_dropped_external += other.n_nominations_dropped_external;
        self.n_nominations_dropped_self += other.n_nominations_dropped_self;
        self.n_duplicate_nominations += other.n_duplicate_nominations;
        self.n_flagless_nominations += other.n_flagless_nominations;
        self.warnings.extend(other.warnings);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

struct Record {
    row: usize,
    fields: HashMap<String, String>,
}

impl Record {
    /// Trimmed value, `None` when the column is absent, empty or `NA`.
    fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .get(key)
            .map(|s| s.trim())
            .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case("na"))
    }
}

fn read_records(reader: impl Read, format: Format) -> Result<(Vec<String>, Vec<Record>)> {
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .flexible(false)
                .from_reader(reader);
            let header: Vec<String> = rdr
                .headers()?
                .iter()
                .map(|h| h.trim().to_ascii_lowercase())
                .collect();
            let mut records = Vec::new();
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| Error::ingest(i + 1, e.to_string()))?;
                let fields = header
                    .iter()
                    .cloned()
                    .zip(rec.iter().map(String::from))
                    .collect();
                records.push(Record { row: i + 1, fields });
            }
            Ok((header, records))
        }
        Format::Json => {
            let rows: Vec<BTreeMap<String, serde_json::Value>> = serde_json::from_reader(reader)?;
            let mut header: Vec<String> = Vec::new();
            let mut records = Vec::with_capacity(rows.len());
            for (i, row) in rows.into_iter().enumerate() {
                let mut fields = HashMap::new();
                for (k, v) in row {
                    let k = k.to_ascii_lowercase();
                    if !header.contains(&k) {
                        header.push(k.clone());
                    }
                    let s = match v {
                        serde_json::Value::Null => String::new(),
                        serde_json::Value::String(s) => s,
                        other => other.to_string(),
                    };
                    fields.insert(k, s);
                }
                records.push(Record { row: i + 1, fields });
            }
            Ok((header, records))
        }
    }
}

fn optional<T>(
    rec: &Record,
    key: &str,
    parse: impl Fn(&str) -> Option<T>,
    report: &mut IngestReport,
) -> Option<T> {
    let raw = rec.get(key)?;
    match parse(raw) {
        Some(v) => Some(v),
        None => {
            report.warn(rec.row, format!("unrecognized {key} value `{raw}`; treated as missing"));
            None
        }
    }
}

fn required_carriage(rec: &Record, key: &str) -> Result<Carriage> {
    let raw = rec
        .get(key)
        .ok_or_else(|| Error::ingest(rec.row, format!("{key} is required")))?;
    Carriage::parse_token(raw)
        .or(match raw {
            "1" => Some(Carriage::Positive),
            "0" => Some(Carriage::Negative),
            _ => None,
        })
        .ok_or_else(|| Error::ingest(rec.row, format!("invalid {key} value `{raw}`")))
}

fn parse_participant(rec: &Record, report: &mut IngestReport) -> Result<Participant> {
    let id = rec
        .get("id")
        .ok_or_else(|| Error::ingest(rec.row, "id is required"))?
        .to_string();
    let mut p = Participant::new(
        id,
        required_carriage(rec, "carriage_direct")?,
        required_carriage(rec, "carriage_enrichment")?,
    );
    p.sex = match rec.get("sex") {
        None => None,
        Some(raw) => Some(
            Sex::parse_token(raw)
                .ok_or_else(|| Error::ingest(rec.row, format!("invalid sex value `{raw}`")))?,
        ),
    };
    p.age = optional(rec, "age", |s| s.parse::<f64>().ok().filter(|a| a.is_finite() && *a >= 0.0), report);
    p.school = rec.get("school").map(String::from);
    p.study_program = optional(rec, "study_program", StudyProgram::parse_token, report);
    p.bmi_category = optional(rec, "bmi_category", BmiCategory::parse_token, report);
    if let Some(bmi) = optional(rec, "bmi", |s| s.parse::<f64>().ok().and_then(BmiCategory::from_bmi), report) {
        match p.bmi_category {
            None => p.bmi_category = Some(bmi),
            Some(c) if c != bmi => {
                return Err(Error::ingest(
                    rec.row,
                    format!("bmi_category `{c}` disagrees with raw bmi (category `{bmi}`)"),
                ))
            }
            Some(_) => {}
        }
    }
    p.smoking = optional(rec, "smoking", UseFrequency::parse_token, report);
    p.snuff = optional(rec, "snuff", UseFrequency::parse_token, report);
    p.alcohol = optional(rec, "alcohol", Alcohol::parse_token, report);
    p.physical_activity = optional(rec, "physical_activity", PhysicalActivity::parse_token, report);
    p.contraceptive = optional(rec, "contraceptive", Contraceptive::parse_token, report);
    p.spa_type = rec.get("spa_type").map(String::from);
    p.representativeness = optional(
        rec,
        "representativeness",
        |s| s.parse::<u8>().ok().filter(|r| *r <= 10),
        report,
    );
    p.attendance_week = optional(rec, "attendance_week", |s| s.parse::<IsoWeek>().ok(), report);
    p.validate().map_err(|m| Error::ingest(rec.row, m))?;
    Ok(p)
}

/// Parse the participant table.
pub fn parse_cohort(reader: impl Read, format: Format) -> Result<(Cohort, IngestReport)> {
    let (header, records) = read_records(reader, format)?;
    let mut report = IngestReport::default();
    if format == Format::Csv || !records.is_empty() {
        for col in REQUIRED_COHORT_COLUMNS {
            if !header.iter().any(|h| h == col) {
                return Err(Error::Input(format!("cohort file lacks required column `{col}`")));
            }
        }
    }
    let mut participants = Vec::with_capacity(records.len());
    let mut seen = HashSet::new();
    for rec in &records {
        let p = parse_participant(rec, &mut report)?;
        if !seen.insert(p.id.clone()) {
            return Err(Error::ingest(rec.row, format!("duplicate id `{}`", p.id)));
        }
        participants.push(p);
    }
    report.n_participants = participants.len();
    Ok((Cohort::new(participants)?, report))
}

fn parse_flag(rec: &Record, key: &str) -> Result<bool> {
    let raw = rec.get(key).unwrap_or("");
    match raw.to_ascii_lowercase().as_str() {
        "yes" | "1" | "true" => Ok(true),
        "no" | "0" | "false" => Ok(false),
        _ => Err(Error::ingest(rec.row, format!("malformed {key} flag `{raw}`"))),
    }
}

/// Parse nominations against a cohort. Targets outside the cohort are dropped
/// and counted, self-nominations are dropped with a warning, repeated
/// `(from, to)` pairs are merged by OR-ing their contexts.
pub fn parse_nominations(reader: impl Read, format: Format, cohort: &Cohort) -> Result<(Vec<Nomination>, IngestReport)> {
    let (header, records) = read_records(reader, format)?;
    if format == Format::Csv || !records.is_empty() {
        for col in NOMINATION_COLUMNS {
            if !header.iter().any(|h| h == col) {
                return Err(Error::Input(format!("nominations file lacks required column `{col}`")));
            }
        }
    }
    let mut report = IngestReport {
        n_nominations_raw: records.len(),
        ..Default::default()
    };
    let mut kept: Vec<Nomination> = Vec::new();
    let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
    let mut first_row: HashMap<usize, usize> = HashMap::new();
    let mut targets: HashMap<usize, usize> = HashMap::new();

    for rec in &records {
        let from_id = rec
            .get("from")
            .ok_or_else(|| Error::ingest(rec.row, "nominator id is required"))?;
        let to_id = rec
            .get("to")
            .ok_or_else(|| Error::ingest(rec.row, "nominee id is required"))?;
        let mut contexts = Contexts::NONE;
        for layer in Layer::CONTEXTS {
            if parse_flag(rec, layer.as_str())? {
                contexts.insert(layer);
            }
        }
        let (Some(from), Some(to)) = (cohort.node(from_id).ok(), cohort.node(to_id).ok()) else {
            report.n_nominations_dropped_external += 1;
            let who = if cohort.contains(from_id) { to_id } else { from_id };
            report.warn(rec.row, format!("`{who}` is not a cohort participant; nomination dropped"));
            continue;
        };
        if from == to {
            report.n_nominations_dropped_self += 1;
            report.warn(rec.row, format!("self-nomination by `{from_id}` dropped"));
            continue;
        }
        if let Some(&i) = slot.get(&(from, to)) {
            kept[i].contexts = kept[i].contexts.union(contexts);
            report.n_duplicate_nominations += 1;
            continue;
        }
        let count = targets.entry(from).or_insert(0);
        *count += 1;
        first_row.entry(from).or_insert(rec.row);
        if *count > NOMINATION_CAP {
            return Err(Error::ingest(
                rec.row,
                format!("`{from_id}` nominates more than {NOMINATION_CAP} distinct people"),
            ));
        }
        slot.insert((from, to), kept.len());
        kept.push(Nomination { from, to, contexts });
    }
    for n in &kept {
        if n.contexts.is_empty() {
            report.n_flagless_nominations += 1;
        }
    }
    if report.n_flagless_nominations > 0 {
        report.warn(
            0,
            format!(
                "{} nomination(s) carry no context flag; they count toward the overall layer only",
                report.n_flagless_nominations
            ),
        );
    }
    report.n_nominations_kept = kept.len();
    Ok((kept, report))
}

pub fn read_cohort(path: &Path) -> Result<(Cohort, IngestReport)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    parse_cohort(std::io::BufReader::new(file), Format::from_path(path))
}

pub fn read_nominations(path: &Path, cohort: &Cohort) -> Result<(Vec<Nomination>, IngestReport)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    parse_nominations(std::io::BufReader::new(file), Format::from_path(path), cohort)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Write the cohort in the canonical column order. `parse_cohort` reads the
/// output back to an identical cohort.
pub fn write_cohort_csv(cohort: &Cohort, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COHORT_COLUMNS)?;
    for p in cohort.participants() {
        w.write_record([
            p.id.clone(),
            opt(&p.sex),
            opt(&p.age),
            opt(&p.school),
            opt(&p.study_program),
            opt(&p.bmi_category),
            opt(&p.smoking),
            opt(&p.snuff),
            opt(&p.alcohol),
            opt(&p.physical_activity),
            opt(&p.contraceptive),
            p.carriage_direct.to_string(),
            p.carriage_enrichment.to_string(),
            opt(&p.spa_type),
            opt(&p.representativeness),
            opt(&p.attendance_week),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_nominations_csv(cohort: &Cohort, nominations: &[Nomination], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(NOMINATION_COLUMNS)?;
    for n in nominations {
        let mut row = vec![cohort.get(n.from).id.clone(), cohort.get(n.to).id.clone()];
        for layer in Layer::CONTEXTS {
            row.push(if n.contexts.includes(layer) { "yes" } else { "no" }.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
