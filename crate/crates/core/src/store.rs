//! Session files and CSV interchange.
//!
//! A session file is UTF-8 JSONL: one metadata line
//! (`{"schema":1,"session_id":..,"created_at":..,"plan":{..},"features":{..}}`)
//! followed by one [`ProbeSample`] per line.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::intercept_model::PathFeatures;
use crate::probe::ProbePlan;
use crate::sample::{ProbeMethod, ProbeSample};
use crate::sim::SimPath;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported session schema {found:?} (this build reads schema {SCHEMA_VERSION})")]
    SchemaMismatch { found: Option<Value> },
    #[error("line {line}: {reason}")]
    CorruptLine { line: usize, reason: String },
    #[error("samples are not ordered by seq (seq {seq} at position {index})")]
    UnorderedSamples { index: usize, seq: u64 },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("file has no data rows")]
    EmptyFile,
    #[error("row {line}: {reason}")]
    InvalidRow { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, StoreError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Plan of a simulated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub path: SimPath,
    pub sizes_payload_bytes: Vec<u32>,
    pub sizes_wire_bits: Vec<u64>,
    pub count_per_size: usize,
    pub gap_us: u64,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionPlan {
    Probe(ProbePlan),
    Simulated(SimulationPlan),
    Imported { source: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session_id: String,
    /// UTC, ISO 8601.
    pub created_at: String,
    pub plan: SessionPlan,
    pub samples: Vec<ProbeSample>,
    pub features: Option<PathFeatures>,
    /// Metadata fields this build does not know about, kept verbatim.
    pub extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: u64,
    session_id: String,
    created_at: String,
    plan: SessionPlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<PathFeatures>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

/// Current UTC time as an ISO 8601 string with second resolution.
pub fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Writes the session to a sibling temp file, syncs it, then renames it into place.
pub fn save_session(record: &SessionRecord, path: &Path) -> Result<()> {
    if let Some((index, s)) = record
        .samples
        .windows(2)
        .enumerate()
        .find(|(_, w)| w[1].seq < w[0].seq)
        .map(|(i, w)| (i + 1, &w[1]))
    {
        return Err(StoreError::UnorderedSamples { index, seq: s.seq });
    }

    let header = Header {
        schema: SCHEMA_VERSION,
        session_id: record.session_id.clone(),
        created_at: record.created_at.clone(),
        plan: record.plan.clone(),
        features: record.features.clone(),
        extra: record.extra.clone(),
    };

    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    let write = || -> std::io::Result<()> {
        let file = OpenOptions::new().write(true).create(true).truncate(true).open(&tmp)?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for s in &record.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        let file = w.into_inner().map_err(|e| e.into_error())?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            // Persist the rename; not all platforms allow opening a directory.
            if let Ok(d) = File::open(dir) {
                let _ = d.sync_all();
            }
        }
        Ok(())
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        StoreError::Io {
            path: path.to_path_buf(),
            source: e,
        }
    })
}

pub fn load_session(path: &Path) -> Result<SessionRecord> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_session(BufReader::new(file), path)
}

fn parse_session<R: BufRead>(reader: R, path: &Path) -> Result<SessionRecord> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or(StoreError::CorruptLine {
        line: 1,
        reason: "empty file".into(),
    })?;
    let first = first.map_err(io_err(path))?;
    let raw: Value = serde_json::from_str(&first).map_err(|e| StoreError::CorruptLine {
        line: 1,
        reason: e.to_string(),
    })?;
    match raw.get("schema") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        other => return Err(StoreError::SchemaMismatch { found: other.cloned() }),
    }
    let header: Header = serde_json::from_value(raw).map_err(|e| StoreError::CorruptLine {
        line: 1,
        reason: e.to_string(),
    })?;

    let mut samples = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: ProbeSample = serde_json::from_str(&line).map_err(|e| StoreError::CorruptLine {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if !sample.is_consistent() {
            return Err(StoreError::CorruptLine {
                line: i + 1,
                reason: "inconsistent sample".into(),
            });
        }
        samples.push(sample);
    }

    Ok(SessionRecord {
        session_id: header.session_id,
        created_at: header.created_at,
        plan: header.plan,
        samples,
        features: header.features,
        extra: header.extra,
    })
}

/// Canonical CSV columns written by [`export_csv`].
pub const CANONICAL_COLUMNS: [&str; 6] = ["seq", "payload_bytes", "wire_bits", "sent_at_us", "rtt_s", "lost"];

pub fn export_csv<W: Write>(samples: &[ProbeSample], out: W) -> Result<()> {
    let to_err = |e: csv::Error| StoreError::Io {
        path: PathBuf::from("<csv>"),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CANONICAL_COLUMNS).map_err(to_err)?;
    for s in samples {
        w.write_record([
            s.seq.to_string(),
            s.payload_bytes.to_string(),
            s.wire_bits.to_string(),
            s.sent_at_us.to_string(),
            s.rtt_s.map(|d| d.to_string()).unwrap_or_default(),
            s.lost.to_string(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| StoreError::Io {
        path: PathBuf::from("<csv>"),
        source: e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeUnit {
    Bytes,
    Bits,
}

impl std::str::FromStr for SizeUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bytes" | "B" => Ok(SizeUnit::Bytes),
            "bits" | "b" => Ok(SizeUnit::Bits),
            other => Err(format!("unknown size unit `{other}` (bytes|bits)")),
        }
    }
}

/// Which CSV columns carry which sample fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvMapping {
    pub size_column: String,
    pub size_unit: SizeUnit,
    pub delay_column: String,
    pub timestamp_column: Option<String>,
    pub lost_column: Option<String>,
    pub seq_column: Option<String>,
    /// Payload size in bytes, when the size column holds wire sizes.
    pub payload_column: Option<String>,
    pub path_id: String,
}

impl CsvMapping {
    /// Mapping for files written by [`export_csv`].
    pub fn canonical(path_id: impl Into<String>) -> Self {
        CsvMapping {
            size_column: "wire_bits".into(),
            size_unit: SizeUnit::Bits,
            delay_column: "rtt_s".into(),
            timestamp_column: Some("sent_at_us".into()),
            lost_column: Some("lost".into()),
            seq_column: Some("seq".into()),
            payload_column: Some("payload_bytes".into()),
            path_id: path_id.into(),
        }
    }

    pub fn simple(path_id: impl Into<String>, size_column: &str, size_unit: SizeUnit, delay_column: &str) -> Self {
        CsvMapping {
            size_column: size_column.into(),
            size_unit,
            delay_column: delay_column.into(),
            timestamp_column: None,
            lost_column: None,
            seq_column: None,
            payload_column: None,
            path_id: path_id.into(),
        }
    }

    /// Picks the canonical mapping, or `size_bytes`/`size_bits` + `delay_s`,
    /// depending on which headers are present.
    pub fn detect(headers: &[String], path_id: &str) -> Option<Self> {
        let has = |c: &str| headers.iter().any(|h| h == c);
        if has("wire_bits") && has("rtt_s") {
            let mut m = CsvMapping::canonical(path_id);
            m.timestamp_column = m.timestamp_column.filter(|c| has(c));
            m.lost_column = m.lost_column.filter(|c| has(c));
            m.seq_column = m.seq_column.filter(|c| has(c));
            m.payload_column = m.payload_column.filter(|c| has(c));
            return Some(m);
        }
        let delay = ["delay_s", "rtt_s"].into_iter().find(|c| has(c))?;
        let mut m = if has("size_bytes") {
            CsvMapping::simple(path_id, "size_bytes", SizeUnit::Bytes, delay)
        } else if has("size_bits") {
            CsvMapping::simple(path_id, "size_bits", SizeUnit::Bits, delay)
        } else {
            return None;
        };
        m.lost_column = has("lost").then(|| "lost".to_string());
        m.timestamp_column = has("sent_at_us").then(|| "sent_at_us".to_string());
        Some(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvImport {
    pub samples: Vec<ProbeSample>,
    /// Rows whose delay could not be parsed and were recorded as lost.
    pub unparseable_delays: usize,
}

/// Reads the header row of a CSV source.
pub fn csv_headers<R: Read>(input: R) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| StoreError::InvalidRow {
        line: 1,
        reason: e.to_string(),
    })?;
    Ok(headers.iter().map(|h| h.trim().to_string()).collect())
}

pub fn import_csv(path: &Path, mapping: &CsvMapping) -> Result<CsvImport> {
    let file = File::open(path).map_err(io_err(path))?;
    import_csv_from(file, mapping)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "n" => Some(false),
        "1" | "true" | "yes" | "y" => Some(true),
        _ => None,
    }
}

pub fn import_csv_from<R: Read>(input: R, mapping: &CsvMapping) -> Result<CsvImport> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| StoreError::InvalidRow {
            line: 1,
            reason: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(StoreError::EmptyFile);
    }
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| StoreError::MissingColumn(name.to_string()))
    };
    let opt_col = |name: &Option<String>| -> Result<Option<usize>> { name.as_deref().map(col).transpose() };

    let size_idx = col(&mapping.size_column)?;
    let delay_idx = col(&mapping.delay_column)?;
    let ts_idx = opt_col(&mapping.timestamp_column)?;
    let lost_idx = opt_col(&mapping.lost_column)?;
    let seq_idx = opt_col(&mapping.seq_column)?;
    let payload_idx = opt_col(&mapping.payload_column)?;

    let mut samples = Vec::new();
    let mut unparseable_delays = 0;
    for (row_no, rec) in rdr.records().enumerate() {
        let line = row_no + 2;
        let rec = rec.map_err(|e| StoreError::InvalidRow {
            line,
            reason: e.to_string(),
        })?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |reason: String| StoreError::InvalidRow { line, reason };

        let size: u64 = field(size_idx)
            .parse()
            .map_err(|_| bad(format!("size `{}` is not a non-negative integer", field(size_idx))))?;
        let wire_bits = match mapping.size_unit {
            SizeUnit::Bytes => size * 8,
            SizeUnit::Bits => size,
        };
        if wire_bits == 0 {
            return Err(bad("size must be positive".into()));
        }
        let payload_bytes = match payload_idx {
            Some(i) => field(i)
                .parse()
                .map_err(|_| bad(format!("bad payload `{}`", field(i))))?,
            None => u32::try_from(wire_bits / 8).map_err(|_| bad("size too large".into()))?,
        };
        let seq = match seq_idx {
            Some(i) => field(i).parse().map_err(|_| bad(format!("bad seq `{}`", field(i))))?,
            None => row_no as u64,
        };
        let sent_at_us = match ts_idx {
            Some(i) => parse_timestamp_us(field(i)).ok_or_else(|| bad(format!("bad timestamp `{}`", field(i))))?,
            None => 0,
        };
        let marked_lost = match lost_idx {
            Some(i) => parse_bool(field(i)).ok_or_else(|| bad(format!("bad lost flag `{}`", field(i))))?,
            None => false,
        };

        let delay = field(delay_idx)
            .parse::<f64>()
            .ok()
            .filter(|d| d.is_finite() && *d > 0.0);
        let rtt_s = match (marked_lost, delay) {
            (true, _) => None,
            (false, Some(d)) => Some(d),
            (false, None) => {
                unparseable_delays += 1;
                None
            }
        };
        samples.push(ProbeSample {
            path_id: mapping.path_id.clone(),
            seq,
            payload_bytes,
            wire_bits,
            sent_at_us,
            rtt_s,
            lost: rtt_s.is_none(),
            method: ProbeMethod::Imported,
        });
    }

    if samples.is_empty() {
        return Err(StoreError::EmptyFile);
    }
    Ok(CsvImport {
        samples,
        unparseable_delays,
    })
}

fn parse_timestamp_us(s: &str) -> Option<u64> {
    s.parse::<u64>().ok().or_else(|| {
        s.parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t >= 0.0)
            .map(|t| t.round() as u64)
    })
}

/// One row of an intercept-model observations file
/// (columns `path_id, n, l_km, a_s`).
pub fn import_observations(path: &Path) -> Result<Vec<(PathFeatures, f64)>> {
    let file = File::open(path).map_err(io_err(path))?;
    import_observations_from(file)
}

pub fn import_observations_from<R: Read>(input: R) -> Result<Vec<(PathFeatures, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| StoreError::InvalidRow {
            line: 1,
            reason: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| StoreError::MissingColumn(name.into()))
    };
    let (id_i, n_i, l_i, a_i) = (col("path_id")?, col("n")?, col("l_km")?, col("a_s")?);

    let mut out = Vec::new();
    for (row_no, rec) in rdr.records().enumerate() {
        let line = row_no + 2;
        let rec = rec.map_err(|e| StoreError::InvalidRow {
            line,
            reason: e.to_string(),
        })?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str, i: usize| StoreError::InvalidRow {
            line,
            reason: format!("bad {what} `{}`", get(i)),
        };
        let n: u32 = get(n_i).parse().map_err(|_| bad("n", n_i))?;
        let l: f64 = get(l_i).parse().map_err(|_| bad("l_km", l_i))?;
        let a: f64 = get(a_i).parse().map_err(|_| bad("a_s", a_i))?;
        let features = PathFeatures::new(get(id_i), n, l).map_err(|e| StoreError::InvalidRow {
            line,
            reason: e.to_string(),
        })?;
        out.push((features, a));
    }
    if out.is_empty() {
        return Err(StoreError::EmptyFile);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Hop;

    fn record(id: &str) -> SessionRecord {
        let path = SimPath::new(vec![Hop::link(1e6, 0.01)], 5).unwrap();
        let samples = crate::sim::run_experiment(&path, &[800, 8992], 3).unwrap();
        SessionRecord {
            session_id: id.into(),
            created_at: "2024-01-02T03:04:05Z".into(),
            plan: SessionPlan::Simulated(SimulationPlan {
                path,
                sizes_payload_bytes: vec![100, 1124],
                sizes_wire_bits: vec![800, 8992],
                count_per_size: 3,
                gap_us: 50_000,
                rng: crate::sim::RNG_ALGORITHM.into(),
            }),
            samples,
            features: Some(PathFeatures::new("x", 4, 250.0).unwrap()),
            extra: Map::new(),
        }
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        save_session(&record("one"), &a).unwrap();
        save_session(&record("two"), &b).unwrap();
        assert_eq!(load_session(&a).unwrap(), record("one"));
        assert_eq!(load_session(&b).unwrap(), record("two"));
        let text = fs::read_to_string(&a).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with(r#"{"schema":1,"session_id":"one""#));
    }

    #[test]
    fn unwritable_location() {
        let err = save_session(&record("x"), Path::new("/proc/definitely/not/here.jsonl")).unwrap_err();
        assert!(matches!(err, StoreError::Io { .. }));
    }

    #[test]
    fn truncated_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        save_session(&record("t"), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        fs::write(&p, &text[..text.len() - 10]).unwrap();
        match load_session(&p) {
            Err(StoreError::CorruptLine { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn future_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        save_session(&record("t"), &p).unwrap();
        let text = fs::read_to_string(&p)
            .unwrap()
            .replacen(r#""schema":1"#, r#""schema":2"#, 1);
        fs::write(&p, text).unwrap();
        assert!(matches!(load_session(&p), Err(StoreError::SchemaMismatch { .. })));
    }

    #[test]
    fn unknown_header_fields_survive() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let mut r = record("t");
        r.extra.insert("operator".into(), Value::String("samara".into()));
        r.extra.insert("tags".into(), serde_json::json!([1, 2]));
        save_session(&r, &p).unwrap();
        assert_eq!(load_session(&p).unwrap().extra, r.extra);
    }

    #[test]
    fn unordered_samples_rejected() {
        let mut r = record("t");
        r.samples.swap(0, 1);
        assert!(matches!(
            save_session(&r, Path::new("/tmp/unused.jsonl")),
            Err(StoreError::UnorderedSamples { index: 1, .. })
        ));
    }

    #[test]
    fn adsl_csv_in_bytes() {
        let csv = "size_bytes,delay_s\n100,0.018\n1124,0.042\n";
        let imp = import_csv_from(
            csv.as_bytes(),
            &CsvMapping::simple("adsl", "size_bytes", SizeUnit::Bytes, "delay_s"),
        )
        .unwrap();
        assert_eq!(imp.samples.len(), 2);
        assert_eq!(imp.samples[0].wire_bits, 800);
        assert_eq!(imp.samples[1].wire_bits, 8992);
        let prof = crate::estimator::min_delay_profile(&imp.samples, 1).unwrap();
        let e = crate::estimator::estimate_pairwise(prof.points()[0], prof.points()[1]).unwrap();
        assert!((e.b_av_bps - 341_333.333).abs() < 1e-2);
    }

    #[test]
    fn missing_delay_column() {
        let csv = "size_bytes,latency\n100,0.018\n";
        let m = CsvMapping::simple("x", "size_bytes", SizeUnit::Bytes, "delay_s");
        assert!(matches!(import_csv_from(csv.as_bytes(), &m), Err(StoreError::MissingColumn(c)) if c == "delay_s"));
    }

    #[test]
    fn unparseable_delay_counts_as_lost() {
        let csv = "size_bytes,delay_s\n100,0.018\n100,n/a\n1124,0.042\n";
        let m = CsvMapping::simple("x", "size_bytes", SizeUnit::Bytes, "delay_s");
        let imp = import_csv_from(csv.as_bytes(), &m).unwrap();
        assert_eq!(imp.unparseable_delays, 1);
        assert!(imp.samples[1].lost && imp.samples[1].rtt_s.is_none());
        assert!(!imp.samples[0].lost && !imp.samples[2].lost);
    }

    #[test]
    fn header_only_is_empty() {
        let m = CsvMapping::simple("x", "size_bytes", SizeUnit::Bytes, "delay_s");
        assert!(matches!(
            import_csv_from("size_bytes,delay_s\n".as_bytes(), &m),
            Err(StoreError::EmptyFile)
        ));
        assert!(matches!(import_csv_from("".as_bytes(), &m), Err(StoreError::EmptyFile)));
    }

    #[test]
    fn export_then_import() {
        let r = record("t");
        let mut buf = Vec::new();
        export_csv(&r.samples, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("seq,payload_bytes,wire_bits,sent_at_us,rtt_s,lost\n"));
        let headers = csv_headers(buf.as_slice()).unwrap();
        let m = CsvMapping::detect(&headers, &r.samples[0].path_id).unwrap();
        assert_eq!(m, CsvMapping::canonical(r.samples[0].path_id.clone()));
        let back = import_csv_from(buf.as_slice(), &m).unwrap();
        for (a, b) in r.samples.iter().zip(&back.samples) {
            assert_eq!(
                (a.seq, a.payload_bytes, a.wire_bits, a.sent_at_us, a.rtt_s, a.lost),
                (b.seq, b.payload_bytes, b.wire_bits, b.sent_at_us, b.rtt_s, b.lost)
            );
        }
    }

    #[test]
    fn observations_csv() {
        let csv = "path_id,n,l_km,a_s\nmsk-sam,9,1050,0.0071\nmsk-zrh,14,2200,0.0152\n";
        let obs = import_observations_from(csv.as_bytes()).unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[1].0.hop_count_n, 14);
        assert!(matches!(
            import_observations_from("path_id,n,a_s\nx,1,0.1\n".as_bytes()),
            Err(StoreError::MissingColumn(c)) if c == "l_km"
        ));
    }
}
